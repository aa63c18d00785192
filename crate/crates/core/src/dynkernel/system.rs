use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::{Mat2, Point2};

/// Matrix of the linear cat map.
pub const CAT_MATRIX: Mat2 = Mat2::new(2.0, 1.0, 1.0, 1.0);

/// Unstable eigenvalue `(3 + sqrt 5) / 2` of the cat matrix.
pub fn cat_lambda_u() -> f64 {
    (3.0 + 5f64.sqrt()) / 2.0
}

/// Stable eigenvalue `(3 - sqrt 5) / 2 = 1 / lambda_u`.
pub fn cat_lambda_s() -> f64 {
    (3.0 - 5f64.sqrt()) / 2.0
}

/// Tolerance used when deciding whether a horseshoe point sits in a band.
const BAND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// One of the shipped invertible planar systems.
///
/// `CatMap` and `PerturbedCat` act on the flat torus `R^2 / Z^2`; the
/// horseshoe acts on the unit square and is only defined on its two bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "kebab-case")]
pub enum SystemSpec {
    #[serde(rename = "cat")]
    CatMap,
    PerturbedCat { epsilon: f64 },
    #[serde(rename = "horseshoe")]
    AffineHorseshoe { mu: f64, nu: f64 },
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemSpec::CatMap => write!(f, "cat"),
            SystemSpec::PerturbedCat { epsilon } => write!(f, "perturbed-cat(epsilon={epsilon})"),
            SystemSpec::AffineHorseshoe { mu, nu } => write!(f, "horseshoe(mu={mu}, nu={nu})"),
        }
    }
}

impl SystemSpec {
    pub fn perturbed_cat(epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(invalid(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        Ok(SystemSpec::PerturbedCat { epsilon })
    }

    pub fn horseshoe(mu: f64, nu: f64) -> Result<Self> {
        if !(mu > 2.0 && mu.is_finite()) {
            return Err(invalid(format!("mu must exceed 2, got {mu}")));
        }
        if !(nu > 0.0 && nu < 0.5) {
            return Err(invalid(format!("nu must lie in (0, 1/2), got {nu}")));
        }
        Ok(SystemSpec::AffineHorseshoe { mu, nu })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SystemSpec::CatMap => Ok(()),
            SystemSpec::PerturbedCat { epsilon } => Self::perturbed_cat(epsilon).map(|_| ()),
            SystemSpec::AffineHorseshoe { mu, nu } => Self::horseshoe(mu, nu).map(|_| ()),
        }
    }

    pub fn is_toral(&self) -> bool {
        !matches!(self, SystemSpec::AffineHorseshoe { .. })
    }

    /// Parses the plain-text `key = value` system block
    /// (`system`, `epsilon`, `mu`, `nu`; `#` starts a comment).
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut kind = None;
        let (mut epsilon, mut mu, mut nu) = (None, None, None);
        for (key, value) in crate::io::kv_pairs(text)? {
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("`{key}` expects a real, got `{value}`")))
            };
            match key.as_str() {
                "system" => kind = Some(value.clone()),
                "epsilon" => epsilon = Some(num()?),
                "mu" => mu = Some(num()?),
                "nu" => nu = Some(num()?),
                _ => {}
            }
        }
        Self::from_parts(kind.as_deref().unwrap_or("cat"), epsilon, mu, nu)
    }

    pub fn from_parts(
        kind: &str,
        epsilon: Option<f64>,
        mu: Option<f64>,
        nu: Option<f64>,
    ) -> Result<Self> {
        match kind {
            "cat" => Ok(SystemSpec::CatMap),
            "perturbed-cat" => Self::perturbed_cat(epsilon.unwrap_or(0.01)),
            "horseshoe" => Self::horseshoe(mu.unwrap_or(3.0), nu.unwrap_or(0.25)),
            other => Err(Error::Parse(format!(
                "unknown system `{other}` (expected cat | perturbed-cat | horseshoe)"
            ))),
        }
    }

    pub fn to_kv(&self) -> String {
        match *self {
            SystemSpec::CatMap => "system = cat\n".to_string(),
            SystemSpec::PerturbedCat { epsilon } => {
                format!("system = perturbed-cat\nepsilon = {epsilon}\n")
            }
            SystemSpec::AffineHorseshoe { mu, nu } => {
                format!("system = horseshoe\nmu = {mu}\nnu = {nu}\n")
            }
        }
    }

    /// Exact evaluation of `f` or `f^{-1}`; torus points are reduced mod 1.
    pub fn eval(&self, p: Point2, dir: Direction) -> Result<Point2> {
        let q = match dir {
            Direction::Forward => self.lift_forward(p)?,
            Direction::Backward => self.lift_backward(p)?,
        };
        Ok(if self.is_toral() { q.wrap() } else { q })
    }

    pub fn forward(&self, p: Point2) -> Result<Point2> {
        self.eval(p, Direction::Forward)
    }

    pub fn backward(&self, p: Point2) -> Result<Point2> {
        self.eval(p, Direction::Backward)
    }

    /// `f` on the universal cover (no reduction) for toral systems; the
    /// horseshoe map itself otherwise.
    pub fn lift_forward(&self, p: Point2) -> Result<Point2> {
        match *self {
            SystemSpec::CatMap => Ok(CAT_MATRIX.apply_point(p)),
            SystemSpec::PerturbedCat { epsilon } => {
                let q = CAT_MATRIX.apply_point(p);
                Ok(Point2::new(q.x + epsilon * bump(p), q.y))
            }
            SystemSpec::AffineHorseshoe { mu, nu } => match horseshoe_band(p, mu) {
                Some(0) => Ok(Point2::new(mu * p.x, nu * p.y)),
                Some(_) => Ok(Point2::new(mu * p.x - (mu - 1.0), nu * p.y + (1.0 - nu))),
                None => Err(Error::DomainEscape(p)),
            },
        }
    }

    pub fn lift_backward(&self, q: Point2) -> Result<Point2> {
        match *self {
            SystemSpec::CatMap => Ok(cat_inverse().apply_point(q)),
            SystemSpec::PerturbedCat { epsilon } => perturbed_inverse(epsilon, q),
            SystemSpec::AffineHorseshoe { mu, nu } => {
                if !in_unit(q.x) {
                    return Err(Error::DomainEscape(q));
                }
                if (-BAND_SLACK..=nu + BAND_SLACK).contains(&q.y) {
                    Ok(Point2::new(q.x / mu, q.y / nu))
                } else if (1.0 - nu - BAND_SLACK..=1.0 + BAND_SLACK).contains(&q.y) {
                    Ok(Point2::new((q.x + (mu - 1.0)) / mu, (q.y - (1.0 - nu)) / nu))
                } else {
                    Err(Error::DomainEscape(q))
                }
            }
        }
    }

    /// `Df(p)` (forward) or `Df^{-1}(p)` (backward).
    pub fn deriv(&self, p: Point2, dir: Direction) -> Result<Mat2> {
        match dir {
            Direction::Forward => self.jacobian(p),
            Direction::Backward => {
                let pre = self.lift_backward(p)?;
                let m = self.jacobian(pre)?;
                m.inverse()
                    .ok_or_else(|| Error::NotInvertible(format!("{self} at {pre:?}")))
            }
        }
    }

    /// `Df(p)`, with the horseshoe domain check.
    pub fn jacobian(&self, p: Point2) -> Result<Mat2> {
        match *self {
            SystemSpec::CatMap => Ok(CAT_MATRIX),
            SystemSpec::PerturbedCat { epsilon } => {
                let (gx, gy) = bump_grad(p);
                Ok(Mat2::new(
                    CAT_MATRIX.a + epsilon * gx,
                    CAT_MATRIX.b + epsilon * gy,
                    CAT_MATRIX.c,
                    CAT_MATRIX.d,
                ))
            }
            SystemSpec::AffineHorseshoe { mu, nu } => match horseshoe_band(p, mu) {
                Some(_) => Ok(Mat2::diag(mu, nu)),
                None => Err(Error::DomainEscape(p)),
            },
        }
    }

    /// `Df^{-1}(f(p))`, computed as the inverse of `Df(p)`.
    pub fn inverse_jacobian_at_image(&self, p: Point2) -> Result<Mat2> {
        self.jacobian(p)?
            .inverse()
            .ok_or_else(|| Error::NotInvertible(format!("{self} at {p:?}")))
    }

    /// `n`-fold product of Jacobians along the forward orbit of `p`.
    pub fn orbit_jacobian(&self, p: Point2, n: usize) -> Result<Mat2> {
        let mut m = Mat2::IDENTITY;
        let mut q = p;
        for _ in 0..n {
            m = self.jacobian(q)? * m;
            q = self.forward(q)?;
        }
        Ok(m)
    }
}

fn cat_inverse() -> Mat2 {
    Mat2::new(1.0, -1.0, -1.0, 2.0)
}

fn in_unit(t: f64) -> bool {
    (-BAND_SLACK..=1.0 + BAND_SLACK).contains(&t)
}

/// Band index (0 = left, 1 = right) of a horseshoe point, if any.
pub(crate) fn horseshoe_band(p: Point2, mu: f64) -> Option<u8> {
    if !p.is_finite() || !in_unit(p.y) {
        return None;
    }
    let w = 1.0 / mu;
    if (-BAND_SLACK..=w + BAND_SLACK).contains(&p.x) {
        Some(0)
    } else if (1.0 - w - BAND_SLACK..=1.0 + BAND_SLACK).contains(&p.x) {
        Some(1)
    } else {
        None
    }
}

/// First component of the perturbation `g(x, y) = (sin 2pi x sin 2pi y, 0) / 2pi`.
fn bump(p: Point2) -> f64 {
    (2.0 * PI * p.x).sin() * (2.0 * PI * p.y).sin() / (2.0 * PI)
}

fn bump_grad(p: Point2) -> (f64, f64) {
    let (sx, cx) = (2.0 * PI * p.x).sin_cos();
    let (sy, cy) = (2.0 * PI * p.y).sin_cos();
    (cx * sy, sx * cy)
}

/// Solves `A p + eps g(p) = q` on the lift by fixed-point iteration, then
/// polishes with Newton steps. The fixed-point map contracts by at most
/// `eps * lambda_u` because `|Dg| <= 1`.
fn perturbed_inverse(epsilon: f64, q: Point2) -> Result<Point2> {
    if epsilon * cat_lambda_u() >= 0.9 {
        return Err(Error::NotInvertible(format!(
            "perturbed-cat backward evaluation needs epsilon < {:.4}, got {epsilon}",
            0.9 / cat_lambda_u()
        )));
    }
    let inv = cat_inverse();
    let mut p = inv.apply_point(q);
    for _ in 0..200 {
        let next = inv.apply_point(Point2::new(q.x - epsilon * bump(p), q.y));
        let step = (next - p).norm();
        p = next;
        if step <= 1e-15 * (1.0 + p.x.abs().max(p.y.abs())) {
            break;
        }
    }
    for _ in 0..2 {
        let fp = CAT_MATRIX.apply_point(p);
        let r = Point2::new(fp.x + epsilon * bump(p) - q.x, fp.y - q.y);
        let (gx, gy) = bump_grad(p);
        let j = Mat2::new(2.0 + epsilon * gx, 1.0 + epsilon * gy, 1.0, 1.0);
        let Some(ji) = j.inverse() else { break };
        let dx = ji.apply(crate::geom::Vec2::new(r.x, r.y));
        p = Point2::new(p.x - dx.x, p.y - dx.y);
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;

    #[test]
    fn cat_fixed_point_and_image() {
        let s = SystemSpec::CatMap;
        assert_eq!(s.forward(Point2::new(0.0, 0.0)).unwrap(), Point2::new(0.0, 0.0));
        let q = s.forward(Point2::new(0.1, 0.2)).unwrap();
        assert!((q.x - 0.4).abs() < 1e-15 && (q.y - 0.3).abs() < 1e-15);
        let p = Point2::new(0.37, 0.81);
        let back = s.backward(s.forward(p).unwrap()).unwrap();
        assert!(back.torus_dist(p) < 1e-12);
    }

    #[test]
    fn derivatives_of_linear_and_affine_models() {
        let p = Point2::new(0.3, 0.6);
        assert_eq!(SystemSpec::CatMap.deriv(p, Direction::Forward).unwrap(), CAT_MATRIX);
        let h = SystemSpec::horseshoe(3.0, 0.25).unwrap();
        let d = h.deriv(Point2::new(0.1, 0.5), Direction::Forward).unwrap();
        assert_eq!(d, Mat2::diag(3.0, 0.25));
        let z = SystemSpec::perturbed_cat(0.0).unwrap();
        assert_eq!(z.deriv(p, Direction::Forward).unwrap(), CAT_MATRIX);
        assert_eq!(z.forward(p).unwrap(), SystemSpec::CatMap.forward(p).unwrap());
    }

    #[test]
    fn deriv_times_inverse_is_identity() {
        for s in [
            SystemSpec::CatMap,
            SystemSpec::perturbed_cat(0.05).unwrap(),
            SystemSpec::horseshoe(3.0, 0.25).unwrap(),
        ] {
            let p = Point2::new(0.8, 0.4);
            let fwd = s.deriv(p, Direction::Forward).unwrap();
            let bwd = s.deriv(s.forward(p).unwrap(), Direction::Backward).unwrap();
            let id = fwd * bwd;
            for (got, want) in [(id.a, 1.0), (id.b, 0.0), (id.c, 0.0), (id.d, 1.0)] {
                assert!((got - want).abs() < 1e-12, "{s}: {id:?}");
            }
        }
    }

    #[test]
    fn horseshoe_escape_and_inverse() {
        let h = SystemSpec::horseshoe(3.0, 0.25).unwrap();
        assert!(matches!(h.forward(Point2::new(0.5, 0.5)), Err(Error::DomainEscape(_))));
        assert!(matches!(h.backward(Point2::new(0.5, 0.5)), Err(Error::DomainEscape(_))));
        let p = Point2::new(0.9, 0.3);
        let q = h.forward(p).unwrap();
        assert!((q.x - 0.7).abs() < 1e-12 && (q.y - 0.825).abs() < 1e-12);
        assert!(h.backward(q).unwrap().dist(p) < 1e-12);
    }

    #[test]
    fn perturbed_inverse_refuses_large_epsilon() {
        let s = SystemSpec::perturbed_cat(10.0).unwrap();
        assert!(s.forward(Point2::new(0.2, 0.3)).is_ok());
        assert!(matches!(s.backward(Point2::new(0.2, 0.3)), Err(Error::NotInvertible(_))));
    }

    #[test]
    fn parameter_validation() {
        assert!(SystemSpec::horseshoe(2.0, 0.25).is_err());
        assert!(SystemSpec::horseshoe(3.0, 0.5).is_err());
        assert!(SystemSpec::perturbed_cat(-0.1).is_err());
    }

    #[test]
    fn kv_block_round_trip() {
        let s = SystemSpec::from_kv("# comment\nsystem = horseshoe\nmu = 4\nnu = 0.2\n").unwrap();
        assert_eq!(s, SystemSpec::AffineHorseshoe { mu: 4.0, nu: 0.2 });
        assert_eq!(SystemSpec::from_kv(&s.to_kv()).unwrap(), s);
        let p = SystemSpec::from_kv("system = perturbed-cat\nepsilon = 0.01").unwrap();
        assert_eq!(p, SystemSpec::PerturbedCat { epsilon: 0.01 });
        assert!(SystemSpec::from_kv("system = henon").is_err());
        assert!(SystemSpec::from_kv("system = cat\nmu = abc").is_err());
    }

    #[test]
    fn cat_eigen_rates() {
        let lu = cat_lambda_u();
        let e = Vec2::new((1.0 + 5f64.sqrt()) / 2.0, 1.0).normalized();
        assert!((CAT_MATRIX.apply(e).norm() - lu).abs() < 1e-14);
        assert!((cat_lambda_s() * lu - 1.0).abs() < 1e-15);
    }
}
