use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Mat2, Point2, Vec2};

use super::system::SystemSpec;

/// Minimal admissible angle between the two directions, in radians.
pub const DEFAULT_ANGLE_EPS: f64 = 1e-6;

/// Centre-stable / centre-unstable unit directions at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Splitting {
    pub e_cs: Vec2,
    pub e_cu: Vec2,
    /// Angle change under one more refinement step (0 for exact fields).
    pub residual: f64,
}

impl Splitting {
    pub fn new(e_cs: Vec2, e_cu: Vec2, residual: f64) -> Self {
        Self {
            e_cs: e_cs.normalized().canonical(),
            e_cu: e_cu.normalized().canonical(),
            residual,
        }
    }

    pub fn angle(&self) -> f64 {
        self.e_cs.line_angle(self.e_cu)
    }

    /// Coordinates `(alpha, beta)` with `v = alpha e_cs + beta e_cu`.
    pub fn decompose(&self, v: Vec2) -> (f64, f64) {
        let det = self.e_cs.cross(self.e_cu);
        let alpha = v.cross(self.e_cu) / det;
        let beta = self.e_cs.cross(v) / det;
        (alpha, beta)
    }
}

/// Anything that can report a splitting at a point. This plays the role of
/// the continuous extensions of the two bundles to the whole domain; they
/// need not be invariant.
pub trait SplittingField: Send + Sync {
    fn splitting_at(&self, p: Point2) -> Result<Splitting>;
}

/// The same splitting at every point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantSplitting(pub Splitting);

impl ConstantSplitting {
    /// Eigenvectors of the cat matrix: `e_cu ~ (phi, 1)`, `e_cs ~ (-1/phi, 1)`.
    pub fn cat() -> Self {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        ConstantSplitting(Splitting::new(
            Vec2::new(-1.0 / phi, 1.0),
            Vec2::new(phi, 1.0),
            0.0,
        ))
    }

    /// Coordinate axes: `e_cu = (1, 0)`, `e_cs = (0, 1)`.
    pub fn axes() -> Self {
        ConstantSplitting(Splitting::new(Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0), 0.0))
    }
}

impl SplittingField for ConstantSplitting {
    fn splitting_at(&self, _p: Point2) -> Result<Splitting> {
        Ok(self.0)
    }
}

impl SystemSpec {
    /// Closed-form invariant splitting where one exists.
    pub fn analytic_splitting(&self) -> Option<ConstantSplitting> {
        match *self {
            SystemSpec::CatMap => Some(ConstantSplitting::cat()),
            SystemSpec::PerturbedCat { epsilon: 0.0 } => Some(ConstantSplitting::cat()),
            SystemSpec::PerturbedCat { .. } => None,
            SystemSpec::AffineHorseshoe { .. } => Some(ConstantSplitting::axes()),
        }
    }
}

/// Splitting estimated by pushing the cocycle `depth` steps (see
/// [`estimate_splitting`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplitting {
    pub system: SystemSpec,
    pub depth: usize,
    pub angle_eps: f64,
}

impl PowerSplitting {
    pub fn new(system: SystemSpec, depth: usize) -> Self {
        Self {
            system,
            depth,
            angle_eps: DEFAULT_ANGLE_EPS,
        }
    }
}

impl SplittingField for PowerSplitting {
    fn splitting_at(&self, p: Point2) -> Result<Splitting> {
        estimate_splitting_with(&self.system, p, self.depth, self.angle_eps)
    }
}

/// Estimates `E^cs` and `E^cu` at `p` from the orbit segment
/// `f^{-m}(p) .. f^m(p)`.
///
/// `e_cu` is the most expanded direction of the forward cocycle
/// `Df^m(f^{-m} p)` as seen at `p` (top eigenvector of `M M^T`), `e_cs` the
/// same for the backward cocycle from `f^m(p)`. Both converge geometrically in
/// `m` under domination; for constant-derivative systems they are exact for
/// every `m >= 1`. The residual is the angle change when `m` grows by one.
pub fn estimate_splitting(system: &SystemSpec, p: Point2, m: usize) -> Result<Splitting> {
    estimate_splitting_with(system, p, m, DEFAULT_ANGLE_EPS)
}

pub fn estimate_splitting_with(
    system: &SystemSpec,
    p: Point2,
    m: usize,
    angle_eps: f64,
) -> Result<Splitting> {
    if m == 0 {
        return Err(crate::error::invalid("splitting depth must be positive"));
    }
    // forward cocycle ending at p
    let mut q = p;
    let mut fwd = Mat2::IDENTITY;
    let mut cu = [Vec2::default(); 2];
    for k in 1..=m + 1 {
        q = system.backward(q)?;
        fwd = fwd * system.jacobian(q)?;
        fwd = fwd.scale(1.0 / fwd.max_abs());
        if k >= m {
            cu[k - m] = (fwd * fwd.transpose()).top_symmetric_eigvec();
        }
    }
    // backward cocycle ending at p
    let mut q = p;
    let mut bwd = Mat2::IDENTITY;
    let mut cs = [Vec2::default(); 2];
    for k in 1..=m + 1 {
        bwd = bwd * system.inverse_jacobian_at_image(q)?;
        bwd = bwd.scale(1.0 / bwd.max_abs());
        q = system.forward(q)?;
        if k >= m {
            cs[k - m] = (bwd * bwd.transpose()).top_symmetric_eigvec();
        }
    }
    let residual = cu[0].line_angle(cu[1]).max(cs[0].line_angle(cs[1]));
    let s = Splitting::new(cs[0], cu[0], residual);
    let angle = s.angle();
    if angle < angle_eps {
        return Err(Error::DegenerateSplitting { point: p, angle });
    }
    Ok(s)
}

/// `|Df(p) e_cs(p)| * |Df^{-1}(f(p)) e_cu(f(p))|`.
pub fn domination_coefficient(
    system: &SystemSpec,
    p: Point2,
    field: &dyn SplittingField,
) -> Result<f64> {
    let here = field.splitting_at(p)?;
    let there = field.splitting_at(system.forward(p)?)?;
    let df = system.jacobian(p)?;
    let df_inv = system.inverse_jacobian_at_image(p)?;
    Ok(df.apply(here.e_cs).norm() * df_inv.apply(there.e_cu).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynkernel::system::{cat_lambda_s, CAT_MATRIX};

    fn cat_eigen() -> (Vec2, Vec2) {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        (
            Vec2::new(-1.0 / phi, 1.0).normalized(),
            Vec2::new(phi, 1.0).normalized(),
        )
    }

    #[test]
    fn cat_power_splitting_is_exact_at_depth_one() {
        let (es, eu) = cat_eigen();
        for p in [Point2::new(0.1, 0.7), Point2::new(0.55, 0.05)] {
            let s = estimate_splitting(&SystemSpec::CatMap, p, 1).unwrap();
            assert!(s.e_cu.line_angle(eu) < 1e-14);
            assert!(s.e_cs.line_angle(es) < 1e-14);
            assert!(s.residual < 1e-14);
        }
    }

    #[test]
    fn horseshoe_splitting_is_axes() {
        let h = SystemSpec::horseshoe(3.0, 0.25).unwrap();
        // period-two point of the trapped set
        let s = estimate_splitting(&h, Point2::new(0.25, 0.2), 1).unwrap();
        assert_eq!(s.e_cu, Vec2::new(1.0, 0.0));
        assert_eq!(s.e_cs, Vec2::new(0.0, 1.0));
    }

    #[test]
    fn perturbed_splitting_converges() {
        let s = SystemSpec::perturbed_cat(0.01).unwrap();
        let est = estimate_splitting(&s, Point2::new(0.3, 0.45), 30).unwrap();
        assert!(est.residual < 1e-8, "residual {}", est.residual);
        // doubling m moves the answer by no more than the residual scale
        let deeper = estimate_splitting(&s, Point2::new(0.3, 0.45), 60).unwrap();
        assert!(est.e_cu.line_angle(deeper.e_cu) < 1e-8);
        assert!(est.e_cs.line_angle(deeper.e_cs) < 1e-8);
    }

    #[test]
    fn splitting_is_invariant_under_the_derivative() {
        let s = SystemSpec::perturbed_cat(0.01).unwrap();
        let field = PowerSplitting::new(s, 30);
        let p = Point2::new(0.61, 0.12);
        let here = field.splitting_at(p).unwrap();
        let there = field.splitting_at(s.forward(p).unwrap()).unwrap();
        let pushed = s.jacobian(p).unwrap().apply(here.e_cu);
        assert!(pushed.line_angle(there.e_cu) < 1e-9);
        let pulled = s.inverse_jacobian_at_image(p).unwrap().apply(there.e_cs);
        assert!(pulled.line_angle(here.e_cs) < 1e-9);
    }

    #[test]
    fn domination_values() {
        let ls = cat_lambda_s();
        let cat = ConstantSplitting::cat();
        let d = domination_coefficient(&SystemSpec::CatMap, Point2::new(0.2, 0.9), &cat).unwrap();
        assert!((d - ls * ls).abs() < 1e-12);
        assert!((d - 0.145898).abs() < 1e-6);
        let h = SystemSpec::horseshoe(3.0, 0.25).unwrap();
        let d = domination_coefficient(&h, Point2::new(0.1, 0.5), &ConstantSplitting::axes()).unwrap();
        assert!((d - 0.25 / 3.0).abs() < 1e-15);
        let z = SystemSpec::perturbed_cat(0.0).unwrap();
        let field = z.analytic_splitting().unwrap();
        let d = domination_coefficient(&z, Point2::new(0.4, 0.3), &field).unwrap();
        assert!((d - ls * ls).abs() < 1e-12);
    }

    #[test]
    fn decomposition_recovers_coordinates() {
        let s = ConstantSplitting::cat().0;
        let v = 0.05 * s.e_cs + s.e_cu;
        let (a, b) = s.decompose(v);
        assert!((a - 0.05).abs() < 1e-15 && (b - 1.0).abs() < 1e-15);
        let _ = CAT_MATRIX;
    }
}
