use serde::{Deserialize, Serialize};

use crate::conefield::{ConeKind, ConeSpec};
use crate::dynkernel::SystemSpec;
use crate::error::{invalid, Error, Result};
use crate::geom::{Point2, Vec2};

/// Initial curve, parametrised by its own arc-length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Seed {
    Segment {
        start: Point2,
        direction: Vec2,
        length: f64,
    },
    Arc {
        center: Point2,
        radius: f64,
        start_angle: f64,
        length: f64,
    },
}

impl Seed {
    pub fn segment(start: Point2, direction: Vec2, length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) || direction.norm() == 0.0 {
            return Err(invalid("segment needs positive length and a nonzero direction"));
        }
        Ok(Seed::Segment {
            start,
            direction: direction.normalized(),
            length,
        })
    }

    pub fn arc(center: Point2, radius: f64, start_angle: f64, length: f64) -> Result<Self> {
        if !(radius > 0.0 && length > 0.0 && length.is_finite()) {
            return Err(invalid("arc needs positive radius and length"));
        }
        Ok(Seed::Arc {
            center,
            radius,
            start_angle,
            length,
        })
    }

    pub fn length(&self) -> f64 {
        match *self {
            Seed::Segment { length, .. } | Seed::Arc { length, .. } => length,
        }
    }

    pub fn point(&self, s: f64) -> Point2 {
        match *self {
            Seed::Segment {
                start, direction, ..
            } => start + s * direction,
            Seed::Arc {
                center,
                radius,
                start_angle,
                ..
            } => {
                let t = start_angle + s / radius;
                Point2::new(center.x + radius * t.cos(), center.y + radius * t.sin())
            }
        }
    }

    pub fn tangent(&self, s: f64) -> Vec2 {
        match *self {
            Seed::Segment { direction, .. } => direction,
            Seed::Arc {
                radius,
                start_angle,
                ..
            } => {
                let t = start_angle + s / radius;
                Vec2::new(-t.sin(), t.cos())
            }
        }
    }
}

/// State of one traced point after some number of steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TracePoint {
    pub point: Point2,
    pub tangent: Vec2,
    pub logjac: f64,
}

/// Per-step record of a traced orbit: positions before each step and the
/// log stretch of the tangent under that step.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Orbit {
    pub points: Vec<Point2>,
    pub stretches: Vec<f64>,
}

fn step(system: &SystemSpec, st: TracePoint, shift: Vec2) -> Result<TracePoint> {
    let df = system.jacobian(st.point)?;
    let w = df.apply(st.tangent);
    let stretch = w.norm();
    let image = system.lift_forward(st.point)?;
    Ok(TracePoint {
        point: Point2::new(image.x - shift.x, image.y - shift.y),
        tangent: (1.0 / stretch) * w,
        logjac: st.logjac + stretch.ln(),
    })
}

/// A polyline approximation of `f^k(seed)` on the universal cover.
///
/// Each vertex carries the seed parameter it came from, its exact image
/// point and the image of the seed tangent under `Df^k`. New vertices are
/// always traced from the seed with the same operations as the old ones, so
/// refinement never perturbs existing data.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveDisk {
    seed: Seed,
    shifts: Vec<Vec2>,
    params: Vec<f64>,
    vertices: Vec<Point2>,
    tangents: Vec<Vec2>,
    cum_arclength: Vec<f64>,
    cum_logjac: Vec<f64>,
    resolution: f64,
}

impl CurveDisk {
    pub fn from_seed(seed: Seed, resolution: f64) -> Result<Self> {
        Self::over(seed, 0.0, seed.length(), resolution, &[])
    }

    /// The seed restricted to parameters `[lo, hi]`, sampled with spacing at
    /// most `resolution` and with `extra` parameters inserted as vertices.
    pub fn over(seed: Seed, lo: f64, hi: f64, resolution: f64, extra: &[f64]) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(invalid(format!("resolution must be positive, got {resolution}")));
        }
        if !(lo < hi && lo >= 0.0 && hi <= seed.length()) {
            return Err(invalid(format!(
                "window [{lo}, {hi}] outside seed of length {}",
                seed.length()
            )));
        }
        let segments = ((hi - lo) / resolution).ceil().max(1.0) as usize;
        let mut params: Vec<f64> = (0..=segments)
            .map(|i| lo + (hi - lo) * i as f64 / segments as f64)
            .collect();
        params[segments] = hi;
        params.extend(extra.iter().copied().filter(|s| (lo..=hi).contains(s)));
        params.sort_by(f64::total_cmp);
        params.dedup();
        let states: Vec<TracePoint> = params
            .iter()
            .map(|&s| TracePoint {
                point: seed.point(s),
                tangent: seed.tangent(s),
                logjac: 0.0,
            })
            .collect();
        Ok(Self::assemble(seed, Vec::new(), params, states, resolution))
    }

    fn assemble(
        seed: Seed,
        shifts: Vec<Vec2>,
        params: Vec<f64>,
        states: Vec<TracePoint>,
        resolution: f64,
    ) -> Self {
        let vertices: Vec<Point2> = states.iter().map(|s| s.point).collect();
        let mut cum = Vec::with_capacity(vertices.len());
        let mut acc = 0.0;
        for (i, v) in vertices.iter().enumerate() {
            if i > 0 {
                acc += v.dist(vertices[i - 1]);
            }
            cum.push(acc);
        }
        Self {
            seed,
            shifts,
            params,
            tangents: states.iter().map(|s| s.tangent).collect(),
            cum_logjac: states.iter().map(|s| s.logjac).collect(),
            vertices,
            cum_arclength: cum,
            resolution,
        }
    }

    pub fn seed(&self) -> &Seed {
        &self.seed
    }

    /// Number of iterates applied since the seed.
    pub fn steps(&self) -> usize {
        self.shifts.len()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn tangents(&self) -> &[Vec2] {
        &self.tangents
    }

    pub fn tangent_angles(&self) -> Vec<f64> {
        self.tangents.iter().map(|t| t.angle()).collect()
    }

    pub fn cum_arclength(&self) -> &[f64] {
        &self.cum_arclength
    }

    pub fn cum_logjac(&self) -> &[f64] {
        &self.cum_logjac
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn length(&self) -> f64 {
        *self.cum_arclength.last().unwrap_or(&0.0)
    }

    /// Longest polyline segment.
    pub fn max_segment(&self) -> f64 {
        self.cum_arclength
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Vertex index carrying exactly the seed parameter `s`.
    pub fn index_of_param(&self, s: f64) -> Option<usize> {
        self.params.binary_search_by(|p| p.total_cmp(&s)).ok()
    }

    /// Arc-length coordinate of the point with seed parameter `s`, linear
    /// between vertices.
    pub fn arclength_at_param(&self, s: f64) -> f64 {
        interpolate(&self.params, &self.cum_arclength, s)
    }

    /// Seed parameter at arc-length coordinate `a`, linear between vertices.
    pub fn param_at_arclength(&self, a: f64) -> f64 {
        interpolate(&self.cum_arclength, &self.params, a)
    }

    /// Upper bound on the arc-length error of [`Self::arclength_at_param`]:
    /// segment length times the relative change of the local stretch
    /// between neighbouring segments.
    pub fn interpolation_error(&self) -> f64 {
        let rates: Vec<(f64, f64)> = self
            .params
            .windows(2)
            .zip(self.cum_arclength.windows(2))
            .map(|(p, a)| ((a[1] - a[0]) / (p[1] - p[0]), a[1] - a[0]))
            .collect();
        rates
            .windows(2)
            .map(|w| w[0].1.max(w[1].1) * (1.0 - w[1].0 / w[0].0).abs())
            .fold(0.0, f64::max)
    }

    /// Re-traces seed parameter `s` through every step of this curve.
    #[cfg(test)]
    pub(crate) fn trace(&self, system: &SystemSpec, s: f64) -> Result<TracePoint> {
        let mut st = TracePoint {
            point: self.seed.point(s),
            tangent: self.seed.tangent(s),
            logjac: 0.0,
        };
        for &shift in &self.shifts {
            st = step(system, st, shift)?;
        }
        Ok(st)
    }

    /// Positions and per-step stretches of seed parameter `s`.
    pub(crate) fn orbit(&self, system: &SystemSpec, s: f64) -> Result<Orbit> {
        let mut st = TracePoint {
            point: self.seed.point(s),
            tangent: self.seed.tangent(s),
            logjac: 0.0,
        };
        let mut points = vec![st.point];
        let mut stretches = Vec::with_capacity(self.shifts.len());
        for &shift in &self.shifts {
            let next = step(system, st, shift)?;
            stretches.push(next.logjac - st.logjac);
            points.push(next.point);
            st = next;
        }
        Ok(Orbit { points, stretches })
    }

    /// Keeps the vertices within arc-length `radius` of vertex `center`.
    pub fn trim_to_radius(&self, center: usize, radius: f64) -> Result<CurveDisk> {
        if center >= self.len() {
            return Err(invalid("trim centre out of range"));
        }
        let c = self.cum_arclength[center];
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| (self.cum_arclength[i] - c).abs() <= radius)
            .collect();
        let states = keep
            .iter()
            .map(|&i| TracePoint {
                point: self.vertices[i],
                tangent: self.tangents[i],
                logjac: self.cum_logjac[i],
            })
            .collect();
        let params = keep.iter().map(|&i| self.params[i]).collect();
        Ok(Self::assemble(
            self.seed,
            self.shifts.clone(),
            params,
            states,
            self.resolution,
        ))
    }

    /// CSV with columns `arc_index,x,y,tangent_angle`.
    pub fn to_csv(&self) -> String {
        let rows = self.vertices.iter().zip(&self.tangents).enumerate().map(|(i, (v, t))| {
            vec![i as f64, v.x, v.y, t.angle()]
        });
        crate::io::csv_table(&["arc_index", "x", "y", "tangent_angle"], rows)
    }
}

/// Piecewise-linear interpolation of `ys` over increasing `xs`, clamped.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n == 1 || x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

/// One forward iterate with adaptive refinement: every image segment longer
/// than the resolution is split at the seed-parameter midpoint.
pub fn iterate_curve(system: &SystemSpec, curve: &CurveDisk) -> Result<CurveDisk> {
    iterate(system, curve, None)
}

/// As [`iterate_curve`], additionally checking that every image tangent
/// lies in the centre-unstable cone at its base point.
pub fn iterate_curve_in_cone(
    system: &SystemSpec,
    curve: &CurveDisk,
    cone: &ConeSpec<'_>,
) -> Result<CurveDisk> {
    iterate(system, curve, Some(cone))
}

fn iterate(system: &SystemSpec, curve: &CurveDisk, cone: Option<&ConeSpec<'_>>) -> Result<CurveDisk> {
    if curve.len() < 2 {
        return Err(invalid("curve needs at least two vertices"));
    }
    let mid = curve.len() / 2;
    let shift = if system.is_toral() {
        let q = system.lift_forward(curve.vertices[mid])?;
        Vec2::new(q.x.floor(), q.y.floor())
    } else {
        Vec2::default()
    };
    let mut shifts = curve.shifts.clone();
    shifts.push(shift);

    let advance = |i: usize| {
        step(
            system,
            TracePoint {
                point: curve.vertices[i],
                tangent: curve.tangents[i],
                logjac: curve.cum_logjac[i],
            },
            shift,
        )
    };
    let retrace = |s: f64| -> Result<TracePoint> {
        let mut st = TracePoint {
            point: curve.seed.point(s),
            tangent: curve.seed.tangent(s),
            logjac: 0.0,
        };
        for &m in &shifts {
            st = step(system, st, m)?;
        }
        Ok(st)
    };

    let h = curve.resolution;
    let mut params = vec![curve.params[0]];
    let mut states = vec![advance(0)?];
    for i in 1..curve.len() {
        let right = (curve.params[i], advance(i)?);
        // depth-first split of the image segment ending at `right`
        let mut pending = vec![right];
        while let Some((s, st)) = pending.pop() {
            let (s0, st0) = (*params.last().unwrap(), *states.last().unwrap());
            if st0.point.dist(st.point) <= h {
                params.push(s);
                states.push(st);
                continue;
            }
            let sm = 0.5 * (s0 + s);
            if sm <= s0 || sm >= s {
                return Err(invalid("refinement stalled at parameter resolution"));
            }
            pending.push((s, st));
            pending.push((sm, retrace(sm)?));
        }
    }

    let out = CurveDisk::assemble(curve.seed, shifts, params, states, h);
    if let Some(cone) = cone {
        for (i, (v, t)) in out.vertices.iter().zip(&out.tangents).enumerate() {
            let base = if system.is_toral() { v.wrap() } else { *v };
            let (ok, ratio) = cone.ratio(*t, base, ConeKind::Cu)?;
            if !ok {
                return Err(Error::ConeViolation {
                    vertex: i,
                    ratio,
                    width: cone.a,
                });
            }
        }
    }
    Ok(out)
}

/// `n` successive iterates, returning `[curve, f(curve), ..., f^n(curve)]`.
pub fn iterate_history(system: &SystemSpec, curve: &CurveDisk, n: usize) -> Result<Vec<CurveDisk>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(curve.clone());
    for _ in 0..n {
        let next = iterate_curve(system, out.last().unwrap())?;
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynkernel::{cat_lambda_u, ConstantSplitting};

    fn unstable_segment(len: f64) -> Seed {
        let e_u = ConstantSplitting::cat().0.e_cu;
        Seed::segment(Point2::new(0.2, 0.3), e_u, len).unwrap()
    }

    #[test]
    fn seed_geometry() {
        let arc = Seed::arc(Point2::new(0.0, 0.0), 2.0, 0.0, 1.0).unwrap();
        let p = arc.point(1.0);
        assert!((p.x - 2.0 * 0.5f64.cos()).abs() < 1e-15);
        assert!((arc.tangent(0.0).y - 1.0).abs() < 1e-15);
        assert!(Seed::segment(Point2::default(), Vec2::new(0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn construction_respects_resolution() {
        let c = CurveDisk::from_seed(unstable_segment(1.0), 1e-2).unwrap();
        assert_eq!(c.len(), 101);
        assert!(c.max_segment() <= 1e-2 + 1e-15);
        assert!((c.length() - 1.0).abs() < 1e-12);
        assert!(c.cum_arclength().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn cat_stretches_unstable_segment() {
        let c = CurveDisk::from_seed(unstable_segment(0.1), 1e-3).unwrap();
        let img = iterate_curve(&SystemSpec::CatMap, &c).unwrap();
        assert!((img.length() - 0.1 * cat_lambda_u()).abs() < 1e-12);
        assert!(img.max_segment() <= 1e-3);
        // still straight
        let t0 = img.tangents()[0];
        assert!(img.tangents().iter().all(|t| t.line_angle(t0) < 1e-14));
        for lj in img.cum_logjac() {
            assert!((lj - cat_lambda_u().ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn horseshoe_triples_horizontal_segments() {
        let h = SystemSpec::horseshoe(3.0, 0.25).unwrap();
        let seed = Seed::segment(Point2::new(0.05, 0.5), Vec2::new(1.0, 0.0), 0.2).unwrap();
        let c = CurveDisk::from_seed(seed, 1e-2).unwrap();
        let img = iterate_curve(&h, &c).unwrap();
        assert!((img.length() - 0.6).abs() < 1e-14);
        assert!(img.vertices().iter().all(|v| v.y == 0.125));
        let out = Seed::segment(Point2::new(0.2, 0.5), Vec2::new(1.0, 0.0), 0.3).unwrap();
        let c = CurveDisk::from_seed(out, 1e-2).unwrap();
        assert!(matches!(iterate_curve(&h, &c), Err(Error::DomainEscape(_))));
    }

    #[test]
    fn refinement_matches_direct_trace_bitwise() {
        let s = SystemSpec::perturbed_cat(0.05).unwrap();
        let c = CurveDisk::from_seed(unstable_segment(0.05), 5e-3).unwrap();
        let hist = iterate_history(&s, &c, 4).unwrap();
        let last = hist.last().unwrap();
        assert!(last.len() > c.len());
        for (i, &p) in last.params().iter().enumerate() {
            let st = last.trace(&s, p).unwrap();
            assert_eq!(st.point, last.vertices()[i]);
            assert_eq!(st.logjac, last.cum_logjac()[i]);
        }
        // earlier vertices survive unchanged
        for (i, &p) in hist[2].params().iter().enumerate() {
            let j = hist[3].index_of_param(p).unwrap();
            let st = hist[3].trace(&s, p).unwrap();
            assert_eq!(st.point, hist[3].vertices()[j]);
            let _ = i;
        }
    }

    #[test]
    fn backward_iteration_recovers_vertices() {
        let s = SystemSpec::perturbed_cat(0.01).unwrap();
        let c = CurveDisk::from_seed(unstable_segment(0.02), 1e-3).unwrap();
        let img = iterate_curve(&s, &c).unwrap();
        for (i, &p) in img.params().iter().enumerate() {
            let back = s.backward(img.vertices()[i].wrap()).unwrap();
            let orig = c.seed().point(p).wrap();
            assert!(back.torus_dist(orig) < 1e-10);
        }
    }

    #[test]
    fn interpolation_helpers() {
        let c = CurveDisk::from_seed(unstable_segment(1.0), 0.25).unwrap();
        assert!((c.arclength_at_param(0.3) - 0.3).abs() < 1e-15);
        assert!((c.param_at_arclength(0.7) - 0.7).abs() < 1e-15);
        assert!(c.interpolation_error() < 1e-15);
        let t = c.trim_to_radius(2, 0.3).unwrap();
        assert_eq!(t.params(), &[0.25, 0.5, 0.75]);
        let csv = c.to_csv();
        assert!(csv.starts_with("arc_index,x,y,tangent_angle\n"));
        assert_eq!(csv.lines().count(), 6);
    }
}
