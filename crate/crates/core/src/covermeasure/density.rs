use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cantor::FatCantorSet;
use super::intervals::IntervalList;
use super::vitali::{union_of, vitali_select, CoverWindow};
use crate::diskflow::{c2_bound, distortion_ratio, find_preball_final, CurveDisk};
use crate::dynkernel::SystemSpec;
use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::geom::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityConfig {
    pub sigma: f64,
    pub delta1: f64,
    pub epsilons: Vec<f64>,
    /// Number of pre-ball centres sampled from the set.
    pub centers: usize,
    pub max_time: usize,
    pub seed: u64,
    /// Hölder constant and exponent of the log-Jacobian, for `C2`.
    pub holder_l: f64,
    pub zeta: f64,
    pub exec: Exec,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            sigma: 0.5,
            delta1: 0.05,
            epsilons: vec![0.1, 0.05, 0.01],
            centers: 200,
            max_time: 25,
            seed: 0,
            holder_l: 0.0,
            zeta: 1.0,
            exec: Exec::default(),
        }
    }
}

/// One pre-ball of the experiment with its measured densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallRecord {
    pub window: CoverWindow,
    /// `Leb(H ∩ W) / Leb(W)` on the host.
    pub host_density: f64,
    /// Relative measure of the image of `H` in the image of `W`.
    pub image_density: f64,
    pub distortion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityStep {
    pub k_n: usize,
    /// Largest image density over the selected windows.
    pub density: f64,
    pub witness: Option<BallRecord>,
    pub inputs: usize,
    pub selected: usize,
    pub gamma: f64,
    /// Smallest relative measure of the complement of `H` in a selected `W`.
    pub rho: f64,
    pub c2_bound: f64,
    /// Largest measured distortion over the selected pre-balls.
    pub distortion: f64,
    /// Disjointness and covering of the selection.
    pub selection_ok: bool,
    /// `sum Leb(W) >= gamma Leb(K)` and `Leb(A \ K) >= rho gamma Leb(K)`.
    pub chain_ok: bool,
    /// `image density >= 1 - C2 (1 - host density)` at the witness.
    pub corrected_ok: bool,
    /// Hausdorff distance between the witness image disk and that of the
    /// previous step, both translated to put the centre image at the origin.
    pub disk_drift: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonWitness {
    pub epsilon: f64,
    /// First step whose density reaches `1 - epsilon`.
    pub k_n: Option<usize>,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub centers: Vec<f64>,
    pub steps: Vec<DensityStep>,
    pub witnesses: Vec<EpsilonWitness>,
    /// Witness densities are non-decreasing in time (1e-6 slack).
    pub monotone: bool,
}

impl DensityReport {
    /// CSV with columns `k_n,density,gamma,rho,C2_bound`.
    pub fn to_csv(&self) -> String {
        crate::io::csv_table(
            &["k_n", "density", "gamma", "rho", "C2_bound"],
            self.steps
                .iter()
                .map(|s| vec![s.k_n as f64, s.density, s.gamma, s.rho, s.c2_bound]),
        )
    }

    pub fn all_invariants_hold(&self) -> bool {
        self.steps
            .iter()
            .all(|s| s.selection_ok && s.chain_ok && s.corrected_ok)
            && self.monotone
    }
}

/// Centres stratified by quantiles of the measure of `set`: the `i`-th lies
/// at a uniformly drawn point of the `i`-th of `m` equal-measure slices.
pub fn stratified_centers<R: Rng>(set: &IntervalList, m: usize, rng: &mut R) -> Vec<f64> {
    let total = set.measure();
    let mut cum = Vec::with_capacity(set.len());
    let mut acc = 0.0;
    for &(a, b) in set.intervals() {
        acc += b - a;
        cum.push(acc);
    }
    (0..m)
        .map(|i| {
            let q = total * (i as f64 + rng.gen::<f64>()) / m as f64;
            let k = cum.partition_point(|&c| c <= q).min(cum.len() - 1);
            let (a, b) = set.intervals()[k];
            let before = cum[k] - (b - a);
            (a + (q - before)).clamp(a, b)
        })
        .collect()
}

/// A pre-ball record with its image disk, as offsets from the centre image.
type Witness = (BallRecord, Vec<Vec2>);

/// Pushes `set` forward along pre-balls built at hyperbolic times and tracks
/// the best relative density of its image in the `delta1 / 4` image disks.
///
/// At step `T` each centre contributes its pre-ball of largest admissible
/// time `<= T`; the windows are reduced by [`vitali_select`] and every
/// invariant of the selection is recorded.
pub fn density_experiment(
    system: &SystemSpec,
    host: &CurveDisk,
    set: &FatCantorSet,
    cfg: &DensityConfig,
) -> Result<DensityReport> {
    if cfg.centers == 0 || cfg.max_time == 0 {
        return Err(invalid("need at least one centre and one time"));
    }
    let (lo, hi) = (host.params()[0], host.params()[host.len() - 1]);
    if set.host.0 < lo || set.host.1 > hi {
        return Err(invalid("set must lie on the host curve"));
    }
    let mut rng = crate::rng::stream(cfg.seed, 0);
    let centers = stratified_centers(&set.kept, cfg.centers, &mut rng);
    let host = CurveDisk::over(*host.seed(), lo, hi, host.resolution(), &centers)?;
    let h_set = &set.kept;

    let records: Vec<Vec<Option<Witness>>> = cfg.exec.map(&centers, |&c| {
        let idx = host.index_of_param(c).expect("centres are host vertices");
        (1..=cfg.max_time)
            .map(|t| {
                let ball = find_preball_final(system, &host, idx, t, cfg.sigma, cfg.delta1).ok()?;
                let img = ball.final_curve();
                let (w0, w1) = ball.w;
                let inside = h_set.clip(w0, w1);
                let image_w = img.arclength_at_param(w1) - img.arclength_at_param(w0);
                let image_h = inside.map_increasing(|s| img.arclength_at_param(s)).measure();
                let record = BallRecord {
                    window: ball.cover_window(),
                    host_density: inside.measure() / (w1 - w0),
                    image_density: (image_h / image_w).clamp(0.0, 1.0),
                    distortion: distortion_ratio(&ball),
                };
                Some((record, image_disk(img, ball.center_param, ball.w)))
            })
            .collect()
    });
    if records.iter().flatten().all(Option::is_none) {
        return Err(Error::NoHyperbolicTimes(cfg.max_time));
    }

    let c2 = c2_bound(cfg.holder_l, cfg.delta1, cfg.sigma, cfg.zeta);
    let mut steps = Vec::new();
    let mut last_disk: Option<&[Vec2]> = None;
    for t in 1..=cfg.max_time {
        let latest: Vec<&(BallRecord, Vec<Vec2>)> = records
            .iter()
            .filter_map(|r| r[..t].iter().rev().find_map(Option::as_ref))
            .collect();
        let inputs: Vec<BallRecord> = latest.iter().map(|r| r.0).collect();
        if inputs.is_empty() {
            continue;
        }
        let windows: Vec<CoverWindow> = inputs.iter().map(|r| r.window).collect();
        let sel = vitali_select(&windows, 1e-9)?;
        let chosen: Vec<&BallRecord> = sel.selected.iter().map(|&i| &inputs[i]).collect();
        let best = sel
            .selected
            .iter()
            .copied()
            .max_by(|&a, &b| inputs[a].image_density.total_cmp(&inputs[b].image_density));
        let witness = best.map(|i| inputs[i]);
        let disk = best.map(|i| latest[i].1.as_slice());
        let disk_drift = match (last_disk, disk) {
            (Some(a), Some(b)) => Some(hausdorff(a, b)),
            _ => None,
        };
        if disk.is_some() {
            last_disk = disk;
        }
        let density = witness.map_or(0.0, |w| w.image_density);

        let k = h_set.intersect(&union_of(windows.iter().map(|w| w.w)));
        let a = sel.union_v(&windows);
        let leb_k = k.measure();
        let a_minus_k = a.measure() - a.intersect(&k).measure();
        let sum_w: f64 = chosen.iter().map(|r| r.window.w.1 - r.window.w.0).sum();
        let rho = chosen
            .iter()
            .map(|r| 1.0 - r.host_density)
            .fold(f64::INFINITY, f64::min)
            .max(0.0);
        let slack = 1e-12 * (1.0 + leb_k);
        let chain_ok = sum_w + slack >= sel.gamma * leb_k && a_minus_k + slack >= rho * sel.gamma * leb_k;
        let corrected_ok = witness
            .is_none_or(|w| w.image_density + 1e-12 >= 1.0 - c2 * (1.0 - w.host_density));
        steps.push(DensityStep {
            k_n: t,
            density,
            witness,
            inputs: inputs.len(),
            selected: sel.selected.len(),
            gamma: sel.gamma,
            rho,
            c2_bound: c2,
            distortion: chosen.iter().map(|r| r.distortion).fold(1.0, f64::max),
            selection_ok: sel.disjoint && sel.covers_all(),
            chain_ok,
            corrected_ok,
            disk_drift,
        });
    }

    let witnesses: Vec<EpsilonWitness> = cfg
        .epsilons
        .iter()
        .map(|&eps| {
            let hit = steps.iter().find(|s| s.density >= 1.0 - eps);
            EpsilonWitness {
                epsilon: eps,
                k_n: hit.map(|s| s.k_n),
                density: hit.map_or(f64::NAN, |s| s.density),
            }
        })
        .collect();
    let mut recorded: Vec<(usize, f64)> = witnesses
        .iter()
        .filter_map(|w| w.k_n.map(|k| (k, w.density)))
        .collect();
    recorded.sort_by_key(|r| r.0);
    let monotone = recorded.windows(2).all(|p| p[1].1 >= p[0].1 - 1e-6);

    Ok(DensityReport {
        centers,
        steps,
        witnesses,
        monotone,
    })
}

/// Image of the `w` window as offsets from the image of the centre.
fn image_disk(img: &CurveDisk, center: f64, w: (f64, f64)) -> Vec<Vec2> {
    let at = |s: f64| img.index_of_param(s).expect("window ends are vertices");
    let (c, a, b) = (at(center), at(w.0), at(w.1));
    let origin = img.vertices()[c];
    img.vertices()[a..=b].iter().map(|&p| p - origin).collect()
}

fn point_to_polyline(p: Vec2, line: &[Vec2]) -> f64 {
    if line.len() == 1 {
        return (p - line[0]).norm();
    }
    line.windows(2)
        .map(|s| {
            let d = s[1] - s[0];
            let len2 = d.dot(d);
            let t = if len2 > 0.0 { ((p - s[0]).dot(d) / len2).clamp(0.0, 1.0) } else { 0.0 };
            (p - (s[0] + t * d)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Symmetric Hausdorff distance between two polylines.
pub fn hausdorff(a: &[Vec2], b: &[Vec2]) -> f64 {
    let one_way = |x: &[Vec2], y: &[Vec2]| {
        x.iter().map(|&p| point_to_polyline(p, y)).fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}
