//! One function per experiment. Each returns the files to write, the
//! invariants it checked and a JSON summary.

use anyhow::{bail, Context, Result};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use hyplab::conefield::{
    cone_invariance_report, fit_holder_pair_on, holder_sup, jacobian_holder_constant,
    kappa_estimate, random_domain_point, sample_cone_vectors, ConeSpec,
};
use hyplab::covermeasure::{
    build_fat_cantor, decay_to_csv, density_experiment, stratified_centers, trapped_measure_decay,
    vitali_select, CoverWindow, DensityConfig, FatCantorSet, IntervalList, RemovalSchedule,
};
use hyplab::diskflow::{
    backward_contraction_check, c2_bound, distortion_ratio, distortion_telescoping, find_preball,
    find_preball_final, iterate_curve, CurveDisk, PreBall, Seed,
};
use hyplab::dynkernel::{domination_coefficient, PowerSplitting, SplittingField, SystemSpec};
use hyplab::hyptimes::{
    contraction_series, nue_statistics, pliss_select, sigma_from_c, sigma_hyperbolic_times,
    ContractionSeries, PlissParams, TimesReport,
};
use hyplab::io::{csv_table, series_from_csv, series_to_csv};
use hyplab::rng::stream;
use hyplab::{Exec, Point2, Vec2};

use crate::settings::{ConfigError, Experiment, Settings};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<(String, String)>,
    pub checks: Vec<Check>,
    pub summary: Value,
}

impl Outcome {
    fn file(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body));
    }

    fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, pass, detail));
    }
}

/// Depth of the cocycle used to estimate splittings without a closed form.
const SPLITTING_DEPTH: usize = 30;
/// Default trapped-set grid: `3^-7`.
const MEASURE_RESOLUTION: f64 = 1.0 / 2187.0;

pub fn run(s: &Settings) -> Result<Outcome> {
    match s.experiment {
        Experiment::Orbit => orbit(s),
        Experiment::Pliss => pliss(s),
        Experiment::Hyptimes => hyptimes(s),
        Experiment::Cones => cones(s),
        Experiment::Disk => disk(s),
        Experiment::Cover => cover(s),
        Experiment::Density => density(s),
        Experiment::Measure => measure(s),
    }
}

fn field_for(system: &SystemSpec) -> Box<dyn SplittingField> {
    match system.analytic_splitting() {
        Some(f) => Box::new(f),
        None => Box::new(PowerSplitting::new(*system, SPLITTING_DEPTH)),
    }
}

fn series_at(s: &Settings, steps: usize) -> Result<ContractionSeries> {
    let field = field_for(&s.system);
    Ok(contraction_series(&s.system, s.x0, steps, field.as_ref())?)
}

/// The user's `sigma`, or `exp(-c/2)` from the measured expansion rate at `x0`.
fn sigma_for(s: &Settings) -> Result<f64> {
    if let Some(sigma) = s.sigma {
        return Ok(sigma);
    }
    let series = series_at(s, 2000)?;
    let c = nue_statistics(&series.values)?.liminf_estimate;
    if c <= 0.0 {
        bail!("no expansion measured at x0 (rate {c}); pass --sigma explicitly");
    }
    Ok(sigma_from_c(c, series.a_bound.max(c))?.sigma)
}

fn resolution_for(s: &Settings) -> f64 {
    s.resolution.unwrap_or(s.delta1 / 50.0)
}

/// The curve experiments run on: a unit segment along `E^cu(x0)` on the
/// torus, the left band's width of horizontal segment on the horseshoe.
fn host_seed(s: &Settings) -> Result<Seed> {
    Ok(match s.system {
        SystemSpec::AffineHorseshoe { mu, .. } => {
            Seed::segment(Point2::new(0.0, s.x0.y), Vec2::new(1.0, 0.0), 1.0 / mu)?
        }
        _ => {
            let e_cu = field_for(&s.system).splitting_at(s.x0)?.e_cu;
            Seed::segment(s.x0, e_cu, 1.0)?
        }
    })
}

fn orbit(s: &Settings) -> Result<Outcome> {
    let field = field_for(&s.system);
    let series = contraction_series(&s.system, s.x0, s.steps, field.as_ref())?;
    let mut points = vec![s.x0];
    for _ in 0..series.len() {
        points.push(s.system.forward(*points.last().unwrap())?);
    }
    let rows = series
        .values
        .iter()
        .enumerate()
        .map(|(i, &a)| vec![(i + 1) as f64, points[i + 1].x, points[i + 1].y, a]);
    let mut out = Outcome::default();
    out.file("orbit.csv", csv_table(&["j", "x", "y", "a_j"], rows));

    // invariance of E^cu and domination at every orbit point that has an image
    let mut worst_angle = 0.0f64;
    let mut worst_residual = 0.0f64;
    let mut worst_domination = 0.0f64;
    for p in &points[..series.len()] {
        let Ok(q) = s.system.forward(*p) else { break };
        let (here, there) = match (field.splitting_at(*p), field.splitting_at(q)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => break,
        };
        let pushed = s.system.jacobian(*p)?.apply(here.e_cu);
        worst_angle = worst_angle.max(pushed.line_angle(there.e_cu));
        worst_residual = worst_residual.max(here.residual.max(there.residual));
        worst_domination = worst_domination.max(domination_coefficient(&s.system, *p, field.as_ref())?);
    }
    let tol = worst_residual + 1e-9;
    out.check(
        "splitting invariance",
        worst_angle <= tol,
        format!("max angle between Df e_cu and e_cu at the image {worst_angle:.3e} (tolerance {tol:.3e})"),
    );
    out.check(
        "domination",
        worst_domination < 1.0,
        format!("max domination coefficient {worst_domination:.9}"),
    );
    let stats = nue_statistics(&series.values)?;
    let mean = *stats.averages.last().unwrap();
    out.summary = json!({
        "N": series.len(),
        "mean_a": mean,
        "liminf_estimate": stats.liminf_estimate,
        "A": series.a_bound,
        "truncated": series.truncated,
    });
    Ok(out)
}

fn pliss(s: &Settings) -> Result<Outcome> {
    let path = s.input.as_ref().ok_or_else(|| ConfigError("pliss needs --input".into()))?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let values = series_from_csv(&text).map_err(ConfigError::from)?;
    if values.is_empty() {
        return Err(ConfigError("input series is empty".into()).into());
    }
    let (Some(c1), Some(c2)) = (s.c1, s.c2) else {
        return Err(ConfigError("pliss needs --c1 and --c2".into()).into());
    };
    let a = s.a.unwrap_or_else(|| values.iter().copied().fold(c2, f64::max));
    let params = PlissParams::new(c1, c2, a).map_err(ConfigError::from)?;
    let sel = pliss_select(&values, &params);

    let mut out = Outcome::default();
    // direct window check of every index, selected or not
    let mut mismatches = 0;
    let mut next = sel.times.iter().peekable();
    for m in 1..=values.len() {
        let mut sum = 0.0;
        let holds = (0..m).rev().all(|n| {
            sum += values[n];
            sum >= c1 * (m - n) as f64
        });
        let selected = next.peek() == Some(&&m);
        if selected {
            next.next();
        }
        mismatches += usize::from(holds != selected);
    }
    out.check(
        "window inequality",
        mismatches == 0,
        format!("{} selected times, {mismatches} indices disagree with the direct window check", sel.times.len()),
    );
    let bound = params.theta * values.len() as f64;
    match sel.guarantee {
        Some(ok) => out.check(
            "density guarantee",
            ok,
            format!("l = {} against theta N = {bound}", sel.times.len()),
        ),
        None => out.check(
            "density guarantee",
            true,
            "not applicable: sum_j a_j < c2 N or some a_j > A",
        ),
    }
    let report = json!({
        "N": values.len(),
        "c1": c1,
        "c2": c2,
        "A": a,
        "theta": params.theta,
        "l": sel.times.len(),
        "sum_condition": sel.sum_condition,
        "hypothesis_violated": sel.hypothesis_violated,
        "guarantee": sel.guarantee,
        "times": sel.times,
    });
    out.file("times.json", serde_json::to_string_pretty(&report)? + "\n");
    out.summary = json!({"N": values.len(), "theta": params.theta, "l": sel.times.len()});
    Ok(out)
}

fn hyptimes(s: &Settings) -> Result<Outcome> {
    let series = series_at(s, s.steps)?;
    let stats = nue_statistics(&series.values)?;
    let c = stats.liminf_estimate;
    let sigma = match s.sigma {
        Some(v) => v,
        None if c > 0.0 => sigma_from_c(c, series.a_bound.max(c))?.sigma,
        None => bail!("no expansion measured at x0 (rate {c}); pass --sigma explicitly"),
    };
    let theta = if c > 0.0 { sigma_from_c(c, series.a_bound.max(c))?.theta } else { 0.0 };
    let times = sigma_hyperbolic_times(&series.values, sigma)?;

    let mut out = Outcome::default();
    let mut worst = f64::NEG_INFINITY;
    for &n in &times {
        let mut log_prod = 0.0;
        for k in 1..=n {
            log_prod -= series.values[n - k];
            worst = worst.max(log_prod - k as f64 * sigma.ln());
        }
    }
    out.check(
        "backward contraction at hyperbolic times",
        times.is_empty() || worst <= 1e-12 * series.len() as f64,
        format!("max log(product / sigma^k) = {worst:.3e} over {} times", times.len()),
    );
    out.check(
        "hyperbolic times exist",
        !times.is_empty(),
        format!("{} times in [1, {}] for sigma = {sigma}", times.len(), series.len()),
    );
    let report = TimesReport {
        N: series.len(),
        c,
        A: series.a_bound,
        sigma,
        theta,
        density: times.len() as f64 / series.len() as f64,
        times,
    };
    out.file("series.csv", series_to_csv(&series.values));
    out.file("times.json", serde_json::to_string_pretty(&report)? + "\n");
    out.summary = json!({
        "N": report.N,
        "sigma": sigma,
        "count": report.times.len(),
        "density": report.density,
        "truncated": series.truncated,
    });
    Ok(out)
}

/// Iterates `curve` until `steps` images exist or the orbit leaves the
/// domain, trimming each image to arc-radius `radius` about its middle.
fn trimmed_history(system: &SystemSpec, curve: CurveDisk, steps: usize, radius: f64) -> Vec<CurveDisk> {
    let mut history = vec![curve];
    for _ in 0..steps {
        let Ok(next) = iterate_curve(system, history.last().unwrap()) else { break };
        let Ok(trimmed) = next.trim_to_radius(next.len() / 2, radius) else { break };
        history.push(trimmed);
    }
    history
}

fn cones(s: &Settings) -> Result<Outcome> {
    let field = field_for(&s.system);
    let cone = ConeSpec::new(s.cone_width, field.as_ref())?;
    let mut rng = stream(s.seed, 0);
    let sample = sample_cone_vectors(&s.system, &cone, s.samples, &mut rng)?;
    let report = cone_invariance_report(&s.system, &cone, &sample, Exec::default());

    let mut out = Outcome::default();
    out.check(
        "cone invariance",
        report.violations == 0,
        format!("{} of {} samples violate, worst margin {:.3e}", report.violations, report.samples, report.worst_margin),
    );

    let count = (s.samples / 10).clamp(50, 1000);
    let train: Vec<Point2> = (0..count).map(|_| random_domain_point(&s.system, &mut rng)).collect();
    let test: Vec<Point2> = (0..count).map(|_| random_domain_point(&s.system, &mut rng)).collect();
    let (zeta, lambda1) = match fit_holder_pair_on(&s.system, &cone, &train, &s.zeta_grid) {
        Ok(pair) => {
            let held_out = holder_sup(&s.system, &cone, &test, pair.zeta)?;
            out.check(
                "Hölder pair on held-out points",
                held_out <= pair.lambda1,
                format!("zeta = {}, lambda1 = {:.6}, held-out sup {held_out:.6}", pair.zeta, pair.lambda1),
            );
            (Some(pair.zeta), Some(pair.lambda1))
        }
        Err(e) => {
            out.check("Hölder pair on held-out points", false, e.to_string());
            (None, None)
        }
    };

    let seed = host_seed(s)?;
    let piece = Seed::segment(seed.point(0.0), seed.tangent(0.0), s.delta1.min(seed.length()))?;
    let h = resolution_for(s);
    let history = trimmed_history(&s.system, CurveDisk::from_seed(piece, h)?, 10, s.delta1);
    let z = zeta.unwrap_or(1.0);
    let kappa = history
        .iter()
        .filter(|c| c.len() >= 3)
        .map(|c| kappa_estimate(c, z))
        .try_fold(0.0f64, |m, k| k.map(|k| m.max(k)))?;
    // the last curve may sit where the next step is undefined
    let steps = history.len() - 1;
    let usable: Vec<CurveDisk> = history.into_iter().take(steps).filter(|c| c.len() >= 3).collect();
    let l = jacobian_holder_constant(&s.system, &usable, z)?;

    let body = json!({
        "violations": report.violations,
        "worst_margin": report.worst_margin,
        "zeta": zeta,
        "lambda1": lambda1,
        "kappa": kappa,
        "L": l,
    });
    out.file("cones.json", serde_json::to_string_pretty(&body)? + "\n");
    out.summary = json!({"samples": report.samples, "violations": report.violations, "zeta": zeta, "L": l});
    Ok(out)
}

/// Host vertices ordered from the middle outwards.
fn middle_out(len: usize) -> impl Iterator<Item = usize> {
    let mid = len / 2;
    (0..len).map(move |k| if k % 2 == 0 { mid + k / 2 } else { mid - k.div_ceil(2) }).filter(move |&i| i < len)
}

fn disk(s: &Settings) -> Result<Outcome> {
    let n = s.n.unwrap_or(10);
    let sigma = sigma_for(s)?;
    let h = resolution_for(s);
    let seed = host_seed(s)?;
    let host = CurveDisk::over(seed, 0.0, seed.length(), h, &[])?;
    let mut ball: Option<PreBall> = None;
    let mut last_err = None;
    for idx in middle_out(host.len()).take(400) {
        match find_preball(&s.system, &host, idx, n, sigma, s.delta1) {
            Ok(b) => {
                ball = Some(b);
                break;
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some(ball) = ball else {
        bail!("no host vertex near the middle admits a pre-ball at time {n}: {}", last_err.unwrap());
    };

    let mut out = Outcome::default();
    let (rl, rr) = ball.image_radii();
    out.check(
        "image radius",
        (rl - s.delta1).abs() <= 2.0 * h && (rr - s.delta1).abs() <= 2.0 * h,
        format!("image arc-radii {rl:.9} / {rr:.9} against delta1 = {} (tolerance {})", s.delta1, 2.0 * h),
    );
    let mut rng = stream(s.seed, 0);
    let pairs: Vec<(f64, f64)> = (0..100)
        .map(|_| (rng.gen_range(ball.v.0..=ball.v.1), rng.gen_range(ball.v.0..=ball.v.1)))
        .collect();
    let contraction = backward_contraction_check(&ball, &pairs)?;
    out.check(
        "backward contraction",
        contraction.pass,
        format!("{} checks, margin {:.3e}", contraction.checked, contraction.margin),
    );
    let zeta = 1.0;
    let l = match s.holder_l {
        Some(l) => l,
        // J_k matters for the steps taken, k < n
        None => jacobian_holder_constant(&s.system, &ball.history[..n], zeta)?,
    };
    let c2 = c2_bound(l, s.delta1, sigma, zeta);
    let ratio = distortion_ratio(&ball);
    out.check("bounded distortion", ratio <= c2, format!("ratio {ratio:.12} against C2 = {c2:.12} (L = {l:.6})"));
    let tele = distortion_telescoping(&s.system, &ball, l, zeta)?;
    out.check(
        "telescoped Hölder sum",
        tele.pass,
        format!(
            "log ratio {:.3e}, telescoped {:.3e}, Hölder sum {:.3e}, bound {:.3e}",
            tele.log_ratio, tele.telescoped, tele.holder_sum, tele.geometric_bound
        ),
    );

    out.file("curve.csv", ball.final_curve().to_csv());
    let body = json!({
        "center_param": ball.center_param,
        "time": ball.time,
        "sigma": sigma,
        "delta1": s.delta1,
        "resolution": h,
        "v": [ball.v.0, ball.v.1],
        "w": [ball.w.0, ball.w.1],
        "image_radii": [rl, rr],
        "contraction": contraction,
        "distortion": ratio,
        "C2": c2,
        "L": l,
        "zeta": zeta,
        "telescoping": tele,
    });
    out.file("preball.json", serde_json::to_string_pretty(&body)? + "\n");
    out.summary = json!({"center_param": ball.center_param, "time": n, "v_length": ball.v.1 - ball.v.0, "distortion": ratio});
    Ok(out)
}

/// `H`: the interval list from `--input`, or an SVC set across the host.
fn host_set(s: &Settings, seed: &Seed) -> Result<FatCantorSet> {
    let len = seed.length();
    let mut set = build_fat_cantor(len, s.stages, RemovalSchedule::Svc)?;
    if let Some(path) = &s.input {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let kept = IntervalList::from_csv(&text).map_err(ConfigError::from)?;
        let inside = kept.intervals().iter().all(|&(a, b)| a >= 0.0 && b <= len);
        if kept.is_empty() || !inside {
            return Err(ConfigError(format!("input intervals must be nonempty and lie in [0, {len}]")).into());
        }
        set.measure = kept.measure();
        set.kept = kept;
    }
    Ok(set)
}

fn cover(s: &Settings) -> Result<Outcome> {
    let n = s.n.unwrap_or(10);
    let sigma = sigma_for(s)?;
    let h = resolution_for(s);
    let seed = host_seed(s)?;
    let set = host_set(s, &seed)?;
    let mut rng = stream(s.seed, 0);
    let centers = stratified_centers(&set.kept, s.centers, &mut rng);
    let host = CurveDisk::over(seed, 0.0, seed.length(), h, &centers)?;
    let windows: Vec<Option<CoverWindow>> = Exec::default().map(&centers, |&c| {
        let idx = host.index_of_param(c)?;
        (1..=n)
            .rev()
            .find_map(|t| find_preball_final(&s.system, &host, idx, t, sigma, s.delta1).ok())
            .map(|b| b.cover_window())
    });
    let windows: Vec<CoverWindow> = windows.into_iter().flatten().collect();
    if windows.is_empty() {
        bail!("no centre admits a pre-ball at any time up to {n}");
    }
    let sel = vitali_select(&windows, 1e-9)?;

    let mut out = Outcome::default();
    out.check("disjoint W windows", sel.disjoint, format!("{} of {} windows selected", sel.selected.len(), windows.len()));
    out.check("every W inside a selected V", sel.covers_all(), "maximality consequence of the greedy pass");
    let k = set.kept.intersect(&IntervalList::new(windows.iter().map(|w| w.w).collect())?);
    let sum_w: f64 = sel.selected.iter().map(|&i| windows[i].w.1 - windows[i].w.0).sum();
    out.check(
        "selected W measure",
        sum_w + 1e-12 >= sel.gamma * k.measure(),
        format!("sum Leb(W) = {sum_w:.6e} against gamma Leb(K) = {:.6e}", sel.gamma * k.measure()),
    );

    let mut chosen = vec![false; windows.len()];
    for &i in &sel.selected {
        chosen[i] = true;
    }
    let rows = windows.iter().zip(&chosen).map(|(w, &c)| {
        vec![w.center, w.time as f64, w.v.0, w.v.1, w.w.0, w.w.1, f64::from(u8::from(c))]
    });
    out.file("cover.csv", csv_table(&["center", "time", "v_lo", "v_hi", "w_lo", "w_hi", "selected"], rows));
    out.file("set.csv", set.kept.to_csv());
    out.summary = json!({
        "windows": windows.len(),
        "selected": sel.selected.len(),
        "gamma": sel.gamma,
        "set_measure": set.kept.measure(),
    });
    Ok(out)
}

fn density(s: &Settings) -> Result<Outcome> {
    let sigma = sigma_for(s)?;
    let h = resolution_for(s);
    let seed = host_seed(s)?;
    let set = host_set(s, &seed)?;
    let host = CurveDisk::over(seed, 0.0, seed.length(), h, &[])?;
    let max_time = s.n.unwrap_or(25);
    let holder_l = match s.holder_l {
        Some(l) => l,
        None => measured_l(s, &host, sigma, max_time)?,
    };
    let cfg = DensityConfig {
        sigma,
        delta1: s.delta1,
        epsilons: s.epsilons.clone(),
        centers: s.centers,
        max_time,
        seed: s.seed,
        holder_l,
        zeta: 1.0,
        exec: Exec::default(),
    };
    let rep = density_experiment(&s.system, &host, &set, &cfg)?;

    let mut out = Outcome::default();
    let failing = |f: fn(&hyplab::covermeasure::DensityStep) -> bool| -> Vec<usize> {
        rep.steps.iter().filter(|st| !f(st)).map(|st| st.k_n).collect()
    };
    for (name, bad) in [
        ("selection disjoint and covering", failing(|st| st.selection_ok)),
        ("measure-ratio chain", failing(|st| st.chain_ok)),
        ("distortion-corrected density", failing(|st| st.corrected_ok)),
    ] {
        out.check(name, bad.is_empty(), format!("{} steps, failing at {bad:?}", rep.steps.len()));
    }
    out.check("monotone witness densities", rep.monotone, "recorded subsequence, 1e-6 slack");
    for w in &rep.witnesses {
        out.check(
            &format!("density reaches {}", 1.0 - w.epsilon),
            w.k_n.is_some(),
            match w.k_n {
                Some(k) => format!("at k_n = {k} with density {:.9}", w.density),
                None => format!("not reached by time {max_time}"),
            },
        );
    }
    out.file("density.csv", rep.to_csv());
    let body = json!({
        "sigma": sigma,
        "holder_l": holder_l,
        "witnesses": rep.witnesses,
        "monotone": rep.monotone,
        "steps": rep.steps,
    });
    out.file("density.json", serde_json::to_string_pretty(&body)? + "\n");
    out.summary = json!({"steps": rep.steps.len(), "witnesses": rep.witnesses, "holder_l": holder_l});
    Ok(out)
}

/// Hölder constant of the log-Jacobian over pre-ball histories at a few
/// host points (zero for systems with constant derivative on curves).
fn measured_l(s: &Settings, host: &CurveDisk, sigma: f64, max_time: usize) -> Result<f64> {
    if s.system.analytic_splitting().is_some() {
        return Ok(jacobian_holder_constant(&s.system, std::slice::from_ref(host), 1.0)?);
    }
    let len = host.seed().length();
    let probes = [0.3 * len, 0.5 * len, 0.7 * len];
    let probe = CurveDisk::over(*host.seed(), 0.0, len, host.resolution(), &probes)?;
    let mut curves = Vec::new();
    for &c in &probes {
        let idx = probe.index_of_param(c).expect("probe params are vertices");
        if let Some(b) = (1..=max_time.min(12))
            .rev()
            .find_map(|t| find_preball(&s.system, &probe, idx, t, sigma, s.delta1).ok())
        {
            let steps = b.time;
            curves.extend(b.history.into_iter().take(steps));
        }
    }
    if curves.is_empty() {
        bail!("no probe pre-ball for measuring the Hölder constant; pass holder_l in the config");
    }
    Ok(jacobian_holder_constant(&s.system, &curves, 1.0)?)
}

fn measure(s: &Settings) -> Result<Outcome> {
    let mu = match s.system {
        SystemSpec::AffineHorseshoe { mu, .. } => mu,
        _ => s.mu.unwrap_or(3.0),
    };
    let n = s.n.unwrap_or(12);
    let h = s.resolution.unwrap_or(MEASURE_RESOLUTION);
    let rows = trapped_measure_decay(mu, n, h, Exec::default()).map_err(|e| match e {
        hyplab::Error::ResolutionTooCoarse { .. } | hyplab::Error::InvalidParameter(_) => {
            anyhow::Error::from(ConfigError::from(e))
        }
        other => other.into(),
    })?;
    let mut out = Outcome::default();
    let off: Vec<usize> = rows.iter().filter(|r| !r.within_tolerance()).map(|r| r.n).collect();
    out.check(
        "estimate within one cell layer of (2/mu)^n",
        off.is_empty(),
        format!("{} depths, failing at {off:?}", rows.len()),
    );
    let q = 2.0 / mu;
    let bad_ratio: Vec<usize> = rows
        .windows(2)
        .filter(|w| {
            let ratio = w[1].estimate / w[0].estimate;
            let tol = (w[1].tolerance + q * w[0].tolerance) / w[0].estimate;
            (ratio - q).abs() > tol
        })
        .map(|w| w[0].n)
        .collect();
    out.check(
        "successive ratios equal 2/mu",
        bad_ratio.is_empty(),
        format!("failing after {bad_ratio:?}"),
    );
    out.file("decay.csv", decay_to_csv(&rows));
    let last = rows.last().unwrap();
    out.summary = json!({"mu": mu, "n": last.n, "estimate": last.estimate, "exact": last.exact});
    Ok(out)
}
