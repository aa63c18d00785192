//! Experiment settings: a `key = value` config file overlaid by flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use hyplab::dynkernel::SystemSpec;
use hyplab::io::{kv_pairs, parse_real, parse_real_list};
use hyplab::Point2;

/// Errors in the configuration itself; these exit with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl From<hyplab::Error> for ConfigError {
    fn from(e: hyplab::Error) -> Self {
        ConfigError(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Orbit,
    Pliss,
    Hyptimes,
    Cones,
    Disk,
    Cover,
    Density,
    Measure,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Orbit => "orbit",
            Experiment::Pliss => "pliss",
            Experiment::Hyptimes => "hyptimes",
            Experiment::Cones => "cones",
            Experiment::Disk => "disk",
            Experiment::Cover => "cover",
            Experiment::Density => "density",
            Experiment::Measure => "measure",
        }
    }

    fn parse(s: &str) -> Result<Self, ConfigError> {
        <Self as ValueEnum>::from_str(s, true)
            .map_err(|_| ConfigError(format!("unknown experiment `{s}`")))
    }
}

/// Flags of `hyplab run`. Every value may also come from `--config`.
#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// Experiment to run (may instead be set by `experiment = ...` in the config).
    #[arg(value_enum)]
    pub experiment: Option<Experiment>,
    /// Plain-text `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the manifest as JSON instead of a text summary.
    #[arg(long)]
    pub json: bool,
    /// cat | perturbed-cat | horseshoe
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    /// Base point as `x,y`.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Input CSV (series `j,a_j` for pliss, intervals `lo,hi` for cover).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long = "A")]
    pub a: Option<f64>,
    #[arg(long)]
    pub delta1: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub resolution: Option<f64>,
    /// Time horizon: pre-ball time, last density step or trapped-set depth.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub experiment: Experiment,
    pub system: SystemSpec,
    /// `--mu` as given, also for experiments that only take the expansion rate.
    pub mu: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub json: bool,
    pub x0: Point2,
    pub steps: usize,
    pub input: Option<PathBuf>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub a: Option<f64>,
    pub delta1: f64,
    pub sigma: Option<f64>,
    pub resolution: Option<f64>,
    pub n: Option<usize>,
    pub epsilons: Vec<f64>,
    pub zeta_grid: Vec<f64>,
    pub centers: usize,
    pub stages: usize,
    pub samples: usize,
    pub cone_width: f64,
    pub holder_l: Option<f64>,
}

const KNOWN_KEYS: &[&str] = &[
    "experiment", "system", "epsilon", "mu", "nu", "seed", "output_dir", "out", "x0", "steps",
    "input", "c1", "c2", "A", "delta1", "sigma", "resolution", "n", "epsilons", "zeta_grid",
    "centers", "stages", "samples", "cone_width", "holder_l",
];

fn parse_point(s: &str) -> Result<Point2, ConfigError> {
    match parse_real_list(s)?.as_slice() {
        &[x, y] => Ok(Point2::new(x, y)),
        _ => Err(ConfigError(format!("expected a point `x,y`, got `{s}`"))),
    }
}

fn parse_count(key: &str, s: &str) -> Result<usize, ConfigError> {
    s.trim()
        .parse()
        .map_err(|_| ConfigError(format!("`{key}` expects a non-negative integer, got `{s}`")))
}

impl Settings {
    pub fn resolve(args: &RunArgs) -> Result<Self, ConfigError> {
        let file: BTreeMap<String, String> = match &args.config {
            Some(path) => read_config(path)?,
            None => BTreeMap::new(),
        };
        let real = |key: &str, flag: Option<f64>| -> Result<Option<f64>, ConfigError> {
            match (flag, file.get(key)) {
                (Some(v), _) => Ok(Some(v)),
                (None, Some(s)) => Ok(Some(parse_real(s)?)),
                (None, None) => Ok(None),
            }
        };
        let count = |key: &str, flag: Option<usize>| -> Result<Option<usize>, ConfigError> {
            match (flag, file.get(key)) {
                (Some(v), _) => Ok(Some(v)),
                (None, Some(s)) => parse_count(key, s).map(Some),
                (None, None) => Ok(None),
            }
        };

        let experiment = match (args.experiment, file.get("experiment")) {
            (Some(e), _) => e,
            (None, Some(s)) => Experiment::parse(s)?,
            (None, None) => return Err(ConfigError("no experiment given".into())),
        };
        let kind = args
            .system
            .clone()
            .or_else(|| file.get("system").cloned())
            .unwrap_or_else(|| "cat".into());
        let mu = real("mu", args.mu)?;
        let system = SystemSpec::from_parts(&kind, real("epsilon", args.epsilon)?, mu, real("nu", args.nu)?)?;
        let seed = match (args.seed, file.get("seed")) {
            (Some(s), _) => s,
            (None, Some(s)) => s
                .trim()
                .parse()
                .map_err(|_| ConfigError(format!("`seed` expects a 64-bit unsigned integer, got `{s}`")))?,
            (None, None) => 0,
        };
        let out = args
            .out
            .clone()
            .or_else(|| file.get("output_dir").or(file.get("out")).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let x0 = match (&args.x0, file.get("x0")) {
            (Some(s), _) | (None, Some(s)) => parse_point(s)?,
            (None, None) => Point2::new(0.1, 0.2),
        };
        let list = |key: &str, default: &[f64]| -> Result<Vec<f64>, ConfigError> {
            Ok(match file.get(key) {
                Some(s) => parse_real_list(s)?,
                None => default.to_vec(),
            })
        };

        let settings = Settings {
            experiment,
            system,
            mu,
            seed,
            out,
            json: args.json,
            x0,
            steps: count("steps", args.steps)?.unwrap_or(1000),
            input: args.input.clone().or_else(|| file.get("input").map(PathBuf::from)),
            c1: real("c1", args.c1)?,
            c2: real("c2", args.c2)?,
            a: real("A", args.a)?,
            delta1: real("delta1", args.delta1)?.unwrap_or(0.05),
            sigma: real("sigma", args.sigma)?,
            resolution: real("resolution", args.resolution)?,
            n: count("n", args.n)?,
            epsilons: list("epsilons", &[0.1, 0.05, 0.01])?,
            zeta_grid: list("zeta_grid", &hyplab::conefield::ZETA_GRID)?,
            centers: count("centers", None)?.unwrap_or(200),
            stages: count("stages", None)?.unwrap_or(18),
            samples: count("samples", None)?.unwrap_or(10_000),
            cone_width: real("cone_width", None)?.unwrap_or(0.1),
            holder_l: real("holder_l", None)?,
        };
        settings.validate()?;
        Ok(settings)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError(msg.to_string()));
        if !(self.delta1 > 0.0 && self.delta1 <= 0.25) {
            return bad("delta1 must lie in (0, 0.25]");
        }
        if self.sigma.is_some_and(|s| !(s > 0.0 && s < 1.0)) {
            return bad("sigma must lie in (0, 1)");
        }
        if self.resolution.is_some_and(|h| !(h > 0.0 && h < 1.0)) {
            return bad("resolution must lie in (0, 1)");
        }
        if self.n == Some(0) && self.experiment != Experiment::Measure {
            return bad("n must be positive");
        }
        if self.steps == 0 {
            return bad("steps must be positive");
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return bad("epsilons must lie in (0, 1)");
        }
        if !(self.cone_width > 0.0 && self.cone_width.is_finite()) {
            return bad("cone_width must be positive");
        }
        if self.centers == 0 || self.samples == 0 {
            return bad("centers and samples must be positive");
        }
        if !(1..=hyplab::covermeasure::MAX_STAGES).contains(&self.stages) {
            return bad("stages out of range");
        }
        if !self.x0.is_finite() {
            return bad("x0 must be finite");
        }
        Ok(())
    }

    /// Effective settings as strings, for the manifest.
    pub fn describe(&self) -> BTreeMap<&'static str, String> {
        let opt = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), |x| x.to_string());
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut m = BTreeMap::new();
        m.insert("experiment", self.experiment.name().to_string());
        m.insert("system", self.system.to_kv().trim_end().replace('\n', "; "));
        m.insert("seed", self.seed.to_string());
        m.insert("x0", format!("{},{}", self.x0.x, self.x0.y));
        m.insert("steps", self.steps.to_string());
        m.insert(
            "input",
            self.input.as_deref().map_or("none".into(), |p| p.display().to_string()),
        );
        m.insert("c1", opt(self.c1));
        m.insert("c2", opt(self.c2));
        m.insert("A", opt(self.a));
        m.insert("delta1", self.delta1.to_string());
        m.insert("sigma", opt(self.sigma));
        m.insert("resolution", opt(self.resolution));
        m.insert("n", self.n.map_or("auto".into(), |n| n.to_string()));
        m.insert("epsilons", list(&self.epsilons));
        m.insert("zeta_grid", list(&self.zeta_grid));
        m.insert("centers", self.centers.to_string());
        m.insert("stages", self.stages.to_string());
        m.insert("samples", self.samples.to_string());
        m.insert("cone_width", self.cone_width.to_string());
        m.insert("holder_l", opt(self.holder_l));
        m
    }
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (key, value) in kv_pairs(&text)? {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError(format!("unknown config key `{key}`")));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(ConfigError(format!("duplicate config key `{key}`")));
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_config(text: &str) -> (tempfile::TempDir, RunArgs) {
        let dir = tempfile::TempDir::new().unwrap();
        let path = dir.path().join("c.conf");
        std::fs::write(&path, text).unwrap();
        let args = RunArgs {
            config: Some(path),
            ..RunArgs::default()
        };
        (dir, args)
    }

    #[test]
    fn defaults_without_config() {
        let args = RunArgs {
            experiment: Some(Experiment::Density),
            ..RunArgs::default()
        };
        let s = Settings::resolve(&args).unwrap();
        assert_eq!(s.delta1, 0.05);
        assert_eq!(s.epsilons, [0.1, 0.05, 0.01]);
        assert_eq!(s.x0, Point2::new(0.1, 0.2));
        assert_eq!(s.out, PathBuf::from("out"));
    }

    #[test]
    fn flags_override_the_file() {
        let (_dir, mut args) = with_config("experiment = cones\nseed = 5\ndelta1 = 0.1\nepsilons = 0.2, 0.02\n");
        args.seed = Some(9);
        let s = Settings::resolve(&args).unwrap();
        assert_eq!(s.experiment, Experiment::Cones);
        assert_eq!(s.seed, 9);
        assert_eq!(s.delta1, 0.1);
        assert_eq!(s.epsilons, [0.2, 0.02]);
    }

    #[test]
    fn rejects_bad_files() {
        for text in [
            "experiment = orbit\nexperiment = disk\n",
            "experiment = orbit\nwidth = 3\n",
            "experiment = orbit\nseed = -1\n",
            "experiment = orbit\nsigma = 1.5\n",
            "experiment = warp\n",
            "system = cat\n",
        ] {
            let (_dir, args) = with_config(text);
            assert!(Settings::resolve(&args).is_err(), "{text:?}");
        }
    }

    #[test]
    fn depth_zero_only_for_measure() {
        let (_dir, mut args) = with_config("n = 0\n");
        args.experiment = Some(Experiment::Measure);
        assert!(Settings::resolve(&args).is_ok());
        args.experiment = Some(Experiment::Disk);
        assert!(Settings::resolve(&args).is_err());
    }
}
