//! Run configuration: JSON file, flag overrides, per-command defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use iterint_core::{DistFamily, Grid, Model, ModelRef, ModelSpec, StepFn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Environment variable read for the default worker count.
pub const THREADS_ENV: &str = "ITERINT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    ProductCheck,
    Riemann,
    Ibp,
    Norm,
    SquareDecomp,
    MomentBound,
    Qv,
    Martingale,
    Selftest,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::ProductCheck,
        Command::Riemann,
        Command::Ibp,
        Command::Norm,
        Command::SquareDecomp,
        Command::MomentBound,
        Command::Qv,
        Command::Martingale,
        Command::Selftest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::ProductCheck => "product-check",
            Command::Riemann => "riemann",
            Command::Ibp => "ibp",
            Command::Norm => "norm",
            Command::SquareDecomp => "square-decomp",
            Command::MomentBound => "moment-bound",
            Command::Qv => "qv",
            Command::Martingale => "martingale",
            Command::Selftest => "selftest",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown command `{s}`")))
    }
}

/// A step function given inline or loaded from `cell_index,value` CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FnSource {
    Constant(f64),
    Csv {
        csv: PathBuf,
        /// Grid level of the file; defaults to the basis level.
        #[serde(default)]
        level: Option<u32>,
    },
}

impl FromStr for FnSource {
    type Err = CliError;

    /// A number, `path.csv`, or `path.csv@level`.
    fn from_str(s: &str) -> Result<Self, CliError> {
        if let Ok(v) = s.parse::<f64>() {
            return Ok(FnSource::Constant(v));
        }
        match s.rsplit_once('@') {
            Some((path, level)) => {
                let level = level
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad grid level in `{s}`")))?;
                Ok(FnSource::Csv {
                    csv: path.into(),
                    level: Some(level),
                })
            }
            None => Ok(FnSource::Csv {
                csv: s.into(),
                level: None,
            }),
        }
    }
}

/// Inclusive level range written `lo:hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelRange {
    pub lo: u32,
    pub hi: u32,
}

impl LevelRange {
    pub fn new(lo: u32, hi: u32) -> Self {
        Self { lo, hi }
    }

    pub fn levels(&self) -> Vec<u32> {
        (self.lo..=self.hi).collect()
    }
}

impl FromStr for LevelRange {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("levels must read `lo:hi`, got `{s}`"));
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(CliError::Config(format!("empty level range `{s}`")));
        }
        Ok(Self { lo, hi })
    }
}

impl fmt::Display for LevelRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

impl Serialize for LevelRange {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LevelRange {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Everything a run may set. Unset fields take the command's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub horizon: Option<f64>,
    pub basis_level: Option<u32>,
    pub models: Option<Vec<ModelSpec>>,
    pub h: Option<FnSource>,
    pub g: Option<FnSource>,
    pub h1: Option<FnSource>,
    pub h2: Option<FnSource>,
    /// Upper integration time.
    pub t: Option<f64>,
    /// Lower end of an extra increment window.
    pub s: Option<f64>,
    pub seed: Option<u64>,
    pub replicates: Option<u64>,
    pub levels: Option<LevelRange>,
    /// Random cases per model.
    pub cases: Option<usize>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))
    }

    /// Fields set in `other` replace ours.
    pub fn merge(mut self, other: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(horizon, basis_level, models, h, g, h1, h2, t, s, seed, replicates, levels, cases, out, threads);
        self
    }

    /// Worker count from the config, else the environment.
    pub fn thread_count(&self) -> Result<Option<usize>, CliError> {
        if let Some(n) = self.threads {
            return positive_threads(n).map(Some);
        }
        match std::env::var(THREADS_ENV) {
            Ok(v) => {
                let n = v
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("{THREADS_ENV}=`{v}` is not a count")))?;
                positive_threads(n).map(Some)
            }
            Err(_) => Ok(None),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("reports"))
    }

    pub fn resolve(&self, command: Command) -> Result<Resolved, CliError> {
        let d = Defaults::of(command);
        let horizon = self.horizon.unwrap_or(1.0);
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(CliError::Config(format!("horizon must be positive, got {horizon}")));
        }
        let basis_level = self.basis_level.unwrap_or(d.basis_level);
        let basis = Grid::new(horizon, basis_level)?;
        let models = self.models.clone().unwrap_or(d.models);
        if models.is_empty() {
            return Err(CliError::Config("no models given".into()));
        }
        let built = models
            .iter()
            .map(|m| Model::new(m.clone()).map(std::sync::Arc::new))
            .collect::<Result<Vec<_>, _>>()?;

        let mut functions = BTreeMap::new();
        for (name, src) in [("h", &self.h), ("g", &self.g), ("h1", &self.h1), ("h2", &self.h2)] {
            if let Some(src) = src {
                let f = load(src, horizon, basis_level)?;
                if !f.grid().is_coarsening_of(&basis) {
                    return Err(CliError::Config(format!(
                        "{name} lives on level {}, finer than basis level {basis_level}",
                        f.grid().level()
                    )));
                }
                functions.insert(name.to_string(), FnValues::from(&f));
            }
        }
        for v in [self.t, self.s].into_iter().flatten() {
            basis.point_index(v)?;
        }
        if let (Some(s), Some(t)) = (self.s, self.t) {
            if s > t {
                return Err(CliError::Config(format!("s = {s} lies after t = {t}")));
            }
        }
        let levels = self.levels.unwrap_or(d.levels);
        let replicates = self.replicates.unwrap_or(d.replicates);
        if replicates < 2 {
            return Err(CliError::Config("at least two replicates are required".into()));
        }
        Ok(Resolved {
            command,
            horizon,
            basis_level,
            models,
            functions,
            t: self.t,
            s: self.s,
            seed: self.seed.unwrap_or(7),
            replicates,
            levels,
            cases: self.cases.unwrap_or(d.cases),
            built,
        })
    }
}

fn positive_threads(n: usize) -> Result<usize, CliError> {
    if n == 0 {
        Err(CliError::Config("thread count must be positive".into()))
    } else {
        Ok(n)
    }
}

fn load(src: &FnSource, horizon: f64, basis_level: u32) -> Result<StepFn, CliError> {
    match src {
        FnSource::Constant(v) => Ok(StepFn::constant(Grid::new(horizon, 0)?, *v)),
        FnSource::Csv { csv, level } => {
            let grid = Grid::new(horizon, level.unwrap_or(basis_level))?;
            StepFn::from_csv(csv, grid)
                .map_err(|e| CliError::Config(format!("cannot load {}: {e}", csv.display())))
        }
    }
}

struct Defaults {
    basis_level: u32,
    models: Vec<ModelSpec>,
    levels: LevelRange,
    replicates: u64,
    cases: usize,
}

impl Defaults {
    fn of(command: Command) -> Self {
        let all: Vec<ModelSpec> = DistFamily::ALL_BASIC.iter().map(|&f| ModelSpec::Homogeneous(f)).collect();
        let pair = vec![
            ModelSpec::Homogeneous(DistFamily::Gaussian),
            ModelSpec::Homogeneous(DistFamily::CenteredExponential),
        ];
        let base = Defaults {
            basis_level: 3,
            models: all,
            levels: LevelRange::new(2, 8),
            replicates: 10_000,
            cases: 20,
        };
        match command {
            Command::ProductCheck => Defaults { cases: 100, ..base },
            Command::Ibp => Defaults { cases: 50, ..base },
            Command::Norm | Command::Martingale => base,
            Command::SquareDecomp => Defaults { basis_level: 2, ..base },
            Command::Riemann => Defaults {
                basis_level: 8,
                models: pair,
                ..base
            },
            Command::MomentBound => Defaults {
                basis_level: 12,
                models: pair,
                levels: LevelRange::new(2, 7),
                ..base
            },
            Command::Qv => Defaults {
                basis_level: 10,
                models: pair,
                levels: LevelRange::new(4, 8),
                ..base
            },
            Command::Selftest => Defaults {
                replicates: 2000,
                cases: 10,
                ..base
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FnValues {
    pub level: u32,
    pub values: Vec<f64>,
}

impl From<&StepFn> for FnValues {
    fn from(f: &StepFn) -> Self {
        Self {
            level: f.grid().level(),
            values: f.values().to_vec(),
        }
    }
}

/// Fully specified run. Its JSON form is what the digest covers.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub command: Command,
    pub horizon: f64,
    pub basis_level: u32,
    pub models: Vec<ModelSpec>,
    /// Loaded step functions, so the digest tracks file contents rather than paths.
    pub functions: BTreeMap<String, FnValues>,
    pub t: Option<f64>,
    pub s: Option<f64>,
    pub seed: u64,
    pub replicates: u64,
    pub levels: LevelRange,
    pub cases: usize,
    #[serde(skip)]
    pub built: Vec<ModelRef>,
}

impl Resolved {
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn basis_grid(&self) -> Grid {
        Grid::new(self.horizon, self.basis_level).expect("validated in resolve")
    }

    /// A configured function, or the constant `fallback`.
    pub fn function(&self, name: &str, fallback: f64) -> StepFn {
        match self.functions.get(name) {
            Some(f) => StepFn::new(
                Grid::new(self.horizon, f.level).expect("validated in resolve"),
                f.values.clone(),
            )
            .expect("validated in resolve"),
            None => StepFn::constant(Grid::new(self.horizon, 0).expect("validated in resolve"), fallback),
        }
    }

    pub fn has_pair(&self, a: &str, b: &str) -> bool {
        self.functions.contains_key(a) && self.functions.contains_key(b)
    }
}
