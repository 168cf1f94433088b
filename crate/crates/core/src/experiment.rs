//! Batch experiments: repeated trials of one algorithm on one instance,
//! written as CSV with a JSON summary alongside.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{exponential_mechanism, oneshot_private_topk, private_threshold_topk, Mode};
use crate::error::{Error, Result};
use crate::harness::noiseless_threshold_topk;
use crate::instances::{InstanceFamily, InstanceFamilySpec};
use crate::model::{accuracy_error, Histogram, ItemId, TopKOutcome};
use crate::noise::{NoiseKind, NoiseSpec};
use crate::rng;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "PRIVTOPK_THREADS";

/// Column order of the per-trial CSV.
pub const CSV_HEADER: [&str; 11] = [
    "trial_id",
    "m",
    "n",
    "k",
    "epsilon",
    "algorithm",
    "access_cost_L1",
    "access_cost_total",
    "wall_time_ns",
    "returned_items",
    "error_alpha",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    OneshotLaplace,
    OneshotGumbel,
    PrivtaEager,
    PrivtaLazy,
    Expmech,
    /// Noiseless threshold algorithm; exact and not private.
    ThresholdExact,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::OneshotLaplace,
        Algorithm::OneshotGumbel,
        Algorithm::PrivtaEager,
        Algorithm::PrivtaLazy,
        Algorithm::Expmech,
        Algorithm::ThresholdExact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::OneshotLaplace => "oneshot_laplace",
            Algorithm::OneshotGumbel => "oneshot_gumbel",
            Algorithm::PrivtaEager => "privta_eager",
            Algorithm::PrivtaLazy => "privta_lazy",
            Algorithm::Expmech => "expmech",
            Algorithm::ThresholdExact => "threshold_exact",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::params(format!("unknown algorithm '{s}'")))
    }
}

/// Where the histogram comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum InstanceSource {
    File(PathBuf),
    Family(InstanceFamilySpec),
}

/// Values used for family parameters the instance string leaves out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyDefaults {
    pub m: Option<usize>,
    pub n: Option<u64>,
    pub k: usize,
    pub s: f64,
    pub seed: u64,
}

impl InstanceSource {
    /// Parses `family`, `family:key=val,...` (keys `m`, `n`, `k`, `s`,
    /// `seed`) or, failing that, a file path.
    pub fn parse(text: &str, defaults: FamilyDefaults) -> Result<Self> {
        let (head, params) = match text.split_once(':') {
            Some((h, p)) => (h, Some(p)),
            None => (text, None),
        };
        let family = match head.parse::<InstanceFamily>() {
            Ok(f) => f,
            Err(_) if params.is_none() => return Ok(InstanceSource::File(PathBuf::from(text))),
            Err(e) => return Err(e),
        };
        let (mut m, mut n, mut k, mut s, mut seed) = (defaults.m, defaults.n, defaults.k, defaults.s, defaults.seed);
        for pair in params.unwrap_or("").split(',').filter(|p| !p.is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::params(format!("expected key=value, got '{pair}'")))?;
            let bad = |_| Error::params(format!("bad value for {key}: '{value}'"));
            match key.trim() {
                "m" => m = Some(value.trim().parse().map_err(bad)?),
                "n" => n = Some(value.trim().parse().map_err(bad)?),
                "k" => k = value.trim().parse().map_err(bad)?,
                "s" => s = value.trim().parse().map_err(|_| Error::params(format!("bad value for s: '{value}'")))?,
                "seed" => seed = value.trim().parse().map_err(bad)?,
                other => return Err(Error::params(format!("unknown instance parameter '{other}'"))),
            }
        }
        let m = m.ok_or_else(|| Error::params("instance family needs m"))?;
        let n = n.ok_or_else(|| Error::params("instance family needs n"))?;
        Ok(InstanceSource::Family(
            InstanceFamilySpec::new(family, m, n, k).with_exponent(s).with_seed(seed),
        ))
    }

    pub fn load(&self) -> Result<Histogram> {
        match self {
            InstanceSource::File(path) => Ok(Histogram::load(path)?.0),
            InstanceSource::Family(spec) => Ok(spec.generate()?.histogram),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            InstanceSource::File(path) => path.display().to_string(),
            InstanceSource::Family(s) => {
                format!("{}:m={},n={},k={},s={},seed={}", s.family, s.m, s.n, s.k, s.s, s.seed)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    /// Noise for the private threshold algorithm; the one-shot and
    /// exponential-mechanism variants fix their own.
    pub noise: NoiseKind,
    pub instance: InstanceSource,
    pub k: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    /// Record wall-clock time per trial. Off by default so output bytes
    /// depend only on the configuration.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::params("trials must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::params(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.algorithm == Algorithm::Expmech && self.k != 1 {
            return Err(Error::params("expmech selects a single item; use k = 1"));
        }
        Ok(())
    }

    fn noise_spec(&self) -> Result<NoiseSpec> {
        let kind = match self.algorithm {
            Algorithm::OneshotLaplace => NoiseKind::Laplace,
            Algorithm::OneshotGumbel | Algorithm::Expmech => NoiseKind::Gumbel,
            _ => self.noise,
        };
        NoiseSpec::for_epsilon(kind, self.epsilon)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub m: usize,
    pub n: u64,
    pub k: usize,
    pub epsilon: f64,
    pub algorithm: Algorithm,
    #[serde(rename = "access_cost_L1")]
    pub access_cost_l1: u64,
    pub access_cost_total: u64,
    pub wall_time_ns: u64,
    #[serde(serialize_with = "join_items")]
    pub returned_items: Vec<ItemId>,
    pub error_alpha: u64,
}

fn join_items<S: serde::Serializer>(items: &[ItemId], s: S) -> std::result::Result<S::Ok, S::Error> {
    let joined: Vec<String> = items.iter().map(|i| i.to_string()).collect();
    s.serialize_str(&joined.join(";"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub instance: String,
    pub m: usize,
    pub n: u64,
    pub k: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    pub mean_access_cost_l1: f64,
    pub se_access_cost_l1: f64,
    pub mean_access_cost_total: f64,
    pub mean_error_alpha: f64,
    pub max_error_alpha: u64,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

/// Runs one trial on `h` with its own random stream.
pub fn run_trial(config: &ExperimentConfig, h: &Histogram, trial_id: u64) -> Result<TrialRecord> {
    let spec = config.noise_spec()?;
    let mut rng = rng::trial_stream(config.seed, trial_id);
    let start = config.timing.then(Instant::now);
    let out: TopKOutcome = match config.algorithm {
        Algorithm::OneshotLaplace | Algorithm::OneshotGumbel => oneshot_private_topk(h, config.k, &spec, &mut rng)?,
        Algorithm::PrivtaEager => private_threshold_topk(&mut h.view(), config.k, &spec, &mut rng, Mode::Eager)?,
        Algorithm::PrivtaLazy => private_threshold_topk(&mut h.view(), config.k, &spec, &mut rng, Mode::Lazy)?,
        Algorithm::Expmech => exponential_mechanism(&mut h.view(), config.epsilon, &mut rng)?,
        Algorithm::ThresholdExact => noiseless_threshold_topk(&mut h.view(), config.k)?,
    };
    let wall_time_ns = start.map_or(0, |s| s.elapsed().as_nanos() as u64);
    Ok(TrialRecord {
        trial_id,
        m: h.m(),
        n: h.n(),
        k: config.k,
        epsilon: config.epsilon,
        algorithm: config.algorithm,
        access_cost_l1: out.access_cost,
        access_cost_total: out.access_cost_total,
        wall_time_ns,
        error_alpha: accuracy_error(h, &out.items, config.k)?,
        returned_items: out.items,
    })
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs all trials in parallel; records come back ordered by trial id.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let h = config.instance.load()?;
    if config.k == 0 || config.k > h.m() {
        return Err(Error::BadK { k: config.k, m: h.m() });
    }
    let trials = config.trials as u64;
    let work = || (0..trials).into_par_iter().map(|t| run_trial(config, &h, t)).collect::<Result<Vec<_>>>();
    let records = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::params(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let summary = summarize(config, &h, &records);
    Ok(ExperimentResult { records, summary })
}

fn summarize(config: &ExperimentConfig, h: &Histogram, records: &[TrialRecord]) -> Summary {
    let t = records.len() as f64;
    let mean = |f: &dyn Fn(&TrialRecord) -> f64| records.iter().map(f).sum::<f64>() / t;
    let mean_l1 = mean(&|r| r.access_cost_l1 as f64);
    let var_l1 = if records.len() > 1 {
        records.iter().map(|r| (r.access_cost_l1 as f64 - mean_l1).powi(2)).sum::<f64>() / (t - 1.0)
    } else {
        0.0
    };
    Summary {
        algorithm: config.algorithm,
        instance: config.instance.describe(),
        m: h.m(),
        n: h.n(),
        k: config.k,
        epsilon: config.epsilon,
        trials: records.len(),
        seed: config.seed,
        mean_access_cost_l1: mean_l1,
        se_access_cost_l1: (var_l1 / t).sqrt(),
        mean_access_cost_total: mean(&|r| r.access_cost_total as f64),
        mean_error_alpha: mean(&|r| r.error_alpha as f64),
        max_error_alpha: records.iter().map(|r| r.error_alpha).max().unwrap_or(0),
    }
}

pub fn write_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for r in records {
        writer.serialize(r).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::params(format!("csv: {other:?}")),
    }
}

/// `results.csv` becomes `results.summary.json`.
pub fn summary_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("summary.json")
}

/// Writes the CSV to `path` and the summary next to it.
pub fn write_outputs(result: &ExperimentResult, path: &Path) -> Result<PathBuf> {
    write_csv(&result.records, std::io::BufWriter::new(std::fs::File::create(path)?))?;
    let sidecar = summary_path(path);
    std::fs::write(&sidecar, serde_json::to_string_pretty(&result.summary)? + "\n")?;
    Ok(sidecar)
}
