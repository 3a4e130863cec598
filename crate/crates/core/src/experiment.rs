//! Rate experiment: per `(n, trial)` fit a generator/encoder pair on one
//! sample, measure the Dudley distance between the joint laws on a ghost
//! sample, and fit the log-log slope.
//!
//! Grid points run on the rayon pool. A single writer appends finished rows
//! to the CSV in canonical `(n, trial)` order, so an interrupted file is
//! always a prefix of the complete one and a rerun only fills the rest.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::rate_bound;
use crate::cpwl::{build_transport_pair, DEFAULT_LAMBDA};
use crate::data::{sample, DataSpec};
use crate::error::{Error, Result};
use crate::ipm::{dudley_distance, joint_pushforward, restrict_to_ball, JointOrder, LipschitzSpec};
use crate::relu_net::ReluNetwork;
use crate::trainer::{train, TrainingConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Interpolating CPwL pair built on the training sample.
    Constructed,
    /// Pair fitted by adversarial training.
    Trained,
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub mode: Mode,
    pub d: usize,
    pub k: usize,
    pub measured_dudley: f64,
    pub bound: f64,
    /// Zero unless timing was requested, so reruns stay byte-identical.
    pub wall_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Data distribution on `ℝ^d`.
    pub mu: DataSpec,
    /// Reference distribution on `ℝ^k`.
    pub nu: DataSpec,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub mode: Mode,
    /// Sup bound of the evaluation class; `None` means `√2·log(max n)`.
    pub bound: Option<f64>,
    pub seed: u64,
    /// Outer steps for `Mode::Trained`.
    pub train_steps: usize,
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mu: DataSpec::standard_gaussian(2),
            nu: DataSpec::standard_gaussian(1),
            n_grid: vec![64, 128, 256, 512, 1024],
            trials: 10,
            mode: Mode::Constructed,
            bound: None,
            seed: 0,
            train_steps: 200,
            record_timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.mu.validate()?;
        self.nu.validate()?;
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err(Error::InvalidInput(
                "n grid must be nonempty with positive entries".into(),
            ));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "n grid must be strictly ascending".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        if let Some(b) = self.bound {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "bound must be positive, got {b}"
                )));
            }
        }
        Ok(())
    }

    pub fn bound(&self) -> f64 {
        let max_n = self.n_grid.iter().copied().max().unwrap_or(2).max(2);
        self.bound
            .unwrap_or_else(|| 2f64.sqrt() * (max_n as f64).ln())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of grid point `(n, trial)` under the experiment seed.
pub fn point_seed(base: u64, n: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ n as u64) ^ trial as u64)
}

/// Named sub-stream of a point seed.
#[derive(Clone, Copy, Debug)]
pub enum Stream {
    TrainLatent = 1,
    TrainData = 2,
    GhostLatent = 3,
    GhostData = 4,
    Training = 5,
}

pub fn stream_seed(point: u64, stream: Stream) -> u64 {
    splitmix64(point ^ (stream as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Samples of one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSamples {
    pub train_z: Vec<Vec<f64>>,
    pub train_x: Vec<Vec<f64>>,
    pub ghost_z: Vec<Vec<f64>>,
    pub ghost_x: Vec<Vec<f64>>,
}

pub fn point_samples(cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<PointSamples> {
    Ok(PointSamples {
        train_z: sample(&cfg.nu, n, stream_seed(seed, Stream::TrainLatent))?,
        train_x: sample(&cfg.mu, n, stream_seed(seed, Stream::TrainData))?,
        ghost_z: sample(&cfg.nu, n, stream_seed(seed, Stream::GhostLatent))?,
        ghost_x: sample(&cfg.mu, n, stream_seed(seed, Stream::GhostData))?,
    })
}

/// Generator and encoder fitted on the training half of a grid point.
pub fn fit_pair(
    cfg: &ExperimentConfig,
    n: usize,
    seed: u64,
    s: &PointSamples,
) -> Result<(ReluNetwork, ReluNetwork)> {
    match cfg.mode {
        Mode::Constructed => {
            build_transport_pair(&s.train_z, &s.train_x, DEFAULT_LAMBDA)?.networks()
        }
        Mode::Trained => {
            let mut tc = TrainingConfig::for_problem(n, cfg.mu.dim, cfg.nu.dim);
            tc.outer_steps = cfg.train_steps;
            tc.seed = stream_seed(seed, Stream::Training);
            let state = train(&tc, &s.train_z, &s.train_x)?;
            Ok((state.g, state.e))
        }
    }
}

/// Dudley distance between the ghost-sample joints, each restricted to the
/// ball of radius `√2·log n`.
pub fn ghost_joint_distance(
    g: &ReluNetwork,
    e: &ReluNetwork,
    ghost_z: &[Vec<f64>],
    ghost_x: &[Vec<f64>],
    bound: f64,
) -> Result<f64> {
    let n = ghost_z.len().max(2) as f64;
    let radius = 2f64.sqrt() * n.ln();
    let (gen, out_g) = restrict_to_ball(
        &joint_pushforward(ghost_z, g, JointOrder::OutputFirst)?,
        radius,
    )?;
    let (enc, out_e) = restrict_to_ball(
        &joint_pushforward(ghost_x, e, JointOrder::InputFirst)?,
        radius,
    )?;
    if out_g > 0.0 || out_e > 0.0 {
        log::debug!(
            "restriction to radius {radius} dropped mass {out_g} (generator), {out_e} (encoder)"
        );
    }
    Ok(dudley_distance(&gen, &enc, &LipschitzSpec::bounded(bound)?)?.value)
}

/// Computes one grid point.
pub fn run_point(cfg: &ExperimentConfig, n: usize, trial: usize) -> Result<RatePoint> {
    let start = Instant::now();
    let seed = point_seed(cfg.seed, n, trial);
    let s = point_samples(cfg, n, seed)?;
    let (g, e) = fit_pair(cfg, n, seed, &s)?;
    let measured = ghost_joint_distance(&g, &e, &s.ghost_z, &s.ghost_x, cfg.bound())?;
    Ok(RatePoint {
        n,
        trial,
        seed,
        mode: cfg.mode,
        d: cfg.mu.dim,
        k: cfg.nu.dim,
        measured_dudley: measured,
        bound: rate_bound(n as f64, cfg.mu.dim, cfg.nu.dim, 1.0),
        wall_ms: if cfg.record_timing {
            start.elapsed().as_millis() as u64
        } else {
            0
        },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointFailure {
    pub n: usize,
    pub trial: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutcome {
    /// All rows of the CSV after the run, in file order.
    pub points: Vec<RatePoint>,
    pub failures: Vec<PointFailure>,
    /// Rows found already complete on entry.
    pub resumed: usize,
}

/// Drops a partially written trailing line and returns the complete rows.
fn load_existing(path: &Path) -> Result<Vec<RatePoint>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let keep = match bytes.iter().rposition(|&b| b == b'\n') {
        Some(i) => i + 1,
        None => 0,
    };
    if keep < bytes.len() {
        log::warn!("truncating partial trailing row in {}", path.display());
        OpenOptions::new()
            .write(true)
            .open(path)?
            .set_len(keep as u64)?;
        bytes.truncate(keep);
    }
    if bytes.is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Reads a rate CSV.
pub fn read_rate_csv(path: &Path) -> Result<Vec<RatePoint>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

fn row_bytes(p: &RatePoint, header: bool) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(header)
        .from_writer(Vec::new());
    w.serialize(p)?;
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Runs the grid, appending rows to `csv_path` and skipping rows already present.
///
/// Per-point failures are logged and reported in the outcome; only I/O and
/// configuration errors abort.
pub fn run_rate_experiment(cfg: &ExperimentConfig, csv_path: &Path) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let mut points = load_existing(csv_path)?;
    let done: HashSet<(usize, usize, u64)> =
        points.iter().map(|p| (p.n, p.trial, p.seed)).collect();
    let resumed = points.len();

    let tasks: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .filter(|&(n, t)| !done.contains(&(n, t, point_seed(cfg.seed, n, t))))
        .collect();

    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(csv_path)?;
    let mut need_header = points.is_empty() && file.metadata()?.len() == 0;
    let mut failures = Vec::new();

    let (tx, rx) = mpsc::channel();
    let writer_result: Result<()> = std::thread::scope(|scope| {
        let tasks = &tasks;
        scope.spawn(move || {
            tasks
                .par_iter()
                .enumerate()
                .for_each_with(tx, |tx, (idx, &(n, trial))| {
                    let _ = tx.send((idx, run_point(cfg, n, trial)));
                });
        });
        let mut pending = BTreeMap::new();
        let mut next = 0;
        for (idx, result) in rx {
            pending.insert(idx, result);
            while let Some(result) = pending.remove(&next) {
                let (n, trial) = tasks[next];
                match result {
                    Ok(point) => {
                        file.write_all(&row_bytes(&point, need_header)?)?;
                        file.flush()?;
                        need_header = false;
                        points.push(point);
                    }
                    Err(e) => {
                        log::warn!("grid point n={n} trial={trial} failed: {e}");
                        failures.push(PointFailure {
                            n,
                            trial,
                            message: e.to_string(),
                        });
                    }
                }
                next += 1;
            }
        }
        Ok(())
    });
    writer_result?;
    Ok(ExperimentOutcome {
        points,
        failures,
        resumed,
    })
}

/// Reproducibility record written next to the CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub bound: f64,
    pub seeds: Vec<ManifestSeed>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestSeed {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
}

/// `git describe`-style version: the build-time `BIGAN_VERSION` if set, else the crate version.
pub fn version_string() -> String {
    option_env!("BIGAN_VERSION")
        .map_or_else(|| format!("v{}", env!("CARGO_PKG_VERSION")), str::to_owned)
}

pub fn manifest(cfg: &ExperimentConfig) -> Manifest {
    Manifest {
        version: version_string(),
        config: cfg.clone(),
        bound: cfg.bound(),
        seeds: cfg
            .n_grid
            .iter()
            .flat_map(|&n| {
                (0..cfg.trials).map(move |trial| ManifestSeed {
                    n,
                    trial,
                    seed: point_seed(cfg.seed, n, trial),
                })
            })
            .collect(),
    }
}

pub fn write_manifest(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(&manifest(cfg))?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

/// Ordinary least squares of `log(mean measured)` on `log n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; 0 for an exact fit.
    pub stderr: f64,
    /// Distinct `n` values used.
    pub points: usize,
    /// Rows dropped for nonpositive measurements.
    pub excluded: usize,
}

/// Fits `log y = intercept + slope·log n` after averaging trials at each `n`.
pub fn fit_rate(points: &[RatePoint]) -> Result<RateFit> {
    let mut by_n: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    let mut excluded = 0;
    for p in points {
        if p.measured_dudley > 0.0 && p.measured_dudley.is_finite() {
            let e = by_n.entry(p.n).or_insert((0.0, 0));
            e.0 += p.measured_dudley;
            e.1 += 1;
        } else {
            excluded += 1;
        }
    }
    if excluded > 0 {
        log::warn!("excluded {excluded} nonpositive measurements from the rate fit");
    }
    if by_n.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "rate fit needs at least 3 distinct n with positive measurements, got {}",
            by_n.len()
        )));
    }
    let xy: Vec<(f64, f64)> = by_n
        .iter()
        .map(|(&n, &(s, c))| ((n as f64).ln(), (s / c as f64).ln()))
        .collect();
    let m = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / m;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xy
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    Ok(RateFit {
        slope,
        intercept,
        stderr: (sse / (m - 2.0) / sxx).sqrt(),
        points: xy.len(),
        excluded,
    })
}
