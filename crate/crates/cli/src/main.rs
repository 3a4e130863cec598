use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use bigan_core::bounds::{error_budget, rate_bound, Architecture, StochasticModel};
use bigan_core::cpwl::{build_transport_pair, verify_bijection, DEFAULT_LAMBDA};
use bigan_core::data::sample;
use bigan_core::experiment::{
    fit_rate, read_rate_csv, run_rate_experiment, write_manifest, ExperimentConfig,
};
use bigan_core::ipm::{dudley_distance, wasserstein1, SolverStatus};
use bigan_core::trainer::{train, TrainingConfig};
use bigan_core::{DataSpec, DiscreteMeasure, Error, LipschitzSpec};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(
    name = "bigan",
    version,
    about = "Bidirectional GAN estimation toolkit"
)]
struct Cli {
    /// TOML file with `[experiment]` and `[train]` tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the interpolating generator/encoder pair on sampled data.
    Construct {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
    },
    /// Distance between two point clouds given as CSV.
    Ipm {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long, value_enum, default_value_t = Metric::Dudley)]
        metric: Metric,
        /// Sup bound of the Dudley class.
        #[arg(long, default_value_t = 1.0)]
        bound: f64,
        #[arg(long, default_value_t = 1.0)]
        lip: f64,
    },
    /// Error budget at one sample size and the rate curve over a grid.
    Bound {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Sup bound; defaults to √2·log n.
        #[arg(long)]
        bound: Option<f64>,
        /// Measured E2 to include in the budget.
        #[arg(long, default_value_t = 0.0)]
        e2: f64,
        /// Prefactor of the sized architecture.
        #[arg(long, default_value_t = 12.0)]
        c: f64,
        #[arg(long, value_enum, default_value_t = Model::Explicit)]
        model: Model,
        /// Sample sizes for the rate curve.
        #[arg(long, value_delimiter = ',', default_values_t = [64u64, 128, 256, 512, 1024])]
        grid: Vec<u64>,
    },
    /// Adversarial training on sampled data.
    Train {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Rate experiment over the configured grid.
    Experiment {
        #[arg(long)]
        timing: bool,
    },
    /// Log-log fit of a rate CSV.
    Fit {
        #[arg(long)]
        csv: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Dudley,
    W1,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Explicit,
    Cd,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    experiment: Option<ExperimentConfig>,
    train: Option<toml::Table>,
}

fn load_config(path: Option<&Path>) -> anyhow::Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, &s).with_context(|| format!("writing {}", path.display()))?;
    Ok(s)
}

fn write_points(path: &Path, points: &[Vec<f64>]) -> anyhow::Result<()> {
    let dim = points.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((0..dim).map(|i| format!("x{i}")))?;
    for p in points {
        w.write_record(p.iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads points, one per row. A column headed `weight` holds the masses;
/// without one the measure is uniform.
fn read_measure(path: &Path) -> anyhow::Result<DiscreteMeasure> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let weight_col = r
        .headers()?
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case("weight"));
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut p = Vec::with_capacity(rec.len());
        for (i, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().with_context(|| {
                format!("{}: row {}: bad number {field:?}", path.display(), line + 1)
            })?;
            if Some(i) == weight_col {
                weights.push(v);
            } else {
                p.push(v);
            }
        }
        points.push(p);
    }
    let m = match weight_col {
        Some(_) => DiscreteMeasure::normalized(points, weights)?,
        None => DiscreteMeasure::uniform(points)?,
    };
    Ok(m)
}

#[derive(Serialize)]
struct ConstructSummary {
    n: usize,
    d: usize,
    k: usize,
    lambda: f64,
    seed: u64,
    generator_error: f64,
    encoder_error: f64,
    generator_width: usize,
    generator_depth: usize,
    encoder_width: usize,
    encoder_depth: usize,
}

fn construct(
    out: &Path,
    seed: u64,
    n: usize,
    d: usize,
    k: usize,
    lambda: f64,
) -> anyhow::Result<()> {
    let z = sample(&DataSpec::standard_gaussian(k), n, seed)?;
    let x = sample(&DataSpec::standard_gaussian(d), n, seed.wrapping_add(1))?;
    let pair = build_transport_pair(&z, &x, lambda)?;
    let (g, e) = pair.networks()?;
    let report = verify_bijection(&g, &e, &z, &x, &pair.pairing, 1e-9)?;
    if !report.pass {
        log::warn!(
            "bijection check above 1e-9: generator {:e}, encoder {:e}",
            report.generator_error,
            report.encoder_error
        );
    }
    fs::write(out.join("generator.json"), g.to_json()?)?;
    fs::write(out.join("encoder.json"), e.to_json()?)?;
    write_points(&out.join("latent.csv"), &z)?;
    write_points(&out.join("data.csv"), &x)?;
    let (gd, ed) = (g.dims(), e.dims());
    let summary = ConstructSummary {
        n,
        d,
        k,
        lambda,
        seed,
        generator_error: report.generator_error,
        encoder_error: report.encoder_error,
        generator_width: gd.width,
        generator_depth: gd.depth,
        encoder_width: ed.width,
        encoder_depth: ed.depth,
    };
    print!("{}", write_json(&out.join("construct.json"), &summary)?);
    Ok(())
}

#[derive(Serialize)]
struct IpmOutput {
    value: f64,
    status: &'static str,
    n_mu: usize,
    n_nu: usize,
}

fn ipm(
    out: &Path,
    mu: &Path,
    nu: &Path,
    metric: Metric,
    bound: f64,
    lip: f64,
) -> anyhow::Result<()> {
    let (mu, nu) = (read_measure(mu)?, read_measure(nu)?);
    let result = match metric {
        Metric::Dudley => dudley_distance(&mu, &nu, &LipschitzSpec::new(lip, bound, bound)?)?,
        Metric::W1 => wasserstein1(&mu, &nu)?,
    };
    let status = match result.status {
        SolverStatus::Optimal => "optimal",
        SolverStatus::IterationLimit => "iteration_limit",
    };
    let output = IpmOutput {
        value: result.value,
        status,
        n_mu: mu.len(),
        n_nu: nu.len(),
    };
    print!("{}", write_json(&out.join("ipm.json"), &output)?);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bound(
    out: &Path,
    n: u64,
    d: usize,
    k: usize,
    b: Option<f64>,
    e2: f64,
    c: f64,
    model: Model,
    grid: &[u64],
) -> anyhow::Result<()> {
    let b = b.unwrap_or_else(|| 2f64.sqrt() * (n.max(2) as f64).ln());
    let model = match model {
        Model::Explicit => StochasticModel::Explicit,
        Model::Cd => StochasticModel::Cd,
    };
    let budget = error_budget(n, d, k, b, Architecture::rate_sized(n, d, k, c), e2, model)?;
    for w in &budget.warnings {
        log::warn!("{w}");
    }
    let mut rates = csv::Writer::from_path(out.join("rate_curve.csv"))?;
    rates.write_record(["n", "rate_bound"])?;
    for &m in grid {
        rates.write_record([m.to_string(), rate_bound(m as f64, d, k, 1.0).to_string()])?;
    }
    rates.flush()?;
    print!("{}", write_json(&out.join("bound.json"), &budget)?);
    Ok(())
}

/// `[train]` keys override the sizes derived from `(n, d, k)`.
fn training_config(
    n: usize,
    d: usize,
    k: usize,
    overrides: Option<&toml::Table>,
    steps: Option<usize>,
    seed: u64,
) -> anyhow::Result<TrainingConfig> {
    let mut value = serde_json::to_value(TrainingConfig::for_problem(n, d, k))?;
    if let Some(table) = overrides {
        let obj = value
            .as_object_mut()
            .ok_or_else(|| anyhow!("training config is not an object"))?;
        for (key, v) in table {
            if !obj.contains_key(key) {
                bail!("unknown [train] key {key:?}");
            }
            obj.insert(key.clone(), serde_json::to_value(v)?);
        }
    }
    let mut cfg: TrainingConfig = serde_json::from_value(value)?;
    if let Some(s) = steps {
        cfg.outer_steps = s;
    }
    cfg.seed = seed;
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct TrainSummary {
    config: TrainingConfig,
    final_objective: f64,
    steps: usize,
}

fn train_cmd(out: &Path, cfg: TrainingConfig) -> anyhow::Result<()> {
    for w in cfg.sizing_warnings() {
        log::warn!("{w}");
    }
    let z = sample(&DataSpec::standard_gaussian(cfg.k), cfg.n, cfg.seed)?;
    let x = sample(
        &DataSpec::standard_gaussian(cfg.d),
        cfg.n,
        cfg.seed.wrapping_add(1),
    )?;
    let state = match train(&cfg, &z, &x) {
        Ok(s) => s,
        Err(Error::Divergence {
            step,
            objective,
            trace,
        }) => {
            write_trace(&out.join("trace.csv"), &trace)?;
            bail!("training diverged at step {step} with objective {objective}");
        }
        Err(e) => return Err(e.into()),
    };
    write_trace(&out.join("trace.csv"), &state.trace)?;
    fs::write(out.join("generator.json"), state.g.to_json()?)?;
    fs::write(out.join("encoder.json"), state.e.to_json()?)?;
    fs::write(out.join("discriminator.json"), state.f.to_json()?)?;
    let summary = TrainSummary {
        final_objective: state.trace.last().copied().unwrap_or(f64::NAN),
        steps: state.trace.len(),
        config: cfg,
    };
    print!("{}", write_json(&out.join("train.json"), &summary)?);
    Ok(())
}

fn write_trace(path: &Path, trace: &[f64]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "objective"])?;
    for (i, v) in trace.iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Returns whether every grid point succeeded.
fn experiment(
    out: &Path,
    mut cfg: ExperimentConfig,
    seed: Option<u64>,
    timing: bool,
) -> anyhow::Result<bool> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.record_timing |= timing;
    cfg.validate()?;
    write_manifest(&cfg, &out.join("manifest.json"))?;
    let outcome = run_rate_experiment(&cfg, &out.join("rate.csv"))?;
    log::info!(
        "{} rows ({} resumed), {} failures",
        outcome.points.len(),
        outcome.resumed,
        outcome.failures.len()
    );
    for f in &outcome.failures {
        eprintln!("n={} trial={}: {}", f.n, f.trial, f.message);
    }
    Ok(outcome.failures.is_empty())
}

fn fit(out: &Path, csv: &Path) -> anyhow::Result<()> {
    let points = read_rate_csv(csv).with_context(|| format!("reading {}", csv.display()))?;
    let result = fit_rate(&points)?;
    print!("{}", write_json(&out.join("fit.json"), &result)?);
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let config = load_config(cli.config.as_deref())?;
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let out = cli.out.as_path();
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Construct { n, d, k, lambda } => construct(out, seed, n, d, k, lambda)?,
        Command::Ipm {
            mu,
            nu,
            metric,
            bound: b,
            lip,
        } => ipm(out, &mu, &nu, metric, b, lip)?,
        Command::Bound {
            n,
            d,
            k,
            bound: b,
            e2,
            c,
            model,
            grid,
        } => bound(out, n, d, k, b, e2, c, model, &grid)?,
        Command::Train { n, d, k, steps } => train_cmd(
            out,
            training_config(n, d, k, config.train.as_ref(), steps, seed)?,
        )?,
        Command::Experiment { timing } => {
            return experiment(out, config.experiment.unwrap_or_default(), cli.seed, timing)
        }
        Command::Fit { csv } => fit(out, &csv)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
