//! `cnngp` command-line driver: simulate, prepare, fit, predict, evaluate,
//! prior-phi and experiment.
//!
//! Exit codes: 0 success, 2 validation error, 3 runtime or numerical error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use cnngp::clustering::{select_radius, ClusterModel};
use cnngp::evaluation::{mean_crps, point_metrics, waic, MetricReport};
use cnngp::geometry::{build_neighbor_graph, maxmin_order, DesignMatrix, NeighborGraph};
use cnngp::inference::{phi_prior_from_distances, run_chain, PriorSpec, SamplerConfig};
use cnngp::prediction::{predict, PredictionSettings};
use cnngp::simharness::{generate_dataset, run_experiment, write_experiment, ClusterChoice, ExperimentConfig, ScenarioSpec};
use cnngp::{io, Clusters, Dataset, Error};

#[derive(Parser)]
#[command(name = "cnngp", version, about = "NNGP and clustered NNGP spatial regression")]
struct Cli {
    /// Worker threads (also read from CNNGP_THREADS).
    #[arg(long, global = true, env = "CNNGP_THREADS", default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a data set from a scenario config.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Replicate index; the seed is `scenario.seed + replicate`.
        #[arg(long, default_value_t = 0)]
        replicate: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ordering, neighbor graph and (optionally) cluster model.
    Prepare {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the MCMC sampler.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        /// Directory written by `prepare`.
        #[arg(long)]
        prepared: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Posterior-predictive summaries at new locations.
    Predict {
        #[command(flatten)]
        data: DataArgs,
        /// Directory written by `fit`.
        #[arg(long)]
        fit: PathBuf,
        /// `id,x,y` CSV of prediction locations.
        #[arg(long)]
        coords: PathBuf,
        /// `id,x0,...` CSV; defaults to an intercept-only design.
        #[arg(long)]
        design: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Prediction CSV to write.
        #[arg(long)]
        out: PathBuf,
        /// Optional CSV of raw `y*` draws (needed for CRPS).
        #[arg(long)]
        draws: Option<PathBuf>,
    },
    /// Score predictions against observed values.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        /// `id,y` CSV of true values at the prediction locations.
        #[arg(long)]
        truth: PathBuf,
        /// Raw draws written by `predict --draws`.
        #[arg(long)]
        draws: Option<PathBuf>,
        /// Fit directory and its training data, for WAIC and fitting time.
        #[arg(long, requires = "data_dir")]
        fit: Option<PathBuf>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Uniform prior bounds for phi from subsampled pairwise distances.
    PriorPhi {
        #[arg(long)]
        coords: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        subsample: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Replicate experiment comparing model configurations.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A data directory with `coords.csv`, `design.csv` and `response.csv`.
#[derive(Args)]
struct DataArgs {
    #[arg(long = "data")]
    dir: PathBuf,
}

impl DataArgs {
    fn load(&self) -> anyhow::Result<Dataset> {
        load_dataset(&self.dir)
    }
}

fn load_dataset(dir: &Path) -> anyhow::Result<Dataset> {
    let files = [dir.join("coords.csv"), dir.join("design.csv"), dir.join("response.csv")];
    for f in &files {
        require(f)?;
    }
    Ok(io::read_dataset(&files[0], &files[1], &files[2])?)
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Error::InvalidInput(msg.into()))
}

fn require(path: &Path) -> anyhow::Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(invalid(format!("missing file {}", path.display())))
    }
}

fn read_config<C: DeserializeOwned + Default>(path: Option<&Path>) -> anyhow::Result<C> {
    match path {
        None => Ok(C::default()),
        Some(p) => {
            require(p)?;
            io::read_json(p).with_context(|| format!("config {}", p.display()))
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PrepareConfig {
    m: Option<usize>,
    /// Absent: NNGP only, no cluster model.
    clustering: Option<ClusterChoice>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PrepareReport {
    n: usize,
    m: usize,
    kappa: Option<usize>,
    radius: Option<f64>,
    elbow: Option<f64>,
    elapsed_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModelMode {
    #[default]
    Nngp,
    Cnngp,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FitConfig {
    mode: ModelMode,
    sampler: SamplerConfig,
    priors: PriorSpec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    mode: ModelMode,
    n: usize,
    m: usize,
    kappa: Option<usize>,
    n_units: usize,
    acceptance_rate: f64,
    burn_in_acceptance: f64,
    mh_step: [f64; 2],
    proposals: usize,
    cholesky_count: usize,
    cholesky_per_proposal: f64,
    timings: cnngp::inference::PhaseTimings,
    stored_draws: usize,
    stored_w_draws: usize,
    config: FitConfig,
}

fn simulate(config: Option<&Path>, replicate: usize, out: &Path) -> anyhow::Result<()> {
    let spec: ScenarioSpec = read_config(config)?;
    spec.validate()?;
    let seed = spec.seed.wrapping_add(replicate as u64);
    let sim = generate_dataset::<f64>(&spec, seed)?;
    std::fs::create_dir_all(out)?;
    io::write_dataset(&out.join("coords.csv"), &out.join("design.csv"), &out.join("response.csv"), &sim.dataset)?;
    io::write_json(
        &out.join("truth.json"),
        &serde_json::json!({ "scenario": spec, "seed": seed, "w": sim.w }),
    )?;
    eprintln!("simulated {} locations into {}", sim.dataset.len(), out.display());
    Ok(())
}

fn prepare(data: &DataArgs, config: Option<&Path>, out: &Path) -> anyhow::Result<()> {
    let cfg: PrepareConfig = read_config(config)?;
    let ds = data.load()?;
    let start = Instant::now();
    let m = cfg.m.unwrap_or(10);
    let order = maxmin_order(ds.coords())?;
    let graph = build_neighbor_graph(ds.coords(), &order, m)?;
    std::fs::create_dir_all(out)?;
    io::write_json(&out.join("graph.json"), &graph)?;
    let mut report = PrepareReport {
        n: ds.len(),
        m,
        kappa: None,
        radius: None,
        elbow: None,
        elapsed_seconds: 0.0,
    };
    if let Some(choice) = cfg.clustering {
        let mut settings = choice.settings.clone();
        let (sweep, elbow) = select_radius(&graph, ds.coords(), &settings, choice.sweep_points)?;
        let mut csv = String::from("radius,kappa\n");
        for (r, k) in &sweep.points {
            csv.push_str(&format!("{r:.16e},{k}\n"));
        }
        std::fs::write(out.join("sweep.csv"), csv)?;
        settings.radius = choice.radius.unwrap_or(elbow);
        let clusters = ClusterModel::fit(&graph, ds.coords(), &settings)?;
        io::write_json(&out.join("clusters.json"), &clusters)?;
        report.kappa = Some(clusters.kappa());
        report.radius = Some(settings.radius);
        report.elbow = sweep.elbow;
    }
    report.elapsed_seconds = start.elapsed().as_secs_f64();
    io::write_json(&out.join("prepare.json"), &report)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn fit(data: &DataArgs, prepared: &Path, config: Option<&Path>, out: &Path) -> anyhow::Result<()> {
    let cfg: FitConfig = read_config(config)?;
    let ds = data.load()?;
    let graph_path = prepared.join("graph.json");
    require(&graph_path)?;
    let graph: NeighborGraph = io::read_json(&graph_path)?;
    let clusters: Option<Clusters> = match cfg.mode {
        ModelMode::Nngp => None,
        ModelMode::Cnngp => {
            let p = prepared.join("clusters.json");
            if !p.exists() {
                return Err(invalid(format!("cnngp mode needs {}; run prepare with clustering", p.display())));
            }
            Some(io::read_json(&p)?)
        }
    };
    if let Some(c) = &clusters {
        c.validate(&graph, ds.coords())?;
    }
    let chain = run_chain(&ds, &graph, clusters.as_ref(), cfg.priors, cfg.sampler.clone())?;
    std::fs::create_dir_all(out)?;
    io::write_chain(&out.join("chain.csv"), &chain)?;
    io::write_w_draws(&out.join("w_draws.csv"), &chain)?;
    let manifest = Manifest {
        mode: cfg.mode,
        n: ds.len(),
        m: graph.m(),
        kappa: clusters.as_ref().map(|c| c.kappa()),
        n_units: chain.n_units,
        acceptance_rate: chain.acceptance_rate,
        burn_in_acceptance: chain.burn_in_acceptance,
        mh_step: chain.mh_step,
        proposals: chain.proposals,
        cholesky_count: chain.cholesky_count,
        cholesky_per_proposal: chain.cholesky_per_proposal(),
        timings: chain.timings,
        stored_draws: chain.draws.len(),
        stored_w_draws: chain.w_draws.len(),
        config: cfg,
    };
    io::write_json(&out.join("manifest.json"), &manifest)?;
    eprintln!(
        "fit {:?}: acceptance {:.3}, {:.1} s",
        manifest.mode, manifest.acceptance_rate, manifest.timings.total
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn predict_cmd(
    data: &DataArgs,
    fit_dir: &Path,
    coords: &Path,
    design: Option<&Path>,
    config: Option<&Path>,
    out: &Path,
    draws_out: Option<&Path>,
) -> anyhow::Result<()> {
    let mut settings: PredictionSettings = read_config(config)?;
    settings.keep_draws = draws_out.is_some();
    let ds = data.load()?;
    let (chain_csv, w_csv) = (fit_dir.join("chain.csv"), fit_dir.join("w_draws.csv"));
    require(&chain_csv)?;
    require(&w_csv)?;
    let chain = io::read_chain(&chain_csv, &w_csv)?;
    require(coords)?;
    let (_, new_coords) = io::read_coords(coords)?;
    let x_new = match design {
        Some(p) => {
            require(p)?;
            io::read_design(p)?.1
        }
        None => DesignMatrix::intercept_only(new_coords.len()),
    };
    let pred = predict(&ds, &new_coords, &x_new, &chain, &settings)?;
    io::write_predictions(out, &new_coords, &pred)?;
    if let (Some(path), Some(draws)) = (draws_out, pred.draws.as_ref()) {
        let mut s = String::from("id");
        for k in 0..draws.first().map_or(0, Vec::len) {
            s.push_str(&format!(",d{k}"));
        }
        s.push('\n');
        for (i, row) in draws.iter().enumerate() {
            s.push_str(&i.to_string());
            for v in row {
                s.push_str(&format!(",{v:.16e}"));
            }
            s.push('\n');
        }
        std::fs::write(path, s)?;
    }
    eprintln!("predicted {} locations from {} draws", pred.len(), chain.w_draws.len().div_ceil(settings.thin));
    Ok(())
}

fn read_draws(path: &Path) -> anyhow::Result<Vec<Vec<f64>>> {
    require(path)?;
    let mut rdr = csv::Reader::from_path(path)?;
    if rdr.headers()?.get(0) != Some("id") {
        return Err(invalid(format!("{}: expected header id,d0,...", path.display())));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .skip(1)
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        out.push(row);
    }
    Ok(out)
}

fn evaluate(
    predictions: &Path,
    truth: &Path,
    draws: Option<&Path>,
    fit_dir: Option<&Path>,
    data_dir: Option<&Path>,
    out: &Path,
) -> anyhow::Result<()> {
    require(predictions)?;
    require(truth)?;
    let rows = io::read_predictions(predictions)?;
    let (_, y) = io::read_response(truth)?;
    if rows.len() != y.len() {
        return Err(invalid("predictions and truth differ in length"));
    }
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let pm = point_metrics(&col(2), &col(4), &col(5), &y)?;
    let crps = match draws {
        Some(p) => mean_crps(&read_draws(p)?, &y)?,
        None => f64::NAN,
    };
    let (waic_value, hours) = match (fit_dir, data_dir) {
        (Some(f), Some(d)) => {
            let ds = load_dataset(d)?;
            let chain = io::read_chain(&f.join("chain.csv"), &f.join("w_draws.csv"))?;
            let manifest: serde_json::Value = io::read_json(&f.join("manifest.json")).unwrap_or_default();
            let secs = manifest["timings"]["total"].as_f64().unwrap_or(f64::NAN);
            (waic(&chain, &ds)?, secs / 3600.0)
        }
        _ => (f64::NAN, f64::NAN),
    };
    let report = MetricReport {
        crps,
        mae: pm.mae,
        rmspe: pm.rmspe,
        coverage: pm.coverage,
        median_width: pm.median_width,
        waic: waic_value,
        fitting_time_hours: hours,
    };
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("metrics.json"), report.to_json()?)?;
    std::fs::write(out.join("metrics.csv"), report.to_csv())?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn prior_phi(coords: &Path, subsample: usize, seed: u64) -> anyhow::Result<()> {
    require(coords)?;
    let (_, pts) = io::read_coords(coords)?;
    let prior = phi_prior_from_distances(&pts, subsample, seed)?;
    if prior.lower >= prior.upper {
        eprintln!("warning: degenerate phi prior ({} = {}); all sampled distances are equal", prior.lower, prior.upper);
    }
    println!("{}", serde_json::to_string(&prior)?);
    Ok(())
}

fn experiment(config: Option<&Path>, out: &Path) -> anyhow::Result<()> {
    let cfg: ExperimentConfig = read_config(config)?;
    let results = run_experiment(&cfg)?;
    write_experiment(out, &cfg, &results)?;
    let failures = results.iter().filter(|r| r.error.is_some()).count();
    eprintln!("{} fits, {failures} failed; results in {}", results.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.threads == 0 {
        bail!(invalid("--threads must be positive"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .context("thread pool")?;
    match &cli.command {
        Command::Simulate { config, replicate, out } => simulate(config.as_deref(), *replicate, out),
        Command::Prepare { data, config, out } => prepare(data, config.as_deref(), out),
        Command::Fit { data, prepared, config, out } => fit(data, prepared, config.as_deref(), out),
        Command::Predict {
            data,
            fit,
            coords,
            design,
            config,
            out,
            draws,
        } => predict_cmd(data, fit, coords, design.as_deref(), config.as_deref(), out, draws.as_deref()),
        Command::Evaluate {
            predictions,
            truth,
            draws,
            fit,
            data_dir,
            out,
        } => evaluate(predictions, truth, draws.as_deref(), fit.as_deref(), data_dir.as_deref(), out),
        Command::PriorPhi { coords, subsample, seed } => prior_phi(coords, *subsample, *seed),
        Command::Experiment { config, out } => experiment(config.as_deref(), out),
    }
}

/// 2 for bad input (including unparsable config or data files), 3 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Sampler { source, .. } if source.is_validation() => 2,
                Error::Json(_) | Error::Csv(_) => 2,
                e if e.is_validation() => 2,
                _ => 3,
            };
        }
        if cause.is::<serde_json::Error>() || cause.is::<csv::Error>() {
            return 2;
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
