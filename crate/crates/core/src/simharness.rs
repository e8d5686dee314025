//! Synthetic data sets, spatially blocked folds and replicate experiments
//! comparing NNGP and cNNGP fits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{select_radius, ClusterModel, ClusterSettings};
use crate::covariance::{CovarianceParams, Kernel};
use crate::evaluation::{mean_crps, median, parameter_summary, point_metrics, waic, MetricReport, ParameterSummary};
use crate::factors::{FactorLayout, JITTER};
use crate::geometry::{build_neighbor_graph, maxmin_order, DesignMatrix, Point2, SpatialDataset};
use crate::inference::{run_chain, PriorSpec, SamplerConfig};
use crate::linalg::cholesky_in_place;
use crate::prediction::{predict, PredictionSettings};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSpec {
    pub n: usize,
    pub phi_true: f64,
    pub sigma2_true: f64,
    pub tau2_true: f64,
    /// Intercept first; every further coefficient gets a N(0, 1) covariate.
    pub beta_true: Vec<f64>,
    pub replicates: usize,
    /// Replicate `r` uses seed `seed + r`.
    pub seed: u64,
    /// Largest `n` simulated with a dense Cholesky factor.
    pub dense_limit: usize,
    /// Neighbors for sequential simulation above `dense_limit`.
    pub simulation_m: usize,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            n: 1_000,
            phi_true: 2.88,
            sigma2_true: 1.0,
            tau2_true: 0.1,
            beta_true: vec![1.0, 5.0],
            replicates: 30,
            seed: 1,
            dense_limit: 15_000,
            simulation_m: 60,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("n must be at least 2"));
        }
        for (name, v) in [("phi_true", self.phi_true), ("sigma2_true", self.sigma2_true)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        if !(self.tau2_true >= 0.0 && self.tau2_true.is_finite()) {
            return Err(Error::invalid("tau2_true must be non-negative"));
        }
        if self.beta_true.is_empty() || self.beta_true.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("beta_true must be a non-empty finite vector"));
        }
        if self.simulation_m == 0 {
            return Err(Error::invalid("simulation_m must be positive"));
        }
        Ok(())
    }

    /// True values in the order of `PosteriorChain::parameter_names`.
    pub fn truths(&self) -> Vec<f64> {
        let mut t = self.beta_true.clone();
        t.extend([self.sigma2_true, self.phi_true, self.tau2_true]);
        t
    }
}

/// A simulated data set together with the latent spatial effects.
#[derive(Debug, Clone)]
pub struct SimulatedData<T> {
    pub dataset: SpatialDataset<T>,
    pub w: Vec<T>,
}

/// Draws `w ~ GP(0, sigma2 exp(-phi d))` at `coords`: exactly through a
/// dense Cholesky factor up to `dense_limit` points, otherwise by
/// sequential conditional simulation on `m` nearest predecessors.
pub fn simulate_w<T: Real, R: Rng + ?Sized>(
    coords: &[Point2<T>],
    params: &CovarianceParams<T>,
    dense_limit: usize,
    m: usize,
    rng: &mut R,
) -> Result<Vec<T>> {
    let n = coords.len();
    let z: Vec<T> = (0..n).map(|_| T::sample_standard_normal(rng)).collect();
    if n <= dense_limit {
        let kernel = Kernel::Exponential;
        let mut c = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                c[i * n + j] = kernel.eval(coords[i].distance(&coords[j]), params);
            }
        }
        if cholesky_in_place(&mut c, n).is_err() {
            for i in 0..n {
                for j in 0..=i {
                    c[i * n + j] = kernel.eval(coords[i].distance(&coords[j]), params);
                }
                c[i * n + i] += T::lit(JITTER) * params.sigma2;
            }
            cholesky_in_place(&mut c, n).map_err(|_| Error::NotPositiveDefinite { unit: 0 })?;
        }
        return Ok((0..n)
            .map(|i| c[i * n..i * n + i + 1].iter().zip(&z).map(|(l, e)| *l * *e).sum())
            .collect());
    }
    let identity: Vec<usize> = (0..n).collect();
    let graph = build_neighbor_graph(coords, &identity, m.min(n - 1))?;
    let factors = FactorLayout::per_location(&graph, coords).build(params)?;
    let mut w = vec![T::zero(); n];
    for i in 0..n {
        let unit = factors.unit_of(i);
        w[i] = factors.conditional_mean(&graph, &w, i) + factors.variance(unit).sqrt() * z[i];
    }
    Ok(w)
}

/// Uniform locations on the unit square, `y = X beta + w + eps`.
pub fn generate_dataset<T: Real>(spec: &ScenarioSpec, seed: u64) -> Result<SimulatedData<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n;
    let coords: Vec<Point2<T>> = (0..n)
        .map(|_| Point2::new(T::sample_unit(&mut rng), T::sample_unit(&mut rng)))
        .collect();
    let p = spec.beta_true.len();
    let covariates: Vec<Vec<T>> = (0..n)
        .map(|_| (1..p).map(|_| T::sample_standard_normal(&mut rng)).collect())
        .collect();
    let design = DesignMatrix::with_intercept(&covariates)?;
    let params = CovarianceParams::new(T::lit(spec.sigma2_true), T::lit(spec.phi_true))?;
    let w = simulate_w(&coords, &params, spec.dense_limit, spec.simulation_m, &mut rng)?;
    let beta: Vec<T> = spec.beta_true.iter().map(|&b| T::lit(b)).collect();
    let tau = T::lit(spec.tau2_true.sqrt());
    let mean = design.mul_vec(&beta);
    let y = (0..n)
        .map(|i| mean[i] + w[i] + tau * T::sample_standard_normal(&mut rng))
        .collect();
    Ok(SimulatedData {
        dataset: SpatialDataset::new(coords, design, y)?,
        w,
    })
}

/// Fold labels (`1..=k`) from a `grid x grid` tiling of the bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub labels: Vec<usize>,
    pub grid: usize,
    pub k: usize,
    /// `[x_min, x_max, y_min, y_max]` of the tiled box.
    pub bounds: [f64; 4],
}

impl FoldAssignment {
    pub fn members(&self, fold: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == fold).collect()
    }

    pub fn complement(&self, fold: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] != fold).collect()
    }
}

/// Square blocks: the occupied blocks are shuffled and dealt round-robin to
/// the folds, so every location inherits the fold of its block.
pub fn spatial_block_folds<T: Real>(coords: &[Point2<T>], grid: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if grid == 0 || k < 2 {
        return Err(Error::invalid("need grid >= 1 and k >= 2"));
    }
    let xs = coords.iter().map(|p| p.x.as_f64());
    let ys = coords.iter().map(|p| p.y.as_f64());
    let fold = |it: &mut dyn Iterator<Item = f64>| it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (x0, x1) = fold(&mut xs.into_iter());
    let (y0, y1) = fold(&mut ys.into_iter());
    let cell = |v: f64, lo: f64, hi: f64| {
        if hi > lo {
            (((v - lo) / (hi - lo) * grid as f64) as usize).min(grid - 1)
        } else {
            0
        }
    };
    let blocks: Vec<usize> = coords
        .iter()
        .map(|p| cell(p.y.as_f64(), y0, y1) * grid + cell(p.x.as_f64(), x0, x1))
        .collect();
    let mut occupied = blocks.clone();
    occupied.sort_unstable();
    occupied.dedup();
    occupied.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; grid * grid];
    for (pos, &b) in occupied.iter().enumerate() {
        fold_of[b] = pos % k + 1;
    }
    Ok(FoldAssignment {
        labels: blocks.iter().map(|&b| fold_of[b]).collect(),
        grid,
        k,
        bounds: [x0, x1, y0, y1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterChoice {
    /// Fixed radius; `None` selects the elbow of the radius sweep.
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default = "default_grid")]
    pub sweep_points: usize,
    #[serde(default)]
    pub settings: ClusterSettings,
}

fn default_grid() -> usize {
    40
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    pub m: usize,
    /// Absent for the NNGP.
    #[serde(default)]
    pub clustering: Option<ClusterChoice>,
}

impl ModelConfig {
    pub fn nngp(m: usize) -> Self {
        Self {
            name: "nngp".into(),
            m,
            clustering: None,
        }
    }

    pub fn cnngp(m: usize, radius: Option<f64>) -> Self {
        Self {
            name: "cnngp".into(),
            m,
            clustering: Some(ClusterChoice {
                radius,
                sweep_points: default_grid(),
                settings: ClusterSettings::default(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FoldSpec {
    pub grid: usize,
    pub k: usize,
}

impl Default for FoldSpec {
    fn default() -> Self {
        Self { grid: 20, k: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    pub models: Vec<ModelConfig>,
    pub sampler: SamplerConfig,
    pub priors: PriorSpec<f64>,
    pub folds: FoldSpec,
    pub prediction: PredictionSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioSpec::default(),
            models: vec![ModelConfig::nngp(10), ModelConfig::cnngp(10, None)],
            sampler: SamplerConfig::default(),
            priors: PriorSpec::default(),
            folds: FoldSpec::default(),
            prediction: PredictionSettings::default(),
        }
    }
}

/// Outcome of one model on one replicate. `error` is set when the fit
/// failed; the remaining fields are then defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub model: String,
    pub seed: u64,
    pub error: Option<String>,
    pub n_train: usize,
    pub n_test: usize,
    pub kappa: Option<usize>,
    pub radius: Option<f64>,
    pub acceptance_rate: f64,
    pub cholesky_per_proposal: f64,
    pub report: MetricReport,
    pub parameters: Vec<ParameterSummary<f64>>,
}

impl ReplicateResult {
    pub fn parameter(&self, name: &str) -> Option<&ParameterSummary<f64>> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

fn fit_one(
    cfg: &ExperimentConfig,
    model: &ModelConfig,
    train: &SpatialDataset<f64>,
    test: &SpatialDataset<f64>,
    seed: u64,
    out: &mut ReplicateResult,
) -> Result<()> {
    let start = Instant::now();
    let order = maxmin_order(train.coords())?;
    let graph = build_neighbor_graph(train.coords(), &order, model.m)?;
    let clusters = match &model.clustering {
        None => None,
        Some(choice) => {
            let mut settings = choice.settings.clone();
            settings.radius = match choice.radius {
                Some(r) => r,
                None => select_radius(&graph, train.coords(), &settings, choice.sweep_points)?.1,
            };
            Some(ClusterModel::fit(&graph, train.coords(), &settings)?)
        }
    };
    let sampler = SamplerConfig {
        seed,
        ..cfg.sampler.clone()
    };
    let chain = run_chain(train, &graph, clusters.as_ref(), cfg.priors, sampler)?;
    let hours = start.elapsed().as_secs_f64() / 3600.0;

    let settings = PredictionSettings {
        keep_draws: true,
        seed,
        ..cfg.prediction.clone()
    };
    let pred = predict(train, test.coords(), test.design(), &chain, &settings)?;
    let y = test.response();
    let pm = point_metrics(&pred.mean, &pred.lower, &pred.upper, y)?;
    out.report = MetricReport {
        crps: mean_crps(pred.draws.as_deref().unwrap_or_default(), y)?,
        mae: pm.mae,
        rmspe: pm.rmspe,
        coverage: pm.coverage,
        median_width: pm.median_width,
        waic: waic(&chain, train)?,
        fitting_time_hours: hours,
    };
    out.parameters = parameter_summary(&chain, Some(&cfg.scenario.truths()))?;
    out.kappa = clusters.as_ref().map(|c| c.kappa());
    out.radius = clusters.as_ref().map(|c| c.radius());
    out.acceptance_rate = chain.acceptance_rate;
    out.cholesky_per_proposal = chain.cholesky_per_proposal();
    Ok(())
}

/// Every model on one simulated replicate; failures are recorded per model.
pub fn run_replicate(cfg: &ExperimentConfig, replicate: usize) -> Result<Vec<ReplicateResult>> {
    let seed = cfg.scenario.seed.wrapping_add(replicate as u64);
    let sim = generate_dataset::<f64>(&cfg.scenario, seed)?;
    let folds = spatial_block_folds(sim.dataset.coords(), cfg.folds.grid, cfg.folds.k, seed)?;
    let train = sim.dataset.subset(&folds.complement(1));
    let test = sim.dataset.subset(&folds.members(1));
    Ok(cfg
        .models
        .iter()
        .map(|model| {
            let mut r = ReplicateResult {
                replicate,
                model: model.name.clone(),
                seed,
                error: None,
                n_train: train.len(),
                n_test: test.len(),
                kappa: None,
                radius: None,
                acceptance_rate: f64::NAN,
                cholesky_per_proposal: f64::NAN,
                report: MetricReport::default(),
                parameters: Vec::new(),
            };
            if test.is_empty() {
                r.error = Some("empty holdout fold".into());
            } else if let Err(e) = fit_one(cfg, model, &train, &test, seed, &mut r) {
                r.error = Some(e.to_string());
            }
            r
        })
        .collect())
}

/// All replicates (in parallel on the current rayon pool), ordered by
/// replicate then model.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ReplicateResult>> {
    cfg.scenario.validate()?;
    cfg.sampler.validate()?;
    cfg.priors.validate()?;
    if cfg.models.is_empty() {
        return Err(Error::invalid("no models configured"));
    }
    let nested = (0..cfg.scenario.replicates)
        .into_par_iter()
        .map(|r| run_replicate(cfg, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(nested.into_iter().flatten().collect())
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per replicate and model. Wall-clock fitting time is included, so
/// this file is not byte-reproducible.
pub fn replicate_csv(results: &[ReplicateResult]) -> String {
    let names: Vec<String> = results
        .iter()
        .find(|r| !r.parameters.is_empty())
        .map(|r| r.parameters.iter().map(|p| p.name.clone()).collect())
        .unwrap_or_default();
    let mut s = String::from("replicate,model,seed,status,n_train,n_test,kappa,radius,acceptance_rate,");
    s.push_str(MetricReport::CSV_HEADER);
    for n in &names {
        write!(s, ",{n}_mean,{n}_lower,{n}_upper,{n}_captured").unwrap();
    }
    s.push('\n');
    for r in results {
        write!(
            s,
            "{},{},{},{},{},{},{},{},{:.16e},{}",
            r.replicate,
            r.model,
            r.seed,
            r.error.as_deref().map_or("ok".into(), |e| format!("\"error: {}\"", e.replace('"', "'"))),
            r.n_train,
            r.n_test,
            opt(r.kappa),
            opt(r.radius.map(|v| format!("{v:.16e}"))),
            r.acceptance_rate,
            r.report.csv_row()
        )
        .unwrap();
        for n in &names {
            match r.parameter(n) {
                Some(p) => write!(s, ",{:.16e},{:.16e},{:.16e},{}", p.mean, p.lower, p.upper, p.captured.unwrap_or(false)),
                None => write!(s, ",,,,"),
            }
            .unwrap();
        }
        s.push('\n');
    }
    s
}

/// Per-model medians and interval capture counts over successful
/// replicates. Contains no timings, so identical configs give identical
/// files.
pub fn aggregate_csv(results: &[ReplicateResult]) -> String {
    let mut models: Vec<&str> = Vec::new();
    for r in results {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    let mut s = String::from(
        "model,replicates,failures,median_crps,median_mae,median_rmspe,median_coverage,median_width,median_waic,parameter_captures\n",
    );
    for m in models {
        let ok: Vec<&ReplicateResult> = results.iter().filter(|r| r.model == m && r.error.is_none()).collect();
        let total = results.iter().filter(|r| r.model == m).count();
        let med = |f: fn(&MetricReport) -> f64| {
            let v: Vec<f64> = ok.iter().map(|r| f(&r.report)).collect();
            if v.is_empty() {
                String::new()
            } else {
                format!("{:.16e}", median(&v))
            }
        };
        let captures: Vec<String> = ok
            .first()
            .map(|r| {
                r.parameters
                    .iter()
                    .map(|p| {
                        let c = ok
                            .iter()
                            .filter(|o| o.parameter(&p.name).and_then(|q| q.captured) == Some(true))
                            .count();
                        format!("{}={c}", p.name)
                    })
                    .collect()
            })
            .unwrap_or_default();
        writeln!(
            s,
            "{m},{},{},{},{},{},{},{},{},{}",
            ok.len(),
            total - ok.len(),
            med(|r| r.crps),
            med(|r| r.mae),
            med(|r| r.rmspe),
            med(|r| r.coverage),
            med(|r| r.median_width),
            med(|r| r.waic),
            captures.join(";")
        )
        .unwrap();
    }
    s
}

/// Writes `replicates.csv`, `aggregate.csv`, `results.json` and
/// `config.json` into `dir`.
pub fn write_experiment(dir: &Path, cfg: &ExperimentConfig, results: &[ReplicateResult]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("replicates.csv"), replicate_csv(results))?;
    fs::write(dir.join("aggregate.csv"), aggregate_csv(results))?;
    fs::write(dir.join("results.json"), serde_json::to_string_pretty(results)?)?;
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(cfg)?)?;
    Ok(())
}
