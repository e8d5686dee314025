use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::chain::{ParamDraw, PhaseTimings, PosteriorChain, WDraw};
use super::{PriorSpec, SamplerConfig};
use crate::clustering::ClusterModel;
use crate::covariance::CovarianceParams;
use crate::factors::{log_joint_w, FactorLayout, FactorSet};
use crate::geometry::{DesignMatrix, NeighborGraph, SpatialDataset};
use crate::linalg::{cholesky_in_place, cholesky_solve_in_place, dot, gram, gram_vec, solve_upper_transposed_in_place};
use crate::{Error, Real, Result};

/// Floor for the variance initializations, relative to `Var(y)`.
const INIT_VARIANCE_FLOOR: f64 = 1e-6;

/// Current values of every unknown; `factors` always match `theta`.
#[derive(Debug, Clone)]
pub struct ChainState<T> {
    pub beta: Vec<T>,
    /// Spatial effects in ordered positions.
    pub w: Vec<T>,
    pub theta: CovarianceParams<T>,
    pub tau2: T,
    pub factors: FactorSet<T>,
}

/// Ordinary least squares `(X'X)^-1 X'y`, plus the Cholesky factor of `X'X`.
pub fn ols<T: Real>(x: &DesignMatrix<T>, y: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    let p = x.cols();
    let mut xtx = gram(x.as_slice(), x.rows(), p);
    cholesky_in_place(&mut xtx, p).map_err(|column| Error::RankDeficient { column })?;
    let mut beta = gram_vec(x.as_slice(), x.rows(), p, y);
    cholesky_solve_in_place(&xtx, p, &mut beta);
    Ok((beta, xtx))
}

fn sample_variance<T: Real>(v: &[T]) -> T {
    let n = T::from_usize(v.len()).unwrap();
    if v.len() < 2 {
        return T::zero();
    }
    let mean = v.iter().copied().sum::<T>() / n;
    v.iter().map(|x| (*x - mean) * (*x - mean)).sum::<T>() / (n - T::one())
}

#[inline]
fn logit<T: Real>(p: T) -> T {
    (p / (T::one() - p)).ln()
}

#[inline]
fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Gibbs/Metropolis sampler over data permuted into the maxmin ordering.
pub struct Sampler<'a, T> {
    graph: &'a NeighborGraph,
    layout: FactorLayout<T>,
    y: Vec<T>,
    x: DesignMatrix<T>,
    xtx_chol: Vec<T>,
    beta_ols: Vec<T>,
    var_y: T,
    reverse_offsets: Vec<usize>,
    reverse: Vec<(usize, usize)>,
    priors: PriorSpec<T>,
    config: SamplerConfig,
    log_steps: [f64; 2],
    rng: ChaCha8Rng,
    proposals: usize,
    cholesky_count: usize,
}

impl<'a, T: Real> Sampler<'a, T> {
    pub fn new(
        dataset: &SpatialDataset<T>,
        graph: &'a NeighborGraph,
        clusters: Option<&ClusterModel<T>>,
        priors: PriorSpec<T>,
        config: SamplerConfig,
    ) -> Result<Self> {
        priors.validate()?;
        config.validate()?;
        if graph.len() != dataset.len() {
            return Err(Error::invalid("neighbor graph and data set differ in size"));
        }
        let order = graph.ordering();
        let y: Vec<T> = order.iter().map(|&i| dataset.response()[i]).collect();
        let x = dataset.design().select_rows(order);
        let (beta_ols, xtx_chol) = ols(&x, &y)?;
        let layout = FactorLayout::new(graph, dataset.coords(), clusters)?;
        let (reverse_offsets, reverse) = graph.reverse_neighbors();
        let log_steps = config.mh_step.map(|s| s.ln());
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self {
            graph,
            layout,
            var_y: sample_variance(&y),
            y,
            x,
            xtx_chol,
            beta_ols,
            reverse_offsets,
            reverse,
            priors,
            config,
            log_steps,
            rng,
            proposals: 0,
            cholesky_count: 0,
        })
    }

    pub fn layout(&self) -> &FactorLayout<T> {
        &self.layout
    }

    /// Current proposal scales.
    pub fn mh_step(&self) -> [f64; 2] {
        self.log_steps.map(f64::exp)
    }

    /// OLS start for `beta`, `phi` at its prior mean, `sigma2 = tau2 =`
    /// half the OLS residual variance, `w = 0`.
    pub fn initialize(&mut self) -> Result<ChainState<T>> {
        let fitted = self.x.mul_vec(&self.beta_ols);
        let resid: Vec<T> = self.y.iter().zip(&fitted).map(|(a, b)| *a - *b).collect();
        let mut floor = T::lit(INIT_VARIANCE_FLOOR) * self.var_y;
        if !(floor > T::zero()) {
            floor = T::lit(INIT_VARIANCE_FLOOR);
        }
        let half = (T::lit(0.5) * sample_variance(&resid)).max(floor);
        let theta = CovarianceParams::new(half, self.priors.phi.mean())?;
        let factors = self.layout.build(&theta)?;
        Ok(ChainState {
            beta: self.beta_ols.clone(),
            w: vec![T::zero(); self.y.len()],
            theta,
            tau2: half,
            factors,
        })
    }

    /// `beta ~ N((X'X)^-1 X'(y - w), tau2 (X'X)^-1)`.
    pub fn gibbs_beta(&mut self, state: &mut ChainState<T>) {
        let p = self.x.cols();
        let r: Vec<T> = self.y.iter().zip(&state.w).map(|(a, b)| *a - *b).collect();
        let mut mu = gram_vec(self.x.as_slice(), self.x.rows(), p, &r);
        cholesky_solve_in_place(&self.xtx_chol, p, &mut mu);
        let mut z: Vec<T> = (0..p).map(|_| T::sample_standard_normal(&mut self.rng)).collect();
        solve_upper_transposed_in_place(&self.xtx_chol, p, &mut z);
        let sd = state.tau2.sqrt();
        state.beta = mu.iter().zip(&z).map(|(m, e)| *m + sd * *e).collect();
    }

    /// `tau2 ~ IG(a + n/2, b + SS/2)` with `SS` the residual sum of squares.
    pub fn gibbs_tau2(&mut self, state: &mut ChainState<T>) {
        let mut ss = T::zero();
        for i in 0..self.y.len() {
            let e = self.y[i] - dot(self.x.row(i), &state.beta) - state.w[i];
            ss += e * e;
        }
        let half = T::lit(0.5);
        let post = super::InverseGamma {
            shape: self.priors.tau2.shape + half * T::from_usize(self.y.len()).unwrap(),
            scale: self.priors.tau2.scale + half * ss,
        };
        state.tau2 = post.sample(&mut self.rng);
    }

    /// Log posterior of `theta` in the sampler's unconstrained coordinates,
    /// including the change-of-variables Jacobian.
    fn log_target(&self, factors: &FactorSet<T>, theta: &CovarianceParams<T>, w: &[T]) -> T {
        let prior_phi = self.priors.phi;
        if !prior_phi.contains(theta.phi) {
            return T::neg_infinity();
        }
        let jacobian = theta.sigma2.ln() + (theta.phi - prior_phi.lower).ln() + (prior_phi.upper - theta.phi).ln();
        log_joint_w(factors, self.graph, w) + self.priors.sigma2.log_kernel(theta.sigma2) + jacobian
    }

    /// Joint random-walk Metropolis step on `(log sigma2, logit phi)`.
    /// Returns whether the proposal was accepted.
    pub fn metropolis_theta(&mut self, state: &mut ChainState<T>, iteration: usize) -> Result<bool> {
        let prior_phi = self.priors.phi;
        let width = prior_phi.upper - prior_phi.lower;
        let u = state.theta.sigma2.ln();
        let v = logit((state.theta.phi - prior_phi.lower) / width);
        let [s1, s2] = self.mh_step();
        let z1 = T::sample_standard_normal(&mut self.rng);
        let z2 = T::sample_standard_normal(&mut self.rng);
        let sigma2 = (u + T::lit(s1) * z1).exp();
        let phi = prior_phi.lower + width * sigmoid(v + T::lit(s2) * z2);

        let log_u = T::sample_unit(&mut self.rng).ln();
        let proposal_ok = sigma2 > T::zero() && sigma2.is_finite() && prior_phi.contains(phi);
        let (accepted, log_ratio) = if proposal_ok {
            let theta = CovarianceParams { sigma2, phi };
            let factors = self.layout.build(&theta)?;
            self.proposals += 1;
            self.cholesky_count += factors.cholesky_count();
            let current = self.log_target(&state.factors, &state.theta, &state.w);
            let proposed = self.log_target(&factors, &theta, &state.w);
            let log_ratio = proposed - current;
            let accepted = log_u < log_ratio;
            if accepted {
                state.theta = theta;
                state.factors = factors;
            }
            (accepted, log_ratio.as_f64())
        } else {
            (false, f64::NEG_INFINITY)
        };

        if self.config.adapt && iteration < self.config.burn_in {
            let alpha = log_ratio.min(0.0).exp();
            let gain = ((iteration + 1) as f64).powf(-0.6);
            for s in &mut self.log_steps {
                *s += gain * (alpha - self.config.target_accept);
            }
        }
        Ok(accepted)
    }

    /// Draws `w_i` from its full conditional given everything else.
    pub fn gibbs_w_site(&mut self, state: &mut ChainState<T>, i: usize, data_mean: T) {
        let (mean, var) = self.w_conditional(state, i, data_mean);
        state.w[i] = mean + var.sqrt() * T::sample_standard_normal(&mut self.rng);
    }

    /// Mean and variance of `w_i | rest`. `data_mean` is `x_i'beta`.
    pub fn w_conditional(&self, state: &ChainState<T>, i: usize, data_mean: T) -> (T, T) {
        let f = &state.factors;
        let w = &state.w;
        let unit = f.unit_of(i);
        let fi = f.variance(unit);
        let inv_tau2 = T::one() / state.tau2;
        let mut precision = inv_tau2 + T::one() / fi;
        let mut linear = (self.y[i] - data_mean) * inv_tau2 + f.conditional_mean(self.graph, w, i) / fi;
        for &(j, pos) in &self.reverse[self.reverse_offsets[i]..self.reverse_offsets[i + 1]] {
            let vj = f.unit_of(j);
            let b = f.weights(vj)[pos];
            let fj = f.variance(vj);
            let partial = w[j] - (f.conditional_mean(self.graph, w, j) - b * w[i]);
            precision += b * b / fj;
            linear += b * partial / fj;
        }
        (linear / precision, T::one() / precision)
    }

    /// One sequential sweep over the ordered locations.
    pub fn gibbs_w(&mut self, state: &mut ChainState<T>) {
        let xb = self.x.mul_vec(&state.beta);
        for (i, &m) in xb.iter().enumerate() {
            self.gibbs_w_site(state, i, m);
        }
    }

    /// Ordered response and design rows used internally.
    pub fn ordered_response(&self) -> &[T] {
        &self.y
    }

    pub fn ordered_design(&self) -> &DesignMatrix<T> {
        &self.x
    }

    pub fn run(mut self) -> Result<PosteriorChain<T>> {
        let cfg = self.config.clone();
        let wrap = |iteration: usize| move |e: Error| Error::Sampler {
            iteration,
            source: Box::new(e),
        };
        let mut state = self.initialize().map_err(wrap(0))?;
        let mut timings = PhaseTimings::default();
        let start = Instant::now();
        let mut draws = Vec::new();
        let mut w_draws = Vec::new();
        let (mut acc_burn, mut acc_post) = (0usize, 0usize);
        let order = self.graph.ordering().to_vec();

        for it in 0..cfg.iterations {
            let t = Instant::now();
            self.gibbs_beta(&mut state);
            let t1 = Instant::now();
            self.gibbs_tau2(&mut state);
            let t2 = Instant::now();
            let accepted = self.metropolis_theta(&mut state, it).map_err(wrap(it))?;
            let t3 = Instant::now();
            self.gibbs_w(&mut state);
            let t4 = Instant::now();
            timings.beta += (t1 - t).as_secs_f64();
            timings.tau2 += (t2 - t1).as_secs_f64();
            timings.theta += (t3 - t2).as_secs_f64();
            timings.w += (t4 - t3).as_secs_f64();

            if it < cfg.burn_in {
                acc_burn += usize::from(accepted);
                continue;
            }
            acc_post += usize::from(accepted);
            if !(it - cfg.burn_in).is_multiple_of(cfg.thin) {
                continue;
            }
            let draw = draws.len();
            draws.push(ParamDraw {
                iteration: it,
                beta: state.beta.clone(),
                sigma2: state.theta.sigma2,
                phi: state.theta.phi,
                tau2: state.tau2,
            });
            if cfg.w_thin > 0 && draw % cfg.w_thin == 0 {
                let mut w = vec![T::zero(); state.w.len()];
                for (pos, &orig) in order.iter().enumerate() {
                    w[orig] = state.w[pos];
                }
                w_draws.push(WDraw { draw, w });
            }
        }
        timings.total = start.elapsed().as_secs_f64();

        let post = cfg.iterations - cfg.burn_in;
        Ok(PosteriorChain {
            n_beta: self.x.cols(),
            draws,
            w_draws,
            acceptance_rate: acc_post as f64 / post as f64,
            burn_in_acceptance: if cfg.burn_in > 0 {
                acc_burn as f64 / cfg.burn_in as f64
            } else {
                f64::NAN
            },
            mh_step: self.mh_step(),
            timings,
            proposals: self.proposals,
            cholesky_count: self.cholesky_count,
            mode: self.layout.mode(),
            n_units: self.layout.n_units(),
        })
    }
}

/// Initializes and runs one chain; fully reproducible from `config.seed`.
pub fn run_chain<T: Real>(
    dataset: &SpatialDataset<T>,
    graph: &NeighborGraph,
    clusters: Option<&ClusterModel<T>>,
    priors: PriorSpec<T>,
    config: SamplerConfig,
) -> Result<PosteriorChain<T>> {
    Sampler::new(dataset, graph, clusters, priors, config)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::ClusterSettings;
    use crate::geometry::{build_neighbor_graph, maxmin_order, Point2};
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;

    fn toy(n: usize, seed: u64) -> SpatialDataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coords: Vec<Point2<f64>> = (0..n)
            .map(|_| Point2::new(rng.random(), rng.random()))
            .collect();
        let cov: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>() - 0.5]).collect();
        let design = DesignMatrix::with_intercept(&cov).unwrap();
        let y = coords
            .iter()
            .zip(&cov)
            .map(|(p, x)| 1.0 + 2.0 * x[0] + (3.0 * p.x).sin() + 0.1 * rng.random::<f64>())
            .collect();
        SpatialDataset::new(coords, design, y).unwrap()
    }

    fn graph(ds: &SpatialDataset<f64>, m: usize) -> NeighborGraph {
        let order = maxmin_order(ds.coords()).unwrap();
        build_neighbor_graph(ds.coords(), &order, m).unwrap()
    }

    fn config(iterations: usize, burn_in: usize, seed: u64) -> SamplerConfig {
        SamplerConfig {
            iterations,
            burn_in,
            seed,
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn ols_recovers_exact_coefficients() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let x = DesignMatrix::with_intercept(&rows).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| 0.5 - r[0] + 0.25 * r[1]).collect();
        let (beta, _) = ols(&x, &y).unwrap();
        for (b, t) in beta.iter().zip([0.5, -1.0, 0.25]) {
            assert!((b - t).abs() < 1e-10);
        }
    }

    #[test]
    fn collinear_design_is_rank_deficient() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let x = DesignMatrix::with_intercept(&rows).unwrap();
        let err = ols(&x, &[1.0; 5]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { column: 2 }));
    }

    #[test]
    fn beta_draws_match_gaussian_moments() {
        let ds = toy(40, 3);
        let g = graph(&ds, 5);
        let mut s = Sampler::new(&ds, &g, None, PriorSpec::default(), config(10, 5, 9)).unwrap();
        let mut st = s.initialize().unwrap();
        st.tau2 = 0.3;
        st.w.iter_mut().enumerate().for_each(|(i, w)| *w = 0.01 * i as f64);

        let x = DMatrix::from_row_slice(40, 2, s.ordered_design().as_slice());
        let r = DVector::from_iterator(40, s.ordered_response().iter().zip(&st.w).map(|(a, b)| a - b));
        let xtx_inv = (x.transpose() * &x).try_inverse().unwrap();
        let mu = &xtx_inv * x.transpose() * r;
        let cov = xtx_inv * 0.3;

        let reps = 40_000;
        let mut sum = [0.0; 2];
        let mut sq = [[0.0; 2]; 2];
        for _ in 0..reps {
            s.gibbs_beta(&mut st);
            for a in 0..2 {
                sum[a] += st.beta[a];
                for b in 0..2 {
                    sq[a][b] += (st.beta[a] - mu[a]) * (st.beta[b] - mu[b]);
                }
            }
        }
        for a in 0..2 {
            let se = (cov[(a, a)] / reps as f64).sqrt();
            assert!((sum[a] / reps as f64 - mu[a]).abs() < 5.0 * se);
            for b in 0..2 {
                let c = sq[a][b] / reps as f64;
                let scale = (cov[(a, a)] * cov[(b, b)]).sqrt();
                assert!((c - cov[(a, b)]).abs() < 0.05 * scale, "{a}{b}: {c} vs {}", cov[(a, b)]);
            }
        }
    }

    #[test]
    fn tau2_draws_match_inverse_gamma_moments() {
        let ds = toy(30, 4);
        let g = graph(&ds, 5);
        let priors = PriorSpec::default();
        let mut s = Sampler::new(&ds, &g, None, priors, config(10, 5, 2)).unwrap();
        let mut st = s.initialize().unwrap();
        let ss: f64 = (0..30)
            .map(|i| {
                let e = s.ordered_response()[i] - dot(s.ordered_design().row(i), &st.beta) - st.w[i];
                e * e
            })
            .sum();
        let target = super::super::InverseGamma {
            shape: priors.tau2.shape + 15.0,
            scale: priors.tau2.scale + ss / 2.0,
        };
        let reps = 40_000;
        let draws: Vec<f64> = (0..reps)
            .map(|_| {
                s.gibbs_tau2(&mut st);
                st.tau2
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / reps as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let (tm, tv) = (target.mean().unwrap(), target.variance().unwrap());
        assert!((mean - tm).abs() < 5.0 * (tv / reps as f64).sqrt());
        assert!((var / tv - 1.0).abs() < 0.05);
    }

    /// With `m = n - 1` the approximation is exact, so the sequential update
    /// must reproduce the dense Gaussian full conditional of each site.
    #[test]
    fn w_conditional_matches_dense_precision() {
        let n = 12;
        let ds = toy(n, 8);
        let g = graph(&ds, n - 1);
        let mut s = Sampler::new(&ds, &g, None, PriorSpec::default(), config(10, 5, 1)).unwrap();
        let mut st = s.initialize().unwrap();
        st.theta = CovarianceParams::new(0.7, 4.0).unwrap();
        st.factors = s.layout().build(&st.theta).unwrap();
        st.tau2 = 0.05;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        st.w.iter_mut().for_each(|w| *w = rng.random::<f64>() - 0.5);

        let pts: Vec<_> = (0..n).map(|i| g.point(ds.coords(), i)).collect();
        let c = DMatrix::from_fn(n, n, |a, b| 0.7 * (-4.0 * pts[a].distance(&pts[b])).exp());
        let q = c.try_inverse().unwrap();
        let xb = s.ordered_design().mul_vec(&st.beta);
        for i in 0..n {
            let (mean, var) = s.w_conditional(&st, i, xb[i]);
            let prec = q[(i, i)] + 1.0 / st.tau2;
            let lin = (s.ordered_response()[i] - xb[i]) / st.tau2
                - (0..n).filter(|&j| j != i).map(|j| q[(i, j)] * st.w[j]).sum::<f64>();
            assert!((var - 1.0 / prec).abs() < 1e-8 * var.max(1.0), "site {i}");
            assert!((mean - lin / prec).abs() < 1e-7, "site {i}: {mean} vs {}", lin / prec);
        }
        s.gibbs_w(&mut st);
        assert!(st.w.iter().all(|w| w.is_finite()));
    }

    #[test]
    fn zero_step_proposals_are_always_accepted() {
        let ds = toy(50, 6);
        let g = graph(&ds, 5);
        let cfg = SamplerConfig {
            mh_step: [0.0, 0.0],
            adapt: false,
            ..config(20, 10, 3)
        };
        let mut s = Sampler::new(&ds, &g, None, PriorSpec::default(), cfg).unwrap();
        let mut st = s.initialize().unwrap();
        for it in 0..20 {
            assert!(s.metropolis_theta(&mut st, it).unwrap());
        }
    }

    #[test]
    fn metropolis_touches_only_covariance_parameters() {
        let ds = toy(50, 7);
        let g = graph(&ds, 5);
        let mut s = Sampler::new(&ds, &g, None, PriorSpec::default(), config(20, 10, 3)).unwrap();
        let mut st = s.initialize().unwrap();
        s.gibbs_w(&mut st);
        let (beta, w, tau2) = (st.beta.clone(), st.w.clone(), st.tau2);
        for it in 0..30 {
            s.metropolis_theta(&mut st, it).unwrap();
            assert_eq!(st.beta, beta);
            assert_eq!(st.w, w);
            assert_eq!(st.tau2, tau2);
            assert_eq!(st.factors.params(), &st.theta);
        }
    }

    #[test]
    fn chains_are_reproducible_from_the_seed() {
        let ds = toy(80, 1);
        let g = graph(&ds, 6);
        let run = |seed| run_chain(&ds, &g, None, PriorSpec::default(), config(200, 100, seed)).unwrap();
        let (a, b, c) = (run(11), run(11), run(12));
        assert!(a.same_draws(&b));
        assert!(!a.same_draws(&c));
        assert_eq!(a.draws.len(), 100);
        assert_eq!(a.w_draws.len(), 10);
        assert_eq!(a.cholesky_count, a.proposals * 80);
    }

    #[test]
    fn zero_radius_clusters_reproduce_the_nngp_chain() {
        let ds = toy(70, 2);
        let g = graph(&ds, 5);
        let settings = ClusterSettings {
            radius: 0.0,
            ..ClusterSettings::default()
        };
        let clusters = ClusterModel::fit(&g, ds.coords(), &settings).unwrap();
        let cfg = config(150, 50, 4);
        let a = run_chain(&ds, &g, None, PriorSpec::default(), cfg.clone()).unwrap();
        let b = run_chain(&ds, &g, Some(&clusters), PriorSpec::default(), cfg).unwrap();
        for (x, y) in a.draws.iter().zip(&b.draws) {
            assert!((x.phi - y.phi).abs() < 1e-8 && (x.sigma2 - y.sigma2).abs() < 1e-8);
            assert!((x.tau2 - y.tau2).abs() < 1e-8);
        }
        assert_eq!(b.cholesky_count / b.proposals, 70);
    }

    #[test]
    fn adaptation_reaches_the_target_band() {
        let ds = toy(150, 12);
        let g = graph(&ds, 8);
        let chain = run_chain(&ds, &g, None, PriorSpec::default(), config(3000, 1500, 21)).unwrap();
        assert!(
            (0.25..=0.45).contains(&chain.acceptance_rate),
            "acceptance {}",
            chain.acceptance_rate
        );
        assert!(chain.timings.total > 0.0);
    }

    #[test]
    fn rank_deficient_design_is_rejected_up_front() {
        let ds = toy(20, 2);
        let g = graph(&ds, 3);
        let mut rows = vec![vec![1.0, 1.0]; 20];
        rows[0][1] = 1.0;
        let x = DesignMatrix::from_rows(&rows).unwrap();
        let bad = SpatialDataset::new(ds.coords().to_vec(), x, ds.response().to_vec()).unwrap();
        let err = run_chain(&bad, &g, None, PriorSpec::default(), config(10, 5, 1)).unwrap_err();
        assert!(err.is_validation());
    }
}
