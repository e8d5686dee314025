//! Scoring of predictions and fitted chains: CRPS, MAE, RMSPE, interval
//! coverage and widths, WAIC, and parameter-recovery summaries.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::inference::PosteriorChain;
use crate::linalg::dot;
use crate::{Error, Real, Result, SpatialDataset};

fn sorted<T: Real>(v: &[T]) -> Vec<T> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    s
}

/// Sample quantile of already sorted data, linear interpolation between
/// order statistics (`h = (n - 1) p`).
pub fn quantile_sorted<T: Real>(sorted: &[T], p: f64) -> T {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + T::lit(h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile<T: Real>(v: &[T], p: f64) -> T {
    quantile_sorted(&sorted(v), p)
}

pub fn median<T: Real>(v: &[T]) -> T {
    quantile(v, 0.5)
}

/// Sample-based CRPS: `mean|Y_k - y| - 0.5 mean_{k,l} |Y_k - Y_l|`, the
/// second mean running over all ordered pairs.
pub fn crps_empirical<T: Real>(draws: &[T], y: T) -> Result<T> {
    if draws.len() < 2 {
        return Err(Error::invalid("CRPS needs at least two draws"));
    }
    let s = T::from_usize(draws.len()).unwrap();
    let abs_err = draws.iter().map(|d| (*d - y).abs()).sum::<T>() / s;
    // sum_{k,l} |Y_k - Y_l| = 2 sum_i (2i - S + 1) Y_(i) over sorted draws
    let ys = sorted(draws);
    let n = draws.len() as f64;
    let spread = ys
        .iter()
        .enumerate()
        .map(|(i, &v)| T::lit(2.0 * i as f64 - n + 1.0) * v)
        .sum::<T>()
        * T::lit(2.0)
        / (s * s);
    Ok(abs_err - T::lit(0.5) * spread)
}

/// CRPS per location, averaged over locations.
pub fn mean_crps<T: Real>(draws: &[Vec<T>], y: &[T]) -> Result<T> {
    if draws.len() != y.len() || y.is_empty() {
        return Err(Error::invalid("CRPS needs one non-empty draw set per observation"));
    }
    let scores = draws
        .par_iter()
        .zip(y.par_iter())
        .map(|(d, &v)| crps_empirical(d, v))
        .collect::<Result<Vec<T>>>()?;
    Ok(scores.iter().copied().sum::<T>() / T::from_usize(y.len()).unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics<T> {
    pub mae: T,
    pub rmspe: T,
    /// Fraction of observations inside the closed interval.
    pub coverage: T,
    pub median_width: T,
}

pub fn point_metrics<T: Real>(mean: &[T], lower: &[T], upper: &[T], y: &[T]) -> Result<PointMetrics<T>> {
    let n = y.len();
    if n == 0 || mean.len() != n || lower.len() != n || upper.len() != n {
        return Err(Error::invalid("point metrics need equal, non-empty lengths"));
    }
    let nt = T::from_usize(n).unwrap();
    let mae = mean.iter().zip(y).map(|(m, v)| (*m - *v).abs()).sum::<T>() / nt;
    let mse = mean.iter().zip(y).map(|(m, v)| (*m - *v) * (*m - *v)).sum::<T>() / nt;
    let inside = (0..n).filter(|&i| lower[i] <= y[i] && y[i] <= upper[i]).count();
    let widths: Vec<T> = upper.iter().zip(lower).map(|(u, l)| *u - *l).collect();
    Ok(PointMetrics {
        mae,
        rmspe: mse.sqrt(),
        coverage: T::from_usize(inside).unwrap() / nt,
        median_width: median(&widths),
    })
}

/// `log N(y | mu, var)`.
#[inline]
pub fn normal_log_density<T: Real>(y: T, mu: T, var: T) -> T {
    let r = y - mu;
    -T::lit(0.5) * (T::lit(std::f64::consts::TAU.ln()) + var.ln() + r * r / var)
}

/// WAIC from the stored `w` draws: `-2 (lppd - p_waic)` with
/// `p_waic = sum_i Var_k(ll_ik)` (sample variance; 0 for a single draw).
pub fn waic<T: Real>(chain: &PosteriorChain<T>, dataset: &SpatialDataset<T>) -> Result<T> {
    if chain.w_draws.is_empty() {
        return Err(Error::invalid("WAIC needs stored w draws"));
    }
    let n = dataset.len();
    if chain.w_draws.iter().any(|d| d.w.len() != n || d.draw >= chain.draws.len()) {
        return Err(Error::invalid("stored w draws do not match the data set"));
    }
    let x = dataset.design();
    let y = dataset.response();
    let s = chain.w_draws.len();
    let st = T::from_usize(s).unwrap();
    let terms: Vec<(T, T)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ll: Vec<T> = chain
                .w_draws
                .iter()
                .map(|wd| {
                    let p = &chain.draws[wd.draw];
                    normal_log_density(y[i], dot(x.row(i), &p.beta) + wd.w[i], p.tau2)
                })
                .collect();
            let max = ll.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = max + (ll.iter().map(|l| (*l - max).exp()).sum::<T>() / st).ln();
            let var = if s < 2 {
                T::zero()
            } else {
                let mean = ll.iter().copied().sum::<T>() / st;
                ll.iter().map(|l| (*l - mean) * (*l - mean)).sum::<T>() / (st - T::one())
            };
            (lse, var)
        })
        .collect();
    let lppd = terms.iter().map(|t| t.0).sum::<T>();
    let p_waic = terms.iter().map(|t| t.1).sum::<T>();
    Ok(-T::lit(2.0) * (lppd - p_waic))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary<T> {
    pub name: String,
    pub mean: T,
    pub lower: T,
    pub upper: T,
    pub width: T,
    pub captured: Option<bool>,
}

/// Posterior mean and equal-tailed 95% interval of every scalar parameter,
/// in the order of [`PosteriorChain::parameter_names`]. `truths`, when
/// given, follows the same order.
pub fn parameter_summary<T: Real>(
    chain: &PosteriorChain<T>,
    truths: Option<&[T]>,
) -> Result<Vec<ParameterSummary<T>>> {
    if chain.is_empty() {
        return Err(Error::invalid("empty chain"));
    }
    let names = chain.parameter_names();
    if truths.is_some_and(|t| t.len() != names.len()) {
        return Err(Error::invalid(format!("expected {} true values", names.len())));
    }
    names
        .into_iter()
        .enumerate()
        .map(|(k, name)| {
            let s = sorted(&chain.parameter(&name)?);
            let mean = s.iter().copied().sum::<T>() / T::from_usize(s.len()).unwrap();
            let lower = quantile_sorted(&s, 0.025);
            let upper = quantile_sorted(&s, 0.975);
            Ok(ParameterSummary {
                name,
                mean,
                lower,
                upper,
                width: upper - lower,
                captured: truths.map(|t| lower <= t[k] && t[k] <= upper),
            })
        })
        .collect()
}

/// One scored fit: the quantities reported per model and replicate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub crps: f64,
    pub mae: f64,
    pub rmspe: f64,
    pub coverage: f64,
    pub median_width: f64,
    pub waic: f64,
    pub fitting_time_hours: f64,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "crps,mae,rmspe,coverage,median_width,waic,fitting_time_hours";

    pub fn csv_row(&self) -> String {
        [
            self.crps,
            self.mae,
            self.rmspe,
            self.coverage,
            self.median_width,
            self.waic,
            self.fitting_time_hours,
        ]
        .map(|v| format!("{v:.16e}"))
        .join(",")
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factors::FactorMode;
    use crate::geometry::{DesignMatrix, Point2};
    use crate::inference::{ParamDraw, PhaseTimings, WDraw};
    use proptest::prelude::*;

    fn brute_crps(d: &[f64], y: f64) -> f64 {
        let s = d.len() as f64;
        let a = d.iter().map(|v| (v - y).abs()).sum::<f64>() / s;
        let b = d.iter().flat_map(|u| d.iter().map(move |v| (u - v).abs())).sum::<f64>() / (s * s);
        a - 0.5 * b
    }

    #[test]
    fn crps_hand_examples() {
        assert_eq!(crps_empirical(&[0.0, 2.0], 1.0).unwrap(), 0.5);
        assert_eq!(crps_empirical(&[0.0, 0.0], 1.0).unwrap(), 1.0);
        assert_eq!(crps_empirical(&[3.0, 3.0, 3.0], 3.0).unwrap(), 0.0);
        assert!(crps_empirical(&[1.0], 1.0).is_err());
    }

    proptest! {
        #[test]
        fn crps_matches_pairwise_definition(d in prop::collection::vec(-5.0..5.0f64, 2..40), y in -5.0..5.0f64, c in 0.1..10.0f64) {
            let fast = crps_empirical(&d, y).unwrap();
            prop_assert!((fast - brute_crps(&d, y)).abs() < 1e-12);
            prop_assert!(fast >= -1e-12);
            let scaled: Vec<f64> = d.iter().map(|v| c * v).collect();
            prop_assert!((crps_empirical(&scaled, c * y).unwrap() - c * fast).abs() < 1e-10 * c.max(1.0));
        }

        #[test]
        fn coverage_complements_exclusion(y in prop::collection::vec(-3.0..3.0f64, 1..50)) {
            let lo = vec![-1.0; y.len()];
            let hi = vec![1.0; y.len()];
            let pm = point_metrics(&y, &lo, &hi, &y).unwrap();
            let out = y.iter().filter(|v| v.abs() > 1.0).count() as f64 / y.len() as f64;
            prop_assert_eq!(pm.coverage + out, 1.0);
        }
    }

    #[test]
    fn point_metric_examples() {
        let y = [1.0, 2.0];
        let perfect = point_metrics(&y, &y, &y, &y).unwrap();
        assert_eq!((perfect.mae, perfect.rmspe, perfect.coverage), (0.0, 0.0, 1.0));
        let pm = point_metrics(&[0.0, 3.0], &[5.0, 5.0], &[6.0, 8.0], &y).unwrap();
        assert_eq!((pm.mae, pm.rmspe, pm.coverage, pm.median_width), (1.0, 1.0, 0.0, 2.0));
        assert!(point_metrics(&[0.0], &y, &y, &y).is_err());
    }

    #[test]
    fn type7_quantiles() {
        let v = [4.0f64, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert!((quantile(&v, 0.025) - 1.075).abs() < 1e-15);
    }

    fn tiny_chain(draws: Vec<(f64, f64, f64)>, w: Vec<Vec<f64>>) -> PosteriorChain<f64> {
        PosteriorChain {
            n_beta: 1,
            draws: draws
                .iter()
                .enumerate()
                .map(|(k, &(b, s, t))| ParamDraw {
                    iteration: k,
                    beta: vec![b],
                    sigma2: s,
                    phi: 3.0,
                    tau2: t,
                })
                .collect(),
            w_draws: w.into_iter().enumerate().map(|(draw, w)| WDraw { draw, w }).collect(),
            acceptance_rate: 0.0,
            burn_in_acceptance: 0.0,
            mh_step: [0.1, 0.1],
            timings: PhaseTimings::default(),
            proposals: 0,
            cholesky_count: 0,
            mode: FactorMode::PerLocation,
            n_units: 3,
        }
    }

    fn tiny_data() -> SpatialDataset<f64> {
        let coords = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        SpatialDataset::new(coords, DesignMatrix::intercept_only(3), vec![0.5, -0.2, 1.3]).unwrap()
    }

    #[test]
    fn waic_single_and_duplicated_draws() {
        let ds = tiny_data();
        let one = tiny_chain(vec![(0.4, 1.0, 0.3)], vec![vec![0.1, -0.1, 0.2]]);
        let ll: f64 = [(0.5, 0.5), (-0.2, 0.3), (1.3, 0.6)]
            .iter()
            .map(|&(y, mu): &(f64, f64)| -0.5 * ((2.0 * std::f64::consts::PI * 0.3).ln() + (y - mu).powi(2) / 0.3))
            .sum();
        let w1 = waic(&one, &ds).unwrap();
        assert!((w1 + 2.0 * ll).abs() < 1e-12);
        let two = tiny_chain(vec![(0.4, 1.0, 0.3); 2], vec![vec![0.1, -0.1, 0.2]; 2]);
        assert!((waic(&two, &ds).unwrap() - w1).abs() < 1e-12);
    }

    #[test]
    fn waic_matches_direct_formula_and_is_order_invariant() {
        let ds = tiny_data();
        let params = vec![(0.4, 1.0, 0.3), (0.1, 1.0, 0.5), (0.7, 1.0, 0.2), (0.3, 1.0, 0.4), (0.5, 1.0, 0.25)];
        let ws = vec![
            vec![0.1, -0.1, 0.2],
            vec![0.3, 0.0, 0.9],
            vec![-0.2, -0.4, 0.5],
            vec![0.0, 0.1, 1.0],
            vec![0.2, -0.3, 0.7],
        ];
        let y = ds.response();
        let mut lppd = 0.0;
        let mut pw = 0.0;
        for i in 0..3 {
            let ll: Vec<f64> = (0..5)
                .map(|k| {
                    let (b, _, t) = params[k];
                    let r: f64 = y[i] - b - ws[k][i];
                    -0.5 * (2.0 * std::f64::consts::PI * t).ln() - r * r / (2.0 * t)
                })
                .collect();
            lppd += (ll.iter().map(|l| l.exp()).sum::<f64>() / 5.0).ln();
            let m = ll.iter().sum::<f64>() / 5.0;
            pw += ll.iter().map(|l| (l - m).powi(2)).sum::<f64>() / 4.0;
        }
        let expected = -2.0 * (lppd - pw);
        let got = waic(&tiny_chain(params.clone(), ws.clone()), &ds).unwrap();
        assert!((got - expected).abs() < 1e-12);

        let rev = tiny_chain(params.into_iter().rev().collect(), ws.into_iter().rev().collect());
        assert!((waic(&rev, &ds).unwrap() - expected).abs() < 1e-12);
        assert!(waic(&tiny_chain(vec![(0.0, 1.0, 1.0)], vec![]), &ds).is_err());
    }

    #[test]
    fn parameter_summaries() {
        let c = tiny_chain(vec![(2.0, 1.0, 0.1); 7], vec![]);
        let s = parameter_summary(&c, Some(&[2.0, 1.0, 3.0, 0.2])).unwrap();
        assert_eq!(s[0].name, "beta0");
        assert_eq!((s[0].mean, s[0].lower, s[0].upper, s[0].width), (2.0, 2.0, 2.0, 0.0));
        assert_eq!(s.iter().map(|p| p.captured.unwrap()).collect::<Vec<_>>(), [true, true, true, false]);
        let two = tiny_chain(vec![(1.0, 1.0, 0.1), (4.0, 1.0, 0.1)], vec![]);
        assert_eq!(parameter_summary(&two, None).unwrap()[0].mean, 2.5);
    }

    #[test]
    fn report_serializes_both_ways() {
        let r = MetricReport {
            crps: 0.1,
            mae: 0.2,
            rmspe: 0.3,
            coverage: 0.95,
            median_width: 1.5,
            waic: -12.0,
            fitting_time_hours: 1e-4,
        };
        let back: MetricReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        let csv = r.to_csv();
        let row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row, [0.1, 0.2, 0.3, 0.95, 1.5, -12.0, 1e-4]);
    }
}
