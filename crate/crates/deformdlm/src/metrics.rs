//! Model comparison (DIC, interval score, predictive MSE) and chain
//! diagnostics (Geweke statistic, HPD intervals).

use nalgebra::DMatrix;

use crate::data::ObservedDataset;
use crate::error::{Error, Result};
use crate::interp::PredictiveDraws;
use crate::linalg::{symmetrize, PosDefMatrix};
use crate::model::{loglik, ModelSpec, ParameterState};
use crate::sampler::PosteriorSample;
use crate::spatial::Deformation;

#[derive(Debug, Clone, Copy)]
pub struct DicResult {
    pub dic: f64,
    pub mean_deviance: f64,
    pub effective_params: f64,
    pub deviance_at_mean: f64,
}

/// Deviance information criterion over the retained draws. The deviance is
/// -2 times the completed-data log-likelihood, evaluated per draw with that
/// draw's imputations; the plug-in point is the element-wise posterior mean
/// (covariance re-symmetrized, mean imputations).
pub fn dic(
    spec: &ModelSpec,
    data: &ObservedDataset,
    posterior: &PosteriorSample,
) -> Result<DicResult> {
    if posterior.is_empty() {
        return Err(Error::InvalidArgument("empty posterior sample".into()));
    }
    let k = posterior.len() as f64;
    let mut mean_dev = 0.0;
    for (idx, state) in posterior.states.iter().enumerate() {
        let d = -2.0 * loglik(spec, state, data)?;
        if !d.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite deviance at retained draw {} (iteration {})",
                idx + 1,
                posterior.indices[idx]
            )));
        }
        mean_dev += d / k;
    }

    let mean_state = posterior_mean_state(spec, posterior)?;
    let dev_at_mean = -2.0 * loglik(spec, &mean_state, data)?;
    if !dev_at_mean.is_finite() {
        return Err(Error::Numerical(
            "non-finite deviance at the posterior mean".into(),
        ));
    }
    let p_d = mean_dev - dev_at_mean;
    Ok(DicResult {
        dic: mean_dev + p_d,
        mean_deviance: mean_dev,
        effective_params: p_d,
        deviance_at_mean: dev_at_mean,
    })
}

/// Element-wise posterior mean of every parameter block, usable as a
/// plug-in state. The scale and response covariance are only jointly
/// identified, so the plug-in carries the posterior mean of the product
/// V * Sigma (with V set to 1): averaging the factors separately overshoots
/// the product whenever they anticorrelate along the identifiability ridge.
pub fn posterior_mean_state(
    spec: &ModelSpec,
    posterior: &PosteriorSample,
) -> Result<ParameterState> {
    let k = posterior.len() as f64;
    let first = &posterior.states[0];
    let mut betas = vec![DMatrix::zeros(spec.p, spec.q); spec.t_len + 1];
    let mut phi = 0.0;
    let mut v_sigma = DMatrix::zeros(spec.q, spec.q);
    let mut deform = DMatrix::zeros(2, spec.n);
    let mut imputed: Vec<Vec<f64>> = first.imputed.iter().map(|im| vec![0.0; im.len()]).collect();

    for state in &posterior.states {
        for (acc, b) in betas.iter_mut().zip(&state.betas) {
            *acc += b / k;
        }
        phi += state.phi / k;
        v_sigma += state.sigma.matrix() * (state.v / k);
        deform += state.deform.coords() / k;
        for (acc_t, im_t) in imputed.iter_mut().zip(&state.imputed) {
            for (acc, &x) in acc_t.iter_mut().zip(im_t) {
                *acc += x / k;
            }
        }
    }

    Ok(ParameterState {
        betas,
        v: 1.0,
        sigma: PosDefMatrix::new(symmetrize(&v_sigma))?,
        phi,
        deform: Deformation::new(deform)?,
        imputed,
    })
}

/// Interval score: width plus 2/alpha-scaled penalties for truths outside
/// the interval.
pub fn interval_score(truth: f64, lower: f64, upper: f64, alpha: f64) -> Result<f64> {
    if lower > upper {
        return Err(Error::InvalidArgument(format!(
            "interval [{lower}, {upper}] is inverted"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let width = upper - lower;
    let penalty = if truth < lower {
        2.0 / alpha * (lower - truth)
    } else if truth > upper {
        2.0 / alpha * (truth - upper)
    } else {
        0.0
    };
    Ok(width + penalty)
}

/// Held-out truth at the ungauged sites; NaN entries mean the cell was never
/// observed and carries inclusion indicator 0.
#[derive(Debug, Clone)]
pub struct HeldOutTruth {
    values: Vec<DMatrix<f64>>,
}

impl HeldOutTruth {
    pub fn new(values: Vec<DMatrix<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Data("held-out truth has no time points".into()));
        }
        let shape = values[0].shape();
        if values.iter().any(|m| m.shape() != shape) {
            return Err(Error::dim_mismatch(
                "held-out truth matrices differ in shape",
            ));
        }
        Ok(HeldOutTruth { values })
    }

    pub fn t_len(&self) -> usize {
        self.values.len()
    }

    pub fn n_star(&self) -> usize {
        self.values[0].nrows()
    }

    pub fn q(&self) -> usize {
        self.values[0].ncols()
    }

    pub fn included(&self, site: usize, var: usize, t: usize) -> bool {
        !self.values[t][(site, var)].is_nan()
    }

    pub fn value(&self, site: usize, var: usize, t: usize) -> f64 {
        self.values[t][(site, var)]
    }
}

/// Interval score per (site, variable), averaged over the times whose
/// inclusion indicator is 1; cells with no included time are None.
pub fn aggregate_interval_scores(
    predictive: &PredictiveDraws,
    held_out: &HeldOutTruth,
    alpha: f64,
) -> Result<Vec<Vec<Option<f64>>>> {
    check_predictive_shape(predictive, held_out)?;
    let mut out = vec![vec![None; held_out.q()]; held_out.n_star()];
    for (site, row) in out.iter_mut().enumerate() {
        for (var, cell) in row.iter_mut().enumerate() {
            let mut sum = 0.0;
            let mut count = 0usize;
            for t in 0..held_out.t_len() {
                if !held_out.included(site, var, t) {
                    continue;
                }
                let mut chain = predictive.cell_chain(site, var, t);
                chain.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let lower = quantile_sorted(&chain, alpha / 2.0);
                let upper = quantile_sorted(&chain, 1.0 - alpha / 2.0);
                sum += interval_score(held_out.value(site, var, t), lower, upper, alpha)?;
                count += 1;
            }
            if count > 0 {
                *cell = Some(sum / count as f64);
            }
        }
    }
    Ok(out)
}

/// Predictive mean squared error over all included held-out cells.
pub fn pmse(predictive: &PredictiveDraws, held_out: &HeldOutTruth) -> Result<f64> {
    check_predictive_shape(predictive, held_out)?;
    let k = predictive.len() as f64;
    let mut sum = 0.0;
    let mut count = 0usize;
    for t in 0..held_out.t_len() {
        for site in 0..held_out.n_star() {
            for var in 0..held_out.q() {
                if !held_out.included(site, var, t) {
                    continue;
                }
                let mean: f64 = predictive
                    .y_stars
                    .iter()
                    .map(|per_t| per_t[t][(site, var)])
                    .sum::<f64>()
                    / k;
                sum += (mean - held_out.value(site, var, t)).powi(2);
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::Data(
            "no held-out cell has inclusion indicator 1".into(),
        ));
    }
    Ok(sum / count as f64)
}

fn check_predictive_shape(predictive: &PredictiveDraws, held_out: &HeldOutTruth) -> Result<()> {
    if predictive.is_empty() {
        return Err(Error::InvalidArgument("no predictive draws".into()));
    }
    let per_t = &predictive.y_stars[0];
    if per_t.len() != held_out.t_len() {
        return Err(Error::dim_mismatch(format!(
            "predictive covers {} times, held-out truth {}",
            per_t.len(),
            held_out.t_len()
        )));
    }
    if per_t[0].nrows() != held_out.n_star() || per_t[0].ncols() != held_out.q() {
        return Err(Error::dim_mismatch(format!(
            "predictive cells are {}x{}, held-out truth {}x{}",
            per_t[0].nrows(),
            per_t[0].ncols(),
            held_out.n_star(),
            held_out.q()
        )));
    }
    Ok(())
}

/// Type-7 empirical quantile of a sorted sample.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Geweke convergence statistic: standardized difference between the mean of
/// the first `frac_a` and last `frac_b` segments, with spectral-density-at-
/// zero variance estimates (4% lag window, Bartlett weights). The raw ratio
/// is t-distributed under the null with the window's equivalent degrees of
/// freedom; it is mapped onto the standard-normal scale so the usual
/// (-1.96, 1.96) reading applies at finite sample sizes. Returns None for a
/// zero-variance chain.
pub fn geweke_statistic(chain: &[f64], frac_a: f64, frac_b: f64) -> Result<Option<f64>> {
    if chain.len() < 100 {
        return Err(Error::InvalidArgument(format!(
            "geweke statistic needs at least 100 draws, got {}",
            chain.len()
        )));
    }
    if !(frac_a > 0.0 && frac_b > 0.0 && frac_a + frac_b <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "segment fractions ({frac_a}, {frac_b}) must be positive and sum to at most 1"
        )));
    }
    let n = chain.len();
    let n_a = ((frac_a * n as f64).floor() as usize).max(2);
    let n_b = ((frac_b * n as f64).floor() as usize).max(2);
    let seg_a = &chain[..n_a];
    let seg_b = &chain[n - n_b..];
    let (mean_a, s_a, df_a) = mean_and_spectral_var(seg_a);
    let (mean_b, s_b, df_b) = mean_and_spectral_var(seg_b);
    let (w_a, w_b) = (s_a / n_a as f64, s_b / n_b as f64);
    let var = w_a + w_b;
    if var <= 0.0 || !var.is_finite() {
        return Ok(None);
    }
    let z = (mean_a - mean_b) / var.sqrt();
    // Satterthwaite-combined degrees of freedom of the variance estimate.
    let df = var * var / (w_a * w_a / df_a + w_b * w_b / df_b);
    Ok(Some(t_to_normal_scale(z, df)))
}

/// Map a t-distributed statistic onto the standard-normal scale. Beyond |6|
/// the mapping saturates in f64 and calibration is irrelevant, so the raw
/// value passes through.
fn t_to_normal_scale(z: f64, df: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
    if !df.is_finite() || df <= 2.0 || z.abs() > 6.0 {
        return z;
    }
    let t = StudentsT::new(0.0, 1.0, df).expect("valid t distribution");
    let normal = Normal::new(0.0, 1.0).unwrap();
    let p = t.cdf(z).clamp(1e-300, 1.0 - 1e-16);
    normal.inverse_cdf(p)
}

/// Default segment choice: first 10%, last 50%.
pub fn geweke_default(chain: &[f64]) -> Result<Option<f64>> {
    geweke_statistic(chain, 0.1, 0.5)
}

/// Mean, spectral density at zero (Bartlett window over 4% of the segment
/// length, small-sample bias factor n/(n - L)), and the window's equivalent
/// degrees of freedom 3n/L.
fn mean_and_spectral_var(segment: &[f64]) -> (f64, f64, f64) {
    let n = segment.len();
    let mean = segment.iter().sum::<f64>() / n as f64;
    let lag_max = ((0.04 * n as f64).ceil() as usize).clamp(1, n - 1);
    let mut s = autocovariance(segment, mean, 0);
    for lag in 1..=lag_max {
        let w = 1.0 - lag as f64 / (lag_max as f64 + 1.0);
        s += 2.0 * w * autocovariance(segment, mean, lag);
    }
    // The windowed sum of mean-centered autocovariances is biased low by
    // about lag_max/n.
    s *= n as f64 / (n - lag_max) as f64;
    let df = 3.0 * n as f64 / lag_max as f64;
    (mean, s.max(0.0), df)
}

fn autocovariance(x: &[f64], mean: f64, lag: usize) -> f64 {
    let n = x.len();
    (0..n - lag)
        .map(|i| (x[i] - mean) * (x[i + lag] - mean))
        .sum::<f64>()
        / n as f64
}

#[derive(Debug, Clone, Copy)]
pub struct IntervalSummary {
    pub lower: f64,
    pub upper: f64,
    pub mean: f64,
    pub level: f64,
}

/// Highest-posterior-density interval: the shortest window of the sorted
/// draws containing ceil(level * K) of them. level = 1 is capped to all
/// draws, giving [min, max].
pub fn hpd_interval(chain: &[f64], level: f64) -> Result<IntervalSummary> {
    if chain.len() < 2 {
        return Err(Error::InvalidArgument(
            "hpd interval needs at least 2 draws".into(),
        ));
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "level must lie in (0, 1], got {level}"
        )));
    }
    let mut sorted = chain.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = sorted.len();
    let m = ((level * k as f64).ceil() as usize).clamp(2, k);
    let mut best = (0usize, f64::INFINITY);
    for i in 0..=(k - m) {
        let width = sorted[i + m - 1] - sorted[i];
        if width < best.1 {
            best = (i, width);
        }
    }
    let mean = chain.iter().sum::<f64>() / k as f64;
    Ok(IntervalSummary {
        lower: sorted[best.0],
        upper: sorted[best.0 + m - 1],
        mean,
        level,
    })
}
