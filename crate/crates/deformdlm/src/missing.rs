//! Conditional imputation of missing responses and the data-augmentation
//! chain: alternate an imputation draw given the current parameters with a
//! hybrid parameter sweep on the completed data.

use nalgebra::{DMatrix, DVector};

use crate::data::{CompletedData, MissingLayout, ObservedDataset, TimeClass};
use crate::error::{Error, Result};
use crate::linalg::PosDefMatrix;
use crate::model::{init_state, observation_mean, ModelSpec, ParameterState};
use crate::rng::RandomStream;
use crate::sampler::{hybrid_step, ChainConfig, PosteriorSample, StepInfo, StepTrace, Tunings};
use crate::spatial::spatial_correlation;

/// Entry (k1, k2) of Σ ⊗ B for column-stacked vec indices: variable index is
/// k / N, site index k % N.
#[inline]
fn kron_entry(sigma: &DMatrix<f64>, b: &DMatrix<f64>, n: usize, k1: usize, k2: usize) -> f64 {
    sigma[(k1 / n, k2 / n)] * b[(k1 % n, k2 % n)]
}

/// Conditional moments of the missing block given the observed block, for a
/// joint Normal(mu, V * Σ⊗B) reordered observed-first by `layout`:
/// mean_mis + Δ_mo Δ_obs^{-1} (y_obs - mean_obs) and the Schur complement
/// Δ_mis - Δ_mo Δ_obs^{-1} Δ_om. The returned covariance excludes the V
/// factor; for a fully missing time point the marginal moments are returned.
pub fn conditional_moments(
    y: &DVector<f64>,
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    b: &DMatrix<f64>,
    layout: &MissingLayout,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = b.nrows();
    let n_obs = layout.n_obs();
    let n_mis = layout.n_mis();
    let obs_idx = layout.observed_indices();
    let mis_idx = layout.missing_indices();

    let mu_mis = DVector::from_fn(n_mis, |j, _| mu[mis_idx[j]]);
    let delta_mis = DMatrix::from_fn(n_mis, n_mis, |r, c| {
        kron_entry(sigma, b, n, mis_idx[r], mis_idx[c])
    });
    if n_obs == 0 {
        return Ok((mu_mis, delta_mis));
    }

    let delta_obs = DMatrix::from_fn(n_obs, n_obs, |r, c| {
        kron_entry(sigma, b, n, obs_idx[r], obs_idx[c])
    });
    let delta_mo = DMatrix::from_fn(n_mis, n_obs, |r, c| {
        kron_entry(sigma, b, n, mis_idx[r], obs_idx[c])
    });
    let resid = DVector::from_fn(n_obs, |j, _| y[obs_idx[j]] - mu[obs_idx[j]]);

    let obs_fact = PosDefMatrix::new(delta_obs)
        .map_err(|e| Error::Numerical(format!("observed-block covariance: {e}")))?;
    let mean = &mu_mis + &delta_mo * obs_fact.solve_vec(&resid);
    let cov = &delta_mis - &delta_mo * obs_fact.solve_mat(&delta_mo.transpose());
    Ok((mean, cov))
}

/// Draw the missing responses at every time point from their conditional
/// (partially observed) or marginal (fully missing) Gaussian law, and return
/// the completed dataset. Observed entries are copied through bit-exactly.
pub fn impute_missing(
    spec: &ModelSpec,
    state: &ParameterState,
    data: &ObservedDataset,
    rng: &mut RandomStream,
) -> Result<CompletedData> {
    let b = spatial_correlation(&state.deform, state.phi)?;
    let sqrt_v = state.v.sqrt();
    let mut imputed = Vec::with_capacity(data.t_len());
    for t in 0..data.t_len() {
        let layout = data.layout(t);
        if layout.class() == TimeClass::Complete {
            imputed.push(Vec::new());
            continue;
        }
        let mu = crate::linalg::vec_of(&observation_mean(spec, &state.betas, t));
        let (mean, cov) = conditional_moments(
            data.vector(t),
            &mu,
            state.sigma.matrix(),
            b.matrix(),
            layout,
        )?;
        let fact = PosDefMatrix::new(cov)
            .map_err(|e| Error::Numerical(format!("conditional covariance at t={}: {e}", t + 1)))?;
        let z = DVector::from_fn(layout.n_mis(), |_, _| rng.standard_normal());
        let draw = &mean + fact.chol_lower() * z * sqrt_v;
        imputed.push(draw.iter().copied().collect());
    }
    CompletedData::assemble(data, &imputed)
}

/// One data-augmentation sweep: imputation under the current state, then a
/// hybrid parameter step treating the completed data as fully observed.
pub fn da_step(
    spec: &ModelSpec,
    state: &ParameterState,
    data: &ObservedDataset,
    tunings: &Tunings,
    rng: &mut RandomStream,
) -> Result<(ParameterState, StepInfo)> {
    let completed = impute_missing(spec, state, data, rng)?;
    let (mut next, info) = hybrid_step(spec, state, &completed, tunings, rng)?;
    next.imputed = completed.imputed().to_vec();
    Ok((next, info))
}

/// Data-augmentation chain. Retained states carry their paired imputations,
/// so the posterior sample holds {parameters, missing draws} jointly.
pub fn run_da_chain(
    spec: &ModelSpec,
    data: &ObservedDataset,
    config: &ChainConfig,
    tunings: &Tunings,
    mut on_step: impl FnMut(&StepTrace),
) -> Result<PosteriorSample> {
    config.validate()?;
    spec.check_data(data)?;
    let mut rng = RandomStream::from_seed(config.seed);
    let mut state = init_state(spec, data, &mut rng)?;
    let mut tunings = tunings.clone();

    let mut indices = Vec::with_capacity(config.retained);
    let mut states = Vec::with_capacity(config.retained);
    let retained = config.retained_indices();
    let mut next_keep = 0usize;

    for iteration in 1..=config.iterations {
        let (new_state, info) = da_step(spec, &state, data, &tunings, &mut rng)?;
        state = new_state;
        if iteration <= config.burn_in {
            crate::sampler::adapt_mh_tuning(&mut tunings.mh, &info, iteration);
        }
        let lp = crate::model::log_posterior(spec, &state, data)?;
        on_step(&StepTrace {
            iteration,
            log_posterior: lp,
            phi_accepted: info.phi_accepted,
            slice_resets: info.slice_resets,
        });
        if next_keep < retained.len() && iteration == retained[next_keep] {
            indices.push(iteration);
            states.push(state.clone());
            next_keep += 1;
        }
    }
    Ok(PosteriorSample { indices, states })
}
