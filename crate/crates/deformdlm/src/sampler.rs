//! Single-parameter MCMC updates and the hybrid one-step/chain drivers.
//!
//! One hybrid step applies, in order: FFBS for the state trajectory, a
//! random-walk Metropolis step on the log spatial range, a component-wise
//! slice update of the deformation (deformed variants only), a Gibbs draw of
//! the global scale, and a Gibbs draw of the response covariance (full or
//! diagonal depending on the variant).

use nalgebra::DMatrix;

use crate::data::{CompletedData, ObservedDataset};
use crate::dist::{
    sample_inverse_gamma, sample_inverse_wishart, InverseGammaParams, InverseWishartParams,
};
use crate::error::{Error, Result};
use crate::linalg::{jittered_cholesky, symmetrize, unvec, PosDefMatrix};
use crate::model::{init_state, sigma_prior_dof, ModelSpec, ParameterState};
use crate::rng::RandomStream;
use crate::spatial::{exp_kernel_matrix, pairwise_distances, spatial_correlation, Deformation};

/// Random-walk tuning for the spatial-range update. The step size adapts by
/// Robbins-Monro towards `target_accept` during burn-in and is frozen after.
#[derive(Debug, Clone)]
pub struct MhTuning {
    pub log_step: f64,
    pub target_accept: f64,
    pub adapt_window: usize,
}

impl Default for MhTuning {
    fn default() -> Self {
        MhTuning {
            log_step: 0.3,
            target_accept: 0.44,
            adapt_window: 50,
        }
    }
}

/// Slice-sampler tuning for deformation coordinates. The width is expressed
/// in units of the prior standard deviation of the axis being updated.
#[derive(Debug, Clone)]
pub struct SliceTuning {
    pub initial_width: f64,
    pub max_step_outs: usize,
}

impl Default for SliceTuning {
    fn default() -> Self {
        SliceTuning {
            initial_width: 1.0,
            max_step_outs: 50,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Tunings {
    pub mh: MhTuning,
    pub slice: SliceTuning,
}

/// Iteration plan: total iterations, burn-in length, thinning interval, and
/// the number of retained draws K. Draw k is taken at iteration
/// burn_in + 1 + (k-1) * thin.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub retained: usize,
}

impl ChainConfig {
    /// Derive K as the largest count with burn_in + K * thin <= iterations.
    pub fn new(iterations: usize, burn_in: usize, thin: usize, seed: u64) -> Result<Self> {
        if thin == 0 || iterations == 0 {
            return Err(Error::Config("iterations and thin must be positive".into()));
        }
        if burn_in + thin > iterations {
            return Err(Error::Config(format!(
                "burn-in {burn_in} leaves no room in {iterations} iterations"
            )));
        }
        let retained = (iterations - burn_in) / thin;
        Ok(ChainConfig {
            iterations,
            burn_in,
            thin,
            seed,
            retained,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 || self.retained == 0 {
            return Err(Error::Config("thin and retained must be positive".into()));
        }
        if self.burn_in + self.retained * self.thin > self.iterations {
            return Err(Error::Config(format!(
                "burn_in {} + K {} * thin {} exceeds iterations {}",
                self.burn_in, self.retained, self.thin, self.iterations
            )));
        }
        Ok(())
    }

    /// 1-based iteration numbers of the retained draws.
    pub fn retained_indices(&self) -> Vec<usize> {
        (0..self.retained)
            .map(|k| self.burn_in + 1 + k * self.thin)
            .collect()
    }
}

/// Per-iteration trace record.
#[derive(Debug, Clone, Copy)]
pub struct StepTrace {
    pub iteration: usize,
    pub log_posterior: f64,
    pub phi_accepted: bool,
    pub slice_resets: u32,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepInfo {
    pub phi_accepted: bool,
    pub phi_alpha: f64,
    pub slice_resets: u32,
}

/// Ordered collection of retained post-burn-in states.
#[derive(Debug, Clone)]
pub struct PosteriorSample {
    pub indices: Vec<usize>,
    pub states: Vec<ParameterState>,
}

impl PosteriorSample {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Scalar chain extracted from each retained state.
    pub fn scalar_chain(&self, f: impl Fn(&ParameterState) -> f64) -> Vec<f64> {
        self.states.iter().map(f).collect()
    }
}

// ---------------------------------------------------------------------------
// Shared residual quadratics
// ---------------------------------------------------------------------------

/// (β0 - M0)^T C0^{-1} (β0 - M0), a q x q matrix.
pub fn initial_quadratic(spec: &ModelSpec, betas: &[DMatrix<f64>]) -> DMatrix<f64> {
    spec.c0.inv_quad_mat(&(&betas[0] - &spec.m0))
}

/// Σ_t (β_t - G_t β_{t-1})^T W^{-1} (β_t - G_t β_{t-1}).
pub fn evolution_quadratic(spec: &ModelSpec, betas: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(spec.q, spec.q);
    for t in 0..spec.t_len {
        let resid = &betas[t + 1] - &spec.g_seq[t] * &betas[t];
        acc += spec.w.inv_quad_mat(&resid);
    }
    acc
}

/// Σ_t (y_t - X_t β_t)^T B^{-1} (y_t - X_t β_t).
pub fn observation_quadratic(
    spec: &ModelSpec,
    betas: &[DMatrix<f64>],
    completed: &CompletedData,
    b: &PosDefMatrix,
) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(spec.q, spec.q);
    for t in 0..spec.t_len {
        let y = unvec(completed.vector(t), spec.n, spec.q);
        let resid = y - &spec.x_seq[t] * &betas[t + 1];
        acc += b.inv_quad_mat(&resid);
    }
    acc
}

/// K = Σ_t (y_t - X_t β_t) Σ^{-1} (y_t - X_t β_t)^T, the N x N cross-product
/// matrix through which the range and deformation targets see the data:
/// Σ_t r_t^T [Σ ⊗ B]^{-1} r_t = tr(B^{-1} K).
pub fn residual_cross_product(
    spec: &ModelSpec,
    betas: &[DMatrix<f64>],
    completed: &CompletedData,
    sigma: &PosDefMatrix,
) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(spec.n, spec.n);
    for t in 0..spec.t_len {
        let y = unvec(completed.vector(t), spec.n, spec.q);
        let resid = y - &spec.x_seq[t] * &betas[t + 1];
        // resid Σ^{-1} resid^T via a triangular solve on the transpose.
        let mut u = resid.transpose();
        sigma.chol_lower().solve_lower_triangular_mut(&mut u);
        acc += u.tr_mul(&u);
    }
    acc
}

// ---------------------------------------------------------------------------
// Gibbs updates for V and Σ
// ---------------------------------------------------------------------------

/// Full-conditional parameters of the global scale:
/// shape a_V + pq/2 + Tpq/2 + TNq/2, scale b_V plus half the three
/// Σ-weighted quadratic forms.
pub fn scale_full_conditional(
    spec: &ModelSpec,
    state: &ParameterState,
    completed: &CompletedData,
    b: &PosDefMatrix,
) -> Result<InverseGammaParams> {
    let (p, q, n, t) = (
        spec.p as f64,
        spec.q as f64,
        spec.n as f64,
        spec.t_len as f64,
    );
    let shape = spec.priors.a_v + p * q / 2.0 + t * p * q / 2.0 + t * n * q / 2.0;
    let quad = state
        .sigma
        .trace_solve(&initial_quadratic(spec, &state.betas))
        + state
            .sigma
            .trace_solve(&evolution_quadratic(spec, &state.betas))
        + state
            .sigma
            .trace_solve(&observation_quadratic(spec, &state.betas, completed, b));
    if quad < -1e-8 {
        return Err(Error::Numerical(format!(
            "negative quadratic form {quad} in scale update"
        )));
    }
    InverseGammaParams::new(shape, spec.priors.b_v + 0.5 * quad.max(0.0))
}

pub fn sample_scale(
    spec: &ModelSpec,
    state: &ParameterState,
    completed: &CompletedData,
    b: &PosDefMatrix,
    rng: &mut RandomStream,
) -> Result<f64> {
    let params = scale_full_conditional(spec, state, completed, b)?;
    sample_inverse_gamma(&params, rng)
}

/// Full-conditional of the unrestricted covariance: shape hyperparameter
/// a_Σ + p + Tp + TN and scale matrix b_Σ plus the V-scaled quadratics.
pub fn covariance_full_conditional(
    spec: &ModelSpec,
    state: &ParameterState,
    completed: &CompletedData,
    b: &PosDefMatrix,
) -> Result<(f64, DMatrix<f64>)> {
    let shape = spec.priors.a_sigma + (spec.p + spec.t_len * spec.p + spec.t_len * spec.n) as f64;
    let quad = (initial_quadratic(spec, &state.betas)
        + evolution_quadratic(spec, &state.betas)
        + observation_quadratic(spec, &state.betas, completed, b))
        / state.v;
    Ok((shape, spec.priors.b_sigma.matrix() + symmetrize(&quad)))
}

pub fn sample_covariance_full(
    spec: &ModelSpec,
    state: &ParameterState,
    completed: &CompletedData,
    b: &PosDefMatrix,
    rng: &mut RandomStream,
) -> Result<PosDefMatrix> {
    let (shape, scale) = covariance_full_conditional(spec, state, completed, b)?;
    let params = InverseWishartParams::new(
        sigma_prior_dof(shape, spec.q),
        PosDefMatrix::new(scale)
            .map_err(|e| Error::Numerical(format!("covariance conditional scale not SPD: {e}")))?,
    )?;
    sample_inverse_wishart(&params, rng)
}

/// Per-variable full conditionals under a diagonal covariance: shape
/// a_i + p/2 + Tp/2 + TN/2 and scale b_i plus half the i-th diagonal of the
/// V-scaled quadratics.
pub fn variance_full_conditionals(
    spec: &ModelSpec,
    state: &ParameterState,
    completed: &CompletedData,
    b: &PosDefMatrix,
) -> Result<Vec<InverseGammaParams>> {
    let add = (spec.p + spec.t_len * spec.p + spec.t_len * spec.n) as f64 / 2.0;
    let quad = (initial_quadratic(spec, &state.betas)
        + evolution_quadratic(spec, &state.betas)
        + observation_quadratic(spec, &state.betas, completed, b))
        / state.v;
    (0..spec.q)
        .map(|i| {
            InverseGammaParams::new(
                spec.priors.a_sigma_diag[i] + add,
                spec.priors.b_sigma_diag[i] + 0.5 * quad[(i, i)],
            )
        })
        .collect()
}

pub fn sample_covariance_diag(
    spec: &ModelSpec,
    state: &ParameterState,
    completed: &CompletedData,
    b: &PosDefMatrix,
    rng: &mut RandomStream,
) -> Result<PosDefMatrix> {
    let params = variance_full_conditionals(spec, state, completed, b)?;
    let mut diag = Vec::with_capacity(spec.q);
    for p in &params {
        diag.push(sample_inverse_gamma(p, rng)?);
    }
    PosDefMatrix::from_diagonal(&diag)
}

// ---------------------------------------------------------------------------
// FFBS for the state trajectory
// ---------------------------------------------------------------------------

/// Exact joint draw of the state trajectory. Because the observation and
/// evolution covariances share the column factor Σ and the scale V, the
/// Kalman recursions run on p x p row-covariance matrices common to all q
/// columns, with p x q means; the draw at each step is matrix-normal with
/// row covariance V * C and column covariance Σ.
pub fn sample_states(
    spec: &ModelSpec,
    state: &ParameterState,
    completed: &CompletedData,
    b: &PosDefMatrix,
    rng: &mut RandomStream,
) -> Result<Vec<DMatrix<f64>>> {
    let p = spec.p;
    let t_len = spec.t_len;
    let sqrt_v = state.v.sqrt();

    let mut means = Vec::with_capacity(t_len + 1); // m_t, p x q
    let mut covs = Vec::with_capacity(t_len + 1); // C_t, p x p
    let mut priors_mean = Vec::with_capacity(t_len); // a_t
    let mut priors_cov = Vec::with_capacity(t_len); // R_t
    means.push(spec.m0.clone());
    covs.push(spec.c0.matrix().clone());

    for t in 0..t_len {
        let g = &spec.g_seq[t];
        let x = &spec.x_seq[t];
        let a_t = g * &means[t];
        let r_t = symmetrize(&(g * &covs[t] * g.transpose() + spec.w.matrix()));
        let f_t = x * &a_t;
        let q_t = symmetrize(&(x * &r_t * x.transpose() + b.matrix()));
        let q_fact = PosDefMatrix::new(q_t).map_err(|e| {
            Error::Numerical(format!("filter innovation covariance at t={}: {e}", t + 1))
        })?;
        // gain^T = Q^{-1} X R, so gain = R X^T Q^{-1}
        let gain = q_fact.solve_mat(&(x * &r_t)).transpose();
        let y = unvec(completed.vector(t), spec.n, spec.q);
        let m_t = &a_t + &gain * (y - f_t);
        let c_t = symmetrize(&(&r_t - &gain * x * &r_t));
        means.push(m_t);
        covs.push(c_t);
        priors_mean.push(a_t);
        priors_cov.push(r_t);
    }

    let col_chol = state.sigma.chol_lower();
    let mut draws = vec![DMatrix::zeros(p, spec.q); t_len + 1];

    let (last_chol, _) = jittered_cholesky(&covs[t_len]).map_err(|e| {
        Error::Numerical(format!(
            "filter covariance at t={t_len} lost definiteness: {e}"
        ))
    })?;
    draws[t_len] = draw_matrix_normal(&means[t_len], &last_chol, col_chol, sqrt_v, spec.q, rng);

    for t in (0..t_len).rev() {
        let g_next = &spec.g_seq[t];
        let r_fact = PosDefMatrix::new(priors_cov[t].clone())
            .map_err(|e| Error::Numerical(format!("one-step covariance at t={}: {e}", t + 1)))?;
        // J = C_t G^T R^{-1}
        let j = r_fact.solve_mat(&(g_next * &covs[t])).transpose();
        let h = &means[t] + &j * (&draws[t + 1] - &priors_mean[t]);
        let cond_cov = symmetrize(&(&covs[t] - &j * g_next * &covs[t]));
        let (h_chol, _) = jittered_cholesky(&cond_cov)
            .map_err(|e| Error::Numerical(format!("backward covariance at t={t}: {e}")))?;
        draws[t] = draw_matrix_normal(&h, &h_chol, col_chol, sqrt_v, spec.q, rng);
    }
    Ok(draws)
}

fn draw_matrix_normal(
    mean: &DMatrix<f64>,
    row_chol: &DMatrix<f64>,
    col_chol: &DMatrix<f64>,
    scale_sqrt: f64,
    q: usize,
    rng: &mut RandomStream,
) -> DMatrix<f64> {
    let z = DMatrix::from_fn(mean.nrows(), q, |_, _| rng.standard_normal());
    mean + (row_chol * z * col_chol.transpose()) * scale_sqrt
}

// ---------------------------------------------------------------------------
// Metropolis-Hastings on the spatial range
// ---------------------------------------------------------------------------

/// Log full-conditional of the range (up to a constant):
/// -rate*phi - (Tq/2) ln det B(phi) - tr(B(phi)^{-1} K) / (2V).
pub fn range_log_target(
    phi: f64,
    distances: &DMatrix<f64>,
    cross: &DMatrix<f64>,
    spec: &ModelSpec,
    v: f64,
) -> Result<f64> {
    if phi <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let b = exp_kernel_matrix(distances, phi)?;
    let tq = (spec.t_len * spec.q) as f64;
    Ok(-spec.priors.phi_prior_rate * phi - 0.5 * tq * b.log_det() - 0.5 * b.trace_solve(cross) / v)
}

pub struct RangeUpdate {
    pub phi: f64,
    pub b: PosDefMatrix,
    pub accepted: bool,
    pub alpha: f64,
}

/// One random-walk step on ln(phi) with Jacobian correction. Numerical
/// failures while evaluating the proposal lead to rejection.
pub fn sample_range(
    spec: &ModelSpec,
    state: &ParameterState,
    cross: &DMatrix<f64>,
    tuning: &MhTuning,
    rng: &mut RandomStream,
) -> Result<RangeUpdate> {
    let distances = pairwise_distances(state.deform.coords());
    let current = range_log_target(state.phi, &distances, cross, spec, state.v)?;
    if !current.is_finite() {
        return Err(Error::Numerical(format!(
            "range target not finite at phi = {}",
            state.phi
        )));
    }
    let proposal = (state.phi.ln() + tuning.log_step * rng.standard_normal()).exp();
    let cand =
        range_log_target(proposal, &distances, cross, spec, state.v).unwrap_or(f64::NEG_INFINITY);
    let log_alpha = cand - current + proposal.ln() - state.phi.ln();
    let alpha = log_alpha.exp().min(1.0);
    let accepted = rng.uniform().ln() < log_alpha;
    let phi = if accepted { proposal } else { state.phi };
    let b = exp_kernel_matrix(&distances, phi)?;
    Ok(RangeUpdate {
        phi,
        b,
        accepted,
        alpha,
    })
}

// ---------------------------------------------------------------------------
// Slice sampler for the deformation
// ---------------------------------------------------------------------------

struct DeformTarget<'a> {
    spec: &'a ModelSpec,
    rd_inv: DMatrix<f64>,
    cross: &'a DMatrix<f64>,
    v: f64,
    phi: f64,
    deform: Deformation,
    distances: DMatrix<f64>,
}

impl<'a> DeformTarget<'a> {
    fn new(spec: &'a ModelSpec, state: &ParameterState, cross: &'a DMatrix<f64>, phi: f64) -> Self {
        let distances = pairwise_distances(state.deform.coords());
        DeformTarget {
            spec,
            rd_inv: spec.deform_prior.rd.inverse(),
            cross,
            v: state.v,
            phi,
            deform: state.deform.clone(),
            distances,
        }
    }

    fn set_coord(&mut self, axis: usize, site: usize, value: f64) {
        self.deform.set_coord(axis, site, value);
        let coords = self.deform.coords();
        for other in 0..coords.ncols() {
            let dx = coords[(0, site)] - coords[(0, other)];
            let dy = coords[(1, site)] - coords[(1, other)];
            let d = (dx * dx + dy * dy).sqrt();
            self.distances[(site, other)] = d;
            self.distances[(other, site)] = d;
        }
    }

    /// Log conditional of one coordinate; terms constant in this coordinate
    /// (the other axis' prior quadratic) are dropped.
    fn log_target(&mut self, axis: usize, site: usize, value: f64) -> f64 {
        self.set_coord(axis, site, value);
        let row = self.deform.coords().row(axis) - self.spec.sites.coords().row(axis);
        let prior = -(&row * &self.rd_inv * row.transpose())[(0, 0)]
            / (2.0 * self.spec.deform_prior.sigma2d[axis]);
        let b = match exp_kernel_matrix(&self.distances, self.phi) {
            Ok(b) => b,
            Err(_) => return f64::NEG_INFINITY,
        };
        let tq = (self.spec.t_len * self.spec.q) as f64;
        prior - 0.5 * tq * b.log_det() - 0.5 * b.trace_solve(self.cross) / self.v
    }
}

/// Log full-conditional of the whole deformation matrix (up to a constant):
/// the matrix-normal prior quadratic plus the same likelihood terms the
/// range target sees through the residual cross-product.
pub fn deformation_log_target(
    spec: &ModelSpec,
    deform: &Deformation,
    phi: f64,
    cross: &DMatrix<f64>,
    v: f64,
) -> Result<f64> {
    let mut prior = 0.0;
    let resid = deform.coords() - spec.sites.coords();
    for axis in 0..2 {
        let row = resid.row(axis).transpose();
        prior -= 0.5 * spec.deform_prior.rd.inv_quad(&row) / spec.deform_prior.sigma2d[axis];
    }
    let b = exp_kernel_matrix(&pairwise_distances(deform.coords()), phi)?;
    let tq = (spec.t_len * spec.q) as f64;
    Ok(prior - 0.5 * tq * b.log_det() - 0.5 * b.trace_solve(cross) / v)
}

pub struct DeformationUpdate {
    pub deform: Deformation,
    pub b: PosDefMatrix,
    pub resets: u32,
}

/// Update every non-anchor coordinate once by stepping-out/shrinkage slice
/// sampling. Anchors are never touched. If the shrinkage interval collapses
/// the coordinate keeps its current value and the reset counter increments.
pub fn sample_deformation(
    spec: &ModelSpec,
    state: &ParameterState,
    cross: &DMatrix<f64>,
    phi: f64,
    tuning: &SliceTuning,
    rng: &mut RandomStream,
) -> Result<DeformationUpdate> {
    let mut target = DeformTarget::new(spec, state, cross, phi);
    let anchors = spec.sites.anchors();
    let mut resets = 0u32;

    for site in 0..spec.n {
        if anchors.contains(&site) {
            continue;
        }
        for axis in 0..2 {
            let width = tuning.initial_width * spec.deform_prior.sigma2d[axis].sqrt();
            let x0 = target.deform.coords()[(axis, site)];
            let f0 = target.log_target(axis, site, x0);
            if !f0.is_finite() {
                resets += 1;
                target.set_coord(axis, site, x0);
                continue;
            }
            // Slice level, then stepping out (Neal 2003, limited variant).
            let level = f0 + rng.uniform().ln();
            let mut lo = x0 - width * rng.uniform();
            let mut hi = lo + width;
            let budget = tuning.max_step_outs;
            let mut j = (rng.uniform() * budget as f64).floor() as usize;
            let mut k = budget.saturating_sub(1).saturating_sub(j);
            while j > 0 && target.log_target(axis, site, lo) > level {
                lo -= width;
                j -= 1;
            }
            while k > 0 && target.log_target(axis, site, hi) > level {
                hi += width;
                k -= 1;
            }
            // Shrinkage.
            let mut accepted = false;
            for _ in 0..200 {
                let cand = rng.uniform_range(lo, hi);
                if target.log_target(axis, site, cand) > level {
                    target.set_coord(axis, site, cand);
                    accepted = true;
                    break;
                }
                if cand < x0 {
                    lo = cand;
                } else {
                    hi = cand;
                }
                if (hi - lo) < 1e-14 {
                    break;
                }
            }
            if !accepted {
                target.set_coord(axis, site, x0);
                resets += 1;
            }
        }
    }

    let b = exp_kernel_matrix(&target.distances, phi)?;
    Ok(DeformationUpdate {
        deform: target.deform,
        b,
        resets,
    })
}

// ---------------------------------------------------------------------------
// Hybrid step and chain driver
// ---------------------------------------------------------------------------

/// One full parameter sweep over completed data, in the fixed order:
/// states, range, deformation (deformed variants), scale, covariance.
pub fn hybrid_step(
    spec: &ModelSpec,
    state: &ParameterState,
    completed: &CompletedData,
    tunings: &Tunings,
    rng: &mut RandomStream,
) -> Result<(ParameterState, StepInfo)> {
    let mut next = state.clone();
    let mut info = StepInfo::default();

    let b_current = spatial_correlation(&next.deform, next.phi)?;
    next.betas = sample_states(spec, &next, completed, &b_current, rng)?;

    let cross = residual_cross_product(spec, &next.betas, completed, &next.sigma);

    let range = sample_range(spec, &next, &cross, &tunings.mh, rng)?;
    next.phi = range.phi;
    info.phi_accepted = range.accepted;
    info.phi_alpha = range.alpha;
    let mut b = range.b;

    if spec.variant.has_deformation() {
        let update = sample_deformation(spec, &next, &cross, next.phi, &tunings.slice, rng)?;
        next.deform = update.deform;
        b = update.b;
        info.slice_resets = update.resets;
    } else {
        next.deform = Deformation::identity(&spec.sites);
    }

    next.v = sample_scale(spec, &next, completed, &b, rng)?;

    next.sigma = if spec.variant.correlated_responses() {
        sample_covariance_full(spec, &next, completed, &b, rng)?
    } else {
        sample_covariance_diag(spec, &next, completed, &b, rng)?
    };

    Ok((next, info))
}

/// Robbins-Monro adaptation of the log step size, applied during burn-in.
pub(crate) fn adapt_mh_tuning(tuning: &mut MhTuning, info: &StepInfo, iteration: usize) {
    let gamma = (tuning.adapt_window as f64 / (tuning.adapt_window + iteration) as f64).powf(0.6);
    tuning.log_step =
        (tuning.log_step.ln() + gamma * (info.phi_alpha - tuning.target_accept)).exp();
    tuning.log_step = tuning.log_step.clamp(1e-4, 10.0);
}

/// Run a hybrid chain on fully observed data, retaining every `thin`-th
/// state after burn-in.
pub fn run_chain(
    spec: &ModelSpec,
    data: &ObservedDataset,
    config: &ChainConfig,
    tunings: &Tunings,
    mut on_step: impl FnMut(&StepTrace),
) -> Result<PosteriorSample> {
    config.validate()?;
    spec.check_data(data)?;
    let completed = CompletedData::from_complete(data)?;
    let mut rng = RandomStream::from_seed(config.seed);
    let mut state = init_state(spec, data, &mut rng)?;
    let mut tunings = tunings.clone();

    let mut indices = Vec::with_capacity(config.retained);
    let mut states = Vec::with_capacity(config.retained);
    let retained = config.retained_indices();
    let mut next_keep = 0usize;

    for iteration in 1..=config.iterations {
        let (new_state, info) = hybrid_step(spec, &state, &completed, &tunings, &mut rng)?;
        state = new_state;
        if iteration <= config.burn_in {
            adapt_mh_tuning(&mut tunings.mh, &info, iteration);
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
