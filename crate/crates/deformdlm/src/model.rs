//! Model specification, parameter state, priors, and likelihood for the
//! three-stage matrix-variate dynamic hierarchy.

use nalgebra::DMatrix;

use crate::data::{CompletedData, ObservedDataset};
use crate::dist::{
    gamma_logpdf, inverse_gamma_logpdf, inverse_wishart_logpdf, logpdf_mvn_kron,
    matrix_normal_logpdf, InverseGammaParams, InverseWishartParams, MatrixNormalParams,
};
use crate::error::{Error, Result};
use crate::linalg::{vec_of, PosDefMatrix};
use crate::rng::RandomStream;
use crate::spatial::{spatial_correlation, DeformPrior, Deformation, SiteSet};

/// The four competing model variants: with/without deformation crossed with
/// correlated/independent responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    M1,
    M2,
    M3,
    M4,
}

impl Variant {
    /// Deformed latent coordinates are estimated (otherwise d(s) = s).
    pub fn has_deformation(self) -> bool {
        matches!(self, Variant::M3 | Variant::M4)
    }

    /// Full covariance across responses (otherwise diagonal).
    pub fn correlated_responses(self) -> bool {
        matches!(self, Variant::M2 | Variant::M4)
    }

    pub fn all() -> [Variant; 4] {
        [Variant::M1, Variant::M2, Variant::M3, Variant::M4]
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Variant::M1 => "M1",
            Variant::M2 => "M2",
            Variant::M3 => "M3",
            Variant::M4 => "M4",
        };
        f.pad(s)
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "M1" | "m1" => Ok(Variant::M1),
            "M2" | "m2" => Ok(Variant::M2),
            "M3" | "m3" => Ok(Variant::M3),
            "M4" | "m4" => Ok(Variant::M4),
            other => Err(Error::Config(format!(
                "unknown model variant '{other}' (expected M1..M4)"
            ))),
        }
    }
}

/// The covariance prior for correlated responses is specified through the
/// kernel |Σ|^{-(q + a/2)} exp{-tr(b Σ^{-1})/2}; in the standard
/// inverse-Wishart parameterization that is dof = a + q - 1 with scale b.
pub fn sigma_prior_dof(a_sigma: f64, q: usize) -> f64 {
    a_sigma + q as f64 - 1.0
}

#[derive(Debug, Clone)]
pub struct HyperParams {
    pub a_v: f64,
    pub b_v: f64,
    /// Shape hyperparameter of the full covariance prior (see [`sigma_prior_dof`]).
    pub a_sigma: f64,
    pub b_sigma: PosDefMatrix,
    /// Per-variable inverse-gamma hyperparameters for the diagonal variants.
    pub a_sigma_diag: Vec<f64>,
    pub b_sigma_diag: Vec<f64>,
    /// Rate of the Gamma(1, rate) prior on the spatial range; 0.3 / zeta with
    /// zeta the median pairwise distance between gauged sites.
    pub phi_prior_rate: f64,
}

impl HyperParams {
    /// Defaults used throughout: a_V = b_V = 0.001, a_Σ = 0.001,
    /// b_Σ = 0.001 I, per-variable IG(0.001, 0.001) for diagonal variants.
    pub fn defaults(q: usize, zeta: f64) -> Result<Self> {
        if zeta <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "median site distance must be positive, got {zeta}"
            )));
        }
        Ok(HyperParams {
            a_v: 0.001,
            b_v: 0.001,
            a_sigma: 0.001,
            b_sigma: PosDefMatrix::new(DMatrix::identity(q, q) * 0.001)?,
            a_sigma_diag: vec![0.001; q],
            b_sigma_diag: vec![0.001; q],
            phi_prior_rate: 0.3 / zeta,
        })
    }

    pub fn validate(&self, q: usize, variant: Variant) -> Result<()> {
        if self.a_v <= 0.0 || self.b_v <= 0.0 {
            return Err(Error::Config("a_v and b_v must be positive".into()));
        }
        if self.phi_prior_rate <= 0.0 {
            return Err(Error::Config("phi prior rate must be positive".into()));
        }
        if variant.correlated_responses() {
            if self.b_sigma.dim() != q {
                return Err(Error::Config(format!(
                    "b_sigma must be {q}x{q}, got {}",
                    self.b_sigma.dim()
                )));
            }
            if sigma_prior_dof(self.a_sigma, q) <= q as f64 - 1.0 {
                return Err(Error::Config(format!(
                    "a_sigma = {} gives an improper covariance prior",
                    self.a_sigma
                )));
            }
        } else {
            if self.a_sigma_diag.len() != q || self.b_sigma_diag.len() != q {
                return Err(Error::Config(format!(
                    "diagonal sigma hyperparameters must have length {q}"
                )));
            }
            if self
                .a_sigma_diag
                .iter()
                .chain(&self.b_sigma_diag)
                .any(|&x| x <= 0.0)
            {
                return Err(Error::Config(
                    "diagonal sigma hyperparameters must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Dimensions, fixed matrices, hyperparameters, and variant for one fit.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub n: usize,
    pub q: usize,
    pub p: usize,
    pub t_len: usize,
    pub variant: Variant,
    pub g_seq: Vec<DMatrix<f64>>,
    pub x_seq: Vec<DMatrix<f64>>,
    pub w: PosDefMatrix,
    pub m0: DMatrix<f64>,
    pub c0: PosDefMatrix,
    pub priors: HyperParams,
    pub deform_prior: DeformPrior,
    pub sites: SiteSet,
}

impl ModelSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        sites: SiteSet,
        variant: Variant,
        q: usize,
        g_seq: Vec<DMatrix<f64>>,
        x_seq: Vec<DMatrix<f64>>,
        w: PosDefMatrix,
        m0: DMatrix<f64>,
        c0: PosDefMatrix,
        priors: HyperParams,
        deform_prior: DeformPrior,
    ) -> Result<Self> {
        let n = sites.count();
        let t_len = x_seq.len();
        if g_seq.len() != t_len {
            return Err(Error::dim_mismatch(format!(
                "{} evolution matrices for {} time points",
                g_seq.len(),
                t_len
            )));
        }
        let p = m0.nrows();
        if q == 0 || p == 0 {
            return Err(Error::InvalidArgument("p and q must be positive".into()));
        }
        if m0.ncols() != q {
            return Err(Error::dim_mismatch(format!(
                "m0 is {}x{}, expected {}x{}",
                m0.nrows(),
                m0.ncols(),
                p,
                q
            )));
        }
        if w.dim() != p || c0.dim() != p {
            return Err(Error::dim_mismatch("w and c0 must be p x p to match m0"));
        }
        for (t, g) in g_seq.iter().enumerate() {
            if g.nrows() != p || g.ncols() != p {
                return Err(Error::dim_mismatch(format!(
                    "evolution matrix at time {} is {}x{}, expected {p}x{p}",
                    t + 1,
                    g.nrows(),
                    g.ncols()
                )));
            }
        }
        for (t, x) in x_seq.iter().enumerate() {
            if x.nrows() != n || x.ncols() != p {
                return Err(Error::dim_mismatch(format!(
                    "design matrix at time {} is {}x{}, expected {n}x{p}",
                    t + 1,
                    x.nrows(),
                    x.ncols()
                )));
            }
        }
        priors.validate(q, variant)?;
        Ok(ModelSpec {
            n,
            q,
            p,
            t_len,
            variant,
            g_seq,
            x_seq,
            w,
            m0,
            c0,
            priors,
            deform_prior,
            sites,
        })
    }

    pub fn check_data(&self, data: &ObservedDataset) -> Result<()> {
        if data.n() != self.n || data.q() != self.q || data.t_len() != self.t_len {
            return Err(Error::dim_mismatch(format!(
                "dataset is N={}, q={}, T={}; spec wants N={}, q={}, T={}",
                data.n(),
                data.q(),
                data.t_len(),
                self.n,
                self.q,
                self.t_len
            )));
        }
        if data.sites().coords() != self.sites.coords() {
            return Err(Error::Data(
                "dataset site coordinates differ from the model's".into(),
            ));
        }
        Ok(())
    }
}

/// One MCMC state: state trajectories, scale, response covariance, spatial
/// range, deformation, and the current imputations for missing responses.
#[derive(Debug, Clone)]
pub struct ParameterState {
    pub betas: Vec<DMatrix<f64>>,
    pub v: f64,
    pub sigma: PosDefMatrix,
    pub phi: f64,
    pub deform: Deformation,
    pub imputed: Vec<Vec<f64>>,
}

impl ParameterState {
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if self.betas.len() != spec.t_len + 1 {
            return Err(Error::dim_mismatch(format!(
                "state trajectory has {} entries, expected {}",
                self.betas.len(),
                spec.t_len + 1
            )));
        }
        if !(self.v > 0.0 && self.v.is_finite()) {
            return Err(Error::Numerical(format!(
                "v must be positive, got {}",
                self.v
            )));
        }
        if !(self.phi > 0.0 && self.phi.is_finite()) {
            return Err(Error::Numerical(format!(
                "phi must be positive, got {}",
                self.phi
            )));
        }
        if self.sigma.dim() != spec.q {
            return Err(Error::dim_mismatch("sigma dimension != q"));
        }
        if !spec.variant.correlated_responses() {
            for i in 0..spec.q {
                for j in 0..spec.q {
                    if i != j && self.sigma.matrix()[(i, j)] != 0.0 {
                        return Err(Error::Numerical(
                            "sigma must be diagonal under this variant".into(),
                        ));
                    }
                }
            }
        }
        if !spec.variant.has_deformation() && self.deform.coords() != spec.sites.coords() {
            return Err(Error::Numerical(
                "deformation must equal the site coordinates under this variant".into(),
            ));
        }
        for &a in &spec.sites.anchors() {
            if self.deform.coords().column(a) != spec.sites.coords().column(a) {
                return Err(Error::Numerical(format!(
                    "anchor site {a} moved away from its geographic coordinates"
                )));
            }
        }
        Ok(())
    }
}

/// Observation-equation mean vec((I_q ⊗ X_t) vec(β_t)) = vec(X_t β_t).
pub fn observation_mean(spec: &ModelSpec, betas: &[DMatrix<f64>], t: usize) -> DMatrix<f64> {
    &spec.x_seq[t] * &betas[t + 1]
}

/// Log-likelihood of the completed data given the state, reusing a
/// prebuilt spatial correlation matrix.
pub fn loglik_completed(
    spec: &ModelSpec,
    state: &ParameterState,
    completed: &CompletedData,
    b: &PosDefMatrix,
) -> Result<f64> {
    let mut total = 0.0;
    for t in 0..spec.t_len {
        let mean = vec_of(&observation_mean(spec, &state.betas, t));
        total += logpdf_mvn_kron(completed.vector(t), &mean, &state.sigma, b, state.v)?;
    }
    Ok(total)
}

/// Log-likelihood over all time points. Missing entries are filled from
/// `state.imputed`.
pub fn loglik(spec: &ModelSpec, state: &ParameterState, data: &ObservedDataset) -> Result<f64> {
    let completed = CompletedData::assemble(data, &state.imputed)?;
    let b = spatial_correlation(&state.deform, state.phi)?;
    loglik_completed(spec, state, &completed, &b)
}

/// Joint log-prior: range, deformation (estimated variants only), scale,
/// response covariance, and the state trajectory.
pub fn logprior(spec: &ModelSpec, state: &ParameterState) -> Result<f64> {
    let mut total = gamma_logpdf(state.phi, 1.0, spec.priors.phi_prior_rate);

    if spec.variant.has_deformation() {
        let row_cov = PosDefMatrix::from_diagonal(&spec.deform_prior.sigma2d)?;
        let params = MatrixNormalParams::new(
            spec.sites.coords().clone(),
            row_cov,
            spec.deform_prior.rd.clone(),
        )?;
        total += matrix_normal_logpdf(state.deform.coords(), &params);
    }

    total += inverse_gamma_logpdf(
        state.v,
        &InverseGammaParams::new(spec.priors.a_v, spec.priors.b_v)?,
    );

    if spec.variant.correlated_responses() {
        let params = InverseWishartParams::new(
            sigma_prior_dof(spec.priors.a_sigma, spec.q),
            spec.priors.b_sigma.clone(),
        )?;
        total += inverse_wishart_logpdf(&state.sigma, &params);
    } else {
        for i in 0..spec.q {
            total += inverse_gamma_logpdf(
                state.sigma.matrix()[(i, i)],
                &InverseGammaParams::new(spec.priors.a_sigma_diag[i], spec.priors.b_sigma_diag[i])?,
            );
        }
    }

    total += logpdf_mvn_kron(
        &vec_of(&state.betas[0]),
        &vec_of(&spec.m0),
        &state.sigma,
        &spec.c0,
        state.v,
    )?;
    for t in 0..spec.t_len {
        let mean = vec_of(&(&spec.g_seq[t] * &state.betas[t]));
        total += logpdf_mvn_kron(
            &vec_of(&state.betas[t + 1]),
            &mean,
            &state.sigma,
            &spec.w,
            state.v,
        )?;
    }
    Ok(total)
}

pub fn log_posterior(
    spec: &ModelSpec,
    state: &ParameterState,
    data: &ObservedDataset,
) -> Result<f64> {
    Ok(loglik(spec, state, data)? + logprior(spec, state)?)
}

/// Deterministic starting state: v = 1, Σ = I, β₀ = M₀ propagated by the
/// evolution matrices, φ at the prior mean 1/rate scaled to zeta, D = S, and
/// per-variable observed means for the missing entries.
pub fn init_state(
    spec: &ModelSpec,
    data: &ObservedDataset,
    _rng: &mut RandomStream,
) -> Result<ParameterState> {
    spec.check_data(data)?;
    let mut betas = Vec::with_capacity(spec.t_len + 1);
    betas.push(spec.m0.clone());
    for t in 0..spec.t_len {
        let next = &spec.g_seq[t] * &betas[t];
        betas.push(next);
    }

    let n = spec.n;
    let mut imputed = Vec::with_capacity(spec.t_len);
    if spec.t_len > 0 {
        let mut var_means = Vec::with_capacity(spec.q);
        for i in 0..spec.q {
            var_means.push(data.observed_mean(i)?);
        }
        for t in 0..spec.t_len {
            let fills: Vec<f64> = data
                .layout(t)
                .missing_indices()
                .iter()
                .map(|&k| var_means[k / n])
                .collect();
            imputed.push(fills);
        }
    }

    let phi = spec.priors.phi_prior_rate / 0.3; // = 1 / zeta
    let state = ParameterState {
        betas,
        v: 1.0,
        sigma: PosDefMatrix::identity(spec.q),
        phi,
        deform: Deformation::identity(&spec.sites),
        imputed,
    };
    state.validate(spec)?;
    Ok(state)
}
