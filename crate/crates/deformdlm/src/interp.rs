//! Posterior-predictive interpolation at ungauged sites: extend the
//! deformation through its conditional matrix-normal law, then draw the
//! responses from the kriging-type conditional given the completed data.

use nalgebra::DMatrix;

use crate::data::{CompletedData, ObservedDataset};
use crate::error::{Error, Result};
use crate::linalg::{symmetrize, unvec, PosDefMatrix};
use crate::model::{observation_mean, ModelSpec, ParameterState};
use crate::rng::RandomStream;
use crate::sampler::PosteriorSample;
use crate::spatial::{
    cross_distances, exp_kernel_matrix, gaussian_cross_correlation, pairwise_distances,
    spatial_correlation, DeformPrior, SiteSet,
};

/// Ungauged sites with their design matrices.
#[derive(Debug, Clone)]
pub struct UngaugedSet {
    coords: DMatrix<f64>,
    x_star_seq: Vec<DMatrix<f64>>,
}

impl UngaugedSet {
    pub fn new(
        coords: DMatrix<f64>,
        x_star_seq: Vec<DMatrix<f64>>,
        gauged: &SiteSet,
        p: usize,
    ) -> Result<Self> {
        if coords.nrows() != 2 || coords.ncols() == 0 {
            return Err(Error::dim_mismatch(
                "ungauged coordinates must be 2 x N* with N* >= 1",
            ));
        }
        let n_star = coords.ncols();
        for j in 0..n_star {
            for g in 0..gauged.count() {
                let dx = coords[(0, j)] - gauged.coords()[(0, g)];
                let dy = coords[(1, j)] - gauged.coords()[(1, g)];
                if dx.abs() < 1e-12 && dy.abs() < 1e-12 {
                    return Err(Error::Data(format!(
                        "ungauged site {} coincides with gauged site {}",
                        j + 1,
                        g + 1
                    )));
                }
            }
        }
        for (t, x) in x_star_seq.iter().enumerate() {
            if x.nrows() != n_star || x.ncols() != p {
                return Err(Error::dim_mismatch(format!(
                    "ungauged design at time {} is {}x{}, expected {}x{}",
                    t + 1,
                    x.nrows(),
                    x.ncols(),
                    n_star,
                    p
                )));
            }
        }
        Ok(UngaugedSet { coords, x_star_seq })
    }

    pub fn count(&self) -> usize {
        self.coords.ncols()
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn design(&self, t: usize) -> &DMatrix<f64> {
        &self.x_star_seq[t]
    }

    pub fn t_len(&self) -> usize {
        self.x_star_seq.len()
    }
}

/// One interpolated deformation and response path per retained draw.
#[derive(Debug, Clone)]
pub struct PredictiveDraws {
    pub d_stars: Vec<DMatrix<f64>>,
    /// y_stars[k][t] is the N* x q response draw at time t for retained draw k.
    pub y_stars: Vec<Vec<DMatrix<f64>>>,
}

impl PredictiveDraws {
    pub fn len(&self) -> usize {
        self.y_stars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_stars.is_empty()
    }

    /// Draw chain for one (site, variable, time) cell.
    pub fn cell_chain(&self, site: usize, var: usize, t: usize) -> Vec<f64> {
        self.y_stars
            .iter()
            .map(|per_t| per_t[t][(site, var)])
            .collect()
    }
}

/// Conditional moments of the ungauged deformed coordinates given the gauged
/// deformation: mean S* + (D - S) Rd^{-1} R_gu and the Gaussian-kernel Schur
/// complement forming the column covariance (the row covariance is the fixed
/// diagonal sigma_d^2).
pub fn deformation_extension_moments(
    state: &ParameterState,
    sites: &SiteSet,
    ungauged_coords: &DMatrix<f64>,
    prior: &DeformPrior,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let r_gu = gaussian_cross_correlation(sites.coords(), ungauged_coords, prior.psi);
    let r_star = pairwise_distances(ungauged_coords).map(|d| (-prior.psi * d * d).exp());
    let rd_inv_rgu = prior.rd.solve_mat(&r_gu);
    let mean = ungauged_coords + (state.deform.coords() - sites.coords()) * &rd_inv_rgu;
    let schur = symmetrize(&(&r_star - r_gu.tr_mul(&rd_inv_rgu)));
    (mean, schur)
}

/// Draw the deformed coordinates of the ungauged sites given the gauged
/// deformation: a matrix normal with mean S* + (D - S) Rd^{-1} R_gu, row
/// covariance sigma_d^2 and column covariance the Gaussian-kernel Schur
/// complement.
pub fn extend_deformation(
    state: &ParameterState,
    sites: &SiteSet,
    ungauged_coords: &DMatrix<f64>,
    prior: &DeformPrior,
    rng: &mut RandomStream,
) -> Result<DMatrix<f64>> {
    let (mean, schur) = deformation_extension_moments(state, sites, ungauged_coords, prior);
    let col_fact = PosDefMatrix::new(schur)
        .map_err(|e| Error::Numerical(format!("deformation predictive covariance: {e}")))?;
    let row_chol =
        DMatrix::from_partial_diagonal(2, 2, &[prior.sigma2d[0].sqrt(), prior.sigma2d[1].sqrt()]);

    let z = DMatrix::from_fn(2, ungauged_coords.ncols(), |_, _| rng.standard_normal());
    Ok(mean + row_chol * z * col_fact.chol_lower().transpose())
}

/// Conditional mean at time t and the spatial Schur complement of the
/// response-interpolation law: mean X*_t beta_t + B_ug B^{-1} (y_t - X_t
/// beta_t) per column, covariance V * Sigma ⊗ (B* - B_ug B^{-1} B_gu).
pub fn predictive_moments(
    spec: &ModelSpec,
    state: &ParameterState,
    completed: &CompletedData,
    ungauged: &UngaugedSet,
    d_star: &DMatrix<f64>,
    t: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let b = spatial_correlation(&state.deform, state.phi)?;
    let (schur_fact, b_ug) = kriging_system(state, d_star, &b)?;
    let y = unvec(completed.vector(t), spec.n, spec.q);
    let resid = y - observation_mean(spec, &state.betas, t);
    let mean = ungauged.design(t) * &state.betas[t + 1] + &b_ug * b.solve_mat(&resid);
    Ok((mean, schur_fact.matrix().clone()))
}

/// Per-time conditional response draws at the ungauged sites, given the
/// completed gauged responses.
pub fn predict_responses(
    spec: &ModelSpec,
    state: &ParameterState,
    completed: &CompletedData,
    ungauged: &UngaugedSet,
    d_star: &DMatrix<f64>,
    rng: &mut RandomStream,
) -> Result<Vec<DMatrix<f64>>> {
    let b = spatial_correlation(&state.deform, state.phi)?;
    let (schur_fact, b_ug) = kriging_system(state, d_star, &b)?;
    let sqrt_v = state.v.sqrt();
    let n_star = ungauged.count();

    let mut out = Vec::with_capacity(spec.t_len);
    for t in 0..spec.t_len {
        let y = unvec(completed.vector(t), spec.n, spec.q);
        let resid = y - observation_mean(spec, &state.betas, t);
        let mean = ungauged.design(t) * &state.betas[t + 1] + &b_ug * b.solve_mat(&resid);
        let z = DMatrix::from_fn(n_star, spec.q, |_, _| rng.standard_normal());
        out.push(
            mean + (schur_fact.chol_lower() * z * state.sigma.chol_lower().transpose()) * sqrt_v,
        );
    }
    Ok(out)
}

/// Exponential-kernel cross blocks and the Schur complement of the augmented
/// spatial correlation, factorized under the jitter policy.
fn kriging_system(
    state: &ParameterState,
    d_star: &DMatrix<f64>,
    b: &PosDefMatrix,
) -> Result<(PosDefMatrix, DMatrix<f64>)> {
    let phi = state.phi;
    let b_ug = cross_distances(d_star, state.deform.coords()).map(|d| (-phi * d).exp());
    let b_star = exp_kernel_matrix(&pairwise_distances(d_star), phi)?;
    let schur = symmetrize(&(b_star.matrix() - &b_ug * b.solve_mat(&b_ug.transpose())));
    let fact = PosDefMatrix::new(schur)
        .map_err(|e| Error::Numerical(format!("kriging predictive covariance: {e}")))?;
    Ok((fact, b_ug))
}

/// Monte Carlo pass over the retained posterior draws: rebuild the completed
/// data from each draw's stored imputations, extend the deformation (or copy
/// the geographic coordinates under the undeformed variants), then draw the
/// responses at every time.
pub fn run_interpolation(
    spec: &ModelSpec,
    data: &ObservedDataset,
    ungauged: &UngaugedSet,
    posterior: &PosteriorSample,
    seed: u64,
) -> Result<PredictiveDraws> {
    if posterior.is_empty() {
        return Err(Error::InvalidArgument(
            "posterior sample is empty; nothing to interpolate".into(),
        ));
    }
    if ungauged.t_len() != spec.t_len {
        return Err(Error::dim_mismatch(format!(
            "ungauged designs cover {} times, model has {}",
            ungauged.t_len(),
            spec.t_len
        )));
    }
    let root = RandomStream::from_seed(seed);
    let mut d_stars = Vec::with_capacity(posterior.len());
    let mut y_stars = Vec::with_capacity(posterior.len());

    for (k, state) in posterior.states.iter().enumerate() {
        let mut rng = root.substream(k as u64);
        let completed = CompletedData::assemble(data, &state.imputed)?;
        let d_star = if spec.variant.has_deformation() {
            extend_deformation(
                state,
                &spec.sites,
                ungauged.coords(),
                &spec.deform_prior,
                &mut rng,
            )?
        } else {
            ungauged.coords().clone()
        };
        let draws = predict_responses(spec, state, &completed, ungauged, &d_star, &mut rng)?;
        d_stars.push(d_star);
        y_stars.push(draws);
    }
    Ok(PredictiveDraws { d_stars, y_stars })
}
