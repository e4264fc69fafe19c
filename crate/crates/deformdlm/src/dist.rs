//! Random-variate generation and density evaluation for the distribution
//! families the sampler needs: matrix normal, inverse gamma, inverse Wishart,
//! and the Kronecker-structured multivariate normal.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{unvec, PosDefMatrix};
use crate::rng::RandomStream;

const LN_2PI: f64 = 1.8378770664093453;
/// ln(f64::MAX); exp of anything above this overflows.
const MAX_LN: f64 = 709.782712893384;

/// Matrix-normal parameters. A draw X (r x c) satisfies
/// vec(X) ~ Normal(vec(mean), colCov ⊗ rowCov).
#[derive(Debug, Clone)]
pub struct MatrixNormalParams {
    pub mean: DMatrix<f64>,
    pub row_cov: PosDefMatrix,
    pub col_cov: PosDefMatrix,
}

impl MatrixNormalParams {
    pub fn new(mean: DMatrix<f64>, row_cov: PosDefMatrix, col_cov: PosDefMatrix) -> Result<Self> {
        if mean.nrows() != row_cov.dim() || mean.ncols() != col_cov.dim() {
            return Err(Error::dim_mismatch(format!(
                "matrix normal: mean is {}x{}, covariances {}x{}",
                mean.nrows(),
                mean.ncols(),
                row_cov.dim(),
                col_cov.dim()
            )));
        }
        Ok(MatrixNormalParams {
            mean,
            row_cov,
            col_cov,
        })
    }
}

/// Draw from a matrix-normal distribution: mean + L_row Z L_col^T.
pub fn sample_matrix_normal(params: &MatrixNormalParams, rng: &mut RandomStream) -> DMatrix<f64> {
    let r = params.row_cov.dim();
    let c = params.col_cov.dim();
    let z = DMatrix::from_fn(r, c, |_, _| rng.standard_normal());
    &params.mean + params.row_cov.chol_lower() * z * params.col_cov.chol_lower().transpose()
}

pub fn matrix_normal_logpdf(x: &DMatrix<f64>, params: &MatrixNormalParams) -> f64 {
    let r = params.row_cov.dim() as f64;
    let c = params.col_cov.dim() as f64;
    let resid = x - &params.mean;
    // tr(colCov^{-1} R^T rowCov^{-1} R) via one triangular solve.
    let mut u = resid;
    params
        .row_cov
        .chol_lower()
        .solve_lower_triangular_mut(&mut u);
    let quad = params.col_cov.trace_solve(&u.tr_mul(&u));
    -0.5 * (r * c * LN_2PI + c * params.row_cov.log_det() + r * params.col_cov.log_det() + quad)
}

#[derive(Debug, Clone, Copy)]
pub struct InverseGammaParams {
    pub shape: f64,
    pub scale: f64,
}

impl InverseGammaParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "inverse gamma requires shape > 0 and scale > 0, got ({shape}, {scale})"
            )));
        }
        Ok(InverseGammaParams { shape, scale })
    }
}

/// Draw from Inverse-Gamma(shape, scale). Computed in log space so that tiny
/// shapes (e.g. 0.001) do not overflow; draws beyond f64 range saturate at
/// f64::MAX.
pub fn sample_inverse_gamma(params: &InverseGammaParams, rng: &mut RandomStream) -> Result<f64> {
    let lg = rng.log_gamma_draw(params.shape)?;
    let ln_x = params.scale.ln() - lg;
    if ln_x >= MAX_LN {
        return Ok(f64::MAX);
    }
    Ok(ln_x.exp().max(f64::MIN_POSITIVE))
}

pub fn inverse_gamma_logpdf(x: f64, params: &InverseGammaParams) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let a = params.shape;
    let b = params.scale;
    a * b.ln() - ln_gamma(a) - (a + 1.0) * x.ln() - b / x
}

/// Inverse-Wishart in the standard parameterization: for dof ν and scale Ψ,
/// the density is proportional to |Σ|^{-(ν+q+1)/2} exp{-tr(Ψ Σ^{-1})/2}.
#[derive(Debug, Clone)]
pub struct InverseWishartParams {
    pub dof: f64,
    pub scale: PosDefMatrix,
}

impl InverseWishartParams {
    pub fn new(dof: f64, scale: PosDefMatrix) -> Result<Self> {
        let q = scale.dim() as f64;
        if dof <= q - 1.0 {
            return Err(Error::InvalidArgument(format!(
                "inverse Wishart requires dof > dim - 1, got dof {dof} with dim {q}"
            )));
        }
        Ok(InverseWishartParams { dof, scale })
    }
}

/// Draw from Inverse-Wishart(dof, Ψ) by the Bartlett decomposition of
/// Wishart(dof, Ψ^{-1}) followed by triangular inversion.
pub fn sample_inverse_wishart(
    params: &InverseWishartParams,
    rng: &mut RandomStream,
) -> Result<PosDefMatrix> {
    let q = params.scale.dim();
    // chol(Ψ^{-1}) from chol(Ψ): Ψ = L L^T implies Ψ^{-1} = L^{-T} L^{-1},
    // whose lower factor is the lower-triangular L* with L* L*^T = Ψ^{-1}.
    // Use L^{-T} reordered: solve directly instead.
    let inv_scale = params.scale.inverse();
    let l = PosDefMatrix::new(inv_scale)?.chol_lower().clone();

    let mut a = DMatrix::zeros(q, q);
    for i in 0..q {
        // chi-squared(dof - i) on the diagonal, in log space for stability.
        let half = 0.5 * (params.dof - i as f64);
        let lg = rng.log_gamma_draw(half)?;
        let ln_diag = 0.5 * (std::f64::consts::LN_2 + lg);
        a[(i, i)] = ln_diag.clamp(-350.0, 350.0).exp();
        for j in 0..i {
            a[(i, j)] = rng.standard_normal();
        }
    }
    let m = l * a; // lower triangular, W = M M^T ~ Wishart(dof, Ψ^{-1})
                   // Σ = W^{-1} = M^{-T} M^{-1} = Z^T Z with Z = M^{-1}.
    let z = m
        .solve_lower_triangular(&DMatrix::identity(q, q))
        .ok_or_else(|| Error::Numerical("singular Bartlett factor".into()))?;
    PosDefMatrix::new(z.tr_mul(&z))
}

pub fn inverse_wishart_logpdf(sigma: &PosDefMatrix, params: &InverseWishartParams) -> f64 {
    let q = params.scale.dim() as f64;
    let nu = params.dof;
    let trace_term = sigma.trace_solve(params.scale.matrix());
    0.5 * nu * params.scale.log_det()
        - 0.5 * nu * q * std::f64::consts::LN_2
        - ln_multivariate_gamma(params.scale.dim(), 0.5 * nu)
        - 0.5 * (nu + q + 1.0) * sigma.log_det()
        - 0.5 * trace_term
}

/// ln Γ_q(x) = q(q-1)/4 ln π + Σ_{j=1..q} ln Γ(x + (1-j)/2).
pub fn ln_multivariate_gamma(q: usize, x: f64) -> f64 {
    let base = (q * (q - 1)) as f64 / 4.0 * std::f64::consts::PI.ln();
    base + (1..=q)
        .map(|j| ln_gamma(x + (1.0 - j as f64) / 2.0))
        .sum::<f64>()
}

pub fn gamma_logpdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Log-density of Normal(mean, scale·(colCov ⊗ rowCov)) evaluated at y,
/// without forming the Kronecker product. y stacks an (n x q) matrix by
/// columns, n = dim(rowCov), q = dim(colCov).
pub fn logpdf_mvn_kron(
    y: &DVector<f64>,
    mean: &DVector<f64>,
    col_cov: &PosDefMatrix,
    row_cov: &PosDefMatrix,
    scale: f64,
) -> Result<f64> {
    let n = row_cov.dim();
    let q = col_cov.dim();
    if y.len() != n * q || mean.len() != n * q {
        return Err(Error::dim_mismatch(format!(
            "logpdf_mvn_kron: y has {}, mean has {}, expected {}",
            y.len(),
            mean.len(),
            n * q
        )));
    }
    if scale <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "covariance scale must be positive, got {scale}"
        )));
    }
    let mut resid = unvec(&(y - mean), n, q);
    row_cov.chol_lower().solve_lower_triangular_mut(&mut resid);
    let quad = col_cov.trace_solve(&resid.tr_mul(&resid));
    let nq = (n * q) as f64;
    Ok(-0.5
        * (nq * LN_2PI
            + nq * scale.ln()
            + n as f64 * col_cov.log_det()
            + q as f64 * row_cov.log_det()
            + quad / scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn matrix_normal_dims_checked() {
        let mean = DMatrix::zeros(2, 3);
        let bad =
            MatrixNormalParams::new(mean, PosDefMatrix::identity(3), PosDefMatrix::identity(3));
        assert!(bad.is_err());
    }

    #[test]
    fn inverse_gamma_tiny_shape_finite_positive() {
        let params = InverseGammaParams::new(0.001, 0.001).unwrap();
        let mut rng = RandomStream::from_seed(99);
        for _ in 0..2000 {
            let x = sample_inverse_gamma(&params, &mut rng).unwrap();
            assert!(x.is_finite() && x > 0.0, "draw {x}");
        }
    }

    #[test]
    fn inverse_gamma_mean_matches_analytic() {
        // mean = scale / (shape - 1) for shape > 1
        let params = InverseGammaParams::new(3.0, 4.0).unwrap();
        let mut rng = RandomStream::from_seed(1);
        let n = 1_000_000;
        let mean: f64 = (0..n)
            .map(|_| sample_inverse_gamma(&params, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 2.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn inverse_wishart_draws_are_spd() {
        let params = InverseWishartParams::new(10.0, PosDefMatrix::identity(2)).unwrap();
        let mut rng = RandomStream::from_seed(2);
        for _ in 0..200 {
            let s = sample_inverse_wishart(&params, &mut rng).unwrap();
            let eig = s.matrix().clone().symmetric_eigen();
            assert!(eig.eigenvalues.iter().all(|&e| e > 0.0));
        }
    }

    #[test]
    fn inverse_wishart_mean_matches_analytic() {
        // E[Σ] = Ψ / (ν - q - 1)
        let params = InverseWishartParams::new(10.0, PosDefMatrix::identity(2)).unwrap();
        let mut rng = RandomStream::from_seed(3);
        let n = 100_000;
        let mut acc = DMatrix::zeros(2, 2);
        for _ in 0..n {
            acc += sample_inverse_wishart(&params, &mut rng).unwrap().matrix();
        }
        acc /= n as f64;
        let expect = DMatrix::identity(2, 2) / 7.0;
        let gap = (&acc - expect).amax();
        assert!(gap < 0.02 / 7.0, "mean {acc} is off by {gap}");
    }

    #[test]
    fn kron_logpdf_zero_residual() {
        // At y = mean the quadratic term vanishes exactly.
        let q = PosDefMatrix::identity(2);
        let n = PosDefMatrix::identity(3);
        let y = DVector::zeros(6);
        let v = 2.5;
        let lp = logpdf_mvn_kron(&y, &y, &q, &n, v).unwrap();
        let expect = -0.5 * (6.0 * LN_2PI + 6.0 * v.ln());
        assert_abs_diff_eq!(lp, expect, epsilon = 1e-12);
    }

    #[test]
    fn kron_logpdf_scale_transfer_invariance() {
        // scale V with colCov Σ equals scale V/k with colCov kΣ.
        let mut rng = RandomStream::from_seed(8);
        let a = DMatrix::from_fn(2, 2, |_, _| rng.standard_normal());
        let sigma = PosDefMatrix::new(&a * a.transpose() + DMatrix::identity(2, 2)).unwrap();
        let b = DMatrix::from_fn(3, 3, |_, _| rng.standard_normal());
        let row = PosDefMatrix::new(&b * b.transpose() + DMatrix::identity(3, 3)).unwrap();
        let y = DVector::from_fn(6, |_, _| rng.standard_normal());
        let mean = DVector::from_fn(6, |_, _| rng.standard_normal());

        let kappa = 7.0;
        let lp1 = logpdf_mvn_kron(&y, &mean, &sigma, &row, 3.0).unwrap();
        let scaled = PosDefMatrix::new(sigma.matrix() * kappa).unwrap();
        let lp2 = logpdf_mvn_kron(&y, &mean, &scaled, &row, 3.0 / kappa).unwrap();
        assert_abs_diff_eq!(lp1, lp2, epsilon = 1e-8);
    }
}
