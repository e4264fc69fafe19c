//! Positive-definite matrix kernel shared by all distribution code.
//!
//! `PosDefMatrix` owns a symmetric matrix together with its (cached) lower
//! Cholesky factor. Factorization failures are retried under the jitter
//! policy: add `1e-10 * trace/dim` to the diagonal, escalating tenfold up to
//! three times, then fail.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const SYM_TOL: f64 = 1e-10;
const JITTER_BASE: f64 = 1e-10;
const JITTER_RETRIES: usize = 3;

#[derive(Debug, Clone)]
pub struct PosDefMatrix {
    mat: DMatrix<f64>,
    chol_l: DMatrix<f64>,
    jitter: f64,
}

impl PosDefMatrix {
    /// Validate symmetry, factor (with jitter retries), and cache the factor.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::dim_mismatch(format!(
                "positive-definite matrix must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let scale = mat.amax().max(1.0);
        let mut max_asym = 0.0f64;
        for i in 0..mat.nrows() {
            for j in (i + 1)..mat.ncols() {
                max_asym = max_asym.max((mat[(i, j)] - mat[(j, i)]).abs());
            }
        }
        let tol = SYM_TOL * scale;
        if max_asym > tol {
            return Err(Error::NotSymmetric { max_asym, tol });
        }
        let sym = symmetrize(&mat);
        let (chol_l, jitter) = jittered_cholesky(&sym)?;
        Ok(PosDefMatrix {
            mat: sym,
            chol_l,
            jitter,
        })
    }

    pub fn identity(dim: usize) -> Self {
        PosDefMatrix {
            mat: DMatrix::identity(dim, dim),
            chol_l: DMatrix::identity(dim, dim),
            jitter: 0.0,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.iter().any(|&d| d <= 0.0 || !d.is_finite()) {
            return Err(Error::InvalidArgument(
                "diagonal entries must be positive and finite".into(),
            ));
        }
        let mat = DMatrix::from_diagonal(&DVector::from_row_slice(diag));
        PosDefMatrix::new(mat)
    }

    /// Scalar 1x1 case.
    pub fn scalar(v: f64) -> Result<Self> {
        PosDefMatrix::from_diagonal(&[v])
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Lower Cholesky factor L with A = L L^T (of the jittered matrix).
    pub fn chol_lower(&self) -> &DMatrix<f64> {
        &self.chol_l
    }

    /// Jitter added to the diagonal before factorization succeeded (0 if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.chol_l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// A^{-1} b.
    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut y = b.clone();
        self.chol_l.solve_lower_triangular_mut(&mut y);
        self.chol_l.tr_solve_lower_triangular_mut(&mut y);
        y
    }

    /// A^{-1} B.
    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = b.clone();
        self.chol_l.solve_lower_triangular_mut(&mut y);
        self.chol_l.tr_solve_lower_triangular_mut(&mut y);
        y
    }

    /// x^T A^{-1} x.
    pub fn inv_quad(&self, x: &DVector<f64>) -> f64 {
        let mut y = x.clone();
        self.chol_l.solve_lower_triangular_mut(&mut y);
        y.norm_squared()
    }

    /// X^T A^{-1} X.
    pub fn inv_quad_mat(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = x.clone();
        self.chol_l.solve_lower_triangular_mut(&mut y);
        y.tr_mul(&y)
    }

    /// tr(A^{-1} K).
    pub fn trace_solve(&self, k: &DMatrix<f64>) -> f64 {
        self.solve_mat(k).trace()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.solve_mat(&DMatrix::identity(self.dim(), self.dim()))
    }
}

pub fn symmetrize(mat: &DMatrix<f64>) -> DMatrix<f64> {
    (mat + mat.transpose()) * 0.5
}

/// Lower Cholesky factor under the jitter policy. Returns the factor and the
/// total jitter added to the diagonal.
pub fn jittered_cholesky(sym: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let dim = sym.nrows();
    if let Some(ch) = sym.clone().cholesky() {
        return Ok((ch.unpack(), 0.0));
    }
    let unit = sym.trace().abs().max(f64::MIN_POSITIVE) / dim as f64;
    let mut jitter = JITTER_BASE * unit;
    for _ in 0..JITTER_RETRIES {
        let mut attempt = sym.clone();
        for i in 0..dim {
            attempt[(i, i)] += jitter;
        }
        if let Some(ch) = attempt.cholesky() {
            return Ok((ch.unpack(), jitter));
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveDefinite {
        dim,
        max_jitter: jitter / 10.0,
        context: "cholesky failed after jitter retries".into(),
    })
}

/// (A ⊗ B) x without forming the Kronecker product, via vec(B X A^T) with
/// X the (rows(B) x cols(A)) matricization of x in column-major order.
pub fn kron_mul_vec(a: &DMatrix<f64>, b: &DMatrix<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != a.ncols() * b.ncols() {
        return Err(Error::dim_mismatch(format!(
            "kron_mul_vec: len {} != {} * {}",
            x.len(),
            a.ncols(),
            b.ncols()
        )));
    }
    let xm = DMatrix::from_column_slice(b.ncols(), a.ncols(), x.as_slice());
    let prod = b * xm * a.transpose();
    Ok(DVector::from_column_slice(prod.as_slice()))
}

/// Column-stacked vectorization.
pub fn vec_of(mat: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(mat.as_slice())
}

/// Inverse of `vec_of`: reshape a column-stacked vector to rows x cols.
pub fn unvec(v: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    assert_eq!(v.len(), rows * cols, "unvec: length mismatch");
    DMatrix::from_column_slice(rows, cols, v.as_slice())
}
