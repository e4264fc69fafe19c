//! Coordinates, deformations, and the two spatial kernels: an exponential
//! correlation over distances in the deformed space, and a Gaussian prior
//! correlation over geographic distances.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::linalg::PosDefMatrix;

/// Gauged monitoring sites: a 2 x N matrix of (lon, lat) columns plus the two
/// anchor indices whose deformed coordinates stay fixed.
#[derive(Debug, Clone)]
pub struct SiteSet {
    coords: DMatrix<f64>,
    anchors: [usize; 2],
}

impl SiteSet {
    pub fn new(coords: DMatrix<f64>, anchors: [usize; 2]) -> Result<Self> {
        if coords.nrows() != 2 {
            return Err(Error::dim_mismatch(format!(
                "site coordinates must be 2 x N, got {} x {}",
                coords.nrows(),
                coords.ncols()
            )));
        }
        let n = coords.ncols();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 sites, got {n}"
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if coords[(0, i)] == coords[(0, j)] && coords[(1, i)] == coords[(1, j)] {
                    return Err(Error::Data(format!(
                        "sites {i} and {j} share identical coordinates ({}, {})",
                        coords[(0, i)],
                        coords[(1, i)]
                    )));
                }
            }
        }
        if anchors[0] == anchors[1] || anchors.iter().any(|&a| a >= n) {
            return Err(Error::InvalidArgument(format!(
                "anchor indices {anchors:?} must be distinct and < {n}"
            )));
        }
        Ok(SiteSet { coords, anchors })
    }

    /// Anchors default to the first two sites in file order.
    pub fn with_default_anchors(coords: DMatrix<f64>) -> Result<Self> {
        SiteSet::new(coords, [0, 1])
    }

    pub fn count(&self) -> usize {
        self.coords.ncols()
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn anchors(&self) -> [usize; 2] {
        self.anchors
    }

    /// Median Euclidean distance over all site pairs; the spatial-range prior
    /// rate is 0.3 divided by this.
    pub fn median_pairwise_distance(&self) -> f64 {
        let n = self.count();
        let mut d = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                d.push(pair_distance(&self.coords, i, j));
            }
        }
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = d.len();
        if m % 2 == 1 {
            d[m / 2]
        } else {
            0.5 * (d[m / 2 - 1] + d[m / 2])
        }
    }

    /// Sample variances of longitude and latitude (denominator n - 1).
    pub fn coordinate_variances(&self) -> [f64; 2] {
        let n = self.count() as f64;
        let mut out = [0.0; 2];
        for (r, slot) in out.iter_mut().enumerate() {
            let mean = self.coords.row(r).sum() / n;
            *slot = self
                .coords
                .row(r)
                .iter()
                .map(|x| (x - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0);
        }
        out
    }
}

/// Latent coordinates of the gauged sites, 2 x N. Anchor columns always equal
/// the corresponding geographic coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Deformation {
    coords: DMatrix<f64>,
}

impl Deformation {
    pub fn new(coords: DMatrix<f64>) -> Result<Self> {
        if coords.nrows() != 2 {
            return Err(Error::dim_mismatch("deformation coordinates must be 2 x N"));
        }
        Ok(Deformation { coords })
    }

    /// The identity map d(s) = s.
    pub fn identity(sites: &SiteSet) -> Self {
        Deformation {
            coords: sites.coords().clone(),
        }
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn count(&self) -> usize {
        self.coords.ncols()
    }

    pub fn set_coord(&mut self, axis: usize, site: usize, value: f64) {
        self.coords[(axis, site)] = value;
    }
}

/// Fixed prior over deformations: per-axis variances tau * var(lon/lat) and a
/// Gaussian-kernel correlation over geographic distances.
#[derive(Debug, Clone)]
pub struct DeformPrior {
    pub sigma2d: [f64; 2],
    pub tau: f64,
    pub psi: f64,
    pub rd: PosDefMatrix,
}

impl DeformPrior {
    pub fn new(sites: &SiteSet, tau: f64, psi: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tau must lie in (0, 1], got {tau}"
            )));
        }
        let vars = sites.coordinate_variances();
        if vars.iter().any(|&v| v <= 0.0) {
            return Err(Error::Data(
                "coordinate variance is zero; all sites collinear along an axis".into(),
            ));
        }
        Ok(DeformPrior {
            sigma2d: [tau * vars[0], tau * vars[1]],
            tau,
            psi,
            rd: prior_correlation(sites, psi)?,
        })
    }
}

fn pair_distance(coords: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    let dx = coords[(0, i)] - coords[(0, j)];
    let dy = coords[(1, i)] - coords[(1, j)];
    (dx * dx + dy * dy).sqrt()
}

/// Pairwise Euclidean distances between the columns of a 2 x N matrix.
pub fn pairwise_distances(coords: &DMatrix<f64>) -> DMatrix<f64> {
    let n = coords.ncols();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = pair_distance(coords, i, j);
            d[(i, j)] = dist;
            d[(j, i)] = dist;
        }
    }
    d
}

/// Distances between columns of two 2 x * matrices (rows: a-sites, cols: b-sites).
pub fn cross_distances(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.ncols(), b.ncols());
    for i in 0..a.ncols() {
        for j in 0..b.ncols() {
            let dx = a[(0, i)] - b[(0, j)];
            let dy = a[(1, i)] - b[(1, j)];
            d[(i, j)] = (dx * dx + dy * dy).sqrt();
        }
    }
    d
}

/// Spatial correlation across gauged sites: entries exp{-phi * ||d_i - d_j||}
/// over deformed coordinates. Unit diagonal; SPD after the jitter policy.
pub fn spatial_correlation(deform: &Deformation, phi: f64) -> Result<PosDefMatrix> {
    if phi <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "spatial range must be positive, got {phi}"
        )));
    }
    let d = pairwise_distances(deform.coords());
    exp_kernel_matrix(&d, phi)
}

/// The same exponential kernel applied to a precomputed distance matrix.
pub fn exp_kernel_matrix(distances: &DMatrix<f64>, phi: f64) -> Result<PosDefMatrix> {
    let b = distances.map(|d| (-phi * d).exp());
    PosDefMatrix::new(b)
}

/// Prior correlation between sites in geographic space: a Gaussian kernel
/// exp{-psi * ||s_i - s_j||^2}.
pub fn prior_correlation(sites: &SiteSet, psi: f64) -> Result<PosDefMatrix> {
    if psi <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "psi must be positive, got {psi}"
        )));
    }
    let d = pairwise_distances(sites.coords());
    PosDefMatrix::new(d.map(|x| (-psi * x * x).exp()))
}

/// Gaussian-kernel cross correlation between two coordinate sets.
pub fn gaussian_cross_correlation(a: &DMatrix<f64>, b: &DMatrix<f64>, psi: f64) -> DMatrix<f64> {
    cross_distances(a, b).map(|x| (-psi * x * x).exp())
}

/// Map every non-anchor site through the linear transform `lambda`; anchor
/// columns are copied from the geographic coordinates verbatim.
pub fn linear_deformation(sites: &SiteSet, lambda: &Matrix2<f64>) -> Result<Deformation> {
    if lambda.determinant().abs() < 1e-300 {
        return Err(Error::InvalidArgument(
            "deformation transform is singular".into(),
        ));
    }
    let mut coords = DMatrix::zeros(2, sites.count());
    for n in 0..sites.count() {
        let s = sites.coords().column(n);
        if sites.anchors().contains(&n) {
            coords.set_column(n, &s);
        } else {
            let d = lambda * nalgebra::Vector2::new(s[0], s[1]);
            coords[(0, n)] = d[0];
            coords[(1, n)] = d[1];
        }
    }
    Deformation::new(coords)
}

/// Squared Frobenius norm tr[(A - B)(A - B)^T] between two deformations.
pub fn frobenius_gap(truth: &Deformation, estimate: &Deformation) -> Result<f64> {
    if truth.coords().shape() != estimate.coords().shape() {
        return Err(Error::dim_mismatch(format!(
            "deformation shapes differ: {:?} vs {:?}",
            truth.coords().shape(),
            estimate.coords().shape()
        )));
    }
    Ok((truth.coords() - estimate.coords()).norm_squared())
}
