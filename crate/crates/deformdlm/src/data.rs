//! Observed/missing bookkeeping: per-time permutations that place observed
//! entries first, the three time classes, and completed datasets.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spatial::SiteSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeClass {
    Complete,
    Partial,
    Missing,
}

/// Permutation bookkeeping for one time point. `permutation[j]` is the
/// original vec-index of the j-th entry after reordering observed-first;
/// observed indices keep their original relative order, then missing ones.
#[derive(Debug, Clone)]
pub struct MissingLayout {
    permutation: Vec<usize>,
    n_obs: usize,
    n_mis: usize,
    class: TimeClass,
}

impl MissingLayout {
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_mis(&self) -> usize {
        self.n_mis
    }

    pub fn class(&self) -> TimeClass {
        self.class
    }

    /// Original vec-indices of the observed block, in original order.
    pub fn observed_indices(&self) -> &[usize] {
        &self.permutation[..self.n_obs]
    }

    /// Original vec-indices of the missing block, in original order.
    pub fn missing_indices(&self) -> &[usize] {
        &self.permutation[self.n_obs..]
    }
}

/// Build the observed-first layout from a mask (`true` = observed) over the
/// column-stacked vectorization of the response matrix.
pub fn build_layout(mask: &[bool]) -> MissingLayout {
    let n_obs = mask.iter().filter(|&&m| m).count();
    let n_mis = mask.len() - n_obs;
    let mut permutation = Vec::with_capacity(mask.len());
    permutation.extend((0..mask.len()).filter(|&k| mask[k]));
    permutation.extend((0..mask.len()).filter(|&k| !mask[k]));
    let class = if n_mis == 0 {
        TimeClass::Complete
    } else if n_obs == 0 {
        TimeClass::Missing
    } else {
        TimeClass::Partial
    };
    MissingLayout {
        permutation,
        n_obs,
        n_mis,
        class,
    }
}

/// Station coordinates plus the T response matrices with their missing mask.
/// Responses are stored as column-stacked vectors of length N*q; missing
/// entries hold NaN and are tracked by the per-time layouts.
#[derive(Debug, Clone)]
pub struct ObservedDataset {
    sites: SiteSet,
    q: usize,
    vectors: Vec<DVector<f64>>,
    masks: Vec<Vec<bool>>,
    layouts: Vec<MissingLayout>,
}

impl ObservedDataset {
    /// Build from per-time N x q response matrices; NaN entries are missing.
    pub fn from_matrices(sites: SiteSet, q: usize, responses: &[DMatrix<f64>]) -> Result<Self> {
        let n = sites.count();
        let mut vectors = Vec::with_capacity(responses.len());
        let mut masks = Vec::with_capacity(responses.len());
        let mut layouts = Vec::with_capacity(responses.len());
        let mut any_observed = vec![false; q];
        for (t, y) in responses.iter().enumerate() {
            if y.nrows() != n || y.ncols() != q {
                return Err(Error::dim_mismatch(format!(
                    "response at time {} is {}x{}, expected {}x{}",
                    t + 1,
                    y.nrows(),
                    y.ncols(),
                    n,
                    q
                )));
            }
            let v = DVector::from_column_slice(y.as_slice());
            let mask: Vec<bool> = v.iter().map(|x| !x.is_nan()).collect();
            for k in 0..n * q {
                if mask[k] {
                    any_observed[k / n] = true;
                }
            }
            layouts.push(build_layout(&mask));
            masks.push(mask);
            vectors.push(v);
        }
        if !responses.is_empty() && any_observed.iter().any(|&a| !a) {
            let idx = any_observed.iter().position(|&a| !a).unwrap();
            return Err(Error::Data(format!(
                "variable {} has no observed entries at any time",
                idx + 1
            )));
        }
        Ok(ObservedDataset {
            sites,
            q,
            vectors,
            masks,
            layouts,
        })
    }

    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn n(&self) -> usize {
        self.sites.count()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn t_len(&self) -> usize {
        self.vectors.len()
    }

    pub fn vec_len(&self) -> usize {
        self.n() * self.q
    }

    /// Raw response vector at time t (1-based internally 0-indexed here);
    /// missing entries are NaN.
    pub fn vector(&self, t: usize) -> &DVector<f64> {
        &self.vectors[t]
    }

    pub fn mask(&self, t: usize) -> &[bool] {
        &self.masks[t]
    }

    pub fn layout(&self, t: usize) -> &MissingLayout {
        &self.layouts[t]
    }

    pub fn has_missing(&self) -> bool {
        self.layouts
            .iter()
            .any(|l| l.class() != TimeClass::Complete)
    }

    /// Fraction of missing entries per variable.
    pub fn missing_fraction(&self) -> Vec<f64> {
        let n = self.n();
        let mut missing = vec![0usize; self.q];
        for mask in &self.masks {
            for (k, &obs) in mask.iter().enumerate() {
                if !obs {
                    missing[k / n] += 1;
                }
            }
        }
        missing
            .into_iter()
            .map(|m| m as f64 / (n * self.t_len()) as f64)
            .collect()
    }

    /// Mean of the observed entries of one variable across all times.
    pub fn observed_mean(&self, var: usize) -> Result<f64> {
        let n = self.n();
        let mut sum = 0.0;
        let mut count = 0usize;
        for (v, mask) in self.vectors.iter().zip(&self.masks) {
            for site in 0..n {
                let k = var * n + site;
                if mask[k] {
                    sum += v[k];
                    count += 1;
                }
            }
        }
        if count == 0 {
            return Err(Error::Data(format!(
                "variable {} has no observed entries",
                var + 1
            )));
        }
        Ok(sum / count as f64)
    }
}

/// Every entry filled: observed values copied through bit-exactly, missing
/// ones taken from an imputation (in original index order per time).
#[derive(Debug, Clone)]
pub struct CompletedData {
    vectors: Vec<DVector<f64>>,
    imputed: Vec<Vec<f64>>,
}

impl CompletedData {
    pub fn assemble(data: &ObservedDataset, imputed: &[Vec<f64>]) -> Result<Self> {
        if imputed.len() != data.t_len() {
            return Err(Error::dim_mismatch(format!(
                "imputations cover {} times, dataset has {}",
                imputed.len(),
                data.t_len()
            )));
        }
        let mut vectors = Vec::with_capacity(data.t_len());
        for (t, fills) in imputed.iter().enumerate() {
            let layout = data.layout(t);
            if fills.len() != layout.n_mis() {
                return Err(Error::dim_mismatch(format!(
                    "time {}: {} imputed values for {} missing entries",
                    t + 1,
                    fills.len(),
                    layout.n_mis()
                )));
            }
            let mut v = data.vector(t).clone();
            for (&k, &value) in layout.missing_indices().iter().zip(fills) {
                v[k] = value;
            }
            vectors.push(v);
        }
        Ok(CompletedData {
            vectors,
            imputed: imputed.to_vec(),
        })
    }

    /// For a dataset with no missing entries.
    pub fn from_complete(data: &ObservedDataset) -> Result<Self> {
        if data.has_missing() {
            return Err(Error::Data(
                "dataset has missing entries but no imputations were supplied".into(),
            ));
        }
        Ok(CompletedData {
            vectors: data.vectors.clone(),
            imputed: vec![Vec::new(); data.t_len()],
        })
    }

    pub fn t_len(&self) -> usize {
        self.vectors.len()
    }

    pub fn vector(&self, t: usize) -> &DVector<f64> {
        &self.vectors[t]
    }

    pub fn imputed(&self) -> &[Vec<f64>] {
        &self.imputed
    }
}
