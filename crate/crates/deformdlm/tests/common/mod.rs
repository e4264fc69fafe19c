//! Shared oracles for the integration suites. Everything here goes through
//! dense covariance algebra (explicit Kronecker products, dense inverses)
//! and never through the crate's structured computational paths, so these
//! results are independent checks.
#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector};

use deformdlm::data::ObservedDataset;
use deformdlm::linalg::PosDefMatrix;
use deformdlm::model::{HyperParams, ModelSpec, ParameterState, Variant};
use deformdlm::rng::RandomStream;
use deformdlm::spatial::{DeformPrior, SiteSet};

pub const LN_2PI: f64 = 1.8378770664093453;

/// Dense multivariate-normal log-density via explicit inversion.
pub fn dense_mvn_logpdf(y: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let n = y.len() as f64;
    let inv = cov
        .clone()
        .try_inverse()
        .expect("oracle covariance invertible");
    let det = cov.determinant();
    let resid = y - mean;
    -0.5 * (n * LN_2PI + det.ln() + (resid.transpose() * inv * resid)[(0, 0)])
}

/// Conditional law of the `target` coordinates given the `given` coordinates
/// of a joint Gaussian, by dense partitioned inversion.
pub fn dense_conditional(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    target: &[usize],
    given: &[usize],
    y_given: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let pick_vec = |idx: &[usize], v: &DVector<f64>| DVector::from_fn(idx.len(), |i, _| v[idx[i]]);
    let pick_mat = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| cov[(rows[i], cols[j])])
    };
    let mu_t = pick_vec(target, mean);
    let mu_g = pick_vec(given, mean);
    let c_tt = pick_mat(target, target);
    let c_tg = pick_mat(target, given);
    let c_gg = pick_mat(given, given);
    let c_gg_inv = c_gg.try_inverse().expect("oracle given-block invertible");
    let mean_cond = &mu_t + &c_tg * &c_gg_inv * (y_given - &mu_g);
    let cov_cond = &c_tt - &c_tg * &c_gg_inv * c_tg.transpose();
    (mean_cond, cov_cond)
}

/// Joint Gaussian of (all states, all observations) for the dynamic model,
/// assembled with explicit Kronecker products.
pub struct DlmJoint {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub state_dim: usize,
    pub obs_dim: usize,
}

pub fn dlm_joint_gaussian(
    spec: &ModelSpec,
    v: f64,
    sigma: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> DlmJoint {
    let pq = spec.p * spec.q;
    let nq = spec.n * spec.q;
    let t_len = spec.t_len;
    let iq = DMatrix::<f64>::identity(spec.q, spec.q);

    let evo: Vec<DMatrix<f64>> = (0..t_len).map(|t| iq.kronecker(&spec.g_seq[t])).collect();
    let obs: Vec<DMatrix<f64>> = (0..t_len).map(|t| iq.kronecker(&spec.x_seq[t])).collect();
    let cov_w = sigma.kronecker(spec.w.matrix()) * v;
    let cov_b = sigma.kronecker(b) * v;
    let cov_c0 = sigma.kronecker(spec.c0.matrix()) * v;

    // State means and covariance blocks by the evolution recursion.
    let mut means = vec![DVector::zeros(pq); t_len + 1];
    means[0] = DVector::from_column_slice(spec.m0.as_slice());
    for t in 0..t_len {
        means[t + 1] = &evo[t] * &means[t];
    }
    let mut blocks = vec![vec![DMatrix::zeros(pq, pq); t_len + 1]; t_len + 1];
    blocks[0][0] = cov_c0;
    for t in 0..t_len {
        blocks[t + 1][t + 1] = &evo[t] * &blocks[t][t] * evo[t].transpose() + &cov_w;
    }
    for s in 0..=t_len {
        for t in (s + 1)..=t_len {
            blocks[s][t] = &blocks[s][t - 1] * evo[t - 1].transpose();
            blocks[t][s] = blocks[s][t].transpose();
        }
    }

    let state_dim = (t_len + 1) * pq;
    let obs_dim = t_len * nq;
    let total = state_dim + obs_dim;
    let mut mean = DVector::zeros(total);
    let mut cov = DMatrix::zeros(total, total);

    for t in 0..=t_len {
        mean.rows_mut(t * pq, pq).copy_from(&means[t]);
        for s in 0..=t_len {
            cov.view_mut((t * pq, s * pq), (pq, pq))
                .copy_from(&blocks[t][s]);
        }
    }
    for t in 0..t_len {
        let row = state_dim + t * nq;
        mean.rows_mut(row, nq).copy_from(&(&obs[t] * &means[t + 1]));
        for s in 0..=t_len {
            let c = &blocks[t + 1][s];
            cov.view_mut((row, s * pq), (nq, pq))
                .copy_from(&(&obs[t] * c));
            cov.view_mut((s * pq, row), (pq, nq))
                .copy_from(&(&obs[t] * c).transpose());
        }
        for s in 0..t_len {
            let col = state_dim + s * nq;
            let mut block = &obs[t] * &blocks[t + 1][s + 1] * obs[s].transpose();
            if s == t {
                block += &cov_b;
            }
            cov.view_mut((row, col), (nq, nq)).copy_from(&block);
        }
    }
    DlmJoint {
        mean,
        cov,
        state_dim,
        obs_dim,
    }
}

/// One-sample Kolmogorov-Smirnov statistic against an analytic CDF.
pub fn ks_statistic(draws: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = draws.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in draws.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

pub fn sample_mean(draws: &[f64]) -> f64 {
    draws.iter().sum::<f64>() / draws.len() as f64
}

pub fn sample_var(draws: &[f64]) -> f64 {
    let m = sample_mean(draws);
    draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64
}

/// Random SPD matrix built from a Gaussian factor.
pub fn random_spd(dim: usize, rng: &mut RandomStream) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.standard_normal());
    &a * a.transpose() + DMatrix::identity(dim, dim) * (0.3 + rng.uniform())
}

/// Scattered sites with positive coordinate variance on both axes.
pub fn random_sites(n: usize, rng: &mut RandomStream) -> SiteSet {
    let coords = DMatrix::from_fn(2, n, |_, _| rng.uniform() * 2.0 - 1.0);
    SiteSet::with_default_anchors(coords).expect("random sites valid")
}

pub struct SpecBuilder {
    pub variant: Variant,
    pub n: usize,
    pub q: usize,
    pub p: usize,
    pub t_len: usize,
    pub seed: u64,
}

impl SpecBuilder {
    pub fn new(variant: Variant, n: usize, q: usize, p: usize, t_len: usize) -> Self {
        SpecBuilder {
            variant,
            n,
            q,
            p,
            t_len,
            seed: 0,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// A spec with random scattered sites, random design matrices, identity
    /// evolution, and the default hyperparameters.
    pub fn build(&self) -> ModelSpec {
        let mut rng = RandomStream::from_seed(self.seed ^ 0xabcd);
        let sites = random_sites(self.n, &mut rng);
        let deform_prior = DeformPrior::new(&sites, 1.0, 10.0).unwrap();
        let priors = HyperParams::defaults(self.q, sites.median_pairwise_distance()).unwrap();
        let x_seq = (0..self.t_len)
            .map(|_| {
                DMatrix::from_fn(
                    self.n,
                    self.p,
                    |_, j| {
                        if j == 0 {
                            1.0
                        } else {
                            rng.uniform()
                        }
                    },
                )
            })
            .collect();
        ModelSpec::new(
            sites,
            self.variant,
            self.q,
            vec![DMatrix::identity(self.p, self.p); self.t_len],
            x_seq,
            PosDefMatrix::new(DMatrix::identity(self.p, self.p) * 0.5).unwrap(),
            DMatrix::zeros(self.p, self.q),
            PosDefMatrix::identity(self.p),
            priors,
            deform_prior,
        )
        .unwrap()
    }
}

/// A complete dataset drawn from the model itself at a given state.
pub fn synthetic_complete_data(
    spec: &ModelSpec,
    state: &ParameterState,
    rng: &mut RandomStream,
) -> ObservedDataset {
    let b = deformdlm::spatial::spatial_correlation(&state.deform, state.phi).unwrap();
    let sig = PosDefMatrix::new(state.sigma.matrix().clone()).unwrap();
    let sqrt_v = state.v.sqrt();
    let mats: Vec<DMatrix<f64>> = (0..spec.t_len)
        .map(|t| {
            let mean = &spec.x_seq[t] * &state.betas[t + 1];
            let z = DMatrix::from_fn(spec.n, spec.q, |_, _| rng.standard_normal());
            mean + (b.chol_lower() * z * sig.chol_lower().transpose()) * sqrt_v
        })
        .collect();
    ObservedDataset::from_matrices(spec.sites.clone(), spec.q, &mats).unwrap()
}

/// A valid state at the given parameter values with states propagated from
/// the prior mean and perturbed.
pub fn perturbed_state(
    spec: &ModelSpec,
    v: f64,
    phi: f64,
    rng: &mut RandomStream,
) -> ParameterState {
    let sigma = if spec.variant.correlated_responses() {
        PosDefMatrix::new(random_spd(spec.q, rng)).unwrap()
    } else {
        let diag: Vec<f64> = (0..spec.q).map(|_| 0.5 + rng.uniform()).collect();
        PosDefMatrix::from_diagonal(&diag).unwrap()
    };
    let mut betas = vec![DMatrix::zeros(spec.p, spec.q); spec.t_len + 1];
    for b in betas.iter_mut() {
        *b = DMatrix::from_fn(spec.p, spec.q, |_, _| rng.standard_normal() * 0.5);
    }
    let mut deform = deformdlm::spatial::Deformation::identity(&spec.sites);
    if spec.variant.has_deformation() {
        let anchors = spec.sites.anchors();
        for site in 0..spec.n {
            if anchors.contains(&site) {
                continue;
            }
            for axis in 0..2 {
                let cur = deform.coords()[(axis, site)];
                deform.set_coord(axis, site, cur + 0.1 * rng.standard_normal());
            }
        }
    }
    ParameterState {
        betas,
        v,
        sigma,
        phi,
        deform,
        imputed: vec![Vec::new(); spec.t_len],
    }
}
