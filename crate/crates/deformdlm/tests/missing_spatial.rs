//! Missing-data machinery against dense permuted-covariance oracles, plus
//! spatial-kernel checks on the simulation grid.

mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use deformdlm::data::{build_layout, CompletedData, ObservedDataset, TimeClass};
use deformdlm::missing::{conditional_moments, da_step, impute_missing, run_da_chain};
use deformdlm::model::{init_state, Variant};
use deformdlm::rng::RandomStream;
use deformdlm::sampler::{hybrid_step, ChainConfig, Tunings};
use deformdlm::simgen::default_grid_sites;
use deformdlm::spatial::{prior_correlation, spatial_correlation};

/// Dense oracle: permutation matrix P applied to Sigma ⊗ B, partitioned into
/// observed/missing blocks, conditioned by explicit inversion.
fn dense_imputation_moments(
    y: &DVector<f64>,
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    b: &DMatrix<f64>,
    mask: &[bool],
) -> (DVector<f64>, DMatrix<f64>) {
    let nq = mask.len();
    let layout = build_layout(mask);
    let mut p = DMatrix::zeros(nq, nq);
    for (row, &orig) in layout.permutation().iter().enumerate() {
        p[(row, orig)] = 1.0;
    }
    let kron = sigma.kronecker(b);
    let delta = &p * kron * p.transpose();
    let mu_p = &p * mu;
    // Missing entries may be NaN; zero them so 0 * NaN cannot leak through
    // the permutation multiply (the conditional never reads them).
    let y_clean = DVector::from_fn(nq, |k, _| if mask[k] { y[k] } else { 0.0 });
    let y_p = &p * y_clean;
    let n_obs = layout.n_obs();
    let n_mis = layout.n_mis();

    let mu_mis = mu_p.rows(n_obs, n_mis).into_owned();
    let delta_mis = delta.view((n_obs, n_obs), (n_mis, n_mis)).into_owned();
    if n_obs == 0 {
        return (mu_mis, delta_mis);
    }
    let mu_obs = mu_p.rows(0, n_obs).into_owned();
    let y_obs = y_p.rows(0, n_obs).into_owned();
    let delta_obs = delta.view((0, 0), (n_obs, n_obs)).into_owned();
    let delta_mo = delta.view((n_obs, 0), (n_mis, n_obs)).into_owned();
    let obs_inv = delta_obs.try_inverse().unwrap();
    let mean = &mu_mis + &delta_mo * &obs_inv * (y_obs - mu_obs);
    let cov = &delta_mis - &delta_mo * &obs_inv * delta_mo.transpose();
    (mean, cov)
}

fn random_mask(nq: usize, rng: &mut RandomStream, allow_empty: bool) -> Vec<bool> {
    loop {
        let mask: Vec<bool> = (0..nq).map(|_| rng.uniform() < 0.65).collect();
        let n_obs = mask.iter().filter(|&&m| m).count();
        if n_obs < nq && (allow_empty || n_obs > 0) {
            return mask;
        }
    }
}

#[test]
fn conditional_moments_match_dense_oracle() {
    // N = 4, q = 2 with random masks, including the all-missing case.
    let mut rng = RandomStream::from_seed(50);
    for trial in 0..25 {
        let sigma = random_spd(2, &mut rng);
        let b = random_spd(4, &mut rng);
        let mu = DVector::from_fn(8, |_, _| rng.standard_normal());
        let y = DVector::from_fn(8, |_, _| rng.standard_normal());
        let mask = if trial == 0 {
            vec![false; 8]
        } else if trial == 1 {
            // The worked layout: observed at vec positions 1,2,4,7,8.
            vec![true, true, false, true, false, false, true, true]
        } else {
            random_mask(8, &mut rng, false)
        };
        let layout = build_layout(&mask);
        let (mean, cov) = conditional_moments(&y, &mu, &sigma, &b, &layout).unwrap();
        let (o_mean, o_cov) = dense_imputation_moments(&y, &mu, &sigma, &b, &mask);
        assert!(
            (&mean - &o_mean).amax() < 1e-10,
            "trial {trial}: mean gap {}",
            (&mean - &o_mean).amax()
        );
        assert!(
            (&cov - &o_cov).amax() < 1e-10,
            "trial {trial}: cov gap {}",
            (&cov - &o_cov).amax()
        );
    }
}

#[test]
fn conditional_covariance_is_spd_on_random_layouts() {
    let mut rng = RandomStream::from_seed(51);
    for _ in 0..30 {
        let sigma = random_spd(2, &mut rng);
        let b = random_spd(3, &mut rng);
        let mu = DVector::zeros(6);
        let y = DVector::from_fn(6, |_, _| rng.standard_normal());
        let mask = random_mask(6, &mut rng, true);
        let layout = build_layout(&mask);
        let (_, cov) = conditional_moments(&y, &mu, &sigma, &b, &layout).unwrap();
        let eig = cov.symmetric_eigen();
        assert!(
            eig.eigenvalues.iter().all(|&e| e > -1e-10),
            "eigenvalues {:?}",
            eig.eigenvalues
        );
    }
}

#[test]
fn imputation_draw_moments_match_conditional_law() {
    // Repeated imputation at fixed parameters: empirical mean/cov of the
    // imputed block converge to the conditional-law moments (V-scaled).
    let spec = SpecBuilder::new(Variant::M2, 4, 2, 1, 1).seed(52).build();
    let mut rng = RandomStream::from_seed(53);
    let state = perturbed_state(&spec, 0.7, 0.8, &mut rng);

    // One time point with a fixed partial mask.
    let full = synthetic_complete_data(&spec, &state, &mut rng);
    let mut y = DMatrix::from_fn(4, 2, |s, v| full.vector(0)[v * 4 + s]);
    let mask = [true, false, true, true, false, true, true, false];
    for (k, &obs) in mask.iter().enumerate() {
        if !obs {
            y[(k % 4, k / 4)] = f64::NAN;
        }
    }
    let data = ObservedDataset::from_matrices(spec.sites.clone(), 2, &[y]).unwrap();

    let b = spatial_correlation(&state.deform, state.phi).unwrap();
    let mu = deformdlm::linalg::vec_of(&(&spec.x_seq[0] * &state.betas[1]));
    let (mean, cov) =
        dense_imputation_moments(data.vector(0), &mu, state.sigma.matrix(), b.matrix(), &mask);
    let scaled_cov = cov * state.v;

    let n = 100_000;
    let n_mis = 3;
    let mut acc = DVector::zeros(n_mis);
    let mut acc2 = DMatrix::zeros(n_mis, n_mis);
    for _ in 0..n {
        let completed = impute_missing(&spec, &state, &data, &mut rng).unwrap();
        let draw = DVector::from_column_slice(&completed.imputed()[0]);
        acc += &draw;
        acc2 += &draw * draw.transpose();
    }
    let emp_mean = &acc / n as f64;
    let emp_cov = acc2 / n as f64 - &emp_mean * emp_mean.transpose();
    assert!(
        (&emp_mean - &mean).amax() < 0.01,
        "mean gap {}",
        (&emp_mean - &mean).amax()
    );
    assert!(
        (&emp_cov - &scaled_cov).amax() < 0.01,
        "cov gap {}",
        (&emp_cov - &scaled_cov).amax()
    );
}

#[test]
fn marginal_consistency_by_total_expectation() {
    // Drawing y_obs from the joint and then imputing y_mis | y_obs recovers
    // the marginal law of y_mis.
    let spec = SpecBuilder::new(Variant::M2, 3, 2, 1, 1).seed(54).build();
    let mut rng = RandomStream::from_seed(55);
    let state = perturbed_state(&spec, 0.8, 1.0, &mut rng);
    let b = spatial_correlation(&state.deform, state.phi).unwrap();
    let mu = deformdlm::linalg::vec_of(&(&spec.x_seq[0] * &state.betas[1]));
    let mask = [true, false, true, false, true, true];
    let mis_idx: Vec<usize> = (0..6).filter(|&k| !mask[k]).collect();

    let dense_cov = state.sigma.matrix().kronecker(b.matrix()) * state.v;
    let chol = dense_cov.clone().cholesky().unwrap();

    let n = 60_000;
    let mut acc = DVector::zeros(2);
    let mut acc2 = DMatrix::zeros(2, 2);
    for _ in 0..n {
        // joint draw, then mask, then impute
        let z = DVector::from_fn(6, |_, _| rng.standard_normal());
        let joint = &mu + chol.l() * z;
        let mut y = DMatrix::from_fn(3, 2, |s, v| joint[v * 3 + s]);
        for &k in &mis_idx {
            y[(k % 3, k / 3)] = f64::NAN;
        }
        let data = ObservedDataset::from_matrices(spec.sites.clone(), 2, &[y]).unwrap();
        let completed = impute_missing(&spec, &state, &data, &mut rng).unwrap();
        let draw = DVector::from_column_slice(&completed.imputed()[0]);
        acc += &draw;
        acc2 += &draw * draw.transpose();
    }
    let emp_mean = &acc / n as f64;
    let emp_cov = acc2 / n as f64 - &emp_mean * emp_mean.transpose();

    let expect_mean = DVector::from_fn(2, |i, _| mu[mis_idx[i]]);
    let expect_cov = DMatrix::from_fn(2, 2, |i, j| dense_cov[(mis_idx[i], mis_idx[j])]);
    assert!((&emp_mean - &expect_mean).amax() < 0.02);
    assert!((&emp_cov - &expect_cov).amax() < 0.03);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    // Un-permuting the (obs, mis) concatenation recovers the original
    // vectorization bit-exactly.
    #[test]
    fn permutation_round_trip(mask in proptest::collection::vec(any::<bool>(), 1..24)) {
        let layout = build_layout(&mask);
        let values: Vec<f64> = (0..mask.len()).map(|k| k as f64 * 1.25).collect();
        // forward: gather observed-first
        let permuted: Vec<f64> = layout.permutation().iter().map(|&k| values[k]).collect();
        // inverse: scatter back
        let mut recovered = vec![0.0; mask.len()];
        for (row, &orig) in layout.permutation().iter().enumerate() {
            recovered[orig] = permuted[row];
        }
        prop_assert_eq!(recovered, values);
        prop_assert_eq!(layout.n_obs() + layout.n_mis(), mask.len());
    }
}

#[test]
fn da_step_reduces_to_hybrid_step_without_missingness() {
    // No missing entries: the imputation consumes no randomness and the DA
    // sweep equals the plain hybrid sweep draw for draw.
    let spec = SpecBuilder::new(Variant::M4, 4, 2, 1, 3).seed(56).build();
    let mut rng = RandomStream::from_seed(57);
    let state = perturbed_state(&spec, 1.0, 0.9, &mut rng);
    let data = synthetic_complete_data(&spec, &state, &mut rng);
    let completed = CompletedData::from_complete(&data).unwrap();

    let mut rng_a = RandomStream::from_seed(500);
    let mut rng_b = RandomStream::from_seed(500);
    let (a, _) = da_step(&spec, &state, &data, &Tunings::default(), &mut rng_a).unwrap();
    let (b, _) = hybrid_step(&spec, &state, &completed, &Tunings::default(), &mut rng_b).unwrap();
    assert_eq!(a.v.to_bits(), b.v.to_bits());
    assert_eq!(a.phi.to_bits(), b.phi.to_bits());
    assert_eq!(a.sigma.matrix(), b.sigma.matrix());
    assert_eq!(a.betas, b.betas);
}

#[test]
fn da_step_resamples_imputations_but_not_observations() {
    let spec = SpecBuilder::new(Variant::M2, 4, 2, 1, 2).seed(58).build();
    let mut rng = RandomStream::from_seed(59);
    let state = perturbed_state(&spec, 1.0, 0.9, &mut rng);
    let full = synthetic_complete_data(&spec, &state, &mut rng);
    let mats: Vec<DMatrix<f64>> = (0..2)
        .map(|t| {
            let mut m = DMatrix::from_fn(4, 2, |s, v| full.vector(t)[v * 4 + s]);
            m[(1, 0)] = f64::NAN;
            m[(3, 1)] = f64::NAN;
            m
        })
        .collect();
    let data = ObservedDataset::from_matrices(spec.sites.clone(), 2, &mats).unwrap();
    let mut st = init_state(&spec, &data, &mut rng).unwrap();
    let first = st.imputed.clone();
    let mut changed = false;
    for _ in 0..3 {
        let (next, _) = da_step(&spec, &st, &data, &Tunings::default(), &mut rng).unwrap();
        st = next;
        if st.imputed != first {
            changed = true;
        }
        // observed entries never move
        let completed = CompletedData::assemble(&data, &st.imputed).unwrap();
        for t in 0..2 {
            for (k, &obs) in data.mask(t).iter().enumerate() {
                if obs {
                    assert_eq!(
                        completed.vector(t)[k].to_bits(),
                        data.vector(t)[k].to_bits()
                    );
                }
            }
        }
    }
    assert!(changed, "imputations never changed across DA sweeps");
}

#[test]
fn fully_missing_time_is_handled_by_marginal_draws() {
    let spec = SpecBuilder::new(Variant::M2, 3, 2, 1, 2).seed(60).build();
    let mut rng = RandomStream::from_seed(61);
    let state = perturbed_state(&spec, 1.0, 0.9, &mut rng);
    let full = synthetic_complete_data(&spec, &state, &mut rng);
    let m0 = DMatrix::from_fn(3, 2, |s, v| full.vector(0)[v * 3 + s]);
    let m1 = DMatrix::from_element(3, 2, f64::NAN);
    let data = ObservedDataset::from_matrices(spec.sites.clone(), 2, &[m0, m1]).unwrap();
    assert_eq!(data.layout(1).class(), TimeClass::Missing);
    let completed = impute_missing(&spec, &state, &data, &mut rng).unwrap();
    assert!(completed.vector(1).iter().all(|x| x.is_finite()));
    // DA chain runs through the fully missing time
    let config = ChainConfig::new(30, 10, 2, 3).unwrap();
    let posterior = run_da_chain(&spec, &data, &config, &Tunings::default(), |_| {}).unwrap();
    assert_eq!(posterior.len(), config.retained);
}

#[test]
fn da_chain_is_bit_deterministic() {
    let spec = SpecBuilder::new(Variant::M4, 4, 2, 1, 2).seed(62).build();
    let mut rng = RandomStream::from_seed(63);
    let state = perturbed_state(&spec, 1.0, 0.9, &mut rng);
    let full = synthetic_complete_data(&spec, &state, &mut rng);
    let mats: Vec<DMatrix<f64>> = (0..2)
        .map(|t| {
            let mut m = DMatrix::from_fn(4, 2, |s, v| full.vector(t)[v * 4 + s]);
            m[(2, 1)] = f64::NAN;
            m
        })
        .collect();
    let data = ObservedDataset::from_matrices(spec.sites.clone(), 2, &mats).unwrap();
    let config = ChainConfig::new(40, 10, 3, 7).unwrap();
    let a = run_da_chain(&spec, &data, &config, &Tunings::default(), |_| {}).unwrap();
    let b = run_da_chain(&spec, &data, &config, &Tunings::default(), |_| {}).unwrap();
    for (sa, sb) in a.states.iter().zip(&b.states) {
        assert_eq!(sa.v.to_bits(), sb.v.to_bits());
        assert_eq!(sa.imputed, sb.imputed);
    }
}

// ---------------------------------------------------------------------------
// Spatial kernels on the simulation grid
// ---------------------------------------------------------------------------

#[test]
fn grid_prior_correlation_matches_double_loop() {
    let sites = default_grid_sites();
    let psi = 10.0;
    let rd = prior_correlation(&sites, psi).unwrap();
    let n = sites.count();
    for i in 0..n {
        for j in 0..n {
            let dx = sites.coords()[(0, i)] - sites.coords()[(0, j)];
            let dy = sites.coords()[(1, i)] - sites.coords()[(1, j)];
            let expect = (-psi * (dx * dx + dy * dy)).exp();
            assert!(
                (rd.matrix()[(i, j)] - expect).abs() < 1e-14,
                "({i},{j}): {} vs {expect}",
                rd.matrix()[(i, j)]
            );
        }
    }
}

#[test]
fn grid_prior_correlation_is_positive_definite() {
    let sites = default_grid_sites();
    let rd = prior_correlation(&sites, 10.0).unwrap();
    let eig = rd.matrix().clone().symmetric_eigen();
    assert!(eig.eigenvalues.iter().all(|&e| e > 0.0));
    assert_eq!(rd.jitter(), 0.0);
}
