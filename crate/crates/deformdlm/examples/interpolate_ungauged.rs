//! Posterior-predictive interpolation at ungauged sites: fit a short chain,
//! propagate the deformation to three new locations, draw response paths,
//! and check the empirical coverage of the predictive bands against truth.
//!
//! Run with: cargo run --release --example interpolate_ungauged

use nalgebra::DMatrix;

use deformdlm::interp::{run_interpolation, UngaugedSet};
use deformdlm::linalg::PosDefMatrix;
use deformdlm::metrics::quantile_sorted;
use deformdlm::missing::run_da_chain;
use deformdlm::model::{HyperParams, ModelSpec, Variant};
use deformdlm::sampler::{ChainConfig, Tunings};
use deformdlm::simgen::{default_ungauged_coords, generate, SimConfig};
use deformdlm::spatial::DeformPrior;

fn main() {
    let sim_cfg = SimConfig::new(80, 0.15, 3).unwrap();
    let sim = generate(&sim_cfg).unwrap();

    let sites = sim_cfg.sites.clone();
    let priors = HyperParams::defaults(2, sites.median_pairwise_distance()).unwrap();
    let c0 = PosDefMatrix::identity(2);
    let w = PosDefMatrix::new(c0.matrix() * (0.05 / sim_cfg.t_len as f64)).unwrap();
    let deform_prior = DeformPrior::new(&sites, 1.0, 10.0).unwrap();
    let spec = ModelSpec::new(
        sites,
        Variant::M4,
        2,
        vec![DMatrix::identity(2, 2); sim_cfg.t_len],
        sim.x_seq.clone(),
        w,
        DMatrix::zeros(2, 2),
        c0,
        priors,
        deform_prior,
    )
    .unwrap();

    let chain = ChainConfig::new(4000, 1000, 3, 5).unwrap();
    println!("fitting ({} iterations)...", chain.iterations);
    let posterior = run_da_chain(&spec, &sim.dataset, &chain, &Tunings::default(), |_| {}).unwrap();

    let ungauged = UngaugedSet::new(
        default_ungauged_coords(),
        sim.x_star_seq.clone(),
        &spec.sites,
        2,
    )
    .unwrap();
    println!(
        "interpolating {} retained draws at {} ungauged sites...",
        posterior.len(),
        ungauged.count()
    );
    let draws = run_interpolation(&spec, &sim.dataset, &ungauged, &posterior, 99).unwrap();

    // Pointwise 95% band coverage of the true (held-out) responses.
    for site in 0..ungauged.count() {
        for var in 0..2 {
            let mut covered = 0usize;
            for t in 0..sim_cfg.t_len {
                let mut chain_vals = draws.cell_chain(site, var, t);
                chain_vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let lo = quantile_sorted(&chain_vals, 0.025);
                let hi = quantile_sorted(&chain_vals, 0.975);
                let truth = sim.ungauged_truth[t][(site, var)];
                if truth >= lo && truth <= hi {
                    covered += 1;
                }
            }
            println!(
                "site s{} variable {}: 95% band covers {:>3.0}% of the true path",
                17 + site,
                var + 1,
                100.0 * covered as f64 / sim_cfg.t_len as f64
            );
        }
    }

    // Posterior mean of the extended deformation at the first ungauged site.
    let k = draws.len() as f64;
    let mut mean_d = DMatrix::zeros(2, ungauged.count());
    for d in &draws.d_stars {
        mean_d += d / k;
    }
    println!("\nposterior-mean deformed coordinates of the ungauged sites (truth in parentheses):");
    for site in 0..ungauged.count() {
        println!(
            "  s{}: ({:.3}, {:.3})   (({:.3}, {:.3}))",
            17 + site,
            mean_d[(0, site)],
            mean_d[(1, site)],
            sim.d_star[(0, site)],
            sim.d_star[(1, site)]
        );
    }
}
