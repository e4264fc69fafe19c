//! Fit all four variants (deformation on/off x correlated/independent
//! responses) to one anisotropic dataset and compare them by DIC, PMSE, and
//! interval score.
//!
//! Run with: cargo run --release --example compare_models

use nalgebra::DMatrix;

use deformdlm::interp::{run_interpolation, UngaugedSet};
use deformdlm::linalg::PosDefMatrix;
use deformdlm::metrics::{aggregate_interval_scores, dic, pmse, HeldOutTruth};
use deformdlm::missing::run_da_chain;
use deformdlm::model::{HyperParams, ModelSpec, Variant};
use deformdlm::sampler::{ChainConfig, Tunings};
use deformdlm::simgen::{default_ungauged_coords, generate, SimConfig};
use deformdlm::spatial::DeformPrior;

fn main() {
    let sim_cfg = SimConfig::new(60, 0.15, 17).unwrap();
    let sim = generate(&sim_cfg).unwrap();
    let truth = HeldOutTruth::new(sim.ungauged_truth.clone()).unwrap();

    let mut rows = Vec::new();
    for variant in Variant::all() {
        let sites = sim_cfg.sites.clone();
        let priors = HyperParams::defaults(2, sites.median_pairwise_distance()).unwrap();
        let c0 = PosDefMatrix::identity(2);
        let w = PosDefMatrix::new(c0.matrix() * (0.05 / sim_cfg.t_len as f64)).unwrap();
        let deform_prior = DeformPrior::new(&sites, 1.0, 10.0).unwrap();
        let spec = ModelSpec::new(
            sites,
            variant,
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

        let chain = ChainConfig::new(3000, 1000, 2, 29).unwrap();
        print!("fitting {variant}... ");
        let posterior =
            run_da_chain(&spec, &sim.dataset, &chain, &Tunings::default(), |_| {}).unwrap();
        let dic_result = dic(&spec, &sim.dataset, &posterior).unwrap();

        let ungauged = UngaugedSet::new(
            default_ungauged_coords(),
            sim.x_star_seq.clone(),
            &spec.sites,
            2,
        )
        .unwrap();
        let draws = run_interpolation(&spec, &sim.dataset, &ungauged, &posterior, 55).unwrap();
        let pmse_value = pmse(&draws, &truth).unwrap();
        let is_table = aggregate_interval_scores(&draws, &truth, 0.05).unwrap();
        println!("done (DIC {:.1})", dic_result.dic);
        rows.push((variant, dic_result, pmse_value, is_table));
    }

    println!("\n{:<10}{:>12}{:>10}{:>10}", "model", "DIC", "pD", "PMSE");
    for (variant, dic_result, pmse_value, _) in &rows {
        println!(
            "{variant:<10}{:>12.1}{:>10.1}{:>10.4}",
            dic_result.dic, dic_result.effective_params, pmse_value
        );
    }

    println!("\ninterval scores (alpha = 0.05) per ungauged site and variable:");
    print!("{:<16}", "cell");
    for (variant, ..) in &rows {
        print!("{variant:>10}");
    }
    println!();
    for site in 0..3 {
        for var in 0..2 {
            print!("{:<16}", format!("s{} var {}", 17 + site, var + 1));
            for (_, _, _, is_table) in &rows {
                match is_table[site][var] {
                    Some(v) => print!("{v:>10.4}"),
                    None => print!("{:>10}", "-"),
                }
            }
            println!();
        }
    }

    let best = rows
        .iter()
        .min_by(|a, b| a.1.dic.partial_cmp(&b.1.dic).unwrap())
        .unwrap();
    println!("\nlowest DIC: {}", best.0);
}
