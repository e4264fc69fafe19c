//! Chain diagnostics on a fitted model: Geweke statistics and highest-
//! posterior-density intervals for the identified parameter products, plus
//! the trace of the log posterior.
//!
//! Run with: cargo run --release --example convergence_diagnostics

use nalgebra::DMatrix;

use deformdlm::linalg::PosDefMatrix;
use deformdlm::metrics::{geweke_statistic, hpd_interval};
use deformdlm::missing::run_da_chain;
use deformdlm::model::{HyperParams, ModelSpec, Variant};
use deformdlm::sampler::{ChainConfig, Tunings};
use deformdlm::simgen::{generate, SimConfig};
use deformdlm::spatial::DeformPrior;

fn main() {
    let sim_cfg = SimConfig::new(50, 0.3, 23).unwrap();
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

    let chain = ChainConfig::new(20_000, 8_000, 12, 33).unwrap();
    let mut logpost_trace = Vec::with_capacity(chain.iterations);
    let posterior = run_da_chain(&spec, &sim.dataset, &chain, &Tunings::default(), |s| {
        logpost_trace.push(s.log_posterior);
    })
    .unwrap();

    println!(
        "log posterior: start {:.1}, after burn-in {:.1}, final {:.1}",
        logpost_trace[0],
        logpost_trace[chain.burn_in],
        logpost_trace.last().unwrap()
    );

    let chains = [
        ("phi", posterior.scalar_chain(|s| s.phi)),
        (
            "V*Sigma_1_1",
            posterior.scalar_chain(|s| s.v * s.sigma.matrix()[(0, 0)]),
        ),
        (
            "V*Sigma_1_2",
            posterior.scalar_chain(|s| s.v * s.sigma.matrix()[(0, 1)]),
        ),
        (
            "V*Sigma_2_2",
            posterior.scalar_chain(|s| s.v * s.sigma.matrix()[(1, 1)]),
        ),
    ];

    println!(
        "\n{:<12}{:>10}{:>22}{:>10}  reading",
        "parameter", "mean", "95% HPD", "geweke"
    );
    for (name, values) in &chains {
        let hpd = hpd_interval(values, 0.95).unwrap();
        // Classic segment choice: first 10% against last 50%.
        let z = geweke_statistic(values, 0.1, 0.5).unwrap();
        let z_text = z
            .map(|z| format!("{z:>10.3}"))
            .unwrap_or_else(|| format!("{:>10}", "-"));
        let reading = match z {
            Some(z) if z.abs() < 1.96 => "ok",
            Some(_) => "run longer",
            None => "-",
        };
        println!(
            "{name:<12}{:>10.4}  [{:>8.4}, {:>8.4}]{z_text}  {reading}",
            hpd.mean, hpd.lower, hpd.upper
        );
    }
    println!("\nvalues inside (-1.96, 1.96) show no evidence against convergence;");
    println!("a flagged row means that chain's early and late segments still differ");
}
