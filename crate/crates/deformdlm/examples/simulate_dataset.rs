//! Generate a synthetic anisotropic spatiotemporal dataset and write it out
//! in the file formats the fitting pipeline consumes.
//!
//! Run with: cargo run --release --example simulate_dataset

use deformdlm::simgen::{generate, SimConfig};

fn main() {
    let cfg = SimConfig::new(100, 0.15, 42).expect("valid simulation config");
    let out = generate(&cfg).expect("generation succeeds");

    println!(
        "generated T = {} time points at {} gauged sites",
        cfg.t_len,
        cfg.sites.count()
    );
    println!(
        "true parameters: v = {}, phi = {}, response correlation = {}",
        out.v,
        out.phi,
        out.sigma[(0, 1)]
    );

    let fractions = out.dataset.missing_fraction();
    println!(
        "missing fractions after masking: variable 1 = {:.2}%, variable 2 = {:.2}%",
        100.0 * fractions[0],
        100.0 * fractions[1]
    );
    println!(
        "masked sites per variable per time: {} of {}",
        cfg.masked_per_variable(),
        cfg.sites.count()
    );

    // The deformation stretches and rotates every non-anchor site.
    let anchors = cfg.sites.anchors();
    for site in [0usize, 1, 5, 10] {
        let s = (cfg.sites.coords()[(0, site)], cfg.sites.coords()[(1, site)]);
        let d = (
            out.deform.coords()[(0, site)],
            out.deform.coords()[(1, site)],
        );
        let tag = if anchors.contains(&site) {
            " (anchor)"
        } else {
            ""
        };
        println!(
            "site {:>2}{tag}: geographic ({:.3}, {:.3}) -> deformed ({:.3}, {:.3})",
            site + 1,
            s.0,
            s.1,
            d.0,
            d.1
        );
    }

    let dir = std::path::PathBuf::from("target/example_data");
    let ids: Vec<String> = (1..=16).map(|i| format!("s{i}")).collect();
    let uids: Vec<String> = (17..=19).map(|i| format!("s{i}")).collect();
    deformdlm::io::write_station_file(
        &dir.join("stations.csv"),
        &ids,
        &cfg.sites,
        &uids,
        Some(&cfg.ungauged),
    )
    .unwrap();
    let masked: Vec<nalgebra::DMatrix<f64>> = (0..cfg.t_len)
        .map(|t| nalgebra::DMatrix::from_fn(16, 2, |s, v| out.dataset.vector(t)[v * 16 + s]))
        .collect();
    deformdlm::io::write_response_file(&dir.join("responses.csv"), &ids, &masked).unwrap();
    deformdlm::io::write_covariate_file(&dir.join("covariates.csv"), &ids, &out.x_seq).unwrap();
    deformdlm::io::write_covariate_file(
        &dir.join("ungauged_covariates.csv"),
        &uids,
        &out.x_star_seq,
    )
    .unwrap();
    deformdlm::io::write_response_file(&dir.join("ungauged_truth.csv"), &uids, &out.ungauged_truth)
        .unwrap();
    println!(
        "\nwrote station, response, covariate, and truth files under {}",
        dir.display()
    );
}
