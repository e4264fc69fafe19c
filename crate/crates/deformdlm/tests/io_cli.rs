//! File-format parsers, the posterior archive round trip, and CLI
//! orchestration smoke tests.
//!
#![allow(clippy::field_reassign_with_default, clippy::needless_range_loop)]

mod common;

use common::*;
use nalgebra::DMatrix;
use std::path::Path;

use deformdlm::cli::{run, Command};
use deformdlm::config::RunConfig;
use deformdlm::data::CompletedData;
use deformdlm::error::Error;
use deformdlm::io::{
    load_archive, parse_response_file, parse_station_file, save_archive, spec_hash,
    write_response_file, write_station_file,
};
use deformdlm::model::Variant;
use deformdlm::rng::RandomStream;
use deformdlm::sampler::{run_chain, ChainConfig, Tunings};

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn station_file_minimal_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stations.csv");

    write(&path, "id,lon,lat\na,0,0\nb,1,0\nc,0,1\n");
    let parsed = parse_station_file(&path, None).unwrap();
    assert_eq!(parsed.gauged.count(), 3);
    assert_eq!(parsed.gauged_ids, vec!["a", "b", "c"]);
    assert_eq!(parsed.gauged.anchors(), [0, 1]);
    assert!(parsed.ungauged.is_none());

    // duplicate coordinates: error names the pair
    write(&path, "id,lon,lat\na,0,0\nb,1,0\nc,1,0\n");
    let err = parse_station_file(&path, None).unwrap_err();
    let msg = format!("{err}");
    assert!(msg.contains('1') && msg.contains('2'), "message: {msg}");

    // duplicate ids
    write(&path, "id,lon,lat\na,0,0\na,1,0\nc,0,1\n");
    assert!(parse_station_file(&path, None).is_err());

    // too few gauged stations
    write(&path, "id,lon,lat\na,0,0\nb,1,0\n");
    assert!(parse_station_file(&path, None).is_err());

    // non-numeric coordinate
    write(&path, "id,lon,lat\na,0,zero\nb,1,0\nc,0,1\n");
    assert!(parse_station_file(&path, None).is_err());
}

#[test]
fn station_file_role_split() {
    // 21 stations: 18 gauged for fitting plus 3 ungauged for scoring.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stations.csv");
    let mut text = String::from("id,lon,lat,role\n");
    for i in 0..21 {
        let role = if i < 18 { "gauged" } else { "ungauged" };
        text.push_str(&format!(
            "s{},{},{},{role}\n",
            i + 1,
            i as f64 * 0.1,
            (i * i) as f64 * 0.01
        ));
    }
    write(&path, &text);
    let parsed = parse_station_file(&path, None).unwrap();
    assert_eq!(parsed.gauged.count(), 18);
    assert_eq!(parsed.ungauged.as_ref().unwrap().ncols(), 3);
    assert_eq!(parsed.ungauged_ids, vec!["s19", "s20", "s21"]);
}

#[test]
fn response_file_round_trip_and_fractions() {
    let dir = tempfile::tempdir().unwrap();
    let stations = dir.path().join("stations.csv");
    write(&stations, "id,lon,lat\na,0,0\nb,1,0\nc,0,1\nd,1,1\n");
    let parsed = parse_station_file(&stations, None).unwrap();

    let mut rng = RandomStream::from_seed(7);
    let mats: Vec<DMatrix<f64>> = (0..8)
        .map(|t| {
            DMatrix::from_fn(4, 2, |s, v| {
                if (t + s + v) % 4 == 0 {
                    f64::NAN
                } else {
                    rng.standard_normal() * 1e-3 + (t * 100 + s * 10 + v) as f64
                }
            })
        })
        .collect();
    let path = dir.path().join("responses.csv");
    write_response_file(&path, &parsed.gauged_ids, &mats).unwrap();
    let data = parse_response_file(&path, parsed.gauged.clone(), &parsed.gauged_ids, 2, 8).unwrap();

    for t in 0..8 {
        for v in 0..2 {
            for s in 0..4 {
                let orig = mats[t][(s, v)];
                let got = data.vector(t)[v * 4 + s];
                if orig.is_nan() {
                    assert!(got.is_nan());
                } else {
                    assert_eq!(orig.to_bits(), got.to_bits());
                }
            }
        }
    }
    let frac = data.missing_fraction();
    let expect: f64 = mats
        .iter()
        .map(|m| m.column(0).iter().filter(|x| x.is_nan()).count() as f64)
        .sum::<f64>()
        / 32.0;
    assert!((frac[0] - expect).abs() < 1e-15);
}

#[test]
fn response_file_error_paths() {
    let dir = tempfile::tempdir().unwrap();
    let stations = dir.path().join("stations.csv");
    write(&stations, "id,lon,lat\na,0,0\nb,1,0\nc,0,1\n");
    let parsed = parse_station_file(&stations, None).unwrap();
    let path = dir.path().join("responses.csv");

    // all-NA variable
    write(
        &path,
        "t,site_id,var,value\n1,a,1,1.0\n1,b,1,2.0\n1,c,1,3.0\n1,a,2,NA\n1,b,2,NA\n1,c,2,NA\n",
    );
    assert!(parse_response_file(&path, parsed.gauged.clone(), &parsed.gauged_ids, 2, 1).is_err());

    // duplicate cell
    write(&path, "t,site_id,var,value\n1,a,1,1.0\n1,a,1,2.0\n");
    assert!(parse_response_file(&path, parsed.gauged.clone(), &parsed.gauged_ids, 1, 1).is_err());

    // out-of-range indices
    write(&path, "t,site_id,var,value\n2,a,1,1.0\n");
    assert!(parse_response_file(&path, parsed.gauged.clone(), &parsed.gauged_ids, 1, 1).is_err());
    write(&path, "t,site_id,var,value\n1,zz,1,1.0\n");
    assert!(parse_response_file(&path, parsed.gauged.clone(), &parsed.gauged_ids, 1, 1).is_err());
}

#[test]
fn archive_round_trip_is_exact() {
    let spec = SpecBuilder::new(Variant::M4, 4, 2, 1, 3).seed(200).build();
    let mut rng = RandomStream::from_seed(201);
    let state = perturbed_state(&spec, 1.0, 0.8, &mut rng);
    let data = synthetic_complete_data(&spec, &state, &mut rng);
    let config = ChainConfig::new(40, 10, 3, 5).unwrap();
    let posterior = run_chain(&spec, &data, &config, &Tunings::default(), |_| {}).unwrap();

    let dir = tempfile::tempdir().unwrap();
    save_archive(dir.path(), &spec, &config, &posterior).unwrap();
    let (manifest, loaded) = load_archive(dir.path(), &spec, &data).unwrap();
    assert_eq!(manifest.retained, posterior.len());
    assert_eq!(loaded.indices, posterior.indices);
    for (a, b) in loaded.states.iter().zip(&posterior.states) {
        assert_eq!(a.v.to_bits(), b.v.to_bits());
        assert_eq!(a.phi.to_bits(), b.phi.to_bits());
        assert_eq!(a.sigma.matrix(), b.sigma.matrix());
        assert_eq!(a.betas, b.betas);
        assert_eq!(a.deform.coords(), b.deform.coords());
        assert_eq!(a.imputed, b.imputed);
    }
}

#[test]
fn archive_rejects_mismatched_spec() {
    let spec = SpecBuilder::new(Variant::M4, 4, 2, 1, 3).seed(202).build();
    let mut rng = RandomStream::from_seed(203);
    let state = perturbed_state(&spec, 1.0, 0.8, &mut rng);
    let data = synthetic_complete_data(&spec, &state, &mut rng);
    let config = ChainConfig::new(20, 5, 3, 5).unwrap();
    let posterior = run_chain(&spec, &data, &config, &Tunings::default(), |_| {}).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_archive(dir.path(), &spec, &config, &posterior).unwrap();

    let mut other = spec.clone();
    other.priors.a_v = 0.5;
    let err = load_archive(dir.path(), &other, &data).unwrap_err();
    assert!(matches!(err, Error::Data(_)));
    assert_ne!(spec_hash(&spec), spec_hash(&other));
}

#[test]
fn completed_data_requires_imputations_for_missing() {
    let spec = SpecBuilder::new(Variant::M2, 3, 2, 1, 1).seed(204).build();
    let mut rng = RandomStream::from_seed(205);
    let state = perturbed_state(&spec, 1.0, 0.8, &mut rng);
    let full = synthetic_complete_data(&spec, &state, &mut rng);
    let mut m = DMatrix::from_fn(3, 2, |s, v| full.vector(0)[v * 3 + s]);
    m[(0, 0)] = f64::NAN;
    let data =
        deformdlm::data::ObservedDataset::from_matrices(spec.sites.clone(), 2, &[m]).unwrap();
    assert!(CompletedData::from_complete(&data).is_err());
}

#[test]
fn cli_pipeline_runs_and_reports_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    // unknown config key is a config error (exit code 2)
    let bad = RunConfig::from_str_contents("bogus.key=1", Path::new("x.cfg"));
    assert_eq!(bad.unwrap_err().exit_code(), 2);

    // simulate a small dataset
    let mut cfg = RunConfig::default();
    cfg.sim_t = 12;
    cfg.sim_gamma = 0.15;
    cfg.sim_seed = 3;
    cfg.out = root.join("data");
    run(&Command::Simulate, &cfg).unwrap();
    assert!(root.join("data/stations.csv").exists());
    assert!(root.join("data/ungauged_truth.csv").exists());

    // fit a short chain
    let mut fit_cfg = RunConfig::default();
    fit_cfg.stations = Some(root.join("data/stations.csv"));
    fit_cfg.responses = Some(root.join("data/responses.csv"));
    fit_cfg.covariates = Some(root.join("data/covariates.csv"));
    fit_cfg.ungauged_covariates = Some(root.join("data/ungauged_covariates.csv"));
    fit_cfg.truth = Some(root.join("data/ungauged_truth.csv"));
    fit_cfg.variant = Variant::M4;
    fit_cfg.t_len = 12;
    fit_cfg.q = 2;
    fit_cfg.p = 2;
    fit_cfg.iterations = 60;
    fit_cfg.burn_in = 20;
    fit_cfg.thin = 2;
    fit_cfg.seed = 5;
    fit_cfg.out = root.join("fit");
    run(&Command::Fit, &fit_cfg).unwrap();
    assert!(root.join("fit/manifest.txt").exists());
    assert!(root.join("fit/trace.txt").exists());

    // interpolate from the archive
    let mut interp_cfg = fit_cfg.clone();
    interp_cfg.out = root.join("interp");
    run(
        &Command::Interpolate {
            archive: root.join("fit"),
        },
        &interp_cfg,
    )
    .unwrap();
    assert!(root.join("interp/predictive.csv").exists());
    assert!(root.join("interp/summaries/s17_var1.csv").exists());

    // compare and diagnose
    let mut cmp_cfg = fit_cfg.clone();
    cmp_cfg.out = root.join("cmp");
    run(
        &Command::Compare {
            archives: vec![root.join("fit")],
        },
        &cmp_cfg,
    )
    .unwrap();
    let table = std::fs::read_to_string(root.join("cmp/compare.txt")).unwrap();
    assert!(table.contains("DIC") && table.contains("PMSE"));
    let kv = std::fs::read_to_string(root.join("cmp/compare.kv")).unwrap();
    assert!(kv.lines().any(|l| l.starts_with("metric=dic model=M4")));

    let mut diag_cfg = fit_cfg.clone();
    diag_cfg.out = root.join("diag");
    run(
        &Command::Diagnose {
            archive: root.join("fit"),
        },
        &diag_cfg,
    )
    .unwrap();
    assert!(root.join("diag/diagnose.txt").exists());

    // dimension cross-check failure: wrong q
    let mut wrong = fit_cfg.clone();
    wrong.q = 3;
    wrong.out = root.join("bad");
    let err = run(&Command::Fit, &wrong).unwrap_err();
    assert_eq!(err.exit_code(), 2, "got {err}");

    // missing input file: I/O error (exit code 4)
    let mut missing = fit_cfg.clone();
    missing.responses = Some(root.join("data/nonexistent.csv"));
    let err = run(&Command::Fit, &missing).unwrap_err();
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn station_writer_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stations.csv");
    let mut rng = RandomStream::from_seed(206);
    let sites = random_sites(5, &mut rng);
    let ids: Vec<String> = (1..=5).map(|i| format!("g{i}")).collect();
    let ungauged = DMatrix::from_column_slice(2, 2, &[3.5, -1.25, 4.0, 2.0]);
    let uids = vec!["u1".to_string(), "u2".to_string()];
    write_station_file(&path, &ids, &sites, &uids, Some(&ungauged)).unwrap();
    let parsed = parse_station_file(&path, None).unwrap();
    assert_eq!(parsed.gauged.coords(), sites.coords());
    assert_eq!(parsed.ungauged.as_ref().unwrap(), &ungauged);
    assert_eq!(parsed.gauged_ids, ids);
}
