//! Run orchestration behind the command-line surface: simulate, fit,
//! interpolate, compare, diagnose. Each command reads a flat key=value
//! config, writes only under the configured output directory, and never
//! mutates its inputs.

use std::fmt::Write as FmtWrite;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::config::RunConfig;
use crate::data::ObservedDataset;
use crate::error::{Error, Result};
use crate::interp::{run_interpolation, PredictiveDraws, UngaugedSet};
use crate::io;
use crate::linalg::PosDefMatrix;
use crate::metrics;
use crate::model::{HyperParams, ModelSpec, Variant};
use crate::sampler::PosteriorSample;
use crate::simgen;
use crate::spatial::DeformPrior;

const INTERP_SEED_SALT: u64 = 0x696e746572_u64; // distinct stream for prediction draws

#[derive(Debug, Clone)]
pub enum Command {
    Simulate,
    Fit,
    Interpolate { archive: PathBuf },
    Compare { archives: Vec<PathBuf> },
    Diagnose { archive: PathBuf },
}

pub fn run(command: &Command, cfg: &RunConfig) -> Result<()> {
    match command {
        Command::Simulate => simulate(cfg),
        Command::Fit => fit(cfg),
        Command::Interpolate { archive } => interpolate(cfg, archive),
        Command::Compare { archives } => compare(cfg, archives),
        Command::Diagnose { archive } => diagnose(cfg, archive),
    }
}

// ---------------------------------------------------------------------------
// Shared loading
// ---------------------------------------------------------------------------

struct Inputs {
    stations: io::StationFile,
    data: ObservedDataset,
    x_seq: Vec<DMatrix<f64>>,
}

fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let stations = io::parse_station_file(cfg.require_stations()?, cfg.anchors)?;
    let x_seq = load_designs(
        cfg.covariates.as_deref(),
        &stations.gauged_ids,
        cfg.p,
        cfg.t_len,
    )?;
    let data = io::parse_response_file(
        cfg.require_responses()?,
        stations.gauged.clone(),
        &stations.gauged_ids,
        cfg.q,
        cfg.t_len,
    )?;
    Ok(Inputs {
        stations,
        data,
        x_seq,
    })
}

/// Design matrices from a covariate file, or the intercept-only column of
/// ones when p = 1 and no file is given.
fn load_designs(
    path: Option<&Path>,
    ids: &[String],
    p: usize,
    t_len: usize,
) -> Result<Vec<DMatrix<f64>>> {
    match path {
        Some(path) => io::parse_covariate_file(path, ids, p, t_len),
        None if p == 1 => Ok(vec![DMatrix::from_element(ids.len(), 1, 1.0); t_len]),
        None => Err(Error::Config(format!(
            "model.p = {p} needs a covariate file (paths.covariates)"
        ))),
    }
}

fn build_spec(cfg: &RunConfig, inputs: &Inputs, variant: Variant) -> Result<ModelSpec> {
    let sites = inputs.stations.gauged.clone();
    let zeta = sites.median_pairwise_distance();
    let q = cfg.q;
    let p = cfg.p;
    let mut priors = HyperParams::defaults(q, zeta)?;
    priors.a_v = cfg.a_v;
    priors.b_v = cfg.b_v;
    priors.a_sigma = cfg.a_sigma;
    priors.b_sigma = PosDefMatrix::new(DMatrix::identity(q, q) * cfg.b_sigma_scale)?;
    priors.a_sigma_diag = vec![cfg.a_sigma_diag; q];
    priors.b_sigma_diag = vec![cfg.b_sigma_diag; q];

    let c0 = PosDefMatrix::new(DMatrix::identity(p, p) * cfg.c0_scale)?;
    let w = if cfg.w_identity {
        PosDefMatrix::identity(p)
    } else {
        PosDefMatrix::new(c0.matrix() * (cfg.w_scale / cfg.t_len as f64))?
    };
    let deform_prior = DeformPrior::new(&sites, cfg.tau, cfg.psi)?;

    ModelSpec::new(
        sites,
        variant,
        q,
        vec![DMatrix::identity(p, p); cfg.t_len],
        inputs.x_seq.clone(),
        w,
        DMatrix::zeros(p, q),
        c0,
        priors,
        deform_prior,
    )
}

fn load_ungauged(cfg: &RunConfig, stations: &io::StationFile) -> Result<UngaugedSet> {
    let coords = stations
        .ungauged
        .clone()
        .ok_or_else(|| Error::Config("station file has no rows with role=ungauged".into()))?;
    let x_star = load_designs(
        cfg.ungauged_covariates.as_deref(),
        &stations.ungauged_ids,
        cfg.p,
        cfg.t_len,
    )?;
    UngaugedSet::new(coords, x_star, &stations.gauged, cfg.p)
}

fn load_truth(cfg: &RunConfig, stations: &io::StationFile) -> Result<metrics::HeldOutTruth> {
    let path = cfg
        .truth
        .as_deref()
        .ok_or_else(|| Error::Config("paths.truth is required for this command".into()))?;
    let mats = io::parse_response_matrices(path, &stations.ungauged_ids, cfg.q, cfg.t_len)?;
    metrics::HeldOutTruth::new(mats)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn simulate(cfg: &RunConfig) -> Result<()> {
    let sim = simgen::SimConfig::new(cfg.sim_t, cfg.sim_gamma, cfg.sim_seed)?;
    let out = simgen::generate(&sim)?;
    let dir = &cfg.out;

    let gauged_ids: Vec<String> = (1..=sim.sites.count()).map(|i| format!("s{i}")).collect();
    let ungauged_ids: Vec<String> = (sim.sites.count() + 1..=sim.sites.count() + 3)
        .map(|i| format!("s{i}"))
        .collect();

    io::write_station_file(
        &dir.join("stations.csv"),
        &gauged_ids,
        &sim.sites,
        &ungauged_ids,
        Some(&sim.ungauged),
    )?;

    let masked: Vec<DMatrix<f64>> = (0..out.dataset.t_len())
        .map(|t| {
            let v = out.dataset.vector(t);
            DMatrix::from_fn(out.dataset.n(), out.dataset.q(), |s, i| {
                v[i * out.dataset.n() + s]
            })
        })
        .collect();
    io::write_response_file(&dir.join("responses.csv"), &gauged_ids, &masked)?;
    io::write_covariate_file(&dir.join("covariates.csv"), &gauged_ids, &out.x_seq)?;
    io::write_covariate_file(
        &dir.join("ungauged_covariates.csv"),
        &ungauged_ids,
        &out.x_star_seq,
    )?;
    io::write_response_file(
        &dir.join("ungauged_truth.csv"),
        &ungauged_ids,
        &out.ungauged_truth,
    )?;

    let mut params = String::new();
    writeln!(params, "v={}", io::format_float(out.v)).unwrap();
    writeln!(params, "phi={}", io::format_float(out.phi)).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            writeln!(
                params,
                "sigma_{}_{}={}",
                i + 1,
                j + 1,
                io::format_float(out.sigma[(i, j)])
            )
            .unwrap();
        }
    }
    io::write_file(&dir.join("truth_params.txt"), &params)?;

    let mut deform = String::from("axis,site,value\n");
    for site in 0..sim.sites.count() {
        for axis in 0..2 {
            writeln!(
                deform,
                "{},{},{}",
                axis + 1,
                site + 1,
                io::format_float(out.deform.coords()[(axis, site)])
            )
            .unwrap();
        }
    }
    io::write_file(&dir.join("truth_deform.csv"), &deform)?;

    println!(
        "simulated T={} gamma={} seed={} -> {}",
        cfg.sim_t,
        cfg.sim_gamma,
        cfg.sim_seed,
        dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

fn fit(cfg: &RunConfig) -> Result<()> {
    let inputs = load_inputs(cfg)?;
    let spec = build_spec(cfg, &inputs, cfg.variant)?;
    let chain_cfg = cfg.chain_config()?;
    let tunings = cfg.tunings();

    let mut trace = String::from("iter,logpost,phi_accepted,slice_resets\n");
    let posterior = crate::missing::run_da_chain(&spec, &inputs.data, &chain_cfg, &tunings, |s| {
        writeln!(
            trace,
            "{},{},{},{}",
            s.iteration,
            io::format_float(s.log_posterior),
            s.phi_accepted as u8,
            s.slice_resets
        )
        .unwrap();
    })?;

    io::write_file(&cfg.out.join("trace.txt"), &trace)?;
    io::save_archive(&cfg.out, &spec, &chain_cfg, &posterior)?;
    println!(
        "fit {} ({} retained draws) -> {}",
        cfg.variant,
        posterior.len(),
        cfg.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// interpolate
// ---------------------------------------------------------------------------

fn load_archive_with_spec(
    cfg: &RunConfig,
    archive: &Path,
) -> Result<(ModelSpec, Inputs, io::ArchiveManifest, PosteriorSample)> {
    let manifest = io::read_manifest(archive)?;
    let inputs = load_inputs(cfg)?;
    let spec = build_spec(cfg, &inputs, manifest.variant)?;
    let (manifest, posterior) = io::load_archive(archive, &spec, &inputs.data)?;
    Ok((spec, inputs, manifest, posterior))
}

fn interpolate(cfg: &RunConfig, archive: &Path) -> Result<()> {
    let (spec, inputs, manifest, posterior) = load_archive_with_spec(cfg, archive)?;
    let ungauged = load_ungauged(cfg, &inputs.stations)?;
    let draws = run_interpolation(
        &spec,
        &inputs.data,
        &ungauged,
        &posterior,
        manifest.seed ^ INTERP_SEED_SALT,
    )?;
    io::save_predictive(&cfg.out, &draws)?;
    write_summaries(cfg, &inputs.stations.ungauged_ids, &draws)?;
    println!(
        "interpolated {} draws x {} times x {} sites -> {}",
        draws.len(),
        spec.t_len,
        ungauged.count(),
        cfg.out.display()
    );
    Ok(())
}

/// Per-site, per-variable summary files: posterior mean and the alpha/2,
/// 1 - alpha/2 predictive quantiles at each time.
fn write_summaries(
    cfg: &RunConfig,
    ungauged_ids: &[String],
    draws: &PredictiveDraws,
) -> Result<()> {
    let t_len = draws.y_stars[0].len();
    let q = draws.y_stars[0][0].ncols();
    for (site, id) in ungauged_ids.iter().enumerate() {
        for var in 0..q {
            let mut text = String::from("t,mean,lower,upper\n");
            for t in 0..t_len {
                let mut chain = draws.cell_chain(site, var, t);
                let mean = chain.iter().sum::<f64>() / chain.len() as f64;
                chain.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let lower = metrics::quantile_sorted(&chain, cfg.alpha / 2.0);
                let upper = metrics::quantile_sorted(&chain, 1.0 - cfg.alpha / 2.0);
                writeln!(
                    text,
                    "{},{},{},{}",
                    t + 1,
                    io::format_float(mean),
                    io::format_float(lower),
                    io::format_float(upper)
                )
                .unwrap();
            }
            io::write_file(
                &cfg.out
                    .join("summaries")
                    .join(format!("{id}_var{}.csv", var + 1)),
                &text,
            )?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

fn compare(cfg: &RunConfig, archives: &[PathBuf]) -> Result<()> {
    if archives.is_empty() {
        return Err(Error::Config(
            "compare needs at least one --archives entry".into(),
        ));
    }

    let mut labels = Vec::new();
    let mut dics = Vec::new();
    let mut pmses: Vec<Option<f64>> = Vec::new();
    let mut is_tables: Vec<Option<Vec<Vec<Option<f64>>>>> = Vec::new();
    let mut ungauged_ids: Vec<String> = Vec::new();

    for archive in archives {
        let (spec, inputs, manifest, posterior) = load_archive_with_spec(cfg, archive)?;
        let dic = metrics::dic(&spec, &inputs.data, &posterior)?;
        labels.push(manifest.variant.to_string());
        dics.push(dic);

        let scored = if cfg.truth.is_some() && inputs.stations.ungauged.is_some() {
            let ungauged = load_ungauged(cfg, &inputs.stations)?;
            let truth = load_truth(cfg, &inputs.stations)?;
            let draws = run_interpolation(
                &spec,
                &inputs.data,
                &ungauged,
                &posterior,
                manifest.seed ^ INTERP_SEED_SALT,
            )?;
            let pmse = metrics::pmse(&draws, &truth)?;
            let is_table = metrics::aggregate_interval_scores(&draws, &truth, cfg.alpha)?;
            ungauged_ids = inputs.stations.ungauged_ids.clone();
            Some((pmse, is_table))
        } else {
            None
        };
        match scored {
            Some((p, table)) => {
                pmses.push(Some(p));
                is_tables.push(Some(table));
            }
            None => {
                pmses.push(None);
                is_tables.push(None);
            }
        }
    }

    let mut table = String::new();
    let mut records = String::new();
    write!(table, "{:<24}", "metric").unwrap();
    for label in &labels {
        write!(table, "{label:>14}").unwrap();
    }
    table.push('\n');

    write!(table, "{:<24}", "DIC").unwrap();
    for (dic, label) in dics.iter().zip(&labels) {
        write!(table, "{:>14.1}", dic.dic).unwrap();
        writeln!(
            records,
            "metric=dic model={label} site=- var=- value={}",
            io::format_float(dic.dic)
        )
        .unwrap();
    }
    table.push('\n');
    write!(table, "{:<24}", "pD").unwrap();
    for (dic, label) in dics.iter().zip(&labels) {
        write!(table, "{:>14.1}", dic.effective_params).unwrap();
        writeln!(
            records,
            "metric=p_d model={label} site=- var=- value={}",
            io::format_float(dic.effective_params)
        )
        .unwrap();
    }
    table.push('\n');

    if pmses.iter().any(|p| p.is_some()) {
        write!(table, "{:<24}", "PMSE").unwrap();
        for (p, label) in pmses.iter().zip(&labels) {
            match p {
                Some(v) => {
                    write!(table, "{v:>14.4}").unwrap();
                    writeln!(
                        records,
                        "metric=pmse model={label} site=- var=- value={}",
                        io::format_float(*v)
                    )
                    .unwrap();
                }
                None => write!(table, "{:>14}", "-").unwrap(),
            }
        }
        table.push('\n');

        if let Some(first) = is_tables.iter().flatten().next() {
            let n_star = first.len();
            let q = first[0].len();
            for site in 0..n_star {
                for var in 0..q {
                    let id = ungauged_ids
                        .get(site)
                        .cloned()
                        .unwrap_or_else(|| format!("u{}", site + 1));
                    write!(table, "{:<24}", format!("IS {id} var {}", var + 1)).unwrap();
                    for (t_opt, label) in is_tables.iter().zip(&labels) {
                        match t_opt.as_ref().and_then(|t| t[site][var]) {
                            Some(v) => {
                                write!(table, "{v:>14.4}").unwrap();
                                writeln!(
                                    records,
                                    "metric=is model={label} site={id} var={} value={}",
                                    var + 1,
                                    io::format_float(v)
                                )
                                .unwrap();
                            }
                            None => {
                                write!(table, "{:>14}", "undef").unwrap();
                                writeln!(
                                    records,
                                    "metric=is model={label} site={id} var={} value=undefined",
                                    var + 1
                                )
                                .unwrap();
                            }
                        }
                    }
                    table.push('\n');
                }
            }
        }
    }

    io::write_file(&cfg.out.join("compare.txt"), &table)?;
    io::write_file(&cfg.out.join("compare.kv"), &records)?;
    print!("{table}");
    Ok(())
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------

fn diagnose(cfg: &RunConfig, archive: &Path) -> Result<()> {
    let (spec, _inputs, _manifest, posterior) = load_archive_with_spec(cfg, archive)?;
    let level = 1.0 - cfg.alpha;

    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    rows.push(("phi".to_string(), posterior.scalar_chain(|s| s.phi)));
    for i in 0..spec.q {
        for j in i..spec.q {
            if i != j && !spec.variant.correlated_responses() {
                continue;
            }
            rows.push((
                format!("V*Sigma_{}_{}", i + 1, j + 1),
                posterior.scalar_chain(|s| s.v * s.sigma.matrix()[(i, j)]),
            ));
        }
    }

    let mut table = format!(
        "{:<16}{:>12}{:>14}{:>14}{:>10}\n",
        "parameter", "mean", "hpd_lower", "hpd_upper", "geweke"
    );
    for (name, chain) in &rows {
        let hpd = metrics::hpd_interval(chain, level)?;
        // short or degenerate chains report an undefined statistic
        let gs = metrics::geweke_default(chain).ok().flatten();
        let gs_text = match gs {
            Some(z) => format!("{z:>10.3}"),
            None => format!("{:>10}", "undef"),
        };
        writeln!(
            table,
            "{name:<16}{:>12.4}{:>14.4}{:>14.4}{gs_text}",
            hpd.mean, hpd.lower, hpd.upper
        )
        .unwrap();
    }
    io::write_file(&cfg.out.join("diagnose.txt"), &table)?;
    print!("{table}");
    Ok(())
}
