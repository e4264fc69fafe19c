//! File formats and the posterior archive.
//!
//! All numeric output uses the shortest decimal that round-trips to the same
//! f64, with the literal token `NA` for missing values, so every emitted file
//! can be re-read losslessly and reruns are byte-identical.

use std::collections::HashMap;
use std::fmt::Write as FmtWrite;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::data::ObservedDataset;
use crate::error::{Error, Result};
use crate::interp::PredictiveDraws;
use crate::linalg::PosDefMatrix;
use crate::model::{ModelSpec, ParameterState, Variant};
use crate::sampler::PosteriorSample;
use crate::spatial::{Deformation, SiteSet};

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NA".to_string()
    } else {
        format!("{x}")
    }
}

fn parse_float(s: &str, context: &str) -> Result<f64> {
    let t = s.trim();
    if t == "NA" || t.is_empty() {
        return Ok(f64::NAN);
    }
    t.parse::<f64>()
        .map_err(|_| Error::Data(format!("{context}: cannot parse '{t}' as a number")))
}

fn parse_index(s: &str, context: &str) -> Result<usize> {
    s.trim().parse::<usize>().map_err(|_| {
        Error::Data(format!(
            "{context}: cannot parse '{}' as an index",
            s.trim()
        ))
    })
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path.display().to_string(), e))
}

// ---------------------------------------------------------------------------
// Station file
// ---------------------------------------------------------------------------

/// Parsed station file: gauged sites in file order (first two are anchors
/// unless overridden) and any ungauged rows marked by a `role` column.
#[derive(Debug, Clone)]
pub struct StationFile {
    pub gauged_ids: Vec<String>,
    pub gauged: SiteSet,
    pub ungauged_ids: Vec<String>,
    pub ungauged: Option<DMatrix<f64>>,
}

/// Parse `id,lon,lat[,role]` with role in {gauged, ungauged}.
pub fn parse_station_file(path: &Path, anchors: Option<[usize; 2]>) -> Result<StationFile> {
    let text = read_to_string(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Data(format!("{}: empty station file", path.display())))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "id" || cols[1] != "lon" || cols[2] != "lat" {
        return Err(Error::Data(format!(
            "{}: station header must be 'id,lon,lat[,role]', got '{header}'",
            path.display()
        )));
    }
    let has_role = cols.len() > 3 && cols[3] == "role";

    let mut seen = HashMap::new();
    let mut gauged_ids = Vec::new();
    let mut gauged_coords: Vec<[f64; 2]> = Vec::new();
    let mut ungauged_ids = Vec::new();
    let mut ungauged_coords: Vec<[f64; 2]> = Vec::new();

    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 3 {
            return Err(Error::Data(format!(
                "{}:{}: expected at least 3 fields",
                path.display(),
                lineno + 1
            )));
        }
        let id = fields[0].to_string();
        if seen.insert(id.clone(), lineno).is_some() {
            return Err(Error::Data(format!(
                "{}:{}: duplicate station id '{id}'",
                path.display(),
                lineno + 1
            )));
        }
        let ctx = format!("{}:{}", path.display(), lineno + 1);
        let lon = parse_float(fields[1], &ctx)?;
        let lat = parse_float(fields[2], &ctx)?;
        if lon.is_nan() || lat.is_nan() {
            return Err(Error::Data(format!(
                "{ctx}: station coordinates must be numeric"
            )));
        }
        let role = if has_role && fields.len() > 3 {
            fields[3]
        } else {
            "gauged"
        };
        match role {
            "gauged" | "" => {
                gauged_ids.push(id);
                gauged_coords.push([lon, lat]);
            }
            "ungauged" => {
                ungauged_ids.push(id);
                ungauged_coords.push([lon, lat]);
            }
            other => {
                return Err(Error::Data(format!(
                    "{ctx}: unknown role '{other}' (expected gauged or ungauged)"
                )));
            }
        }
    }

    if gauged_coords.len() < 3 {
        return Err(Error::Data(format!(
            "{}: need at least 3 gauged stations, got {}",
            path.display(),
            gauged_coords.len()
        )));
    }

    let mut coords = DMatrix::zeros(2, gauged_coords.len());
    for (j, c) in gauged_coords.iter().enumerate() {
        coords[(0, j)] = c[0];
        coords[(1, j)] = c[1];
    }
    let gauged = SiteSet::new(coords, anchors.unwrap_or([0, 1]))?;

    let ungauged = if ungauged_coords.is_empty() {
        None
    } else {
        let mut m = DMatrix::zeros(2, ungauged_coords.len());
        for (j, c) in ungauged_coords.iter().enumerate() {
            m[(0, j)] = c[0];
            m[(1, j)] = c[1];
        }
        Some(m)
    };

    Ok(StationFile {
        gauged_ids,
        gauged,
        ungauged_ids,
        ungauged,
    })
}

pub fn write_station_file(
    path: &Path,
    gauged_ids: &[String],
    gauged: &SiteSet,
    ungauged_ids: &[String],
    ungauged: Option<&DMatrix<f64>>,
) -> Result<()> {
    let mut out = String::from("id,lon,lat,role\n");
    for (j, id) in gauged_ids.iter().enumerate() {
        writeln!(
            out,
            "{id},{},{},gauged",
            format_float(gauged.coords()[(0, j)]),
            format_float(gauged.coords()[(1, j)])
        )
        .unwrap();
    }
    if let Some(u) = ungauged {
        for (j, id) in ungauged_ids.iter().enumerate() {
            writeln!(
                out,
                "{id},{},{},ungauged",
                format_float(u[(0, j)]),
                format_float(u[(1, j)])
            )
            .unwrap();
        }
    }
    write_file(path, &out)
}

// ---------------------------------------------------------------------------
// Response and covariate files (long format)
// ---------------------------------------------------------------------------

/// Parse long-format responses `t,site_id,var,value` into T dense N x q
/// matrices with NaN at missing cells. Cells absent from the file count as
/// missing; duplicate cells are an error.
pub fn parse_response_matrices(
    path: &Path,
    ids: &[String],
    q: usize,
    t_len: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let text = read_to_string(path)?;
    let id_index: HashMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(j, s)| (s.as_str(), j))
        .collect();
    let n = ids.len();
    let mut mats = vec![DMatrix::from_element(n, q, f64::NAN); t_len];
    let mut filled = vec![vec![false; n * q]; t_len];

    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Data(format!("{}: empty response file", path.display())))?;
    let expect = ["t", "site_id", "var", "value"];
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != expect {
        return Err(Error::Data(format!(
            "{}: response header must be 't,site_id,var,value', got '{header}'",
            path.display()
        )));
    }

    for (lineno, line) in lines {
        let ctx = format!("{}:{}", path.display(), lineno + 1);
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Data(format!("{ctx}: expected 4 fields")));
        }
        let t = parse_index(fields[0], &ctx)?;
        if t == 0 || t > t_len {
            return Err(Error::Data(format!("{ctx}: time {t} outside 1..={t_len}")));
        }
        let site = *id_index
            .get(fields[1])
            .ok_or_else(|| Error::Data(format!("{ctx}: unknown site id '{}'", fields[1])))?;
        let var = parse_index(fields[2], &ctx)?;
        if var == 0 || var > q {
            return Err(Error::Data(format!(
                "{ctx}: variable {var} outside 1..={q}"
            )));
        }
        if filled[t - 1][(var - 1) * n + site] {
            return Err(Error::Data(format!(
                "{ctx}: duplicate cell (t={t}, site {}, var {var})",
                fields[1]
            )));
        }
        filled[t - 1][(var - 1) * n + site] = true;
        mats[t - 1][(site, var - 1)] = parse_float(fields[3], &ctx)?;
    }
    Ok(mats)
}

pub fn parse_response_file(
    path: &Path,
    sites: SiteSet,
    ids: &[String],
    q: usize,
    t_len: usize,
) -> Result<ObservedDataset> {
    let mats = parse_response_matrices(path, ids, q, t_len)?;
    ObservedDataset::from_matrices(sites, q, &mats)
}

pub fn write_response_file(path: &Path, ids: &[String], mats: &[DMatrix<f64>]) -> Result<()> {
    let mut out = String::from("t,site_id,var,value\n");
    for (t, m) in mats.iter().enumerate() {
        for var in 0..m.ncols() {
            for site in 0..m.nrows() {
                writeln!(
                    out,
                    "{},{},{},{}",
                    t + 1,
                    ids[site],
                    var + 1,
                    format_float(m[(site, var)])
                )
                .unwrap();
            }
        }
    }
    write_file(path, &out)
}

/// Parse long-format covariates `t,site_id,col,value` into T dense N x p
/// matrices. Every cell must be present and numeric.
pub fn parse_covariate_file(
    path: &Path,
    ids: &[String],
    p: usize,
    t_len: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let text = read_to_string(path)?;
    let id_index: HashMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(j, s)| (s.as_str(), j))
        .collect();
    let n = ids.len();
    let mut mats = vec![DMatrix::from_element(n, p, f64::NAN); t_len];

    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Data(format!("{}: empty covariate file", path.display())))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["t", "site_id", "col", "value"] {
        return Err(Error::Data(format!(
            "{}: covariate header must be 't,site_id,col,value', got '{header}'",
            path.display()
        )));
    }
    for (lineno, line) in lines {
        let ctx = format!("{}:{}", path.display(), lineno + 1);
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Data(format!("{ctx}: expected 4 fields")));
        }
        let t = parse_index(fields[0], &ctx)?;
        if t == 0 || t > t_len {
            return Err(Error::Data(format!("{ctx}: time {t} outside 1..={t_len}")));
        }
        let site = *id_index
            .get(fields[1])
            .ok_or_else(|| Error::Data(format!("{ctx}: unknown site id '{}'", fields[1])))?;
        let col = parse_index(fields[2], &ctx)?;
        if col == 0 || col > p {
            return Err(Error::Data(format!("{ctx}: column {col} outside 1..={p}")));
        }
        let value = parse_float(fields[3], &ctx)?;
        if value.is_nan() {
            return Err(Error::Data(format!("{ctx}: covariates cannot be NA")));
        }
        mats[t - 1][(site, col - 1)] = value;
    }
    for (t, m) in mats.iter().enumerate() {
        if m.iter().any(|x| x.is_nan()) {
            return Err(Error::Data(format!(
                "{}: covariate matrix at time {} has unset cells",
                path.display(),
                t + 1
            )));
        }
    }
    Ok(mats)
}

pub fn write_covariate_file(path: &Path, ids: &[String], mats: &[DMatrix<f64>]) -> Result<()> {
    let mut out = String::from("t,site_id,col,value\n");
    for (t, m) in mats.iter().enumerate() {
        for col in 0..m.ncols() {
            for site in 0..m.nrows() {
                writeln!(
                    out,
                    "{},{},{},{}",
                    t + 1,
                    ids[site],
                    col + 1,
                    format_float(m[(site, col)])
                )
                .unwrap();
            }
        }
    }
    write_file(path, &out)
}

// ---------------------------------------------------------------------------
// Posterior archive
// ---------------------------------------------------------------------------

/// Hash of everything that defines a fit, to guard against mixing archives
/// across model specifications.
pub fn spec_hash(spec: &ModelSpec) -> String {
    let mut h = Sha256::new();
    let mut text = String::new();
    write!(
        text,
        "variant={};n={};q={};p={};t={};a_v={};b_v={};a_sigma={};rate={};tau={};psi={}",
        spec.variant,
        spec.n,
        spec.q,
        spec.p,
        spec.t_len,
        format_float(spec.priors.a_v),
        format_float(spec.priors.b_v),
        format_float(spec.priors.a_sigma),
        format_float(spec.priors.phi_prior_rate),
        format_float(spec.deform_prior.tau),
        format_float(spec.deform_prior.psi),
    )
    .unwrap();
    for x in spec.sites.coords().iter() {
        write!(text, ",{}", format_float(*x)).unwrap();
    }
    for x in spec
        .w
        .matrix()
        .iter()
        .chain(spec.c0.matrix().iter())
        .chain(spec.m0.iter())
    {
        write!(text, ",{}", format_float(*x)).unwrap();
    }
    for x in spec.priors.b_sigma.matrix().iter() {
        write!(text, ",{}", format_float(*x)).unwrap();
    }
    for x in spec
        .priors
        .a_sigma_diag
        .iter()
        .chain(spec.priors.b_sigma_diag.iter())
    {
        write!(text, ",{}", format_float(*x)).unwrap();
    }
    h.update(text.as_bytes());
    let digest = h.finalize();
    digest.iter().fold(String::new(), |mut acc, b| {
        write!(acc, "{b:02x}").unwrap();
        acc
    })
}

#[derive(Debug, Clone)]
pub struct ArchiveManifest {
    pub spec_hash: String,
    pub variant: Variant,
    pub n: usize,
    pub q: usize,
    pub p: usize,
    pub t_len: usize,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub retained: usize,
}

fn manifest_to_string(m: &ArchiveManifest) -> String {
    format!(
        "format_version=1\nspec_hash={}\nvariant={}\nn={}\nq={}\np={}\nt_len={}\nseed={}\niterations={}\nburn_in={}\nthin={}\nretained={}\n",
        m.spec_hash, m.variant, m.n, m.q, m.p, m.t_len, m.seed, m.iterations, m.burn_in, m.thin, m.retained
    )
}

fn parse_key_values(text: &str) -> HashMap<String, String> {
    let mut out = HashMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            out.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    out
}

/// Write the posterior sample as a directory of columnar text files.
pub fn save_archive(
    dir: &Path,
    spec: &ModelSpec,
    config: &crate::sampler::ChainConfig,
    posterior: &PosteriorSample,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let manifest = ArchiveManifest {
        spec_hash: spec_hash(spec),
        variant: spec.variant,
        n: spec.n,
        q: spec.q,
        p: spec.p,
        t_len: spec.t_len,
        seed: config.seed,
        iterations: config.iterations,
        burn_in: config.burn_in,
        thin: config.thin,
        retained: config.retained,
    };
    write_file(&dir.join("manifest.txt"), &manifest_to_string(&manifest))?;

    let mut scalars = String::from("k,iter,v,phi");
    for i in 0..spec.q {
        for j in 0..spec.q {
            write!(scalars, ",sigma_{}_{}", i + 1, j + 1).unwrap();
        }
    }
    scalars.push('\n');
    for (k, state) in posterior.states.iter().enumerate() {
        write!(
            scalars,
            "{},{},{},{}",
            k + 1,
            posterior.indices[k],
            format_float(state.v),
            format_float(state.phi)
        )
        .unwrap();
        for i in 0..spec.q {
            for j in 0..spec.q {
                write!(scalars, ",{}", format_float(state.sigma.matrix()[(i, j)])).unwrap();
            }
        }
        scalars.push('\n');
    }
    write_file(&dir.join("scalars.csv"), &scalars)?;

    let mut betas = String::from("k,t,row,col,value\n");
    for (k, state) in posterior.states.iter().enumerate() {
        for (t, b) in state.betas.iter().enumerate() {
            for col in 0..spec.q {
                for row in 0..spec.p {
                    writeln!(
                        betas,
                        "{},{},{},{},{}",
                        k + 1,
                        t,
                        row + 1,
                        col + 1,
                        format_float(b[(row, col)])
                    )
                    .unwrap();
                }
            }
        }
    }
    write_file(&dir.join("betas.csv"), &betas)?;

    if spec.variant.has_deformation() {
        let mut deform = String::from("k,axis,site,value\n");
        for (k, state) in posterior.states.iter().enumerate() {
            for site in 0..spec.n {
                for axis in 0..2 {
                    writeln!(
                        deform,
                        "{},{},{},{}",
                        k + 1,
                        axis + 1,
                        site + 1,
                        format_float(state.deform.coords()[(axis, site)])
                    )
                    .unwrap();
                }
            }
        }
        write_file(&dir.join("deform.csv"), &deform)?;
    }

    let mut imputed = String::from("k,t,slot,value\n");
    for (k, state) in posterior.states.iter().enumerate() {
        for (t, vals) in state.imputed.iter().enumerate() {
            for (slot, v) in vals.iter().enumerate() {
                writeln!(
                    imputed,
                    "{},{},{},{}",
                    k + 1,
                    t + 1,
                    slot + 1,
                    format_float(*v)
                )
                .unwrap();
            }
        }
    }
    write_file(&dir.join("imputed.csv"), &imputed)?;
    Ok(())
}

/// Read just the manifest of an archive directory.
pub fn read_manifest(dir: &Path) -> Result<ArchiveManifest> {
    let manifest_text = read_to_string(&dir.join("manifest.txt"))?;
    let kv = parse_key_values(&manifest_text);
    let get = |key: &str| -> Result<String> {
        kv.get(key)
            .cloned()
            .ok_or_else(|| Error::Data(format!("{}: manifest is missing '{key}'", dir.display())))
    };
    Ok(ArchiveManifest {
        spec_hash: get("spec_hash")?,
        variant: get("variant")?.parse()?,
        n: parse_index(&get("n")?, "manifest n")?,
        q: parse_index(&get("q")?, "manifest q")?,
        p: parse_index(&get("p")?, "manifest p")?,
        t_len: parse_index(&get("t_len")?, "manifest t_len")?,
        seed: get("seed")?
            .parse::<u64>()
            .map_err(|_| Error::Data("manifest seed is not an integer".into()))?,
        iterations: parse_index(&get("iterations")?, "manifest iterations")?,
        burn_in: parse_index(&get("burn_in")?, "manifest burn_in")?,
        thin: parse_index(&get("thin")?, "manifest thin")?,
        retained: parse_index(&get("retained")?, "manifest retained")?,
    })
}

/// Reload an archive written by [`save_archive`]. The spec hash must match.
pub fn load_archive(
    dir: &Path,
    spec: &ModelSpec,
    data: &ObservedDataset,
) -> Result<(ArchiveManifest, PosteriorSample)> {
    let manifest = read_manifest(dir)?;
    let expect_hash = spec_hash(spec);
    if manifest.spec_hash != expect_hash {
        return Err(Error::Data(format!(
            "{}: archive was produced under a different model specification",
            dir.display()
        )));
    }

    let k_total = manifest.retained;
    let mut states: Vec<ParameterState> = Vec::with_capacity(k_total);
    let mut indices = vec![0usize; k_total];
    for _ in 0..k_total {
        states.push(ParameterState {
            betas: vec![DMatrix::zeros(spec.p, spec.q); spec.t_len + 1],
            v: 0.0,
            sigma: PosDefMatrix::identity(spec.q),
            phi: 0.0,
            deform: Deformation::identity(&spec.sites),
            imputed: (0..spec.t_len)
                .map(|t| vec![0.0; data.layout(t).n_mis()])
                .collect(),
        });
    }

    // scalars
    let scalars = read_to_string(&dir.join("scalars.csv"))?;
    let mut rows = 0usize;
    for line in scalars.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 + spec.q * spec.q {
            return Err(Error::Data(format!(
                "{}: scalars row has {} fields",
                dir.display(),
                f.len()
            )));
        }
        let k = parse_index(f[0], "scalars k")? - 1;
        if k >= k_total {
            return Err(Error::Data("scalars row index out of range".into()));
        }
        indices[k] = parse_index(f[1], "scalars iter")?;
        states[k].v = parse_float(f[2], "scalars v")?;
        states[k].phi = parse_float(f[3], "scalars phi")?;
        let mut sig = DMatrix::zeros(spec.q, spec.q);
        for i in 0..spec.q {
            for j in 0..spec.q {
                sig[(i, j)] = parse_float(f[4 + i * spec.q + j], "scalars sigma")?;
            }
        }
        states[k].sigma = PosDefMatrix::new(sig)?;
        rows += 1;
    }
    if rows != k_total {
        return Err(Error::Data(format!(
            "{}: scalars has {rows} rows, manifest says {k_total}",
            dir.display()
        )));
    }

    // betas
    let betas = read_to_string(&dir.join("betas.csv"))?;
    for line in betas.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(Error::Data("betas row must have 5 fields".into()));
        }
        let k = parse_index(f[0], "betas k")? - 1;
        let t = parse_index(f[1], "betas t")?;
        let row = parse_index(f[2], "betas row")? - 1;
        let col = parse_index(f[3], "betas col")? - 1;
        if k >= k_total || t > spec.t_len || row >= spec.p || col >= spec.q {
            return Err(Error::Data("betas row out of range".into()));
        }
        states[k].betas[t][(row, col)] = parse_float(f[4], "betas value")?;
    }

    // deformation
    let deform_path = dir.join("deform.csv");
    if spec.variant.has_deformation() {
        let deform = read_to_string(&deform_path)?;
        for line in deform.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::Data("deform row must have 4 fields".into()));
            }
            let k = parse_index(f[0], "deform k")? - 1;
            let axis = parse_index(f[1], "deform axis")? - 1;
            let site = parse_index(f[2], "deform site")? - 1;
            if k >= k_total || axis >= 2 || site >= spec.n {
                return Err(Error::Data("deform row out of range".into()));
            }
            let value = parse_float(f[3], "deform value")?;
            states[k].deform.set_coord(axis, site, value);
        }
    }

    // imputations
    let imputed = read_to_string(&dir.join("imputed.csv"))?;
    for line in imputed.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(Error::Data("imputed row must have 4 fields".into()));
        }
        let k = parse_index(f[0], "imputed k")? - 1;
        let t = parse_index(f[1], "imputed t")? - 1;
        let slot = parse_index(f[2], "imputed slot")? - 1;
        if k >= k_total || t >= spec.t_len || slot >= states[k].imputed[t].len() {
            return Err(Error::Data("imputed row out of range".into()));
        }
        states[k].imputed[t][slot] = parse_float(f[3], "imputed value")?;
    }

    Ok((manifest, PosteriorSample { indices, states }))
}

// ---------------------------------------------------------------------------
// Predictive draws
// ---------------------------------------------------------------------------

pub fn save_predictive(dir: &Path, draws: &PredictiveDraws) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut y = String::from("k,t,site,var,value\n");
    for (k, per_t) in draws.y_stars.iter().enumerate() {
        for (t, m) in per_t.iter().enumerate() {
            for var in 0..m.ncols() {
                for site in 0..m.nrows() {
                    writeln!(
                        y,
                        "{},{},{},{},{}",
                        k + 1,
                        t + 1,
                        site + 1,
                        var + 1,
                        format_float(m[(site, var)])
                    )
                    .unwrap();
                }
            }
        }
    }
    write_file(&dir.join("predictive.csv"), &y)?;

    let mut d = String::from("k,axis,site,value\n");
    for (k, m) in draws.d_stars.iter().enumerate() {
        for site in 0..m.ncols() {
            for axis in 0..2 {
                writeln!(
                    d,
                    "{},{},{},{}",
                    k + 1,
                    axis + 1,
                    site + 1,
                    format_float(m[(axis, site)])
                )
                .unwrap();
            }
        }
    }
    write_file(&dir.join("dstar.csv"), &d)
}

pub fn load_predictive(
    dir: &Path,
    n_star: usize,
    q: usize,
    t_len: usize,
) -> Result<PredictiveDraws> {
    let y_text = read_to_string(&dir.join("predictive.csv"))?;
    let mut y_stars: Vec<Vec<DMatrix<f64>>> = Vec::new();
    for line in y_text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(Error::Data("predictive row must have 5 fields".into()));
        }
        let k = parse_index(f[0], "predictive k")?;
        let t = parse_index(f[1], "predictive t")? - 1;
        let site = parse_index(f[2], "predictive site")? - 1;
        let var = parse_index(f[3], "predictive var")? - 1;
        while y_stars.len() < k {
            y_stars.push(vec![DMatrix::zeros(n_star, q); t_len]);
        }
        if t >= t_len || site >= n_star || var >= q {
            return Err(Error::Data("predictive row out of range".into()));
        }
        y_stars[k - 1][t][(site, var)] = parse_float(f[4], "predictive value")?;
    }

    let d_text = read_to_string(&dir.join("dstar.csv"))?;
    let mut d_stars: Vec<DMatrix<f64>> = Vec::new();
    for line in d_text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(Error::Data("dstar row must have 4 fields".into()));
        }
        let k = parse_index(f[0], "dstar k")?;
        let axis = parse_index(f[1], "dstar axis")? - 1;
        let site = parse_index(f[2], "dstar site")? - 1;
        while d_stars.len() < k {
            d_stars.push(DMatrix::zeros(2, n_star));
        }
        if axis >= 2 || site >= n_star {
            return Err(Error::Data("dstar row out of range".into()));
        }
        d_stars[k - 1][(axis, site)] = parse_float(f[3], "dstar value")?;
    }
    Ok(PredictiveDraws { d_stars, y_stars })
}
