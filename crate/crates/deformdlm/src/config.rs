//! Flat key=value run configuration with section prefixes
//! (`model.variant=M4`, `chain.iterations=20000`, ...). Every hyperparameter
//! has a named key; defaults follow the standard simulation setup.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::Variant;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DEFORMDLM_OUT";

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub stations: Option<PathBuf>,
    pub responses: Option<PathBuf>,
    pub covariates: Option<PathBuf>,
    pub ungauged_covariates: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub out: PathBuf,

    pub variant: Variant,
    pub t_len: usize,
    pub q: usize,
    pub p: usize,
    /// W = w_scale / T * C0 unless `w_identity` is set.
    pub w_scale: f64,
    pub w_identity: bool,
    pub c0_scale: f64,
    pub anchors: Option<[usize; 2]>,

    pub a_v: f64,
    pub b_v: f64,
    pub a_sigma: f64,
    pub b_sigma_scale: f64,
    pub a_sigma_diag: f64,
    pub b_sigma_diag: f64,
    pub tau: f64,
    pub psi: f64,

    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,

    pub sim_t: usize,
    pub sim_gamma: f64,
    pub sim_seed: u64,

    pub alpha: f64,

    pub mh_log_step: f64,
    pub mh_target_accept: f64,
    pub slice_width: f64,
    pub slice_max_step_outs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            stations: None,
            responses: None,
            covariates: None,
            ungauged_covariates: None,
            truth: None,
            out: default_out_dir(),
            variant: Variant::M4,
            t_len: 100,
            q: 2,
            p: 1,
            w_scale: 0.05,
            w_identity: false,
            c0_scale: 1.0,
            anchors: None,
            a_v: 0.001,
            b_v: 0.001,
            a_sigma: 0.001,
            b_sigma_scale: 0.001,
            a_sigma_diag: 0.001,
            b_sigma_diag: 0.001,
            tau: 1.0,
            psi: 10.0,
            iterations: 20_000,
            burn_in: 5_000,
            thin: 15,
            seed: 1,
            sim_t: 100,
            sim_gamma: 0.15,
            sim_seed: 1,
            alpha: 0.05,
            mh_log_step: 0.3,
            mh_target_accept: 0.44,
            slice_width: 1.0,
            slice_max_step_outs: 50,
        }
    }
}

pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        Self::from_str_contents(&text, path)
    }

    pub fn from_str_contents(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected key=value, got '{line}'",
                    origin.display(),
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            let value = value.trim();
            if seen.insert(key.to_string(), lineno).is_some() {
                return Err(Error::Config(format!(
                    "{}:{}: duplicate key '{key}'",
                    origin.display(),
                    lineno + 1
                )));
            }
            cfg.apply(key, value)
                .map_err(|e| Error::Config(format!("{}:{}: {e}", origin.display(), lineno + 1)))?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        fn f(value: &str) -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("'{value}' is not a number")))
        }
        fn u(value: &str) -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("'{value}' is not a non-negative integer")))
        }
        match key {
            "paths.stations" => self.stations = Some(PathBuf::from(value)),
            "paths.responses" => self.responses = Some(PathBuf::from(value)),
            "paths.covariates" => self.covariates = Some(PathBuf::from(value)),
            "paths.ungauged_covariates" => self.ungauged_covariates = Some(PathBuf::from(value)),
            "paths.truth" => self.truth = Some(PathBuf::from(value)),
            "paths.out" => self.out = PathBuf::from(value),
            "model.variant" => self.variant = value.parse()?,
            "model.t" => self.t_len = u(value)?,
            "model.q" => self.q = u(value)?,
            "model.p" => self.p = u(value)?,
            "model.w_scale" => self.w_scale = f(value)?,
            "model.w_identity" => self.w_identity = parse_bool(value)?,
            "model.c0_scale" => self.c0_scale = f(value)?,
            "model.anchors" => {
                let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                if parts.len() != 2 {
                    return Err(Error::Config(format!(
                        "anchors must be two comma-separated 1-based indices, got '{value}'"
                    )));
                }
                let a = u(parts[0])?;
                let b = u(parts[1])?;
                if a == 0 || b == 0 {
                    return Err(Error::Config("anchor indices are 1-based".into()));
                }
                self.anchors = Some([a - 1, b - 1]);
            }
            "prior.a_v" => self.a_v = f(value)?,
            "prior.b_v" => self.b_v = f(value)?,
            "prior.a_sigma" => self.a_sigma = f(value)?,
            "prior.b_sigma_scale" => self.b_sigma_scale = f(value)?,
            "prior.a_sigma_diag" => self.a_sigma_diag = f(value)?,
            "prior.b_sigma_diag" => self.b_sigma_diag = f(value)?,
            "prior.tau" => self.tau = f(value)?,
            "prior.psi" => self.psi = f(value)?,
            "chain.iterations" => self.iterations = u(value)?,
            "chain.burn_in" => self.burn_in = u(value)?,
            "chain.thin" => self.thin = u(value)?,
            "chain.seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| Error::Config(format!("'{value}' is not a seed")))?
            }
            "sim.t" => self.sim_t = u(value)?,
            "sim.gamma" => self.sim_gamma = f(value)?,
            "sim.seed" => {
                self.sim_seed = value
                    .parse::<u64>()
                    .map_err(|_| Error::Config(format!("'{value}' is not a seed")))?
            }
            "metrics.alpha" => self.alpha = f(value)?,
            "tuning.mh_log_step" => self.mh_log_step = f(value)?,
            "tuning.mh_target_accept" => self.mh_target_accept = f(value)?,
            "tuning.slice_width" => self.slice_width = f(value)?,
            "tuning.slice_max_step_outs" => self.slice_max_step_outs = u(value)?,
            other => {
                return Err(Error::Config(format!("unknown key '{other}'")));
            }
        }
        Ok(())
    }

    pub fn tunings(&self) -> crate::sampler::Tunings {
        crate::sampler::Tunings {
            mh: crate::sampler::MhTuning {
                log_step: self.mh_log_step,
                target_accept: self.mh_target_accept,
                adapt_window: 50,
            },
            slice: crate::sampler::SliceTuning {
                initial_width: self.slice_width,
                max_step_outs: self.slice_max_step_outs,
            },
        }
    }

    pub fn chain_config(&self) -> Result<crate::sampler::ChainConfig> {
        crate::sampler::ChainConfig::new(self.iterations, self.burn_in, self.thin, self.seed)
    }

    pub fn require_stations(&self) -> Result<&Path> {
        self.stations
            .as_deref()
            .ok_or_else(|| Error::Config("paths.stations is required".into()))
    }

    pub fn require_responses(&self) -> Result<&Path> {
        self.responses
            .as_deref()
            .ok_or_else(|| Error::Config("paths.responses is required".into()))
    }
}

fn parse_bool(value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!("'{other}' is not a boolean"))),
    }
}
