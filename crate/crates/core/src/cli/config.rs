//! JSON run configuration shared by all subcommands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::fsio;

/// Every field is optional; a flag on the command line takes precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub latent_dim: Option<usize>,
    pub window_s: Option<f64>,
    pub stride_s: Option<f64>,
    pub kappa: Option<f64>,
    pub p_center: Option<f64>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub w_gp: Option<f64>,
    pub interval_s: Option<f64>,
    pub alpha_jp: Option<f64>,
    pub alpha_v: Option<f64>,
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = fsio::read(path)?;
        let cfg: RunConfig = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(0)
    }

    pub fn latent_dim(&self, flag: Option<usize>) -> Result<usize, CliError> {
        let p = flag.or(self.latent_dim).unwrap_or(64);
        check(p >= 2, "latent_dim", p)?;
        Ok(p)
    }

    pub fn window_s(&self, flag: Option<f64>) -> Result<f64, CliError> {
        positive("window_s", flag.or(self.window_s).unwrap_or(crate::motion::DEFAULT_WINDOW_S))
    }

    pub fn stride_s(&self, flag: Option<f64>) -> Result<f64, CliError> {
        positive("stride_s", flag.or(self.stride_s).unwrap_or(crate::motion::DEFAULT_STRIDE_S))
    }

    pub fn kappa(&self, flag: Option<f64>) -> Result<f64, CliError> {
        let k = flag.or(self.kappa).unwrap_or(crate::adversarial::DEFAULT_KAPPA);
        check(k >= 0.0 && k.is_finite(), "kappa", k)?;
        Ok(k)
    }

    pub fn p_center(&self, flag: Option<f64>) -> Result<f64, CliError> {
        let p = flag.or(self.p_center).unwrap_or(crate::adversarial::DEFAULT_P_CENTER);
        check((0.0..=1.0).contains(&p), "p_center", p)?;
        Ok(p)
    }

    pub fn epochs(&self, flag: Option<usize>) -> Result<usize, CliError> {
        let e = flag.or(self.epochs).unwrap_or(2000);
        check(e >= 1, "epochs", e)?;
        Ok(e)
    }

    pub fn lr(&self, flag: Option<f64>, default: f64) -> Result<f64, CliError> {
        positive("lr", flag.or(self.lr).unwrap_or(default))
    }

    pub fn w_gp(&self, flag: Option<f64>) -> Result<f64, CliError> {
        let w = flag.or(self.w_gp).unwrap_or(crate::adversarial::DEFAULT_W_GP);
        check(w >= 0.0 && w.is_finite(), "w_gp", w)?;
        Ok(w)
    }

    pub fn interval_s(&self, flag: Option<f64>) -> Result<f64, CliError> {
        positive("interval_s", flag.or(self.interval_s).unwrap_or(crate::progress::DEFAULT_INTERVAL_S))
    }

    pub fn alpha_jp(&self, flag: Option<f64>) -> Result<f64, CliError> {
        positive("alpha_jp", flag.or(self.alpha_jp).unwrap_or(crate::metrics::DEFAULT_ALPHA_JP))
    }

    pub fn alpha_v(&self, flag: Option<f64>) -> Result<f64, CliError> {
        positive("alpha_v", flag.or(self.alpha_v).unwrap_or(crate::metrics::DEFAULT_ALPHA_V))
    }

    pub fn manifest(&self, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        flag.or_else(|| self.manifest.clone())
            .ok_or_else(|| CliError::Usage("--manifest is required".into()))
    }

    pub fn out(&self, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        flag.or_else(|| self.out.clone())
            .ok_or_else(|| CliError::Usage("--out is required".into()))
    }
}

fn check<T: std::fmt::Display>(ok: bool, name: &str, value: T) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{name} out of range: {value}")))
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    check(v > 0.0 && v.is_finite(), name, v)?;
    Ok(v)
}
