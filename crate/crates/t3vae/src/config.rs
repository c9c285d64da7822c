//! Run configuration: one JSON document holding the model choice,
//! dimensions, and training hyperparameters. Unknown keys are rejected,
//! defaults are materialized on load, and `canonical_json` produces the
//! stable single-line form that checkpoints echo byte-for-byte.

use crate::data::{DatasetKind, SplitPreset};
use crate::error::{io_err, Error, Result};
use crate::hvae::{HierConfig, HierKind};
use crate::models::{ModelConfig, ModelKind};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// A model string names either a flat model or a hierarchical one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    Flat(ModelKind),
    Hier(HierKind),
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if let Ok(kind) = s.parse::<ModelKind>() {
            return Ok(ModelFamily::Flat(kind));
        }
        if let Ok(kind) = s.parse::<HierKind>() {
            return Ok(ModelFamily::Hier(kind));
        }
        Err(Error::Config(format!(
            "unknown model '{s}' (expected t3vae, gaussian_vae, beta_vae, t3hvae, or gaussian_hvae)"
        )))
    }
}

/// Where training data comes from: a built-in synthetic set or a CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    Builtin(DatasetKind),
    Csv(PathBuf),
}

impl DataSource {
    pub fn parse(s: &str) -> Result<DataSource> {
        if let Ok(kind) = s.parse::<DatasetKind>() {
            return Ok(DataSource::Builtin(kind));
        }
        if s.ends_with(".csv") {
            return Ok(DataSource::Csv(PathBuf::from(s)));
        }
        Err(Error::Config(format!(
            "dataset must be univariate, bivariate, or a .csv path, got '{s}'"
        )))
    }
}

fn default_hidden() -> Vec<usize> {
    vec![64, 64]
}
fn default_activation() -> String {
    "leaky_relu".into()
}
fn default_lr() -> f64 {
    1e-3
}
fn default_weight_decay() -> f64 {
    1e-4
}
fn default_batch_size() -> usize {
    128
}
fn default_max_epochs() -> usize {
    80
}
fn default_patience() -> usize {
    15
}
fn default_mc_samples() -> usize {
    1
}
fn default_split() -> String {
    "quick".into()
}

/// Everything one training run needs. Optional fields apply only to some
/// models (`nu` to the t kinds, `beta` to beta_vae, `m`/`sigma` to flat
/// models, `m1`/`m2`/`sigma_z`/`sigma_x` to hierarchical ones); setting a
/// field the chosen model does not read is a config error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m2: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_x: Option<f64>,
    #[serde(default = "default_hidden")]
    pub hidden_sizes: Vec<usize>,
    #[serde(default = "default_activation")]
    pub activation: String,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    pub seed: u64,
    pub dataset: String,
    #[serde(default = "default_split")]
    pub split: String,
}

fn require<T: Copy>(field: Option<T>, name: &str, model: &str) -> Result<T> {
    field.ok_or_else(|| Error::Config(format!("model '{model}' requires field '{name}'")))
}

fn forbid<T>(field: &Option<T>, name: &str, model: &str) -> Result<()> {
    if field.is_some() {
        return Err(Error::Config(format!(
            "field '{name}' does not apply to model '{model}'"
        )));
    }
    Ok(())
}

impl RunConfig {
    /// Parse and validate a JSON string.
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load and validate a JSON file.
    pub fn from_path(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        RunConfig::from_json(&text)
    }

    /// Stable single-line JSON with defaults materialized and unset
    /// optional fields omitted; two configs are interchangeable iff their
    /// canonical strings are equal.
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn family(&self) -> Result<ModelFamily> {
        self.model.parse()
    }

    pub fn data_source(&self) -> Result<DataSource> {
        DataSource::parse(&self.dataset)
    }

    pub fn split_preset(&self) -> Result<SplitPreset> {
        self.split.parse()
    }

    /// Full schema check: hyperparameter ranges, dataset/split names,
    /// dataset dimension agreement, and per-model field applicability.
    pub fn validate(&self) -> Result<()> {
        if self.activation != "leaky_relu" {
            return Err(Error::Config(format!(
                "unsupported activation '{}' (only leaky_relu)",
                self.activation
            )));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.weight_decay >= 0.0) || !self.weight_decay.is_finite() {
            return Err(Error::Config(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        for (name, v) in [
            ("batch_size", self.batch_size),
            ("max_epochs", self.max_epochs),
            ("mc_samples", self.mc_samples),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        let source = self.data_source()?;
        self.split_preset()?;
        if let DataSource::Builtin(kind) = source {
            if self.n != kind.dim() {
                return Err(Error::Config(format!(
                    "dataset '{}' has dimension {}, config says n = {}",
                    self.dataset,
                    kind.dim(),
                    self.n
                )));
            }
        }
        match self.family()? {
            ModelFamily::Flat(_) => self.model_config().map(drop),
            ModelFamily::Hier(_) => self.hier_config().map(drop),
        }
    }

    /// Assemble the flat-model config, checking field applicability.
    pub fn model_config(&self) -> Result<ModelConfig> {
        let ModelFamily::Flat(kind) = self.family()? else {
            return Err(Error::Contract(format!(
                "model '{}' is hierarchical; use hier_config",
                self.model
            )));
        };
        forbid(&self.m1, "m1", &self.model)?;
        forbid(&self.m2, "m2", &self.model)?;
        forbid(&self.sigma_z, "sigma_z", &self.model)?;
        forbid(&self.sigma_x, "sigma_x", &self.model)?;
        let m = require(self.m, "m", &self.model)?;
        let sigma = require(self.sigma, "sigma", &self.model)?;
        let nu = match kind {
            ModelKind::T3Vae => require(self.nu, "nu", &self.model)?,
            ModelKind::GaussianVae | ModelKind::BetaVae => {
                forbid(&self.nu, "nu", &self.model)?;
                f64::INFINITY
            }
        };
        let beta = match kind {
            ModelKind::BetaVae => require(self.beta, "beta", &self.model)?,
            ModelKind::T3Vae | ModelKind::GaussianVae => {
                forbid(&self.beta, "beta", &self.model)?;
                1.0
            }
        };
        let cfg = ModelConfig { kind, n: self.n, m, nu, sigma, beta };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Assemble the hierarchical-model config, checking field applicability.
    pub fn hier_config(&self) -> Result<HierConfig> {
        let ModelFamily::Hier(kind) = self.family()? else {
            return Err(Error::Contract(format!(
                "model '{}' is flat; use model_config",
                self.model
            )));
        };
        forbid(&self.m, "m", &self.model)?;
        forbid(&self.sigma, "sigma", &self.model)?;
        forbid(&self.beta, "beta", &self.model)?;
        let m1 = require(self.m1, "m1", &self.model)?;
        let m2 = require(self.m2, "m2", &self.model)?;
        let sigma_z = require(self.sigma_z, "sigma_z", &self.model)?;
        let sigma_x = require(self.sigma_x, "sigma_x", &self.model)?;
        let nu = match kind {
            HierKind::T3Hvae => require(self.nu, "nu", &self.model)?,
            HierKind::GaussianHvae => {
                forbid(&self.nu, "nu", &self.model)?;
                f64::INFINITY
            }
        };
        let cfg = HierConfig { kind, n: self.n, m1, m2, nu, sigma_z, sigma_x };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_t3vae() -> &'static str {
        r#"{"model":"t3vae","nu":18.0,"n":1,"m":1,"sigma":1.5,"seed":7,"dataset":"univariate"}"#
    }

    #[test]
    fn defaults_materialize_on_load() {
        let cfg = RunConfig::from_json(minimal_t3vae()).unwrap();
        assert_eq!(cfg.hidden_sizes, vec![64, 64]);
        assert_eq!(cfg.activation, "leaky_relu");
        assert_eq!(cfg.lr, 1e-3);
        assert_eq!(cfg.weight_decay, 1e-4);
        assert_eq!(cfg.batch_size, 128);
        assert_eq!(cfg.max_epochs, 80);
        assert_eq!(cfg.patience, 15);
        assert_eq!(cfg.mc_samples, 1);
        assert_eq!(cfg.split, "quick");
        let model = cfg.model_config().unwrap();
        assert_eq!(model.kind, ModelKind::T3Vae);
        assert_eq!((model.n, model.m), (1, 1));
        assert_eq!(model.nu, 18.0);
        assert_eq!(model.beta, 1.0);
    }

    #[test]
    fn unknown_keys_rejected_with_config_exit_code() {
        let text = r#"{"model":"t3vae","nu":18.0,"n":1,"m":1,"sigma":1.5,"seed":7,
                       "dataset":"univariate","momentum":0.9}"#;
        let err = RunConfig::from_json(text).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("momentum"));
    }

    #[test]
    fn canonical_json_is_idempotent_and_materializes_defaults() {
        let cfg = RunConfig::from_json(minimal_t3vae()).unwrap();
        let canon = cfg.canonical_json().unwrap();
        assert!(canon.contains(r#""lr":0.001"#));
        assert!(canon.contains(r#""batch_size":128"#));
        assert!(!canon.contains("beta"), "unset options stay omitted");
        assert!(!canon.contains('\n'));
        let reparsed = RunConfig::from_json(&canon).unwrap();
        assert_eq!(reparsed, cfg);
        assert_eq!(reparsed.canonical_json().unwrap(), canon);
    }

    #[test]
    fn per_model_field_applicability() {
        let gauss_with_nu = r#"{"model":"gaussian_vae","nu":5.0,"n":1,"m":1,"sigma":1.0,
                                "seed":1,"dataset":"univariate"}"#;
        assert!(RunConfig::from_json(gauss_with_nu).is_err());

        let t3_missing_nu =
            r#"{"model":"t3vae","n":1,"m":1,"sigma":1.0,"seed":1,"dataset":"univariate"}"#;
        assert!(RunConfig::from_json(t3_missing_nu).is_err());

        let beta_missing_beta =
            r#"{"model":"beta_vae","n":1,"m":1,"sigma":1.0,"seed":1,"dataset":"univariate"}"#;
        assert!(RunConfig::from_json(beta_missing_beta).is_err());

        let t3_with_beta = r#"{"model":"t3vae","nu":9.0,"beta":0.5,"n":1,"m":1,"sigma":1.0,
                               "seed":1,"dataset":"univariate"}"#;
        assert!(RunConfig::from_json(t3_with_beta).is_err());

        let flat_with_m1 = r#"{"model":"t3vae","nu":9.0,"n":1,"m":1,"m1":2,"sigma":1.0,
                               "seed":1,"dataset":"univariate"}"#;
        assert!(RunConfig::from_json(flat_with_m1).is_err());

        let beta_ok = r#"{"model":"beta_vae","beta":0.0,"n":1,"m":1,"sigma":1.0,
                          "seed":1,"dataset":"univariate"}"#;
        let cfg = RunConfig::from_json(beta_ok).unwrap();
        let model = cfg.model_config().unwrap();
        assert_eq!(model.beta, 0.0);
        assert!(model.nu.is_infinite());
    }

    #[test]
    fn hier_models_use_their_own_fields() {
        let hier = r#"{"model":"t3hvae","nu":10.0,"n":2,"m1":2,"m2":1,"sigma_z":1.0,
                       "sigma_x":1.2,"seed":3,"dataset":"bivariate"}"#;
        let cfg = RunConfig::from_json(hier).unwrap();
        let hc = cfg.hier_config().unwrap();
        assert_eq!(hc.kind, HierKind::T3Hvae);
        assert_eq!((hc.n, hc.m1, hc.m2), (2, 2, 1));
        assert_eq!((hc.sigma_z, hc.sigma_x), (1.0, 1.2));
        assert!(cfg.model_config().is_err());

        let missing_sigma_x = r#"{"model":"t3hvae","nu":10.0,"n":2,"m1":2,"m2":1,
                                  "sigma_z":1.0,"seed":3,"dataset":"bivariate"}"#;
        assert!(RunConfig::from_json(missing_sigma_x).is_err());

        let gauss_hier_with_nu = r#"{"model":"gaussian_hvae","nu":10.0,"n":2,"m1":2,"m2":1,
                                     "sigma_z":1.0,"sigma_x":1.0,"seed":3,"dataset":"bivariate"}"#;
        assert!(RunConfig::from_json(gauss_hier_with_nu).is_err());

        let gauss_hier = r#"{"model":"gaussian_hvae","n":2,"m1":2,"m2":1,"sigma_z":1.0,
                             "sigma_x":1.0,"seed":3,"dataset":"bivariate"}"#;
        let hc = RunConfig::from_json(gauss_hier).unwrap().hier_config().unwrap();
        assert!(hc.nu.is_infinite());
    }

    #[test]
    fn dataset_and_split_checks() {
        let wrong_dim = r#"{"model":"t3vae","nu":9.0,"n":1,"m":1,"sigma":1.0,
                            "seed":1,"dataset":"bivariate"}"#;
        assert!(RunConfig::from_json(wrong_dim).is_err());

        let csv = r#"{"model":"t3vae","nu":9.0,"n":3,"m":2,"sigma":1.0,
                      "seed":1,"dataset":"data/train.csv"}"#;
        let cfg = RunConfig::from_json(csv).unwrap();
        assert_eq!(
            cfg.data_source().unwrap(),
            DataSource::Csv(PathBuf::from("data/train.csv"))
        );

        let bad_source = r#"{"model":"t3vae","nu":9.0,"n":1,"m":1,"sigma":1.0,
                             "seed":1,"dataset":"parquet"}"#;
        assert!(RunConfig::from_json(bad_source).is_err());

        let bad_split = r#"{"model":"t3vae","nu":9.0,"n":1,"m":1,"sigma":1.0,
                            "seed":1,"dataset":"univariate","split":"fast"}"#;
        assert!(RunConfig::from_json(bad_split).is_err());

        let paper_split = r#"{"model":"t3vae","nu":9.0,"n":1,"m":1,"sigma":1.0,
                              "seed":1,"dataset":"univariate","split":"paper"}"#;
        let cfg = RunConfig::from_json(paper_split).unwrap();
        assert_eq!(cfg.split_preset().unwrap().sizes(), (200_000, 200_000, 500_000));
    }

    #[test]
    fn hyperparameter_range_checks() {
        let mut cfg = RunConfig::from_json(minimal_t3vae()).unwrap();
        cfg.lr = 0.0;
        assert!(cfg.validate().is_err());
        cfg.lr = 1e-3;
        cfg.batch_size = 0;
        assert!(cfg.validate().is_err());
        cfg.batch_size = 128;
        cfg.activation = "relu".into();
        assert!(cfg.validate().is_err());
        cfg.activation = "leaky_relu".into();
        assert!(cfg.validate().is_ok());
        cfg.nu = Some(2.0);
        assert!(cfg.validate().is_err(), "model-level nu check still applies");
    }

    #[test]
    fn unknown_model_lists_options() {
        let text = r#"{"model":"vae","n":1,"seed":1,"dataset":"univariate"}"#;
        let err = RunConfig::from_json(text).unwrap_err();
        assert!(err.to_string().contains("t3hvae"));
    }

    #[test]
    fn from_path_reads_files_and_reports_io() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, minimal_t3vae()).unwrap();
        let cfg = RunConfig::from_path(&path).unwrap();
        assert_eq!(cfg.seed, 7);
        let missing = RunConfig::from_path(dir.path().join("absent.json")).unwrap_err();
        assert_eq!(missing.exit_code(), 4);
    }
}
