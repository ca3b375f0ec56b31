//! Experiment configuration: defaults, JSON loading, `key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use spnn_core::analysis::{Activation, LossAxis, RandomWeights};
use spnn_core::device::{LeakModel, MziParams};
use spnn_core::propagation::Resample;

use crate::CliError;

/// Where layer weights come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSource {
    /// Gaussian matrices drawn from the run seed.
    Random { distribution: RandomWeights },
    /// JSON array of matrices, one per layer.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Threshold,
    Identity,
}

/// Every experiment parameter, flat so that `--set key=value` can reach it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: Option<String>,

    pub kappa1: f64,
    pub kappa2: f64,
    #[serde(rename = "alpha_L_db")]
    pub alpha_l_db: f64,
    pub alpha_m_db: f64,
    pub alpha_p_db_per_cm: f64,
    pub l_mzi_um: f64,
    #[serde(rename = "xB_db")]
    pub xb_db: f64,
    #[serde(rename = "xC_db")]
    pub xc_db: f64,
    pub xtalk_sigma_frac: f64,
    pub leak_model: LeakModel,

    pub n: usize,
    pub m: usize,
    pub weights: WeightSource,
    pub matrices: usize,
    pub networks: usize,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub gain_db: f64,
    pub nau_loss_db: f64,
    pub sensitivity_dbm: f64,
    pub launch_power_dbm: f64,

    pub theta_points: usize,
    pub n_grid: Vec<usize>,
    pub m_grid: Vec<usize>,

    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub classes: usize,
    pub train_fraction: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub activation: ActivationKind,
    pub activation_bias: f64,
    pub model: Option<PathBuf>,

    pub crosstalk: bool,
    pub resample: Resample,
    pub sweep_axes: Vec<LossAxis>,
    pub sweep_points: usize,
    pub joint_instances: usize,
    pub joint_sigma_scale: f64,
    pub max_drop_pct: f64,
    pub tolerance_curve_points: usize,
    pub tolerance_samples: usize,
    pub xb_grid: Vec<f64>,
    pub xc_grid: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = MziParams::default();
        Self {
            experiment: None,
            kappa1: p.kappa1,
            kappa2: p.kappa2,
            alpha_l_db: p.alpha_l_db,
            alpha_m_db: p.alpha_m_db,
            alpha_p_db_per_cm: p.alpha_p_db_per_cm,
            l_mzi_um: p.l_mzi_um,
            xb_db: p.xb_db,
            xc_db: p.xc_db,
            xtalk_sigma_frac: p.xtalk_sigma_frac,
            leak_model: p.leak_model,
            n: 8,
            m: 1,
            weights: WeightSource::Random {
                distribution: RandomWeights::RealGaussian,
            },
            matrices: 100,
            networks: 10,
            trials: 10_000,
            seed: 1,
            out: None,
            gain_db: 17.0,
            nau_loss_db: 1.0,
            sensitivity_dbm: -11.7,
            launch_power_dbm: 0.0,
            theta_points: 101,
            n_grid: vec![8, 16, 32, 64],
            m_grid: vec![1, 2, 3],
            images: None,
            labels: None,
            classes: 8,
            train_fraction: 0.7,
            epochs: 150,
            batch_size: 32,
            learning_rate: 0.01,
            activation: ActivationKind::Threshold,
            activation_bias: 0.3,
            model: None,
            crosstalk: false,
            resample: Resample::Frozen,
            sweep_axes: LossAxis::ALL.to_vec(),
            sweep_points: 9,
            joint_instances: 1000,
            joint_sigma_scale: 1.0,
            max_drop_pct: 5.0,
            tolerance_curve_points: 9,
            tolerance_samples: 200,
            xb_grid: vec![-40.0, -35.0, -30.0, -25.0, -20.0],
            xc_grid: vec![-30.0, -26.0, -22.0, -18.0, -14.0],
        }
    }
}

impl ExperimentConfig {
    pub fn params(&self) -> MziParams {
        MziParams {
            kappa1: self.kappa1,
            kappa2: self.kappa2,
            alpha_l_db: self.alpha_l_db,
            alpha_m_db: self.alpha_m_db,
            alpha_p_db_per_cm: self.alpha_p_db_per_cm,
            l_mzi_um: self.l_mzi_um,
            xb_db: self.xb_db,
            xc_db: self.xc_db,
            xtalk_sigma_frac: self.xtalk_sigma_frac,
            leak_model: self.leak_model,
        }
    }

    pub fn activation(&self) -> Activation {
        match self.activation {
            ActivationKind::Threshold => Activation::Threshold {
                bias: self.activation_bias,
            },
            ActivationKind::Identity => Activation::Identity,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params().validate()?;
        let positive = [
            ("n", self.n),
            ("m", self.m),
            ("matrices", self.matrices),
            ("networks", self.networks),
            ("trials", self.trials),
            ("theta_points", self.theta_points),
            ("classes", self.classes),
            ("batch_size", self.batch_size),
            ("sweep_points", self.sweep_points),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(CliError::config(key, "must be positive"));
            }
        }
        if self.n < 2 || self.n_grid.iter().any(|&n| n < 2) {
            return Err(CliError::config("n", "port counts must be at least 2"));
        }
        if self.m_grid.contains(&0) {
            return Err(CliError::config("m_grid", "layer counts must be positive"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(CliError::config("train_fraction", "must lie in (0, 1)"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(CliError::config("learning_rate", "must be positive"));
        }
        if !(self.activation_bias >= 0.0) {
            return Err(CliError::config("activation_bias", "must be >= 0"));
        }
        if !(self.max_drop_pct >= 0.0) {
            return Err(CliError::config("max_drop_pct", "must be >= 0"));
        }
        if !(self.joint_sigma_scale >= 0.0) {
            return Err(CliError::config("joint_sigma_scale", "must be >= 0"));
        }
        for (key, v) in [
            ("gain_db", self.gain_db),
            ("nau_loss_db", self.nau_loss_db),
            ("sensitivity_dbm", self.sensitivity_dbm),
            ("launch_power_dbm", self.launch_power_dbm),
        ] {
            if !v.is_finite() {
                return Err(CliError::config(key, "must be finite"));
            }
        }
        if self.images.is_some() != self.labels.is_some() {
            return Err(CliError::config("images", "images and labels must be given together"));
        }
        if self.xb_grid.iter().chain(&self.xc_grid).any(|&x| !(x <= 0.0)) {
            return Err(CliError::config("xb_grid", "crosstalk grid values must be <= 0 dB"));
        }
        Ok(())
    }

    /// Canonical JSON of the resolved configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// First 12 hex digits of the SHA-256 of [`Self::to_json`].
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_json().as_bytes())
            .iter()
            .take(6)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn parse_document(text: &str, origin: &str) -> Result<Map<String, Value>, CliError> {
    if text.trim().is_empty() {
        return Ok(Map::new());
    }
    match serde_json::from_str::<Value>(text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::Config {
            key: origin.into(),
            reason: "top level must be a JSON object".into(),
        }),
        Err(e) => Err(CliError::Config {
            key: origin.into(),
            reason: format!("malformed JSON at line {}, column {}: {e}", e.line(), e.column()),
        }),
    }
}

fn resolve(map: Map<String, Value>) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig = serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Config {
        key: "config".into(),
        reason: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses a configuration document; an empty document gives the defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    resolve(parse_document(text, "config")?)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_document(&text, &path.display().to_string()).and_then(resolve)
}

/// Builds the configuration from an optional file plus `key=value`
/// overrides. Values are parsed as JSON, falling back to a plain string.
pub fn build_config(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let mut map = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            parse_document(&text, &p.display().to_string())?
        }
        None => Map::new(),
    };
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::config(item, "override must look like key=value"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::config(item, "empty key"));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let probe: Map<String, Value> = [(key.to_string(), value.clone())].into_iter().collect();
        if let Err(e) = serde_json::from_value::<ExperimentConfig>(Value::Object(probe)) {
            return Err(CliError::config(key, e.to_string()));
        }
        map.insert(key.to_string(), value);
    }
    resolve(map)
}
