//! Versioned JSON checkpoints: the canonical run-config echo, per-layer
//! weights with shapes, optional optimizer moments, and the best validation
//! loss. Floats are stored as decimal strings with 17 significant digits,
//! which round-trip every f64 bit-exactly.

use crate::autodiff::Mat;
use crate::config::RunConfig;
use crate::error::{io_err, Error, Result};
use crate::nn::{Activation, AdamState, Linear, Mlp};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;

fn enc(x: f64) -> String {
    format!("{x:.16e}")
}

fn dec(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Config(format!("checkpoint holds non-numeric weight '{s}'")))
}

fn enc_all(xs: &[f64]) -> Vec<String> {
    xs.iter().copied().map(enc).collect()
}

fn dec_all(xs: &[String]) -> Result<Vec<f64>> {
    xs.iter().map(|s| dec(s)).collect()
}

/// One dense layer: `w` is row-major (rows × cols), `b` has `cols` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    pub rows: usize,
    pub cols: usize,
    pub w: Vec<String>,
    pub b: Vec<String>,
}

/// A named network (e.g. "encoder", "decoder", "prior2").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetRecord {
    pub name: String,
    pub layers: Vec<LayerRecord>,
}

/// Adam moment buffers in the slot order of [`AdamState::moments`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerRecord {
    pub step_count: u64,
    pub first_moments: Vec<Vec<String>>,
    pub second_moments: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub version: u32,
    /// canonical run-config JSON, echoed byte-for-byte
    pub config: String,
    pub nets: Vec<NetRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerRecord>,
    pub best_val_loss: f64,
    pub epoch: usize,
}

impl Checkpoint {
    pub fn new(
        config: &RunConfig,
        nets: &[(&str, &Mlp)],
        optimizer: Option<&AdamState>,
        best_val_loss: f64,
        epoch: usize,
    ) -> Result<Checkpoint> {
        let nets = nets
            .iter()
            .map(|(name, mlp)| NetRecord {
                name: (*name).to_string(),
                layers: mlp
                    .layers
                    .iter()
                    .map(|l| LayerRecord {
                        rows: l.w.rows(),
                        cols: l.w.cols(),
                        w: enc_all(l.w.data()),
                        b: enc_all(l.b.data()),
                    })
                    .collect(),
            })
            .collect();
        let optimizer = optimizer.map(|a| {
            let (m, v) = a.moments();
            OptimizerRecord {
                step_count: a.step_count,
                first_moments: m.iter().map(|g| enc_all(g)).collect(),
                second_moments: v.iter().map(|g| enc_all(g)).collect(),
            }
        });
        Ok(Checkpoint {
            version: CHECKPOINT_VERSION,
            config: config.canonical_json()?,
            nets,
            optimizer,
            best_val_loss,
            epoch,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string(self)?).map_err(io_err(path))
    }

    /// Load a checkpoint, gating on the format version before the strict
    /// parse so files from other versions fail with a clear message.
    pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let probe: serde_json::Value = serde_json::from_str(&text)?;
        let version = probe
            .get("version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Config("checkpoint has no version field".into()))?;
        if version != CHECKPOINT_VERSION as u64 {
            return Err(Error::Config(format!(
                "checkpoint version {version} unsupported (expected {CHECKPOINT_VERSION})"
            )));
        }
        Ok(serde_json::from_str(&text)?)
    }

    /// The echoed run config, revalidated.
    pub fn run_config(&self) -> Result<RunConfig> {
        RunConfig::from_json(&self.config)
    }

    pub fn net_names(&self) -> Vec<&str> {
        self.nets.iter().map(|n| n.name.as_str()).collect()
    }

    /// Rebuild a named network, checking shapes and layer chaining.
    pub fn net(&self, name: &str) -> Result<Mlp> {
        let rec = self
            .nets
            .iter()
            .find(|n| n.name == name)
            .ok_or_else(|| Error::Contract(format!("checkpoint has no net '{name}'")))?;
        if rec.layers.is_empty() {
            return Err(Error::Config(format!("net '{name}' has no layers")));
        }
        let mut layers = Vec::with_capacity(rec.layers.len());
        for l in &rec.layers {
            if l.w.len() != l.rows * l.cols || l.b.len() != l.cols || l.rows == 0 || l.cols == 0 {
                return Err(Error::Config(format!(
                    "net '{name}': layer declared {}x{} but holds {} weights / {} biases",
                    l.rows,
                    l.cols,
                    l.w.len(),
                    l.b.len()
                )));
            }
            layers.push(Linear {
                w: Mat::from_vec(l.rows, l.cols, dec_all(&l.w)?),
                b: Mat::from_vec(1, l.cols, dec_all(&l.b)?),
            });
        }
        for pair in layers.windows(2) {
            if pair[0].w.cols() != pair[1].w.rows() {
                return Err(Error::Config(format!(
                    "net '{name}': layer output {} feeds layer input {}",
                    pair[0].w.cols(),
                    pair[1].w.rows()
                )));
            }
        }
        Ok(Mlp { layers, activation: Activation::LeakyRelu })
    }

    /// Rebuild the optimizer (if the checkpoint stored one) with the given
    /// hyperparameters and the saved moments.
    pub fn optimizer_state(&self, lr: f64, weight_decay: f64) -> Result<Option<AdamState>> {
        let Some(rec) = &self.optimizer else { return Ok(None) };
        let m: Vec<Vec<f64>> =
            rec.first_moments.iter().map(|g| dec_all(g)).collect::<Result<_>>()?;
        let v: Vec<Vec<f64>> =
            rec.second_moments.iter().map(|g| dec_all(g)).collect::<Result<_>>()?;
        let sizes: Vec<usize> = m.iter().map(Vec::len).collect();
        let mut adam = AdamState::new(lr, weight_decay, &sizes);
        adam.restore_moments(m, v, rec.step_count)?;
        Ok(Some(adam))
    }
}
