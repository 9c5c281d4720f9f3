use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hyperparameters shared by the segmentation and navigation trainers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Weight on the data term; the parameter norm carries weight ½.
    pub lambda_reg: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub dropout_p: f64,
    pub seed: u64,
    /// Network input side in pixels (navigation only).
    pub input_side: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda_reg: 1.0,
            epochs: 30,
            batch_size: 16,
            lr0: 0.001,
            dropout_p: 0.2,
            seed: 0,
            input_side: 64,
        }
    }
}

impl TrainConfig {
    pub const MAX_EPOCHS: usize = 100;

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_reg.is_finite() && self.lambda_reg >= 0.0) {
            return Err(Error::Invalid(format!(
                "lambda_reg must be finite and >= 0, got {}",
                self.lambda_reg
            )));
        }
        if self.epochs == 0 || self.epochs > Self::MAX_EPOCHS {
            return Err(Error::Invalid(format!(
                "epochs must be in 1..={}, got {}",
                Self::MAX_EPOCHS,
                self.epochs
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Invalid("batch_size must be positive".into()));
        }
        if !(self.lr0.is_finite() && self.lr0 > 0.0) {
            return Err(Error::Invalid(format!("lr0 must be > 0, got {}", self.lr0)));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::Invalid(format!(
                "dropout_p must be in [0, 1), got {}",
                self.dropout_p
            )));
        }
        if self.input_side == 0 {
            return Err(Error::Invalid("input_side must be positive".into()));
        }
        Ok(())
    }
}
