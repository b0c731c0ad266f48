//! Architecture hyperparameters for the compact encoder.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub num_layers: usize,
    pub num_heads: usize,
    /// Token-embedding dimensionality.
    pub model_dim: usize,
    pub ff_dim: usize,
    pub vocab_size: usize,
    pub max_seq_len: usize,
    pub hidden_dropout: f64,
    pub num_classes: usize,
}

impl ModelConfig {
    /// Two-layer, 64-dim encoder used by the bundled synthetic tasks.
    pub fn tiny(vocab_size: usize, num_classes: usize) -> Self {
        ModelConfig {
            num_layers: 2,
            num_heads: 4,
            model_dim: 64,
            ff_dim: 128,
            vocab_size,
            max_seq_len: 16,
            hidden_dropout: 0.1,
            num_classes,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.model_dim / self.num_heads
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 {
            return Err(Error::config("num_layers must be positive"));
        }
        if self.num_heads == 0 {
            return Err(Error::config("num_heads must be positive"));
        }
        if self.model_dim == 0 || self.model_dim % self.num_heads != 0 {
            return Err(Error::config(format!(
                "model_dim {} must be positive and divisible by num_heads {}",
                self.model_dim, self.num_heads
            )));
        }
        if self.ff_dim == 0 {
            return Err(Error::config("ff_dim must be positive"));
        }
        if self.vocab_size == 0 {
            return Err(Error::config("vocab_size must be positive"));
        }
        if self.max_seq_len < 2 {
            return Err(Error::config("max_seq_len must be at least 2 (CLS plus one token)"));
        }
        if !(0.0..=1.0).contains(&self.hidden_dropout) {
            return Err(Error::config("hidden_dropout must lie in [0, 1]"));
        }
        if self.num_classes < 2 {
            return Err(Error::config("num_classes must be at least 2"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_config_is_valid() {
        assert!(ModelConfig::tiny(100, 2).validate().is_ok());
    }

    #[test]
    fn rejects_indivisible_heads() {
        let mut cfg = ModelConfig::tiny(100, 2);
        cfg.num_heads = 3;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_short_sequences() {
        let mut cfg = ModelConfig::tiny(100, 2);
        cfg.max_seq_len = 1;
        assert!(cfg.validate().is_err());
    }
}
