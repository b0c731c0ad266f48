//! Low-rank adaptation of attention projection matrices.

use std::fmt;
use std::str::FromStr;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::model::params::{normal_init, ParameterStore};
use crate::tensor::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoraTarget {
    Query,
    Key,
    Value,
    Output,
}

impl LoraTarget {
    pub fn short(&self) -> &'static str {
        match self {
            LoraTarget::Query => "q",
            LoraTarget::Key => "k",
            LoraTarget::Value => "v",
            LoraTarget::Output => "o",
        }
    }
}

impl FromStr for LoraTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "q" | "query" => Ok(LoraTarget::Query),
            "k" | "key" => Ok(LoraTarget::Key),
            "v" | "value" => Ok(LoraTarget::Value),
            "o" | "output" => Ok(LoraTarget::Output),
            other => Err(Error::config(format!("unknown LoRA target name: {other}"))),
        }
    }
}

impl fmt::Display for LoraTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoraConfig {
    pub rank: usize,
    pub alpha: f64,
    pub targets: Vec<LoraTarget>,
}

impl Default for LoraConfig {
    /// r=8, alpha=8, applied to the query and value projections.
    fn default() -> Self {
        LoraConfig { rank: 8, alpha: 8.0, targets: vec![LoraTarget::Query, LoraTarget::Value] }
    }
}

impl LoraConfig {
    pub fn scaling(&self) -> f64 {
        self.alpha / self.rank as f64
    }
}

/// Rank-decomposition pairs for every (layer, target) combination. The
/// frozen base matrix `W_0` stays in the backbone store; the effective
/// update `(alpha/r) * W_B W_A` is applied on the fly.
#[derive(Debug, Clone)]
pub struct LoraAdapterSet {
    pub config: LoraConfig,
    pub num_layers: usize,
    pub model_dim: usize,
    pub store: ParameterStore,
}

pub fn a_name(layer: usize, target: LoraTarget) -> String {
    format!("peft/lora/layer{layer}/{}/a", target.short())
}

pub fn b_name(layer: usize, target: LoraTarget) -> String {
    format!("peft/lora/layer{layer}/{}/b", target.short())
}

/// W_A is normal(0, 0.02), W_B zero, so a fresh adapter set is a no-op.
pub fn init_lora(
    config: &ModelConfig,
    rank: usize,
    alpha: f64,
    targets: &[LoraTarget],
    seed: u64,
) -> Result<LoraAdapterSet> {
    config.validate()?;
    if rank == 0 {
        return Err(Error::config("LoRA rank must be at least 1"));
    }
    if targets.is_empty() {
        return Err(Error::config("LoRA target list must be non-empty"));
    }
    let mut sorted = targets.to_vec();
    sorted.sort();
    sorted.dedup();
    let d = config.model_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParameterStore::new();
    for layer in 0..config.num_layers {
        for &target in &sorted {
            store.insert(&a_name(layer, target), normal_init(&mut rng, rank, d, 0.02), true)?;
            store.insert(&b_name(layer, target), Matrix::zeros(d, rank), true)?;
        }
    }
    Ok(LoraAdapterSet {
        config: LoraConfig { rank, alpha, targets: sorted },
        num_layers: config.num_layers,
        model_dim: d,
        store,
    })
}

impl LoraAdapterSet {
    pub fn has_target(&self, target: LoraTarget) -> bool {
        self.config.targets.contains(&target)
    }

    pub fn pair(&self, layer: usize, target: LoraTarget) -> Result<(&Matrix, &Matrix)> {
        Ok((
            self.store.value(&a_name(layer, target))?,
            self.store.value(&b_name(layer, target))?,
        ))
    }

    pub fn validate_against(&self, config: &ModelConfig) -> Result<()> {
        if self.num_layers != config.num_layers {
            return Err(Error::config(format!(
                "LoRA set covers {} layers but model has {}",
                self.num_layers, config.num_layers
            )));
        }
        if self.model_dim != config.model_dim {
            return Err(Error::config(format!(
                "LoRA set dim {} does not match model_dim {}",
                self.model_dim, config.model_dim
            )));
        }
        Ok(())
    }

    pub fn adapter_value_count(&self) -> usize {
        self.store.total_value_count()
    }
}

/// `x W_0^T + (alpha/r) (x W_A^T) W_B^T`, never materializing the combined
/// weight matrix.
pub fn lora_project(
    x: &Matrix,
    w0: &Matrix,
    w_a: &Matrix,
    w_b: &Matrix,
    scaling: f64,
) -> Matrix {
    let base = x.matmul_transposed(w0);
    let low = x.matmul_transposed(w_a);
    let delta = low.matmul_transposed(w_b);
    base.add(&delta.scaled(scaling))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig::tiny(50, 2)
    }

    #[test]
    fn fresh_set_counts_and_zero_b() {
        let set = init_lora(&cfg(), 8, 8.0, &[LoraTarget::Query, LoraTarget::Value], 3).unwrap();
        // 2 layers x 2 targets x (8x64 + 64x8)
        assert_eq!(set.adapter_value_count(), 4 * 8 * 128);
        for layer in 0..2 {
            for t in [LoraTarget::Query, LoraTarget::Value] {
                let (_, b) = set.pair(layer, t).unwrap();
                assert!(b.data().iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn same_seed_same_a() {
        let s1 = init_lora(&cfg(), 4, 4.0, &[LoraTarget::Query], 9).unwrap();
        let s2 = init_lora(&cfg(), 4, 4.0, &[LoraTarget::Query], 9).unwrap();
        assert!(s1.store.bits_identical(&s2.store));
    }

    #[test]
    fn unknown_target_name_is_config_error() {
        assert!("queryx".parse::<LoraTarget>().is_err());
        assert!("q".parse::<LoraTarget>().is_ok());
    }

    #[test]
    fn project_zero_b_is_exact_base() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![-0.5, 0.25]]).unwrap();
        let w0 = Matrix::from_rows(&[vec![0.5, -1.0], vec![2.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let a = Matrix::from_rows(&[vec![0.3, 0.7]]).unwrap();
        let b = Matrix::zeros(3, 1);
        let out = lora_project(&x, &w0, &a, &b, 2.0);
        assert_eq!(out, x.matmul_transposed(&w0));
    }

    #[test]
    fn full_rank_update_matches_dense_oracle() {
        // r = d and alpha = r, so the update is exactly W_B W_A.
        let d = 3;
        let x = Matrix::from_rows(&[vec![0.2, -1.0, 0.5]]).unwrap();
        let w0 = Matrix::from_rows(&[
            vec![1.0, 0.0, 0.5],
            vec![0.0, 1.0, -0.5],
            vec![0.25, 0.5, 1.0],
        ])
        .unwrap();
        let w_a = Matrix::from_rows(&[
            vec![0.1, 0.2, 0.3],
            vec![-0.2, 0.0, 0.4],
            vec![0.5, -0.1, 0.2],
        ])
        .unwrap();
        let w_b = Matrix::from_rows(&[
            vec![0.3, 0.1, 0.0],
            vec![0.2, -0.4, 0.6],
            vec![-0.5, 0.2, 0.1],
        ])
        .unwrap();
        let update = w_b.matmul(&w_a);
        let dense = x.matmul_transposed(&w0.add(&update));
        let low_rank = lora_project(&x, &w0, &w_a, &w_b, d as f64 / d as f64);
        assert!(dense.max_abs_diff(&low_rank) < 1e-12);
    }

    #[test]
    fn doubling_alpha_doubles_the_adapter_branch() {
        let x = Matrix::from_rows(&[vec![0.2, -1.0, 0.5]]).unwrap();
        let w0 = Matrix::zeros(2, 3);
        let w_a = Matrix::from_rows(&[vec![0.1, 0.2, 0.3]]).unwrap();
        let w_b = Matrix::from_rows(&[vec![0.4], vec![-0.6]]).unwrap();
        let base = x.matmul_transposed(&w0);
        let once = lora_project(&x, &w0, &w_a, &w_b, 1.0);
        let twice = lora_project(&x, &w0, &w_a, &w_b, 2.0);
        let branch_once = once.add(&base.scaled(-1.0));
        let branch_twice = twice.add(&base.scaled(-1.0));
        assert_eq!(branch_twice, branch_once.scaled(2.0));
    }
}
