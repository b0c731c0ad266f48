//! Named, trainable-flagged weight tensors.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::tensor::Matrix;

#[derive(Debug, Clone)]
pub struct Param {
    pub value: Matrix,
    pub trainable: bool,
}

/// Ordered collection of named tensors. Iteration follows insertion order so
/// every pass over the store is deterministic.
#[derive(Debug, Clone, Default)]
pub struct ParameterStore {
    entries: Vec<(String, Param)>,
    index: HashMap<String, usize>,
}

impl ParameterStore {
    pub fn new() -> Self {
        ParameterStore::default()
    }

    pub fn insert(&mut self, name: &str, value: Matrix, trainable: bool) -> Result<()> {
        if self.index.contains_key(name) {
            return Err(Error::config(format!("duplicate parameter name: {name}")));
        }
        self.index.insert(name.to_string(), self.entries.len());
        self.entries.push((name.to_string(), Param { value, trainable }));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Param> {
        self.index.get(name).map(|&i| &self.entries[i].1)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Param> {
        self.index.get(name).copied().map(move |i| &mut self.entries[i].1)
    }

    pub fn value(&self, name: &str) -> Result<&Matrix> {
        self.get(name)
            .map(|p| &p.value)
            .ok_or_else(|| Error::config(format!("unknown parameter: {name}")))
    }

    pub fn set_trainable(&mut self, name: &str, trainable: bool) -> Result<()> {
        self.get_mut(name)
            .map(|p| p.trainable = trainable)
            .ok_or_else(|| Error::config(format!("unknown parameter: {name}")))
    }

    /// Flip the trainable flag on every entry whose name starts with `prefix`.
    pub fn set_trainable_by_prefix(&mut self, prefix: &str, trainable: bool) {
        for (name, param) in &mut self.entries {
            if name.starts_with(prefix) {
                param.trainable = trainable;
            }
        }
    }

    pub fn set_all_trainable(&mut self, trainable: bool) {
        for (_, param) in &mut self.entries {
            param.trainable = trainable;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param)> {
        self.entries.iter().map(|(n, p)| (n.as_str(), p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn trainable_value_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|(_, p)| p.trainable)
            .map(|(_, p)| p.value.len())
            .sum()
    }

    pub fn total_value_count(&self) -> usize {
        self.entries.iter().map(|(_, p)| p.value.len()).sum()
    }

    /// Exact bitwise equality of every tensor, used by the frozen-backbone checks.
    pub fn bits_identical(&self, other: &ParameterStore) -> bool {
        if self.entries.len() != other.entries.len() {
            return false;
        }
        self.entries.iter().zip(&other.entries).all(|((na, pa), (nb, pb))| {
            na == nb
                && pa.value.shape() == pb.value.shape()
                && pa
                    .value
                    .data()
                    .iter()
                    .zip(pb.value.data())
                    .all(|(x, y)| x.to_bits() == y.to_bits())
        })
    }
}

fn normal_matrix(rng: &mut impl Rng, rows: usize, cols: usize, std: f64) -> Matrix {
    let dist = Normal::new(0.0, std).expect("valid normal parameters");
    let data = (0..rows * cols).map(|_| dist.sample(rng)).collect();
    Matrix::from_vec(rows, cols, data).expect("shape consistent")
}

pub const POOLER_PREFIX: &str = "pooler.";
pub const CLASSIFIER_PREFIX: &str = "classifier.";

/// Build the backbone, pooler, and classification head with every tensor
/// trainable. Matrices are normal(0, 0.02), biases zero, norm scales one.
pub fn init_backbone(config: &ModelConfig, seed: u64) -> Result<ParameterStore> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = config.model_dim;
    let ff = config.ff_dim;
    let mut store = ParameterStore::new();
    let mat =
        |store: &mut ParameterStore, rng: &mut ChaCha8Rng, name: String, rows, cols| -> Result<()> {
            store.insert(&name, normal_matrix(rng, rows, cols, 0.02), true)
        };

    mat(&mut store, &mut rng, "embed.token".into(), config.vocab_size, d)?;
    mat(&mut store, &mut rng, "embed.position".into(), config.max_seq_len, d)?;
    store.insert("embed.ln.gamma", Matrix::from_vec(1, d, vec![1.0; d])?, true)?;
    store.insert("embed.ln.beta", Matrix::zeros(1, d), true)?;

    for l in 0..config.num_layers {
        for proj in ["wq", "wk", "wv", "wo"] {
            mat(&mut store, &mut rng, format!("layer{l}.attn.{proj}"), d, d)?;
        }
        for bias in ["bq", "bk", "bv", "bo"] {
            store.insert(&format!("layer{l}.attn.{bias}"), Matrix::zeros(1, d), true)?;
        }
        store.insert(&format!("layer{l}.attn.ln.gamma"), Matrix::from_vec(1, d, vec![1.0; d])?, true)?;
        store.insert(&format!("layer{l}.attn.ln.beta"), Matrix::zeros(1, d), true)?;

        mat(&mut store, &mut rng, format!("layer{l}.ffn.w1"), ff, d)?;
        store.insert(&format!("layer{l}.ffn.b1"), Matrix::zeros(1, ff), true)?;
        mat(&mut store, &mut rng, format!("layer{l}.ffn.w2"), d, ff)?;
        store.insert(&format!("layer{l}.ffn.b2"), Matrix::zeros(1, d), true)?;
        store.insert(&format!("layer{l}.ffn.ln.gamma"), Matrix::from_vec(1, d, vec![1.0; d])?, true)?;
        store.insert(&format!("layer{l}.ffn.ln.beta"), Matrix::zeros(1, d), true)?;
    }

    mat(&mut store, &mut rng, "pooler.weight".into(), d, d)?;
    store.insert("pooler.bias", Matrix::zeros(1, d), true)?;
    mat(&mut store, &mut rng, "classifier.weight".into(), config.num_classes, d)?;
    store.insert("classifier.bias", Matrix::zeros(1, config.num_classes), true)?;

    Ok(store)
}

/// Names the backbone proper: everything except pooler and classifier.
pub fn is_backbone_name(name: &str) -> bool {
    !name.starts_with(POOLER_PREFIX) && !name.starts_with(CLASSIFIER_PREFIX)
}

/// Parameter count of pooler plus classification head.
pub fn head_parameter_count(config: &ModelConfig) -> usize {
    let d = config.model_dim;
    let c = config.num_classes;
    d * d + d + c * d + c
}

pub fn normal_init(rng: &mut impl Rng, rows: usize, cols: usize, std: f64) -> Matrix {
    normal_matrix(rng, rows, cols, std)
}
