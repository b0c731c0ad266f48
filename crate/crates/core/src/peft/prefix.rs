//! Deep prefix tuning: trainable per-layer key/value prefix positions,
//! optionally produced by a small reparameterization encoder.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::model::params::{normal_init, ParameterStore};
use crate::tensor::Matrix;

pub const DEFAULT_REPARAM_HIDDEN: usize = 512;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PrefixConfig {
    pub prefix_len: usize,
    pub reparam_enabled: bool,
    pub reparam_hidden: usize,
}

impl Default for PrefixConfig {
    fn default() -> Self {
        PrefixConfig {
            prefix_len: 8,
            reparam_enabled: false,
            reparam_hidden: DEFAULT_REPARAM_HIDDEN,
        }
    }
}

/// Per-layer continuous prompt tensors.
///
/// Without reparameterization the store holds one `[p x d]` key and value
/// tensor per layer. With it, the store holds the raw prompt plus the
/// two-layer encoder weights, and per-layer prefixes are derived on demand.
#[derive(Debug, Clone)]
pub struct PrefixBank {
    pub config: PrefixConfig,
    pub num_layers: usize,
    pub model_dim: usize,
    pub store: ParameterStore,
}

pub fn key_name(layer: usize) -> String {
    format!("peft/prefix/layer{layer}/key")
}

pub fn value_name(layer: usize) -> String {
    format!("peft/prefix/layer{layer}/value")
}

pub const RAW_PROMPT: &str = "peft/prefix/raw_prompt";
pub const REPARAM_W1: &str = "peft/prefix/reparam/w1";
pub const REPARAM_B1: &str = "peft/prefix/reparam/b1";
pub const REPARAM_W2: &str = "peft/prefix/reparam/w2";
pub const REPARAM_B2: &str = "peft/prefix/reparam/b2";

/// Prefix tensors start at normal(0, 0.5/sqrt(d)) to keep early attention
/// logits moderate.
pub fn init_prefix(
    config: &ModelConfig,
    prefix_len: usize,
    reparam_enabled: bool,
    seed: u64,
) -> Result<PrefixBank> {
    config.validate()?;
    if prefix_len > config.max_seq_len {
        return Err(Error::config(format!(
            "prefix_len {} exceeds max_seq_len {}",
            prefix_len, config.max_seq_len
        )));
    }
    let d = config.model_dim;
    let l = config.num_layers;
    let hidden = DEFAULT_REPARAM_HIDDEN;
    let std = 0.5 / (d as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParameterStore::new();
    if reparam_enabled {
        store.insert(RAW_PROMPT, normal_init(&mut rng, prefix_len, d, std), true)?;
        store.insert(REPARAM_W1, normal_init(&mut rng, hidden, d, 0.02), true)?;
        store.insert(REPARAM_B1, Matrix::zeros(1, hidden), true)?;
        store.insert(REPARAM_W2, normal_init(&mut rng, l * 2 * d, hidden, 0.02), true)?;
        store.insert(REPARAM_B2, Matrix::zeros(1, l * 2 * d), true)?;
    } else {
        for layer in 0..l {
            store.insert(&key_name(layer), normal_init(&mut rng, prefix_len, d, std), true)?;
            store.insert(&value_name(layer), normal_init(&mut rng, prefix_len, d, std), true)?;
        }
    }
    Ok(PrefixBank {
        config: PrefixConfig { prefix_len, reparam_enabled, reparam_hidden: hidden },
        num_layers: l,
        model_dim: d,
        store,
    })
}

/// The two-layer feedforward map from a raw prompt row to all layers'
/// key/value rows: d -> hidden -> L*2*d with a tanh in between.
pub struct ReparamEncoder<'a> {
    pub w1: &'a Matrix,
    pub b1: &'a Matrix,
    pub w2: &'a Matrix,
    pub b2: &'a Matrix,
}

impl PrefixBank {
    pub fn encoder(&self) -> Result<ReparamEncoder<'_>> {
        if !self.config.reparam_enabled {
            return Err(Error::State("reparameterization is disabled for this bank".to_string()));
        }
        Ok(ReparamEncoder {
            w1: self.store.value(REPARAM_W1)?,
            b1: self.store.value(REPARAM_B1)?,
            w2: self.store.value(REPARAM_W2)?,
            b2: self.store.value(REPARAM_B2)?,
        })
    }

    /// Per-layer key and value prefixes, derived through the encoder when
    /// reparameterization is on.
    pub fn materialize(&self) -> Result<PrefixTensors> {
        if self.config.reparam_enabled {
            let raw = self.store.value(RAW_PROMPT)?;
            reparameterize(raw, &self.encoder()?, self.num_layers, self.model_dim)
        } else {
            let mut keys = Vec::with_capacity(self.num_layers);
            let mut values = Vec::with_capacity(self.num_layers);
            for l in 0..self.num_layers {
                keys.push(self.store.value(&key_name(l))?.clone());
                values.push(self.store.value(&value_name(l))?.clone());
            }
            Ok(PrefixTensors { keys, values })
        }
    }

    pub fn validate_against(&self, config: &ModelConfig) -> Result<()> {
        if self.num_layers != config.num_layers {
            return Err(Error::config(format!(
                "prefix bank covers {} layers but model has {}",
                self.num_layers, config.num_layers
            )));
        }
        if self.model_dim != config.model_dim {
            return Err(Error::config(format!(
                "prefix bank dim {} does not match model_dim {}",
                self.model_dim, config.model_dim
            )));
        }
        if self.config.prefix_len > config.max_seq_len {
            return Err(Error::config("prefix_len exceeds max_seq_len".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PrefixTensors {
    pub keys: Vec<Matrix>,
    pub values: Vec<Matrix>,
}

/// Run the encoder over every raw prompt row and reshape the output into
/// per-layer key/value blocks. Row layout per layer `l`: key at columns
/// `[l*2d, l*2d+d)`, value at `[l*2d+d, (l+1)*2d)`.
pub fn reparameterize(
    raw_prompt: &Matrix,
    encoder: &ReparamEncoder<'_>,
    num_layers: usize,
    model_dim: usize,
) -> Result<PrefixTensors> {
    let p = raw_prompt.rows();
    let d = model_dim;
    let hidden = raw_prompt.matmul_transposed(encoder.w1);
    let mut act = hidden;
    for r in 0..p {
        let b = encoder.b1.row(0).to_vec();
        for (v, bv) in act.row_mut(r).iter_mut().zip(&b) {
            *v = (*v + bv).tanh();
        }
    }
    let mut out = act.matmul_transposed(encoder.w2);
    for r in 0..p {
        let b = encoder.b2.row(0).to_vec();
        for (v, bv) in out.row_mut(r).iter_mut().zip(&b) {
            *v += bv;
        }
    }
    if out.cols() != num_layers * 2 * d {
        return Err(Error::config(format!(
            "reparameterization output width {} does not reshape to {} layers of 2x{}",
            out.cols(),
            num_layers,
            d
        )));
    }
    let mut keys = Vec::with_capacity(num_layers);
    let mut values = Vec::with_capacity(num_layers);
    for l in 0..num_layers {
        let mut key = Matrix::zeros(p, d);
        let mut value = Matrix::zeros(p, d);
        for r in 0..p {
            let row = out.row(r);
            key.row_mut(r).copy_from_slice(&row[l * 2 * d..l * 2 * d + d]);
            value.row_mut(r).copy_from_slice(&row[l * 2 * d + d..(l + 1) * 2 * d]);
        }
        keys.push(key);
        values.push(value);
    }
    Ok(PrefixTensors { keys, values })
}

/// Prepend a layer's prefix rows to attention keys/values and extend the
/// mask with always-on positions. `layer_index` is 1-based. Query length is
/// untouched: prefixes are attended to, never produce outputs.
pub fn apply_prefix(
    layer_index: usize,
    keys: &Matrix,
    values: &Matrix,
    mask: &[u8],
    bank: &PrefixBank,
) -> Result<(Matrix, Matrix, Vec<u8>)> {
    if layer_index == 0 || layer_index > bank.num_layers {
        return Err(Error::input(format!(
            "layer_index {} out of range [1, {}]",
            layer_index, bank.num_layers
        )));
    }
    let tensors = bank.materialize()?;
    let pk = &tensors.keys[layer_index - 1];
    let pv = &tensors.values[layer_index - 1];
    if pk.cols() != keys.cols() {
        return Err(Error::config(format!(
            "prefix width {} does not match key width {}",
            pk.cols(),
            keys.cols()
        )));
    }
    let stack = |prefix: &Matrix, base: &Matrix| {
        let mut data = Vec::with_capacity((prefix.rows() + base.rows()) * base.cols());
        data.extend_from_slice(prefix.data());
        data.extend_from_slice(base.data());
        Matrix::from_vec(prefix.rows() + base.rows(), base.cols(), data)
    };
    let ext_keys = stack(pk, keys)?;
    let ext_values = stack(pv, values)?;
    let mut ext_mask = vec![1u8; bank.config.prefix_len];
    ext_mask.extend_from_slice(mask);
    Ok((ext_keys, ext_values, ext_mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig::tiny(50, 2)
    }

    #[test]
    fn init_shapes_and_determinism() {
        let bank = init_prefix(&cfg(), 4, false, 11).unwrap();
        let t = bank.materialize().unwrap();
        assert_eq!(t.keys.len(), 2);
        assert_eq!(t.keys[0].shape(), (4, 64));
        assert_eq!(t.values[1].shape(), (4, 64));
        let again = init_prefix(&cfg(), 4, false, 11).unwrap();
        assert!(bank.store.bits_identical(&again.store));
    }

    #[test]
    fn prefix_longer_than_sequence_is_rejected() {
        assert!(init_prefix(&cfg(), 17, false, 0).is_err());
    }

    #[test]
    fn zero_encoder_weights_give_zero_prefixes() {
        let mut bank = init_prefix(&cfg(), 3, true, 0).unwrap();
        for name in [REPARAM_W1, REPARAM_W2] {
            let p = bank.store.get_mut(name).unwrap();
            p.value = Matrix::zeros(p.value.rows(), p.value.cols());
        }
        let t = bank.materialize().unwrap();
        assert_eq!(t.keys.len(), 2);
        for m in t.keys.iter().chain(&t.values) {
            assert!(m.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn reparameterize_requires_enabled_bank() {
        let bank = init_prefix(&cfg(), 3, false, 0).unwrap();
        assert!(bank.encoder().is_err());
    }

    #[test]
    fn apply_prefix_extends_mask_and_rows() {
        let bank = init_prefix(&cfg(), 2, false, 5).unwrap();
        let keys = Matrix::zeros(8, 64);
        let values = Matrix::zeros(8, 64);
        let mask = vec![1, 1, 1, 1, 1, 1, 0, 0];
        let (ek, ev, em) = apply_prefix(1, &keys, &values, &mask, &bank).unwrap();
        assert_eq!(ek.shape(), (10, 64));
        assert_eq!(ev.shape(), (10, 64));
        assert_eq!(em.len(), 10);
        let active: usize = em.iter().map(|&m| m as usize).sum();
        assert_eq!(active, 2 + 6);
        assert!(apply_prefix(3, &keys, &values, &mask, &bank).is_err());
    }
}
