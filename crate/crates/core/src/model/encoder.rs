//! Forward pass of the compact encoder.
//!
//! The pass is built as an autograd graph so the same code path serves
//! training, evaluation, and gradient checking. Prefix tuning enters as
//! extra key/value rows per layer; LoRA as low-rank deltas on the selected
//! attention projections.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autograd::{Graph, NodeId};
use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::model::params::ParameterStore;
use crate::peft::lora::LoraTarget;
use crate::peft::mode::{AdapterHandles, TuningMode};
use crate::peft::prefix as prefix_mod;
use crate::tensor::Matrix;

const LN_EPS: f64 = 1e-5;
const MASK_NEG: f64 = -1e9;

/// Tokenized batch, row-major `[batch_size x seq_len]`.
#[derive(Debug, Clone)]
pub struct TokenBatch {
    pub token_ids: Vec<usize>,
    pub attention_mask: Vec<u8>,
    pub labels: Vec<usize>,
    pub batch_size: usize,
    pub seq_len: usize,
}

impl TokenBatch {
    pub fn validate(&self, config: &ModelConfig) -> Result<()> {
        let expect = self.batch_size * self.seq_len;
        if self.token_ids.len() != expect || self.attention_mask.len() != expect {
            return Err(Error::input(format!(
                "batch buffers must hold {} entries for shape {}x{}",
                expect, self.batch_size, self.seq_len
            )));
        }
        if self.labels.len() != self.batch_size {
            return Err(Error::input("labels must have one entry per example".to_string()));
        }
        if self.seq_len > config.max_seq_len {
            return Err(Error::input(format!(
                "seq_len {} exceeds max_seq_len {}",
                self.seq_len, config.max_seq_len
            )));
        }
        if let Some(&bad) = self.token_ids.iter().find(|&&id| id >= config.vocab_size) {
            return Err(Error::input(format!(
                "token id {bad} outside vocabulary of size {}",
                config.vocab_size
            )));
        }
        if self.attention_mask.iter().any(|&m| m > 1) {
            return Err(Error::input("attention mask must be binary".to_string()));
        }
        for b in 0..self.batch_size {
            let row = &self.attention_mask[b * self.seq_len..(b + 1) * self.seq_len];
            if row.iter().all(|&m| m == 0) {
                return Err(Error::input(format!("example {b} has an all-masked row")));
            }
        }
        Ok(())
    }

    pub fn one_hot_labels(&self, num_classes: usize) -> Result<Matrix> {
        let mut out = Matrix::zeros(self.batch_size, num_classes);
        for (b, &label) in self.labels.iter().enumerate() {
            if label >= num_classes {
                return Err(Error::data(format!(
                    "label {label} outside [0, {num_classes}) at example {b}"
                )));
            }
            out.set(b, label, 1.0);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ForwardOptions {
    /// Enables dropout; requires an RNG.
    pub training: bool,
    /// Keep each layer's hidden state (opt-in to bound memory).
    pub collect_per_layer: bool,
    /// Keep attention probability nodes, ordered (layer, example, head).
    pub collect_attention: bool,
    /// Insert trainable parameters as differentiable leaves.
    pub grads: bool,
}

/// Trainable leaves inserted into the graph, keyed by store name.
#[derive(Debug, Default)]
pub struct Bindings {
    pub model: Vec<(String, NodeId)>,
    pub adapter: Vec<(String, NodeId)>,
}

/// A built forward graph plus the node handles downstream code needs.
pub struct ForwardPass {
    pub graph: Graph,
    pub logits: NodeId,
    pub cls_embedding: NodeId,
    pub pooled_cls: NodeId,
    pub mean_embedding: NodeId,
    pub per_layer_hidden: Option<Vec<NodeId>>,
    pub attention_probs: Option<Vec<NodeId>>,
    pub bindings: Bindings,
}

/// Plain-value outputs of a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardResult {
    pub logits: Matrix,
    pub cls_embedding: Matrix,
    pub pooled_cls: Matrix,
    pub mean_embedding: Matrix,
    /// One `[batch*seq x d]` matrix per layer when requested.
    pub per_layer_hidden: Option<Vec<Matrix>>,
}

struct Builder<'a> {
    g: Graph,
    store: &'a ParameterStore,
    adapter_store: Option<&'a ParameterStore>,
    grads: bool,
    bound: HashMap<(bool, String), NodeId>,
    bindings: Bindings,
}

impl<'a> Builder<'a> {
    fn bind(&mut self, adapter: bool, name: &str) -> Result<NodeId> {
        if let Some(&id) = self.bound.get(&(adapter, name.to_string())) {
            return Ok(id);
        }
        let store = if adapter {
            self.adapter_store
                .ok_or_else(|| Error::config(format!("no adapter store holds {name}")))?
        } else {
            self.store
        };
        let param = store
            .get(name)
            .ok_or_else(|| Error::config(format!("missing parameter: {name}")))?;
        let id = if self.grads && param.trainable {
            let id = self.g.leaf(param.value.clone());
            let slot =
                if adapter { &mut self.bindings.adapter } else { &mut self.bindings.model };
            slot.push((name.to_string(), id));
            id
        } else {
            self.g.constant(param.value.clone())
        };
        self.bound.insert((adapter, name.to_string()), id);
        Ok(id)
    }

    fn model_param(&mut self, name: &str) -> Result<NodeId> {
        self.bind(false, name)
    }

    fn adapter_param(&mut self, name: &str) -> Result<NodeId> {
        self.bind(true, name)
    }
}

fn dropout(
    g: &mut Graph,
    x: NodeId,
    p: f64,
    rng: &mut Option<&mut ChaCha8Rng>,
) -> NodeId {
    let Some(rng) = rng.as_deref_mut() else { return x };
    if p <= 0.0 {
        return x;
    }
    let (m, n) = g.value(x).shape();
    let keep = 1.0 - p;
    let data: Vec<f64> = (0..m * n)
        .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect();
    let mask = g.constant(Matrix::from_vec(m, n, data).expect("shape consistent"));
    g.mul(x, mask)
}

/// Build the full forward graph for a batch.
pub fn build_forward(
    config: &ModelConfig,
    store: &ParameterStore,
    batch: &TokenBatch,
    mode: TuningMode,
    adapters: AdapterHandles<'_>,
    opts: ForwardOptions,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<ForwardPass> {
    config.validate()?;
    batch.validate(config)?;
    adapters.validate_for_mode(mode, config)?;
    if opts.training && rng.is_none() {
        return Err(Error::input("training forward needs an RNG for dropout".to_string()));
    }
    let mut rng = if opts.training { rng.take() } else { None };

    let bsz = batch.batch_size;
    let n = batch.seq_len;
    let d = config.model_dim;
    let heads = config.num_heads;
    let hd = config.head_dim();
    let p_drop = config.hidden_dropout;

    let prefix_bank = adapters.prefix();
    let lora_set = adapters.lora();
    let adapter_store = match (&prefix_bank, &lora_set) {
        (Some(bank), _) => Some(&bank.store),
        (_, Some(set)) => Some(&set.store),
        _ => None,
    };

    let mut b = Builder {
        g: Graph::new(),
        store,
        adapter_store,
        grads: opts.grads,
        bound: HashMap::new(),
        bindings: Bindings::default(),
    };

    // Embeddings: token + learned absolute position, then norm and dropout.
    let token_table = b.model_param("embed.token")?;
    let position_table = b.model_param("embed.position")?;
    let positions: Vec<usize> = (0..bsz).flat_map(|_| 0..n).collect();
    let tok = b.g.embedding_lookup(token_table, &batch.token_ids);
    let pos = b.g.embedding_lookup(position_table, &positions);
    let summed = b.g.add(tok, pos);
    let eg = b.model_param("embed.ln.gamma")?;
    let eb = b.model_param("embed.ln.beta")?;
    let normed = b.g.layer_norm(summed, eg, eb, LN_EPS);
    let mut x = dropout(&mut b.g, normed, p_drop, &mut rng);

    // Per-layer prefix key/value nodes, possibly derived from the raw prompt.
    let prefix_len = prefix_bank.map_or(0, |bank| bank.config.prefix_len);
    let mut prefix_kv: Vec<(NodeId, NodeId)> = Vec::new();
    if let Some(bank) = prefix_bank {
        if prefix_len > 0 {
            if bank.config.reparam_enabled {
                let raw = b.adapter_param(prefix_mod::RAW_PROMPT)?;
                let w1 = b.adapter_param(prefix_mod::REPARAM_W1)?;
                let b1 = b.adapter_param(prefix_mod::REPARAM_B1)?;
                let w2 = b.adapter_param(prefix_mod::REPARAM_W2)?;
                let b2 = b.adapter_param(prefix_mod::REPARAM_B2)?;
                let hidden = b.g.linear(raw, w1, b1);
                let hidden = b.g.tanh(hidden);
                let flat = b.g.linear(hidden, w2, b2);
                for l in 0..config.num_layers {
                    let key = b.g.slice_cols(flat, l * 2 * d, d);
                    let value = b.g.slice_cols(flat, l * 2 * d + d, d);
                    prefix_kv.push((key, value));
                }
            } else {
                for l in 0..config.num_layers {
                    let key = b.adapter_param(&prefix_mod::key_name(l))?;
                    let value = b.adapter_param(&prefix_mod::value_name(l))?;
                    prefix_kv.push((key, value));
                }
            }
        }
    }

    // Additive attention masks per example over (prefix + seq) key positions.
    let key_len = prefix_len + n;
    let mask_nodes: Vec<NodeId> = (0..bsz)
        .map(|ex| {
            let mut row = vec![0.0; key_len];
            for j in 0..n {
                if batch.attention_mask[ex * n + j] == 0 {
                    row[prefix_len + j] = MASK_NEG;
                }
            }
            let data: Vec<f64> = std::iter::repeat_with(|| row.clone()).take(n).flatten().collect();
            b.g.constant(Matrix::from_vec(n, key_len, data).expect("shape consistent"))
        })
        .collect();

    let mut per_layer = Vec::new();
    let mut attention = Vec::new();
    let scale = 1.0 / (hd as f64).sqrt();

    for l in 0..config.num_layers {
        let wq = b.model_param(&format!("layer{l}.attn.wq"))?;
        let bq = b.model_param(&format!("layer{l}.attn.bq"))?;
        let wk = b.model_param(&format!("layer{l}.attn.wk"))?;
        let bk = b.model_param(&format!("layer{l}.attn.bk"))?;
        let wv = b.model_param(&format!("layer{l}.attn.wv"))?;
        let bv = b.model_param(&format!("layer{l}.attn.bv"))?;
        let wo = b.model_param(&format!("layer{l}.attn.wo"))?;
        let bo = b.model_param(&format!("layer{l}.attn.bo"))?;

        let project = |b: &mut Builder, target: LoraTarget, w, bias| -> Result<NodeId> {
            let mut out = b.g.linear(x, w, bias);
            if let Some(set) = lora_set {
                if set.has_target(target) {
                    let a_id = b.adapter_param(&crate::peft::lora::a_name(l, target))?;
                    let b_id = b.adapter_param(&crate::peft::lora::b_name(l, target))?;
                    let low = b.g.matmul_nt(x, a_id);
                    let delta = b.g.matmul_nt(low, b_id);
                    let scaled = b.g.scale(delta, set.config.scaling());
                    out = b.g.add(out, scaled);
                }
            }
            Ok(out)
        };
        let q = project(&mut b, LoraTarget::Query, wq, bq)?;
        let k = project(&mut b, LoraTarget::Key, wk, bk)?;
        let v = project(&mut b, LoraTarget::Value, wv, bv)?;

        // Prefix values are dropout-regularized like other hidden activations.
        let layer_prefix = if prefix_len > 0 {
            let (pk, pv) = prefix_kv[l];
            let pv = dropout(&mut b.g, pv, p_drop, &mut rng);
            Some((pk, pv))
        } else {
            None
        };

        let mut ctx_rows: Option<NodeId> = None;
        for ex in 0..bsz {
            let q_ex = b.g.slice_rows(q, ex * n, n);
            let k_ex = b.g.slice_rows(k, ex * n, n);
            let v_ex = b.g.slice_rows(v, ex * n, n);
            let (k_full, v_full) = match layer_prefix {
                Some((pk, pv)) => {
                    (b.g.concat_rows(pk, k_ex), b.g.concat_rows(pv, v_ex))
                }
                None => (k_ex, v_ex),
            };
            let mut head_ctx = Vec::with_capacity(heads);
            for h in 0..heads {
                let qh = b.g.slice_cols(q_ex, h * hd, hd);
                let kh = b.g.slice_cols(k_full, h * hd, hd);
                let vh = b.g.slice_cols(v_full, h * hd, hd);
                let scores = b.g.matmul_nt(qh, kh);
                let scaled = b.g.scale(scores, scale);
                let masked = b.g.add(scaled, mask_nodes[ex]);
                let probs = b.g.softmax_rows(masked);
                if opts.collect_attention {
                    attention.push(probs);
                }
                head_ctx.push(b.g.matmul(probs, vh));
            }
            let merged = b.g.concat_cols(&head_ctx);
            ctx_rows = Some(match ctx_rows {
                Some(acc) => b.g.concat_rows(acc, merged),
                None => merged,
            });
        }
        let ctx = ctx_rows.expect("batch_size >= 1");
        let attn_out = b.g.linear(ctx, wo, bo);
        let attn_out = dropout(&mut b.g, attn_out, p_drop, &mut rng);
        let res = b.g.add(x, attn_out);
        let ag = b.model_param(&format!("layer{l}.attn.ln.gamma"))?;
        let ab = b.model_param(&format!("layer{l}.attn.ln.beta"))?;
        x = b.g.layer_norm(res, ag, ab, LN_EPS);

        let w1 = b.model_param(&format!("layer{l}.ffn.w1"))?;
        let b1 = b.model_param(&format!("layer{l}.ffn.b1"))?;
        let w2 = b.model_param(&format!("layer{l}.ffn.w2"))?;
        let b2 = b.model_param(&format!("layer{l}.ffn.b2"))?;
        let h1 = b.g.linear(x, w1, b1);
        let h1 = b.g.gelu(h1);
        let h2 = b.g.linear(h1, w2, b2);
        let h2 = dropout(&mut b.g, h2, p_drop, &mut rng);
        let res = b.g.add(x, h2);
        let fg = b.model_param(&format!("layer{l}.ffn.ln.gamma"))?;
        let fb = b.model_param(&format!("layer{l}.ffn.ln.beta"))?;
        x = b.g.layer_norm(res, fg, fb, LN_EPS);

        if opts.collect_per_layer {
            per_layer.push(x);
        }
    }

    // CLS rows sit at position 0 of each example.
    let mut cls: Option<NodeId> = None;
    let mut mean: Option<NodeId> = None;
    for ex in 0..bsz {
        let row = b.g.slice_rows(x, ex * n, 1);
        cls = Some(match cls {
            Some(acc) => b.g.concat_rows(acc, row),
            None => row,
        });

        let ex_mask = &batch.attention_mask[ex * n..(ex + 1) * n];
        let active = ex_mask.iter().map(|&m| m as usize).sum::<usize>();
        let weights: Vec<f64> = ex_mask
            .iter()
            .map(|&m| if m == 1 { 1.0 / active as f64 } else { 0.0 })
            .collect();
        let w = b.g.constant(Matrix::from_vec(1, n, weights).expect("shape consistent"));
        let x_ex = b.g.slice_rows(x, ex * n, n);
        let m_row = b.g.matmul(w, x_ex);
        mean = Some(match mean {
            Some(acc) => b.g.concat_rows(acc, m_row),
            None => m_row,
        });
    }
    let cls = cls.expect("batch_size >= 1");
    let mean = mean.expect("batch_size >= 1");

    let pw = b.model_param("pooler.weight")?;
    let pb = b.model_param("pooler.bias")?;
    let pooled_lin = b.g.linear(cls, pw, pb);
    let pooled = b.g.tanh(pooled_lin);

    let cw = b.model_param("classifier.weight")?;
    let cb = b.model_param("classifier.bias")?;
    let logits = b.g.linear(pooled, cw, cb);

    Ok(ForwardPass {
        graph: b.g,
        logits,
        cls_embedding: cls,
        pooled_cls: pooled,
        mean_embedding: mean,
        per_layer_hidden: opts.collect_per_layer.then_some(per_layer),
        attention_probs: opts.collect_attention.then_some(attention),
        bindings: b.bindings,
    })
}

/// Evaluation-mode forward pass returning plain matrices.
pub fn forward(
    config: &ModelConfig,
    store: &ParameterStore,
    batch: &TokenBatch,
    mode: TuningMode,
    adapters: AdapterHandles<'_>,
    collect_per_layer: bool,
) -> Result<ForwardResult> {
    let pass = build_forward(
        config,
        store,
        batch,
        mode,
        adapters,
        ForwardOptions { collect_per_layer, ..Default::default() },
        None,
    )?;
    let result = ForwardResult {
        logits: pass.graph.value(pass.logits).clone(),
        cls_embedding: pass.graph.value(pass.cls_embedding).clone(),
        pooled_cls: pass.graph.value(pass.pooled_cls).clone(),
        mean_embedding: pass.graph.value(pass.mean_embedding).clone(),
        per_layer_hidden: pass
            .per_layer_hidden
            .map(|ids| ids.iter().map(|&id| pass.graph.value(id).clone()).collect()),
    };
    if !result.logits.is_finite() {
        return Err(Error::Training("forward produced non-finite logits".to_string()));
    }
    Ok(result)
}

/// CLS pooling: linear projection then tanh, mapping into (-1, 1).
pub fn pool_cls(store: &ParameterStore, cls_embedding: &Matrix) -> Result<Matrix> {
    if !cls_embedding.is_finite() {
        return Err(Error::input("pool_cls requires finite input".to_string()));
    }
    let w = store.value("pooler.weight")?;
    let bias = store.value("pooler.bias")?;
    let mut out = cls_embedding.matmul_transposed(w);
    for r in 0..out.rows() {
        let bv = bias.row(0).to_vec();
        for (v, bb) in out.row_mut(r).iter_mut().zip(&bv) {
            *v = (*v + bb).tanh();
        }
    }
    Ok(out)
}

/// Mask-aware average over the sequence axis of `[batch*seq x d]` hidden
/// states; masked positions are excluded.
pub fn mean_embedding(
    last_hidden: &Matrix,
    mask: &[u8],
    batch_size: usize,
    seq_len: usize,
) -> Result<Matrix> {
    if last_hidden.rows() != batch_size * seq_len || mask.len() != batch_size * seq_len {
        return Err(Error::input("hidden state and mask shapes disagree".to_string()));
    }
    let d = last_hidden.cols();
    let mut out = Matrix::zeros(batch_size, d);
    for ex in 0..batch_size {
        let row_mask = &mask[ex * seq_len..(ex + 1) * seq_len];
        let active = row_mask.iter().map(|&m| m as usize).sum::<usize>();
        if active == 0 {
            return Err(Error::input(format!("example {ex} has an all-masked row")));
        }
        for (t, &m) in row_mask.iter().enumerate() {
            if m == 1 {
                let h = last_hidden.row(ex * seq_len + t).to_vec();
                for (o, v) in out.row_mut(ex).iter_mut().zip(&h) {
                    *o += v / active as f64;
                }
            }
        }
    }
    Ok(out)
}
