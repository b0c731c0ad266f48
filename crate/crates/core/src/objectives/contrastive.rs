//! Supervised NT-Xent-style contrastive loss over CLS embeddings.
//!
//! Each batch slot holds a positive pair from one class and two cross-class
//! pairs built from independently sampled other-class examples. The loss is
//! a temperature-scaled softmax over the three cosine similarities.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::{Graph, NodeId};
use crate::error::{Error, Result};
use crate::tensor::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveConfig {
    pub enabled: bool,
    /// Softmax temperature; the high default keeps the score distribution soft.
    pub temperature: f64,
    /// Weight of the contrastive term in the combined loss.
    pub lambda_con: f64,
}

impl Default for ContrastiveConfig {
    fn default() -> Self {
        ContrastiveConfig { enabled: false, temperature: 0.9, lambda_con: 0.2 }
    }
}

impl ContrastiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.temperature <= 0.0 {
            return Err(Error::config("contrastive temperature must be positive"));
        }
        if self.lambda_con < 0.0 {
            return Err(Error::config("lambda_con must be non-negative"));
        }
        Ok(())
    }
}

/// Indices into the batch: anchor `a` and positive `a_hat` share a class;
/// `b` and `b_hat` are drawn from other classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContrastiveSlot {
    pub anchor: usize,
    pub positive: usize,
    pub neg_for_anchor: usize,
    pub neg_for_positive: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ContrastiveBatch {
    pub slots: Vec<ContrastiveSlot>,
}

impl ContrastiveBatch {
    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

/// Sample one slot per batch position. Returns `None` when no class has two
/// members or everything shares one class; callers then skip the term.
pub fn sample_contrastive_pairs(
    labels: &[usize],
    rng: &mut impl Rng,
) -> Option<ContrastiveBatch> {
    let n = labels.len();
    let mut eligible_anchors: Vec<usize> = Vec::new();
    for (i, &class) in labels.iter().enumerate() {
        let same = labels.iter().filter(|&&c| c == class).count();
        let other = n - same;
        if same >= 2 && other >= 1 {
            eligible_anchors.push(i);
        }
    }
    if eligible_anchors.is_empty() {
        return None;
    }
    let mut slots = Vec::with_capacity(n);
    for _ in 0..n {
        let &anchor = eligible_anchors.choose(rng).expect("non-empty");
        let class = labels[anchor];
        let positives: Vec<usize> = (0..n).filter(|&j| j != anchor && labels[j] == class).collect();
        let negatives: Vec<usize> = (0..n).filter(|&j| labels[j] != class).collect();
        let &positive = positives.choose(rng).expect("anchor class has two members");
        let &neg_for_anchor = negatives.choose(rng).expect("another class exists");
        let &neg_for_positive = negatives.choose(rng).expect("another class exists");
        slots.push(ContrastiveSlot { anchor, positive, neg_for_anchor, neg_for_positive });
    }
    Some(ContrastiveBatch { slots })
}

fn cosine_node(g: &mut Graph, u: NodeId, v: NodeId) -> NodeId {
    let dot = g.matmul_nt(u, v);
    let uu = g.mul(u, u);
    let su = g.sum_all(uu);
    let nu = g.sqrt(su);
    let vv = g.mul(v, v);
    let sv = g.sum_all(vv);
    let nv = g.sqrt(sv);
    let part = g.div_scalar_node(dot, nu);
    g.div_scalar_node(part, nv)
}

/// `L = -(1/N) sum_i log( e^{s(a,a^)/t} / (e^{s(a,a^)/t} + e^{s(a,b^)/t} + e^{s(a^,b)/t}) )`
/// with cosine similarity. Strictly positive for any finite inputs.
pub fn ntxent_contrastive(
    g: &mut Graph,
    embeddings: NodeId,
    batch: &ContrastiveBatch,
    temperature: f64,
) -> Result<NodeId> {
    if temperature <= 0.0 {
        return Err(Error::config("contrastive temperature must be positive"));
    }
    if batch.is_empty() {
        return Err(Error::input("contrastive batch has no slots".to_string()));
    }
    let n_rows = g.value(embeddings).rows();
    for slot in &batch.slots {
        for idx in [slot.anchor, slot.positive, slot.neg_for_anchor, slot.neg_for_positive] {
            if idx >= n_rows {
                return Err(Error::input(format!("slot index {idx} outside batch")));
            }
        }
    }
    {
        let value = g.value(embeddings);
        for r in 0..n_rows {
            let norm: f64 = value.row(r).iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::input(format!("embedding row {r} has zero norm")));
            }
            if !value.row(r).iter().all(|v| v.is_finite()) {
                return Err(Error::input(format!("embedding row {r} is not finite")));
            }
        }
    }

    let inv_t = 1.0 / temperature;
    let mut total: Option<NodeId> = None;
    for slot in &batch.slots {
        let a = g.slice_rows(embeddings, slot.anchor, 1);
        let a_hat = g.slice_rows(embeddings, slot.positive, 1);
        let b_hat = g.slice_rows(embeddings, slot.neg_for_anchor, 1);
        let b = g.slice_rows(embeddings, slot.neg_for_positive, 1);

        let s_pos = cosine_node(g, a, a_hat);
        let s_neg_a = cosine_node(g, a, b_hat);
        let s_neg_p = cosine_node(g, a_hat, b);

        let e_pos_arg = g.scale(s_pos, inv_t);
        let e_pos = g.exp(e_pos_arg);
        let e_na_arg = g.scale(s_neg_a, inv_t);
        let e_na = g.exp(e_na_arg);
        let e_np_arg = g.scale(s_neg_p, inv_t);
        let e_np = g.exp(e_np_arg);
        let partial = g.add(e_pos, e_na);
        let denom = g.add(partial, e_np);
        let log_denom = g.ln(denom);
        // -log(e^{s+}/denom) = log(denom) - s+/t
        let term = g.sub(log_denom, e_pos_arg);
        total = Some(match total {
            Some(acc) => g.add(acc, term),
            None => term,
        });
    }
    let sum = total.expect("non-empty batch");
    Ok(g.scale(sum, 1.0 / batch.slots.len() as f64))
}

/// Closed-form value from three similarities, used as the scalar oracle.
pub fn ntxent_from_similarities(s_pos: f64, s_neg_a: f64, s_neg_p: f64, temperature: f64) -> f64 {
    let e_pos = (s_pos / temperature).exp();
    let e_na = (s_neg_a / temperature).exp();
    let e_np = (s_neg_p / temperature).exp();
    -(e_pos / (e_pos + e_na + e_np)).ln()
}

/// Convenience wrapper computing the loss value for plain embeddings.
pub fn ntxent_value(
    embeddings: &Matrix,
    batch: &ContrastiveBatch,
    temperature: f64,
) -> Result<f64> {
    let mut g = Graph::new();
    let e = g.constant(embeddings.clone());
    let loss = ntxent_contrastive(&mut g, e, batch, temperature)?;
    Ok(g.value(loss).get(0, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_slot() -> ContrastiveBatch {
        ContrastiveBatch {
            slots: vec![ContrastiveSlot {
                anchor: 0,
                positive: 1,
                neg_for_anchor: 2,
                neg_for_positive: 3,
            }],
        }
    }

    #[test]
    fn equal_similarities_give_ln3() {
        // all four rows identical: every cosine is 1
        let e = Matrix::from_rows(&[
            vec![1.0, 2.0],
            vec![1.0, 2.0],
            vec![1.0, 2.0],
            vec![1.0, 2.0],
        ])
        .unwrap();
        let loss = ntxent_value(&e, &single_slot(), 0.9).unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn opposed_negatives_match_scalar_oracle() {
        // positives aligned, negatives exactly opposite: s+ = 1, s- = -1
        let e = Matrix::from_rows(&[
            vec![0.5, 0.0],
            vec![2.0, 0.0],
            vec![-1.0, 0.0],
            vec![-3.0, 0.0],
        ])
        .unwrap();
        let loss = ntxent_value(&e, &single_slot(), 0.9).unwrap();
        let expected = ntxent_from_similarities(1.0, -1.0, -1.0, 0.9);
        assert!((loss - expected).abs() < 1e-12);
        // same thing written out: ln(1 + 2 e^{-2/0.9})
        assert!((expected - (1.0 + 2.0 * (-2.0 / 0.9f64).exp()).ln()).abs() < 1e-12);
    }

    #[test]
    fn loss_decreases_as_positive_similarity_rises() {
        let mut last = f64::INFINITY;
        for step in 0..20 {
            let s = -0.95 + step as f64 * 0.1;
            let loss = ntxent_from_similarities(s, -0.2, -0.2, 0.9);
            assert!(loss < last, "loss must strictly decrease, got {loss} after {last}");
            assert!(loss > 0.0);
            last = loss;
        }
    }

    #[test]
    fn loss_is_scale_invariant_in_each_embedding() {
        let base = Matrix::from_rows(&[
            vec![0.3, -1.0, 0.2],
            vec![0.5, -0.8, 0.1],
            vec![-0.7, 0.2, 0.9],
            vec![0.1, 0.4, -0.6],
        ])
        .unwrap();
        let reference = ntxent_value(&base, &single_slot(), 0.9).unwrap();
        for (row, factor) in [(0usize, 3.0), (1, 0.25), (2, 10.0), (3, 7.5)] {
            let mut scaled = base.clone();
            for v in scaled.row_mut(row) {
                *v *= factor;
            }
            let loss = ntxent_value(&scaled, &single_slot(), 0.9).unwrap();
            assert!((loss - reference).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_norm_embedding_is_input_error() {
        let e = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        assert!(matches!(ntxent_value(&e, &single_slot(), 0.9), Err(Error::Input(_))));
    }

    #[test]
    fn sampling_respects_class_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let labels = vec![0, 0, 1, 1];
        let batch = sample_contrastive_pairs(&labels, &mut rng).unwrap();
        assert_eq!(batch.slots.len(), 4);
        for slot in &batch.slots {
            assert_eq!(labels[slot.anchor], labels[slot.positive]);
            assert_ne!(slot.anchor, slot.positive);
            assert_ne!(labels[slot.neg_for_anchor], labels[slot.anchor]);
            assert_ne!(labels[slot.neg_for_positive], labels[slot.anchor]);
        }
    }

    #[test]
    fn degenerate_batches_return_empty_signal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(sample_contrastive_pairs(&[1, 1, 1], &mut rng).is_none());
        assert!(sample_contrastive_pairs(&[0], &mut rng).is_none());
        // a lone example of a second class is a negative but cannot anchor
        assert!(sample_contrastive_pairs(&[0, 1], &mut rng).is_none());
    }

    #[test]
    fn three_zero_one_split_enumerated() {
        // with classes [0,0,0,1] every anchor sits in class 0 and every
        // negative is example 3
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let labels = vec![0, 0, 0, 1];
        for _ in 0..10 {
            let batch = sample_contrastive_pairs(&labels, &mut rng).unwrap();
            for slot in &batch.slots {
                assert_eq!(labels[slot.anchor], 0);
                assert_eq!(labels[slot.positive], 0);
                assert_eq!(slot.neg_for_anchor, 3);
                assert_eq!(slot.neg_for_positive, 3);
            }
        }
    }
}
