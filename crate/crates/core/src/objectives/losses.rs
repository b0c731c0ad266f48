//! Cross entropy (plain and similarity-weighted), loss combination, and
//! softmax-entropy diagnostics.

use crate::autograd::{log_softmax_rows, softmax_rows, Graph, NodeId};
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Mean over examples of `weight_i * (-sum_c y_ic log softmax(logits_i)_c)`.
/// Weights default to 1 and apply per example.
pub fn cross_entropy(
    g: &mut Graph,
    logits: NodeId,
    soft_labels: &Matrix,
    weights: Option<&[f64]>,
) -> Result<NodeId> {
    let (n, c) = g.value(logits).shape();
    if soft_labels.shape() != (n, c) {
        return Err(Error::input(format!(
            "label matrix {}x{} does not match logits {}x{}",
            soft_labels.rows(),
            soft_labels.cols(),
            n,
            c
        )));
    }
    for r in 0..n {
        let s: f64 = soft_labels.row(r).iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(Error::input(format!("label row {r} sums to {s}, expected 1")));
        }
    }
    let w = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(Error::input("one weight per example required".to_string()));
            }
            if w.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::input("weights must lie in [0, 1]".to_string()));
            }
            w.to_vec()
        }
        None => vec![1.0; n],
    };
    let ls = g.log_softmax_rows(logits);
    let y = g.constant(soft_labels.clone());
    let prod = g.mul(ls, y);
    let ones = g.constant(Matrix::from_vec(c, 1, vec![1.0; c]).expect("shape consistent"));
    let row_sums = g.matmul(prod, ones);
    let weighted = g.scale_rows(row_sums, &w);
    let total = g.sum_all(weighted);
    Ok(g.scale(total, -1.0 / n as f64))
}

/// Same computation on plain values, for metrics and oracles.
pub fn cross_entropy_value(
    logits: &Matrix,
    soft_labels: &Matrix,
    weights: Option<&[f64]>,
) -> Result<f64> {
    let mut g = Graph::new();
    let l = g.constant(logits.clone());
    let loss = cross_entropy(&mut g, l, soft_labels, weights)?;
    Ok(g.value(loss).get(0, 0))
}

/// `total = ce + lambda_con * con`.
pub fn combined_loss(
    g: &mut Graph,
    ce: NodeId,
    contrastive: Option<NodeId>,
    lambda_con: f64,
) -> Result<NodeId> {
    if lambda_con < 0.0 {
        return Err(Error::config("lambda_con must be non-negative".to_string()));
    }
    match contrastive {
        Some(con) if lambda_con > 0.0 => {
            let scaled = g.scale(con, lambda_con);
            Ok(g.add(ce, scaled))
        }
        _ => Ok(ce),
    }
}

/// Shannon entropy of each row's softmax, in nats, plus the mean.
pub fn softmax_entropy(logits: &Matrix) -> (Vec<f64>, f64) {
    let probs = softmax_rows(logits);
    let per_example: Vec<f64> = (0..probs.rows())
        .map(|r| {
            probs
                .row(r)
                .iter()
                .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
                .sum()
        })
        .collect();
    let mean = if per_example.is_empty() {
        0.0
    } else {
        per_example.iter().sum::<f64>() / per_example.len() as f64
    };
    (per_example, mean)
}

/// Argmax prediction per row; ties resolve to the lowest class index.
pub fn predictions(logits: &Matrix) -> Vec<usize> {
    (0..logits.rows())
        .map(|r| {
            logits
                .row(r)
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                .0
        })
        .collect()
}

/// Log-probabilities per row, exposed for diagnostics.
pub fn log_probs(logits: &Matrix) -> Matrix {
    log_softmax_rows(logits)
}
