//! Latent mixup over sentence embeddings: random pairs interpolated with
//! a per-pair Beta-distributed mixing ratio, labels mixed to match.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::autograd::{Graph, NodeId};
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Which representation mixup interpolates. Fine-tuning mixes the raw CLS
/// vector; prefix-style runs mix the pooled (linear+tanh) version.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixupTap {
    /// Pick by tuning mode: raw CLS for fine-tuning, pooled otherwise.
    #[default]
    Auto,
    RawCls,
    PooledCls,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixupConfig {
    pub enabled: bool,
    /// Beta(alpha, alpha) hyperparameter; 1.0 gives a uniform mixing ratio.
    pub beta_alpha: f64,
    pub tap: MixupTap,
}

impl Default for MixupConfig {
    fn default() -> Self {
        MixupConfig { enabled: false, beta_alpha: 1.0, tap: MixupTap::Auto }
    }
}

impl MixupConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beta_alpha <= 0.0 {
            return Err(Error::config("mixup beta_alpha must be positive"));
        }
        Ok(())
    }
}

/// One mixed batch: `mixed` holds the interpolated embeddings in-graph,
/// labels and lambdas stay plain since only embeddings need gradients.
pub struct MixupBatch {
    pub mixed: NodeId,
    pub mixed_labels: Matrix,
    pub lambdas: Vec<f64>,
    pub pairs: Vec<(usize, usize)>,
}

/// Draw a fixed-point-free permutation: slot `i` pairs with `perm[i] != i`.
pub fn sample_pairs(n: usize, rng: &mut impl Rng) -> Result<Vec<(usize, usize)>> {
    if n < 2 {
        return Err(Error::input("mixup needs at least two examples".to_string()));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        perm.shuffle(rng);
        if perm.iter().enumerate().all(|(i, &j)| i != j) {
            break;
        }
    }
    Ok((0..n).map(|i| (i, perm[i])).collect())
}

pub fn sample_lambdas(n: usize, beta_alpha: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let beta = Beta::new(beta_alpha, beta_alpha)
        .map_err(|e| Error::config(format!("invalid Beta parameter: {e}")))?;
    Ok((0..n).map(|_| beta.sample(rng)).collect())
}

/// Plain interpolation `lambda * x_i + (1 - lambda) * x_j` row by row.
pub fn mix_rows(x: &Matrix, pairs: &[(usize, usize)], lambdas: &[f64]) -> Matrix {
    let mut out = Matrix::zeros(pairs.len(), x.cols());
    for (slot, (&(i, j), &lam)) in pairs.iter().zip(lambdas).enumerate() {
        let xi = x.row(i).to_vec();
        let xj = x.row(j).to_vec();
        for (c, o) in out.row_mut(slot).iter_mut().enumerate() {
            *o = lam * xi[c] + (1.0 - lam) * xj[c];
        }
    }
    out
}

/// Build the interpolated embedding node and mixed soft labels for a batch.
pub fn mixup_pairs(
    g: &mut Graph,
    embeddings: NodeId,
    labels_onehot: &Matrix,
    cfg: &MixupConfig,
    rng: &mut impl Rng,
) -> Result<MixupBatch> {
    cfg.validate()?;
    let n = g.value(embeddings).rows();
    if labels_onehot.rows() != n {
        return Err(Error::input("one label row per embedding required".to_string()));
    }
    let pairs = sample_pairs(n, rng)?;
    let lambdas = sample_lambdas(n, cfg.beta_alpha, rng)?;

    // x_perm = P x via a constant permutation matrix, then two row scalings.
    let mut perm = Matrix::zeros(n, n);
    for &(i, j) in &pairs {
        perm.set(i, j, 1.0);
    }
    let p = g.constant(perm);
    let x_perm = g.matmul(p, embeddings);
    let own = g.scale_rows(embeddings, &lambdas);
    let other_w: Vec<f64> = lambdas.iter().map(|l| 1.0 - l).collect();
    let other = g.scale_rows(x_perm, &other_w);
    let mixed = g.add(own, other);

    let mixed_labels = mix_rows(labels_onehot, &pairs, &lambdas);
    Ok(MixupBatch { mixed, mixed_labels, lambdas, pairs })
}
