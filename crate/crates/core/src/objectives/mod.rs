//! Loss machinery: cross entropy, latent mixup, the supervised contrastive
//! term, and softmax-entropy diagnostics.

pub mod contrastive;
pub mod losses;
pub mod mixup;

pub use contrastive::{
    ntxent_contrastive, ntxent_from_similarities, ntxent_value, sample_contrastive_pairs,
    ContrastiveBatch, ContrastiveConfig, ContrastiveSlot,
};
pub use losses::{combined_loss, cross_entropy, cross_entropy_value, predictions, softmax_entropy};
pub use mixup::{mix_rows, mixup_pairs, MixupBatch, MixupConfig, MixupTap};
