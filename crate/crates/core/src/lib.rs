//! Desk-scale lab for parameter-efficient tuning of a compact transformer
//! encoder, text data augmentation, and embedding-geometry analysis.

pub mod augment;
pub mod autograd;
pub mod data;
pub mod error;
pub mod model;
pub mod objectives;
pub mod peft;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Matrix;
