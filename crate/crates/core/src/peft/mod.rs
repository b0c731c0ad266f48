//! Parameter-efficient tuning mechanisms: deep prefix tuning and LoRA,
//! plus the backbone-freezing contract.

pub mod lora;
pub mod mode;
pub mod prefix;

pub use lora::{init_lora, lora_project, LoraAdapterSet, LoraConfig, LoraTarget};
pub use mode::{count_trainable_parameters, freeze_backbone, AdapterHandles, TuningMode};
pub use prefix::{apply_prefix, init_prefix, reparameterize, PrefixBank, PrefixConfig};
