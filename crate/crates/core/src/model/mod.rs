//! The compact transformer encoder: configuration, parameter store,
//! forward pass, and checkpoint serialization.

pub mod checkpoint;
pub mod config;
pub mod encoder;
pub mod params;

pub use config::ModelConfig;
pub use encoder::{
    build_forward, forward, mean_embedding, pool_cls, Bindings, ForwardOptions, ForwardPass,
    ForwardResult, TokenBatch,
};
pub use params::{head_parameter_count, init_backbone, Param, ParameterStore};
