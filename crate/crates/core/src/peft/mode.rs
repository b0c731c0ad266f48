//! Tuning modes and the backbone-freezing contract.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::model::params::{head_parameter_count, is_backbone_name, ParameterStore};
use crate::peft::lora::{LoraAdapterSet, LoraConfig};
use crate::peft::prefix::{PrefixBank, PrefixConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningMode {
    FineTune,
    Prefix,
    Lora,
    FrozenProbe,
}

impl FromStr for TuningMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "finetune" | "fine_tune" | "ft" => Ok(TuningMode::FineTune),
            "prefix" => Ok(TuningMode::Prefix),
            "lora" => Ok(TuningMode::Lora),
            "probe" | "frozen_probe" => Ok(TuningMode::FrozenProbe),
            other => Err(Error::config(format!("unknown tuning mode: {other}"))),
        }
    }
}

impl fmt::Display for TuningMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TuningMode::FineTune => "finetune",
            TuningMode::Prefix => "prefix",
            TuningMode::Lora => "lora",
            TuningMode::FrozenProbe => "probe",
        };
        f.write_str(s)
    }
}

/// Adapter structures accompanying a forward pass. Must agree with the mode.
#[derive(Clone, Copy, Default)]
pub enum AdapterHandles<'a> {
    #[default]
    None,
    Prefix(&'a PrefixBank),
    Lora(&'a LoraAdapterSet),
}

impl<'a> AdapterHandles<'a> {
    pub fn prefix(&self) -> Option<&'a PrefixBank> {
        match self {
            AdapterHandles::Prefix(bank) => Some(bank),
            _ => None,
        }
    }

    pub fn lora(&self) -> Option<&'a LoraAdapterSet> {
        match self {
            AdapterHandles::Lora(set) => Some(set),
            _ => None,
        }
    }

    pub fn validate_for_mode(&self, mode: TuningMode, config: &ModelConfig) -> Result<()> {
        match (mode, self) {
            (TuningMode::Prefix, AdapterHandles::Prefix(bank)) => bank.validate_against(config),
            (TuningMode::Lora, AdapterHandles::Lora(set)) => set.validate_against(config),
            (TuningMode::Prefix, _) => {
                Err(Error::config("prefix mode requires a PrefixBank".to_string()))
            }
            (TuningMode::Lora, _) => {
                Err(Error::config("lora mode requires a LoraAdapterSet".to_string()))
            }
            (_, AdapterHandles::None) => Ok(()),
            _ => Err(Error::config(format!("mode {mode} does not take adapters"))),
        }
    }
}

/// Set trainable flags to match the mode. Values are never touched.
///
/// Fine-tuning trains everything; prefix and LoRA train their adapters (held
/// in separate stores, always trainable) plus pooler and classification head;
/// the frozen probe trains pooler and head only.
pub fn freeze_backbone(store: &mut ParameterStore, mode: TuningMode) {
    match mode {
        TuningMode::FineTune => store.set_all_trainable(true),
        TuningMode::Prefix | TuningMode::Lora | TuningMode::FrozenProbe => {
            let names: Vec<String> = store.iter().map(|(n, _)| n.to_string()).collect();
            for name in names {
                let trainable = !is_backbone_name(&name);
                store.set_trainable(&name, trainable).expect("name exists");
            }
        }
    }
}

fn backbone_parameter_count(config: &ModelConfig) -> usize {
    let d = config.model_dim;
    let ff = config.ff_dim;
    let embed = config.vocab_size * d + config.max_seq_len * d + 2 * d;
    let attn = 4 * d * d + 4 * d + 2 * d;
    let ffn = ff * d + ff + d * ff + d + 2 * d;
    embed + config.num_layers * (attn + ffn)
}

/// Trainable-parameter count per mode, from the configuration alone.
///
/// Prefix without reparameterization is `L*p*2d + head`; with it the raw
/// prompt and encoder are what the optimizer sees, so the count is
/// `p*d + encoder + head`. LoRA is `sum over targets of r*(d_in + d_out) +
/// head`. "Head" covers the pooler and the classification layer.
pub fn count_trainable_parameters(
    mode: TuningMode,
    config: &ModelConfig,
    prefix: Option<&PrefixConfig>,
    lora: Option<&LoraConfig>,
) -> Result<usize> {
    config.validate()?;
    let d = config.model_dim;
    let head = head_parameter_count(config);
    match mode {
        TuningMode::FineTune => Ok(backbone_parameter_count(config) + head),
        TuningMode::FrozenProbe => Ok(head),
        TuningMode::Prefix => {
            let pc = prefix
                .ok_or_else(|| Error::config("prefix mode needs a PrefixConfig".to_string()))?;
            let adapter = if pc.reparam_enabled {
                let hidden = pc.reparam_hidden;
                let out = config.num_layers * 2 * d;
                pc.prefix_len * d + hidden * d + hidden + out * hidden + out
            } else {
                config.num_layers * pc.prefix_len * 2 * d
            };
            Ok(adapter + head)
        }
        TuningMode::Lora => {
            let lc =
                lora.ok_or_else(|| Error::config("lora mode needs a LoraConfig".to_string()))?;
            let per_layer: usize = lc.targets.len() * lc.rank * (d + d);
            Ok(config.num_layers * per_layer + head)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::init_backbone;
    use crate::peft::lora::{init_lora, LoraTarget};
    use crate::peft::prefix::init_prefix;

    fn cfg() -> ModelConfig {
        ModelConfig::tiny(50, 2)
    }

    #[test]
    fn lora_formula_examples() {
        // one 64x64 target at r=8 counts 8*(64+64) adapter values
        let mut one_layer = cfg();
        one_layer.num_layers = 1;
        let lc = LoraConfig { rank: 8, alpha: 8.0, targets: vec![LoraTarget::Query] };
        let n = count_trainable_parameters(TuningMode::Lora, &one_layer, None, Some(&lc)).unwrap();
        assert_eq!(n, 8 * 128 + head_parameter_count(&one_layer));
    }

    #[test]
    fn prefix_formula_example() {
        // L=2, p=4, d=64, no reparameterization: 2*4*2*64 prefix values
        let pc = PrefixConfig { prefix_len: 4, reparam_enabled: false, ..Default::default() };
        let n = count_trainable_parameters(TuningMode::Prefix, &cfg(), Some(&pc), None).unwrap();
        assert_eq!(n, 1024 + head_parameter_count(&cfg()));
    }

    #[test]
    fn counts_match_store_enumeration() {
        let config = cfg();
        let mut store = init_backbone(&config, 0).unwrap();

        freeze_backbone(&mut store, TuningMode::FineTune);
        let fine = count_trainable_parameters(TuningMode::FineTune, &config, None, None).unwrap();
        assert_eq!(store.trainable_value_count(), fine);

        freeze_backbone(&mut store, TuningMode::FrozenProbe);
        let probe =
            count_trainable_parameters(TuningMode::FrozenProbe, &config, None, None).unwrap();
        assert_eq!(store.trainable_value_count(), probe);

        freeze_backbone(&mut store, TuningMode::Prefix);
        let bank = init_prefix(&config, 6, false, 1).unwrap();
        let pc = bank.config.clone();
        let prefix = count_trainable_parameters(TuningMode::Prefix, &config, Some(&pc), None).unwrap();
        assert_eq!(
            store.trainable_value_count() + bank.store.trainable_value_count(),
            prefix
        );

        freeze_backbone(&mut store, TuningMode::Lora);
        let set = init_lora(&config, 8, 8.0, &[LoraTarget::Query, LoraTarget::Value], 1).unwrap();
        let lora =
            count_trainable_parameters(TuningMode::Lora, &config, None, Some(&set.config)).unwrap();
        assert_eq!(store.trainable_value_count() + set.store.trainable_value_count(), lora);
    }

    #[test]
    fn reparam_counts_enumerate_raw_prompt_and_encoder() {
        let config = cfg();
        let bank = init_prefix(&config, 4, true, 1).unwrap();
        let pc = bank.config.clone();
        let total =
            count_trainable_parameters(TuningMode::Prefix, &config, Some(&pc), None).unwrap();
        assert_eq!(
            total,
            bank.store.trainable_value_count() + head_parameter_count(&config)
        );
    }

    #[test]
    fn trainable_fraction_ordering() {
        let config = cfg();
        let probe = count_trainable_parameters(TuningMode::FrozenProbe, &config, None, None).unwrap();
        let pc = PrefixConfig { prefix_len: 4, reparam_enabled: false, ..Default::default() };
        let prefix = count_trainable_parameters(TuningMode::Prefix, &config, Some(&pc), None).unwrap();
        let lc = LoraConfig::default();
        let lora = count_trainable_parameters(TuningMode::Lora, &config, None, Some(&lc)).unwrap();
        let fine = count_trainable_parameters(TuningMode::FineTune, &config, None, None).unwrap();
        assert!(probe < prefix && prefix < fine);
        assert!(probe < lora && lora < fine);
    }

    #[test]
    fn adapters_must_match_mode() {
        let config = cfg();
        let bank = init_prefix(&config, 2, false, 0).unwrap();
        let handles = AdapterHandles::Prefix(&bank);
        assert!(handles.validate_for_mode(TuningMode::Prefix, &config).is_ok());
        assert!(handles.validate_for_mode(TuningMode::Lora, &config).is_err());
        assert!(handles.validate_for_mode(TuningMode::FineTune, &config).is_err());
        assert!(AdapterHandles::None.validate_for_mode(TuningMode::Prefix, &config).is_err());
        assert!(AdapterHandles::None.validate_for_mode(TuningMode::FineTune, &config).is_ok());
    }
}
