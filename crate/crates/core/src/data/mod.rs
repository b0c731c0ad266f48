//! Dataset ingestion, vocabulary construction, tokenization, splits, and
//! the bundled synthetic tasks.

pub mod jsonl;
pub mod split;
pub mod synthetic;
pub mod tokenize;
pub mod vocab;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use jsonl::{load_jsonl, write_jsonl};
pub use split::make_downsampled_split;
pub use tokenize::{batch_examples, segment_words, tokenize_example};
pub use vocab::Vocabulary;

/// One labelled training example. `primary` is the first input (premise or
/// full sentence); `secondary` carries the hypothesis for pair tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawExample {
    pub id: String,
    pub primary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary: Option<String>,
    pub label: usize,
}

impl RawExample {
    pub fn new(id: impl Into<String>, primary: impl Into<String>, label: usize) -> Self {
        RawExample { id: id.into(), primary: primary.into(), secondary: None, label }
    }

    pub fn validate(&self) -> Result<()> {
        if self.primary.trim().is_empty() {
            return Err(Error::input(format!("example {} has empty primary text", self.id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    SingleSentence,
    SentencePair,
}

/// Where a dataset's examples come from: bundled generator or user JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Builtin { name: String },
    Files { train_path: PathBuf, val_path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub task: TaskKind,
    pub source: DatasetSource,
    pub max_seq_len: usize,
    pub class_names: Vec<String>,
}

impl DatasetSpec {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_names.len() < 2 {
            return Err(Error::config("a dataset needs at least two classes"));
        }
        if self.max_seq_len < 2 {
            return Err(Error::config("dataset max_seq_len must be at least 2"));
        }
        if let DatasetSource::Files { train_path, val_path } = &self.source {
            for path in [train_path, val_path] {
                if !path.exists() {
                    return Err(Error::config(format!(
                        "dataset file does not exist: {}",
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Load (train, val) examples from the configured source.
    pub fn load(&self, seed: u64) -> Result<(Vec<RawExample>, Vec<RawExample>)> {
        match &self.source {
            DatasetSource::Builtin { name } => synthetic::builtin_examples(name, seed),
            DatasetSource::Files { train_path, val_path } => {
                let train = load_jsonl(train_path, Some(self.num_classes()))?;
                let val = load_jsonl(val_path, Some(self.num_classes()))?;
                Ok((train, val))
            }
        }
    }
}
