//! Word-level vocabulary with reserved control ids.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::data::tokenize::segment_words;
use crate::data::RawExample;
use crate::error::{Error, Result};

pub const CLS_ID: usize = 0;
pub const SEP_ID: usize = 1;
pub const PAD_ID: usize = 2;
pub const UNK_ID: usize = 3;

const RESERVED: [&str; 4] = ["[CLS]", "[SEP]", "[PAD]", "[UNK]"];

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, usize>,
    id_to_token: Vec<String>,
}

impl Vocabulary {
    /// Build from the training split only. Tokens are ordered by descending
    /// frequency with a lexicographic tiebreak, so two builds over the same
    /// corpus are identical.
    pub fn build(train: &[RawExample]) -> Self {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for ex in train {
            for word in segment_words(&ex.primary) {
                *counts.entry(word.to_lowercase()).or_insert(0) += 1;
            }
            if let Some(sec) = &ex.secondary {
                for word in segment_words(sec) {
                    *counts.entry(word.to_lowercase()).or_insert(0) += 1;
                }
            }
        }
        let mut ordered: Vec<(String, usize)> = counts.into_iter().collect();
        ordered.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

        let mut id_to_token: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        id_to_token.extend(ordered.into_iter().map(|(t, _)| t));
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { token_to_id, id_to_token }
    }

    pub fn lookup(&self, token: &str) -> usize {
        self.token_to_id.get(&token.to_lowercase()).copied().unwrap_or(UNK_ID)
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.id_to_token.get(id).map(String::as_str)
    }

    /// One `token\tid` line per entry, in id order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for (id, token) in self.id_to_token.iter().enumerate() {
            writeln!(w, "{token}\t{id}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut id_to_token = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (token, id) = line.split_once('\t').ok_or(Error::Parse {
                line: idx + 1,
                msg: "expected token\\tid".to_string(),
            })?;
            let id: usize = id.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("bad id: {id}"),
            })?;
            if id != id_to_token.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("ids must be contiguous; expected {}", id_to_token.len()),
                });
            }
            id_to_token.push(token.to_string());
        }
        if id_to_token.len() < RESERVED.len() {
            return Err(Error::Data("vocabulary file lacks reserved entries".to_string()));
        }
        let token_to_id =
            id_to_token.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Vocabulary { token_to_id, id_to_token })
    }
}
