//! Word segmentation and CLS-first tokenization.

use crate::data::vocab::{Vocabulary, CLS_ID, PAD_ID, SEP_ID};
use crate::data::RawExample;
use crate::error::{Error, Result};
use crate::model::encoder::TokenBatch;

/// Whitespace split with punctuation detached into its own tokens.
pub fn segment_words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut word = String::new();
        for ch in chunk.chars() {
            if ch.is_alphanumeric() || ch == '\'' || ch == '-' {
                word.push(ch);
            } else {
                if !word.is_empty() {
                    out.push(std::mem::take(&mut word));
                }
                out.push(ch.to_string());
            }
        }
        if !word.is_empty() {
            out.push(word);
        }
    }
    out
}

/// Layout: `[CLS] primary [SEP] secondary? [SEP] padding`, hard-truncated to
/// `max_seq_len`. CLS and at least the first content token always survive.
pub fn tokenize_example(
    ex: &RawExample,
    vocab: &Vocabulary,
    max_seq_len: usize,
) -> Result<(Vec<usize>, Vec<u8>)> {
    ex.validate()?;
    let mut ids = vec![CLS_ID];
    for word in segment_words(&ex.primary) {
        ids.push(vocab.lookup(&word));
    }
    ids.push(SEP_ID);
    if let Some(sec) = &ex.secondary {
        for word in segment_words(sec) {
            ids.push(vocab.lookup(&word));
        }
        ids.push(SEP_ID);
    }
    ids.truncate(max_seq_len);
    let mut mask = vec![1u8; ids.len()];
    while ids.len() < max_seq_len {
        ids.push(PAD_ID);
        mask.push(0);
    }
    Ok((ids, mask))
}

/// Tokenize a slice of examples into one batch.
pub fn batch_examples(
    examples: &[&RawExample],
    vocab: &Vocabulary,
    max_seq_len: usize,
) -> Result<TokenBatch> {
    if examples.is_empty() {
        return Err(Error::input("cannot batch zero examples".to_string()));
    }
    let mut token_ids = Vec::with_capacity(examples.len() * max_seq_len);
    let mut attention_mask = Vec::with_capacity(examples.len() * max_seq_len);
    let mut labels = Vec::with_capacity(examples.len());
    for ex in examples {
        let (ids, mask) = tokenize_example(ex, vocab, max_seq_len)?;
        token_ids.extend(ids);
        attention_mask.extend(mask);
        labels.push(ex.label);
    }
    Ok(TokenBatch {
        token_ids,
        attention_mask,
        labels,
        batch_size: examples.len(),
        seq_len: max_seq_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segmentation_detaches_punctuation() {
        assert_eq!(segment_words("hello, world!"), vec!["hello", ",", "world", "!"]);
        assert_eq!(segment_words("it's fine-grained"), vec!["it's", "fine-grained"]);
        assert_eq!(segment_words("  spaced   out  "), vec!["spaced", "out"]);
    }

    #[test]
    fn single_sentence_layout() {
        let vocab = Vocabulary::build(&[RawExample::new("1", "a b", 0)]);
        let a = vocab.lookup("a");
        let b = vocab.lookup("b");
        let ex = RawExample::new("x", "a b", 0);
        let (ids, mask) = tokenize_example(&ex, &vocab, 8).unwrap();
        assert_eq!(ids, vec![CLS_ID, a, b, SEP_ID, PAD_ID, PAD_ID, PAD_ID, PAD_ID]);
        assert_eq!(mask, vec![1, 1, 1, 1, 0, 0, 0, 0]);
    }

    #[test]
    fn pair_layout_has_two_separators() {
        let vocab = Vocabulary::build(&[RawExample::new("1", "a b c d", 0)]);
        let ex = RawExample {
            id: "x".into(),
            primary: "a b".into(),
            secondary: Some("c d".into()),
            label: 0,
        };
        let (ids, mask) = tokenize_example(&ex, &vocab, 10).unwrap();
        let seps = ids.iter().filter(|&&id| id == SEP_ID).count();
        assert_eq!(seps, 2);
        let active = mask.iter().filter(|&&m| m == 1).count();
        assert_eq!(active, 7); // CLS a b SEP c d SEP
    }

    #[test]
    fn long_input_truncates_to_exact_length() {
        let vocab = Vocabulary::build(&[RawExample::new("1", "w", 0)]);
        let long = (0..200).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        let ex = RawExample::new("x", long, 0);
        let (ids, mask) = tokenize_example(&ex, &vocab, 64).unwrap();
        assert_eq!(ids.len(), 64);
        assert_eq!(mask.len(), 64);
        assert_eq!(ids[0], CLS_ID);
        assert!(mask.iter().all(|&m| m == 1));
    }

    #[test]
    fn oov_maps_to_unk() {
        let vocab = Vocabulary::build(&[RawExample::new("1", "known", 0)]);
        let ex = RawExample::new("x", "mystery", 0);
        let (ids, _) = tokenize_example(&ex, &vocab, 4).unwrap();
        assert_eq!(ids[1], crate::data::vocab::UNK_ID);
    }
}
