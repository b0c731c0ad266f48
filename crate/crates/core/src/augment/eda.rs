//! The four rule-based edit operations and the augmentation pipelines
//! built from them.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::augment::lexicon::SynonymProvider;
use crate::augment::{derive_rng, AugmentationMethod, AugmentedExample};
use crate::data::tokenize::segment_words;
use crate::data::RawExample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdaConfig {
    /// Word fraction touched by each operation.
    pub alpha: f64,
    /// Augmented sentences generated per original.
    pub n_aug: usize,
    pub seed: u64,
}

impl Default for EdaConfig {
    /// Recommended small-dataset settings: 16 outputs at a 5% edit rate.
    fn default() -> Self {
        EdaConfig { alpha: 0.05, n_aug: 16, seed: 0 }
    }
}

impl EdaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("alpha must lie in [0, 1]"));
        }
        if self.n_aug == 0 {
            return Err(Error::config("n_aug must be at least 1"));
        }
        Ok(())
    }
}

/// Heavy-corruption settings: all four operations at a 50% rate, eight
/// outputs per original.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionConfig {
    pub alpha: f64,
    pub n_aug: usize,
    pub seed: u64,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        CorruptionConfig { alpha: 0.5, n_aug: 8, seed: 0 }
    }
}

/// Replace up to `n` distinct words with a random synonym each. Words the
/// provider does not know are skipped.
pub fn synonym_replacement(
    words: &[String],
    n: usize,
    provider: impl SynonymProvider,
    rng: &mut impl Rng,
) -> Vec<String> {
    let mut out = words.to_vec();
    let mut positions: Vec<usize> = (0..words.len()).collect();
    positions.shuffle(rng);
    let mut replaced = 0;
    for pos in positions {
        if replaced == n {
            break;
        }
        let candidates = provider.lookup(&words[pos]);
        if let Some(synonym) = candidates.choose(rng) {
            out[pos] = synonym.clone();
            replaced += 1;
        }
    }
    out
}

/// Insert `n` synonyms of random in-sentence words at random positions.
/// Each insertion scans the words in random order and takes the first with
/// synonyms, so the sentence grows by exactly `n` unless the lexicon knows
/// none of its words.
pub fn random_insertion(
    words: &[String],
    n: usize,
    provider: impl SynonymProvider,
    rng: &mut impl Rng,
) -> Vec<String> {
    let mut out = words.to_vec();
    for _ in 0..n {
        let mut order: Vec<usize> = (0..words.len()).collect();
        order.shuffle(rng);
        for idx in order {
            let candidates = provider.lookup(&words[idx]);
            if let Some(synonym) = candidates.choose(rng) {
                let pos = rng.random_range(0..=out.len());
                out.insert(pos, synonym.clone());
                break;
            }
        }
    }
    out
}

/// Swap `n` random position pairs; the multiset of words is preserved.
pub fn random_swap(words: &[String], n: usize, rng: &mut impl Rng) -> Vec<String> {
    let mut out = words.to_vec();
    if out.len() < 2 {
        return out;
    }
    for _ in 0..n {
        let i = rng.random_range(0..out.len());
        let mut j = rng.random_range(0..out.len() - 1);
        if j >= i {
            j += 1;
        }
        out.swap(i, j);
    }
    out
}

/// Drop each word independently with probability `p`, always keeping at
/// least one: a fully deleted sentence collapses to one random survivor.
pub fn random_deletion(words: &[String], p: f64, rng: &mut impl Rng) -> Vec<String> {
    let kept: Vec<String> =
        words.iter().filter(|_| rng.random::<f64>() >= p).cloned().collect();
    if kept.is_empty() {
        vec![words.choose(rng).expect("words non-empty").clone()]
    } else {
        kept
    }
}

/// Delete exactly `min(n, len-1)` randomly chosen words. The pipelines use
/// this so every operation touches the same deterministic word count.
fn delete_exact(words: &[String], n: usize, rng: &mut impl Rng) -> Vec<String> {
    let n = n.min(words.len().saturating_sub(1));
    let mut positions: Vec<usize> = (0..words.len()).collect();
    positions.shuffle(rng);
    let drop: std::collections::HashSet<usize> = positions.into_iter().take(n).collect();
    words
        .iter()
        .enumerate()
        .filter(|(i, _)| !drop.contains(i))
        .map(|(_, w)| w.clone())
        .collect()
}

fn run_pipeline(
    ex: &RawExample,
    alpha: f64,
    n_aug: usize,
    seed: u64,
    method: AugmentationMethod,
    provider: &(impl SynonymProvider + ?Sized),
) -> Result<Vec<AugmentedExample>> {
    ex.validate()?;
    let words = segment_words(&ex.primary);
    if words.is_empty() {
        return Err(Error::input(format!("example {} has no words to augment", ex.id)));
    }
    let n = (alpha * words.len() as f64).round() as usize;
    let tag = match method {
        AugmentationMethod::Corrupt => "corrupt",
        _ => "eda",
    };
    let mut rng = derive_rng(seed, &ex.id);
    let mut out = Vec::with_capacity(n_aug);
    for k in 0..n_aug {
        // all four operations applied jointly, counts pinned to the
        // original sentence length
        let mut edited = synonym_replacement(&words, n, provider, &mut rng);
        edited = random_insertion(&edited, n, provider, &mut rng);
        edited = random_swap(&edited, n, &mut rng);
        edited = delete_exact(&edited, n, &mut rng);
        out.push(AugmentedExample {
            example: RawExample {
                id: format!("{}-{tag}-{k:02}", ex.id),
                primary: edited.join(" "),
                secondary: ex.secondary.clone(),
                label: ex.label,
            },
            origin_id: ex.id.clone(),
            method,
            weight: 1.0,
        });
    }
    Ok(out)
}

/// EDA: apply all four operations at rate `alpha`, producing `n_aug`
/// augmented sentences over the primary input.
pub fn eda_augment(
    ex: &RawExample,
    cfg: &EdaConfig,
    provider: &(impl SynonymProvider + ?Sized),
) -> Result<Vec<AugmentedExample>> {
    cfg.validate()?;
    run_pipeline(ex, cfg.alpha, cfg.n_aug, cfg.seed, AugmentationMethod::Eda, provider)
}

/// Heavy corruption: the same machinery at `alpha = 0.5`, eight outputs.
pub fn corrupt(
    ex: &RawExample,
    cfg: &CorruptionConfig,
    provider: &(impl SynonymProvider + ?Sized),
) -> Result<Vec<AugmentedExample>> {
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(Error::config("alpha must lie in [0, 1]"));
    }
    if cfg.n_aug == 0 {
        return Err(Error::config("n_aug must be at least 1"));
    }
    run_pipeline(ex, cfg.alpha, cfg.n_aug, cfg.seed, AugmentationMethod::Corrupt, provider)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::lexicon::{BundledLexicon, EmptyLexicon};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn words(s: &str) -> Vec<String> {
        segment_words(s)
    }

    #[test]
    fn zero_alpha_is_identity() {
        let ex = RawExample::new("x", "the movie was truly wonderful", 1);
        let cfg = EdaConfig { alpha: 0.0, n_aug: 5, seed: 1 };
        let out = eda_augment(&ex, &cfg, BundledLexicon::shared()).unwrap();
        assert_eq!(out.len(), 5);
        for aug in out {
            assert_eq!(aug.example.primary, ex.primary);
            assert_eq!(aug.example.label, 1);
            assert_eq!(aug.origin_id, "x");
        }
    }

    #[test]
    fn output_count_contract() {
        let ex = RawExample::new("x", "the movie was truly wonderful today", 1);
        let out = eda_augment(&ex, &EdaConfig::default(), BundledLexicon::shared()).unwrap();
        assert_eq!(out.len(), 16);
        let out = corrupt(&ex, &CorruptionConfig::default(), BundledLexicon::shared()).unwrap();
        assert_eq!(out.len(), 8);
        assert!(out.iter().all(|a| a.method == AugmentationMethod::Corrupt));
    }

    #[test]
    fn determinism_per_seed() {
        let ex = RawExample::new("x", "the movie was truly wonderful today", 1);
        let cfg = EdaConfig { alpha: 0.3, n_aug: 4, seed: 9 };
        let a = eda_augment(&ex, &cfg, BundledLexicon::shared()).unwrap();
        let b = eda_augment(&ex, &cfg, BundledLexicon::shared()).unwrap();
        assert_eq!(a, b);
        let c =
            eda_augment(&ex, &EdaConfig { seed: 10, ..cfg }, BundledLexicon::shared()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn swap_on_two_words_is_the_only_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = random_swap(&words("a b"), 1, &mut rng);
        assert_eq!(out, vec!["b", "a"]);
    }

    #[test]
    fn swap_preserves_multiset() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let original = words("one two three four five");
        let mut out = random_swap(&original, 7, &mut rng);
        let mut sorted = original.clone();
        sorted.sort();
        out.sort();
        assert_eq!(out, sorted);
    }

    #[test]
    fn insertion_grows_by_n_with_full_lexicon() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out =
            random_insertion(&words("the movie was great fun"), 2, BundledLexicon::shared(), &mut rng);
        assert_eq!(out.len(), 7);
    }

    #[test]
    fn replacement_with_empty_lexicon_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let original = words("totally unknown tokens here");
        let out = synonym_replacement(&original, 3, &EmptyLexicon, &mut rng);
        assert_eq!(out, original);
        let out = random_insertion(&original, 3, &EmptyLexicon, &mut rng);
        assert_eq!(out, original);
    }

    #[test]
    fn replacement_changes_at_most_n_words() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let original = words("the movie was truly wonderful today overall");
        for n in 0..4 {
            let out = synonym_replacement(&original, n, BundledLexicon::shared(), &mut rng);
            let changed = out.iter().zip(&original).filter(|(a, b)| a != b).count();
            assert!(changed <= n, "changed {changed} > n {n}");
        }
    }

    #[test]
    fn deletion_always_leaves_a_survivor() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let original = words("a b c d");
        let out = random_deletion(&original, 1.0, &mut rng);
        assert_eq!(out.len(), 1);
        for _ in 0..200 {
            let out = random_deletion(&original, 0.9, &mut rng);
            assert!(!out.is_empty());
        }
    }

    #[test]
    fn corrupt_touches_half_the_words() {
        // with a 10-word sentence each operation edits round(0.5*10) = 5 words;
        // insertion must grow the sentence by exactly 5 before deletion trims 5
        let ex = RawExample::new("x", "the movie was truly wonderful today and very great overall", 1);
        assert_eq!(segment_words(&ex.primary).len(), 10);
        let cfg = CorruptionConfig { seed: 2, ..Default::default() };
        let out = corrupt(&ex, &cfg, BundledLexicon::shared()).unwrap();
        for aug in &out {
            // +5 inserted, -5 deleted: length returns to 10
            assert_eq!(segment_words(&aug.example.primary).len(), 10);
            assert_ne!(aug.example.primary, ex.primary);
        }
    }

    #[test]
    fn secondary_text_passes_through_untouched() {
        let ex = RawExample {
            id: "p".into(),
            primary: "the cat is big".into(),
            secondary: Some("the cat is small".into()),
            label: 1,
        };
        let cfg = EdaConfig { alpha: 0.5, n_aug: 6, seed: 0 };
        let out = eda_augment(&ex, &cfg, BundledLexicon::shared()).unwrap();
        for aug in out {
            assert_eq!(aug.example.secondary.as_deref(), Some("the cat is small"));
        }
    }

    #[test]
    fn empty_text_is_an_input_error() {
        let ex = RawExample::new("x", "   ", 0);
        assert!(eda_augment(&ex, &EdaConfig::default(), &EmptyLexicon).is_err());
    }
}
