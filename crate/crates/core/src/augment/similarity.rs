//! Pluggable original-vs-augmented similarity used to weight the cross
//! entropy of augmented examples.

use std::collections::HashMap;

use log::warn;

use crate::augment::AugmentedExample;
use crate::data::tokenize::segment_words;
use crate::data::RawExample;
use crate::error::Result;

pub trait SimilarityProvider {
    /// Cosine-style similarity of two texts, nominally in [-1, 1].
    fn similarity(&self, a: &str, b: &str) -> Result<f64>;
}

/// Offline fallback: cosine over lowercased word-count vectors.
#[derive(Debug, Clone, Copy, Default)]
pub struct BagOfWordsSimilarity;

fn counts(text: &str) -> HashMap<String, f64> {
    let mut map = HashMap::new();
    for w in segment_words(text) {
        *map.entry(w.to_lowercase()).or_insert(0.0) += 1.0;
    }
    map
}

impl SimilarityProvider for BagOfWordsSimilarity {
    fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        let ca = counts(a);
        let cb = counts(b);
        let dot: f64 = ca.iter().map(|(w, &x)| x * cb.get(w).copied().unwrap_or(0.0)).sum();
        let na: f64 = ca.values().map(|v| v * v).sum::<f64>().sqrt();
        let nb: f64 = cb.values().map(|v| v * v).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            return Ok(0.0);
        }
        Ok(dot / (na * nb))
    }
}

/// Similarity of an augmented example to its original, clamped into [0, 1].
/// Provider failures fall back to weight 1.0 with a logged warning so a
/// flaky scorer never aborts corpus generation.
pub fn compute_similarity_weight(
    orig: &RawExample,
    aug: &AugmentedExample,
    provider: &impl SimilarityProvider,
) -> f64 {
    match provider.similarity(&orig.primary, &aug.example.primary) {
        Ok(s) => s.clamp(0.0, 1.0),
        Err(e) => {
            warn!("similarity provider failed for {}: {e}; using weight 1.0", aug.example.id);
            1.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::AugmentationMethod;
    use crate::error::Error;

    fn aug(text: &str) -> AugmentedExample {
        AugmentedExample {
            example: RawExample::new("a-x", text, 0),
            origin_id: "a".into(),
            method: AugmentationMethod::Eda,
            weight: 1.0,
        }
    }

    #[test]
    fn identical_text_scores_one() {
        let orig = RawExample::new("a", "a b c", 0);
        let w = compute_similarity_weight(&orig, &aug("a b c"), &BagOfWordsSimilarity);
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_checked_two_thirds() {
        let orig = RawExample::new("a", "a b c", 0);
        let w = compute_similarity_weight(&orig, &aug("a b d"), &BagOfWordsSimilarity);
        assert!((w - 2.0 / 3.0).abs() < 1e-12);
    }

    struct Fixed(f64);
    impl SimilarityProvider for Fixed {
        fn similarity(&self, _: &str, _: &str) -> Result<f64> {
            Ok(self.0)
        }
    }

    struct Failing;
    impl SimilarityProvider for Failing {
        fn similarity(&self, _: &str, _: &str) -> Result<f64> {
            Err(Error::Analysis("scorer offline".to_string()))
        }
    }

    #[test]
    fn negative_cosines_clamp_to_zero() {
        let orig = RawExample::new("a", "a b c", 0);
        assert_eq!(compute_similarity_weight(&orig, &aug("x"), &Fixed(-0.2)), 0.0);
        assert_eq!(compute_similarity_weight(&orig, &aug("x"), &Fixed(1.7)), 1.0);
    }

    #[test]
    fn provider_failure_falls_back_to_full_weight() {
        let orig = RawExample::new("a", "a b c", 0);
        assert_eq!(compute_similarity_weight(&orig, &aug("x"), &Failing), 1.0);
    }
}
