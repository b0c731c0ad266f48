//! Bundled synthetic tasks, deterministically generated at desk scale.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{DatasetSource, DatasetSpec, RawExample, TaskKind};
use crate::error::{Error, Result};

const SUBJECTS: [&str; 8] = [
    "the movie", "the film", "the show", "the story", "the acting", "the music", "the plot",
    "the scene",
];
const VERBS: [&str; 4] = ["was", "felt", "seemed", "looked"];
const INTENSIFIERS: [&str; 6] = ["truly", "really", "quite", "very", "rather", "honestly"];
const POSITIVE: [&str; 10] = [
    "wonderful", "great", "excellent", "delightful", "superb", "amazing", "brilliant",
    "charming", "pleasant", "lovely",
];
const NEGATIVE: [&str; 10] = [
    "terrible", "awful", "dreadful", "horrible", "boring", "miserable", "ugly", "unpleasant",
    "bad", "disappointing",
];
const CLOSERS: [&str; 4] = ["overall", "today", "indeed", "somehow"];

/// Two-class keyword-sentiment task: the sentiment word decides the label.
pub fn sentiment_task(
    n_train: usize,
    n_val: usize,
    seed: u64,
) -> (Vec<RawExample>, Vec<RawExample>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gen = |split: &str, n: usize, rng: &mut ChaCha8Rng| -> Vec<RawExample> {
        (0..n)
            .map(|i| {
                let positive = i % 2 == 1;
                let keyword = if positive {
                    POSITIVE.choose(rng).unwrap()
                } else {
                    NEGATIVE.choose(rng).unwrap()
                };
                let mut text = format!(
                    "{} {} {} {}",
                    SUBJECTS.choose(rng).unwrap(),
                    VERBS.choose(rng).unwrap(),
                    INTENSIFIERS.choose(rng).unwrap(),
                    keyword
                );
                if rng.random::<f64>() < 0.5 {
                    text.push(' ');
                    text.push_str(CLOSERS.choose(rng).unwrap());
                }
                RawExample::new(format!("sent-{split}-{i:04}"), text, usize::from(positive))
            })
            .collect()
    };
    let train = gen("train", n_train, &mut rng);
    let val = gen("val", n_val, &mut rng);
    (train, val)
}

const ANIMALS: [&str; 8] = ["cat", "dog", "bird", "horse", "fox", "mouse", "bear", "wolf"];
const ADJECTIVE_PAIRS: [(&str, &str); 6] = [
    ("big", "small"),
    ("fast", "slow"),
    ("loud", "quiet"),
    ("dark", "bright"),
    ("warm", "cold"),
    ("happy", "sad"),
];

/// Entailment-style pair task: the hypothesis repeats or contradicts the
/// premise adjective.
pub fn pair_task(n_train: usize, n_val: usize, seed: u64) -> (Vec<RawExample>, Vec<RawExample>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gen = |split: &str, n: usize, rng: &mut ChaCha8Rng| -> Vec<RawExample> {
        (0..n)
            .map(|i| {
                let contradiction = i % 2 == 1;
                let animal = ANIMALS.choose(rng).unwrap();
                let &(a, b) = ADJECTIVE_PAIRS.choose(rng).unwrap();
                let (premise_adj, other) = if rng.random::<bool>() { (a, b) } else { (b, a) };
                let hypothesis_adj = if contradiction { other } else { premise_adj };
                RawExample {
                    id: format!("pair-{split}-{i:04}"),
                    primary: format!("the {animal} is {premise_adj}"),
                    secondary: Some(format!("the {animal} is {hypothesis_adj}")),
                    label: usize::from(contradiction),
                }
            })
            .collect()
    };
    let train = gen("train", n_train, &mut rng);
    let val = gen("val", n_val, &mut rng);
    (train, val)
}

/// Specs for the bundled datasets, addressable by name.
pub fn builtin_spec(name: &str) -> Result<DatasetSpec> {
    let (task, classes, max_seq_len) = match name {
        "sentiment-small" | "sentiment" => {
            (TaskKind::SingleSentence, vec!["negative", "positive"], 16)
        }
        "pairs" => (TaskKind::SentencePair, vec!["entailment", "contradiction"], 16),
        other => return Err(Error::config(format!("unknown builtin dataset: {other}"))),
    };
    Ok(DatasetSpec {
        name: name.to_string(),
        task,
        source: DatasetSource::Builtin { name: name.to_string() },
        max_seq_len,
        class_names: classes.into_iter().map(String::from).collect(),
    })
}

pub fn builtin_examples(name: &str, seed: u64) -> Result<(Vec<RawExample>, Vec<RawExample>)> {
    match name {
        "sentiment-small" => Ok(sentiment_task(50, 20, seed)),
        "sentiment" => Ok(sentiment_task(500, 100, seed)),
        "pairs" => Ok(pair_task(200, 60, seed)),
        other => Err(Error::config(format!("unknown builtin dataset: {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentiment_sizes_and_balance() {
        let (train, val) = sentiment_task(50, 20, 0);
        assert_eq!(train.len(), 50);
        assert_eq!(val.len(), 20);
        let pos = train.iter().filter(|e| e.label == 1).count();
        assert_eq!(pos, 25);
        for ex in train.iter().chain(&val) {
            ex.validate().unwrap();
            let has_pos = POSITIVE.iter().any(|k| ex.primary.contains(k));
            let has_neg = NEGATIVE.iter().any(|k| ex.primary.contains(k));
            assert_eq!(has_pos, ex.label == 1);
            assert_eq!(has_neg, ex.label == 0);
        }
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(sentiment_task(20, 5, 7), sentiment_task(20, 5, 7));
        assert_eq!(pair_task(20, 5, 7), pair_task(20, 5, 7));
        assert_ne!(sentiment_task(20, 5, 7), sentiment_task(20, 5, 8));
    }

    #[test]
    fn pair_labels_match_adjective_agreement() {
        let (train, _) = pair_task(40, 10, 1);
        for ex in &train {
            let sec = ex.secondary.as_ref().unwrap();
            let prem_adj = ex.primary.rsplit(' ').next().unwrap();
            let hyp_adj = sec.rsplit(' ').next().unwrap();
            assert_eq!(ex.label == 0, prem_adj == hyp_adj);
        }
    }

    #[test]
    fn builtin_lookup() {
        assert!(builtin_spec("sentiment-small").is_ok());
        assert!(builtin_spec("nope").is_err());
        let (train, val) = builtin_examples("sentiment-small", 3).unwrap();
        assert_eq!((train.len(), val.len()), (50, 20));
    }
}
