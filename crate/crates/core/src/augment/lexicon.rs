//! Synonym sources for the edit operations.

use std::collections::HashMap;
use std::sync::OnceLock;

/// Pure lookup from a word to its synonym candidates. An empty result means
/// the word has no known synonyms and the callers skip it.
pub trait SynonymProvider {
    fn lookup(&self, word: &str) -> Vec<String>;
}

/// Small bundled word -> synonyms table, embedded at compile time so the
/// default pipeline needs no external thesaurus.
pub struct BundledLexicon {
    map: HashMap<String, Vec<String>>,
}

static BUNDLED: OnceLock<BundledLexicon> = OnceLock::new();

impl BundledLexicon {
    pub fn shared() -> &'static BundledLexicon {
        BUNDLED.get_or_init(|| {
            let raw = include_str!("../../assets/synonyms.json");
            let map: HashMap<String, Vec<String>> =
                serde_json::from_str(raw).expect("bundled lexicon parses");
            BundledLexicon { map }
        })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl SynonymProvider for BundledLexicon {
    fn lookup(&self, word: &str) -> Vec<String> {
        self.map.get(&word.to_lowercase()).cloned().unwrap_or_default()
    }
}

/// Provider with no entries; replacement and insertion become no-ops.
pub struct EmptyLexicon;

impl SynonymProvider for EmptyLexicon {
    fn lookup(&self, _word: &str) -> Vec<String> {
        Vec::new()
    }
}

impl<T: SynonymProvider + ?Sized> SynonymProvider for &T {
    fn lookup(&self, word: &str) -> Vec<String> {
        (*self).lookup(word)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_lexicon_loads_and_is_case_insensitive() {
        let lex = BundledLexicon::shared();
        assert!(lex.len() > 100);
        let syns = lex.lookup("Wonderful");
        assert!(syns.contains(&"marvelous".to_string()));
        assert!(lex.lookup("qqqq").is_empty());
    }

    #[test]
    fn lookup_is_pure() {
        let lex = BundledLexicon::shared();
        assert_eq!(lex.lookup("great"), lex.lookup("great"));
    }
}
