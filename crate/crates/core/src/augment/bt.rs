//! Back-translation through a pluggable translator client.

use std::time::Duration;

use crate::augment::{AugmentationMethod, AugmentedExample};
use crate::data::RawExample;
use crate::error::{Error, Result};

/// Pivot languages with enough parallel data for decent round trips.
pub const DEFAULT_BT_LANGUAGES: [&str; 4] = ["fr", "es", "de", "zh"];

/// Total translation function. Failures surface as errors; output is never
/// silently truncated.
pub trait TranslatorClient {
    fn translate(&self, text: &str, source_lang: &str, target_lang: &str) -> Result<String>;
}

/// Deterministic offline stand-in: translating "to" any language reverses
/// the word order, so a round trip restores the original sentence.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubTranslator;

impl TranslatorClient for StubTranslator {
    fn translate(&self, text: &str, source_lang: &str, target_lang: &str) -> Result<String> {
        if source_lang == target_lang {
            return Ok(text.to_string());
        }
        let mut words: Vec<&str> = text.split_whitespace().collect();
        words.reverse();
        Ok(words.join(" "))
    }
}

/// Stand-in that returns the input untouched.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTranslator;

impl TranslatorClient for IdentityTranslator {
    fn translate(&self, text: &str, _source_lang: &str, _target_lang: &str) -> Result<String> {
        Ok(text.to_string())
    }
}

/// HTTP client speaking `POST {endpoint} {"text", "src", "tgt"} -> {"text"}`.
pub struct HttpTranslator {
    endpoint: String,
    retries: u32,
    agent: ureq::Agent,
}

#[derive(serde::Serialize)]
struct TranslateRequest<'a> {
    text: &'a str,
    src: &'a str,
    tgt: &'a str,
}

#[derive(serde::Deserialize)]
struct TranslateResponse {
    text: String,
}

impl HttpTranslator {
    pub fn new(endpoint: impl Into<String>, timeout: Duration, retries: u32) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build();
        HttpTranslator { endpoint: endpoint.into(), retries, agent: config.into() }
    }
}

impl TranslatorClient for HttpTranslator {
    fn translate(&self, text: &str, source_lang: &str, target_lang: &str) -> Result<String> {
        let body = TranslateRequest { text, src: source_lang, tgt: target_lang };
        let mut last_err = None;
        for _ in 0..=self.retries {
            match self.agent.post(&self.endpoint).send_json(&body) {
                Ok(mut response) => {
                    let parsed: TranslateResponse =
                        response.body_mut().read_json().map_err(|e| Error::Augmentation {
                            language: target_lang.to_string(),
                            cause: format!("bad translator response: {e}"),
                        })?;
                    return Ok(parsed.text);
                }
                Err(e) => last_err = Some(e),
            }
        }
        Err(Error::Augmentation {
            language: target_lang.to_string(),
            cause: format!("translator unreachable: {}", last_err.expect("at least one attempt")),
        })
    }
}

/// Augmented examples plus the per-language failures that did not stop the run.
#[derive(Debug)]
pub struct BackTranslationOutcome {
    pub augmented: Vec<AugmentedExample>,
    pub failures: Vec<Error>,
}

/// Round-trip the primary text through every pivot language. Per-language
/// failures are collected, not fatal.
pub fn back_translate(
    ex: &RawExample,
    client: &impl TranslatorClient,
    languages: &[String],
) -> Result<BackTranslationOutcome> {
    ex.validate()?;
    if languages.is_empty() {
        return Err(Error::config("back-translation needs at least one language"));
    }
    let mut augmented = Vec::with_capacity(languages.len());
    let mut failures = Vec::new();
    for lang in languages {
        let round_trip = client
            .translate(&ex.primary, "en", lang)
            .and_then(|pivot| client.translate(&pivot, lang, "en"));
        match round_trip {
            Ok(text) => augmented.push(AugmentedExample {
                example: RawExample {
                    id: format!("{}-bt-{lang}", ex.id),
                    primary: text,
                    secondary: ex.secondary.clone(),
                    label: ex.label,
                },
                origin_id: ex.id.clone(),
                method: AugmentationMethod::BackTranslation,
                weight: 1.0,
            }),
            Err(Error::Augmentation { language, cause }) => {
                failures.push(Error::Augmentation { language, cause });
            }
            Err(other) => {
                failures.push(Error::Augmentation {
                    language: lang.clone(),
                    cause: other.to_string(),
                });
            }
        }
    }
    Ok(BackTranslationOutcome { augmented, failures })
}
