use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Id reserved for unknown, masked and padding positions.
pub const UNKNOWN_ID: u32 = 0;

/// How raw text is cut into words before vocabulary lookup.
///
/// The only split rule is "every character outside `[A-Za-z0-9]` is a
/// separator", which is trivially reproducible by any trainer that writes
/// bundles for this runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerSpec {
    pub lowercase: bool,
    pub split: SplitRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRule {
    NonAsciiAlphanumeric,
}

impl Default for TokenizerSpec {
    fn default() -> Self {
        Self {
            lowercase: true,
            split: SplitRule::NonAsciiAlphanumeric,
        }
    }
}

impl TokenizerSpec {
    /// Splits `text` into words. Never fails; empty text yields no words.
    pub fn words(&self, text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_ascii_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(|w| {
                if self.lowercase {
                    w.to_ascii_lowercase()
                } else {
                    w.to_owned()
                }
            })
            .collect()
    }
}

/// Word-to-id mapping plus the fixed sequence length `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    max_sequence_length: usize,
    tokenizer: TokenizerSpec,
}

impl Vocabulary {
    /// Builds a vocabulary from an id-ordered token list. Entry 0 is the
    /// reserved unknown slot and is never looked up as a word.
    pub fn new(
        tokens: Vec<String>,
        max_sequence_length: usize,
        tokenizer: TokenizerSpec,
    ) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::MalformedHeader(
                "vocabulary must contain at least the unknown token".into(),
            ));
        }
        if max_sequence_length == 0 {
            return Err(Error::MalformedHeader(
                "max_sequence_length must be positive".into(),
            ));
        }
        if tokens.len() > u32::MAX as usize {
            return Err(Error::MalformedHeader("vocabulary too large".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, word) in tokens.iter().enumerate().skip(1) {
            if index.insert(word.clone(), id as u32).is_some() {
                return Err(Error::MalformedHeader(format!(
                    "duplicate vocabulary entry `{word}`"
                )));
            }
        }
        Ok(Self {
            tokens,
            index,
            max_sequence_length,
            tokenizer,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn max_sequence_length(&self) -> usize {
        self.max_sequence_length
    }

    pub fn tokenizer(&self) -> TokenizerSpec {
        self.tokenizer
    }

    /// Id-ordered token list, including the reserved entry 0.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, word: &str) -> u32 {
        self.index.get(word).copied().unwrap_or(UNKNOWN_ID)
    }

    /// Lowercases, splits on non-alphanumerics, maps words to ids and
    /// pads or truncates to `T` with the unknown id.
    pub fn tokenize(&self, text: &str) -> TokenSequence {
        let mut words = self.tokenizer.words(text);
        words.truncate(self.max_sequence_length);
        let mut ids: Vec<u32> = words.iter().map(|w| self.id(w)).collect();
        ids.resize(self.max_sequence_length, UNKNOWN_ID);
        TokenSequence { ids, words }
    }
}

/// A fixed-length id vector for one document.
///
/// `words` holds the surface form of each non-padding position, so
/// `words.len()` is the document length `m <= T`. Out-of-vocabulary words
/// keep their text here even though their id is [`UNKNOWN_ID`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub words: Vec<String>,
}

impl TokenSequence {
    /// Number of non-padding positions.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Checks the sequence against a vocabulary's size and length.
    pub fn validate(&self, vocab: &Vocabulary) -> Result<()> {
        if self.ids.len() != vocab.max_sequence_length() {
            return Err(Error::InvalidSequence(format!(
                "length {} differs from max_sequence_length {}",
                self.ids.len(),
                vocab.max_sequence_length()
            )));
        }
        if self.words.len() > self.ids.len() {
            return Err(Error::InvalidSequence(format!(
                "{} words for {} positions",
                self.words.len(),
                self.ids.len()
            )));
        }
        if let Some(&bad) = self.ids.iter().find(|&&id| id as usize >= vocab.len()) {
            return Err(Error::InvalidSequence(format!(
                "id {bad} outside vocabulary of size {}",
                vocab.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Vocabulary {
        let tokens = ["<unk>", "the", "film", "was", "badly", "done"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        Vocabulary::new(tokens, 5, TokenizerSpec::default()).unwrap()
    }

    #[test]
    fn empty_text_is_all_unknown() {
        let seq = toy().tokenize("");
        assert_eq!(seq.ids, vec![0; 5]);
        assert!(seq.is_empty());
    }

    #[test]
    fn exact_fit_has_no_padding() {
        let seq = toy().tokenize("The film was badly done");
        assert_eq!(seq.ids, vec![1, 2, 3, 4, 5]);
        assert_eq!(seq.len(), 5);
    }

    #[test]
    fn out_of_vocabulary_word_maps_to_zero() {
        let v = toy();
        let seq = v.tokenize("the film was TERRIBLY done");
        // direct lookup against the toy token list
        assert_eq!(seq.ids, vec![1, 2, 3, 0, 5]);
        assert_eq!(seq.words[3], "terribly");
    }

    #[test]
    fn punctuation_splits_and_truncates() {
        let seq = toy().tokenize("Badly-done, the film... was the film");
        assert_eq!(seq.words, vec!["badly", "done", "the", "film", "was"]);
        assert_eq!(seq.ids.len(), 5);
    }

    #[test]
    fn duplicate_vocabulary_entry_rejected() {
        let tokens = vec!["<unk>".into(), "a".into(), "a".into()];
        assert!(Vocabulary::new(tokens, 3, TokenizerSpec::default()).is_err());
    }

    #[test]
    fn unknown_slot_is_never_looked_up() {
        let v = toy();
        assert_eq!(v.id("<unk>"), UNKNOWN_ID);
        assert_eq!(v.id("unk"), UNKNOWN_ID);
    }
}
