//! Byte-level BPE training, encoding and tokenizer evaluation.

mod alphabet;
mod metrics;
mod model;
mod pretokenize;
mod train;

use thiserror::Error;

pub use alphabet::{byte_to_char, bytes_to_marker, char_to_byte, marker_to_bytes};
pub use metrics::{fertility, token_frequency, FertilityMode, FertilityReport, TokenFrequency, TokenFrequencyReport};
pub use model::{ByteBpeModel, MERGES_FILE, VOCAB_FILE};
pub use pretokenize::pretokenize;
pub use train::{count_words, learn_merges, train_bpe, train_bpe_texts, TokenizerTrainConfig};

use crate::corpus_io::word_count;

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("vocab size {vocab_size} is below the base alphabet plus specials ({min})")]
    VocabTooSmall { vocab_size: usize, min: usize },
    #[error("token id {id} out of range for vocab of size {vocab_size}")]
    UnknownId { id: u32, vocab_size: usize },
    #[error("corpus contains no words")]
    ZeroWords,
    #[error("tokenizer files: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Anything that can say how many tokens a text becomes.
pub trait TokenCounter {
    fn count_tokens(&self, text: &str) -> usize;
}

impl<F: Fn(&str) -> usize> TokenCounter for F {
    fn count_tokens(&self, text: &str) -> usize {
        self(text)
    }
}

/// A tokenizer that produces ids.
pub trait Encoder: TokenCounter {
    fn encode(&self, text: &str) -> Vec<u32>;
    fn vocab_size(&self) -> usize;
    fn token_label(&self, id: u32) -> Option<String>;
    fn tokenizer_id(&self) -> String;
}

/// One token per whitespace-separated word.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl TokenCounter for WhitespaceTokenizer {
    fn count_tokens(&self, text: &str) -> usize {
        word_count(text)
    }
}

/// One token per non-whitespace character; ids are code points.
#[derive(Debug, Clone, Copy, Default)]
pub struct CharTokenizer;

impl TokenCounter for CharTokenizer {
    fn count_tokens(&self, text: &str) -> usize {
        text.chars().filter(|c| !c.is_whitespace()).count()
    }
}

impl Encoder for CharTokenizer {
    fn encode(&self, text: &str) -> Vec<u32> {
        text.chars().filter(|c| !c.is_whitespace()).map(u32::from).collect()
    }

    fn vocab_size(&self) -> usize {
        0x11_0000
    }

    fn token_label(&self, id: u32) -> Option<String> {
        char::from_u32(id).map(String::from)
    }

    fn tokenizer_id(&self) -> String {
        "chars".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_tokenizers() {
        assert_eq!(WhitespaceTokenizer.count_tokens("Der Himmel ist blau"), 4);
        assert_eq!(CharTokenizer.count_tokens("abc de"), 5);
        assert_eq!(CharTokenizer.encode("ab"), vec![97, 98]);
        let eleven = |_: &str| 11usize;
        assert_eq!(eleven.count_tokens("/de/c/trebic-unesco"), 11);
    }
}
