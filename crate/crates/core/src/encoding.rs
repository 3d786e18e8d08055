use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::vocab::TokenId;

/// Result of tokenizing one text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoding {
    pub ids: Vec<TokenId>,
    /// Input codepoints represented by UNK tokens.
    pub unk_codepoints: usize,
    pub total_codepoints: usize,
}

impl Encoding {
    pub(crate) fn byte_fallback(ids: Vec<TokenId>, text: &str) -> Self {
        Self {
            ids,
            unk_codepoints: 0,
            total_codepoints: text.chars().count(),
        }
    }

    /// Token count `|t(s)|`.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn unk_fraction(&self) -> f64 {
        unk_fraction(self)
    }
}

/// Share of input codepoints covered by UNK tokens; 0 for empty input.
pub fn unk_fraction(encoding: &Encoding) -> f64 {
    if encoding.total_codepoints == 0 {
        0.0
    } else {
        encoding.unk_codepoints as f64 / encoding.total_codepoints as f64
    }
}

/// Anything that maps text to token ids.
pub trait Tokenizer: Sync {
    fn encode(&self, text: &str) -> Encoding;

    fn decode(&self, ids: &[TokenId]) -> Result<String>;

    /// Token count only. Implementations may skip building the id vector.
    fn count(&self, text: &str) -> usize {
        self.encode(text).len()
    }
}

impl<T: Tokenizer + ?Sized> Tokenizer for &T {
    fn encode(&self, text: &str) -> Encoding {
        (**self).encode(text)
    }

    fn decode(&self, ids: &[TokenId]) -> Result<String> {
        (**self).decode(ids)
    }

    fn count(&self, text: &str) -> usize {
        (**self).count(text)
    }
}

impl<T: Tokenizer + ?Sized> Tokenizer for Box<T> {
    fn encode(&self, text: &str) -> Encoding {
        (**self).encode(text)
    }

    fn decode(&self, ids: &[TokenId]) -> Result<String> {
        (**self).decode(ids)
    }

    fn count(&self, text: &str) -> usize {
        (**self).count(text)
    }
}
