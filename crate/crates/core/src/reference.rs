//! Vocabulary-free reference tokenizers: raw UTF-8 bytes and raw codepoints,
//! plus a closed character vocabulary that emits UNK.

use std::collections::BTreeMap;

use crate::encoding::{Encoding, Tokenizer};
use crate::error::{Error, Result};
use crate::vocab::TokenId;

/// One token per UTF-8 byte (implicit 256-token vocabulary).
pub fn utf8_byte_encode(text: &str) -> Encoding {
    let ids = text.bytes().map(TokenId::from).collect();
    Encoding::byte_fallback(ids, text)
}

/// One token per Unicode scalar value; the id is the codepoint itself.
pub fn codepoint_encode(text: &str) -> Encoding {
    let ids: Vec<TokenId> = text.chars().map(TokenId::from).collect();
    let total_codepoints = ids.len();
    Encoding {
        ids,
        unk_codepoints: 0,
        total_codepoints,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ByteTokenizer;

impl Tokenizer for ByteTokenizer {
    fn encode(&self, text: &str) -> Encoding {
        utf8_byte_encode(text)
    }

    fn decode(&self, ids: &[TokenId]) -> Result<String> {
        let bytes = ids
            .iter()
            .map(|&id| u8::try_from(id).map_err(|_| Error::InvalidArgument(format!("unknown token id {id}"))))
            .collect::<Result<Vec<u8>>>()?;
        String::from_utf8(bytes)
            .map_err(|e| Error::Decode(format!("invalid UTF-8 at offset {}", e.utf8_error().valid_up_to())))
    }

    fn count(&self, text: &str) -> usize {
        text.len()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CodepointTokenizer;

impl Tokenizer for CodepointTokenizer {
    fn encode(&self, text: &str) -> Encoding {
        codepoint_encode(text)
    }

    fn decode(&self, ids: &[TokenId]) -> Result<String> {
        ids.iter()
            .map(|&id| char::from_u32(id).ok_or_else(|| Error::InvalidArgument(format!("unknown token id {id}"))))
            .collect()
    }

    fn count(&self, text: &str) -> usize {
        text.chars().count()
    }
}

/// Character-level tokenizer over a fixed character set. Every codepoint
/// outside the set becomes one UNK token (id 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedCharTokenizer {
    ids: BTreeMap<char, TokenId>,
    chars: Vec<char>,
}

impl ClosedCharTokenizer {
    pub const UNK: TokenId = 0;

    pub fn new(chars: impl IntoIterator<Item = char>) -> Self {
        let mut chars: Vec<char> = chars.into_iter().collect();
        chars.sort_unstable();
        chars.dedup();
        let ids = chars.iter().enumerate().map(|(i, &c)| (c, i as TokenId + 1)).collect();
        Self { ids, chars }
    }
}

impl Tokenizer for ClosedCharTokenizer {
    fn encode(&self, text: &str) -> Encoding {
        let mut unk = 0;
        let ids: Vec<TokenId> = text
            .chars()
            .map(|c| {
                self.ids.get(&c).copied().unwrap_or_else(|| {
                    unk += 1;
                    Self::UNK
                })
            })
            .collect();
        Encoding {
            total_codepoints: ids.len(),
            ids,
            unk_codepoints: unk,
        }
    }

    /// UNK decodes to U+FFFD.
    fn decode(&self, ids: &[TokenId]) -> Result<String> {
        ids.iter()
            .map(|&id| match id {
                Self::UNK => Ok(char::REPLACEMENT_CHARACTER),
                _ => self
                    .chars
                    .get(id as usize - 1)
                    .copied()
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown token id {id}"))),
            })
            .collect()
    }
}
