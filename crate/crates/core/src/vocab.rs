//! Byte-string vocabularies with a fixed 256-token byte base.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type TokenId = u32;

/// Number of single-byte tokens every vocabulary starts with.
pub const BYTE_BASE: usize = 256;

/// An indexed set of distinct, non-empty byte-string tokens.
///
/// Ids `0..256` are always the single bytes `[0]..[255]`; further tokens get
/// consecutive ids in insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, TokenId>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::byte_base()
    }
}

impl Vocabulary {
    pub fn byte_base() -> Self {
        let tokens: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(id, t)| (t.clone(), id as TokenId))
            .collect();
        Self { tokens, index }
    }

    /// Builds a vocabulary from tokens listed in id order.
    pub fn from_tokens(tokens: Vec<Vec<u8>>) -> Result<Self> {
        if tokens.len() < BYTE_BASE {
            return Err(Error::Validation(format!(
                "vocabulary has {} tokens, fewer than the {BYTE_BASE} byte tokens",
                tokens.len()
            )));
        }
        for (id, tok) in tokens.iter().take(BYTE_BASE).enumerate() {
            if tok.as_slice() != [id as u8] {
                return Err(Error::Validation(format!(
                    "token id {id} must be the single byte {id:02x}"
                )));
            }
        }
        let mut vocab = Self::byte_base();
        for tok in tokens.into_iter().skip(BYTE_BASE) {
            vocab.push(tok)?;
        }
        Ok(vocab)
    }

    /// Appends a token and returns its id.
    pub fn push(&mut self, token: Vec<u8>) -> Result<TokenId> {
        if token.is_empty() {
            return Err(Error::Validation("empty token".into()));
        }
        if let Some(&id) = self.index.get(&token) {
            return Err(Error::Validation(format!(
                "duplicate token {} (already id {id})",
                hex(&token)
            )));
        }
        let id =
            TokenId::try_from(self.tokens.len()).map_err(|_| Error::Validation("vocabulary exceeds u32 ids".into()))?;
        self.index.insert(token.clone(), id);
        self.tokens.push(token);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Always false: the byte base is never empty.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: TokenId) -> Option<&[u8]> {
        self.tokens.get(id as usize).map(Vec::as_slice)
    }

    pub fn id_of(&self, token: &[u8]) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &[u8]) -> bool {
        self.index.contains_key(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = (TokenId, &[u8])> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(id, t)| (id as TokenId, t.as_slice()))
    }

    /// Keeps only the first `len` tokens. `len` is clamped to the byte base.
    pub fn truncated(&self, len: usize) -> Self {
        let len = len.clamp(BYTE_BASE, self.tokens.len());
        let tokens = self.tokens[..len].to_vec();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(id, t)| (t.clone(), id as TokenId))
            .collect();
        Self { tokens, index }
    }

    /// Concatenates the byte-strings of `ids` without UTF-8 validation.
    pub fn decode_bytes(&self, ids: &[TokenId]) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(ids.len());
        for &id in ids {
            let tok = self
                .token(id)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown token id {id}")))?;
            out.extend_from_slice(tok);
        }
        Ok(out)
    }

    pub fn decode(&self, ids: &[TokenId]) -> Result<String> {
        let bytes = self.decode_bytes(ids)?;
        String::from_utf8(bytes).map_err(|e| {
            Error::Decode(format!(
                "token bytes are not valid UTF-8 at offset {}",
                e.utf8_error().valid_up_to()
            ))
        })
    }
}

/// One learned pair rewrite `left right -> result`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MergeRule {
    pub rank: u32,
    pub left: TokenId,
    pub right: TokenId,
    pub result: TokenId,
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    use std::fmt::Write;
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

pub(crate) fn unhex(s: &str) -> Option<Vec<u8>> {
    if !s.len().is_multiple_of(2) || !s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
        return None;
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).ok())
        .collect()
}
