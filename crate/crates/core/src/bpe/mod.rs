//! Byte-level BPE: model, segmentation and rank-ordered encoding.

mod train;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encoding::{Encoding, Tokenizer};
use crate::error::{Error, Result};
use crate::vocab::{MergeRule, TokenId, Vocabulary, BYTE_BASE};

pub use train::bpe_train;

/// Whether merges may cross whitespace boundaries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    None,
    #[default]
    Whitespace,
}

impl BoundaryMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryMode::None => "none",
            BoundaryMode::Whitespace => "whitespace",
        }
    }
}

impl fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(BoundaryMode::None),
            "whitespace" => Ok(BoundaryMode::Whitespace),
            other => Err(Error::InvalidArgument(format!(
                "unknown boundary mode {other:?} (expected none or whitespace)"
            ))),
        }
    }
}

/// Splits `text` into the byte slices BPE operates on independently.
///
/// In whitespace mode every whitespace codepoint starts a new segment, so a
/// segment is an optional single leading whitespace codepoint followed by a
/// run of non-whitespace codepoints. Concatenating the segments gives back
/// the input.
pub fn segments(text: &str, mode: BoundaryMode) -> impl Iterator<Item = &[u8]> {
    let bytes = text.as_bytes();
    let mut starts: Vec<usize> = Vec::new();
    if !text.is_empty() {
        starts.push(0);
        if mode == BoundaryMode::Whitespace {
            starts.extend(
                text.char_indices()
                    .filter(|&(i, c)| i > 0 && c.is_whitespace())
                    .map(|(i, _)| i),
            );
        }
    }
    let ends: Vec<usize> = starts
        .iter()
        .skip(1)
        .copied()
        .chain(std::iter::once(bytes.len()))
        .collect();
    starts.into_iter().zip(ends).map(move |(s, e)| &bytes[s..e])
}

/// A byte vocabulary plus rank-ordered merge rules.
#[derive(Debug, Clone)]
pub struct BpeModel {
    vocab: Vocabulary,
    merges: Vec<MergeRule>,
    boundary_mode: BoundaryMode,
    ranks: HashMap<(TokenId, TokenId), u32>,
}

impl PartialEq for BpeModel {
    fn eq(&self, other: &Self) -> bool {
        self.boundary_mode == other.boundary_mode && self.merges == other.merges && self.vocab == other.vocab
    }
}

impl Eq for BpeModel {}

impl BpeModel {
    pub fn byte_only(boundary_mode: BoundaryMode) -> Self {
        Self {
            vocab: Vocabulary::byte_base(),
            merges: Vec::new(),
            boundary_mode,
            ranks: HashMap::new(),
        }
    }

    /// Validates and assembles a model. Merge results must be ids
    /// `256, 257, ...` in rank order.
    pub fn new(vocab: Vocabulary, merges: Vec<MergeRule>, boundary_mode: BoundaryMode) -> Result<Self> {
        if vocab.len() != BYTE_BASE + merges.len() {
            return Err(Error::Validation(format!(
                "vocabulary has {} tokens but 256 + {} merges were given",
                vocab.len(),
                merges.len()
            )));
        }
        let mut ranks = HashMap::with_capacity(merges.len());
        for (i, m) in merges.iter().enumerate() {
            if m.rank as usize != i {
                return Err(Error::Validation(format!(
                    "merge at position {i} has rank {} (ranks must be 0..{} without gaps)",
                    m.rank,
                    merges.len()
                )));
            }
            let expected = (BYTE_BASE + i) as TokenId;
            if m.result != expected {
                return Err(Error::Validation(format!(
                    "merge rank {i} produces id {} but must produce {expected}",
                    m.result
                )));
            }
            if m.left >= m.result || m.right >= m.result {
                return Err(Error::Validation(format!(
                    "merge rank {i} uses an id not defined before it"
                )));
            }
            let (l, r, res) = (
                vocab.token(m.left).unwrap_or_default(),
                vocab.token(m.right).unwrap_or_default(),
                vocab.token(m.result).unwrap_or_default(),
            );
            if res.len() != l.len() + r.len() || &res[..l.len()] != l || &res[l.len()..] != r {
                return Err(Error::Validation(format!(
                    "merge rank {i}: token {} is not the concatenation of {} and {}",
                    m.result, m.left, m.right
                )));
            }
            if ranks.insert((m.left, m.right), m.rank).is_some() {
                return Err(Error::Validation(format!(
                    "merge rank {i} repeats pair ({}, {})",
                    m.left, m.right
                )));
            }
        }
        Ok(Self {
            vocab,
            merges,
            boundary_mode,
            ranks,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn merges(&self) -> &[MergeRule] {
        &self.merges
    }

    pub fn boundary_mode(&self) -> BoundaryMode {
        self.boundary_mode
    }

    /// The model restricted to its first `k` merge rules. Any rank prefix is
    /// itself a valid model.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.merges.len());
        let merges = self.merges[..k].to_vec();
        let ranks = merges.iter().map(|m| ((m.left, m.right), m.rank)).collect();
        Self {
            vocab: self.vocab.truncated(BYTE_BASE + k),
            merges,
            boundary_mode: self.boundary_mode,
            ranks,
        }
    }

    fn encode_segment(&self, segment: &[u8], out: &mut Vec<TokenId>) {
        let mut symbols: Vec<TokenId> = segment.iter().map(|&b| TokenId::from(b)).collect();
        if !self.ranks.is_empty() {
            while symbols.len() > 1 {
                let best = symbols
                    .windows(2)
                    .filter_map(|w| self.ranks.get(&(w[0], w[1])).copied())
                    .min();
                let Some(rank) = best else { break };
                let rule = self.merges[rank as usize];
                let mut merged = Vec::with_capacity(symbols.len());
                let mut i = 0;
                while i < symbols.len() {
                    if i + 1 < symbols.len() && symbols[i] == rule.left && symbols[i + 1] == rule.right {
                        merged.push(rule.result);
                        i += 2;
                    } else {
                        merged.push(symbols[i]);
                        i += 1;
                    }
                }
                symbols = merged;
            }
        }
        out.extend_from_slice(&symbols);
    }

    pub fn encode_ids(&self, text: &str) -> Vec<TokenId> {
        let mut ids = Vec::with_capacity(text.len());
        for seg in segments(text, self.boundary_mode) {
            self.encode_segment(seg, &mut ids);
        }
        ids
    }
}

/// Encodes with the lowest-rank applicable merge repeatedly, per segment.
pub fn bpe_encode(model: &BpeModel, text: &str) -> Encoding {
    Encoding::byte_fallback(model.encode_ids(text), text)
}

impl Tokenizer for BpeModel {
    fn encode(&self, text: &str) -> Encoding {
        bpe_encode(self, text)
    }

    fn decode(&self, ids: &[TokenId]) -> Result<String> {
        self.vocab.decode(ids)
    }

    fn count(&self, text: &str) -> usize {
        self.encode_ids(text).len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn segs(text: &str, mode: BoundaryMode) -> Vec<&str> {
        segments(text, mode).map(|s| std::str::from_utf8(s).unwrap()).collect()
    }

    #[test]
    fn whitespace_segments_attach_prefix() {
        assert_eq!(segs("ab ab ab", BoundaryMode::Whitespace), ["ab", " ab", " ab"]);
        assert_eq!(segs("a  b", BoundaryMode::Whitespace), ["a", " ", " b"]);
        assert_eq!(segs(" a\tb ", BoundaryMode::Whitespace), [" a", "\tb", " "]);
        assert_eq!(segs("a\u{3000}言", BoundaryMode::Whitespace), ["a", "\u{3000}言"]);
        assert!(segs("", BoundaryMode::Whitespace).is_empty());
        assert_eq!(segs("ab ab", BoundaryMode::None), ["ab ab"]);
    }

    #[test]
    fn boundary_mode_parses() {
        assert_eq!("none".parse::<BoundaryMode>().unwrap(), BoundaryMode::None);
        assert_eq!("whitespace".parse::<BoundaryMode>().unwrap(), BoundaryMode::Whitespace);
        assert!("space".parse::<BoundaryMode>().is_err());
    }

    fn model_from_pairs(pairs: &[(&[u8], &[u8])]) -> BpeModel {
        let mut vocab = Vocabulary::byte_base();
        let mut merges = Vec::new();
        for (rank, (l, r)) in pairs.iter().enumerate() {
            let left = vocab.id_of(l).unwrap();
            let right = vocab.id_of(r).unwrap();
            let result = vocab.push([*l, *r].concat()).unwrap();
            merges.push(MergeRule {
                rank: rank as u32,
                left,
                right,
                result,
            });
        }
        BpeModel::new(vocab, merges, BoundaryMode::None).unwrap()
    }

    #[test]
    fn encode_applies_lowest_rank_first() {
        let m = model_from_pairs(&[(b"a", b"a"), (b"aa", b"a"), (b"aaa", b"b")]);
        let ids = m.encode_ids("aaabdaaabac");
        let toks: Vec<&[u8]> = ids.iter().map(|&i| m.vocab().token(i).unwrap()).collect();
        assert_eq!(toks, [&b"aaab"[..], b"d", b"aaab", b"a", b"c"]);
        assert_eq!(m.decode(&ids).unwrap(), "aaabdaaabac");
    }

    #[test]
    fn byte_only_model_is_identity() {
        let m = BpeModel::byte_only(BoundaryMode::Whitespace);
        assert_eq!(bpe_encode(&m, "you").len(), 3);
        assert_eq!(bpe_encode(&m, "").len(), 0);
    }

    #[test]
    fn truncation_drops_later_rules() {
        let m = model_from_pairs(&[(b"a", b"a"), (b"aa", b"a"), (b"aaa", b"b")]);
        assert_eq!(m.truncated(0), BpeModel::byte_only(BoundaryMode::None));
        assert_eq!(m.truncated(1).count("aaab"), 3);
        assert_eq!(m.truncated(3), m);
        assert_eq!(m.truncated(99), m);
    }

    #[test]
    fn new_rejects_malformed_rules() {
        let good = model_from_pairs(&[(b"a", b"b")]);
        let mut bad = good.merges().to_vec();
        bad[0].rank = 1;
        assert!(BpeModel::new(good.vocab().clone(), bad, BoundaryMode::None).is_err());

        let mut bad = good.merges().to_vec();
        bad[0].left = b'x' as TokenId;
        assert!(BpeModel::new(good.vocab().clone(), bad, BoundaryMode::None).is_err());

        assert!(BpeModel::new(Vocabulary::byte_base(), good.merges().to_vec(), BoundaryMode::None).is_err());
    }
}
