//! Greedy maximal-munch encoding over a byte trie.

use crate::encoding::{Encoding, Tokenizer};
use crate::error::Result;
use crate::vocab::{TokenId, Vocabulary};

#[derive(Debug, Clone, Default)]
struct Node {
    // Sorted by byte.
    children: Vec<(u8, u32)>,
    token: Option<TokenId>,
}

#[derive(Debug, Clone)]
pub struct ByteTrie {
    nodes: Vec<Node>,
}

impl Default for ByteTrie {
    fn default() -> Self {
        Self {
            nodes: vec![Node::default()],
        }
    }
}

impl ByteTrie {
    pub fn from_vocab(vocab: &Vocabulary) -> Self {
        let mut trie = Self::default();
        for (id, tok) in vocab.iter() {
            trie.insert(tok, id);
        }
        trie
    }

    pub fn insert(&mut self, key: &[u8], id: TokenId) {
        let mut node = 0usize;
        for &b in key {
            node = match self.nodes[node].children.binary_search_by_key(&b, |&(k, _)| k) {
                Ok(i) => self.nodes[node].children[i].1 as usize,
                Err(i) => {
                    let next = self.nodes.len();
                    self.nodes.push(Node::default());
                    self.nodes[node].children.insert(i, (b, next as u32));
                    next
                }
            };
        }
        self.nodes[node].token = Some(id);
    }

    /// Longest token that is a prefix of `bytes`, as `(id, byte length)`.
    pub fn longest_prefix(&self, bytes: &[u8]) -> Option<(TokenId, usize)> {
        let mut node = 0usize;
        let mut best = None;
        for (i, &b) in bytes.iter().enumerate() {
            let children = &self.nodes[node].children;
            match children.binary_search_by_key(&b, |&(k, _)| k) {
                Ok(j) => node = children[j].1 as usize,
                Err(_) => break,
            }
            if let Some(id) = self.nodes[node].token {
                best = Some((id, i + 1));
            }
        }
        best
    }

    /// Appends the maximal-munch segmentation of `bytes` to `out`. Bytes with
    /// no matching token are emitted as their byte id.
    pub fn segment_into(&self, bytes: &[u8], out: &mut Vec<TokenId>) {
        let mut pos = 0;
        while pos < bytes.len() {
            match self.longest_prefix(&bytes[pos..]) {
                Some((id, len)) => {
                    out.push(id);
                    pos += len;
                }
                None => {
                    out.push(TokenId::from(bytes[pos]));
                    pos += 1;
                }
            }
        }
    }

    pub fn count(&self, bytes: &[u8]) -> usize {
        let mut pos = 0;
        let mut n = 0;
        while pos < bytes.len() {
            pos += self.longest_prefix(&bytes[pos..]).map_or(1, |(_, len)| len);
            n += 1;
        }
        n
    }
}

/// A vocabulary encoded by greedy longest match with byte fallback.
#[derive(Debug, Clone)]
pub struct LongestMatch {
    vocab: Vocabulary,
    trie: ByteTrie,
}

impl LongestMatch {
    pub fn new(vocab: Vocabulary) -> Self {
        let trie = ByteTrie::from_vocab(&vocab);
        Self { vocab, trie }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn into_vocab(self) -> Vocabulary {
        self.vocab
    }
}

pub fn longest_match_encode(vocab: &Vocabulary, text: &str) -> Encoding {
    LongestMatch::new(vocab.clone()).encode(text)
}

impl Tokenizer for LongestMatch {
    fn encode(&self, text: &str) -> Encoding {
        let mut ids = Vec::with_capacity(text.len());
        self.trie.segment_into(text.as_bytes(), &mut ids);
        Encoding::byte_fallback(ids, text)
    }

    fn decode(&self, ids: &[TokenId]) -> Result<String> {
        self.vocab.decode(ids)
    }

    fn count(&self, text: &str) -> usize {
        self.trie.count(text.as_bytes())
    }
}
