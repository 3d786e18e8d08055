use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet};

use rayon::prelude::*;

use super::{segments, BoundaryMode, BpeModel};
use crate::error::{Error, Result};
use crate::vocab::{MergeRule, TokenId, Vocabulary, BYTE_BASE};

type Pair = (TokenId, TokenId);

struct Word {
    ids: Vec<TokenId>,
    count: i64,
}

/// Heap entry. Highest count wins; ties go to the lexicographically smallest
/// concatenated byte-string, then to the smaller (left, right) ids.
#[derive(PartialEq, Eq)]
struct Candidate {
    count: i64,
    bytes: Vec<u8>,
    pair: Pair,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.bytes.cmp(&self.bytes))
            .then_with(|| Reverse(self.pair).cmp(&Reverse(other.pair)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Trains a byte-level BPE model on `documents`.
///
/// Each iteration merges the adjacent pair with the highest count over all
/// segments. Pairs inside runs overlap when counted ("aaa" holds two `(a, a)`
/// pairs) while replacement is greedy left to right. A pair whose
/// concatenation is already a token is never merged again. Training stops at
/// `target_vocab_size` or when no pair is left.
pub fn bpe_train<S: AsRef<str> + Sync>(
    documents: &[S],
    target_vocab_size: usize,
    boundary_mode: BoundaryMode,
) -> Result<BpeModel> {
    if target_vocab_size < BYTE_BASE {
        return Err(Error::InvalidArgument(format!(
            "target vocabulary size {target_vocab_size} is below the {BYTE_BASE} byte tokens"
        )));
    }
    let max_merges = target_vocab_size - BYTE_BASE;

    let mut words = count_words(documents, boundary_mode);
    let (mut pair_counts, mut locations) = count_pairs(&words);

    let mut vocab = Vocabulary::byte_base();
    let mut merges = Vec::with_capacity(max_merges);
    let mut heap: BinaryHeap<Candidate> = pair_counts
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|(&pair, &count)| candidate(&vocab, pair, count))
        .collect();

    while merges.len() < max_merges {
        let Some(top) = heap.pop() else { break };
        if pair_counts.get(&top.pair).copied().unwrap_or(0) != top.count || top.count <= 0 {
            continue;
        }
        if vocab.contains(&top.bytes) {
            continue;
        }
        let (left, right) = top.pair;
        let result = vocab.push(top.bytes)?;
        merges.push(MergeRule {
            rank: merges.len() as u32,
            left,
            right,
            result,
        });

        let mut touched: HashSet<Pair> = HashSet::new();
        let mut word_ids: Vec<usize> = locations
            .remove(&top.pair)
            .map(|s| s.into_iter().collect())
            .unwrap_or_default();
        word_ids.sort_unstable();
        for wi in word_ids {
            let word = &mut words[wi];
            if !word.ids.windows(2).any(|w| (w[0], w[1]) == top.pair) {
                continue;
            }
            for w in word.ids.windows(2) {
                let p = (w[0], w[1]);
                *pair_counts.entry(p).or_default() -= word.count;
                touched.insert(p);
            }
            word.ids = replace_pair(&word.ids, top.pair, result);
            for w in word.ids.windows(2) {
                let p = (w[0], w[1]);
                *pair_counts.entry(p).or_default() += word.count;
                locations.entry(p).or_default().insert(wi);
                touched.insert(p);
            }
        }
        for p in touched {
            let count = pair_counts.get(&p).copied().unwrap_or(0);
            if count > 0 {
                heap.push(candidate(&vocab, p, count));
            } else {
                pair_counts.remove(&p);
            }
        }
    }
    log::debug!("bpe_train: {} merges, vocab {}", merges.len(), vocab.len());
    BpeModel::new(vocab, merges, boundary_mode)
}

fn candidate(vocab: &Vocabulary, pair: Pair, count: i64) -> Candidate {
    let mut bytes = vocab.token(pair.0).unwrap_or_default().to_vec();
    bytes.extend_from_slice(vocab.token(pair.1).unwrap_or_default());
    Candidate { count, bytes, pair }
}

pub(crate) fn replace_pair(ids: &[TokenId], pair: Pair, result: TokenId) -> Vec<TokenId> {
    let mut out = Vec::with_capacity(ids.len());
    let mut i = 0;
    while i < ids.len() {
        if i + 1 < ids.len() && (ids[i], ids[i + 1]) == pair {
            out.push(result);
            i += 2;
        } else {
            out.push(ids[i]);
            i += 1;
        }
    }
    out
}

/// Distinct segments with multiplicities, in byte order.
fn count_words<S: AsRef<str> + Sync>(documents: &[S], mode: BoundaryMode) -> Vec<Word> {
    let counts = documents
        .par_iter()
        .fold(HashMap::<&[u8], i64>::new, |mut acc, doc| {
            for seg in segments(doc.as_ref(), mode) {
                *acc.entry(seg).or_default() += 1;
            }
            acc
        })
        .reduce(HashMap::new, merge_counts);
    let mut words: Vec<(&[u8], i64)> = counts.into_iter().collect();
    words.sort_unstable();
    words
        .into_iter()
        .map(|(bytes, count)| Word {
            ids: bytes.iter().map(|&b| TokenId::from(b)).collect(),
            count,
        })
        .collect()
}

#[allow(clippy::type_complexity)]
fn count_pairs(words: &[Word]) -> (HashMap<Pair, i64>, HashMap<Pair, HashSet<usize>>) {
    let counts = words
        .par_iter()
        .fold(HashMap::<Pair, i64>::new, |mut acc, word| {
            for w in word.ids.windows(2) {
                *acc.entry((w[0], w[1])).or_default() += word.count;
            }
            acc
        })
        .reduce(HashMap::new, merge_counts);
    let mut locations: HashMap<Pair, HashSet<usize>> = HashMap::new();
    for (wi, word) in words.iter().enumerate() {
        for w in word.ids.windows(2) {
            locations.entry((w[0], w[1])).or_default().insert(wi);
        }
    }
    (counts, locations)
}

fn merge_counts<K: std::hash::Hash + Eq>(mut a: HashMap<K, i64>, b: HashMap<K, i64>) -> HashMap<K, i64> {
    if a.len() < b.len() {
        return merge_counts(b, a);
    }
    for (k, v) in b {
        *a.entry(k).or_default() += v;
    }
    a
}
