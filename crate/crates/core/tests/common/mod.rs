//! Brute-force reference implementations used only by tests. None of these
//! call into the library's encoders or trainers.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// UTF-8 encoder over the codepoint table.
pub fn utf8_oracle(text: &str) -> Vec<u8> {
    let mut out = Vec::new();
    for c in text.chars() {
        let cp = c as u32;
        match cp {
            0..=0x7f => out.push(cp as u8),
            0x80..=0x7ff => {
                out.push(0xc0 | (cp >> 6) as u8);
                out.push(0x80 | (cp & 0x3f) as u8);
            }
            0x800..=0xffff => {
                out.push(0xe0 | (cp >> 12) as u8);
                out.push(0x80 | ((cp >> 6) & 0x3f) as u8);
                out.push(0x80 | (cp & 0x3f) as u8);
            }
            _ => {
                out.push(0xf0 | (cp >> 18) as u8);
                out.push(0x80 | ((cp >> 12) & 0x3f) as u8);
                out.push(0x80 | ((cp >> 6) & 0x3f) as u8);
                out.push(0x80 | (cp & 0x3f) as u8);
            }
        }
    }
    out
}

/// Random string mixing 1-, 2-, 3- and 4-byte codepoints and whitespace.
pub fn random_unicode<R: Rng>(rng: &mut R, max_chars: usize) -> String {
    let n = rng.gen_range(0..=max_chars);
    (0..n)
        .map(|_| loop {
            let cp = match rng.gen_range(0..6) {
                0 => rng.gen_range(0x20..0x7f),
                1 => *[0x20u32, 0x09, 0x0a, 0x3000, 0x85].get(rng.gen_range(0..5)).unwrap(),
                2 => rng.gen_range(0x80..0x800),
                3 => rng.gen_range(0x800..0x10000),
                4 => rng.gen_range(0x10000..0x110000),
                _ => rng.gen_range(0..0x110000),
            };
            if let Some(c) = char::from_u32(cp) {
                break c;
            }
        })
        .collect()
}

pub fn oracle_segments(text: &str, whitespace: bool) -> Vec<Vec<u8>> {
    if !whitespace {
        return if text.is_empty() {
            vec![]
        } else {
            vec![text.as_bytes().to_vec()]
        };
    }
    let mut segs: Vec<String> = Vec::new();
    for c in text.chars() {
        if c.is_whitespace() || segs.is_empty() {
            segs.push(String::new());
        }
        segs.last_mut().unwrap().push(c);
    }
    segs.into_iter().map(String::into_bytes).collect()
}

/// Merged token byte-strings in rank order from a full recount every
/// iteration. Ties: smallest concatenation, then smallest (left id, right id).
pub fn naive_bpe_train(docs: &[&str], n_merges: usize, whitespace: bool) -> Vec<(Vec<u8>, Vec<u8>)> {
    let mut vocab: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
    let id_of = |vocab: &Vec<Vec<u8>>, t: &[u8]| vocab.iter().position(|v| v == t).unwrap();
    let mut words: Vec<Vec<Vec<u8>>> = docs
        .iter()
        .flat_map(|d| oracle_segments(d, whitespace))
        .map(|s| s.iter().map(|&b| vec![b]).collect())
        .collect();
    let mut rules = Vec::new();
    for _ in 0..n_merges {
        let mut counts: BTreeMap<(Vec<u8>, Vec<u8>), usize> = BTreeMap::new();
        for w in &words {
            for i in 0..w.len().saturating_sub(1) {
                *counts.entry((w[i].clone(), w[i + 1].clone())).or_default() += 1;
            }
        }
        let best = counts
            .into_iter()
            .filter(|((l, r), _)| !vocab.contains(&[l.as_slice(), r.as_slice()].concat()))
            .map(|((l, r), c)| {
                let cat = [l.as_slice(), r.as_slice()].concat();
                let ids = (id_of(&vocab, &l), id_of(&vocab, &r));
                (std::cmp::Reverse(c), cat, ids, l, r)
            })
            .min();
        let Some((_, cat, _, l, r)) = best else { break };
        for w in words.iter_mut() {
            let mut out = Vec::new();
            let mut i = 0;
            while i < w.len() {
                if i + 1 < w.len() && w[i] == l && w[i + 1] == r {
                    out.push(cat.clone());
                    i += 2;
                } else {
                    out.push(w[i].clone());
                    i += 1;
                }
            }
            *w = out;
        }
        vocab.push(cat);
        rules.push((l, r));
    }
    rules
}

/// Applies the lowest-rank applicable rule to its first occurrence, repeatedly.
pub fn naive_bpe_encode(rules: &[(Vec<u8>, Vec<u8>)], text: &str, whitespace: bool) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for seg in oracle_segments(text, whitespace) {
        let mut syms: Vec<Vec<u8>> = seg.iter().map(|&b| vec![b]).collect();
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in 0..syms.len().saturating_sub(1) {
                if let Some(rank) = rules.iter().position(|(l, r)| *l == syms[i] && *r == syms[i + 1]) {
                    if best.is_none_or(|(br, _)| rank < br) {
                        best = Some((rank, i));
                    }
                }
            }
            let Some((_, i)) = best else { break };
            let merged = [syms[i].as_slice(), syms[i + 1].as_slice()].concat();
            syms.splice(i..i + 2, [merged]);
        }
        out.extend(syms);
    }
    out
}

/// Maximal munch by trying every length from longest to shortest.
pub fn naive_longest_match(tokens: &HashSet<Vec<u8>>, text: &[u8]) -> Vec<Vec<u8>> {
    let max = tokens.iter().map(Vec::len).max().unwrap_or(1);
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let len = (1..=max.min(text.len() - pos))
            .rev()
            .find(|&l| l == 1 || tokens.contains(&text[pos..pos + l]))
            .unwrap();
        out.push(text[pos..pos + len].to_vec());
        pos += len;
    }
    out
}

/// Non-overlapping left-to-right occurrences of `needle`.
pub fn naive_count(haystack: &[u8], needle: &[u8]) -> u64 {
    let mut n = 0;
    let mut i = 0;
    while i + needle.len() <= haystack.len() {
        if &haystack[i..i + needle.len()] == needle {
            n += 1;
            i += needle.len();
        } else {
            i += 1;
        }
    }
    n
}

/// Token totals per language under naive longest match with `tokens`.
pub fn naive_totals(lines: &BTreeMap<String, Vec<String>>, tokens: &HashSet<Vec<u8>>) -> BTreeMap<String, u64> {
    lines
        .iter()
        .map(|(code, ls)| {
            let n = ls
                .iter()
                .map(|l| naive_longest_match(tokens, l.as_bytes()).len() as u64)
                .sum();
            (code.clone(), n)
        })
        .collect()
}

/// max/min ratio of token totals.
pub fn spread(totals: &BTreeMap<String, u64>) -> f64 {
    let max = *totals.values().max().unwrap();
    let min = *totals.values().min().unwrap();
    max as f64 / min as f64
}

/// Replays a merge from scratch and checks that every added token came from
/// the language with the largest token total among those with an unused
/// candidate (smallest code on ties), and was that language's first unused
/// candidate.
///
/// `lines`: aligned sentences per language. `queues`: candidate byte-strings
/// per language in queue order. `added`: tokens with id >= 256 in id order,
/// with their recorded source language.
pub fn replay_greedy_merge(
    lines: &BTreeMap<String, Vec<String>>,
    queues: &BTreeMap<String, Vec<Vec<u8>>>,
    added: &[(Vec<u8>, String)],
) -> Result<(), String> {
    let mut vocab: HashSet<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
    for (step, (token, source)) in added.iter().enumerate() {
        let totals = naive_totals(lines, &vocab);
        let mut expected: Option<(&String, u64)> = None;
        for (code, queue) in queues {
            if queue.iter().all(|t| vocab.contains(t)) {
                continue;
            }
            let t = totals[code];
            if expected.is_none_or(|(_, best)| t > best) {
                expected = Some((code, t));
            }
        }
        let Some((lang, _)) = expected else {
            return Err(format!("step {step}: token added after every queue was exhausted"));
        };
        if lang != source {
            return Err(format!(
                "step {step}: expected source {lang}, got {source} (totals {totals:?})"
            ));
        }
        let want = queues[lang].iter().find(|t| !vocab.contains(*t)).unwrap();
        if want != token {
            return Err(format!("step {step}: expected token {want:?}, got {token:?}"));
        }
        vocab.insert(token.clone());
    }
    Ok(())
}
