//! Tokenization premiums over parallel corpora.
//!
//! The premium of language A against pivot B is `|t(s_A)| / |t(s_B)|`, summed
//! over every aligned sentence pair before dividing (total-ratio) or averaged
//! per pair (mean-of-ratios).

mod consequence;
mod render;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{LanguageCode, ParallelCorpus};
use crate::encoding::Tokenizer;
use crate::error::{Error, Result};

pub use consequence::{
    context_capacity, cost_table, effective_context, latency_table, CostRow, PricingKind, PricingScheme,
};
pub use render::{report_from_json, report_from_tsv, report_to_json, report_to_pretty, report_to_tsv, TSV_HEADER};

/// Default UNK threshold: at most 10% of input codepoints may be UNK.
pub const DEFAULT_UNK_THRESHOLD: f64 = 0.10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregation {
    #[default]
    #[serde(rename = "total-ratio")]
    TotalRatio,
    #[serde(rename = "mean-of-ratios")]
    MeanOfRatios,
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::TotalRatio => "total-ratio",
            Aggregation::MeanOfRatios => "mean-of-ratios",
        })
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "total" | "total-ratio" => Ok(Aggregation::TotalRatio),
            "mean" | "mean-of-ratios" => Ok(Aggregation::MeanOfRatios),
            other => Err(Error::InvalidArgument(format!(
                "unknown aggregation {other:?} (expected total or mean)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiumRow {
    /// Token count over the aligned (non-empty) line pairs.
    pub token_total: u64,
    pub premium: f64,
    pub unk_fraction: f64,
    /// Codepoints over the same aligned line pairs as `token_total`.
    pub codepoints: u64,
    pub included: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiumReport {
    pub pivot: LanguageCode,
    pub aggregation: Aggregation,
    /// Set once [`apply_unk_filter`] has run.
    pub unk_threshold: Option<f64>,
    /// Line pairs left out because some language had an empty sentence.
    pub dropped_pairs: usize,
    pub rows: BTreeMap<LanguageCode, PremiumRow>,
}

impl PremiumReport {
    pub fn row(&self, code: &str) -> Result<&PremiumRow> {
        self.rows
            .get(code)
            .ok_or_else(|| Error::InvalidArgument(format!("language {code} is not in the report")))
    }
}

/// `|t(s_a)| / |t(s_b)|` for one sentence pair.
pub fn sentence_premium(tokenizer: &dyn Tokenizer, s_a: &str, s_b: &str) -> Result<f64> {
    let denom = tokenizer.count(s_b);
    if denom == 0 {
        return Err(Error::DegenerateDenominator(
            "reference sentence tokenizes to zero tokens".into(),
        ));
    }
    Ok(tokenizer.count(s_a) as f64 / denom as f64)
}

struct LangStats {
    line_lengths: Vec<u64>,
    unk: u64,
    /// Over all sentences.
    codepoints: u64,
    aligned_codepoints: u64,
}

fn language_stats(tokenizer: &dyn Tokenizer, sentences: &[String], aligned: &[bool]) -> LangStats {
    let mut stats = LangStats {
        line_lengths: Vec::with_capacity(sentences.len()),
        unk: 0,
        codepoints: 0,
        aligned_codepoints: 0,
    };
    for (s, &keep) in sentences.iter().zip(aligned) {
        let enc = tokenizer.encode(s);
        stats.unk += enc.unk_codepoints as u64;
        stats.codepoints += enc.total_codepoints as u64;
        if keep {
            stats.line_lengths.push(enc.len() as u64);
            stats.aligned_codepoints += enc.total_codepoints as u64;
        }
    }
    stats
}

/// Per-language token totals and premiums against `pivot`.
///
/// Line pairs where any language has an empty sentence are dropped from the
/// sums; UNK fractions are measured over every sentence. All rows start out
/// included; see [`apply_unk_filter`].
pub fn corpus_premiums(
    tokenizer: &dyn Tokenizer,
    corpus: &ParallelCorpus,
    pivot: &str,
    aggregation: Aggregation,
) -> Result<PremiumReport> {
    let pivot = corpus
        .languages()
        .find(|c| c.as_str() == pivot)
        .cloned()
        .ok_or_else(|| Error::Validation(format!("pivot {pivot} is not in the corpus")))?;

    let mut aligned = vec![false; corpus.n_sentences()];
    for i in corpus.aligned_line_indices() {
        aligned[i] = true;
    }
    let dropped_pairs = aligned.iter().filter(|&&a| !a).count();
    if dropped_pairs > 0 {
        log::warn!("dropped {dropped_pairs} line pairs with an empty sentence");
    }

    let langs: Vec<(&LanguageCode, &[String])> = corpus.iter().collect();
    let stats: Vec<LangStats> = langs
        .par_iter()
        .map(|(_, sents)| language_stats(tokenizer, sents, &aligned))
        .collect();
    let by_code: BTreeMap<&LanguageCode, &LangStats> = langs.iter().map(|(c, _)| *c).zip(stats.iter()).collect();

    let pivot_stats = by_code[&pivot];
    let pivot_total: u64 = pivot_stats.line_lengths.iter().sum();
    if pivot_total == 0 {
        return Err(Error::DegenerateDenominator(format!("pivot {pivot} has zero tokens")));
    }

    let mut rows = BTreeMap::new();
    for (code, st) in by_code {
        let token_total: u64 = st.line_lengths.iter().sum();
        let premium = match aggregation {
            Aggregation::TotalRatio => token_total as f64 / pivot_total as f64,
            Aggregation::MeanOfRatios => {
                let ratios: Vec<f64> = st
                    .line_lengths
                    .iter()
                    .zip(&pivot_stats.line_lengths)
                    .filter(|(_, &p)| p > 0)
                    .map(|(&l, &p)| l as f64 / p as f64)
                    .collect();
                ratios.iter().sum::<f64>() / ratios.len() as f64
            }
        };
        let unk_fraction = if st.codepoints == 0 {
            0.0
        } else {
            st.unk as f64 / st.codepoints as f64
        };
        rows.insert(
            code.clone(),
            PremiumRow {
                token_total,
                premium,
                unk_fraction,
                codepoints: st.aligned_codepoints,
                included: true,
            },
        );
    }
    Ok(PremiumReport {
        pivot,
        aggregation,
        unk_threshold: None,
        dropped_pairs,
        rows,
    })
}

/// Marks rows with `unk_fraction > threshold` as excluded. The comparison is
/// strict, so a fraction equal to the threshold stays included.
pub fn apply_unk_filter(mut report: PremiumReport, threshold: f64) -> Result<PremiumReport> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(format!(
            "UNK threshold {threshold} is outside [0, 1]"
        )));
    }
    for row in report.rows.values_mut() {
        row.included = row.unk_fraction <= threshold;
    }
    report.unk_threshold = Some(threshold);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::{ByteTokenizer, ClosedCharTokenizer, CodepointTokenizer};

    fn code(s: &str) -> LanguageCode {
        LanguageCode::new(s).unwrap()
    }

    fn corpus(langs: &[(&str, &[&str])]) -> ParallelCorpus {
        ParallelCorpus::new(
            langs
                .iter()
                .map(|(c, s)| (code(c), s.iter().map(|x| x.to_string()).collect())),
            None,
        )
        .unwrap()
    }

    #[test]
    fn sentence_premiums() {
        assert_eq!(sentence_premium(&ByteTokenizer, "same", "same").unwrap(), 1.0);
        assert_eq!(sentence_premium(&ByteTokenizer, "защо", "why").unwrap(), 8.0 / 3.0);
        assert!(matches!(
            sentence_premium(&ByteTokenizer, "a", ""),
            Err(Error::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn total_ratio_premiums() {
        // 10 vs 25 bytes.
        let c = corpus(&[
            ("aaa", &["hello", "world"]),
            ("bbb", &["hellohello", "worldworldworld"]),
        ]);
        let r = corpus_premiums(&ByteTokenizer, &c, "aaa", Aggregation::TotalRatio).unwrap();
        assert_eq!(r.rows["aaa"].premium, 1.0);
        assert_eq!(r.rows["bbb"].premium, 2.5);
        assert_eq!(r.rows["bbb"].token_total, 25);

        let r = corpus_premiums(&ByteTokenizer, &c, "aaa", Aggregation::MeanOfRatios).unwrap();
        assert_eq!(r.rows["aaa"].premium, 1.0);
        assert_eq!(r.rows["bbb"].premium, 2.5);
    }

    #[test]
    fn mean_of_ratios_differs_from_total() {
        let c = corpus(&[("a", &["x", "xxxx"]), ("b", &["xx", "xxxx"])]);
        let total = corpus_premiums(&ByteTokenizer, &c, "a", Aggregation::TotalRatio).unwrap();
        let mean = corpus_premiums(&ByteTokenizer, &c, "a", Aggregation::MeanOfRatios).unwrap();
        assert_eq!(total.rows["b"].premium, 6.0 / 5.0);
        assert_eq!(mean.rows["b"].premium, 1.5);
    }

    #[test]
    fn empty_lines_are_dropped_pairwise() {
        let c = corpus(&[("a", &["abc", "", "d"]), ("b", &["abcdef", "zzz", ""])]);
        let r = corpus_premiums(&ByteTokenizer, &c, "a", Aggregation::TotalRatio).unwrap();
        assert_eq!(r.dropped_pairs, 2);
        assert_eq!(r.rows["a"].token_total, 3);
        assert_eq!(r.rows["b"].premium, 2.0);
    }

    #[test]
    fn pivot_errors() {
        let c = corpus(&[("a", &["x"]), ("b", &["y"])]);
        assert!(matches!(
            corpus_premiums(&ByteTokenizer, &c, "zzz", Aggregation::TotalRatio),
            Err(Error::Validation(_))
        ));
        let c = corpus(&[("a", &[""]), ("b", &["y"])]);
        assert!(matches!(
            corpus_premiums(&ByteTokenizer, &c, "a", Aggregation::TotalRatio),
            Err(Error::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn unk_filter_boundaries() {
        let c = corpus(&[("a", &["abcdefghij"]), ("b", &["abcdefghiж"]), ("c", &["abcdefghжж"])]);
        let t = ClosedCharTokenizer::new('a'..='z');
        let r = corpus_premiums(&t, &c, "a", Aggregation::TotalRatio).unwrap();
        assert_eq!(r.rows["b"].unk_fraction, 0.1);
        let r = apply_unk_filter(r, DEFAULT_UNK_THRESHOLD).unwrap();
        assert!(r.rows["a"].included);
        assert!(r.rows["b"].included);
        assert!(!r.rows["c"].included);
        assert_eq!(r.rows["c"].premium, 1.0);
        assert_eq!(r.unk_threshold, Some(0.1));
        assert!(apply_unk_filter(r.clone(), 1.5).is_err());
        assert!(apply_unk_filter(r, -0.1).is_err());
    }

    #[test]
    fn codepoint_premium() {
        let c = corpus(&[("eng", &["why"]), ("bul", &["защо"])]);
        let r = corpus_premiums(&CodepointTokenizer, &c, "eng", Aggregation::TotalRatio).unwrap();
        assert_eq!(r.rows["bul"].premium, 4.0 / 3.0);
    }
}
