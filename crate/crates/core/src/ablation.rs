//! How much longer encodings get when only a prefix of the merge list is kept.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bpe::BpeModel;
use crate::encoding::Tokenizer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationPoint {
    pub fraction: f64,
    /// Merge rules kept: `floor(fraction * merges)`.
    pub merges_kept: usize,
    pub token_total: u64,
    /// `token_total / token_total at fraction 1.0`.
    pub length_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCurve {
    /// Ascending fractions, ending at 1.0.
    pub points: Vec<AblationPoint>,
}

impl AblationCurve {
    pub fn fractions(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.fraction).collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("fraction\ttokens\tlength_ratio\n");
        for p in &self.points {
            out.push_str(&format!(
                "{:.4}\t{}\t{:.4}\n",
                p.fraction, p.token_total, p.length_ratio
            ));
        }
        out
    }
}

/// Encodes `documents` with the first `floor(f * |merges|)` merges for each
/// fraction `f`. Fractions must lie in (0, 1] and include 1.0; duplicates are
/// collapsed and the output is sorted.
pub fn ablate<S: AsRef<str> + Sync>(model: &BpeModel, documents: &[S], fractions: &[f64]) -> Result<AblationCurve> {
    if model.merges().is_empty() {
        return Err(Error::InvalidArgument(
            "ablation needs a model with at least one merge".into(),
        ));
    }
    if let Some(&bad) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(Error::InvalidArgument(format!("fraction {bad} is outside (0, 1]")));
    }
    let mut fractions = fractions.to_vec();
    fractions.sort_by(f64::total_cmp);
    fractions.dedup();
    if fractions.last() != Some(&1.0) {
        return Err(Error::InvalidArgument("fractions must include 1.0".into()));
    }

    let n_merges = model.merges().len();
    let totals: Vec<(usize, u64)> = fractions
        .par_iter()
        .map(|&f| {
            let k = ((f * n_merges as f64).floor() as usize).min(n_merges);
            let truncated = model.truncated(k);
            let total = documents.iter().map(|d| truncated.count(d.as_ref()) as u64).sum();
            (k, total)
        })
        .collect();
    let full = totals.last().map_or(0, |&(_, t)| t);
    if full == 0 {
        return Err(Error::DegenerateDenominator("documents encode to zero tokens".into()));
    }
    let points = fractions
        .iter()
        .zip(totals)
        .map(|(&fraction, (merges_kept, token_total))| AblationPoint {
            fraction,
            merges_kept,
            token_total,
            length_ratio: token_total as f64 / full as f64,
        })
        .collect();
    Ok(AblationCurve { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpe::{bpe_train, BoundaryMode};

    fn model() -> BpeModel {
        bpe_train(&["aaabdaaabac"], 259, BoundaryMode::None).unwrap()
    }

    #[test]
    fn full_fraction_is_one() {
        let c = ablate(&model(), &["aaabdaaabac"], &[1.0]).unwrap();
        assert_eq!(c.points.len(), 1);
        assert_eq!(c.points[0].length_ratio, 1.0);
        assert_eq!(c.points[0].token_total, 5);
        assert_eq!(c.to_tsv(), "fraction\ttokens\tlength_ratio\n1.0000\t5\t1.0000\n");
    }

    #[test]
    fn zero_prefix_is_byte_count() {
        let c = ablate(&model(), &["aaabdaaabac"], &[0.1, 1.0]).unwrap();
        assert_eq!(c.points[0].merges_kept, 0);
        assert_eq!(c.points[0].token_total, 11);
        assert_eq!(c.points[0].length_ratio, 11.0 / 5.0);
    }

    #[test]
    fn input_validation() {
        let m = model();
        assert!(ablate(&m, &["a"], &[0.0, 1.0]).is_err());
        assert!(ablate(&m, &["a"], &[1.5]).is_err());
        assert!(ablate(&m, &["a"], &[0.5]).is_err());
        assert!(ablate(&m, &["a"], &[f64::NAN, 1.0]).is_err());
        assert!(ablate(&BpeModel::byte_only(BoundaryMode::None), &["a"], &[1.0]).is_err());
        let none: [&str; 0] = [];
        assert!(matches!(
            ablate(&m, &none, &[1.0]),
            Err(Error::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn unsorted_input_is_sorted() {
        let c = ablate(&model(), &["aaabdaaabac"], &[1.0, 0.34, 0.67, 0.34]).unwrap();
        assert_eq!(c.fractions(), vec![0.34, 0.67, 1.0]);
        assert_eq!(
            c.points.iter().map(|p| p.merges_kept).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
    }
}
