use std::collections::BTreeMap;
use std::path::Path;

use super::{Aggregation, PremiumReport, PremiumRow};
use crate::corpus::LanguageCode;
use crate::error::{Error, Result};

pub const TSV_HEADER: &str = "language\ttokens\tpremium\tunk_fraction\tincluded";

/// Machine-readable TSV, rows sorted by language code, ratios to 4 decimals.
pub fn report_to_tsv(report: &PremiumReport) -> String {
    let mut out = String::from(TSV_HEADER);
    out.push('\n');
    for (code, r) in &report.rows {
        out.push_str(&format!(
            "{code}\t{}\t{:.4}\t{:.4}\t{}\n",
            r.token_total, r.premium, r.unk_fraction, r.included
        ));
    }
    out
}

pub fn report_to_json(report: &PremiumReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Human-readable table with 2-decimal premiums; excluded rows show U+2014 instead.
pub fn report_to_pretty(report: &PremiumReport) -> String {
    let width = report
        .rows
        .keys()
        .map(|c| c.as_str().chars().count())
        .max()
        .unwrap_or(0)
        .max("language".len());
    let mut out = format!(
        "# pivot: {}  aggregation: {}  dropped pairs: {}\n",
        report.pivot, report.aggregation, report.dropped_pairs
    );
    out.push_str(&format!(
        "{:<width$}  {:>10}  {:>7}  {:>5}\n",
        "language", "tokens", "premium", "unk"
    ));
    for (code, r) in &report.rows {
        let premium = if r.included {
            format!("{:.2}", r.premium)
        } else {
            "—".to_string()
        };
        out.push_str(&format!(
            "{:<width$}  {:>10}  {:>7}  {:>5.2}\n",
            code.as_str(),
            r.token_total,
            premium,
            r.unk_fraction
        ));
    }
    out
}

pub fn report_from_json(text: &str, source: &Path) -> Result<PremiumReport> {
    serde_json::from_str(text).map_err(|e| Error::parse(source, e.line(), e.to_string()))
}

/// Parses TSV produced by [`report_to_tsv`]. TSV has no codepoint totals, so
/// those come back as zero. Without an explicit `pivot`, the single row
/// whose premium is exactly 1 is taken.
pub fn report_from_tsv(text: &str, source: &Path, pivot: Option<&str>) -> Result<PremiumReport> {
    let mut lines = text.split('\n').enumerate().filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, h)) if h == TSV_HEADER => {}
        _ => return Err(Error::parse(source, 1, format!("expected header {TSV_HEADER:?}"))),
    }
    let mut rows = BTreeMap::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(Error::parse(
                source,
                lineno,
                format!("expected 5 fields, found {}", f.len()),
            ));
        }
        let bad = |what: &str| Error::parse(source, lineno, format!("invalid {what}"));
        let code = LanguageCode::new(f[0]).map_err(|_| bad("language code"))?;
        let row = PremiumRow {
            token_total: f[1].parse().map_err(|_| bad("token count"))?,
            premium: f[2].parse().map_err(|_| bad("premium"))?,
            unk_fraction: f[3].parse().map_err(|_| bad("unk fraction"))?,
            codepoints: 0,
            included: f[4].parse().map_err(|_| bad("included flag"))?,
        };
        rows.insert(code, row);
    }
    let pivot = match pivot {
        Some(p) => LanguageCode::new(p)?,
        None => {
            let ones: Vec<&LanguageCode> = rows.iter().filter(|(_, r)| r.premium == 1.0).map(|(c, _)| c).collect();
            match ones.as_slice() {
                [one] => (*one).clone(),
                _ => {
                    return Err(Error::InvalidArgument(
                        "cannot infer the pivot from TSV; pass it explicitly".into(),
                    ))
                }
            }
        }
    };
    if !rows.contains_key(&pivot) {
        return Err(Error::Validation(format!("pivot {pivot} is not in the report")));
    }
    Ok(PremiumReport {
        pivot,
        aggregation: Aggregation::TotalRatio,
        unk_threshold: None,
        dropped_pairs: 0,
        rows,
    })
}
