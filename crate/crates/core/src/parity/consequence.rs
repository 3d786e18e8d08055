//! Cost, context-window and latency consequences of a premium report.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PremiumReport;
use crate::corpus::LanguageCode;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PricingKind {
    PerToken,
    PerCharacter,
}

impl fmt::Display for PricingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PricingKind::PerToken => "per-token",
            PricingKind::PerCharacter => "per-char",
        })
    }
}

impl FromStr for PricingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-token" => Ok(PricingKind::PerToken),
            "per-char" | "per-character" => Ok(PricingKind::PerCharacter),
            other => Err(Error::InvalidArgument(format!(
                "unknown pricing {other:?} (expected per-token or per-char)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingScheme {
    kind: PricingKind,
    unit_price: f64,
}

impl PricingScheme {
    pub fn new(kind: PricingKind, unit_price: f64) -> Result<Self> {
        if !unit_price.is_finite() || unit_price < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "unit price must be a finite non-negative number, got {unit_price}"
            )));
        }
        Ok(Self { kind, unit_price })
    }

    pub fn kind(&self) -> PricingKind {
        self.kind
    }

    pub fn unit_price(&self) -> f64 {
        self.unit_price
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub units: u64,
    pub cost: f64,
    pub cost_premium: f64,
}

/// Billing units and cost per language.
///
/// Per-token pricing copies the token premium unchanged. Per-character
/// pricing bills codepoints, so its premium is the codepoint ratio against
/// the pivot and needs `char_counts`.
pub fn cost_table(
    report: &PremiumReport,
    pricing: PricingScheme,
    char_counts: Option<&BTreeMap<LanguageCode, u64>>,
) -> Result<BTreeMap<LanguageCode, CostRow>> {
    match pricing.kind {
        PricingKind::PerToken => Ok(report
            .rows
            .iter()
            .map(|(code, row)| {
                let row = CostRow {
                    units: row.token_total,
                    cost: row.token_total as f64 * pricing.unit_price,
                    cost_premium: row.premium,
                };
                (code.clone(), row)
            })
            .collect()),
        PricingKind::PerCharacter => {
            let chars = char_counts
                .ok_or_else(|| Error::InvalidArgument("per-character pricing needs codepoint counts".into()))?;
            let lookup = |code: &LanguageCode| {
                chars
                    .get(code)
                    .copied()
                    .ok_or_else(|| Error::InvalidArgument(format!("no codepoint count for {code}")))
            };
            let pivot_chars = lookup(&report.pivot)?;
            if pivot_chars == 0 {
                return Err(Error::DegenerateDenominator(format!(
                    "pivot {} has zero codepoints",
                    report.pivot
                )));
            }
            report
                .rows
                .keys()
                .map(|code| {
                    let units = lookup(code)?;
                    let row = CostRow {
                        units,
                        cost: units as f64 * pricing.unit_price,
                        cost_premium: units as f64 / pivot_chars as f64,
                    };
                    Ok((code.clone(), row))
                })
                .collect()
        }
    }
}

fn check_window(window_tokens: u64) -> Result<()> {
    if window_tokens == 0 {
        return Err(Error::InvalidArgument("context window must be positive".into()));
    }
    Ok(())
}

/// Pivot-equivalent tokens of content that fit in a window of
/// `window_tokens` for one language: `window / premium`.
pub fn effective_context(report: &PremiumReport, language: &str, window_tokens: u64) -> Result<f64> {
    check_window(window_tokens)?;
    let row = report.row(language)?;
    if !row.included {
        return Err(Error::ExcludedLanguage(language.to_string()));
    }
    Ok(window_tokens as f64 / row.premium)
}

/// [`effective_context`] for every included language.
pub fn context_capacity(report: &PremiumReport, window_tokens: u64) -> Result<BTreeMap<LanguageCode, f64>> {
    check_window(window_tokens)?;
    Ok(report
        .rows
        .iter()
        .filter(|(_, r)| r.included)
        .map(|(code, r)| (code.clone(), window_tokens as f64 / r.premium))
        .collect())
}

/// Estimated processing time, linear in token count.
pub fn latency_table(report: &PremiumReport, seconds_per_token: f64) -> Result<BTreeMap<LanguageCode, f64>> {
    if !seconds_per_token.is_finite() || seconds_per_token < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "seconds per token must be a finite non-negative number, got {seconds_per_token}"
        )));
    }
    Ok(report
        .rows
        .iter()
        .map(|(code, r)| (code.clone(), seconds_per_token * r.token_total as f64))
        .collect())
}
