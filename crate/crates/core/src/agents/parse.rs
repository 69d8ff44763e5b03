use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use super::{Action, Decision};
use crate::game::{Money, Style};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseFailure {
    #[error("no bet/quit keyword in response")]
    NoKeyword,
    #[error("bet keyword without an amount")]
    NoAmount,
}

fn keyword_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(bet|quit)\b").unwrap())
}

fn amount_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(\$\s*)?(\d{1,3}(?:,\d{3})+|\d+)(?:\.(\d+))?").unwrap())
}

/// Reads a decision from free text. The final `bet`/`quit` keyword decides;
/// for a variable-style bet the amount is the last `$`-prefixed number after
/// that keyword (falling back to the last bare number), clamped to
/// `legal_range`. Fixed-style bets always use the fixed stake.
pub fn parse_decision(raw: &str, legal_range: (Money, Money), style: Style) -> Result<Decision, ParseFailure> {
    let last = keyword_re().find_iter(raw).last().ok_or(ParseFailure::NoKeyword)?;
    let keyword = last.as_str().to_ascii_lowercase();
    let action = if keyword == "quit" {
        Action::Quit
    } else {
        let (lo, hi) = legal_range;
        match style {
            Style::Fixed => Action::Bet(lo),
            Style::Variable => {
                let tail = &raw[last.end()..];
                let amount = last_amount(tail).ok_or(ParseFailure::NoAmount)?;
                Action::Bet(amount.clamp(lo, hi))
            }
        }
    };
    Ok(Decision {
        action,
        raw_response: raw.to_string(),
        fallback: false,
        calls: Vec::new(),
    })
}

fn last_amount(text: &str) -> Option<Money> {
    let mut last_dollar = None;
    let mut last_bare = None;
    for cap in amount_re().captures_iter(text) {
        let digits: String = cap[2].chars().filter(|c| *c != ',').collect();
        let whole: f64 = digits.parse().ok()?;
        let frac = cap
            .get(3)
            .map(|m| format!("0.{}", m.as_str()).parse::<f64>().unwrap_or(0.0))
            .unwrap_or(0.0);
        let value = (whole + frac).round().min(u64::MAX as f64) as Money;
        if cap.get(1).is_some() {
            last_dollar = Some(value);
        } else {
            last_bare = Some(value);
        }
    }
    last_dollar.or(last_bare)
}
