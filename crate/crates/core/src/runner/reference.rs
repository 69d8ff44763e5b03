//! Published model-comparison figures, shipped for side-by-side reports.
//! These are reference data only; nothing in this crate checks against them.

use serde::Serialize;

use crate::game::Style;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub model: &'static str,
    pub style: Style,
    pub bankrupt_pct: f64,
    /// `None` where the published SE is absent (rate of exactly zero).
    pub bankrupt_pct_se: Option<f64>,
    pub index: f64,
    pub index_se: f64,
    pub rounds: f64,
    pub rounds_se: f64,
    pub total_bet: f64,
    pub total_bet_se: f64,
    pub net_pl: f64,
    pub net_pl_se: f64,
}

const fn row(
    model: &'static str,
    style: Style,
    bankrupt: (f64, Option<f64>),
    index: (f64, f64),
    rounds: (f64, f64),
    total_bet: (f64, f64),
    net_pl: (f64, f64),
) -> ReferenceRow {
    ReferenceRow {
        model,
        style,
        bankrupt_pct: bankrupt.0,
        bankrupt_pct_se: bankrupt.1,
        index: index.0,
        index_se: index.1,
        rounds: rounds.0,
        rounds_se: rounds.1,
        total_bet: total_bet.0,
        total_bet_se: total_bet.1,
        net_pl: net_pl.0,
        net_pl_se: net_pl.1,
    }
}

/// Published per-model results, 1,600 games per row.
pub const PUBLISHED_TABLE: [ReferenceRow; 8] = [
    row("GPT-4o-mini", Style::Fixed, (0.00, None), (0.025, 0.000), (1.79, 0.06), (17.93, 0.60), (-1.69, 0.44)),
    row("GPT-4o-mini", Style::Variable, (21.31, Some(1.02)), (0.172, 0.005), (5.46, 0.18), (128.30, 6.01), (-11.00, 3.09)),
    row("GPT-4.1-mini", Style::Fixed, (0.00, None), (0.031, 0.000), (2.56, 0.08), (25.56, 0.76), (-1.60, 0.55)),
    row("GPT-4.1-mini", Style::Variable, (6.31, Some(0.61)), (0.077, 0.002), (7.60, 0.27), (82.30, 3.59), (-7.41, 1.47)),
    row("Gemini-2.5-Flash", Style::Fixed, (3.12, Some(0.44)), (0.042, 0.001), (5.84, 0.20), (58.44, 1.95), (-5.34, 0.85)),
    row("Gemini-2.5-Flash", Style::Variable, (48.06, Some(1.25)), (0.265, 0.005), (3.94, 0.13), (176.68, 17.02), (-27.00, 2.84)),
    row("Claude-3.5-Haiku", Style::Fixed, (0.00, None), (0.041, 0.000), (5.15, 0.14), (51.49, 1.40), (-4.90, 0.73)),
    row("Claude-3.5-Haiku", Style::Variable, (20.50, Some(1.01)), (0.186, 0.003), (27.52, 0.62), (483.12, 23.37), (-51.77, 2.02)),
];
