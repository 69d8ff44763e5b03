use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::json;

use super::aggregate::{aggregate, ExperimentAggregate};
use super::reference::PUBLISHED_TABLE;
use super::RunError;
use crate::game::{Outcome, Style};
use crate::metrics::MAX_STREAK;
use crate::prompt::Component;
use crate::stats::{complexity_trend, component_effect, metric_table, pearson, Metric, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    Table2,
    Scatter,
    Components,
    Complexity,
    Streaks,
}

impl ReportKind {
    pub const ALL: [ReportKind; 5] = [
        ReportKind::Table2,
        ReportKind::Scatter,
        ReportKind::Components,
        ReportKind::Complexity,
        ReportKind::Streaks,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReportKind::Table2 => "table2",
            ReportKind::Scatter => "scatter",
            ReportKind::Components => "components",
            ReportKind::Complexity => "complexity",
            ReportKind::Streaks => "streaks",
        }
    }
}

impl fmt::Display for ReportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReportKind {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "table2" => ReportKind::Table2,
            "scatter" | "scatter_index_bankruptcy" => ReportKind::Scatter,
            "components" | "component_effects" => ReportKind::Components,
            "complexity" | "complexity_trend" => ReportKind::Complexity,
            "streaks" => ReportKind::Streaks,
            other => return Err(RunError::UnknownReport(other.to_string())),
        })
    }
}

const STYLES: [Style; 2] = [Style::Fixed, Style::Variable];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn to_csv(header: &[&str], rows: Vec<Vec<String>>) -> Result<String, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| RunError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

const TABLE2_HEADER: [&str; 12] = [
    "bankrupt_pct",
    "bankrupt_pct_se",
    "index",
    "index_se",
    "rounds",
    "rounds_se",
    "total_bet",
    "total_bet_se",
    "net_pl",
    "net_pl_se",
    "n_games",
    "n_aborted",
];

fn table2(agg: &ExperimentAggregate) -> Result<Vec<(String, String)>, RunError> {
    let mut header = vec!["style"];
    header.extend(TABLE2_HEADER);
    let rows = agg
        .styles
        .iter()
        .map(|s| {
            vec![
                s.style.as_str().to_string(),
                (100.0 * s.bankruptcy_rate.mean).to_string(),
                (100.0 * s.bankruptcy_rate.se).to_string(),
                s.index.mean.to_string(),
                s.index.se.to_string(),
                s.rounds.mean.to_string(),
                s.rounds.se.to_string(),
                s.total_bet.mean.to_string(),
                s.total_bet.se.to_string(),
                s.net_pl.mean.to_string(),
                s.net_pl.se.to_string(),
                s.n_games.to_string(),
                s.n_aborted.to_string(),
            ]
        })
        .collect();
    let measured = to_csv(&header, rows)?;

    let mut ref_header = vec!["model", "style"];
    ref_header.extend(&TABLE2_HEADER[..10]);
    let ref_rows = PUBLISHED_TABLE
        .iter()
        .map(|r| {
            vec![
                r.model.to_string(),
                r.style.as_str().to_string(),
                r.bankrupt_pct.to_string(),
                opt(r.bankrupt_pct_se),
                r.index.to_string(),
                r.index_se.to_string(),
                r.rounds.to_string(),
                r.rounds_se.to_string(),
                r.total_bet.to_string(),
                r.total_bet_se.to_string(),
                r.net_pl.to_string(),
                r.net_pl_se.to_string(),
            ]
        })
        .collect();
    let reference = to_csv(&ref_header, ref_rows)?;

    let combined = json!({
        "measured": agg.styles,
        "n_completed": agg.n_completed,
        "n_aborted": agg.n_aborted,
        "n_fallback_decisions": agg.n_fallback_decisions,
        "published_reference": PUBLISHED_TABLE,
    });
    Ok(vec![
        ("table2.csv".into(), measured),
        ("table2_published.csv".into(), reference),
        ("table2.json".into(), serde_json::to_string_pretty(&combined)? + "\n"),
    ])
}

fn scatter(agg: &ExperimentAggregate) -> Result<Vec<(String, String)>, RunError> {
    let mut files = Vec::new();
    let mut summary = Vec::new();
    for style in STYLES {
        let cells: Vec<_> = agg.conditions.iter().filter(|c| c.condition.style == style).collect();
        if cells.is_empty() {
            continue;
        }
        let rows = cells
            .iter()
            .map(|c| {
                vec![
                    c.condition.letters(),
                    c.mean_index.mean.to_string(),
                    c.bankruptcy_rate.mean.to_string(),
                ]
            })
            .collect();
        files.push((
            format!("scatter_{}.csv", style.as_str()),
            to_csv(&["condition", "index", "bankruptcy_rate"], rows)?,
        ));
        let x: Vec<f64> = cells.iter().map(|c| c.mean_index.mean).collect();
        let y: Vec<f64> = cells.iter().map(|c| c.bankruptcy_rate.mean).collect();
        summary.push(vec![
            style.as_str().to_string(),
            cells.len().to_string(),
            opt(pearson(&x, &y).ok()),
        ]);
    }
    files.push((
        "scatter_summary.csv".into(),
        to_csv(&["style", "n_conditions", "pearson_r"], summary)?,
    ));
    Ok(files)
}

const EFFECT_METRICS: [Metric; 4] = [Metric::BankruptcyRate, Metric::TotalBet, Metric::Rounds, Metric::Index];
const COMPONENT_ORDER: [Component; 5] = [Component::G, Component::M, Component::P, Component::H, Component::W];

/// Runs a per-style computation, leaving styles without a full design blank.
/// Fails only when no style has one.
fn per_style<T>(mut f: impl FnMut(Style) -> Result<T, StatsError>) -> Result<[Option<T>; 2], RunError> {
    let mut out = [None, None];
    let mut last_err = None;
    for (i, style) in STYLES.into_iter().enumerate() {
        match f(style) {
            Ok(v) => out[i] = Some(v),
            Err(e) => last_err = Some(e),
        }
    }
    match (&out, last_err) {
        ([None, None], Some(e)) => Err(e.into()),
        _ => Ok(out),
    }
}

fn components(agg: &ExperimentAggregate) -> Result<Vec<(String, String)>, RunError> {
    let mut rows = Vec::new();
    for metric in EFFECT_METRICS {
        let table = metric_table(&agg.conditions, metric);
        for component in COMPONENT_ORDER {
            let [fixed, variable] = per_style(|s| component_effect(&table, component, s))?;
            rows.push(vec![
                metric.name().to_string(),
                component.letter().to_string(),
                opt(fixed),
                opt(variable),
            ]);
        }
    }
    Ok(vec![(
        "components.csv".into(),
        to_csv(&["metric", "component", "fixed", "variable"], rows)?,
    )])
}

fn complexity(agg: &ExperimentAggregate) -> Result<Vec<(String, String)>, RunError> {
    let mut rows = Vec::new();
    for metric in EFFECT_METRICS {
        let table = metric_table(&agg.conditions, metric);
        let trends = per_style(|s| complexity_trend(&table, s))?;
        for (style, trend) in STYLES.iter().zip(trends) {
            let Some(trend) = trend else { continue };
            for (k, m) in trend.means.iter().enumerate() {
                rows.push(vec![
                    style.as_str().to_string(),
                    metric.name().to_string(),
                    k.to_string(),
                    m.to_string(),
                ]);
            }
            rows.push(vec![
                style.as_str().to_string(),
                metric.name().to_string(),
                "r".into(),
                opt(trend.r),
            ]);
        }
    }
    Ok(vec![(
        "complexity.csv".into(),
        to_csv(&["style", "metric", "n_components", "value"], rows)?,
    )])
}

fn streaks(agg: &ExperimentAggregate) -> Result<Vec<(String, String)>, RunError> {
    let mut rows = Vec::new();
    for s in &agg.styles {
        for (outcome, name) in [(Outcome::Win, "win"), (Outcome::Loss, "loss")] {
            for len in 1..=MAX_STREAK {
                let cell = s.streaks.cell(outcome, len);
                let label = if len == MAX_STREAK {
                    format!("{len}+")
                } else {
                    len.to_string()
                };
                rows.push(vec![
                    s.style.as_str().to_string(),
                    name.to_string(),
                    label,
                    cell.decisions.to_string(),
                    cell.continued.to_string(),
                    cell.increased.to_string(),
                    opt(cell.continuation_rate()),
                    opt(cell.bet_increase_rate()),
                ]);
            }
        }
    }
    Ok(vec![(
        "streaks.csv".into(),
        to_csv(
            &[
                "style",
                "streak",
                "length",
                "decisions",
                "continued",
                "increased",
                "continuation_rate",
                "bet_increase_rate",
            ],
            rows,
        )?,
    )])
}

/// Report files as `(file name, contents)` pairs.
pub fn render_report(agg: &ExperimentAggregate, kind: ReportKind) -> Result<Vec<(String, String)>, RunError> {
    match kind {
        ReportKind::Table2 => table2(agg),
        ReportKind::Scatter => scatter(agg),
        ReportKind::Components => components(agg),
        ReportKind::Complexity => complexity(agg),
        ReportKind::Streaks => streaks(agg),
    }
}

/// Write a report into `<dir>/reports/` and return the written paths.
pub fn report(dir: &Path, kind: ReportKind) -> Result<Vec<PathBuf>, RunError> {
    let agg = aggregate(dir)?;
    let out_dir = dir.join("reports");
    fs::create_dir_all(&out_dir)?;
    let mut paths = Vec::new();
    for (name, contents) in render_report(&agg, kind)? {
        let path = out_dir.join(name);
        fs::write(&path, contents)?;
        paths.push(path);
    }
    Ok(paths)
}
