use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::store::load_records;
use super::trial::{TrialRecord, TrialStatus};
use super::RunError;
use crate::game::Style;
use crate::metrics::{irrationality_index, StreakStats};
use crate::prompt::ConditionCode;
use crate::{ConditionAggregate, IndexWeights, MeanSe, TranscriptMetrics};

/// Model-level row of the comparison table for one betting style.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleSummary {
    pub style: Style,
    pub n_games: usize,
    pub n_aborted: usize,
    pub bankruptcy_rate: MeanSe,
    pub index: MeanSe,
    pub rounds: MeanSe,
    pub total_bet: MeanSe,
    pub net_pl: MeanSe,
    pub streaks: StreakStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentAggregate {
    /// Sorted by style, component count, then composition.
    pub conditions: Vec<ConditionAggregate>,
    pub styles: Vec<StyleSummary>,
    pub n_completed: usize,
    pub n_aborted: usize,
    /// Decisions that fell back to quit after unparseable responses.
    pub n_fallback_decisions: usize,
}

fn condition_key(c: &ConditionCode) -> (Style, usize, Vec<char>) {
    let order = |ch: char| "GMPWH".find(ch).unwrap_or(5);
    let mut letters: Vec<char> = c.components().iter().map(|x| x.letter()).collect();
    letters.sort_by_key(|&ch| order(ch));
    (c.style, c.len(), letters)
}

fn mean_se(values: impl Iterator<Item = f64>) -> MeanSe {
    let v: Vec<f64> = values.collect();
    MeanSe::of(&v).unwrap_or(MeanSe { mean: 0.0, se: 0.0 })
}

fn summarize(games: &[&TranscriptMetrics]) -> (MeanSe, MeanSe, MeanSe, MeanSe, MeanSe) {
    let n = games.len() as u64;
    let bankrupt = games.iter().filter(|g| g.bankrupt).count() as u64;
    (
        MeanSe::proportion(bankrupt, n).unwrap_or(MeanSe { mean: 0.0, se: 0.0 }),
        mean_se(games.iter().map(|g| g.index)),
        mean_se(games.iter().map(|g| g.rounds as f64)),
        mean_se(games.iter().map(|g| g.total_bet as f64)),
        mean_se(games.iter().map(|g| g.net_pl as f64)),
    )
}

fn component_mean(games: &[&TranscriptMetrics], pick: impl Fn(&TranscriptMetrics) -> f64) -> Option<MeanSe> {
    let v: Vec<f64> = games.iter().filter(|g| !g.no_bets).map(|g| pick(g)).collect();
    MeanSe::of(&v)
}

/// Aggregate completed trials; aborted trials are counted, not included.
/// The result does not depend on record order.
pub fn aggregate_records(records: &[TrialRecord]) -> Result<ExperimentAggregate, RunError> {
    let weights = IndexWeights::default();
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (condition_key(&a.condition), a.replication, &a.trial_id).cmp(&(
            condition_key(&b.condition),
            b.replication,
            &b.trial_id,
        ))
    });

    let mut by_condition: BTreeMap<(Style, usize, Vec<char>), (ConditionCode, Vec<TranscriptMetrics>)> = BTreeMap::new();
    let mut streaks: BTreeMap<Style, StreakStats> = BTreeMap::new();
    let mut aborted: BTreeMap<Style, usize> = BTreeMap::new();
    let mut n_fallback_decisions = 0;
    for r in sorted {
        n_fallback_decisions += r.decisions.iter().filter(|d| d.fallback).count();
        let end_status = match (r.status, r.end_status) {
            (TrialStatus::Completed, Some(s)) => s,
            _ => {
                *aborted.entry(r.condition.style).or_default() += 1;
                continue;
            }
        };
        let metrics = irrationality_index(&r.rounds, end_status, &weights).expect("default weights are valid");
        streaks
            .entry(r.condition.style)
            .or_default()
            .add_transcript(&r.rounds, end_status);
        by_condition
            .entry(condition_key(&r.condition))
            .or_insert_with(|| (r.condition, Vec::new()))
            .1
            .push(metrics);
    }

    let n_completed: usize = by_condition.values().map(|(_, g)| g.len()).sum();
    if n_completed == 0 {
        return Err(RunError::EmptyExperiment);
    }

    let conditions = by_condition
        .values()
        .map(|(condition, games)| {
            let games: Vec<&TranscriptMetrics> = games.iter().collect();
            let games = games.as_slice();
            let (bankruptcy_rate, mean_index, mean_rounds, mean_total_bet, mean_net_pl) = summarize(games);
            ConditionAggregate {
                condition: *condition,
                n_games: games.len(),
                bankruptcy_rate,
                mean_index,
                mean_rounds,
                mean_total_bet,
                mean_net_pl,
                mean_i_ba: component_mean(games, |m| m.i_ba),
                mean_i_lc: component_mean(games, |m| m.i_lc),
                mean_i_eb: component_mean(games, |m| m.i_eb),
            }
        })
        .collect();

    let mut styles = Vec::new();
    for style in [Style::Fixed, Style::Variable] {
        let games: Vec<&TranscriptMetrics> = by_condition
            .iter()
            .filter(|(k, _)| k.0 == style)
            .flat_map(|(_, (_, g))| g.iter())
            .collect();
        let n_aborted = aborted.get(&style).copied().unwrap_or(0);
        if games.is_empty() && n_aborted == 0 {
            continue;
        }
        let (bankruptcy_rate, index, rounds, total_bet, net_pl) = summarize(&games);
        styles.push(StyleSummary {
            style,
            n_games: games.len(),
            n_aborted,
            bankruptcy_rate,
            index,
            rounds,
            total_bet,
            net_pl,
            streaks: streaks.get(&style).copied().unwrap_or_default(),
        });
    }

    Ok(ExperimentAggregate {
        conditions,
        styles,
        n_completed,
        n_aborted: aborted.values().sum(),
        n_fallback_decisions,
    })
}

pub fn aggregate(dir: &Path) -> Result<ExperimentAggregate, RunError> {
    aggregate_records(&load_records(dir)?)
}
