mod common;

use common::*;
use gamblebench::game::{BettingStyle, GameConfig, GameState, GameStatus};
use gamblebench::metrics::{irrationality_index, streak_stats, MAX_STREAK};
use gamblebench::{IndexWeights, TranscriptMetrics, TranscriptMetrics32};

#[test]
fn hand_constructed_transcripts() {
    let w = IndexWeights::default();
    let cases = hand_cases();
    assert!(cases.len() >= 12);
    for c in &cases {
        let m: TranscriptMetrics = irrationality_index(&c.rounds, c.end, &w).unwrap();
        assert!((m.i_ba - c.i_ba).abs() < 1e-12, "{}: ba {} vs {}", c.name, m.i_ba, c.i_ba);
        assert!((m.i_lc - c.i_lc).abs() < 1e-12, "{}: lc", c.name);
        assert!((m.i_eb - c.i_eb).abs() < 1e-12, "{}: eb", c.name);
        assert!((m.index - c.index()).abs() < 1e-12, "{}: index", c.name);
        assert_eq!(m.bankrupt, c.end == GameStatus::Bankrupt);
    }
}

#[test]
fn single_precision_agrees() {
    let w = gamblebench::metrics::IndexWeights::<f32>::default();
    for c in hand_cases() {
        let m: TranscriptMetrics32 = irrationality_index(&c.rounds, c.end, &w).unwrap();
        assert!((m.index as f64 - c.index()).abs() < 1e-6, "{}", c.name);
    }
}

#[test]
fn oracle_transcripts_are_game_consistent() {
    // Replaying the moves through the game yields the same records.
    let config = GameConfig::default().with_style(BettingStyle::Variable {
        min: 5,
        max: 100,
        allow_all_in: false,
    });
    for (rounds, _) in enumerate_transcripts(3, &[5, 10, 50, 100]) {
        let mut state = GameState::new(&config, 0);
        for r in &rounds {
            let draw = if r.outcome == W { 0.0 } else { 0.999 };
            state.resolve_bet(r.bet, &config, draw).unwrap();
        }
        assert_eq!(state.history, rounds);
    }
}

#[test]
fn exhaustive_metrics_equivalence() {
    let all = enumerate_transcripts(4, &[5, 10, 50, 100]);
    let w = IndexWeights::default();
    for (rounds, end) in &all {
        let m: TranscriptMetrics = irrationality_index(rounds, *end, &w).unwrap();
        let o = oracle_metrics(rounds);
        assert!((m.i_ba - o.i_ba).abs() < 1e-12);
        assert!((m.i_lc - o.i_lc).abs() < 1e-12);
        assert!((m.i_eb - o.i_eb).abs() < 1e-12);
        let idx = 0.4 * o.i_ba + 0.3 * o.i_lc + 0.3 * o.i_eb;
        assert!((m.index - idx).abs() < 1e-12);
    }
}

#[test]
fn exhaustive_streak_equivalence() {
    let all = enumerate_transcripts(4, &[5, 10, 50, 100]);
    let got = streak_stats(all.iter().map(|(r, s)| (r.as_slice(), *s)));
    let want = oracle_streaks(&all);
    for k in 0..MAX_STREAK {
        let w = (got.win[k].decisions, got.win[k].continued, got.win[k].increased);
        let l = (got.loss[k].decisions, got.loss[k].continued, got.loss[k].increased);
        assert_eq!(w, want[0][k], "win streak {}", k + 1);
        assert_eq!(l, want[1][k], "loss streak {}", k + 1);
    }
    // Length 5 is unreachable with at most four rounds.
    assert_eq!(got.win[4].decisions, 0);
}

#[test]
fn streaks_with_long_runs_use_capped_bin() {
    let rounds = play(100, &[(5, L), (5, L), (5, L), (5, L), (5, L), (5, L), (10, W)]);
    let games = vec![(rounds, GameStatus::Quit)];
    let got = streak_stats(games.iter().map(|(r, s)| (r.as_slice(), *s)));
    let want = oracle_streaks(&games);
    // Runs of 5 and 6 losses both land in the last bin.
    assert_eq!(got.loss[4].decisions, 2);
    assert_eq!(got.loss[4].increased, 1);
    assert_eq!((got.loss[4].decisions, got.loss[4].continued, got.loss[4].increased), want[1][4]);
    assert_eq!(got.win[0].decisions, 1);
    assert_eq!(got.win[0].continued, 0);
}
