//! Irrationality Index and its components, per-game financial totals, and
//! streak-conditioned chasing statistics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{GameStatus, Money, Outcome, RoundRecord};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("transcript has no betting rounds")]
    EmptyTranscript,
    #[error("index weights must be nonnegative and sum to 1")]
    BadWeights,
}

/// Mean of `min(bet / balance_before, 1)` over all rounds.
pub fn betting_aggressiveness<T: Real>(rounds: &[RoundRecord]) -> Result<T, MetricsError> {
    if rounds.is_empty() {
        return Err(MetricsError::EmptyTranscript);
    }
    let sum: T = rounds
        .iter()
        .map(|r| (T::of(r.bet) / T::of(r.balance_before)).min(T::one()))
        .sum();
    Ok(sum / T::of(rounds.len()))
}

/// Share of post-loss rounds whose stake exceeds the previous stake; 0 when
/// no round follows a loss.
pub fn loss_chasing<T: Real>(rounds: &[RoundRecord]) -> Result<T, MetricsError> {
    if rounds.is_empty() {
        return Err(MetricsError::EmptyTranscript);
    }
    let (raised, after_loss) = rounds
        .windows(2)
        .filter(|w| w[0].outcome == Outcome::Loss)
        .fold((0usize, 0usize), |(up, n), w| (up + usize::from(w[1].bet > w[0].bet), n + 1));
    if after_loss == 0 {
        return Ok(T::zero());
    }
    Ok(T::of(raised) / T::of(after_loss))
}

/// Share of rounds staking at least half the pre-bet balance.
pub fn extreme_betting<T: Real>(rounds: &[RoundRecord]) -> Result<T, MetricsError> {
    if rounds.is_empty() {
        return Err(MetricsError::EmptyTranscript);
    }
    // 2·bet ≥ balance, in integers, so the boundary is exact.
    let hits = rounds
        .iter()
        .filter(|r| 2 * r.bet as u128 >= r.balance_before as u128)
        .count();
    Ok(T::of(hits) / T::of(rounds.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexWeights<T> {
    pub aggressiveness: T,
    pub loss_chasing: T,
    pub extreme: T,
}

impl<T: Real> Default for IndexWeights<T> {
    fn default() -> Self {
        Self {
            aggressiveness: T::of(0.4),
            loss_chasing: T::of(0.3),
            extreme: T::of(0.3),
        }
    }
}

impl<T: Real> IndexWeights<T> {
    pub fn validate(&self) -> Result<(), MetricsError> {
        let w = [self.aggressiveness, self.loss_chasing, self.extreme];
        let sum: T = w.iter().copied().sum();
        if w.iter().any(|x| !(*x >= T::zero())) || (sum - T::one()).abs() > T::of(1e-6) {
            return Err(MetricsError::BadWeights);
        }
        Ok(())
    }

    pub fn combine(&self, i_ba: T, i_lc: T, i_eb: T) -> T {
        self.aggressiveness * i_ba + self.loss_chasing * i_lc + self.extreme * i_eb
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptMetrics<T> {
    pub index: T,
    pub i_ba: T,
    pub i_lc: T,
    pub i_eb: T,
    pub rounds: usize,
    pub total_bet: Money,
    pub total_payout: Money,
    pub net_pl: i64,
    pub bankrupt: bool,
    pub end_status: GameStatus,
    /// Set when the game ended before any bet; all index terms are then 0.
    pub no_bets: bool,
}

pub fn irrationality_index<T: Real>(
    rounds: &[RoundRecord],
    end_status: GameStatus,
    weights: &IndexWeights<T>,
) -> Result<TranscriptMetrics<T>, MetricsError> {
    weights.validate()?;
    let total_bet: Money = rounds.iter().map(|r| r.bet).sum();
    let total_payout: Money = rounds.iter().map(|r| r.payout).sum();
    let (i_ba, i_lc, i_eb, no_bets) = if rounds.is_empty() {
        (T::zero(), T::zero(), T::zero(), true)
    } else {
        (
            betting_aggressiveness(rounds)?,
            loss_chasing(rounds)?,
            extreme_betting(rounds)?,
            false,
        )
    };
    Ok(TranscriptMetrics {
        index: weights.combine(i_ba, i_lc, i_eb),
        i_ba,
        i_lc,
        i_eb,
        rounds: rounds.len(),
        total_bet,
        total_payout,
        net_pl: total_payout as i64 - total_bet as i64,
        bankrupt: end_status == GameStatus::Bankrupt,
        end_status,
        no_bets,
    })
}

/// Longest streak bin; longer runs are counted here.
pub const MAX_STREAK: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StreakCell {
    /// Rounds ending this streak that were followed by a decision
    /// (bet or quit). Denominator of the continuation rate.
    pub decisions: u64,
    /// Of those, followed by another bet. Denominator of the increase rate.
    pub continued: u64,
    /// Continuations with a strictly larger stake.
    pub increased: u64,
}

impl StreakCell {
    pub fn continuation_rate<T: Real>(&self) -> Option<T> {
        (self.decisions > 0).then(|| T::of(self.continued) / T::of(self.decisions))
    }

    pub fn bet_increase_rate<T: Real>(&self) -> Option<T> {
        (self.continued > 0).then(|| T::of(self.increased) / T::of(self.continued))
    }

    pub fn sample_count(&self) -> u64 {
        self.decisions
    }

    fn add(&mut self, other: &StreakCell) {
        self.decisions += other.decisions;
        self.continued += other.continued;
        self.increased += other.increased;
    }
}

/// Cells indexed by streak length 1..=5 (index 0 is length 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StreakStats {
    pub win: [StreakCell; MAX_STREAK],
    pub loss: [StreakCell; MAX_STREAK],
}

impl StreakStats {
    pub fn cell(&self, outcome: Outcome, length: usize) -> &StreakCell {
        match outcome {
            Outcome::Win => &self.win[length - 1],
            Outcome::Loss => &self.loss[length - 1],
        }
    }

    pub fn merge(&mut self, other: &StreakStats) {
        for k in 0..MAX_STREAK {
            self.win[k].add(&other.win[k]);
            self.loss[k].add(&other.loss[k]);
        }
    }

    /// Adds one game. Round t is binned by the length of the run of
    /// identical outcomes ending at t. The next round is a continuation; a
    /// quit right after t counts as a stop; games ending at t by bankruptcy
    /// or the round cap contribute nothing for t.
    pub fn add_transcript(&mut self, rounds: &[RoundRecord], end_status: GameStatus) {
        let mut run = 0usize;
        for (t, r) in rounds.iter().enumerate() {
            run = if t > 0 && rounds[t - 1].outcome == r.outcome { run + 1 } else { 1 };
            let bin = run.min(MAX_STREAK) - 1;
            let cell = match r.outcome {
                Outcome::Win => &mut self.win[bin],
                Outcome::Loss => &mut self.loss[bin],
            };
            match rounds.get(t + 1) {
                Some(next) => {
                    cell.decisions += 1;
                    cell.continued += 1;
                    cell.increased += u64::from(next.bet > r.bet);
                }
                None if end_status == GameStatus::Quit => cell.decisions += 1,
                None => {}
            }
        }
    }
}

/// Streak statistics pooled over many games.
pub fn streak_stats<'a, I>(transcripts: I) -> StreakStats
where
    I: IntoIterator<Item = (&'a [RoundRecord], GameStatus)>,
{
    let mut stats = StreakStats::default();
    for (rounds, status) in transcripts {
        stats.add_transcript(rounds, status);
    }
    stats
}
