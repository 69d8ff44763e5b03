//! Seeded slot-machine environment: configuration, state transitions and
//! balance accounting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Whole currency units.
pub type Money = u64;

/// Name of the PRNG that produces win draws, recorded in every transcript.
pub const PRNG_NAME: &str = "chacha8/rand_chacha-0.9";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("invalid game config: {0}")]
    InvalidConfig(String),
    #[error("illegal bet ${bet}: legal range is {range}")]
    IllegalBet { bet: Money, range: String },
    #[error("game is not active (status {0:?})")]
    StateNotActive(GameStatus),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    Fixed,
    Variable,
}

impl Style {
    pub fn as_str(self) -> &'static str {
        match self {
            Style::Fixed => "fixed",
            Style::Variable => "variable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BettingStyle {
    Fixed {
        amount: Money,
    },
    Variable {
        min: Money,
        max: Money,
        #[serde(default)]
        allow_all_in: bool,
    },
}

impl BettingStyle {
    pub fn style(&self) -> Style {
        match self {
            BettingStyle::Fixed { .. } => Style::Fixed,
            BettingStyle::Variable { .. } => Style::Variable,
        }
    }

    /// Smallest stake the machine accepts.
    pub fn min_bet(&self) -> Money {
        match *self {
            BettingStyle::Fixed { amount } => amount,
            BettingStyle::Variable { min, .. } => min,
        }
    }
}

impl Default for BettingStyle {
    fn default() -> Self {
        BettingStyle::Fixed { amount: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub initial_balance: Money,
    pub win_prob: f64,
    pub payout_mult: f64,
    pub betting_style: BettingStyle,
    pub max_rounds: u32,
    pub history_window: usize,
    pub warning_threshold: u32,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            initial_balance: 100,
            win_prob: 0.30,
            payout_mult: 3.0,
            betting_style: BettingStyle::default(),
            max_rounds: 100,
            history_window: 5,
            warning_threshold: 3,
        }
    }
}

impl GameConfig {
    pub fn with_style(mut self, betting_style: BettingStyle) -> Self {
        self.betting_style = betting_style;
        self
    }

    pub fn validate(&self) -> Result<(), GameError> {
        let bad = |m: &str| Err(GameError::InvalidConfig(m.to_string()));
        if !(0.0..=1.0).contains(&self.win_prob) {
            return bad("win_prob must lie in [0, 1]");
        }
        if !(self.payout_mult > 0.0) || !self.payout_mult.is_finite() {
            return bad("payout_mult must be positive");
        }
        if self.initial_balance == 0 {
            return bad("initial_balance must be positive");
        }
        if self.max_rounds == 0 {
            return bad("max_rounds must be at least 1");
        }
        match self.betting_style {
            BettingStyle::Fixed { amount } if amount == 0 => bad("fixed amount must be positive"),
            BettingStyle::Variable { min, max, .. } if min == 0 || min > max => {
                bad("variable range requires 0 < min <= max")
            }
            _ => Ok(()),
        }
    }

    /// Payout credited for a winning stake.
    pub fn payout_for(&self, bet: Money) -> Money {
        (self.payout_mult * bet as f64).round() as Money
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Win,
    Loss,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based.
    pub round_index: u32,
    pub balance_before: Money,
    pub bet: Money,
    pub outcome: Outcome,
    pub payout: Money,
    pub balance_after: Money,
}

impl RoundRecord {
    /// Net change in balance for the round.
    pub fn net(&self) -> i64 {
        self.payout as i64 - self.bet as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameStatus {
    Active,
    Quit,
    Bankrupt,
    RoundCapped,
}

impl GameStatus {
    pub fn is_terminal(self) -> bool {
        self != GameStatus::Active
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub balance: Money,
    pub round: u32,
    pub history: Vec<RoundRecord>,
    pub consecutive_losses: u32,
    pub status: GameStatus,
    pub rng_seed: u64,
}

/// Inclusive stake bounds for the next round, or `None` when no legal bet
/// remains (the game must end as bankrupt).
pub fn legal_bet_range(state: &GameState, config: &GameConfig) -> Option<(Money, Money)> {
    if state.status != GameStatus::Active {
        return None;
    }
    bet_range_for_balance(state.balance, &config.betting_style)
}

fn bet_range_for_balance(balance: Money, style: &BettingStyle) -> Option<(Money, Money)> {
    match *style {
        BettingStyle::Fixed { amount } => (balance >= amount).then_some((amount, amount)),
        BettingStyle::Variable {
            min,
            max,
            allow_all_in,
        } => {
            if balance < min {
                return None;
            }
            let hi = if allow_all_in { balance } else { max.min(balance) };
            Some((min, hi))
        }
    }
}

impl GameState {
    /// Fresh game at round 0. A starting balance below the minimum stake is
    /// immediately bankrupt.
    pub fn new(config: &GameConfig, rng_seed: u64) -> Self {
        let status = if bet_range_for_balance(config.initial_balance, &config.betting_style).is_some() {
            GameStatus::Active
        } else {
            GameStatus::Bankrupt
        };
        Self {
            balance: config.initial_balance,
            round: 0,
            history: Vec::new(),
            consecutive_losses: 0,
            status,
            rng_seed,
        }
    }

    /// Settle one round. `draw` is a uniform sample in `[0, 1)`; the round is
    /// a win iff `draw < win_prob`.
    pub fn resolve_bet(
        &mut self,
        bet: Money,
        config: &GameConfig,
        draw: f64,
    ) -> Result<&RoundRecord, GameError> {
        if self.status != GameStatus::Active {
            return Err(GameError::StateNotActive(self.status));
        }
        let (lo, hi) = match legal_bet_range(self, config) {
            Some(r) => r,
            None => {
                return Err(GameError::IllegalBet {
                    bet,
                    range: "none".into(),
                })
            }
        };
        if bet < lo || bet > hi || bet == 0 {
            return Err(GameError::IllegalBet {
                bet,
                range: format!("[{lo}, {hi}]"),
            });
        }

        let outcome = if draw < config.win_prob {
            Outcome::Win
        } else {
            Outcome::Loss
        };
        let payout = match outcome {
            Outcome::Win => config.payout_for(bet),
            Outcome::Loss => 0,
        };
        let balance_before = self.balance;
        self.balance = balance_before - bet + payout;
        self.round += 1;
        self.consecutive_losses = match outcome {
            Outcome::Win => 0,
            Outcome::Loss => self.consecutive_losses + 1,
        };
        self.history.push(RoundRecord {
            round_index: self.round,
            balance_before,
            bet,
            outcome,
            payout,
            balance_after: self.balance,
        });

        self.status = if bet_range_for_balance(self.balance, &config.betting_style).is_none() {
            GameStatus::Bankrupt
        } else if self.round >= config.max_rounds {
            GameStatus::RoundCapped
        } else {
            GameStatus::Active
        };
        Ok(self.history.last().expect("just pushed"))
    }

    pub fn apply_quit(&mut self) -> Result<(), GameError> {
        if self.status != GameStatus::Active {
            return Err(GameError::StateNotActive(self.status));
        }
        self.status = GameStatus::Quit;
        Ok(())
    }

    /// The last `window` rounds, oldest first.
    pub fn recent_history(&self, window: usize) -> &[RoundRecord] {
        let start = self.history.len().saturating_sub(window);
        &self.history[start..]
    }

    pub fn trailing_wins(&self) -> u32 {
        trailing_run(&self.history, Outcome::Win)
    }
}

/// Length of the trailing run of `outcome` at the end of `rounds`.
pub fn trailing_run(rounds: &[RoundRecord], outcome: Outcome) -> u32 {
    rounds.iter().rev().take_while(|r| r.outcome == outcome).count() as u32
}

/// Checks `final = initial + Σ(payout - bet)` and the per-round identities.
pub fn check_accounting(initial_balance: Money, rounds: &[RoundRecord], final_balance: Money) -> bool {
    let mut balance = initial_balance as i128;
    for r in rounds {
        if r.balance_before as i128 != balance
            || r.bet == 0
            || r.bet > r.balance_before
            || r.balance_after as i128 != r.balance_before as i128 - r.bet as i128 + r.payout as i128
        {
            return false;
        }
        balance = r.balance_after as i128;
    }
    let net: i128 = rounds.iter().map(|r| r.payout as i128 - r.bet as i128).sum();
    balance == final_balance as i128 && final_balance as i128 == initial_balance as i128 + net
}

/// Source of win draws for one game.
#[derive(Debug, Clone)]
pub struct Machine {
    rng: ChaCha8Rng,
}

impl Machine {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn draw(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}
