use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Action, AgentError, Decision, DecisionContext};
use crate::game::{trailing_run, Money, Outcome};

/// Parametric bettor. Each knob drives one index component: `base_fraction`
/// betting aggressiveness, `loss_chase_mult` loss chasing, `extreme_prob`
/// extreme betting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    /// Fraction of the balance staked with no streak, in (0, 1].
    pub base_fraction: f64,
    /// Stake multiplier per trailing loss, at least 1.
    #[serde(default = "one")]
    pub loss_chase_mult: f64,
    /// Stake multiplier per trailing win, at least 1.
    #[serde(default = "one")]
    pub win_chase_mult: f64,
    /// Probability of betting the top of the legal range.
    #[serde(default)]
    pub extreme_prob: f64,
    /// Per-decision probability of quitting.
    #[serde(default)]
    pub quit_hazard: f64,
    /// Quit once the balance reaches this amount.
    #[serde(default)]
    pub target_balance: Option<Money>,
}

fn one() -> f64 {
    1.0
}

impl SyntheticParams {
    pub fn new(base_fraction: f64) -> Self {
        Self {
            base_fraction,
            loss_chase_mult: 1.0,
            win_chase_mult: 1.0,
            extreme_prob: 0.0,
            quit_hazard: 0.0,
            target_balance: None,
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::InvalidSpec(m.to_string()));
        if !(self.base_fraction > 0.0 && self.base_fraction <= 1.0) {
            return bad("base_fraction must lie in (0, 1]");
        }
        if !(self.loss_chase_mult >= 1.0) || !(self.win_chase_mult >= 1.0) {
            return bad("chase multipliers must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.extreme_prob) || !(0.0..=1.0).contains(&self.quit_hazard) {
            return bad("probabilities must lie in [0, 1]");
        }
        Ok(())
    }
}

/// One decision. Draws exactly two uniforms per call (quit, extreme) so the
/// policy stream stays aligned regardless of the branch taken.
pub fn synthetic_policy<R: Rng + ?Sized>(params: &SyntheticParams, ctx: &DecisionContext<'_>, rng: &mut R) -> Decision {
    let quit_draw: f64 = rng.random();
    let extreme_draw: f64 = rng.random();

    if params.target_balance.is_some_and(|t| ctx.balance >= t) || quit_draw < params.quit_hazard {
        return Decision::new(Action::Quit);
    }

    let losses = trailing_run(ctx.history, Outcome::Loss) as i32;
    let wins = trailing_run(ctx.history, Outcome::Win) as i32;
    let raw = params.base_fraction
        * ctx.balance as f64
        * params.loss_chase_mult.powi(losses)
        * params.win_chase_mult.powi(wins);
    let mut amount = ctx.clamp(raw.round().min(u64::MAX as f64) as Money);
    if extreme_draw < params.extreme_prob {
        amount = ctx.clamp(ctx.legal_range.1);
    }
    Decision::new(Action::Bet(amount))
}
