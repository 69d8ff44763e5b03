use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::plan::{GameSettings, TrialSpec};
use crate::agents::{Action, Agent, Decision, DecisionContext};
use crate::game::{check_accounting, legal_bet_range, GameState, GameStatus, Machine, Money, RoundRecord, PRNG_NAME};
use crate::prompt::{ConditionCode, PromptSpec, TemplateSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrialStatus {
    Completed,
    Aborted,
}

/// One line of `trials.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: String,
    pub condition: ConditionCode,
    pub replication: u32,
    pub seed: u64,
    pub prng: String,
    pub status: TrialStatus,
    /// Terminal game status; `None` for aborted trials.
    pub end_status: Option<GameStatus>,
    pub initial_balance: Money,
    pub final_balance: Money,
    pub rounds: Vec<RoundRecord>,
    pub decisions: Vec<Decision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_time_ms: u64,
}

impl TrialRecord {
    pub fn is_completed(&self) -> bool {
        self.status == TrialStatus::Completed
    }

    /// Accounting invariant; trivially true for aborted trials.
    pub fn accounting_ok(&self) -> bool {
        !self.is_completed() || check_accounting(self.initial_balance, &self.rounds, self.final_balance)
    }
}

/// Play a single trial: compose → decide → resolve until the game ends.
/// Agent failures abort the trial; they never panic or propagate.
pub fn play_trial(spec: &TrialSpec, game: &GameSettings, templates: &TemplateSet, agent: &mut dyn Agent) -> TrialRecord {
    let started = Instant::now();
    let style = spec.condition.style;
    let config = game.config_for(style);
    let mut state = GameState::new(&config, spec.seed);
    let mut machine = Machine::new(spec.seed);
    let mut decisions = Vec::new();
    let mut error = None;

    while state.status == GameStatus::Active {
        let Some(legal_range) = legal_bet_range(&state, &config) else {
            break;
        };
        let prompt = if agent.needs_prompt() {
            templates.compose(
                &PromptSpec {
                    condition: spec.condition,
                    balance: state.balance,
                    history: state.recent_history(config.history_window),
                    consecutive_losses: state.consecutive_losses,
                },
                &config,
            )
        } else {
            String::new()
        };
        let ctx = DecisionContext {
            prompt: &prompt,
            legal_range,
            balance: state.balance,
            history: &state.history,
            style,
        };
        let decision = match agent.decide(&ctx) {
            Ok(d) => d,
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        };
        let applied = match decision.action {
            Action::Quit => state.apply_quit(),
            Action::Bet(x) => state.resolve_bet(x, &config, machine.draw()).map(|_| ()),
        };
        decisions.push(decision);
        if let Err(e) = applied {
            error = Some(e.to_string());
            break;
        }
    }

    let status = if error.is_some() {
        TrialStatus::Aborted
    } else {
        TrialStatus::Completed
    };
    TrialRecord {
        trial_id: spec.trial_id.clone(),
        condition: spec.condition,
        replication: spec.replication,
        seed: spec.seed,
        prng: PRNG_NAME.to_string(),
        status,
        end_status: (status == TrialStatus::Completed).then_some(state.status),
        initial_balance: config.initial_balance,
        final_balance: state.balance,
        rounds: state.history,
        decisions,
        error,
        wall_time_ms: started.elapsed().as_millis() as u64,
    }
}

/// Convenience wrapper for a standalone game with the default templates.
pub fn simulate(spec: &TrialSpec, game: &GameSettings, agent: &mut dyn Agent) -> TrialRecord {
    play_trial(spec, game, &TemplateSet::default(), agent)
}
