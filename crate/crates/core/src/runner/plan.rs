use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RunError;
use crate::agents::AgentSpec;
use crate::game::{BettingStyle, GameConfig, Money, Style};
use crate::prompt::ConditionCode;

/// Game parameters shared by every condition; the condition picks the
/// betting style.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameSettings {
    pub initial_balance: Money,
    pub win_prob: f64,
    pub payout_mult: f64,
    pub fixed_bet: Money,
    pub variable_min: Money,
    pub variable_max: Money,
    pub allow_all_in: bool,
    pub max_rounds: u32,
    pub history_window: usize,
    pub warning_threshold: u32,
}

impl Default for GameSettings {
    fn default() -> Self {
        let g = GameConfig::default();
        Self {
            initial_balance: g.initial_balance,
            win_prob: g.win_prob,
            payout_mult: g.payout_mult,
            fixed_bet: 10,
            variable_min: 5,
            variable_max: 100,
            allow_all_in: false,
            max_rounds: g.max_rounds,
            history_window: g.history_window,
            warning_threshold: g.warning_threshold,
        }
    }
}

impl GameSettings {
    pub fn config_for(&self, style: Style) -> GameConfig {
        let betting_style = match style {
            Style::Fixed => BettingStyle::Fixed { amount: self.fixed_bet },
            Style::Variable => BettingStyle::Variable {
                min: self.variable_min,
                max: self.variable_max,
                allow_all_in: self.allow_all_in,
            },
        };
        GameConfig {
            initial_balance: self.initial_balance,
            win_prob: self.win_prob,
            payout_mult: self.payout_mult,
            betting_style,
            max_rounds: self.max_rounds,
            history_window: self.history_window,
            warning_threshold: self.warning_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub agent: AgentSpec,
    #[serde(default = "ConditionCode::all")]
    pub conditions: Vec<ConditionCode>,
    #[serde(default = "default_reps")]
    pub replications: u32,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub game: GameSettings,
    /// Directory of template overrides; built-in templates when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub templates: Option<PathBuf>,
    #[serde(default)]
    pub output_dir: PathBuf,
    #[serde(default = "default_parallel")]
    pub parallel_limit: usize,
}

fn default_reps() -> u32 {
    50
}
fn default_seed() -> u64 {
    42
}
fn default_parallel() -> usize {
    8
}

impl ExperimentPlan {
    pub fn new(agent: AgentSpec, conditions: Vec<ConditionCode>, replications: u32, master_seed: u64) -> Self {
        Self {
            agent,
            conditions,
            replications,
            master_seed,
            game: GameSettings::default(),
            templates: None,
            output_dir: PathBuf::new(),
            parallel_limit: default_parallel(),
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.replications == 0 {
            return Err(RunError::InvalidPlan("replications must be >= 1".into()));
        }
        if self.conditions.is_empty() {
            return Err(RunError::InvalidPlan("no conditions".into()));
        }
        let unique: HashSet<_> = self.conditions.iter().collect();
        if unique.len() != self.conditions.len() {
            return Err(RunError::InvalidPlan("duplicate conditions".into()));
        }
        for style in [Style::Fixed, Style::Variable] {
            self.game
                .config_for(style)
                .validate()
                .map_err(|e| RunError::InvalidPlan(e.to_string()))?;
        }
        self.agent.validate()?;
        Ok(())
    }

    /// Everything that determines trial outcomes; excludes where the
    /// output goes and how many workers run it.
    pub fn identity(&self) -> ExperimentPlan {
        ExperimentPlan {
            output_dir: PathBuf::new(),
            parallel_limit: 0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrialSpec {
    pub trial_id: String,
    pub condition: ConditionCode,
    pub replication: u32,
    pub seed: u64,
}

pub fn trial_id(condition: &ConditionCode, replication: u32) -> String {
    format!("{condition}/{replication:03}")
}

/// First 8 bytes (LE) of SHA-256 over the master seed, the canonical
/// condition string and the replication index.
pub fn trial_seed(master_seed: u64, condition: &ConditionCode, replication: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(condition.to_string().as_bytes());
    h.update(replication.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Conditions × replications in plan order.
pub fn expand_plan(plan: &ExperimentPlan) -> Vec<TrialSpec> {
    plan.conditions
        .iter()
        .flat_map(|c| {
            (0..plan.replications).map(move |rep| TrialSpec {
                trial_id: trial_id(c, rep),
                condition: *c,
                replication: rep,
                seed: trial_seed(plan.master_seed, c, rep),
            })
        })
        .collect()
}
