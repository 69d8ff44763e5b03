//! Decision makers: remote LLMs over a chat-completion API plus synthetic,
//! scripted and random policies used for calibration and oracles.

mod llm;
mod parse;
mod synthetic;

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Money, RoundRecord, Style};

pub use llm::{
    CallRecord, ChatChoice, ChatMessage, ChatRequest, ChatResponse, ChatTransport, Completion, HttpTransport, LlmClient,
    LlmConfig, TransportError,
};
pub use parse::{parse_decision, ParseFailure};
pub use synthetic::{synthetic_policy, SyntheticParams};

/// `raw_response` of a decision produced by the parse-failure fallback.
pub const FALLBACK_SENTINEL: &str = "<<fallback: unparseable response, defaulted to quit>>";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("agent unavailable: {0}")]
    AgentUnavailable(String),
    #[error("invalid agent spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Bet(Money),
    Quit,
}

impl Action {
    /// Canonical textual form, reparseable by [`parse_decision`].
    pub fn render(&self) -> String {
        match self {
            Action::Bet(x) => format!("Bet ${x}"),
            Action::Quit => "Quit".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub action: Action,
    /// Agent output verbatim, or [`FALLBACK_SENTINEL`].
    pub raw_response: String,
    #[serde(default, skip_serializing_if = "is_false")]
    pub fallback: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub calls: Vec<CallRecord>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl Decision {
    pub fn new(action: Action) -> Self {
        Self {
            raw_response: action.render(),
            action,
            fallback: false,
            calls: Vec::new(),
        }
    }

    pub fn fallback_quit(calls: Vec<CallRecord>) -> Self {
        Self {
            action: Action::Quit,
            raw_response: FALLBACK_SENTINEL.to_string(),
            fallback: true,
            calls,
        }
    }
}

/// What an agent sees when asked for a decision.
#[derive(Debug, Clone, Copy)]
pub struct DecisionContext<'a> {
    pub prompt: &'a str,
    /// Inclusive; always present when an agent is consulted.
    pub legal_range: (Money, Money),
    pub balance: Money,
    pub history: &'a [RoundRecord],
    pub style: Style,
}

impl DecisionContext<'_> {
    pub fn clamp(&self, amount: Money) -> Money {
        let (lo, hi) = self.legal_range;
        match self.style {
            Style::Fixed => lo,
            Style::Variable => amount.clamp(lo, hi),
        }
    }
}

pub trait Agent: Send {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision, AgentError>;

    /// Whether `ctx.prompt` is read; the runner skips composing otherwise.
    fn needs_prompt(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum AgentSpec {
    Llm(LlmConfig),
    Synthetic(SyntheticParams),
    Scripted { decisions: Vec<Action> },
    Random { seed: u64 },
}

impl AgentSpec {
    pub fn validate(&self) -> Result<(), AgentError> {
        match self {
            AgentSpec::Llm(cfg) => cfg.validate(),
            AgentSpec::Synthetic(p) => p.validate(),
            AgentSpec::Scripted { decisions } if decisions.is_empty() => {
                Err(AgentError::InvalidSpec("scripted sequence must be nonempty".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AgentSpec::Llm(_) => "llm",
            AgentSpec::Synthetic(_) => "synthetic",
            AgentSpec::Scripted { .. } => "scripted",
            AgentSpec::Random { .. } => "random",
        }
    }
}

/// Builds one agent per trial. LLM agents share a client, and with it the
/// in-flight request cap.
pub struct AgentFactory {
    spec: AgentSpec,
    llm: Option<Arc<LlmClient>>,
}

impl AgentFactory {
    pub fn new(spec: AgentSpec) -> Result<Self, AgentError> {
        spec.validate()?;
        let llm = match &spec {
            AgentSpec::Llm(cfg) => Some(Arc::new(LlmClient::from_env(cfg.clone())?)),
            _ => None,
        };
        Ok(Self { spec, llm })
    }

    /// LLM factory over a custom transport.
    pub fn with_transport(spec: AgentSpec, transport: Box<dyn ChatTransport>) -> Result<Self, AgentError> {
        spec.validate()?;
        let llm = match &spec {
            AgentSpec::Llm(cfg) => Some(Arc::new(LlmClient::new(cfg.clone(), transport))),
            _ => None,
        };
        Ok(Self { spec, llm })
    }

    pub fn spec(&self) -> &AgentSpec {
        &self.spec
    }

    pub fn create(&self, trial_seed: u64) -> Box<dyn Agent> {
        match &self.spec {
            AgentSpec::Llm(cfg) => Box::new(LlmAgent {
                client: Arc::clone(self.llm.as_ref().expect("llm client built with spec")),
                parse_retries: cfg.parse_retries,
            }),
            AgentSpec::Synthetic(p) => Box::new(SyntheticAgent {
                params: p.clone(),
                rng: policy_rng(trial_seed, 0),
            }),
            AgentSpec::Scripted { decisions } => Box::new(ScriptedAgent {
                script: decisions.clone().into(),
            }),
            AgentSpec::Random { seed } => Box::new(RandomAgent {
                rng: policy_rng(trial_seed ^ seed.rotate_left(17), 0),
            }),
        }
    }
}

/// Policy randomness lives on a separate ChaCha stream from the win draws.
fn policy_rng(trial_seed: u64, salt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    rng.set_stream(1 + salt);
    rng
}

pub struct ScriptedAgent {
    script: VecDeque<Action>,
}

impl ScriptedAgent {
    pub fn new(script: Vec<Action>) -> Self {
        Self { script: script.into() }
    }
}

impl Agent for ScriptedAgent {
    /// Plays the script in order and quits once it runs out.
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision, AgentError> {
        let action = match self.script.pop_front().unwrap_or(Action::Quit) {
            Action::Bet(x) => Action::Bet(ctx.clamp(x)),
            Action::Quit => Action::Quit,
        };
        Ok(Decision::new(action))
    }

    fn needs_prompt(&self) -> bool {
        false
    }
}

pub struct SyntheticAgent {
    params: SyntheticParams,
    rng: ChaCha8Rng,
}

impl SyntheticAgent {
    pub fn new(params: SyntheticParams, seed: u64) -> Self {
        Self {
            params,
            rng: policy_rng(seed, 0),
        }
    }
}

impl Agent for SyntheticAgent {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision, AgentError> {
        Ok(synthetic_policy(&self.params, ctx, &mut self.rng))
    }

    fn needs_prompt(&self) -> bool {
        false
    }
}

/// Quits with probability 0.1, otherwise bets uniformly within the legal range.
pub struct RandomAgent {
    rng: ChaCha8Rng,
}

impl Agent for RandomAgent {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision, AgentError> {
        let quit = self.rng.random::<f64>() < 0.1;
        let (lo, hi) = ctx.legal_range;
        let amount = self.rng.random_range(lo..=hi);
        Ok(Decision::new(if quit {
            Action::Quit
        } else {
            Action::Bet(ctx.clamp(amount))
        }))
    }

    fn needs_prompt(&self) -> bool {
        false
    }
}

/// Re-asks on unparseable replies, then falls back to quitting.
pub struct LlmAgent {
    client: Arc<LlmClient>,
    parse_retries: u32,
}

impl Agent for LlmAgent {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision, AgentError> {
        let mut calls = Vec::new();
        for _ in 0..=self.parse_retries {
            let completion = self.client.complete(ctx.prompt)?;
            let parsed = parse_decision(&completion.text, ctx.legal_range, ctx.style);
            calls.push(completion.call);
            if let Ok(mut d) = parsed {
                d.calls = calls;
                return Ok(d);
            }
        }
        log::warn!("unparseable agent replies after {} attempts; quitting", calls.len());
        Ok(Decision::fallback_quit(calls))
    }
}

/// Replays recorded raw responses through the same parse and fallback
/// logic as [`LlmAgent`].
pub struct ReplayAgent {
    recorded: VecDeque<Decision>,
    parse_retries: u32,
}

impl ReplayAgent {
    pub fn new(recorded: Vec<Decision>, parse_retries: u32) -> Self {
        Self {
            recorded: recorded.into(),
            parse_retries,
        }
    }
}

impl Agent for ReplayAgent {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision, AgentError> {
        let recorded = self
            .recorded
            .pop_front()
            .ok_or_else(|| AgentError::AgentUnavailable("replay exhausted".into()))?;
        if recorded.calls.is_empty() {
            return match recorded.action {
                Action::Bet(x) => Ok(Decision {
                    action: Action::Bet(ctx.clamp(x)),
                    ..recorded
                }),
                Action::Quit => Ok(recorded),
            };
        }
        let mut calls = Vec::new();
        for call in recorded.calls.iter().take(self.parse_retries as usize + 1) {
            calls.push(call.clone());
            if let Ok(mut d) = parse_decision(&call.raw, ctx.legal_range, ctx.style) {
                d.calls = calls;
                return Ok(d);
            }
        }
        Ok(Decision::fallback_quit(calls))
    }

    fn needs_prompt(&self) -> bool {
        false
    }
}
