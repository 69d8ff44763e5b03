//! Prompt rendering: the base template plus any subset of the five
//! optional components, with per-round placeholders filled in.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::game::{GameConfig, Money, Outcome, RoundRecord, Style};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("unknown component letter '{0}'")]
    UnknownComponentLetter(char),
    #[error("duplicate component letter '{0}'")]
    DuplicateLetter(char),
    #[error("empty condition code")]
    Empty,
    #[error("template io error: {0}")]
    Io(String),
    #[error("bad component order: {0}")]
    BadOrder(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Component {
    /// Goal-setting.
    G,
    /// Maximizing rewards.
    M,
    /// Hidden patterns hint.
    H,
    /// Win-reward information.
    W,
    /// Probability information.
    P,
}

impl Component {
    /// Canonical composition order.
    pub const CANONICAL: [Component; 5] = [Component::G, Component::M, Component::P, Component::W, Component::H];

    pub fn letter(self) -> char {
        match self {
            Component::G => 'G',
            Component::M => 'M',
            Component::H => 'H',
            Component::W => 'W',
            Component::P => 'P',
        }
    }

    pub fn from_letter(c: char) -> Result<Self, PromptError> {
        match c.to_ascii_uppercase() {
            'G' => Ok(Component::G),
            'M' => Ok(Component::M),
            'H' => Ok(Component::H),
            'W' => Ok(Component::W),
            'P' => Ok(Component::P),
            _ => Err(PromptError::UnknownComponentLetter(c)),
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

/// One of the 64 factorial conditions: a component subset and a betting style.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConditionCode {
    mask: u8,
    pub style: Style,
}

impl ConditionCode {
    pub fn new(components: &[Component], style: Style) -> Result<Self, PromptError> {
        let mut mask = 0u8;
        for &c in components {
            if mask & c.bit() != 0 {
                return Err(PromptError::DuplicateLetter(c.letter()));
            }
            mask |= c.bit();
        }
        Ok(Self { mask, style })
    }

    pub fn base(style: Style) -> Self {
        Self { mask: 0, style }
    }

    pub fn contains(&self, c: Component) -> bool {
        self.mask & c.bit() != 0
    }

    /// Components in canonical order.
    pub fn components(&self) -> Vec<Component> {
        Component::CANONICAL.into_iter().filter(|c| self.contains(*c)).collect()
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_base(&self) -> bool {
        self.mask == 0
    }

    /// Letters in canonical order, or `BASE`.
    pub fn letters(&self) -> String {
        if self.is_base() {
            "BASE".to_string()
        } else {
            self.components().iter().map(|c| c.letter()).collect()
        }
    }

    /// All 32 compositions for one style, ordered by component count and
    /// then canonical letters.
    pub fn all_for_style(style: Style) -> Vec<Self> {
        let mut all: Vec<Self> = (0u8..32)
            .map(|i| {
                let comps: Vec<Component> = Component::CANONICAL
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| i & (1 << k) != 0)
                    .map(|(_, c)| *c)
                    .collect();
                Self::new(&comps, style).expect("distinct")
            })
            .collect();
        all.sort_by_key(|c| (c.len(), canonical_rank(c)));
        all
    }

    /// The full 2 x 32 design, fixed style first.
    pub fn all() -> Vec<Self> {
        let mut v = Self::all_for_style(Style::Fixed);
        v.extend(Self::all_for_style(Style::Variable));
        v
    }
}

fn canonical_rank(c: &ConditionCode) -> Vec<usize> {
    Component::CANONICAL
        .iter()
        .enumerate()
        .filter(|(_, x)| c.contains(**x))
        .map(|(i, _)| i)
        .collect()
}

impl fmt::Display for ConditionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.letters(), self.style.as_str())
    }
}

/// Parses `BASE` or one to five component letters in any order, with an
/// optional `-fixed` / `-variable` suffix (default variable).
pub fn parse_condition_code(text: &str) -> Result<ConditionCode, PromptError> {
    let text = text.trim();
    let (body, style) = match text.rsplit_once('-') {
        Some((b, s)) if s.eq_ignore_ascii_case("fixed") => (b, Style::Fixed),
        Some((b, s)) if s.eq_ignore_ascii_case("variable") => (b, Style::Variable),
        Some((_, s)) => {
            return Err(PromptError::UnknownComponentLetter(s.chars().next().unwrap_or('-')));
        }
        None => (text, Style::Variable),
    };
    if body.is_empty() {
        return Err(PromptError::Empty);
    }
    if body.eq_ignore_ascii_case("base") {
        return Ok(ConditionCode::base(style));
    }
    let comps = body
        .chars()
        .map(Component::from_letter)
        .collect::<Result<Vec<_>, _>>()?;
    ConditionCode::new(&comps, style)
}

impl FromStr for ConditionCode {
    type Err = PromptError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_condition_code(s)
    }
}

impl Serialize for ConditionCode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ConditionCode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_condition_code(&s).map_err(serde::de::Error::custom)
    }
}

/// Everything that varies between rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptSpec<'a> {
    pub condition: ConditionCode,
    pub balance: Money,
    /// At most `history_window` records, oldest first.
    pub history: &'a [RoundRecord],
    pub consecutive_losses: u32,
}

pub const EMPTY_HISTORY: &str = "No previous rounds.";

/// The six template texts and the order components are stacked in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub base: String,
    pub goal: String,
    pub maximize: String,
    pub hidden: String,
    pub win_reward: String,
    pub probability: String,
    pub order: Vec<Component>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self {
            base: strip_final_newline(include_str!("../templates/base.txt")),
            goal: strip_final_newline(include_str!("../templates/G.txt")),
            maximize: strip_final_newline(include_str!("../templates/M.txt")),
            hidden: strip_final_newline(include_str!("../templates/H.txt")),
            win_reward: strip_final_newline(include_str!("../templates/W.txt")),
            probability: strip_final_newline(include_str!("../templates/P.txt")),
            order: Component::CANONICAL.to_vec(),
        }
    }
}

fn strip_final_newline(s: &str) -> String {
    s.strip_suffix('\n').unwrap_or(s).to_string()
}

impl TemplateSet {
    /// Loads `base.txt`, `G.txt`, `M.txt`, `H.txt`, `W.txt` and `P.txt` from
    /// `dir`. An optional `order.txt` (e.g. `GMPWH`) overrides the stacking
    /// order.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        let read = |name: &str| {
            std::fs::read_to_string(dir.join(name))
                .map(|s| strip_final_newline(&s))
                .map_err(|e| PromptError::Io(format!("{}: {e}", dir.join(name).display())))
        };
        let mut t = Self {
            base: read("base.txt")?,
            goal: read("G.txt")?,
            maximize: read("M.txt")?,
            hidden: read("H.txt")?,
            win_reward: read("W.txt")?,
            probability: read("P.txt")?,
            order: Component::CANONICAL.to_vec(),
        };
        if dir.join("order.txt").exists() {
            t = t.with_order(read("order.txt")?.trim())?;
        }
        Ok(t)
    }

    pub fn with_order(mut self, letters: &str) -> Result<Self, PromptError> {
        let order = letters
            .chars()
            .map(Component::from_letter)
            .collect::<Result<Vec<_>, _>>()?;
        let mut seen = order.clone();
        seen.sort();
        seen.dedup();
        if order.len() != 5 || seen.len() != 5 {
            return Err(PromptError::BadOrder(letters.to_string()));
        }
        self.order = order;
        Ok(self)
    }

    pub fn component_text(&self, c: Component) -> &str {
        match c {
            Component::G => &self.goal,
            Component::M => &self.maximize,
            Component::H => &self.hidden,
            Component::W => &self.win_reward,
            Component::P => &self.probability,
        }
    }

    /// SHA-256 of each template (hex), keyed by file name, for manifests.
    pub fn hashes(&self) -> Vec<(String, String)> {
        let mut out = vec![("base.txt".to_string(), sha256_hex(&self.base))];
        for c in [Component::G, Component::M, Component::H, Component::W, Component::P] {
            out.push((format!("{}.txt", c.letter()), sha256_hex(self.component_text(c))));
        }
        out.push((
            "order".to_string(),
            self.order.iter().map(|c| c.letter()).collect(),
        ));
        out
    }

    /// Component lines for `condition`, each terminated by a newline and
    /// followed by one blank separator line. Empty for `BASE`.
    pub fn component_block(&self, condition: &ConditionCode) -> String {
        let mut block = String::new();
        for &c in &self.order {
            if condition.contains(c) {
                block.push_str(self.component_text(c));
                block.push('\n');
            }
        }
        if !block.is_empty() {
            block.push('\n');
        }
        block
    }

    pub fn compose(&self, spec: &PromptSpec<'_>, config: &GameConfig) -> String {
        let window = config.history_window;
        let start = spec.history.len().saturating_sub(window);
        let history = render_history(&spec.history[start..]);
        let warning = warning_message(spec.consecutive_losses, config.warning_threshold);
        let balance = format!("${}", spec.balance);
        let base = self
            .base
            .replace("${balance}", &balance)
            .replace("{history}", &history)
            .replace("{warning_message}", &warning);
        let mut out = self.component_block(&spec.condition);
        out.push_str(&base);
        out
    }
}

/// Renders the prompt with the default templates.
pub fn compose(spec: &PromptSpec<'_>, config: &GameConfig) -> String {
    thread_local! {
        static DEFAULT: TemplateSet = TemplateSet::default();
    }
    DEFAULT.with(|t| t.compose(spec, config))
}

pub fn warning_message(consecutive_losses: u32, threshold: u32) -> String {
    if consecutive_losses >= threshold {
        format!("Warning: You have lost {consecutive_losses} consecutive rounds.")
    } else {
        String::new()
    }
}

/// One line per round, oldest first.
pub fn render_history(history: &[RoundRecord]) -> String {
    if history.is_empty() {
        return EMPTY_HISTORY.to_string();
    }
    history
        .iter()
        .map(|r| match r.outcome {
            Outcome::Win => format!(
                "Round {}: Bet ${} -> Win (+${})",
                r.round_index,
                r.bet,
                r.payout.saturating_sub(r.bet)
            ),
            Outcome::Loss => format!("Round {}: Bet ${} -> Loss (-${})", r.round_index, r.bet, r.bet),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn sha256_hex(s: &str) -> String {
    Sha256::digest(s.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
