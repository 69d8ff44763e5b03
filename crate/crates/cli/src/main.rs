use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use gamblebench::agents::AgentSpec;
use gamblebench::features::{
    self, differential_features_multi, layer_distribution, max_separation, patch_effect, synth_activations,
    DiffConfig, DiffReport, OutcomeCounts, PatchClass, PatchContext, SignificanceMode, SynthSpec,
};
use gamblebench::game::{Outcome, RoundRecord, Style};
use gamblebench::prompt::{parse_condition_code, ConditionCode, PromptSpec, TemplateSet};
use gamblebench::runner::{self, ExperimentPlan, GameSettings, ReportKind, RunOptions};

#[derive(Parser)]
#[command(name = "gamblebench", version, about = "Slot-machine gambling experiments for LLM agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run or resume a factorial experiment.
    Run(RunArgs),
    /// Summarize an experiment directory.
    Aggregate {
        dir: PathBuf,
        /// Print the full aggregate as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Write report files into DIR/reports.
    Report {
        dir: PathBuf,
        /// table2, scatter, components, complexity, streaks or all.
        #[arg(long, default_value = "all")]
        kind: String,
    },
    /// Re-play one trial and check it against the stored transcript.
    Replay { dir: PathBuf, trial_id: String },
    /// Print the prompt for one condition and game state.
    Compose(ComposeArgs),
    /// Activation feature analysis.
    Features {
        #[command(subcommand)]
        command: FeatureCommand,
    },
}

#[derive(Clone, Copy, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum StyleArg {
    Fixed,
    Variable,
    Both,
}

impl StyleArg {
    fn styles(self) -> Vec<Style> {
        match self {
            StyleArg::Fixed => vec![Style::Fixed],
            StyleArg::Variable => vec![Style::Variable],
            StyleArg::Both => vec![Style::Fixed, Style::Variable],
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Agent spec JSON file.
    #[arg(long)]
    agent: Option<PathBuf>,
    /// `all` or a comma-separated list such as `BASE,G,MW,GPW-fixed`.
    #[arg(long)]
    conditions: Option<String>,
    #[arg(long, value_enum)]
    style: Option<StyleArg>,
    #[arg(long)]
    reps: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    parallel: Option<usize>,
    /// Directory of prompt template overrides.
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Execute at most N trials, then stop (resume later).
    #[arg(long)]
    stop_after: Option<usize>,
    /// Re-run trials previously recorded as aborted.
    #[arg(long)]
    retry_aborted: bool,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AgentRef {
    Path(PathBuf),
    Inline(AgentSpec),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ConditionList {
    Text(String),
    List(Vec<String>),
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    agent: Option<AgentRef>,
    conditions: Option<ConditionList>,
    style: Option<StyleArg>,
    reps: Option<u32>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    parallel: Option<usize>,
    templates: Option<PathBuf>,
    game: Option<GameSettings>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_conditions(text: &str, styles: &[Style]) -> Result<Vec<ConditionCode>> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(styles.iter().flat_map(|&s| ConditionCode::all_for_style(s)).collect());
    }
    let mut out = Vec::new();
    for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if token.contains('-') {
            out.push(parse_condition_code(token)?);
        } else {
            for &style in styles {
                let mut c = parse_condition_code(token)?;
                c.style = style;
                out.push(c);
            }
        }
    }
    if out.is_empty() {
        bail!("no conditions given");
    }
    Ok(out)
}

fn build_plan(args: &RunArgs) -> Result<ExperimentPlan> {
    let config: RunConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => RunConfig::default(),
    };
    let agent = match (&args.agent, config.agent) {
        (Some(p), _) => read_json(p)?,
        (None, Some(AgentRef::Path(p))) => read_json(&p)?,
        (None, Some(AgentRef::Inline(spec))) => spec,
        (None, None) => bail!("an agent spec is required (--agent or config)"),
    };
    let styles = args.style.or(config.style).unwrap_or(StyleArg::Both).styles();
    let conditions = match (&args.conditions, config.conditions) {
        (Some(t), _) => parse_conditions(t, &styles)?,
        (None, Some(ConditionList::Text(t))) => parse_conditions(&t, &styles)?,
        (None, Some(ConditionList::List(l))) => parse_conditions(&l.join(","), &styles)?,
        (None, None) => parse_conditions("all", &styles)?,
    };
    let mut plan = ExperimentPlan::new(
        agent,
        conditions,
        args.reps.or(config.reps).unwrap_or(50),
        args.seed.or(config.seed).unwrap_or(42),
    );
    plan.output_dir = args
        .out
        .clone()
        .or(config.out)
        .context("an output directory is required (--out or config)")?;
    plan.parallel_limit = args.parallel.or(config.parallel).unwrap_or(8);
    plan.templates = args.templates.clone().or(config.templates);
    if let Some(game) = config.game {
        plan.game = game;
    }
    Ok(plan)
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let plan = build_plan(&args)?;
    let options = RunOptions {
        stop_after: args.stop_after,
        retry_aborted: args.retry_aborted,
    };
    let s = runner::run_experiment(&plan, &options)?;
    println!(
        "{}: {} planned, {} skipped, {} executed ({} aborted){}",
        s.dir.display(),
        s.planned,
        s.skipped,
        s.executed,
        s.aborted,
        if s.complete { "" } else { ", incomplete" }
    );
    Ok(())
}

fn cmd_aggregate(dir: &Path, json: bool) -> Result<()> {
    let agg = runner::aggregate(dir)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&agg)?);
        return Ok(());
    }
    println!(
        "{:<9} {:>6} {:>8} {:>16} {:>16} {:>14} {:>18} {:>18}",
        "style", "games", "aborted", "bankrupt %", "index", "rounds", "total bet", "net P/L"
    );
    for s in &agg.styles {
        println!(
            "{:<9} {:>6} {:>8} {:>16} {:>16} {:>14} {:>18} {:>18}",
            s.style.as_str(),
            s.n_games,
            s.n_aborted,
            format!("{:.2} ± {:.2}", 100.0 * s.bankruptcy_rate.mean, 100.0 * s.bankruptcy_rate.se),
            format!("{:.3} ± {:.3}", s.index.mean, s.index.se),
            format!("{:.2} ± {:.2}", s.rounds.mean, s.rounds.se),
            format!("{:.2} ± {:.2}", s.total_bet.mean, s.total_bet.se),
            format!("{:.2} ± {:.2}", s.net_pl.mean, s.net_pl.se),
        );
    }
    if agg.n_fallback_decisions > 0 {
        println!("{} decisions fell back to quit", agg.n_fallback_decisions);
    }
    Ok(())
}

fn cmd_report(dir: &Path, kind: &str) -> Result<()> {
    let kinds = if kind == "all" {
        ReportKind::ALL.to_vec()
    } else {
        vec![kind.parse::<ReportKind>()?]
    };
    for k in kinds {
        for p in runner::report(dir, k)? {
            println!("{}", p.display());
        }
    }
    Ok(())
}

fn cmd_replay(dir: &Path, trial_id: &str) -> Result<ExitCode> {
    let original = runner::load_records(dir)?
        .into_iter()
        .find(|r| r.trial_id == trial_id)
        .with_context(|| format!("trial {trial_id} not found"))?;
    let replayed = runner::replay_trial(dir, trial_id)?;
    if runner::records_equivalent(&original, &replayed) {
        println!("{trial_id}: identical ({} rounds)", replayed.rounds.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{trial_id}: MISMATCH");
        Ok(ExitCode::FAILURE)
    }
}

#[derive(Args)]
struct ComposeArgs {
    /// e.g. GPW, BASE or MW-fixed.
    #[arg(long, default_value = "BASE")]
    condition: String,
    #[arg(long, value_enum)]
    style: Option<StyleArg>,
    #[arg(long, default_value_t = 100)]
    balance: u64,
    /// JSON array of round records, oldest first.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Override the consecutive-loss count derived from the history.
    #[arg(long)]
    losses: Option<u32>,
    #[arg(long)]
    templates: Option<PathBuf>,
}

fn cmd_compose(args: ComposeArgs) -> Result<()> {
    let mut condition = parse_condition_code(&args.condition)?;
    match args.style {
        Some(StyleArg::Fixed) => condition.style = Style::Fixed,
        Some(StyleArg::Variable) => condition.style = Style::Variable,
        Some(StyleArg::Both) => bail!("compose takes a single style"),
        None => {}
    }
    let history: Vec<RoundRecord> = match &args.history {
        Some(p) => read_json(p)?,
        None => Vec::new(),
    };
    let losses = args
        .losses
        .unwrap_or_else(|| gamblebench::game::trailing_run(&history, Outcome::Loss));
    let templates = match &args.templates {
        Some(dir) => TemplateSet::load_dir(dir)?,
        None => TemplateSet::default(),
    };
    let config = GameSettings::default().config_for(condition.style);
    let prompt = templates.compose(
        &PromptSpec {
            condition,
            balance: args.balance,
            history: &history,
            consecutive_losses: losses,
        },
        &config,
    );
    let mut text = prompt;
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match std::io::stdout().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

#[derive(Args)]
struct DiffArgs {
    /// Activation files (binary or .csv); one per layer.
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    #[arg(long, default_value_t = 0.3)]
    dmin: f64,
    /// Require raw p < alpha and rejection by BH at this level instead of
    /// adjusted p < alpha.
    #[arg(long)]
    fdr_q: Option<f64>,
    /// Apply BH across all inputs jointly rather than per layer.
    #[arg(long)]
    pool_layers: bool,
    /// Layer assigned to CSV inputs, which carry no metadata.
    #[arg(long, default_value_t = 0)]
    csv_layer: u32,
}

impl DiffArgs {
    fn run(&self) -> Result<DiffReport> {
        let datasets = self
            .inputs
            .iter()
            .map(|p| features::format::load(p, self.csv_layer).with_context(|| format!("loading {}", p.display())))
            .collect::<Result<Vec<_>>>()?;
        let config = DiffConfig {
            alpha: self.alpha,
            d_min: self.dmin,
            mode: match self.fdr_q {
                Some(q) => SignificanceMode::RawAndFdr { q },
                None => SignificanceMode::AdjustedP,
            },
        };
        Ok(differential_features_multi(&datasets, &config, self.pool_layers)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Safe,
    Risky,
}

#[derive(Subcommand)]
enum FeatureCommand {
    /// Per-feature Cohen's d and Welch tests with FDR correction.
    Diff {
        #[command(flatten)]
        diff: DiffArgs,
        /// Write the full report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Features with the largest |d|.
    Top {
        #[command(flatten)]
        diff: DiffArgs,
        #[arg(long, default_value_t = 7)]
        k: usize,
    },
    /// Safe/risky counts of passing features per layer.
    Layers {
        #[command(flatten)]
        diff: DiffArgs,
        #[arg(long, default_value_t = 25)]
        first: u32,
        #[arg(long, default_value_t = 31)]
        last: u32,
    },
    /// Rate deltas between baseline and patched outcome counts (S,B,C).
    PatchEffect {
        #[arg(long)]
        baseline: String,
        #[arg(long)]
        patched: String,
        #[arg(long, value_enum, default_value = "risky")]
        context: Side,
        /// Which feature set was patched in.
        #[arg(long = "class", value_enum, default_value = "safe")]
        patch_class: Side,
    },
    /// Generate a synthetic activation dataset.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-class population mean vectors as a two-row dataset.
    Means {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        csv_layer: u32,
    },
}

fn cmd_features(command: FeatureCommand) -> Result<()> {
    match command {
        FeatureCommand::Diff { diff, out } => {
            let report = diff.run()?;
            let passing: Vec<_> = report.passing().collect();
            let risky = passing.iter().filter(|s| s.d > 0.0).count();
            println!(
                "{} tested, {} excluded, {} passing ({} risky, {} safe)",
                report.stats.len(),
                report.excluded.len(),
                passing.len(),
                risky,
                passing.len() - risky
            );
            if let Some(out) = out {
                fs::write(&out, serde_json::to_string_pretty(&report)? + "\n")?;
                println!("wrote {}", out.display());
            }
        }
        FeatureCommand::Top { diff, k } => {
            let report = diff.run()?;
            println!("{:<6} {:>8} {:>9} {:>12} {:>12}", "layer", "feature", "d", "p_raw", "p_adj");
            for s in max_separation(&report.stats, k) {
                println!(
                    "{:<6} {:>8} {:>+9.3} {:>12.3e} {:>12.3e}",
                    s.layer, s.feature_index, s.d, s.p_raw, s.p_adj
                );
            }
        }
        FeatureCommand::Layers { diff, first, last } => {
            let report = diff.run()?;
            let dist = layer_distribution(&report.stats, true, first..=last);
            println!("{:<6} {:>6} {:>6}", "layer", "safe", "risky");
            for l in &dist.layers {
                println!("{:<6} {:>6} {:>6}", l.layer, l.safe, l.risky);
            }
            println!("{:<6} {:>6} {:>6}", "total", dist.total_safe, dist.total_risky);
        }
        FeatureCommand::PatchEffect {
            baseline,
            patched,
            context,
            patch_class,
        } => {
            let baseline: OutcomeCounts = baseline.parse().map_err(anyhow::Error::msg)?;
            let patched: OutcomeCounts = patched.parse().map_err(anyhow::Error::msg)?;
            let context = match context {
                Side::Safe => PatchContext::Safe,
                Side::Risky => PatchContext::Risky,
            };
            let patch_class = match patch_class {
                Side::Safe => PatchClass::SafeFeatures,
                Side::Risky => PatchClass::RiskyFeatures,
            };
            let effect = patch_effect(&baseline, &patched, context, patch_class)?;
            println!("{}", serde_json::to_string_pretty(&effect)?);
        }
        FeatureCommand::Synth { spec, seed, out } => {
            let spec: SynthSpec = read_json(&spec)?;
            let ds = synth_activations(&spec, seed)?;
            features::format::save(&ds, &out)?;
            println!("wrote {} ({} trials x {} features)", out.display(), ds.n_trials, ds.n_features);
        }
        FeatureCommand::Means { input, out, csv_layer } => {
            let ds = features::format::load(&input, csv_layer)?;
            let means = features::mean_vectors_dataset(&ds)?;
            features::format::save(&means, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args).map(|_| ExitCode::SUCCESS),
        Command::Aggregate { dir, json } => cmd_aggregate(&dir, json).map(|_| ExitCode::SUCCESS),
        Command::Report { dir, kind } => cmd_report(&dir, &kind).map(|_| ExitCode::SUCCESS),
        Command::Replay { dir, trial_id } => cmd_replay(&dir, &trial_id),
        Command::Compose(args) => cmd_compose(args).map(|_| ExitCode::SUCCESS),
        Command::Features { command } => cmd_features(command).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
