use std::collections::{HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::plan::{expand_plan, ExperimentPlan, TrialSpec};
use super::trial::{play_trial, TrialRecord, TrialStatus};
use super::RunError;
use crate::agents::{AgentFactory, AgentSpec, ReplayAgent};
use crate::game::PRNG_NAME;
use crate::prompt::TemplateSet;
use crate::TOOL_VERSION;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRIALS_FILE: &str = "trials.jsonl";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub tool_version: String,
    pub prng: String,
    pub plan: ExperimentPlan,
    pub template_hashes: Vec<(String, String)>,
    pub n_trials: usize,
}

impl Manifest {
    fn for_plan(plan: &ExperimentPlan, templates: &TemplateSet) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            prng: PRNG_NAME.to_string(),
            plan: plan.identity(),
            template_hashes: templates.hashes(),
            n_trials: expand_plan(plan).len(),
        }
    }

    fn conflict_with(&self, other: &Manifest) -> Option<String> {
        if self.plan != other.plan {
            return Some("plan differs".into());
        }
        if self.template_hashes != other.template_hashes {
            return Some("prompt templates differ".into());
        }
        if self.prng != other.prng {
            return Some(format!("PRNG {} vs {}", self.prng, other.prng));
        }
        if self.format_version != other.format_version {
            return Some("transcript format version differs".into());
        }
        None
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Execute at most this many trials in this invocation.
    pub stop_after: Option<usize>,
    /// Re-run trials previously recorded as aborted.
    pub retry_aborted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub planned: usize,
    pub skipped: usize,
    pub executed: usize,
    pub aborted: usize,
    pub complete: bool,
}

fn templates_for(plan: &ExperimentPlan) -> Result<TemplateSet, RunError> {
    Ok(match &plan.templates {
        Some(dir) => TemplateSet::load_dir(dir)?,
        None => TemplateSet::default(),
    })
}

pub fn load_manifest(dir: &Path) -> Result<Manifest, RunError> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    Ok(serde_json::from_str(&text)?)
}

struct Loaded {
    records: Vec<TrialRecord>,
    /// Byte length of the well-formed prefix.
    valid_len: usize,
}

/// Parse the transcript file. A malformed final line (an interrupted write)
/// is dropped; a malformed line elsewhere is corruption.
fn read_trials(path: &Path) -> Result<Loaded, RunError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Ok(Loaded {
                records: Vec::new(),
                valid_len: 0,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let mut records = Vec::new();
    let mut offset = 0;
    let mut line_no = 0;
    while offset < bytes.len() {
        line_no += 1;
        let rest = &bytes[offset..];
        let (line, terminated) = match rest.iter().position(|&b| b == b'\n') {
            Some(i) => (&rest[..i], true),
            None => (rest, false),
        };
        let parsed = serde_json::from_slice::<TrialRecord>(line);
        match (parsed, terminated) {
            (Ok(r), true) => records.push(r),
            (_, false) => break,
            (Err(e), true) => {
                let is_last = offset + line.len() + 1 == bytes.len();
                if is_last {
                    break;
                }
                return Err(RunError::Corrupt {
                    line: line_no,
                    msg: e.to_string(),
                });
            }
        }
        offset += line.len() + 1;
    }
    Ok(Loaded {
        records,
        valid_len: offset,
    })
}

/// Last record per trial id wins (a retried abort supersedes the original).
fn dedup(records: Vec<TrialRecord>) -> Vec<TrialRecord> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut out: Vec<TrialRecord> = Vec::with_capacity(records.len());
    for r in records {
        match index.get(&r.trial_id) {
            Some(&i) => out[i] = r,
            None => {
                index.insert(r.trial_id.clone(), out.len());
                out.push(r);
            }
        }
    }
    out
}

/// All trial records in file order, without modifying the directory.
pub fn load_records(dir: &Path) -> Result<Vec<TrialRecord>, RunError> {
    Ok(dedup(read_trials(&dir.join(TRIALS_FILE))?.records))
}

fn write_line(w: &mut impl Write, record: &TrialRecord) -> Result<(), RunError> {
    let mut line = serde_json::to_vec(record)?;
    line.push(b'\n');
    w.write_all(&line)?;
    Ok(())
}

/// Rewrite the transcript file in plan order via a temp file and rename.
fn canonicalize(path: &Path, plan_order: &[TrialSpec], records: Vec<TrialRecord>) -> Result<(), RunError> {
    let mut by_id: HashMap<String, TrialRecord> = records.into_iter().map(|r| (r.trial_id.clone(), r)).collect();
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        for t in plan_order {
            if let Some(r) = by_id.remove(&t.trial_id) {
                write_line(&mut w, &r)?;
            }
        }
        let f = w.into_inner().map_err(|e| e.into_error())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Run (or resume) an experiment, building agents from the plan's spec.
pub fn run_experiment(plan: &ExperimentPlan, options: &RunOptions) -> Result<RunSummary, RunError> {
    plan.validate()?;
    let factory = AgentFactory::new(plan.agent.clone())?;
    run_with_factory(plan, &factory, options)
}

/// Run (or resume) an experiment with an explicit agent factory, e.g. one
/// holding a custom chat transport.
pub fn run_with_factory(
    plan: &ExperimentPlan,
    factory: &AgentFactory,
    options: &RunOptions,
) -> Result<RunSummary, RunError> {
    plan.validate()?;
    let dir = plan.output_dir.clone();
    fs::create_dir_all(&dir)?;
    let templates = templates_for(plan)?;
    let manifest = Manifest::for_plan(plan, &templates);
    let manifest_path = dir.join(MANIFEST_FILE);
    if manifest_path.exists() {
        let existing = load_manifest(&dir)?;
        if let Some(why) = existing.conflict_with(&manifest) {
            return Err(RunError::OutputConflict(why));
        }
        if existing.tool_version != manifest.tool_version {
            warn!("resuming run written by {}", existing.tool_version);
        }
    } else {
        let tmp = dir.join("manifest.json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(&manifest)? + "\n")?;
        fs::rename(&tmp, &manifest_path)?;
    }

    let trials_path = dir.join(TRIALS_FILE);
    let loaded = read_trials(&trials_path)?;
    if trials_path.exists() && fs::metadata(&trials_path)?.len() as usize != loaded.valid_len {
        warn!("dropping partial trailing line in {}", trials_path.display());
        OpenOptions::new()
            .write(true)
            .open(&trials_path)?
            .set_len(loaded.valid_len as u64)?;
    }
    let mut existing = dedup(loaded.records);

    let plan_order = expand_plan(plan);
    let planned_ids: HashSet<&str> = plan_order.iter().map(|t| t.trial_id.as_str()).collect();
    existing.retain(|r| planned_ids.contains(r.trial_id.as_str()));
    let done: HashSet<String> = existing
        .iter()
        .filter(|r| !(options.retry_aborted && r.status == TrialStatus::Aborted))
        .map(|r| r.trial_id.clone())
        .collect();
    let todo: Vec<&TrialSpec> = plan_order.iter().filter(|t| !done.contains(&t.trial_id)).collect();
    let skipped = plan_order.len() - todo.len();
    let limit = options.stop_after.map_or(todo.len(), |n| n.min(todo.len()));
    info!(
        "{} planned, {} already present, running {}",
        plan_order.len(),
        skipped,
        limit
    );

    let mut file = OpenOptions::new().create(true).append(true).open(&trials_path)?;
    let next = AtomicUsize::new(0);
    let cancel = AtomicBool::new(false);
    let workers = plan.parallel_limit.max(1).min(limit.max(1));
    let mut executed = 0;
    let mut aborted = 0;
    let mut new_records = Vec::with_capacity(limit);
    let mut failure: Option<RunError> = None;

    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<TrialRecord>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, cancel, todo, templates) = (&next, &cancel, &todo, &templates);
            scope.spawn(move || loop {
                if cancel.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= limit {
                    break;
                }
                let spec = todo[i];
                let mut agent = factory.create(spec.seed);
                let record = play_trial(spec, &plan.game, templates, agent.as_mut());
                if tx.send(record).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        for record in rx {
            if failure.is_some() {
                continue;
            }
            if !record.accounting_ok() {
                cancel.store(true, Ordering::Relaxed);
                failure = Some(RunError::Accounting(record.trial_id.clone()));
                continue;
            }
            if let Err(e) = write_line(&mut file, &record).and_then(|_| file.flush().map_err(RunError::from)) {
                cancel.store(true, Ordering::Relaxed);
                failure = Some(e);
                continue;
            }
            executed += 1;
            if record.status == TrialStatus::Aborted {
                aborted += 1;
                warn!("trial {} aborted: {}", record.trial_id, record.error.as_deref().unwrap_or(""));
            }
            if executed % 100 == 0 {
                info!("{executed}/{limit} trials done");
            }
            new_records.push(record);
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    file.sync_all()?;
    drop(file);

    existing.extend(new_records);
    let all = dedup(existing);
    let complete = plan_order.iter().all(|t| all.iter().any(|r| r.trial_id == t.trial_id));
    if complete {
        canonicalize(&trials_path, &plan_order, all)?;
    }
    Ok(RunSummary {
        dir,
        planned: plan_order.len(),
        skipped,
        executed,
        aborted,
        complete,
    })
}

/// Re-play one recorded trial from its manifest. Model-backed trials replay
/// the stored raw responses; other agents are rebuilt from their spec.
pub fn replay_trial(dir: &Path, trial_id: &str) -> Result<TrialRecord, RunError> {
    let manifest = load_manifest(dir)?;
    let plan = manifest.plan;
    let original = load_records(dir)?
        .into_iter()
        .find(|r| r.trial_id == trial_id)
        .ok_or_else(|| RunError::TrialNotFound(trial_id.to_string()))?;
    let spec = TrialSpec {
        trial_id: original.trial_id.clone(),
        condition: original.condition,
        replication: original.replication,
        seed: original.seed,
    };
    let templates = templates_for(&plan)?;
    let mut agent: Box<dyn crate::agents::Agent> = match &plan.agent {
        AgentSpec::Llm(cfg) => Box::new(ReplayAgent::new(original.decisions.clone(), cfg.parse_retries)),
        other => AgentFactory::new(other.clone())?.create(spec.seed),
    };
    Ok(play_trial(&spec, &plan.game, &templates, agent.as_mut()))
}

/// Equality ignoring wall-clock timing.
pub fn records_equivalent(a: &TrialRecord, b: &TrialRecord) -> bool {
    let strip = |r: &TrialRecord| TrialRecord {
        wall_time_ms: 0,
        ..r.clone()
    };
    strip(a) == strip(b)
}
