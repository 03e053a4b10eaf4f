//! End-to-end flow: analysis, instrumentation, search, replay.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cfg::{build_cfg_set, BlockId, CfgSet};
use crate::concolic::{baseline_run, incremental_run, IncrementalResult, SearchConfig};
use crate::frontend::{load_design, print_expr, ElaboratedDesign, SourceDesign};
use crate::instrument::{
    create_branch, extract_constraints, instrument_design, marker_names, modify, plain_design, ConstraintSet,
    InstrumentedDesign,
};
use crate::sequence::{dependency_search, get_signal_expression, SequenceStack};
use crate::sim::{replay_check, TestSet};
use crate::solver::Backend;
use crate::target::{resolve_target, BranchTarget, TargetLocator};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Incremental,
    Baseline,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "incremental" => Ok(Mode::Incremental),
            "baseline" => Ok(Mode::Baseline),
            _ => Err(format!("unknown mode `{s}` (expected incremental or baseline)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    pub design: String,
    pub target: TargetLocator,
    pub params: BTreeMap<String, i64>,
    pub unroll: u32,
    pub limit: u32,
    pub seed: u64,
    pub mode: Mode,
    pub solver: Backend,
    pub out: String,
}

impl RunConfig {
    pub fn new(design: impl Into<String>, target: TargetLocator) -> Self {
        RunConfig {
            design: design.into(),
            target,
            params: BTreeMap::new(),
            unroll: 10,
            limit: 10,
            seed: 1,
            mode: Mode::Incremental,
            solver: Backend::Internal,
            out: "out".into(),
        }
    }

    pub fn search(&self) -> SearchConfig {
        SearchConfig { unroll: self.unroll, limit: self.limit, seed: self.seed, backend: self.solver.clone() }
    }

    /// First 16 hex digits of the SHA-256 of the configuration.
    pub fn run_id(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Frontend,
    Target,
    Sequence,
    Instrument,
    Concolic,
    Replay,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).unwrap();
        write!(f, "{}", s.as_str().unwrap())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.message)
    }
}

impl std::error::Error for PipelineError {}

fn fail(stage: Stage, e: impl fmt::Display) -> PipelineError {
    PipelineError { stage, message: e.to_string() }
}

/// Everything derived from the design before any search.
pub struct Analysis {
    pub design: ElaboratedDesign,
    pub cfgs: CfgSet,
    pub target: BranchTarget,
    pub sequence: SequenceStack,
    pub target_constraints: ConstraintSet,
}

pub fn analyze(design: ElaboratedDesign, locator: &TargetLocator) -> Result<Analysis, PipelineError> {
    let cfgs = build_cfg_set(&design);
    let target = resolve_target(&cfgs, locator).map_err(|e| fail(Stage::Target, e))?;
    let se = get_signal_expression(&cfgs, &target);
    let sequence = dependency_search(&cfgs, &se);
    let target_constraints = extract_constraints(&cfgs, target.block);
    Ok(Analysis { design, cfgs, target, sequence, target_constraints })
}

/// A synthetic branch that could not be built, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Skipped {
    pub origin: String,
    pub reason: String,
}

/// Instruments one queue of sequence blocks.
pub fn instrument_queue(a: &Analysis, blocks: &[BlockId]) -> (InstrumentedDesign, Vec<Skipped>) {
    let names = marker_names(&a.design, blocks.len());
    let mut branches = Vec::new();
    let mut skipped = Vec::new();
    let mut next_name = names.iter();
    for &b in blocks {
        let sc = extract_constraints(&a.cfgs, b);
        let m = modify(&a.target_constraints, &sc, &a.cfgs);
        let name = next_name.clone().next().expect("enough marker names");
        match create_branch(&m, name, &a.cfgs) {
            Ok(br) => {
                next_name.next();
                branches.push(br);
            }
            Err(e) => skipped.push(Skipped { origin: a.cfgs.label(b).to_string(), reason: e.to_string() }),
        }
    }
    (instrument_design(&a.design, &branches), skipped)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueueEntryReport {
    pub marker: String,
    pub label: String,
    pub origin: String,
    pub constraints: String,
    pub condition: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TargetInfo {
    pub label: String,
    pub locator: String,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Attempt {
    pub queue: Vec<QueueEntryReport>,
    pub skipped: Vec<Skipped>,
    pub result: IncrementalResult,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub run_id: String,
    pub config: RunConfig,
    pub module: String,
    pub target: TargetInfo,
    pub sequence: String,
    pub target_constraints: String,
    /// One attempt per alternative queue, stopping at the first success.
    pub attempts: Vec<Attempt>,
    pub combined: TestSet,
    pub activated: bool,
    pub replay_passed: bool,
    pub verdict: String,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn winning(&self) -> &Attempt {
        self.attempts.iter().find(|a| a.result.solved()).unwrap_or_else(|| self.attempts.last().unwrap())
    }

    /// Fixed-width table of the targets of the reported attempt.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{:<10} {:<6} {:<10} {:>10} {:>6} {:>5}\n",
            "marker", "block", "activated", "cycle", "start", "iter"
        );
        let a = self.winning();
        for t in a.result.targets.iter().chain(std::iter::once(&a.result.final_target)) {
            let cycle = t.activation_cycle.map(|c| c.to_string()).unwrap_or_else(|| "-".into());
            s += &format!(
                "{:<10} {:<6} {:<10} {:>10} {:>6} {:>5}\n",
                t.marker,
                t.label,
                if t.solved { "yes" } else { "no" },
                cycle,
                t.start,
                t.iterations
            );
        }
        s += &format!("verdict: {}\n", self.verdict);
        s
    }
}

fn target_line(cs: &CfgSet, t: &BranchTarget) -> u32 {
    cs.block(t.block).span.0
}

/// Runs the whole flow on an already loaded source.
pub fn run(src: &SourceDesign, cfg: &RunConfig) -> Result<RunReport, PipelineError> {
    if cfg.unroll == 0 || cfg.limit == 0 {
        return Err(fail(Stage::Config, "unroll and limit must be at least 1"));
    }
    let design = load_design(src, &cfg.params).map_err(|e| fail(Stage::Frontend, e))?;
    let a = analyze(design, &cfg.target)?;
    let search = cfg.search();
    let mut attempts = Vec::new();
    match cfg.mode {
        Mode::Baseline => {
            let plain = plain_design(&a.design);
            let result = baseline_run(&plain, &a.target, &search).map_err(|e| fail(Stage::Concolic, e))?;
            attempts.push(Attempt { queue: vec![], skipped: vec![], result });
        }
        Mode::Incremental => {
            for blocks in a.sequence.queues() {
                let (inst, skipped) = instrument_queue(&a, &blocks);
                let queue = inst
                    .queue
                    .entries
                    .iter()
                    .map(|e| QueueEntryReport {
                        marker: e.marker.clone(),
                        label: e.label.clone(),
                        origin: e.origin_label.clone(),
                        constraints: e.constraints.render(),
                        condition: print_expr(&e.cond),
                    })
                    .collect();
                let result = incremental_run(&inst, &a.target, &search).map_err(|e| fail(Stage::Concolic, e))?;
                let solved = result.solved();
                attempts.push(Attempt { queue, skipped, result });
                if solved {
                    break;
                }
            }
        }
    }
    let best = attempts.iter().find(|a| a.result.solved()).unwrap_or_else(|| attempts.last().unwrap());
    let combined = best.result.combined.clone();
    let activated = best.result.solved();
    let replay_passed =
        replay_check(&a.design, &combined, &a.target, cfg.unroll).map_err(|e| fail(Stage::Replay, e))?;
    let verdict = match (activated, replay_passed) {
        (true, true) => format!("target {} activated and replay passed", a.target.label),
        (true, false) => format!("target {} activated but replay on the original design failed", a.target.label),
        _ => format!("target {} not activated within limit {}", a.target.label, cfg.limit),
    };
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        run_id: cfg.run_id(),
        config: cfg.clone(),
        module: a.design.ast.module_name.clone(),
        target: TargetInfo {
            label: a.target.label.clone(),
            locator: cfg.target.to_string(),
            line: target_line(&a.cfgs, &a.target),
        },
        sequence: a.sequence.render(&a.cfgs),
        target_constraints: a.target_constraints.render(),
        attempts,
        combined,
        activated,
        replay_passed,
        verdict,
    })
}
