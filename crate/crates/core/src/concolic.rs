//! Incremental concolic search over the instrumented design.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bv;
use crate::cfg::{BlockId, CfgSet, DistanceMap, Next};
use crate::frontend::ast::Expr;
use crate::frontend::ElaboratedDesign;
use crate::instrument::InstrumentedDesign;
use crate::sim::{simulate, Phase, SimError, SimulationTrace, TestSet, TestVector};
use crate::solver::{self, Backend, ConstraintVector, Model, PathPredicate, SolveOutcome};
use crate::symbolic::{unroll, Unrolling};
use crate::target::BranchTarget;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConfig {
    pub unroll: u32,
    pub limit: u32,
    pub seed: u64,
    pub backend: Backend,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { unroll: 10, limit: 10, seed: 1, backend: Backend::Internal }
    }
}

/// An executed branch whose other outcome is a candidate to force.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlternateBranch {
    /// The block the flipped outcome leads to.
    pub block: BlockId,
    /// The block holding the branch.
    pub branch: BlockId,
    /// Concrete outcome of the branch.
    pub outcome: bool,
    /// Branch condition and the polarity the solver must make true.
    pub negated_guard: (Expr, bool),
    pub cycle: u32,
    pub phase: Phase,
    pub process: usize,
    pub distance: u32,
}

/// Untaken branch outcomes at cycles from `start` on, nearest to the
/// target first, then earliest.
pub fn select_alternate_branches(
    p: &SimulationTrace,
    ds: &DistanceMap,
    cs: &CfgSet,
    start: u32,
) -> Vec<AlternateBranch> {
    let mut out = Vec::new();
    for run in p.runs.iter().filter(|r| r.cycle >= start) {
        let executed = &p.records[run.cycle as usize - 1].blocks;
        for dec in &run.decisions {
            let Next::Branch { cond, then_block, else_block, .. } = &cs.block(dec.block).next else { continue };
            let other = if dec.outcome { *else_block } else { *then_block };
            if executed.contains(&other) {
                continue;
            }
            let Some(distance) = ds.get(other) else { continue };
            out.push(AlternateBranch {
                block: other,
                branch: dec.block,
                outcome: dec.outcome,
                negated_guard: (cond.clone(), !dec.outcome),
                cycle: run.cycle,
                phase: run.phase,
                process: run.process,
                distance,
            });
        }
    }
    out.sort_by_key(|a| (a.distance, a.cycle, a.phase, a.block));
    out
}

fn note(cs: &CfgSet, block: BlockId, outcome: bool, cycle: u32, phase: Phase) -> String {
    let p = match phase {
        Phase::PreEdge => "pre",
        Phase::Edge => "edge",
        Phase::PostEdge => "post",
    };
    format!("{}{}@{cycle}/{p}", if outcome { "" } else { "!" }, cs.label(block))
}

/// Path predicates of every decision before the pivot, then the flipped
/// pivot. At the pivot cycle only the pivot's own process run contributes,
/// so the solver may change same-cycle inputs that other runs branch on.
pub fn build_constraint_vector(
    ab: &AlternateBranch,
    p: &SimulationTrace,
    u: &Unrolling,
    cs: &CfgSet,
    t: &TestSet,
) -> ConstraintVector {
    let mut store = u.store.clone();
    let mut prefix = Vec::new();
    let mut push = |store: &mut solver::TermStore, block: BlockId, outcome: bool, cycle: u32, phase: Phase| {
        let c = u.condition(cycle, phase, block).expect("branch condition recorded");
        let term = if outcome { c } else { store.not(c) };
        if store.as_const(term) != Some(1) {
            prefix.push(PathPredicate { cycle, term, note: note(cs, block, outcome, cycle, phase) });
        }
    };
    for run in &p.runs {
        let pivot_run = run.cycle == ab.cycle && run.phase == ab.phase && run.process == ab.process;
        if run.cycle < ab.cycle {
            for d in &run.decisions {
                push(&mut store, d.block, d.outcome, run.cycle, run.phase);
            }
        } else if pivot_run {
            for d in run.decisions.iter().take_while(|d| d.block != ab.branch) {
                push(&mut store, d.block, d.outcome, run.cycle, run.phase);
            }
        }
    }
    let c = u.condition(ab.cycle, ab.phase, ab.branch).expect("pivot condition recorded");
    let flipped = if ab.outcome { store.not(c) } else { c };
    let pivot =
        PathPredicate { cycle: ab.cycle, term: flipped, note: note(cs, ab.branch, !ab.outcome, ab.cycle, ab.phase) };
    let mut roots: Vec<_> = prefix.iter().map(|q: &PathPredicate| q.term).collect();
    roots.push(pivot.term);
    let (store, roots) = store.extract_roots(&roots);
    for (q, r) in prefix.iter_mut().zip(&roots) {
        q.term = *r;
    }
    let pivot = PathPredicate { term: *roots.last().unwrap(), ..pivot };
    let inputs = u
        .inputs_through(ab.cycle)
        .into_iter()
        .map(|mut s| {
            s.hint = t.value(s.cycle, &s.name);
            s
        })
        .collect();
    ConstraintVector { store, prefix, pivot, inputs }
}

/// One solver call of a concolic search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Iteration {
    /// Block the flipped branch leads to.
    pub candidate: String,
    /// The flipped decision, e.g. `!B13@2/post`.
    pub pivot: String,
    pub cycle: u32,
    pub phase: Phase,
    pub distance: u32,
    pub verdict: String,
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// A solved constraint vector in SMT-LIB2 form, kept for export.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PivotScript {
    pub pivot: String,
    pub verdict: String,
    pub script: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcolicOutcome {
    pub test: TestSet,
    pub activation: Option<u32>,
    pub start: u32,
    pub iterations: Vec<Iteration>,
    pub scripts: Vec<PivotScript>,
    /// Why the search stopped without activation.
    pub exhausted: Option<String>,
}

impl ConcolicOutcome {
    pub fn solved(&self) -> bool {
        self.activation.is_some()
    }

    pub fn solver_calls(&self) -> u32 {
        self.iterations.len() as u32
    }
}

/// Replaces cycles `start..=pivot` with the model's values and zeroes the
/// cycles after the pivot.
fn compose(d: &ElaboratedDesign, t: &TestSet, m: &Model, start: u32, pivot: u32, n: u32) -> TestSet {
    let mut out = t.truncated(start - 1);
    for cycle in start..=n {
        let inputs = d
            .data_inputs()
            .iter()
            .map(|s| {
                let v =
                    if cycle <= pivot { m.get(&s.name, cycle).unwrap_or_else(|| t.value(cycle, &s.name)) } else { 0 };
                (s.name.clone(), v)
            })
            .collect();
        out.vectors.push(TestVector { cycle, inputs });
    }
    out
}

fn flipped(trace: &SimulationTrace, ab: &AlternateBranch) -> bool {
    trace.runs.iter().any(|r| {
        r.cycle == ab.cycle
            && r.phase == ab.phase
            && r.process == ab.process
            && r.decisions.iter().any(|d| d.block == ab.branch && d.outcome != ab.outcome)
    })
}

/// Searches for a test executing `target` at some cycle `>= start`.
/// Inputs before `start` stay as in `t`; every `(block, cycle)` in
/// `preserve` must keep executing, otherwise a new test is rejected.
pub fn concolic(
    d: &InstrumentedDesign,
    target: BlockId,
    t: &TestSet,
    start: u32,
    preserve: &[(BlockId, u32)],
    cfg: &SearchConfig,
) -> Result<ConcolicOutcome, SimError> {
    let n = cfg.unroll;
    let cs = &d.cfgs;
    let mut t = t.clone();
    t.pad_to(&d.design, n);
    let t = t.truncated(n);
    let mut out =
        ConcolicOutcome { test: t, activation: None, start, iterations: vec![], scripts: vec![], exhausted: None };
    let ds = cs.compute_distance(target);
    let mut unrolling: Option<Unrolling> = None;
    let mut tried: HashSet<(u32, Phase, BlockId, bool)> = HashSet::new();
    loop {
        let trace = simulate(d, &out.test, n)?;
        if let Some(c) = trace.first_activation(target, start) {
            out.activation = Some(c);
            return Ok(out);
        }
        if out.iterations.len() as u32 >= cfg.limit {
            out.exhausted = Some(format!("target not activated within limit {}", cfg.limit));
            return Ok(out);
        }
        let Some(ab) = select_alternate_branches(&trace, &ds, cs, start)
            .into_iter()
            .find(|a| !tried.contains(&(a.cycle, a.phase, a.branch, a.outcome)))
        else {
            out.exhausted = Some("no untried alternate branch left".into());
            return Ok(out);
        };
        tried.insert((ab.cycle, ab.phase, ab.branch, ab.outcome));
        let u = unrolling.get_or_insert_with(|| unroll(&d.design, cs, &out.test, start, n));
        let cv = build_constraint_vector(&ab, &trace, u, cs, &out.test);
        let outcome = solver::solve(&cv, &cfg.backend);
        let mut it = Iteration {
            candidate: cs.label(ab.block).to_string(),
            pivot: note(cs, ab.branch, !ab.outcome, ab.cycle, ab.phase),
            cycle: ab.cycle,
            phase: ab.phase,
            distance: ab.distance,
            verdict: String::new(),
            accepted: false,
            reason: None,
        };
        match outcome {
            Err(e) => {
                it.verdict = "error".into();
                it.reason = Some(e.to_string());
            }
            Ok(SolveOutcome::Unsat) => it.verdict = "unsat".into(),
            Ok(SolveOutcome::Unknown(why)) => {
                it.verdict = "unknown".into();
                it.reason = Some(why);
            }
            Ok(SolveOutcome::Sat(m)) => {
                it.verdict = "sat".into();
                if !solver::check_model(&cv, &m) {
                    it.reason = Some("model fails concrete check".into());
                } else {
                    let next = compose(&d.design, &out.test, &m, start, ab.cycle, n);
                    let replay = simulate(d, &next, n)?;
                    if !flipped(&replay, &ab) {
                        it.reason = Some("resimulation did not flip the branch".into());
                    } else if let Some((b, c)) = preserve.iter().find(|(b, c)| !replay.block_cycles(*b).contains(c)) {
                        it.reason = Some(format!("would lose {} at cycle {c}", cs.label(*b)));
                    } else {
                        it.accepted = true;
                        out.test = next;
                    }
                }
            }
        }
        out.scripts.push(PivotScript {
            pivot: it.pivot.clone(),
            verdict: it.verdict.clone(),
            script: solver::emit_smtlib(&cv),
        });
        out.iterations.push(it);
    }
}

/// Uniform random inputs for cycles `1..=n`.
pub fn random_test(d: &ElaboratedDesign, n: u32, seed: u64) -> TestSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = (1..=n)
        .map(|cycle| TestVector {
            cycle,
            inputs: d.data_inputs().iter().map(|s| (s.name.clone(), rng.gen::<u64>() & bv::mask(s.width))).collect(),
        })
        .collect();
    TestSet { vectors }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TargetResult {
    pub marker: String,
    pub label: String,
    pub solved: bool,
    pub iterations: u32,
    /// Cycle from which the search was allowed to change inputs.
    pub start: u32,
    pub activation_cycle: Option<u32>,
    /// First cycle the next target may change (activation + 1).
    pub next_start: Option<u32>,
    pub fragment: TestSet,
    pub log: Vec<Iteration>,
    #[serde(skip)]
    pub scripts: Vec<PivotScript>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IncrementalResult {
    pub initial: TestSet,
    pub targets: Vec<TargetResult>,
    /// The original branch target, searched last.
    pub final_target: TargetResult,
    pub combined: TestSet,
}

impl IncrementalResult {
    pub fn solved(&self) -> bool {
        self.final_target.solved
    }

    pub fn solver_calls(&self) -> u32 {
        self.targets.iter().map(|t| t.iterations).sum::<u32>() + self.final_target.iterations
    }
}

fn target_result(marker: &str, label: &str, o: &ConcolicOutcome, prev_end: u32) -> TargetResult {
    let fragment = match o.activation {
        Some(a) if a > prev_end => o.test.slice(prev_end + 1, a),
        _ => TestSet::default(),
    };
    TargetResult {
        marker: marker.to_string(),
        label: label.to_string(),
        solved: o.solved(),
        iterations: o.solver_calls(),
        start: o.start,
        activation_cycle: o.activation,
        next_start: o.activation.map(|a| a + 1),
        fragment,
        log: o.iterations.clone(),
        scripts: o.scripts.clone(),
        failure: o.exhausted.clone(),
    }
}

/// Solves the queue in order, each search starting where the previous
/// target fired, then the original target itself.
pub fn incremental_run(
    d: &InstrumentedDesign,
    final_target: &BranchTarget,
    cfg: &SearchConfig,
) -> Result<IncrementalResult, SimError> {
    let initial = random_test(&d.design, cfg.unroll, cfg.seed);
    let mut t = initial.clone();
    let mut start = 1;
    let mut last_activation = 0;
    let mut preserve: Vec<(BlockId, u32)> = Vec::new();
    let mut targets = Vec::new();
    for st in &d.queue.entries {
        let o = concolic(d, st.branch_block, &t, start, &preserve, cfg)?;
        targets.push(target_result(&st.marker, &st.label, &o, last_activation));
        t = o.test.clone();
        if let Some(a) = o.activation {
            preserve.push((st.branch_block, a));
            last_activation = a;
            start = a + 1;
        }
    }
    // The original target may fire in the same cycle as the last event.
    let final_start = last_activation.max(1);
    let o = concolic(d, final_target.block, &t, final_start, &preserve, cfg)?;
    let marker = d.marker_table.get(&final_target.block).cloned().unwrap_or_else(|| final_target.label.clone());
    let final_result = target_result(&marker, &final_target.label, &o, last_activation);
    let end = o.activation.unwrap_or(cfg.unroll);
    let combined = o.test.truncated(end);
    Ok(IncrementalResult { initial, targets, final_target: final_result, combined })
}

/// Plain concolic search on the original target from cycle 1.
pub fn baseline_run(
    d: &InstrumentedDesign,
    final_target: &BranchTarget,
    cfg: &SearchConfig,
) -> Result<IncrementalResult, SimError> {
    let initial = random_test(&d.design, cfg.unroll, cfg.seed);
    let o = concolic(d, final_target.block, &initial, 1, &[], cfg)?;
    let marker = d.marker_table.get(&final_target.block).cloned().unwrap_or_else(|| final_target.label.clone());
    let final_result = target_result(&marker, &final_target.label, &o, 0);
    let combined = o.test.truncated(o.activation.unwrap_or(cfg.unroll));
    Ok(IncrementalResult { initial, targets: vec![], final_target: final_result, combined })
}
