//! Two-valued cycle-based simulation over the process CFGs.
//!
//! Each cycle drives the inputs, settles the combinational processes,
//! fires every clocked process against the pre-edge state and commits
//! their nonblocking updates together, then settles again.

mod testset;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

pub use testset::{TestSet, TestSetError, TestVector};

use crate::bv;
use crate::cfg::{BlockId, CfgSet, Next};
use crate::frontend::ast::{Expr, ExprKind, LValue, StmtKind};
use crate::frontend::ElaboratedDesign;
use crate::instrument::InstrumentedDesign;
use crate::target::BranchTarget;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    PreEdge,
    Edge,
    PostEdge,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::PreEdge, Phase::Edge, Phase::PostEdge];
}

/// Outcome of one branch evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Decision {
    pub block: BlockId,
    pub outcome: bool,
    pub taken: BlockId,
}

/// One execution of one process.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProcessRun {
    pub cycle: u32,
    pub phase: Phase,
    pub process: usize,
    pub blocks: Vec<BlockId>,
    pub decisions: Vec<Decision>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleRecord {
    pub cycle: u32,
    pub blocks: Vec<BlockId>,
}

/// Register and memory contents.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct SimState {
    pub values: BTreeMap<String, u64>,
    pub memories: BTreeMap<String, Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimulationTrace {
    pub records: Vec<CycleRecord>,
    pub runs: Vec<ProcessRun>,
    /// State after each cycle, index 0 = cycle 1.
    pub states: Vec<SimState>,
    pub final_state: SimState,
    /// (display text, cycle), in execution order without repeats.
    pub activated_markers: Vec<(String, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("combinational loop: no fixpoint within {bound} passes at cycle {cycle}")]
    CombLoop { cycle: u32, bound: usize },
    #[error(transparent)]
    TestSet(#[from] TestSetError),
    #[error("cycle count must be at least 1")]
    NoCycles,
}

impl SimulationTrace {
    pub fn cycles(&self) -> u32 {
        self.records.len() as u32
    }

    /// Cycles (ascending, without repeats) in which `block` executed.
    pub fn block_cycles(&self, block: BlockId) -> Vec<u32> {
        self.records.iter().filter(|r| r.blocks.contains(&block)).map(|r| r.cycle).collect()
    }

    /// First cycle at or after `start` in which `block` executed.
    pub fn first_activation(&self, block: BlockId, start: u32) -> Option<u32> {
        self.block_cycles(block).into_iter().find(|&c| c >= start)
    }

    pub fn marker_cycles(&self, marker: &str) -> Vec<u32> {
        self.activated_markers.iter().filter(|(m, _)| m == marker).map(|(_, c)| *c).collect()
    }

    /// The line-oriented log: `C <cycle>`, `B <label>`, `M <marker> <cycle>`.
    pub fn to_log(&self, cs: &CfgSet) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = writeln!(out, "C {}", r.cycle);
            for b in &r.blocks {
                let _ = writeln!(out, "B {}", cs.label(*b));
            }
            for (m, c) in self.activated_markers.iter().filter(|(_, c)| *c == r.cycle) {
                let _ = writeln!(out, "M {m} {c}");
            }
        }
        out
    }
}

/// Orders combinational processes so that producers run before consumers;
/// processes on a dependency cycle keep their id order at the end.
pub(crate) fn comb_order(cs: &CfgSet) -> Vec<usize> {
    let comb: Vec<usize> = cs.cfgs.iter().filter(|c| !c.clocked).map(|c| c.process).collect();
    let sets = |p: usize, used: bool| -> BTreeSet<&str> {
        cs.cfgs[p]
            .blocks
            .iter()
            .flat_map(|b| {
                let blk = cs.block(*b);
                if used { &blk.used } else { &blk.defined }.iter().map(String::as_str)
            })
            .collect()
    };
    let defs: HashMap<usize, BTreeSet<&str>> = comb.iter().map(|&p| (p, sets(p, false))).collect();
    let uses: HashMap<usize, BTreeSet<&str>> = comb.iter().map(|&p| (p, sets(p, true))).collect();
    let mut indeg: BTreeMap<usize, usize> = comb.iter().map(|&p| (p, 0)).collect();
    let mut succ: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &p in &comb {
        for &q in &comb {
            if p != q && !defs[&p].is_disjoint(&uses[&q]) {
                succ.entry(p).or_default().push(q);
                *indeg.get_mut(&q).unwrap() += 1;
            }
        }
    }
    let mut order = Vec::new();
    let mut ready: BTreeSet<usize> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&p, _)| p).collect();
    while let Some(p) = ready.pop_first() {
        order.push(p);
        for &q in succ.get(&p).map(Vec::as_slice).unwrap_or(&[]) {
            let d = indeg.get_mut(&q).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.insert(q);
            }
        }
    }
    for &p in &comb {
        if !order.contains(&p) {
            order.push(p);
        }
    }
    order
}

/// Fixpoint bound for combinational settling.
pub(crate) fn comb_bound(cs: &CfgSet) -> usize {
    2 * cs.cfgs.iter().filter(|c| !c.clocked).count() + 2
}

#[derive(Clone, PartialEq, Eq)]
struct State {
    vals: Vec<u64>,
    mems: Vec<Vec<u64>>,
}

enum Update {
    Scalar(usize, u64),
    Word(usize, usize, u64),
}

struct Engine<'a> {
    design: &'a ElaboratedDesign,
    cs: &'a CfgSet,
    index: HashMap<&'a str, usize>,
    widths: Vec<u32>,
    index_widths: Vec<u32>,
    comb: Vec<usize>,
    clocked: Vec<usize>,
}

impl<'a> Engine<'a> {
    fn new(design: &'a ElaboratedDesign, cs: &'a CfgSet) -> Self {
        let sigs: Vec<_> = design.signals.iter().collect();
        Engine {
            design,
            cs,
            index: sigs.iter().enumerate().map(|(i, s)| (s.name.as_str(), i)).collect(),
            widths: sigs.iter().map(|s| s.width).collect(),
            index_widths: sigs.iter().map(|s| s.index_width).collect(),
            comb: comb_order(cs),
            clocked: cs.cfgs.iter().filter(|c| c.clocked).map(|c| c.process).collect(),
        }
    }

    fn initial(&self) -> State {
        let sigs: Vec<_> = self.design.signals.iter().collect();
        State {
            vals: vec![0; sigs.len()],
            mems: sigs.iter().map(|s| if s.is_memory() { vec![0; s.depth as usize] } else { vec![] }).collect(),
        }
    }

    fn eval(&self, e: &Expr, st: &State) -> u64 {
        match &e.kind {
            ExprKind::Const { value, .. } => bv::truncate(*value, e.width),
            ExprKind::Ident(n) => st.vals[self.index[n.as_str()]],
            ExprKind::Index { name, index } => {
                let i = self.index[name.as_str()];
                let addr = bv::truncate(self.eval(index, st), self.index_widths[i].max(1)) as usize;
                st.mems[i][addr % st.mems[i].len()]
            }
            ExprKind::Slice { name, lsb, .. } => {
                let v = st.vals[self.index[name.as_str()]];
                let lo = lsb.as_const().unwrap_or(0);
                bv::truncate(v >> lo, e.width)
            }
            ExprKind::Unary(op, a) => bv::eval_unary(*op, self.eval(a, st), a.width),
            ExprKind::Binary(op, a, b) => bv::eval_binary(*op, self.eval(a, st), a.width, self.eval(b, st), b.width)
                .expect("elaboration folds non-runtime operators"),
            ExprKind::Concat(items) => items.iter().fold(0u64, |acc, it| {
                let shifted = if it.width >= 64 { 0 } else { acc << it.width };
                shifted | self.eval(it, st)
            }),
            ExprKind::Ternary(c, t, f) => {
                let v = if self.eval(c, st) != 0 { self.eval(t, st) } else { self.eval(f, st) };
                bv::truncate(v, e.width)
            }
        }
    }

    /// Runs one process. Blocking writes go straight into `st`; nonblocking
    /// writes are collected in `pending` when given.
    fn run(
        &self,
        process: usize,
        st: &mut State,
        mut pending: Option<&mut Vec<Update>>,
        cycle: u32,
        phase: Phase,
    ) -> ProcessRun {
        let cfg = &self.cs.cfgs[process];
        let mut run = ProcessRun { cycle, phase, process, blocks: vec![], decisions: vec![] };
        let mut cur = cfg.entry;
        loop {
            run.blocks.push(cur);
            let blk = self.cs.block(cur);
            for s in &blk.statements {
                let StmtKind::Assign { lhs, rhs, .. } = &s.kind else { continue };
                let i = self.index[lhs.name()];
                let value = bv::truncate(self.eval(rhs, st), self.widths[i]);
                let update = match lhs {
                    LValue::Signal(_) => Update::Scalar(i, value),
                    LValue::Index { index, .. } => {
                        let addr = bv::truncate(self.eval(index, st), self.index_widths[i].max(1)) as usize;
                        Update::Word(i, addr % st.mems[i].len(), value)
                    }
                };
                match pending.as_deref_mut() {
                    Some(p) => p.push(update),
                    None => apply(st, update),
                }
            }
            match &blk.next {
                Next::End => break,
                Next::Jump(t) => cur = *t,
                Next::Branch { cond, then_block, else_block, .. } => {
                    let outcome = self.eval(cond, st) != 0;
                    let taken = if outcome { *then_block } else { *else_block };
                    run.decisions.push(Decision { block: cur, outcome, taken });
                    cur = taken;
                }
            }
        }
        run
    }

    fn settle(&self, st: &mut State, cycle: u32, phase: Phase) -> Result<Vec<ProcessRun>, SimError> {
        if self.comb.is_empty() {
            return Ok(vec![]);
        }
        let bound = comb_bound(self.cs);
        for _ in 0..bound {
            let before = st.clone();
            let runs: Vec<ProcessRun> = self.comb.iter().map(|&p| self.run(p, st, None, cycle, phase)).collect();
            if *st == before {
                return Ok(runs);
            }
        }
        Err(SimError::CombLoop { cycle, bound })
    }

    fn snapshot(&self, st: &State) -> SimState {
        let mut out = SimState::default();
        for (i, s) in self.design.signals.iter().enumerate() {
            if s.is_memory() {
                out.memories.insert(s.name.clone(), st.mems[i].clone());
            } else if s.is_state() {
                out.values.insert(s.name.clone(), st.vals[i]);
            }
        }
        out
    }
}

fn apply(st: &mut State, u: Update) {
    match u {
        Update::Scalar(i, v) => st.vals[i] = v,
        Update::Word(i, a, v) => st.mems[i][a] = v,
    }
}

/// Simulates `n` cycles; cycles beyond the end of `t` drive zeros.
pub fn simulate(d: &InstrumentedDesign, t: &TestSet, n: u32) -> Result<SimulationTrace, SimError> {
    simulate_with(&d.design, &d.cfgs, t, n)
}

pub fn simulate_with(design: &ElaboratedDesign, cs: &CfgSet, t: &TestSet, n: u32) -> Result<SimulationTrace, SimError> {
    if n == 0 {
        return Err(SimError::NoCycles);
    }
    t.validate(design)?;
    let eng = Engine::new(design, cs);
    let mut st = eng.initial();
    let inputs: Vec<(usize, String)> =
        design.data_inputs().iter().map(|s| (eng.index[s.name.as_str()], s.name.clone())).collect();
    let mut trace = SimulationTrace {
        records: vec![],
        runs: vec![],
        states: vec![],
        final_state: SimState::default(),
        activated_markers: vec![],
    };
    for cycle in 1..=n {
        for (i, name) in &inputs {
            st.vals[*i] = t.value(cycle, name);
        }
        let mut runs = eng.settle(&mut st, cycle, Phase::PreEdge)?;
        let mut pending = Vec::new();
        for &p in &eng.clocked {
            runs.push(eng.run(p, &mut st, Some(&mut pending), cycle, Phase::Edge));
        }
        for u in pending {
            apply(&mut st, u);
        }
        runs.extend(eng.settle(&mut st, cycle, Phase::PostEdge)?);

        let blocks: Vec<BlockId> = runs.iter().flat_map(|r| r.blocks.iter().copied()).collect();
        for b in &blocks {
            for text in cs.block(*b).displays() {
                let m = (text.to_string(), cycle);
                if !trace.activated_markers.contains(&m) {
                    trace.activated_markers.push(m);
                }
            }
        }
        trace.records.push(CycleRecord { cycle, blocks });
        trace.runs.extend(runs);
        trace.states.push(eng.snapshot(&st));
    }
    trace.final_state = trace.states.last().cloned().unwrap_or_default();
    Ok(trace)
}

/// True iff the target block executes in some cycle `<= n` when `t` drives
/// the design.
pub fn replay_check(d: &ElaboratedDesign, t: &TestSet, target: &BranchTarget, n: u32) -> Result<bool, SimError> {
    let cs = crate::cfg::build_cfg_set(d);
    let trace = simulate_with(d, &cs, t, n)?;
    Ok(!trace.block_cycles(target.block).is_empty())
}
