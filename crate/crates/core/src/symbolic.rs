//! Symbolic unrolling of the design's transition relation.
//!
//! Mirrors the simulator phase by phase, but over terms: inputs at cycles
//! from `start` on are variables, earlier inputs are pinned to the test's
//! values. Every process is executed over its whole CFG with environments
//! merged at joins, so state terms describe all paths. The branch
//! condition of each block is recorded per (cycle, phase, process).

use std::collections::{BTreeMap, HashMap};

use crate::cfg::{BlockId, CfgSet, Next};
use crate::frontend::ast::{BinaryOp, Expr, ExprKind, LValue, StmtKind, UnaryOp};
use crate::frontend::ElaboratedDesign;
use crate::sim::{comb_bound, comb_order, Phase, TestSet};
use crate::solver::{InputSlot, TermId, TermStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteKey {
    pub cycle: u32,
    pub phase: Phase,
    pub block: BlockId,
}

/// Term for one signal or one memory.
#[derive(Clone, PartialEq, Eq)]
struct Env(Vec<TermId>);

pub struct Unrolling {
    pub store: TermStore,
    pub start: u32,
    pub cycles: u32,
    /// 1-bit term "condition is nonzero" for each branching block execution.
    pub conditions: HashMap<SiteKey, TermId>,
    /// Free inputs, in (cycle, declaration) order.
    pub inputs: Vec<InputSlot>,
}

impl Unrolling {
    pub fn condition(&self, cycle: u32, phase: Phase, block: BlockId) -> Option<TermId> {
        self.conditions.get(&SiteKey { cycle, phase, block }).copied()
    }

    /// Free inputs at cycles up to and including `cycle`.
    pub fn inputs_through(&self, cycle: u32) -> Vec<InputSlot> {
        self.inputs.iter().filter(|s| s.cycle <= cycle).cloned().collect()
    }
}

struct Unroller<'a> {
    design: &'a ElaboratedDesign,
    cs: &'a CfgSet,
    index: HashMap<&'a str, usize>,
    store: TermStore,
    conditions: HashMap<SiteKey, TermId>,
    /// Blocks of each process in topological order.
    topo: Vec<Vec<BlockId>>,
}

/// Unrolls `cycles` cycles. Inputs before `start` take their values in `t`;
/// inputs from `start` on are variables hinted with `t`'s values.
pub fn unroll(design: &ElaboratedDesign, cs: &CfgSet, t: &TestSet, start: u32, cycles: u32) -> Unrolling {
    let sigs: Vec<_> = design.signals.iter().collect();
    let mut u = Unroller {
        design,
        cs,
        index: sigs.iter().enumerate().map(|(i, s)| (s.name.as_str(), i)).collect(),
        store: TermStore::new(),
        conditions: HashMap::new(),
        topo: cs.cfgs.iter().map(|c| topo_blocks(cs, c.entry)).collect(),
    };
    let mut env = Env(sigs
        .iter()
        .map(|s| {
            if s.is_memory() {
                u.store.const_array(array_index_width(s.index_width), s.width, 0)
            } else {
                u.store.constant(0, s.width)
            }
        })
        .collect());
    let comb = comb_order(cs);
    let clocked: Vec<usize> = cs.cfgs.iter().filter(|c| c.clocked).map(|c| c.process).collect();
    let bound = comb_bound(cs);
    let mut inputs = Vec::new();
    for cycle in 1..=cycles {
        for s in design.data_inputs() {
            let i = u.index[s.name.as_str()];
            let value = t.value(cycle, &s.name);
            env.0[i] = if cycle < start {
                u.store.constant(value, s.width)
            } else {
                inputs.push(InputSlot { name: s.name.clone(), cycle, width: s.width, hint: value });
                u.store.var(&s.name, cycle, s.width)
            };
        }
        env = u.settle(&comb, env, cycle, Phase::PreEdge, bound);
        let mut next = env.clone();
        for &p in &clocked {
            let written = u.exec(p, &env, true, cycle, Phase::Edge);
            for b in &u.cs.cfgs[p].blocks {
                for sig in &u.cs.block(*b).defined {
                    let i = u.index[sig.as_str()];
                    next.0[i] = written.0[i];
                }
            }
        }
        env = u.settle(&comb, next, cycle, Phase::PostEdge, bound);
    }
    Unrolling { store: u.store, start, cycles, conditions: u.conditions, inputs }
}

fn array_index_width(iw: u32) -> u32 {
    iw.max(1)
}

/// Blocks reachable from `entry`, every block after all its predecessors.
fn topo_blocks(cs: &CfgSet, entry: BlockId) -> Vec<BlockId> {
    let mut post = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![(entry, false)];
    while let Some((b, done)) = stack.pop() {
        if done {
            post.push(b);
            continue;
        }
        if !seen.insert(b) {
            continue;
        }
        stack.push((b, true));
        for s in cs.successors(b).into_iter().rev() {
            if !seen.contains(&s) {
                stack.push((s, false));
            }
        }
    }
    post.reverse();
    post
}

impl Unroller<'_> {
    fn settle(&mut self, comb: &[usize], mut env: Env, cycle: u32, phase: Phase, bound: usize) -> Env {
        for _ in 0..bound {
            let before = env.clone();
            for &p in comb {
                env = self.exec(p, &env, false, cycle, phase);
            }
            if env == before {
                break;
            }
        }
        env
    }

    /// Executes process `p` over all paths. Clocked processes read `env`
    /// and return it with their nonblocking writes applied.
    fn exec(&mut self, p: usize, env: &Env, clocked: bool, cycle: u32, phase: Phase) -> Env {
        let blocks = self.topo[p].clone();
        let entry = blocks[0];
        // (reach condition, env) flowing into each block.
        let mut incoming: BTreeMap<BlockId, Vec<(TermId, Env)>> = BTreeMap::new();
        let tru = self.store.tru();
        incoming.insert(entry, vec![(tru, env.clone())]);
        let mut ends: Vec<(TermId, Env)> = Vec::new();
        for b in blocks {
            let Some(ins) = incoming.remove(&b) else { continue };
            let (reach, mut cur) = self.merge(ins);
            let blk = self.cs.block(b);
            for s in &blk.statements {
                let StmtKind::Assign { lhs, rhs, .. } = &s.kind else { continue };
                let read = if clocked { env } else { &cur };
                let i = self.index[lhs.name()];
                let info = self.sig(i);
                let width = info.width;
                let value = self.expr(rhs, read);
                let value = self.store.resize(width, value);
                match lhs {
                    LValue::Signal(_) => cur.0[i] = value,
                    LValue::Index { index, .. } => {
                        let addr = self.address(i, index, read);
                        cur.0[i] = self.store.store(cur.0[i], addr, value);
                    }
                }
            }
            match &blk.next {
                Next::End => ends.push((reach, cur)),
                Next::Jump(n) => incoming.entry(*n).or_default().push((reach, cur)),
                Next::Branch { cond, then_block, else_block, .. } => {
                    let read = if clocked { env } else { &cur };
                    let c = self.expr(cond, read);
                    let c = self.nonzero(c);
                    self.conditions.insert(SiteKey { cycle, phase, block: b }, c);
                    let nc = self.store.not(c);
                    let rt = self.store.and(reach, c);
                    let re = self.store.and(reach, nc);
                    incoming.entry(*then_block).or_default().push((rt, cur.clone()));
                    incoming.entry(*else_block).or_default().push((re, cur));
                }
            }
        }
        self.merge(ends).1
    }

    /// Joins environments under mutually exclusive reach conditions.
    fn merge(&mut self, mut ins: Vec<(TermId, Env)>) -> (TermId, Env) {
        let (mut reach, mut acc) = ins.pop().expect("block reached");
        for (r, e) in ins.into_iter().rev() {
            for (a, &x) in acc.0.iter_mut().zip(&e.0) {
                if *a != x {
                    *a = self.store.ite(r, x, *a);
                }
            }
            reach = self.store.or(reach, r);
        }
        (reach, acc)
    }

    fn sig(&self, i: usize) -> &crate::frontend::SignalInfo {
        self.design.signals.iter().nth(i).expect("signal index")
    }

    fn address(&mut self, mem: usize, index: &Expr, env: &Env) -> TermId {
        let info = self.sig(mem);
        let (depth, iw) = (info.depth, info.index_width);
        let aw = array_index_width(iw);
        if depth <= 1 {
            return self.store.constant(0, aw);
        }
        let a = self.expr(index, env);
        self.store.resize(aw, a)
    }

    fn nonzero(&mut self, t: TermId) -> TermId {
        let w = self.store.width(t);
        if w == 1 {
            return t;
        }
        let z = self.store.constant(0, w);
        let e = self.store.eq(t, z);
        self.store.not(e)
    }

    fn expr(&mut self, e: &Expr, env: &Env) -> TermId {
        match &e.kind {
            ExprKind::Const { value, .. } => self.store.constant(*value, e.width),
            ExprKind::Ident(n) => env.0[self.index[n.as_str()]],
            ExprKind::Index { name, index } => {
                let i = self.index[name.as_str()];
                let addr = self.address(i, index, env);
                self.store.select(env.0[i], addr)
            }
            ExprKind::Slice { name, lsb, .. } => {
                let v = env.0[self.index[name.as_str()]];
                let s = &mut self.store;
                let lo = lsb.as_const().unwrap_or(0) as u32;
                let hi = lo + e.width - 1;
                let v = if hi >= s.width(v) { s.zero_ext(hi + 1, v) } else { v };
                s.extract(hi, lo, v)
            }
            ExprKind::Unary(op, a) => {
                let x = self.expr(a, env);
                let s = &mut self.store;
                match op {
                    UnaryOp::Not => s.not(x),
                    UnaryOp::Neg => s.neg(x),
                    UnaryOp::LogicalNot => {
                        let z = s.constant(0, s.width(x));
                        s.eq(x, z)
                    }
                }
            }
            ExprKind::Binary(op, a, b) => {
                let x = self.expr(a, env);
                let y = self.expr(b, env);
                self.binary(*op, x, y)
            }
            ExprKind::Concat(items) => {
                let parts: Vec<TermId> = items.iter().map(|it| self.expr(it, env)).collect();
                let s = &mut self.store;
                let mut acc = parts[0];
                for &p in &parts[1..] {
                    acc = s.concat(acc, p);
                }
                s.resize(e.width, acc)
            }
            ExprKind::Ternary(c, t, f) => {
                let c = self.expr(c, env);
                let c = self.nonzero(c);
                let x = self.expr(t, env);
                let y = self.expr(f, env);
                let s = &mut self.store;
                let x = s.resize(e.width, x);
                let y = s.resize(e.width, y);
                s.ite(c, x, y)
            }
        }
    }

    fn binary(&mut self, op: BinaryOp, x: TermId, y: TermId) -> TermId {
        use BinaryOp::*;
        let (wx, wy) = (self.store.width(x), self.store.width(y));
        if matches!(op, Shl | Shr) {
            return self.shift(op == Shl, x, y);
        }
        if matches!(op, LogicalAnd | LogicalOr) {
            let a = self.nonzero(x);
            let b = self.nonzero(y);
            return if op == LogicalAnd { self.store.and(a, b) } else { self.store.or(a, b) };
        }
        let w = wx.max(wy);
        let s = &mut self.store;
        let a = s.zero_ext(w, x);
        let b = s.zero_ext(w, y);
        match op {
            Eq => s.eq(a, b),
            Ne => {
                let e = s.eq(a, b);
                s.not(e)
            }
            Lt => s.ult(a, b),
            Le => s.ule(a, b),
            Gt => s.ult(b, a),
            Ge => s.ule(b, a),
            And => s.and(a, b),
            Or => s.or(a, b),
            Xor => s.xor(a, b),
            Add => s.add(a, b),
            Sub => s.sub(a, b),
            Mul | Div | Mod | Pow => panic!("elaboration folds `{}`", op.symbol()),
            Shl | Shr | LogicalAnd | LogicalOr => unreachable!(),
        }
    }

    /// Shift keeping the left operand's width; amounts past it give zero.
    fn shift(&mut self, left: bool, x: TermId, y: TermId) -> TermId {
        let s = &mut self.store;
        let (wx, wy) = (s.width(x), s.width(y));
        let apply = |s: &mut TermStore, a: TermId, b: TermId| if left { s.shl(a, b) } else { s.lshr(a, b) };
        if wy <= wx {
            let b = s.zero_ext(wx, y);
            return apply(s, x, b);
        }
        let limit = s.constant(wx as u64, wy);
        let in_range = s.ult(y, limit);
        let b = s.extract(wx - 1, 0, y);
        let shifted = apply(s, x, b);
        let zero = s.constant(0, wx);
        s.ite(in_range, shifted, zero)
    }
}

/// Evaluates an unrolling's recorded state against concrete simulation;
/// used by tests to compare the two engines.
pub fn concrete_value(u: &Unrolling, term: TermId, t: &TestSet) -> u64 {
    let lookup = |n: &str, c: u32| Some(t.value(c, n));
    crate::solver::eval::evaluate(&u.store, &[term], &lookup)[0].bv()
}
