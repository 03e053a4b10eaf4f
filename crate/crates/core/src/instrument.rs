//! Turning sequence events into synthetic branch targets and adding them
//! to the design as an observation-only checker process.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::bv;
use crate::cfg::{build_cfg_set, BlockId, CfgSet, Guard};
use crate::frontend::ast::{BinaryOp, Expr, ExprKind, LValue, Process, ProcessKind, Span, Stmt, StmtKind, UnaryOp};
use crate::frontend::{print_expr, ElaboratedDesign};

/// `signal == value` with the value at the signal's width.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Constraint {
    pub signal: String,
    pub value: u64,
    pub width: u32,
}

/// A guard that cannot be reduced to `signal == literal`, kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub cond: Expr,
    pub polarity: bool,
}

impl Predicate {
    fn as_expr(&self) -> Expr {
        if self.polarity {
            self.cond.clone()
        } else {
            Expr::with_width(ExprKind::Unary(UnaryOp::LogicalNot, Box::new(self.cond.clone())), 1)
        }
    }
}

impl Serialize for Predicate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&print_expr(&self.as_expr()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintSet {
    pub owner: BlockId,
    pub resolved: Vec<Constraint>,
    pub predicates: Vec<Predicate>,
    pub unresolved: Vec<String>,
}

impl ConstraintSet {
    pub fn get(&self, signal: &str) -> Option<&Constraint> {
        self.resolved.iter().find(|c| c.signal == signal)
    }

    /// `r_en=1, w_en=0, addr=UR`
    pub fn render(&self) -> String {
        let mut parts: Vec<String> =
            self.resolved.iter().map(|c| format!("{}={}", c.signal, bv::to_hex(c.value))).collect();
        parts.extend(self.predicates.iter().map(|p| print_expr(&p.as_expr())));
        parts.extend(self.unresolved.iter().map(|s| format!("{s}=UR")));
        parts.join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstrumentError {
    #[error("unconstrained sequence event {0}: no constraint survived resolution")]
    Unconstrained(String),
}

/// Constraints along the guards that dominate `b` on its reverse BFS path,
/// plus the signals touched by the assignments in `b` as unresolved.
pub fn extract_constraints(cs: &CfgSet, b: BlockId) -> ConstraintSet {
    let path = cs.intra_bfs(b);
    let mut guards: Vec<Guard> = Vec::new();
    for &x in path.iter().rev() {
        if !dominates(cs, x, b) {
            continue;
        }
        if let Some(g) = &cs.block(x).guard {
            guards.push(g.clone());
        }
    }
    let mut set = ConstraintSet { owner: b, resolved: vec![], predicates: vec![], unresolved: vec![] };
    for g in &guards {
        split_guard(cs, &g.cond, g.polarity, &mut set);
    }
    for (lhs, rhs) in cs.block(b).assignments() {
        add_unresolved(&mut set, lhs.name());
        if let LValue::Index { index, .. } = lhs {
            for s in index.signals() {
                add_unresolved(&mut set, &s);
            }
        }
        for s in rhs.signals() {
            add_unresolved(&mut set, &s);
        }
    }
    let resolved: BTreeSet<&str> = set.resolved.iter().map(|c| c.signal.as_str()).collect();
    set.unresolved.retain(|s| !resolved.contains(s.as_str()));
    set
}

fn add_unresolved(set: &mut ConstraintSet, s: &str) {
    if !set.unresolved.iter().any(|u| u == s) {
        set.unresolved.push(s.to_string());
    }
}

fn add_resolved(set: &mut ConstraintSet, c: Constraint) {
    if !set.resolved.contains(&c) {
        set.resolved.push(c);
    }
}

/// True when every path from the entry to `b` passes through `x`.
fn dominates(cs: &CfgSet, x: BlockId, b: BlockId) -> bool {
    if x == b {
        return true;
    }
    let entry = cs.cfg_of(b).entry;
    if x == entry {
        return true;
    }
    let mut seen = BTreeSet::from([entry]);
    let mut stack = vec![entry];
    while let Some(cur) = stack.pop() {
        if cur == b {
            return false;
        }
        for s in cs.successors(cur) {
            if s != x && seen.insert(s) {
                stack.push(s);
            }
        }
    }
    true
}

fn split_guard(cs: &CfgSet, cond: &Expr, polarity: bool, set: &mut ConstraintSet) {
    match &cond.kind {
        ExprKind::Binary(BinaryOp::LogicalAnd, a, b) if polarity => {
            split_guard(cs, a, true, set);
            split_guard(cs, b, true, set);
        }
        ExprKind::Binary(BinaryOp::LogicalOr, a, b) if !polarity => {
            split_guard(cs, a, false, set);
            split_guard(cs, b, false, set);
        }
        ExprKind::Unary(UnaryOp::LogicalNot, a) => split_guard(cs, a, !polarity, set),
        ExprKind::Binary(op @ (BinaryOp::Eq | BinaryOp::Ne), a, b) => {
            let equal = (*op == BinaryOp::Eq) == polarity;
            match (&a.kind, &b.kind) {
                (ExprKind::Ident(s), ExprKind::Const { value, .. })
                | (ExprKind::Const { value, .. }, ExprKind::Ident(s))
                    if equal =>
                {
                    match literal_for(cs, s, *value) {
                        Some(c) => add_resolved(set, c),
                        None => set.predicates.push(Predicate { cond: cond.clone(), polarity }),
                    }
                }
                (ExprKind::Ident(x), ExprKind::Ident(y)) if equal => {
                    add_unresolved(set, x);
                    add_unresolved(set, y);
                }
                _ => set.predicates.push(Predicate { cond: cond.clone(), polarity }),
            }
        }
        ExprKind::Ident(s) => {
            let width = cs.signals.get(s).map(|i| i.width).unwrap_or(cond.width);
            if width == 1 || !polarity {
                add_resolved(set, Constraint { signal: s.clone(), value: polarity as u64, width });
            } else {
                set.predicates.push(Predicate { cond: cond.clone(), polarity });
            }
        }
        _ => set.predicates.push(Predicate { cond: cond.clone(), polarity }),
    }
}

/// The literal at the signal's width, or `None` if the value cannot fit.
fn literal_for(cs: &CfgSet, signal: &str, value: u64) -> Option<Constraint> {
    let info = cs.signals.get(signal)?;
    if info.is_memory() || !bv::fits(value, info.width) {
        return None;
    }
    Some(Constraint { signal: signal.to_string(), value, width: info.width })
}

/// Resolves the unresolved signals of `sc` against the target constraints:
/// directly when the signal itself is constrained by `tc`, otherwise by
/// following its value forward through assignments until a constrained
/// signal is reached. Whatever stays unresolved is dropped.
pub fn modify(tc: &ConstraintSet, sc: &ConstraintSet, cs: &CfgSet) -> ConstraintSet {
    let mut out = ConstraintSet {
        owner: sc.owner,
        resolved: sc.resolved.clone(),
        predicates: sc.predicates.clone(),
        unresolved: vec![],
    };
    let mut adopted: Vec<Constraint> = Vec::new();
    for u in &sc.unresolved {
        let Some(info) = cs.signals.get(u) else { continue };
        if info.is_memory() || out.get(u).is_some() {
            continue;
        }
        let source = match tc.get(u) {
            Some(c) => Some(c.value),
            None => forward_search(cs, u, tc),
        };
        if let Some(v) = source {
            if let Some(c) = literal_for(cs, u, v) {
                adopted.push(c);
            }
        }
    }
    adopted.sort_by_key(|c| cs.signals.position(&c.signal));
    for c in adopted {
        add_resolved(&mut out, c);
    }
    out
}

/// Depth-first walk from `sig` to the signals its value flows into; the
/// first one constrained by `tc` supplies the value.
fn forward_search(cs: &CfgSet, sig: &str, tc: &ConstraintSet) -> Option<u64> {
    let mut flows: HashMap<&str, Vec<&str>> = HashMap::new();
    for block in &cs.blocks {
        for (lhs, rhs) in block.assignments() {
            let mut srcs = rhs.signals();
            if let LValue::Index { index, .. } = lhs {
                srcs.extend(index.signals());
            }
            for s in srcs {
                if let Some(name) = cs.signals.get(&s).map(|i| i.name.as_str()) {
                    let e = flows.entry(name).or_default();
                    if !e.contains(&lhs.name()) {
                        e.push(lhs.name());
                    }
                }
            }
        }
    }
    let mut visited = BTreeSet::from([sig]);
    let mut stack: Vec<&str> = flows.get(sig).map(|v| v.iter().rev().copied().collect()).unwrap_or_default();
    while let Some(cur) = stack.pop() {
        if !visited.insert(cur) {
            continue;
        }
        if let Some(c) = tc.get(cur) {
            return Some(c.value);
        }
        if let Some(next) = flows.get(cur) {
            stack.extend(next.iter().rev().copied());
        }
    }
    None
}

/// A checker branch before it is placed in the design.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticBranch {
    pub marker: String,
    pub constraints: ConstraintSet,
    pub cond: Expr,
    pub origin: BlockId,
}

/// `if (c1 && c2 && ...) $display(marker)` over the resolved constraints.
pub fn create_branch(sc: &ConstraintSet, marker: &str, cs: &CfgSet) -> Result<SyntheticBranch, InstrumentError> {
    let mut terms: Vec<Expr> = sc
        .resolved
        .iter()
        .map(|c| {
            let w = cs.signals.get(&c.signal).map(|i| i.width).unwrap_or(c.width);
            Expr::binary(BinaryOp::Eq, Expr::signal(&c.signal, w), Expr::literal(c.value, c.width))
        })
        .collect();
    terms.extend(sc.predicates.iter().map(Predicate::as_expr));
    let mut it = terms.into_iter();
    let Some(first) = it.next() else {
        return Err(InstrumentError::Unconstrained(cs.label(sc.owner).to_string()));
    };
    let cond = it.fold(first, |acc, t| Expr::binary(BinaryOp::LogicalAnd, acc, t));
    Ok(SyntheticBranch { marker: marker.to_string(), constraints: sc.clone(), cond, origin: sc.owner })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SyntheticTarget {
    pub branch_block: BlockId,
    pub label: String,
    pub marker: String,
    pub constraints: ConstraintSet,
    pub origin_sequence_block: BlockId,
    pub origin_label: String,
    #[serde(skip)]
    pub cond: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct TargetQueue {
    pub entries: Vec<SyntheticTarget>,
}

#[derive(Debug, Clone)]
pub struct InstrumentedDesign {
    pub design: ElaboratedDesign,
    pub cfgs: CfgSet,
    pub queue: TargetQueue,
    /// Display marker per block; the block label when the block has no
    /// unique display text.
    pub marker_table: BTreeMap<BlockId, String>,
    /// Processes taken over unchanged from the original design.
    pub original_processes: usize,
}

impl InstrumentedDesign {
    pub fn checker_process(&self) -> Option<usize> {
        (self.design.ast.processes.len() > self.original_processes).then_some(self.original_processes)
    }
}

/// Picks marker names that do not collide with display text already in
/// the design: `Target<k>`, suffixed when taken.
pub fn marker_names(d: &ElaboratedDesign, count: usize) -> Vec<String> {
    let mut taken = BTreeSet::new();
    for p in d.processes() {
        p.body.walk(&mut |s| {
            if let StmtKind::Display(t) = &s.kind {
                taken.insert(t.clone());
            }
        });
    }
    (1..=count)
        .map(|k| {
            let base = format!("Target{k}");
            let mut name = base.clone();
            let mut n = 1;
            while taken.contains(&name) {
                name = format!("{base}_{n}");
                n += 1;
            }
            taken.insert(name.clone());
            name
        })
        .collect()
}

/// Appends one combinational checker process holding the synthetic
/// branches. The checker only reads design signals.
pub fn instrument_design(d: &ElaboratedDesign, branches: &[SyntheticBranch]) -> InstrumentedDesign {
    let cs_orig = build_cfg_set(d);
    let mut design = d.clone();
    let original_processes = design.ast.processes.len();
    if !branches.is_empty() {
        let items = branches
            .iter()
            .map(|b| {
                let display = Stmt::new(StmtKind::Display(b.marker.clone()), Span::default());
                Stmt::new(
                    StmtKind::If {
                        cond: b.cond.clone(),
                        then_branch: Box::new(Stmt::new(StmtKind::Block(vec![display]), Span::default())),
                        else_branch: None,
                    },
                    Span::default(),
                )
            })
            .collect();
        design.ast.processes.push(Process {
            id: original_processes,
            kind: ProcessKind::Combinational,
            body: Stmt::new(StmtKind::Block(items), Span::default()),
            source_span: (0, 0),
        });
    }
    let cfgs = build_cfg_set(&design);
    let sites: Vec<_> = cfgs.branches.iter().filter(|s| cfgs.block(s.block).process == original_processes).collect();
    let entries = branches
        .iter()
        .zip(sites)
        .map(|(b, site)| SyntheticTarget {
            branch_block: site.then_block,
            label: cfgs.label(site.then_block).to_string(),
            marker: b.marker.clone(),
            constraints: b.constraints.clone(),
            origin_sequence_block: b.origin,
            origin_label: cs_orig.label(b.origin).to_string(),
            cond: b.cond.clone(),
        })
        .collect();
    let marker_table = marker_table(&cfgs);
    InstrumentedDesign { design, cfgs, queue: TargetQueue { entries }, marker_table, original_processes }
}

pub fn marker_table(cs: &CfgSet) -> BTreeMap<BlockId, String> {
    let mut count: HashMap<&str, usize> = HashMap::new();
    for b in &cs.blocks {
        for t in b.displays() {
            *count.entry(t).or_default() += 1;
        }
    }
    cs.blocks
        .iter()
        .map(|b| {
            let text = b.displays().find(|t| count[t] == 1 && cs.by_label(t).is_none());
            (b.id, text.map(str::to_string).unwrap_or_else(|| b.label.clone()))
        })
        .collect()
}

/// The uninstrumented design viewed through the same interface.
pub fn plain_design(d: &ElaboratedDesign) -> InstrumentedDesign {
    instrument_design(d, &[])
}
