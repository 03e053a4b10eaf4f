//! Per-process control-flow graphs with def-use edges between processes,
//! and the graph searches used by instrumentation and the concolic search.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::frontend::ast::{Expr, LValue, Process, Stmt, StmtKind};
use crate::frontend::{ElaboratedDesign, SignalTable};

/// Global block index; ascending order is creation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct BlockId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Entry,
    Then,
    Else,
    Join,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guard {
    pub cond: Expr,
    pub polarity: bool,
}

/// How control leaves a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Next {
    End,
    Jump(BlockId),
    Branch { cond: Expr, then_block: BlockId, else_block: BlockId, line: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub id: BlockId,
    pub label: String,
    pub process: usize,
    pub kind: BlockKind,
    /// Assignments and display markers, in program order.
    pub statements: Vec<Stmt>,
    /// Condition and polarity under which control enters the block.
    pub guard: Option<Guard>,
    pub next: Next,
    pub defined: BTreeSet<String>,
    pub used: BTreeSet<String>,
    /// First and last source line covered by the block.
    pub span: (u32, u32),
}

impl Block {
    pub fn branch_cond(&self) -> Option<&Expr> {
        match &self.next {
            Next::Branch { cond, .. } => Some(cond),
            _ => None,
        }
    }

    pub fn displays(&self) -> impl Iterator<Item = &str> {
        self.statements.iter().filter_map(|s| match &s.kind {
            StmtKind::Display(t) => Some(t.as_str()),
            _ => None,
        })
    }

    pub fn assignments(&self) -> impl Iterator<Item = (&LValue, &Expr)> {
        self.statements.iter().filter_map(|s| match &s.kind {
            StmtKind::Assign { lhs, rhs, .. } => Some((lhs, rhs)),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    True,
    False,
    Unconditional,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    pub process: usize,
    pub clocked: bool,
    pub entry: BlockId,
    /// Blocks of this process in creation order.
    pub blocks: Vec<BlockId>,
    pub edges: Vec<(BlockId, BlockId, EdgeKind)>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct InterEdge {
    pub def: BlockId,
    #[serde(rename = "use")]
    pub use_: BlockId,
    pub signal: String,
}

/// An `if` statement and the blocks it selects between.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchSite {
    pub line: u32,
    pub col: u32,
    pub block: BlockId,
    pub then_block: BlockId,
    pub else_block: BlockId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfgSet {
    pub blocks: Vec<Block>,
    pub cfgs: Vec<Cfg>,
    pub inter_edges: Vec<InterEdge>,
    pub branches: Vec<BranchSite>,
    pub signals: SignalTable,
    preds: Vec<Vec<BlockId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CfgError {
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
    #[error("unknown block {0}")]
    UnknownBlock(String),
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

pub fn build_cfg_set(d: &ElaboratedDesign) -> CfgSet {
    let mut b = Builder { blocks: Vec::new(), branches: Vec::new(), next_b: 1, next_j: 1 };
    let mut cfgs = Vec::new();
    for p in d.processes() {
        cfgs.push(b.process(p));
    }
    let Builder { mut blocks, branches, .. } = b;
    for cfg in &mut cfgs {
        for &(from, to, kind) in &edges_of(&blocks, &cfg.blocks) {
            cfg.edges.push((from, to, kind));
        }
    }
    for block in &mut blocks {
        compute_def_use(block);
    }
    let mut preds = vec![Vec::new(); blocks.len()];
    for cfg in &cfgs {
        for &(from, to, _) in &cfg.edges {
            preds[to.0].push(from);
        }
    }
    for p in &mut preds {
        p.sort();
        p.dedup();
    }
    let mut inter_edges = Vec::new();
    for d_blk in &blocks {
        for u_blk in &blocks {
            if d_blk.process == u_blk.process {
                continue;
            }
            for s in d_blk.defined.intersection(&u_blk.used) {
                inter_edges.push(InterEdge { def: d_blk.id, use_: u_blk.id, signal: s.clone() });
            }
        }
    }
    CfgSet { blocks, cfgs, inter_edges, branches, signals: d.signals.clone(), preds }
}

fn edges_of(blocks: &[Block], ids: &[BlockId]) -> Vec<(BlockId, BlockId, EdgeKind)> {
    let mut out = Vec::new();
    for id in ids {
        match &blocks[id.0].next {
            Next::End => {}
            Next::Jump(t) => out.push((*id, *t, EdgeKind::Unconditional)),
            Next::Branch { then_block, else_block, .. } => {
                out.push((*id, *then_block, EdgeKind::True));
                out.push((*id, *else_block, EdgeKind::False));
            }
        }
    }
    out
}

fn compute_def_use(block: &mut Block) {
    let mut used = BTreeSet::new();
    if let Some(g) = &block.guard {
        used.extend(g.cond.signals());
    }
    if let Next::Branch { cond, .. } = &block.next {
        used.extend(cond.signals());
    }
    for s in &block.statements {
        if let StmtKind::Assign { lhs, rhs, .. } = &s.kind {
            block.defined.insert(lhs.name().to_string());
            used.extend(rhs.signals());
            if let LValue::Index { index, .. } = lhs {
                used.extend(index.signals());
            }
        }
    }
    block.used = used;
}

struct Builder {
    blocks: Vec<Block>,
    branches: Vec<BranchSite>,
    next_b: usize,
    next_j: usize,
}

impl Builder {
    fn new_block(&mut self, process: usize, kind: BlockKind, guard: Option<Guard>, line: u32) -> BlockId {
        let id = BlockId(self.blocks.len());
        let label = match kind {
            BlockKind::Entry => format!("E{}", process + 1),
            BlockKind::Then | BlockKind::Else => {
                self.next_b += 1;
                format!("B{}", self.next_b - 1)
            }
            BlockKind::Join => {
                self.next_j += 1;
                format!("J{}", self.next_j - 1)
            }
        };
        self.blocks.push(Block {
            id,
            label,
            process,
            kind,
            statements: Vec::new(),
            guard,
            next: Next::End,
            defined: BTreeSet::new(),
            used: BTreeSet::new(),
            span: (line, line),
        });
        id
    }

    fn process(&mut self, p: &Process) -> Cfg {
        let first = self.blocks.len();
        let entry = self.new_block(p.id, BlockKind::Entry, None, p.source_span.0);
        self.blocks[entry.0].span = p.source_span;
        self.seq(p.id, std::slice::from_ref(&p.body), vec![entry]);
        let blocks = (first..self.blocks.len()).map(BlockId).collect();
        Cfg { process: p.id, clocked: p.is_clocked(), entry, blocks, edges: Vec::new() }
    }

    /// Appends `stmts` after the open exits and returns the exits left open.
    fn seq(&mut self, pid: usize, stmts: &[Stmt], mut exits: Vec<BlockId>) -> Vec<BlockId> {
        for (i, s) in stmts.iter().enumerate() {
            match &s.kind {
                StmtKind::Block(items) => {
                    let rest = &stmts[i + 1..];
                    exits = self.seq(pid, items, exits);
                    return self.seq(pid, rest, exits);
                }
                StmtKind::Empty => {}
                StmtKind::Assign { .. } | StmtKind::Display(_) => {
                    let cur = self.current(pid, &mut exits, s.span.line);
                    let blk = &mut self.blocks[cur.0];
                    blk.statements.push(s.clone());
                    blk.span.0 = blk.span.0.min(s.span.line);
                    blk.span.1 = blk.span.1.max(s.span.line);
                }
                StmtKind::If { cond, then_branch, else_branch } => {
                    let cur = self.current(pid, &mut exits, s.span.line);
                    let then_b = self.new_block(
                        pid,
                        BlockKind::Then,
                        Some(Guard { cond: cond.clone(), polarity: true }),
                        then_branch.span.line,
                    );
                    let else_line = else_branch.as_ref().map(|e| e.span.line).unwrap_or(s.span.line);
                    let else_b = self.new_block(
                        pid,
                        BlockKind::Else,
                        Some(Guard { cond: cond.clone(), polarity: false }),
                        else_line,
                    );
                    self.blocks[cur.0].next =
                        Next::Branch { cond: cond.clone(), then_block: then_b, else_block: else_b, line: s.span.line };
                    let blk = &mut self.blocks[cur.0];
                    blk.span.1 = blk.span.1.max(s.span.line);
                    self.branches.push(BranchSite {
                        line: s.span.line,
                        col: s.span.col,
                        block: cur,
                        then_block: then_b,
                        else_block: else_b,
                    });
                    self.extend_span(then_b, then_branch);
                    let mut out = self.seq(pid, std::slice::from_ref(then_branch), vec![then_b]);
                    if let Some(e) = else_branch {
                        self.extend_span(else_b, e);
                        out.extend(self.seq(pid, std::slice::from_ref(e), vec![else_b]));
                    } else {
                        out.push(else_b);
                    }
                    exits = out;
                }
            }
        }
        exits
    }

    fn extend_span(&mut self, id: BlockId, body: &Stmt) {
        let mut lo = body.span.line;
        let mut hi = body.span.line;
        body.walk(&mut |s| {
            lo = lo.min(s.span.line);
            hi = hi.max(s.span.line);
        });
        self.blocks[id.0].span = (lo, hi);
    }

    /// The block that receives the next statement: the single open exit,
    /// or a fresh join block when several paths merge.
    fn current(&mut self, pid: usize, exits: &mut Vec<BlockId>, line: u32) -> BlockId {
        if exits.len() == 1 && self.blocks[exits[0].0].next == Next::End {
            return exits[0];
        }
        let join = self.new_block(pid, BlockKind::Join, None, line);
        for e in exits.iter() {
            self.blocks[e.0].next = Next::Jump(join);
        }
        *exits = vec![join];
        join
    }
}

impl CfgSet {
    pub fn block(&self, id: BlockId) -> &Block {
        &self.blocks[id.0]
    }

    pub fn by_label(&self, label: &str) -> Option<BlockId> {
        self.blocks.iter().find(|b| b.label == label).map(|b| b.id)
    }

    pub fn label(&self, id: BlockId) -> &str {
        &self.blocks[id.0].label
    }

    pub fn labels(&self, ids: &[BlockId]) -> Vec<String> {
        ids.iter().map(|&i| self.label(i).to_string()).collect()
    }

    pub fn cfg(&self, process: usize) -> &Cfg {
        &self.cfgs[process]
    }

    pub fn cfg_of(&self, id: BlockId) -> &Cfg {
        &self.cfgs[self.blocks[id.0].process]
    }

    /// Intra-process predecessors in ascending id order.
    pub fn preds(&self, id: BlockId) -> &[BlockId] {
        &self.preds[id.0]
    }

    pub fn successors(&self, id: BlockId) -> Vec<BlockId> {
        match &self.blocks[id.0].next {
            Next::End => vec![],
            Next::Jump(t) => vec![*t],
            Next::Branch { then_block, else_block, .. } => vec![*then_block, *else_block],
        }
    }

    /// The sibling block selected by the opposite outcome of the same branch.
    pub fn sibling(&self, id: BlockId) -> Option<BlockId> {
        self.branches.iter().find_map(|s| {
            if s.then_block == id {
                Some(s.else_block)
            } else if s.else_block == id {
                Some(s.then_block)
            } else {
                None
            }
        })
    }

    pub fn branch_into(&self, id: BlockId) -> Option<&BranchSite> {
        self.branches.iter().find(|s| s.then_block == id || s.else_block == id)
    }

    /// Blocks that assign `sig`, in (process, source) order.
    pub fn find_assignment_blocks(&self, sig: &str) -> Result<Vec<BlockId>, CfgError> {
        if self.signals.get(sig).is_none() {
            return Err(CfgError::UnknownSignal(sig.to_string()));
        }
        let mut out: Vec<&Block> = self.blocks.iter().filter(|b| b.defined.contains(sig)).collect();
        out.sort_by_key(|b| (b.process, b.id));
        Ok(out.into_iter().map(|b| b.id).collect())
    }

    /// Breadth-first walk along reverse intra-edges from `b`. The entry
    /// block is left out unless the walk starts there.
    pub fn intra_bfs(&self, b: BlockId) -> Vec<BlockId> {
        let entry = self.cfg_of(b).entry;
        if b == entry {
            return vec![b];
        }
        let mut seen = vec![false; self.blocks.len()];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([b]);
        seen[b.0] = true;
        while let Some(cur) = queue.pop_front() {
            order.push(cur);
            for &p in self.preds(cur) {
                if !seen[p.0] && p != entry {
                    seen[p.0] = true;
                    queue.push_back(p);
                }
            }
        }
        order
    }

    /// Hop distance to `target` along reverse intra-edges and reverse
    /// inter-edges (use to def), every edge weighing 1.
    pub fn compute_distance(&self, target: BlockId) -> DistanceMap {
        let mut dist = vec![None; self.blocks.len()];
        let mut rev_inter: Vec<Vec<BlockId>> = vec![Vec::new(); self.blocks.len()];
        for e in &self.inter_edges {
            rev_inter[e.use_.0].push(e.def);
        }
        for v in &mut rev_inter {
            v.sort();
            v.dedup();
        }
        dist[target.0] = Some(0);
        let mut queue = VecDeque::from([target]);
        while let Some(cur) = queue.pop_front() {
            let d = dist[cur.0].unwrap() + 1;
            for &p in self.preds(cur).iter().chain(&rev_inter[cur.0]) {
                if dist[p.0].is_none() {
                    dist[p.0] = Some(d);
                    queue.push_back(p);
                }
            }
        }
        DistanceMap { target, dist }
    }

    /// Graphviz rendering: one cluster per process, dashed false-edges,
    /// colored inter-edges.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph cfgs {\n  node [shape=box];\n");
        for cfg in &self.cfgs {
            out.push_str(&format!("  subgraph cluster_{} {{\n    label=\"CFG{}\";\n", cfg.process, cfg.process + 1));
            for &id in &cfg.blocks {
                let b = self.block(id);
                let mut text = b.label.clone();
                if let Some(c) = b.branch_cond() {
                    text.push_str(&format!("\\nif ({})", escape_dot(&crate::frontend::print_expr(c))));
                }
                out.push_str(&format!("    n{} [label=\"{}\"];\n", id.0, text));
            }
            for &(from, to, kind) in &cfg.edges {
                let style = match kind {
                    EdgeKind::True => "solid",
                    EdgeKind::False => "dashed",
                    EdgeKind::Unconditional => "bold",
                };
                out.push_str(&format!("    n{} -> n{} [style={style}];\n", from.0, to.0));
            }
            out.push_str("  }\n");
        }
        for e in &self.inter_edges {
            out.push_str(&format!(
                "  n{} -> n{} [color=red, style=dotted, label=\"{}\"];\n",
                e.def.0, e.use_.0, e.signal
            ));
        }
        out.push_str("}\n");
        out
    }
}

fn escape_dot(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMap {
    pub target: BlockId,
    pub dist: Vec<Option<u32>>,
}

impl DistanceMap {
    pub fn get(&self, id: BlockId) -> Option<u32> {
        self.dist.get(id.0).copied().flatten()
    }
}
