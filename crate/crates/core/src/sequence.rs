//! Sequence identification: which assignment events must happen, and in
//! which order, before a branch target can fire.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::cfg::{BlockId, CfgSet};
use crate::frontend::ast::{Expr, LValue};
use crate::target::BranchTarget;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignalExpression {
    /// Signal leaves in first-occurrence order.
    pub signals: Vec<String>,
    /// Literal leaves as (value, width).
    pub constants: Vec<(u64, u32)>,
    #[serde(skip)]
    pub origin: Option<Expr>,
}

/// Leaves of the condition guarding the target block. A target without a
/// guard (an entry or join block) yields an empty expression.
pub fn get_signal_expression(cs: &CfgSet, t: &BranchTarget) -> SignalExpression {
    match &cs.block(t.block).guard {
        Some(g) => {
            SignalExpression { signals: g.cond.signals(), constants: g.cond.constants(), origin: Some(g.cond.clone()) }
        }
        None => SignalExpression { signals: vec![], constants: vec![], origin: None },
    }
}

/// One sequence event: the blocks that assign `signal`. Usually a single
/// block; several when the signal is assigned in more than one place.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SequenceEvent {
    pub signal: String,
    pub blocks: Vec<BlockId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SequenceStack {
    /// Events in temporal order, deepest dependency first.
    pub events: Vec<SequenceEvent>,
    pub visited: BTreeSet<String>,
}

impl SequenceStack {
    /// Every block of every event, in event order.
    pub fn blocks(&self) -> Vec<BlockId> {
        self.events.iter().flat_map(|e| e.blocks.iter().copied()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Alternative block orders when an event has several assignment
    /// blocks: queue `j` takes the `j`-th block of each event (the last one
    /// when the event has fewer).
    pub fn queues(&self) -> Vec<Vec<BlockId>> {
        let k = self.events.iter().map(|e| e.blocks.len()).max().unwrap_or(0);
        let mut out: Vec<Vec<BlockId>> = Vec::new();
        for j in 0..k.max(1) {
            let mut q = Vec::new();
            for e in &self.events {
                let b = e.blocks[j.min(e.blocks.len() - 1)];
                if !q.contains(&b) {
                    q.push(b);
                }
            }
            if !out.contains(&q) {
                out.push(q);
            }
        }
        out
    }

    /// `S = <B3, B8>`
    pub fn render(&self, cs: &CfgSet) -> String {
        format!("S = <{}>", cs.labels(&self.blocks()).join(", "))
    }
}

/// Recursive def-use search from the guard's signals back to primary
/// inputs. Each visited signal's assignment blocks are pushed before the
/// blocks they depend on, so reading the stack from the top gives the
/// order in which the events have to happen.
pub fn dependency_search(cs: &CfgSet, se: &SignalExpression) -> SequenceStack {
    let mut stack: Vec<SequenceEvent> = Vec::new();
    let mut pushed: BTreeSet<BlockId> = BTreeSet::new();
    let mut visited = BTreeSet::new();
    for s in &se.signals {
        search(cs, s, &mut visited, &mut stack, &mut pushed);
    }
    stack.reverse();
    SequenceStack { events: stack, visited }
}

fn search(
    cs: &CfgSet,
    sig: &str,
    visited: &mut BTreeSet<String>,
    stack: &mut Vec<SequenceEvent>,
    pushed: &mut BTreeSet<BlockId>,
) {
    if !visited.insert(sig.to_string()) {
        return;
    }
    match cs.signals.get(sig) {
        Some(info) if !info.is_input() => {}
        _ => return,
    }
    let Ok(blocks) = cs.find_assignment_blocks(sig) else { return };
    let fresh: Vec<BlockId> = blocks.iter().copied().filter(|b| !pushed.contains(b)).collect();
    if !fresh.is_empty() {
        pushed.extend(fresh.iter().copied());
        stack.push(SequenceEvent { signal: sig.to_string(), blocks: fresh });
    }
    let mut next = Vec::new();
    for b in &blocks {
        for (lhs, rhs) in cs.block(*b).assignments() {
            if lhs.name() != sig {
                continue;
            }
            if let LValue::Index { index, .. } = lhs {
                push_unique(&mut next, index.signals());
            }
            push_unique(&mut next, rhs.signals());
        }
    }
    for s in next {
        search(cs, &s, visited, stack, pushed);
    }
}

fn push_unique(out: &mut Vec<String>, items: Vec<String>) {
    for s in items {
        if !out.contains(&s) {
            out.push(s);
        }
    }
}
