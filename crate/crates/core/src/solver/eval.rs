//! Concrete evaluation of terms under an input assignment. Shares no code
//! with the bit-blaster, so it can serve as its reference.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use super::term::{Node, TermId, TermStore};
use crate::bv;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Bv(u64),
    Array(Rc<ArrayValue>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrayValue {
    pub default: u64,
    pub entries: BTreeMap<u64, u64>,
}

impl ArrayValue {
    fn get(&self, i: u64) -> u64 {
        self.entries.get(&i).copied().unwrap_or(self.default)
    }
}

impl Value {
    pub fn bv(&self) -> u64 {
        match self {
            Value::Bv(v) => *v,
            Value::Array(_) => panic!("array where a bit-vector was expected"),
        }
    }
}

/// Evaluates `roots`; variables missing from `inputs` read as 0.
pub fn evaluate(store: &TermStore, roots: &[TermId], inputs: &dyn Fn(&str, u32) -> Option<u64>) -> Vec<Value> {
    Evaluator::new(store, roots).run(inputs)
}

/// A precomputed evaluation order, reusable across many assignments.
pub struct Evaluator<'a> {
    store: &'a TermStore,
    order: Vec<TermId>,
    slot: HashMap<TermId, usize>,
    roots: Vec<usize>,
}

impl<'a> Evaluator<'a> {
    pub fn new(store: &'a TermStore, roots: &[TermId]) -> Self {
        let order = store.topo(roots);
        let slot: HashMap<TermId, usize> = order.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let roots = roots.iter().map(|r| slot[r]).collect();
        Evaluator { store, order, slot, roots }
    }

    pub fn run(&self, inputs: &dyn Fn(&str, u32) -> Option<u64>) -> Vec<Value> {
        let mut memo: Vec<Value> = Vec::with_capacity(self.order.len());
        for &t in &self.order {
            let v = eval_node(self.store, t, &|x| &memo[self.slot[&x]], inputs);
            memo.push(v);
        }
        self.roots.iter().map(|&i| memo[i].clone()).collect()
    }

    /// True iff every root evaluates to a nonzero bit-vector.
    pub fn all_true(&self, inputs: &dyn Fn(&str, u32) -> Option<u64>) -> bool {
        self.run(inputs).iter().all(|v| v.bv() != 0)
    }
}

fn eval_node<'m>(
    store: &TermStore,
    t: TermId,
    memo: &dyn Fn(TermId) -> &'m Value,
    inputs: &dyn Fn(&str, u32) -> Option<u64>,
) -> Value {
    let w = store.width(t);
    let b = |x: &TermId| memo(*x).bv();
    let wd = |x: &TermId| store.width(*x);
    let bvv = |v: u64| Value::Bv(bv::truncate(v, w));
    match store.node(t) {
        Node::Var { name, cycle, .. } => bvv(inputs(name, *cycle).unwrap_or(0)),
        Node::Const { value, .. } => bvv(*value),
        Node::ConstArray { value, .. } => {
            Value::Array(Rc::new(ArrayValue { default: *value, entries: BTreeMap::new() }))
        }
        Node::Not(a) => bvv(!b(a)),
        Node::Neg(a) => bvv(b(a).wrapping_neg()),
        Node::And(x, y) => bvv(b(x) & b(y)),
        Node::Or(x, y) => bvv(b(x) | b(y)),
        Node::Xor(x, y) => bvv(b(x) ^ b(y)),
        Node::Add(x, y) => bvv(b(x).wrapping_add(b(y))),
        Node::Sub(x, y) => bvv(b(x).wrapping_sub(b(y))),
        Node::Shl(x, y) => bvv(if b(y) >= wd(x) as u64 { 0 } else { b(x) << b(y) }),
        Node::Lshr(x, y) => bvv(if b(y) >= wd(x) as u64 { 0 } else { b(x) >> b(y) }),
        Node::Eq(x, y) => Value::Bv((b(x) == b(y)) as u64),
        Node::Ult(x, y) => Value::Bv((b(x) < b(y)) as u64),
        Node::Ule(x, y) => Value::Bv((b(x) <= b(y)) as u64),
        Node::Concat(hi, lo) => bvv((b(hi) << wd(lo)) | b(lo)),
        Node::Extract { lo, arg, .. } => bvv(b(arg) >> lo),
        Node::ZeroExt { arg, .. } => bvv(b(arg)),
        Node::Ite(c, x, y) => {
            if b(c) != 0 {
                memo(*x).clone()
            } else {
                memo(*y).clone()
            }
        }
        Node::Select(arr, i) => {
            let Value::Array(a) = memo(*arr) else { panic!("select on a bit-vector") };
            Value::Bv(a.get(b(i)))
        }
        Node::Store(arr, i, v) => {
            let Value::Array(a) = memo(*arr) else { panic!("store on a bit-vector") };
            let mut next = (**a).clone();
            next.entries.insert(b(i), b(v));
            Value::Array(Rc::new(next))
        }
    }
}
