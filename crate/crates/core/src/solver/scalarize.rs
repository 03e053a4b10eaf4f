//! Replaces array terms by one word term per address: stores become
//! per-word multiplexers, selects become mux trees over the index bits.

use std::collections::HashMap;

use super::term::{Node, Sort, TermId, TermStore};

/// Widest index accepted; wider memories must go through SMT-LIB export.
pub const MAX_INDEX_WIDTH: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TooWide(pub u32);

enum Scalar {
    Bv(TermId),
    Words(Vec<TermId>),
}

/// Rewrites `roots` (bit-vector terms) into array-free terms in `store`.
pub fn scalarize(store: &mut TermStore, roots: &[TermId]) -> Result<Vec<TermId>, TooWide> {
    let mut memo: HashMap<TermId, Scalar> = HashMap::new();
    for t in store.topo(roots) {
        if let Sort::Array { index, .. } = store.sort(t) {
            if index > MAX_INDEX_WIDTH {
                return Err(TooWide(index));
            }
        }
        let s = rewrite(store, t, &memo);
        memo.insert(t, s);
    }
    Ok(roots
        .iter()
        .map(|r| match &memo[r] {
            Scalar::Bv(t) => *t,
            Scalar::Words(_) => panic!("array-sorted root"),
        })
        .collect())
}

fn rewrite(store: &mut TermStore, t: TermId, memo: &HashMap<TermId, Scalar>) -> Scalar {
    let bvof = |x: TermId| match &memo[&x] {
        Scalar::Bv(v) => *v,
        Scalar::Words(_) => panic!("array operand in bit-vector position"),
    };
    let words = |x: TermId| match &memo[&x] {
        Scalar::Words(w) => w.clone(),
        Scalar::Bv(_) => panic!("bit-vector operand in array position"),
    };
    let node = store.node(t).clone();
    let out = match node {
        Node::Var { .. } | Node::Const { .. } => t,
        Node::ConstArray { index, elem, value } => {
            let c = store.constant(value, elem);
            return Scalar::Words(vec![c; 1usize << index]);
        }
        Node::Not(a) => {
            let a = bvof(a);
            store.not(a)
        }
        Node::Neg(a) => {
            let a = bvof(a);
            store.neg(a)
        }
        Node::And(a, b) => bin(store, bvof(a), bvof(b), TermStore::and),
        Node::Or(a, b) => bin(store, bvof(a), bvof(b), TermStore::or),
        Node::Xor(a, b) => bin(store, bvof(a), bvof(b), TermStore::xor),
        Node::Add(a, b) => bin(store, bvof(a), bvof(b), TermStore::add),
        Node::Sub(a, b) => bin(store, bvof(a), bvof(b), TermStore::sub),
        Node::Shl(a, b) => bin(store, bvof(a), bvof(b), TermStore::shl),
        Node::Lshr(a, b) => bin(store, bvof(a), bvof(b), TermStore::lshr),
        Node::Ult(a, b) => bin(store, bvof(a), bvof(b), TermStore::ult),
        Node::Ule(a, b) => bin(store, bvof(a), bvof(b), TermStore::ule),
        Node::Concat(a, b) => bin(store, bvof(a), bvof(b), TermStore::concat),
        Node::Eq(a, b) => bin(store, bvof(a), bvof(b), TermStore::eq),
        Node::Extract { hi, lo, arg } => {
            let a = bvof(arg);
            store.extract(hi, lo, a)
        }
        Node::ZeroExt { width, arg } => {
            let a = bvof(arg);
            store.zero_ext(width, a)
        }
        Node::Ite(c, x, y) => {
            let c = bvof(c);
            if let Sort::Array { .. } = store.sort(x) {
                let (wx, wy) = (words(x), words(y));
                let w = wx.iter().zip(&wy).map(|(&p, &q)| store.ite(c, p, q)).collect();
                return Scalar::Words(w);
            }
            let (x, y) = (bvof(x), bvof(y));
            store.ite(c, x, y)
        }
        Node::Select(arr, idx) => {
            let w = words(arr);
            let i = bvof(idx);
            mux(store, &w, i)
        }
        Node::Store(arr, idx, val) => {
            let mut w = words(arr);
            let i = bvof(idx);
            let v = bvof(val);
            let iw = store.width(i);
            for (k, word) in w.iter_mut().enumerate() {
                let kc = store.constant(k as u64, iw);
                let hit = store.eq(i, kc);
                *word = store.ite(hit, v, *word);
            }
            return Scalar::Words(w);
        }
    };
    Scalar::Bv(out)
}

fn bin(store: &mut TermStore, a: TermId, b: TermId, f: fn(&mut TermStore, TermId, TermId) -> TermId) -> TermId {
    f(store, a, b)
}

/// Binary mux tree selecting `words[idx]`, one level per index bit.
fn mux(store: &mut TermStore, words: &[TermId], idx: TermId) -> TermId {
    let mut level = words.to_vec();
    let mut bit = 0;
    while level.len() > 1 {
        let sel = store.extract(bit, bit, idx);
        level = level.chunks(2).map(|p| store.ite(sel, p[1], p[0])).collect();
        bit += 1;
    }
    level[0]
}
