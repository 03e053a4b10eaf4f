//! Random constraint vectors for differential testing and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{ConstraintVector, InputSlot, PathPredicate, TermId, TermStore};

pub struct Shape {
    /// Upper bound on total input bits.
    pub max_bits: u32,
    pub max_inputs: usize,
    pub max_predicates: usize,
    pub depth: u32,
    /// Allow memory terms (index width 2 or 3).
    pub arrays: bool,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { max_bits: 20, max_inputs: 5, max_predicates: 4, depth: 3, arrays: true }
    }
}

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    store: TermStore,
    vars: Vec<TermId>,
    arrays: bool,
}

impl<R: Rng> Gen<'_, R> {
    fn leaf(&mut self, w: u32) -> TermId {
        if self.rng.gen_bool(0.3) {
            let v = self.rng.gen::<u64>();
            return self.store.constant(v, w);
        }
        let v = *self.vars.choose(self.rng).unwrap();
        self.store.resize(w, v)
    }

    fn term(&mut self, w: u32, depth: u32) -> TermId {
        if depth == 0 {
            return self.leaf(w);
        }
        let d = depth - 1;
        match self.rng.gen_range(0..14) {
            0 => {
                let a = self.term(w, d);
                self.store.not(a)
            }
            1 => {
                let a = self.term(w, d);
                self.store.neg(a)
            }
            2 => self.bin(w, d, TermStore::and),
            3 => self.bin(w, d, TermStore::or),
            4 => self.bin(w, d, TermStore::xor),
            5 => self.bin(w, d, TermStore::add),
            6 => self.bin(w, d, TermStore::sub),
            7 => self.bin(w, d, TermStore::shl),
            8 => self.bin(w, d, TermStore::lshr),
            9 => {
                let c = self.cond(d);
                let a = self.term(w, d);
                let b = self.term(w, d);
                self.store.ite(c, a, b)
            }
            10 if w >= 2 => {
                let lo_w = self.rng.gen_range(1..w);
                let hi = self.term(w - lo_w, d);
                let lo = self.term(lo_w, d);
                self.store.concat(hi, lo)
            }
            11 => {
                let wide = (w + self.rng.gen_range(0..4)).min(16);
                let lo = self.rng.gen_range(0..=wide - w);
                let a = self.term(wide, d);
                self.store.extract(lo + w - 1, lo, a)
            }
            12 if self.arrays => self.memory_read(w, d),
            _ => self.leaf(w),
        }
    }

    fn bin(&mut self, w: u32, d: u32, f: fn(&mut TermStore, TermId, TermId) -> TermId) -> TermId {
        let a = self.term(w, d);
        let b = self.term(w, d);
        f(&mut self.store, a, b)
    }

    fn memory_read(&mut self, w: u32, d: u32) -> TermId {
        let iw = self.rng.gen_range(2..=3);
        let init = self.rng.gen::<u64>();
        let mut arr = self.store.const_array(iw, w, init);
        for _ in 0..self.rng.gen_range(1..=3) {
            let i = self.term(iw, d);
            let v = self.term(w, d);
            if self.rng.gen_bool(0.3) {
                let c = self.cond(d);
                let stored = self.store.store(arr, i, v);
                arr = self.store.ite(c, stored, arr);
            } else {
                arr = self.store.store(arr, i, v);
            }
        }
        let i = self.term(iw, d);
        self.store.select(arr, i)
    }

    fn cond(&mut self, d: u32) -> TermId {
        let w = self.rng.gen_range(1..=6);
        let a = self.term(w, d);
        let b = self.term(w, d);
        match self.rng.gen_range(0..4) {
            0 => self.store.eq(a, b),
            1 => self.store.ult(a, b),
            2 => self.store.ule(a, b),
            _ => {
                let bit = self.rng.gen_range(0..w);
                self.store.extract(bit, bit, a)
            }
        }
    }
}

pub fn random_cv<R: Rng>(rng: &mut R, shape: &Shape) -> ConstraintVector {
    let mut store = TermStore::new();
    let mut inputs = Vec::new();
    let mut vars = Vec::new();
    let mut budget = shape.max_bits;
    let count = rng.gen_range(1..=shape.max_inputs);
    for k in 0..count {
        if budget == 0 {
            break;
        }
        let width = rng.gen_range(1..=budget.min(8));
        budget -= width;
        let cycle = rng.gen_range(1..=3);
        let name = format!("in{k}");
        vars.push(store.var(&name, cycle, width));
        let hint = rng.gen::<u64>() & crate::bv::mask(width);
        inputs.push(InputSlot { name, cycle, width, hint });
    }
    let mut g = Gen { rng, store, vars, arrays: shape.arrays };
    let n = g.rng.gen_range(1..=shape.max_predicates);
    let mut preds = Vec::new();
    for i in 0..n {
        let depth = g.rng.gen_range(0..=shape.depth);
        let term = g.cond(depth);
        let cycle = g.rng.gen_range(1..=3);
        preds.push(PathPredicate { cycle, term, note: format!("p{i}") });
    }
    let pivot = preds.pop().unwrap();
    ConstraintVector { store: g.store, prefix: preds, pivot, inputs }
}
