//! Tseitin encoding of array-free terms into CNF.

use std::collections::{BTreeMap, HashMap};

use super::sat::{Cnf, Lit};
use super::term::{Node, Sort, TermId, TermStore};

#[derive(Hash, PartialEq, Eq)]
enum Gate {
    And(Lit, Lit),
    Xor(Lit, Lit),
    Mux(Lit, Lit, Lit),
}

pub struct BitBlaster {
    pub cnf: Cnf,
    tru: Lit,
    bits: HashMap<TermId, Vec<Lit>>,
    gates: HashMap<Gate, Lit>,
    /// Bits of each input variable, LSB first.
    pub inputs: BTreeMap<(String, u32), Vec<Lit>>,
}

impl Default for BitBlaster {
    fn default() -> Self {
        Self::new()
    }
}

impl BitBlaster {
    pub fn new() -> Self {
        let mut cnf = Cnf::default();
        let tru = cnf.fresh();
        cnf.add(vec![tru]);
        BitBlaster { cnf, tru, bits: HashMap::new(), gates: HashMap::new(), inputs: BTreeMap::new() }
    }

    fn fls(&self) -> Lit {
        !self.tru
    }

    fn konst(&self, b: bool) -> Lit {
        if b {
            self.tru
        } else {
            self.fls()
        }
    }

    fn and2(&mut self, a: Lit, b: Lit) -> Lit {
        let f = self.fls();
        if a == f || b == f || a == !b {
            return f;
        }
        if a == self.tru || a == b {
            return b;
        }
        if b == self.tru {
            return a;
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        if let Some(&g) = self.gates.get(&Gate::And(a, b)) {
            return g;
        }
        let g = self.cnf.fresh();
        self.cnf.add(vec![!g, a]);
        self.cnf.add(vec![!g, b]);
        self.cnf.add(vec![g, !a, !b]);
        self.gates.insert(Gate::And(a, b), g);
        g
    }

    fn or2(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and2(!a, !b)
    }

    fn xor2(&mut self, a: Lit, b: Lit) -> Lit {
        let f = self.fls();
        if a == f {
            return b;
        }
        if b == f {
            return a;
        }
        if a == self.tru {
            return !b;
        }
        if b == self.tru {
            return !a;
        }
        if a == b {
            return f;
        }
        if a == !b {
            return self.tru;
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        if let Some(&g) = self.gates.get(&Gate::Xor(a, b)) {
            return g;
        }
        let g = self.cnf.fresh();
        self.cnf.add(vec![!g, a, b]);
        self.cnf.add(vec![!g, !a, !b]);
        self.cnf.add(vec![g, !a, b]);
        self.cnf.add(vec![g, a, !b]);
        self.gates.insert(Gate::Xor(a, b), g);
        g
    }

    fn mux(&mut self, s: Lit, t: Lit, e: Lit) -> Lit {
        if s == self.tru || t == e {
            return t;
        }
        if s == self.fls() {
            return e;
        }
        if t == self.tru && e == self.fls() {
            return s;
        }
        if t == self.fls() && e == self.tru {
            return !s;
        }
        if let Some(&g) = self.gates.get(&Gate::Mux(s, t, e)) {
            return g;
        }
        let g = self.cnf.fresh();
        self.cnf.add(vec![!s, !t, g]);
        self.cnf.add(vec![!s, t, !g]);
        self.cnf.add(vec![s, !e, g]);
        self.cnf.add(vec![s, e, !g]);
        self.gates.insert(Gate::Mux(s, t, e), g);
        g
    }

    fn maj(&mut self, a: Lit, b: Lit, c: Lit) -> Lit {
        let ab = self.and2(a, b);
        let x = self.xor2(a, b);
        let xc = self.and2(x, c);
        self.or2(ab, xc)
    }

    fn adder(&mut self, a: &[Lit], b: &[Lit], carry_in: Lit) -> Vec<Lit> {
        let mut c = carry_in;
        let mut out = Vec::with_capacity(a.len());
        for i in 0..a.len() {
            let x = self.xor2(a[i], b[i]);
            out.push(self.xor2(x, c));
            c = self.maj(a[i], b[i], c);
        }
        out
    }

    fn equal(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let mut acc = self.tru;
        for i in 0..a.len() {
            let d = self.xor2(a[i], b[i]);
            acc = self.and2(acc, !d);
        }
        acc
    }

    fn less_than(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let mut lt = self.fls();
        for i in 0..a.len() {
            let here = self.and2(!a[i], b[i]);
            let same = self.xor2(a[i], b[i]);
            let carry = self.and2(!same, lt);
            lt = self.or2(here, carry);
        }
        lt
    }

    fn shift(&mut self, a: &[Lit], amount: &[Lit], left: bool) -> Vec<Lit> {
        let w = a.len();
        let mut cur = a.to_vec();
        for (k, &s) in amount.iter().enumerate() {
            let dist = 1usize.checked_shl(k as u32).unwrap_or(usize::MAX);
            if dist >= w {
                cur = cur.iter().map(|&x| self.and2(!s, x)).collect();
                continue;
            }
            let mut next = Vec::with_capacity(w);
            for i in 0..w {
                let moved = if left {
                    if i >= dist {
                        cur[i - dist]
                    } else {
                        self.fls()
                    }
                } else if i + dist < w {
                    cur[i + dist]
                } else {
                    self.fls()
                };
                next.push(self.mux(s, moved, cur[i]));
            }
            cur = next;
        }
        cur
    }

    /// Encodes `t` and returns its bits, LSB first.
    pub fn blast(&mut self, store: &TermStore, t: TermId) -> Vec<Lit> {
        for u in store.topo(&[t]) {
            if self.bits.contains_key(&u) {
                continue;
            }
            let bits = self.encode(store, u);
            self.bits.insert(u, bits);
        }
        self.bits[&t].clone()
    }

    fn encode(&mut self, store: &TermStore, t: TermId) -> Vec<Lit> {
        assert!(matches!(store.sort(t), Sort::Bv(_)), "array terms must be scalarized before bit-blasting");
        let w = store.width(t) as usize;
        let g = |s: &Self, x: &TermId| s.bits[x].clone();
        match store.node(t) {
            Node::Var { name, cycle, .. } => {
                let bits: Vec<Lit> = (0..w).map(|_| self.cnf.fresh()).collect();
                self.inputs.insert((name.clone(), *cycle), bits.clone());
                bits
            }
            Node::Const { value, .. } => (0..w).map(|i| self.konst(value >> i & 1 == 1)).collect(),
            Node::Not(a) => g(self, a).into_iter().map(|l| !l).collect(),
            Node::Neg(a) => {
                let inv: Vec<Lit> = g(self, a).into_iter().map(|l| !l).collect();
                let zero = vec![self.fls(); w];
                self.adder(&inv, &zero, self.tru)
            }
            Node::And(a, b) => {
                let (x, y) = (g(self, a), g(self, b));
                (0..w).map(|i| self.and2(x[i], y[i])).collect()
            }
            Node::Or(a, b) => {
                let (x, y) = (g(self, a), g(self, b));
                (0..w).map(|i| self.or2(x[i], y[i])).collect()
            }
            Node::Xor(a, b) => {
                let (x, y) = (g(self, a), g(self, b));
                (0..w).map(|i| self.xor2(x[i], y[i])).collect()
            }
            Node::Add(a, b) => {
                let (x, y) = (g(self, a), g(self, b));
                self.adder(&x, &y, self.fls())
            }
            Node::Sub(a, b) => {
                let x = g(self, a);
                let y: Vec<Lit> = g(self, b).into_iter().map(|l| !l).collect();
                self.adder(&x, &y, self.tru)
            }
            Node::Shl(a, b) => {
                let (x, y) = (g(self, a), g(self, b));
                self.shift(&x, &y, true)
            }
            Node::Lshr(a, b) => {
                let (x, y) = (g(self, a), g(self, b));
                self.shift(&x, &y, false)
            }
            Node::Eq(a, b) => {
                let (x, y) = (g(self, a), g(self, b));
                vec![self.equal(&x, &y)]
            }
            Node::Ult(a, b) => {
                let (x, y) = (g(self, a), g(self, b));
                vec![self.less_than(&x, &y)]
            }
            Node::Ule(a, b) => {
                let (x, y) = (g(self, a), g(self, b));
                vec![!self.less_than(&y, &x)]
            }
            Node::Concat(hi, lo) => {
                let mut bits = g(self, lo);
                bits.extend(g(self, hi));
                bits
            }
            Node::Extract { hi, lo, arg } => g(self, arg)[*lo as usize..=*hi as usize].to_vec(),
            Node::ZeroExt { arg, .. } => {
                let mut bits = g(self, arg);
                bits.resize(w, self.fls());
                bits
            }
            Node::Ite(c, x, y) => {
                let s = g(self, c)[0];
                let (x, y) = (g(self, x), g(self, y));
                (0..w).map(|i| self.mux(s, x[i], y[i])).collect()
            }
            Node::ConstArray { .. } | Node::Select(..) | Node::Store(..) => {
                unreachable!("array terms must be scalarized before bit-blasting")
            }
        }
    }

    /// Asserts a 1-bit term.
    pub fn assert_true(&mut self, store: &TermStore, t: TermId) {
        let b = self.blast(store, t);
        self.cnf.add(vec![b[0]]);
    }

    /// Reads an input's value out of a SAT model.
    pub fn input_value(&self, name: &str, cycle: u32, model: &[bool]) -> Option<u64> {
        let bits = self.inputs.get(&(name.to_string(), cycle))?;
        Some(bits.iter().enumerate().fold(0u64, |acc, (i, l)| {
            let b = model[l.var() as usize] ^ l.negated();
            acc | (b as u64) << i
        }))
    }
}
