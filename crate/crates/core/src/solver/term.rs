//! Hash-consed bit-vector and array terms with local simplification.

use std::collections::HashMap;

use crate::bv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sort {
    Bv(u32),
    Array { index: u32, elem: u32 },
}

impl Sort {
    pub fn width(self) -> u32 {
        match self {
            Sort::Bv(w) => w,
            Sort::Array { elem, .. } => elem,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    /// Input `name` sampled at `cycle`.
    Var {
        name: String,
        cycle: u32,
        width: u32,
    },
    Const {
        value: u64,
        width: u32,
    },
    ConstArray {
        index: u32,
        elem: u32,
        value: u64,
    },
    Not(TermId),
    Neg(TermId),
    And(TermId, TermId),
    Or(TermId, TermId),
    Xor(TermId, TermId),
    Add(TermId, TermId),
    Sub(TermId, TermId),
    Shl(TermId, TermId),
    Lshr(TermId, TermId),
    Eq(TermId, TermId),
    Ult(TermId, TermId),
    Ule(TermId, TermId),
    /// High part first.
    Concat(TermId, TermId),
    Extract {
        hi: u32,
        lo: u32,
        arg: TermId,
    },
    ZeroExt {
        width: u32,
        arg: TermId,
    },
    Ite(TermId, TermId, TermId),
    Select(TermId, TermId),
    Store(TermId, TermId, TermId),
}

impl Node {
    pub fn children(&self) -> Vec<TermId> {
        use Node::*;
        match *self {
            Var { .. } | Const { .. } | ConstArray { .. } => vec![],
            Not(a) | Neg(a) | Extract { arg: a, .. } | ZeroExt { arg: a, .. } => vec![a],
            And(a, b)
            | Or(a, b)
            | Xor(a, b)
            | Add(a, b)
            | Sub(a, b)
            | Shl(a, b)
            | Lshr(a, b)
            | Eq(a, b)
            | Ult(a, b)
            | Ule(a, b)
            | Concat(a, b)
            | Select(a, b) => vec![a, b],
            Ite(a, b, c) | Store(a, b, c) => vec![a, b, c],
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct TermStore {
    nodes: Vec<Node>,
    sorts: Vec<Sort>,
    map: HashMap<Node, TermId>,
}

impl TermStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, t: TermId) -> &Node {
        &self.nodes[t.0 as usize]
    }

    pub fn sort(&self, t: TermId) -> Sort {
        self.sorts[t.0 as usize]
    }

    pub fn width(&self, t: TermId) -> u32 {
        self.sort(t).width()
    }

    pub fn as_const(&self, t: TermId) -> Option<u64> {
        match self.node(t) {
            Node::Const { value, .. } => Some(*value),
            _ => None,
        }
    }

    fn intern(&mut self, node: Node, sort: Sort) -> TermId {
        if let Some(&id) = self.map.get(&node) {
            return id;
        }
        let id = TermId(self.nodes.len() as u32);
        self.nodes.push(node.clone());
        self.sorts.push(sort);
        self.map.insert(node, id);
        id
    }

    pub fn var(&mut self, name: &str, cycle: u32, width: u32) -> TermId {
        self.intern(Node::Var { name: name.to_string(), cycle, width }, Sort::Bv(width))
    }

    pub fn constant(&mut self, value: u64, width: u32) -> TermId {
        let value = bv::truncate(value, width);
        self.intern(Node::Const { value, width }, Sort::Bv(width))
    }

    pub fn tru(&mut self) -> TermId {
        self.constant(1, 1)
    }

    pub fn fls(&mut self) -> TermId {
        self.constant(0, 1)
    }

    pub fn const_array(&mut self, index: u32, elem: u32, value: u64) -> TermId {
        let value = bv::truncate(value, elem);
        self.intern(Node::ConstArray { index, elem, value }, Sort::Array { index, elem })
    }

    pub fn not(&mut self, a: TermId) -> TermId {
        let w = self.width(a);
        if let Some(v) = self.as_const(a) {
            return self.constant(!v, w);
        }
        if let Node::Not(x) = *self.node(a) {
            return x;
        }
        self.intern(Node::Not(a), Sort::Bv(w))
    }

    pub fn neg(&mut self, a: TermId) -> TermId {
        let w = self.width(a);
        if let Some(v) = self.as_const(a) {
            return self.constant(v.wrapping_neg(), w);
        }
        self.intern(Node::Neg(a), Sort::Bv(w))
    }

    fn ordered(a: TermId, b: TermId) -> (TermId, TermId) {
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn and(&mut self, a: TermId, b: TermId) -> TermId {
        let w = self.same_width(a, b);
        let (a, b) = Self::ordered(a, b);
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => return self.constant(x & y, w),
            (Some(0), _) | (_, Some(0)) => return self.constant(0, w),
            (Some(x), _) if x == bv::mask(w) => return b,
            (_, Some(y)) if y == bv::mask(w) => return a,
            _ => {}
        }
        if a == b {
            return a;
        }
        self.intern(Node::And(a, b), Sort::Bv(w))
    }

    pub fn or(&mut self, a: TermId, b: TermId) -> TermId {
        let w = self.same_width(a, b);
        let (a, b) = Self::ordered(a, b);
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => return self.constant(x | y, w),
            (Some(0), _) => return b,
            (_, Some(0)) => return a,
            (Some(x), _) | (_, Some(x)) if x == bv::mask(w) => return self.constant(x, w),
            _ => {}
        }
        if a == b {
            return a;
        }
        self.intern(Node::Or(a, b), Sort::Bv(w))
    }

    pub fn xor(&mut self, a: TermId, b: TermId) -> TermId {
        let w = self.same_width(a, b);
        let (a, b) = Self::ordered(a, b);
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => return self.constant(x ^ y, w),
            (Some(0), _) => return b,
            (_, Some(0)) => return a,
            _ => {}
        }
        if a == b {
            return self.constant(0, w);
        }
        self.intern(Node::Xor(a, b), Sort::Bv(w))
    }

    pub fn add(&mut self, a: TermId, b: TermId) -> TermId {
        let w = self.same_width(a, b);
        let (a, b) = Self::ordered(a, b);
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => return self.constant(x.wrapping_add(y), w),
            (Some(0), _) => return b,
            (_, Some(0)) => return a,
            _ => {}
        }
        self.intern(Node::Add(a, b), Sort::Bv(w))
    }

    pub fn sub(&mut self, a: TermId, b: TermId) -> TermId {
        let w = self.same_width(a, b);
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => return self.constant(x.wrapping_sub(y), w),
            (_, Some(0)) => return a,
            _ => {}
        }
        if a == b {
            return self.constant(0, w);
        }
        self.intern(Node::Sub(a, b), Sort::Bv(w))
    }

    pub fn shl(&mut self, a: TermId, b: TermId) -> TermId {
        let w = self.same_width(a, b);
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => {
                let v = if y >= w as u64 { 0 } else { x << y };
                return self.constant(v, w);
            }
            (_, Some(0)) => return a,
            (Some(0), _) => return a,
            _ => {}
        }
        self.intern(Node::Shl(a, b), Sort::Bv(w))
    }

    pub fn lshr(&mut self, a: TermId, b: TermId) -> TermId {
        let w = self.same_width(a, b);
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => {
                let v = if y >= w as u64 { 0 } else { x >> y };
                return self.constant(v, w);
            }
            (_, Some(0)) => return a,
            (Some(0), _) => return a,
            _ => {}
        }
        self.intern(Node::Lshr(a, b), Sort::Bv(w))
    }

    pub fn eq(&mut self, a: TermId, b: TermId) -> TermId {
        let w = self.same_width(a, b);
        let (a, b) = Self::ordered(a, b);
        if a == b {
            return self.tru();
        }
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => return self.constant((x == y) as u64, 1),
            (Some(c), _) if w == 1 => return if c == 1 { b } else { self.not(b) },
            (_, Some(c)) if w == 1 => return if c == 1 { a } else { self.not(a) },
            _ => {}
        }
        self.intern(Node::Eq(a, b), Sort::Bv(1))
    }

    pub fn ult(&mut self, a: TermId, b: TermId) -> TermId {
        self.same_width(a, b);
        if a == b {
            return self.fls();
        }
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => return self.constant((x < y) as u64, 1),
            (_, Some(0)) => return self.fls(),
            _ => {}
        }
        self.intern(Node::Ult(a, b), Sort::Bv(1))
    }

    pub fn ule(&mut self, a: TermId, b: TermId) -> TermId {
        let w = self.same_width(a, b);
        if a == b {
            return self.tru();
        }
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => return self.constant((x <= y) as u64, 1),
            (Some(0), _) => return self.tru(),
            (_, Some(y)) if y == bv::mask(w) => return self.tru(),
            _ => {}
        }
        self.intern(Node::Ule(a, b), Sort::Bv(1))
    }

    pub fn concat(&mut self, hi: TermId, lo: TermId) -> TermId {
        let wh = self.width(hi);
        let wl = self.width(lo);
        let w = wh + wl;
        assert!(w <= bv::MAX_WIDTH, "concatenation wider than 64 bits");
        if let (Some(x), Some(y)) = (self.as_const(hi), self.as_const(lo)) {
            return self.constant((x << wl) | y, w);
        }
        self.intern(Node::Concat(hi, lo), Sort::Bv(w))
    }

    pub fn extract(&mut self, hi: u32, lo: u32, arg: TermId) -> TermId {
        let wa = self.width(arg);
        assert!(lo <= hi && hi < wa, "extract [{hi}:{lo}] out of range for width {wa}");
        if lo == 0 && hi + 1 == wa {
            return arg;
        }
        let w = hi - lo + 1;
        if let Some(v) = self.as_const(arg) {
            return self.constant(v >> lo, w);
        }
        match *self.node(arg) {
            Node::ZeroExt { arg: inner, .. } => {
                let wi = self.width(inner);
                if hi < wi {
                    return self.extract(hi, lo, inner);
                }
                if lo >= wi {
                    return self.constant(0, w);
                }
            }
            Node::Extract { lo: lo2, arg: inner, .. } => return self.extract(hi + lo2, lo + lo2, inner),
            _ => {}
        }
        self.intern(Node::Extract { hi, lo, arg }, Sort::Bv(w))
    }

    pub fn zero_ext(&mut self, width: u32, arg: TermId) -> TermId {
        let wa = self.width(arg);
        assert!(width >= wa);
        if width == wa {
            return arg;
        }
        if let Some(v) = self.as_const(arg) {
            return self.constant(v, width);
        }
        self.intern(Node::ZeroExt { width, arg }, Sort::Bv(width))
    }

    /// Resizes by zero-extension or truncation.
    pub fn resize(&mut self, width: u32, arg: TermId) -> TermId {
        let wa = self.width(arg);
        if width >= wa {
            self.zero_ext(width, arg)
        } else {
            self.extract(width - 1, 0, arg)
        }
    }

    pub fn ite(&mut self, c: TermId, t: TermId, e: TermId) -> TermId {
        assert_eq!(self.width(c), 1, "ite condition must be 1 bit");
        assert_eq!(self.sort(t), self.sort(e), "ite branches must share a sort");
        if let Some(v) = self.as_const(c) {
            return if v != 0 { t } else { e };
        }
        if t == e {
            return t;
        }
        if let Node::Not(inner) = *self.node(c) {
            return self.ite(inner, e, t);
        }
        if self.sort(t) == Sort::Bv(1) {
            match (self.as_const(t), self.as_const(e)) {
                (Some(1), Some(0)) => return c,
                (Some(0), Some(1)) => return self.not(c),
                _ => {}
            }
        }
        let sort = self.sort(t);
        self.intern(Node::Ite(c, t, e), sort)
    }

    pub fn select(&mut self, arr: TermId, idx: TermId) -> TermId {
        let Sort::Array { index, elem } = self.sort(arr) else { panic!("select on a bit-vector") };
        assert_eq!(self.width(idx), index, "select index width");
        match *self.node(arr) {
            Node::ConstArray { value, .. } => return self.constant(value, elem),
            Node::Store(inner, i, v) => {
                if i == idx {
                    return v;
                }
                if let (Some(a), Some(b)) = (self.as_const(i), self.as_const(idx)) {
                    if a != b {
                        return self.select(inner, idx);
                    }
                }
            }
            Node::Ite(c, x, y) => {
                let sx = self.select(x, idx);
                let sy = self.select(y, idx);
                return self.ite(c, sx, sy);
            }
            _ => {}
        }
        self.intern(Node::Select(arr, idx), Sort::Bv(elem))
    }

    pub fn store(&mut self, arr: TermId, idx: TermId, val: TermId) -> TermId {
        let sort = self.sort(arr);
        let Sort::Array { index, elem } = sort else { panic!("store on a bit-vector") };
        assert_eq!(self.width(idx), index, "store index width");
        assert_eq!(self.width(val), elem, "store value width");
        if let Node::Store(inner, i, _) = *self.node(arr) {
            if i == idx {
                return self.store(inner, idx, val);
            }
        }
        self.intern(Node::Store(arr, idx, val), sort)
    }

    fn same_width(&self, a: TermId, b: TermId) -> u32 {
        let (wa, wb) = (self.sort(a), self.sort(b));
        assert_eq!(wa, wb, "operand sorts differ");
        wa.width()
    }

    /// Rebuilds the terms reachable from `roots` in a fresh store.
    pub fn extract_roots(&self, roots: &[TermId]) -> (TermStore, Vec<TermId>) {
        let mut out = TermStore::new();
        let mut map: HashMap<TermId, TermId> = HashMap::new();
        let order = self.topo(roots);
        for t in order {
            let n = self.node(t).clone();
            let m = |x: TermId| map[&x];
            let nt = match n {
                Node::Var { name, cycle, width } => out.var(&name, cycle, width),
                Node::Const { value, width } => out.constant(value, width),
                Node::ConstArray { index, elem, value } => out.const_array(index, elem, value),
                Node::Not(a) => out.not(m(a)),
                Node::Neg(a) => out.neg(m(a)),
                Node::And(a, b) => out.and(m(a), m(b)),
                Node::Or(a, b) => out.or(m(a), m(b)),
                Node::Xor(a, b) => out.xor(m(a), m(b)),
                Node::Add(a, b) => out.add(m(a), m(b)),
                Node::Sub(a, b) => out.sub(m(a), m(b)),
                Node::Shl(a, b) => out.shl(m(a), m(b)),
                Node::Lshr(a, b) => out.lshr(m(a), m(b)),
                Node::Eq(a, b) => out.eq(m(a), m(b)),
                Node::Ult(a, b) => out.ult(m(a), m(b)),
                Node::Ule(a, b) => out.ule(m(a), m(b)),
                Node::Concat(a, b) => out.concat(m(a), m(b)),
                Node::Extract { hi, lo, arg } => out.extract(hi, lo, m(arg)),
                Node::ZeroExt { width, arg } => out.zero_ext(width, m(arg)),
                Node::Ite(a, b, c) => out.ite(m(a), m(b), m(c)),
                Node::Select(a, b) => out.select(m(a), m(b)),
                Node::Store(a, b, c) => out.store(m(a), m(b), m(c)),
            };
            map.insert(t, nt);
        }
        let roots = roots.iter().map(|r| map[r]).collect();
        (out, roots)
    }

    /// Terms reachable from `roots`, children before parents.
    pub fn topo(&self, roots: &[TermId]) -> Vec<TermId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut out = Vec::new();
        let mut stack: Vec<(TermId, bool)> = roots.iter().rev().map(|&r| (r, false)).collect();
        while let Some((t, expanded)) = stack.pop() {
            if expanded {
                out.push(t);
                continue;
            }
            if seen[t.0 as usize] {
                continue;
            }
            seen[t.0 as usize] = true;
            stack.push((t, true));
            for c in self.node(t).children().into_iter().rev() {
                if !seen[c.0 as usize] {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    /// Input variables reachable from `roots`, in first-visit order.
    pub fn vars(&self, roots: &[TermId]) -> Vec<TermId> {
        self.topo(roots).into_iter().filter(|&t| matches!(self.node(t), Node::Var { .. })).collect()
    }

    pub fn has_arrays(&self, roots: &[TermId]) -> bool {
        self.topo(roots).into_iter().any(|t| matches!(self.sort(t), Sort::Array { .. }))
    }
}
