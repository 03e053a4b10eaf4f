//! A small CDCL SAT solver: two watched literals, first-UIP learning,
//! VSIDS with lowest-index tie-break, phase saving, no restarts.

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(pub u32);

impl Lit {
    pub fn new(var: u32, negated: bool) -> Lit {
        Lit(var << 1 | negated as u32)
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn negated(self) -> bool {
        self.0 & 1 == 1
    }

    fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn fresh(&mut self) -> Lit {
        let v = self.num_vars;
        self.num_vars += 1;
        Lit::new(v, false)
    }

    pub fn add(&mut self, clause: Vec<Lit>) {
        self.clauses.push(clause);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Vec<bool>),
    Unsat,
    /// The conflict budget ran out.
    Unknown,
}

const UNDEF: i8 = 0;
const TRUE: i8 = 1;
const FALSE: i8 = -1;

struct Clause {
    lits: Vec<Lit>,
}

/// Max-heap on activity; ties broken toward the lower variable index.
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn new(n: usize) -> Self {
        VarHeap { heap: Vec::new(), pos: vec![None; n] }
    }

    fn better(act: &[f64], a: u32, b: u32) -> bool {
        let (x, y) = (act[a as usize], act[b as usize]);
        x > y || (x == y && a < b)
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize].is_some()
    }

    fn insert(&mut self, act: &[f64], v: u32) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        let i = self.heap.len() - 1;
        self.pos[v as usize] = Some(i);
        self.up(act, i);
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap.swap_remove(0);
        self.pos[top as usize] = None;
        if !self.heap.is_empty() {
            self.pos[self.heap[0] as usize] = Some(0);
            self.down(act, 0);
        }
        Some(top)
    }

    fn bumped(&mut self, act: &[f64], v: u32) {
        if let Some(i) = self.pos[v as usize] {
            self.up(act, i);
        }
    }

    fn up(&mut self, act: &[f64], mut i: usize) {
        while i > 0 {
            let p = (i - 1) / 2;
            if Self::better(act, self.heap[i], self.heap[p]) {
                self.swap(i, p);
                i = p;
            } else {
                break;
            }
        }
    }

    fn down(&mut self, act: &[f64], mut i: usize) {
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut best = i;
            if l < self.heap.len() && Self::better(act, self.heap[l], self.heap[best]) {
                best = l;
            }
            if r < self.heap.len() && Self::better(act, self.heap[r], self.heap[best]) {
                best = r;
            }
            if best == i {
                break;
            }
            self.swap(i, best);
            i = best;
        }
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.pos[self.heap[i] as usize] = Some(i);
        self.pos[self.heap[j] as usize] = Some(j);
    }
}

pub struct Solver {
    clauses: Vec<Clause>,
    watches: Vec<Vec<usize>>,
    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    phase: Vec<bool>,
    heap: VarHeap,
    seen: Vec<bool>,
    unsat: bool,
    pub conflicts: u64,
}

impl Solver {
    /// `hints[v]` is the preferred first polarity of variable `v`.
    pub fn new(cnf: &Cnf, hints: &[bool]) -> Solver {
        let n = cnf.num_vars as usize;
        let mut s = Solver {
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            assigns: vec![UNDEF; n],
            level: vec![0; n],
            reason: vec![None; n],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n],
            var_inc: 1.0,
            phase: (0..n).map(|v| hints.get(v).copied().unwrap_or(false)).collect(),
            heap: VarHeap::new(n),
            seen: vec![false; n],
            unsat: false,
            conflicts: 0,
        };
        for v in 0..n as u32 {
            s.heap.insert(&s.activity, v);
        }
        for c in &cnf.clauses {
            s.add_clause(c);
        }
        s
    }

    fn value(&self, l: Lit) -> i8 {
        let a = self.assigns[l.var() as usize];
        if l.negated() {
            -a
        } else {
            a
        }
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        if self.unsat {
            return;
        }
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort();
        c.dedup();
        if c.windows(2).any(|w| w[0] == !w[1]) {
            return;
        }
        c.retain(|&l| self.value(l) != FALSE);
        if c.iter().any(|&l| self.value(l) == TRUE) {
            return;
        }
        match c.len() {
            0 => self.unsat = true,
            1 => {
                self.enqueue(c[0], None);
                if self.propagate().is_some() {
                    self.unsat = true;
                }
            }
            _ => {
                let ci = self.clauses.len();
                self.watches[c[0].index()].push(ci);
                self.watches[c[1].index()].push(ci);
                self.clauses.push(Clause { lits: c });
            }
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = l.var() as usize;
        self.assigns[v] = if l.negated() { FALSE } else { TRUE };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Returns the index of a conflicting clause, if any.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let ws = std::mem::take(&mut self.watches[false_lit.index()]);
            let mut keep = Vec::with_capacity(ws.len());
            let mut conflict = None;
            let mut i = 0;
            while i < ws.len() {
                let ci = ws[i];
                i += 1;
                let lits = &mut self.clauses[ci].lits;
                if lits[0] == false_lit {
                    lits.swap(0, 1);
                }
                let first = lits[0];
                if self.value(first) == TRUE {
                    keep.push(ci);
                    continue;
                }
                let lits = &self.clauses[ci].lits;
                let mut moved = false;
                for k in 2..lits.len() {
                    if self.value(lits[k]) != FALSE {
                        let lits = &mut self.clauses[ci].lits;
                        lits.swap(1, k);
                        let w = lits[1];
                        self.watches[w.index()].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                keep.push(ci);
                if self.value(first) == FALSE {
                    conflict = Some(ci);
                    keep.extend_from_slice(&ws[i..]);
                    break;
                }
                self.enqueue(first, Some(ci));
            }
            self.watches[false_lit.index()] = keep;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: u32) {
        self.activity[v as usize] += self.var_inc;
        if self.activity[v as usize] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(&self.activity, v);
    }

    fn analyze(&mut self, confl: usize) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit(0)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut clause = confl;
        let mut idx = self.trail.len();
        let current = self.decision_level();
        loop {
            let lits = self.clauses[clause].lits.clone();
            for q in lits {
                if Some(q) == p {
                    continue;
                }
                let v = q.var() as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(q.var());
                    if self.level[v] == current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var() as usize] {
                    break;
                }
            }
            let lit = self.trail[idx];
            self.seen[lit.var() as usize] = false;
            path -= 1;
            p = Some(lit);
            if path == 0 {
                break;
            }
            clause = self.reason[lit.var() as usize].expect("implied literal has a reason");
        }
        learnt[0] = !p.unwrap();
        for l in &learnt[1..] {
            self.seen[l.var() as usize] = false;
        }
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut best = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var() as usize] > self.level[learnt[best].var() as usize] {
                    best = i;
                }
            }
            learnt.swap(1, best);
            bt = self.level[learnt[1].var() as usize];
        }
        (learnt, bt)
    }

    fn backtrack(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var() as usize;
            self.phase[v] = !l.negated();
            self.assigns[v] = UNDEF;
            self.reason[v] = None;
            self.heap.insert(&self.activity, l.var());
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    fn pick(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v as usize] == UNDEF {
                return Some(Lit::new(v, !self.phase[v as usize]));
            }
        }
        None
    }

    /// Runs until SAT, UNSAT or `max_conflicts` conflicts.
    pub fn solve(&mut self, max_conflicts: u64) -> SatResult {
        if self.unsat {
            return SatResult::Unsat;
        }
        if self.propagate().is_some() {
            return SatResult::Unsat;
        }
        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                if self.decision_level() == 0 {
                    return SatResult::Unsat;
                }
                if self.conflicts > max_conflicts {
                    return SatResult::Unknown;
                }
                let (learnt, bt) = self.analyze(confl);
                self.backtrack(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let ci = self.clauses.len();
                    self.watches[learnt[0].index()].push(ci);
                    self.watches[learnt[1].index()].push(ci);
                    let first = learnt[0];
                    self.clauses.push(Clause { lits: learnt });
                    self.enqueue(first, Some(ci));
                }
                self.var_inc /= 0.95;
            } else {
                match self.pick() {
                    None => {
                        let model = self.assigns.iter().map(|&a| a == TRUE).collect();
                        return SatResult::Sat(model);
                    }
                    Some(l) => {
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(l, None);
                    }
                }
            }
        }
    }
}

/// Convenience wrapper.
pub fn solve_cnf(cnf: &Cnf, hints: &[bool], max_conflicts: u64) -> SatResult {
    Solver::new(cnf, hints).solve(max_conflicts)
}
