//! Bit-vector constraint solving over cycle-indexed input variables.

pub mod bitblast;
pub mod eval;
pub mod external;
pub mod random;
pub mod sat;
pub mod scalarize;
pub mod smtlib;
pub mod term;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

pub use term::{Node, Sort, TermId, TermStore};

use bitblast::BitBlaster;
use sat::SatResult;
use smtlib::Response;

/// Default conflict budget for one internal solve.
pub const DEFAULT_MAX_CONFLICTS: u64 = 200_000;

/// A free input of the vector together with the value it had in the
/// concrete run, used as the decision phase and as the model fallback.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputSlot {
    pub name: String,
    pub cycle: u32,
    pub width: u32,
    pub hint: u64,
}

/// A 1-bit term that must evaluate to 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathPredicate {
    pub cycle: u32,
    #[serde(skip)]
    pub term: TermId,
    /// Human-readable origin, e.g. `B4@2/pre` or `!B12@3/post`.
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct ConstraintVector {
    pub store: TermStore,
    /// Concrete-path predicates, in execution order.
    pub prefix: Vec<PathPredicate>,
    /// The flipped guard.
    pub pivot: PathPredicate,
    pub inputs: Vec<InputSlot>,
}

impl ConstraintVector {
    pub fn pivot_cycle(&self) -> u32 {
        self.pivot.cycle
    }

    /// All asserted terms, prefix first.
    pub fn assertions(&self) -> Vec<TermId> {
        self.prefix.iter().chain(std::iter::once(&self.pivot)).map(|p| p.term).collect()
    }

    /// Prefix predicates grouped by cycle.
    pub fn per_cycle(&self) -> BTreeMap<u32, Vec<&PathPredicate>> {
        let mut m: BTreeMap<u32, Vec<&PathPredicate>> = BTreeMap::new();
        for p in &self.prefix {
            m.entry(p.cycle).or_default().push(p);
        }
        m
    }

    fn hint(&self, name: &str, cycle: u32) -> Option<u64> {
        self.inputs.iter().find(|s| s.name == name && s.cycle == cycle).map(|s| s.hint)
    }

    /// Total number of free input bits the assertions actually depend on.
    pub fn support_bits(&self) -> u32 {
        self.support().iter().map(|&t| self.store.width(t)).sum()
    }

    fn support(&self) -> Vec<TermId> {
        self.store.vars(&self.assertions())
    }
}

/// Input assignment; total over the vector's input slots.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Model {
    pub assignments: BTreeMap<(String, u32), u64>,
}

impl Model {
    pub fn get(&self, name: &str, cycle: u32) -> Option<u64> {
        self.assignments.get(&(name.to_string(), cycle)).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Sat(Model),
    Unsat,
    /// Budget exhausted or encoding refused; not a proof of infeasibility.
    Unknown(String),
}

impl SolveOutcome {
    pub fn verdict(&self) -> &'static str {
        match self {
            SolveOutcome::Sat(_) => "sat",
            SolveOutcome::Unsat => "unsat",
            SolveOutcome::Unknown(_) => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "command")]
pub enum Backend {
    Internal,
    /// Executable (with arguments) reading SMT-LIB2 on stdin.
    External(String),
}

impl std::str::FromStr for Backend {
    type Err = String;

    /// `internal`, `external:<command>`, or bare `external`, which takes the
    /// command from `RTLIC_SOLVER` or the first solver found on `PATH`.
    /// `RTLIC_SOLVER` wins over an explicit command.
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "internal" {
            return Ok(Backend::Internal);
        }
        let usage = || format!("unknown solver `{s}` (expected internal or external[:<command>])");
        let rest = s.strip_prefix("external").ok_or_else(usage)?;
        let env = std::env::var("RTLIC_SOLVER").ok().filter(|c| !c.trim().is_empty());
        let cmd = match (env, rest.strip_prefix(':')) {
            (Some(c), _) => c,
            (None, Some(c)) if !c.trim().is_empty() => c.to_string(),
            (None, None) if rest.is_empty() => {
                external::discover().ok_or("no external solver found; set RTLIC_SOLVER or use external:<command>")?
            }
            _ => return Err(usage()),
        };
        Ok(Backend::External(cmd))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("external solver: {0}")]
    External(String),
}

/// Completes a partial assignment with the concrete-run hints.
fn complete(cv: &ConstraintVector, mut found: BTreeMap<(String, u32), u64>) -> Model {
    for s in &cv.inputs {
        found.entry((s.name.clone(), s.cycle)).or_insert(s.hint);
    }
    let keep: BTreeSet<(String, u32)> = cv.inputs.iter().map(|s| (s.name.clone(), s.cycle)).collect();
    found.retain(|k, _| keep.contains(k));
    Model { assignments: found }
}

pub fn solve(cv: &ConstraintVector, backend: &Backend) -> Result<SolveOutcome, SolverError> {
    match backend {
        Backend::Internal => Ok(solve_internal(cv, DEFAULT_MAX_CONFLICTS)),
        Backend::External(cmd) => solve_external(cv, cmd),
    }
}

/// Scalarizes memories, bit-blasts, and runs the CDCL search.
pub fn solve_internal(cv: &ConstraintVector, max_conflicts: u64) -> SolveOutcome {
    let mut store = cv.store.clone();
    let roots = match scalarize::scalarize(&mut store, &cv.assertions()) {
        Ok(r) => r,
        Err(scalarize::TooWide(w)) => {
            return SolveOutcome::Unknown(format!(
                "memory index of {w} bits exceeds the scalarization bound of {} bits; \
                 export the vector with `smt` and use an external solver",
                scalarize::MAX_INDEX_WIDTH
            ))
        }
    };
    let mut bb = BitBlaster::new();
    for &r in &roots {
        bb.assert_true(&store, r);
    }
    let mut hints = vec![false; bb.cnf.num_vars as usize];
    for ((name, cycle), bits) in &bb.inputs {
        let h = cv.hint(name, *cycle).unwrap_or(0);
        for (i, l) in bits.iter().enumerate() {
            hints[l.var() as usize] = (h >> i & 1 == 1) ^ l.negated();
        }
    }
    match sat::solve_cnf(&bb.cnf, &hints, max_conflicts) {
        SatResult::Unsat => SolveOutcome::Unsat,
        SatResult::Unknown => SolveOutcome::Unknown(format!("conflict budget of {max_conflicts} exhausted")),
        SatResult::Sat(model) => {
            let found =
                bb.inputs.keys().map(|(n, c)| ((n.clone(), *c), bb.input_value(n, *c, &model).unwrap())).collect();
            SolveOutcome::Sat(complete(cv, found))
        }
    }
}

pub fn solve_external(cv: &ConstraintVector, command: &str) -> Result<SolveOutcome, SolverError> {
    let script = emit_smtlib(cv);
    match external::run(command, &script).map_err(SolverError::External)? {
        Response::Unsat => Ok(SolveOutcome::Unsat),
        Response::Unknown(why) => Ok(SolveOutcome::Unknown(why)),
        Response::Sat(found) => Ok(SolveOutcome::Sat(complete(cv, found))),
    }
}

/// Concrete evaluation of every predicate under `m` (missing inputs read 0).
pub fn check_model(cv: &ConstraintVector, m: &Model) -> bool {
    let lookup = |name: &str, cycle: u32| m.get(name, cycle);
    eval::Evaluator::new(&cv.store, &cv.assertions()).all_true(&lookup)
}

/// Exhaustive search over the support variables; `None` if the support
/// exceeds `max_bits`. Non-support inputs take their hints.
pub fn enumerate(cv: &ConstraintVector, max_bits: u32) -> Option<SolveOutcome> {
    let support = cv.support();
    let bits = cv.support_bits();
    if bits > max_bits {
        return None;
    }
    let vars: Vec<(String, u32, u32)> = support
        .iter()
        .map(|&t| match cv.store.node(t) {
            Node::Var { name, cycle, width } => (name.clone(), *cycle, *width),
            _ => unreachable!(),
        })
        .collect();
    let ev = eval::Evaluator::new(&cv.store, &cv.assertions());
    for code in 0u64..(1u64 << bits) {
        let mut values = Vec::with_capacity(vars.len());
        let mut shift = 0;
        for (_, _, width) in &vars {
            values.push((code >> shift) & crate::bv::mask(*width));
            shift += width;
        }
        let lookup = |n: &str, c: u32| vars.iter().position(|(vn, vc, _)| vn == n && *vc == c).map(|i| values[i]);
        if ev.all_true(&lookup) {
            let found = vars.iter().zip(&values).map(|((n, c, _), &v)| ((n.clone(), *c), v)).collect();
            return Some(SolveOutcome::Sat(complete(cv, found)));
        }
    }
    Some(SolveOutcome::Unsat)
}

/// SMT-LIB2 script over the unscalarized form (QF_ABV when memories occur).
pub fn emit_smtlib(cv: &ConstraintVector) -> String {
    let mut comments = vec![format!("pivot {} at cycle {}", cv.pivot.note, cv.pivot.cycle)];
    comments.extend(cv.prefix.iter().map(|p| format!("path {} at cycle {}", p.note, p.cycle)));
    let (store, roots) = cv.store.extract_roots(&cv.assertions());
    smtlib::script(&store, &roots, &comments)
}

/// The same script after memory scalarization (always QF_BV).
pub fn emit_smtlib_scalarized(cv: &ConstraintVector) -> Result<String, scalarize::TooWide> {
    let mut store = cv.store.clone();
    let roots = scalarize::scalarize(&mut store, &cv.assertions())?;
    let (store, roots) = store.extract_roots(&roots);
    Ok(smtlib::script(&store, &roots, &[format!("pivot {} at cycle {}", cv.pivot.note, cv.pivot.cycle)]))
}
