//! SMT-LIB2 export and model parsing.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::term::{Node, Sort, TermId, TermStore};

pub fn var_name(name: &str, cycle: u32) -> String {
    format!("{name}__c{cycle}")
}

/// Splits `<sig>__c<cycle>` back into its parts.
pub fn parse_var_name(s: &str) -> Option<(String, u32)> {
    let (name, cycle) = s.rsplit_once("__c")?;
    Some((name.to_string(), cycle.parse().ok()?))
}

fn sort_text(s: Sort) -> String {
    match s {
        Sort::Bv(w) => format!("(_ BitVec {w})"),
        Sort::Array { index, elem } => format!("(Array (_ BitVec {index}) (_ BitVec {elem}))"),
    }
}

fn bin_const(value: u64, width: u32) -> String {
    let mut s = String::from("#b");
    for i in (0..width).rev() {
        s.push(if value >> i & 1 == 1 { '1' } else { '0' });
    }
    s
}

fn term_name(t: TermId) -> String {
    format!("t{}", t.0)
}

/// A complete script: declarations, one `define-fun` per shared node, one
/// assertion per root (each root must be 1 bit and is asserted equal to 1).
pub fn script(store: &TermStore, roots: &[TermId], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "; {c}").unwrap();
    }
    let logic = if store.has_arrays(roots) { "QF_ABV" } else { "QF_BV" };
    writeln!(out, "(set-logic {logic})").unwrap();
    writeln!(out, "(set-option :produce-models true)").unwrap();
    let order = store.topo(roots);
    for &t in &order {
        if let Node::Var { name, cycle, width } = store.node(t) {
            writeln!(out, "(declare-fun {} () (_ BitVec {width}))", var_name(name, *cycle)).unwrap();
        }
    }
    for &t in &order {
        let body = node_text(store, t);
        writeln!(out, "(define-fun {} () {} {body})", term_name(t), sort_text(store.sort(t))).unwrap();
    }
    for r in roots {
        writeln!(out, "(assert (= {} #b1))", term_name(*r)).unwrap();
    }
    writeln!(out, "(check-sat)").unwrap();
    writeln!(out, "(get-model)").unwrap();
    out
}

fn node_text(store: &TermStore, t: TermId) -> String {
    let n = term_name;
    let b = |c: &TermId| format!("(= {} #b1)", n(*c));
    let bool_bv = |e: String| format!("(ite {e} #b1 #b0)");
    match store.node(t) {
        Node::Var { name, cycle, .. } => var_name(name, *cycle),
        Node::Const { value, width } => bin_const(*value, *width),
        Node::ConstArray { value, elem, .. } => {
            format!("((as const {}) {})", sort_text(store.sort(t)), bin_const(*value, *elem))
        }
        Node::Not(a) => format!("(bvnot {})", n(*a)),
        Node::Neg(a) => format!("(bvneg {})", n(*a)),
        Node::And(a, c) => format!("(bvand {} {})", n(*a), n(*c)),
        Node::Or(a, c) => format!("(bvor {} {})", n(*a), n(*c)),
        Node::Xor(a, c) => format!("(bvxor {} {})", n(*a), n(*c)),
        Node::Add(a, c) => format!("(bvadd {} {})", n(*a), n(*c)),
        Node::Sub(a, c) => format!("(bvsub {} {})", n(*a), n(*c)),
        Node::Shl(a, c) => format!("(bvshl {} {})", n(*a), n(*c)),
        Node::Lshr(a, c) => format!("(bvlshr {} {})", n(*a), n(*c)),
        Node::Eq(a, c) => bool_bv(format!("(= {} {})", n(*a), n(*c))),
        Node::Ult(a, c) => bool_bv(format!("(bvult {} {})", n(*a), n(*c))),
        Node::Ule(a, c) => bool_bv(format!("(bvule {} {})", n(*a), n(*c))),
        Node::Concat(a, c) => format!("(concat {} {})", n(*a), n(*c)),
        Node::Extract { hi, lo, arg } => format!("((_ extract {hi} {lo}) {})", n(*arg)),
        Node::ZeroExt { width, arg } => {
            format!("((_ zero_extend {}) {})", width - store.width(*arg), n(*arg))
        }
        Node::Ite(c, x, y) => format!("(ite {} {} {})", b(c), n(*x), n(*y)),
        Node::Select(a, i) => format!("(select {} {})", n(*a), n(*i)),
        Node::Store(a, i, v) => format!("(store {} {} {})", n(*a), n(*i), n(*v)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_sexps(text: &str) -> Result<Vec<Sexp>, String> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' => {
                chars.next();
                stack.push(Vec::new());
            }
            ')' => {
                chars.next();
                let done = stack.pop().ok_or("unbalanced `)`")?;
                stack.last_mut().ok_or("unbalanced `)`")?.push(Sexp::List(done));
            }
            ';' => while chars.next().is_some_and(|c| c != '\n') {},
            c if c.is_whitespace() => {
                chars.next();
            }
            '|' => {
                chars.next();
                let mut s = String::new();
                for c in chars.by_ref() {
                    if c == '|' {
                        break;
                    }
                    s.push(c);
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                for c in chars.by_ref() {
                    if c == '"' {
                        break;
                    }
                    s.push(c);
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced `(`".into());
    }
    Ok(stack.pop().unwrap())
}

fn bv_literal(s: &Sexp) -> Option<u64> {
    match s {
        Sexp::Atom(a) => {
            if let Some(b) = a.strip_prefix("#b") {
                u64::from_str_radix(b, 2).ok()
            } else if let Some(h) = a.strip_prefix("#x") {
                u64::from_str_radix(h, 16).ok()
            } else {
                None
            }
        }
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(u), Sexp::Atom(bv), _] if u == "_" => bv.strip_prefix("bv")?.parse().ok(),
            _ => None,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Response {
    Sat(BTreeMap<(String, u32), u64>),
    Unsat,
    Unknown(String),
}

/// Parses solver output: a status line followed by an optional model.
pub fn parse_response(text: &str) -> Result<Response, String> {
    let items = parse_sexps(text)?;
    let mut iter = items.into_iter();
    let status = match iter.next() {
        Some(Sexp::Atom(s)) => s,
        other => return Err(format!("expected sat/unsat/unknown, found {other:?}")),
    };
    match status.as_str() {
        "unsat" => return Ok(Response::Unsat),
        "unknown" => return Ok(Response::Unknown("external solver answered unknown".into())),
        "sat" => {}
        s => return Err(format!("unexpected solver status `{s}`")),
    }
    let mut model = BTreeMap::new();
    let mut visit = |defs: Vec<Sexp>| {
        for d in defs {
            if let Sexp::List(parts) = d {
                if let [Sexp::Atom(kw), Sexp::Atom(name), _, _, value] = parts.as_slice() {
                    if kw == "define-fun" {
                        if let (Some(key), Some(v)) = (parse_var_name(name), bv_literal(value)) {
                            model.insert(key, v);
                        }
                    }
                }
            }
        }
    };
    for item in iter {
        if let Sexp::List(mut defs) = item {
            if matches!(defs.first(), Some(Sexp::Atom(a)) if a == "model") {
                defs.remove(0);
            }
            if matches!(defs.first(), Some(Sexp::Atom(a)) if a == "define-fun") {
                visit(vec![Sexp::List(defs)]);
            } else {
                visit(defs);
            }
        }
    }
    Ok(Response::Sat(model))
}
