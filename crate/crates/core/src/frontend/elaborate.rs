use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use super::ast::*;
use super::{Diagnostic, FrontendError};
use crate::bv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    Input,
    Output,
    Reg,
    Memory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignalInfo {
    pub name: String,
    pub kind: SignalKind,
    /// Word width for memories.
    pub width: u32,
    /// Number of words; 1 for scalar signals.
    pub depth: u64,
    /// Address bits for memories, 0 otherwise.
    pub index_width: u32,
    pub is_clock: bool,
}

impl SignalInfo {
    pub fn is_memory(&self) -> bool {
        self.kind == SignalKind::Memory
    }

    pub fn is_input(&self) -> bool {
        self.kind == SignalKind::Input
    }

    /// Inputs that carry data (clocks are driven by the simulator itself).
    pub fn is_data_input(&self) -> bool {
        self.kind == SignalKind::Input && !self.is_clock
    }

    /// Holds state across cycles.
    pub fn is_state(&self) -> bool {
        !self.is_input()
    }
}

/// Signals in declaration order with lookup by name.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SignalTable {
    order: Vec<SignalInfo>,
    index: HashMap<String, usize>,
}

impl SignalTable {
    fn push(&mut self, info: SignalInfo) {
        self.index.insert(info.name.clone(), self.order.len());
        self.order.push(info);
    }

    pub fn get(&self, name: &str) -> Option<&SignalInfo> {
        self.index.get(name).map(|&i| &self.order[i])
    }

    /// Position of the signal in declaration order.
    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SignalInfo> {
        self.order.iter()
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn data_inputs(&self) -> impl Iterator<Item = &SignalInfo> {
        self.order.iter().filter(|s| s.is_data_input())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElaboratedDesign {
    pub ast: Ast,
    pub signals: SignalTable,
    /// Path of the source file, for diagnostics.
    pub path: String,
}

impl ElaboratedDesign {
    pub fn signal(&self, name: &str) -> Option<&SignalInfo> {
        self.signals.get(name)
    }

    pub fn data_inputs(&self) -> Vec<&SignalInfo> {
        self.signals.data_inputs().collect()
    }

    pub fn processes(&self) -> &[Process] {
        &self.ast.processes
    }
}

/// Resolves parameters, folds elaboration-time constants and assigns a
/// width to every expression.
pub fn elaborate(ast: &Ast, overrides: &BTreeMap<String, i64>) -> Result<ElaboratedDesign, FrontendError> {
    elaborate_at("<design>", ast, overrides)
}

pub(crate) fn elaborate_at(
    path: &str,
    ast: &Ast,
    overrides: &BTreeMap<String, i64>,
) -> Result<ElaboratedDesign, FrontendError> {
    let mut el = Elaborator { path, params: HashMap::new(), signals: SignalTable::default() };
    let params = el.resolve_params(ast, overrides)?;

    // Declaration order by source position; ties keep list order.
    let mut decls: Vec<(Span, usize, usize)> = Vec::new();
    decls.extend(ast.ports.iter().enumerate().map(|(i, p)| (p.span, 0, i)));
    decls.extend(ast.regs.iter().enumerate().map(|(i, r)| (r.span, 1, i)));
    decls.extend(ast.memories.iter().enumerate().map(|(i, m)| (m.span, 2, i)));
    decls.sort();

    let clocks: HashSet<&str> = ast
        .processes
        .iter()
        .filter_map(|p| match &p.kind {
            ProcessKind::ClockedPosedge { clock } => Some(clock.as_str()),
            ProcessKind::Combinational => None,
        })
        .collect();

    let mut ports = Vec::new();
    let mut regs = Vec::new();
    let mut memories = Vec::new();
    for (_, which, i) in decls {
        match which {
            0 => {
                let p = &ast.ports[i];
                let width = el.range_width(&p.range)?;
                let kind = match p.direction {
                    Direction::Input => SignalKind::Input,
                    Direction::Output => {
                        if !p.is_reg {
                            return Err(el.unsupported(p.span, "output wire (declare the port as `output reg`)"));
                        }
                        SignalKind::Output
                    }
                };
                if p.direction == Direction::Input && p.is_reg {
                    return Err(el.error(p.span, format!("input `{}` cannot be declared reg", p.name)));
                }
                let is_clock = clocks.contains(p.name.as_str());
                el.declare(
                    p.span,
                    SignalInfo { name: p.name.clone(), kind, width, depth: 1, index_width: 0, is_clock },
                )?;
                ports.push(PortDecl { range: literal_range(width), ..p.clone() });
            }
            1 => {
                let r = &ast.regs[i];
                let width = el.range_width(&r.range)?;
                el.declare(
                    r.span,
                    SignalInfo {
                        name: r.name.clone(),
                        kind: SignalKind::Reg,
                        width,
                        depth: 1,
                        index_width: 0,
                        is_clock: false,
                    },
                )?;
                regs.push(RegDecl { range: literal_range(width), ..r.clone() });
            }
            _ => {
                let m = &ast.memories[i];
                let width = el.range_width(&m.word)?;
                let hi = el.const_int(&m.depth.msb)?;
                let lo = el.const_int(&m.depth.lsb)?;
                let depth = (hi - lo).abs() + 1;
                if depth < 2 || depth & (depth - 1) != 0 || depth > 1 << 16 {
                    return Err(el.error(
                        m.span,
                        format!("memory `{}` depth {depth} must be a power of two between 2 and 65536", m.name),
                    ));
                }
                let index_width = depth.trailing_zeros();
                el.declare(
                    m.span,
                    SignalInfo {
                        name: m.name.clone(),
                        kind: SignalKind::Memory,
                        width,
                        depth: depth as u64,
                        index_width,
                        is_clock: false,
                    },
                )?;
                memories.push(MemDecl {
                    name: m.name.clone(),
                    word: literal_range(width),
                    depth: Range { msb: unsized_const(depth as u64 - 1), lsb: unsized_const(0) },
                    span: m.span,
                });
            }
        }
    }
    // Ports keep their list order.
    ports.sort_by_key(|p: &PortDecl| ast.ports.iter().position(|q| q.name == p.name));
    for clock in &clocks {
        match el.signals.get(clock) {
            Some(s) if s.is_input() && s.width == 1 => {}
            Some(_) => {
                let span = ast.processes.iter().find(|p| p.is_clocked()).map(|p| p.body.span).unwrap_or_default();
                return Err(el.error(span, format!("clock `{clock}` must be a 1-bit input")));
            }
            None => {
                let span = ast.processes.iter().find(|p| p.is_clocked()).map(|p| p.body.span).unwrap_or_default();
                return Err(el.error(span, format!("undefined identifier {clock}")));
            }
        }
    }

    let mut processes = Vec::new();
    let mut drivers: HashMap<String, usize> = HashMap::new();
    for p in &ast.processes {
        let clocked = p.is_clocked();
        let body = el.stmt(&p.body, clocked)?;
        let mut err = None;
        body.walk(&mut |s| {
            if let StmtKind::Assign { lhs, .. } = &s.kind {
                let prev = *drivers.entry(lhs.name().to_string()).or_insert(p.id);
                if prev != p.id && err.is_none() {
                    err = Some((s.span, lhs.name().to_string()));
                }
            }
        });
        if let Some((span, name)) = err {
            return Err(el.unsupported(span, &format!("signal `{name}` driven from more than one process")));
        }
        processes.push(Process { id: processes.len(), kind: p.kind.clone(), body, source_span: p.source_span });
    }

    let out = Ast { module_name: ast.module_name.clone(), params, ports, regs, memories, processes, span: ast.span };
    Ok(ElaboratedDesign { ast: out, signals: el.signals, path: path.to_string() })
}

fn unsized_const(value: u64) -> Expr {
    Expr::with_width(ExprKind::Const { value, width: None }, unsized_width(value))
}

fn unsized_width(value: u64) -> u32 {
    if value > u32::MAX as u64 {
        64
    } else {
        32
    }
}

fn literal_range(width: u32) -> Option<Range> {
    if width == 1 {
        None
    } else {
        Some(Range { msb: unsized_const(width as u64 - 1), lsb: unsized_const(0) })
    }
}

struct Elaborator<'a> {
    path: &'a str,
    params: HashMap<String, i64>,
    signals: SignalTable,
}

impl Elaborator<'_> {
    fn error(&self, span: Span, msg: impl Into<String>) -> FrontendError {
        FrontendError::Elaboration(Diagnostic::error(self.path, span, msg))
    }

    fn unsupported(&self, span: Span, what: &str) -> FrontendError {
        FrontendError::Unsupported(Diagnostic::error(self.path, span, format!("unsupported feature: {what}")))
    }

    fn declare(&mut self, span: Span, info: SignalInfo) -> Result<(), FrontendError> {
        if self.signals.get(&info.name).is_some() || self.params.contains_key(&info.name) {
            return Err(self.error(span, format!("duplicate declaration of `{}`", info.name)));
        }
        self.signals.push(info);
        Ok(())
    }

    fn resolve_params(
        &mut self,
        ast: &Ast,
        overrides: &BTreeMap<String, i64>,
    ) -> Result<Vec<ParamDecl>, FrontendError> {
        let mut out = Vec::new();
        for p in &ast.params {
            let value = match overrides.get(&p.name) {
                Some(_) if p.local => {
                    return Err(self.error(p.span, format!("localparam {} cannot be overridden", p.name)));
                }
                Some(v) => *v,
                None => self.const_int(&p.value)?,
            };
            if value < 0 {
                return Err(self.error(p.span, format!("parameter {} has negative value {value}", p.name)));
            }
            self.params.insert(p.name.clone(), value);
            out.push(ParamDecl {
                name: p.name.clone(),
                value: unsized_const(value as u64),
                local: p.local,
                span: p.span,
            });
        }
        for (name, &value) in overrides {
            if self.params.contains_key(name) {
                continue;
            }
            if value < 0 {
                return Err(self.error(ast.span, format!("parameter {name} has negative value {value}")));
            }
            self.params.insert(name.clone(), value);
            out.push(ParamDecl {
                name: name.clone(),
                value: unsized_const(value as u64),
                local: false,
                span: Span::default(),
            });
        }
        Ok(out)
    }

    /// Integer evaluation for ranges and parameter values.
    fn const_int(&self, e: &Expr) -> Result<i64, FrontendError> {
        let overflow = || self.error(e.span, "constant expression overflows 64 bits");
        Ok(match &e.kind {
            ExprKind::Const { value, .. } => i64::try_from(*value).map_err(|_| overflow())?,
            ExprKind::Ident(n) => match self.params.get(n) {
                Some(v) => *v,
                None if self.signals.get(n).is_some() => {
                    return Err(self.error(e.span, format!("`{n}` is not a constant")));
                }
                None => return Err(self.error(e.span, format!("undefined parameter {n}"))),
            },
            ExprKind::Unary(op, a) => {
                let a = self.const_int(a)?;
                match op {
                    UnaryOp::Neg => a.checked_neg().ok_or_else(overflow)?,
                    UnaryOp::Not => !a,
                    UnaryOp::LogicalNot => (a == 0) as i64,
                }
            }
            ExprKind::Binary(op, a, b) => {
                let a = self.const_int(a)?;
                let b = self.const_int(b)?;
                use BinaryOp::*;
                match op {
                    Add => a.checked_add(b).ok_or_else(overflow)?,
                    Sub => a.checked_sub(b).ok_or_else(overflow)?,
                    Mul => a.checked_mul(b).ok_or_else(overflow)?,
                    Div | Mod => {
                        if b == 0 {
                            return Err(self.error(e.span, "division by zero in constant expression"));
                        }
                        if *op == Div {
                            a / b
                        } else {
                            a % b
                        }
                    }
                    Pow => {
                        let exp = u32::try_from(b).map_err(|_| overflow())?;
                        a.checked_pow(exp).ok_or_else(overflow)?
                    }
                    Shl => {
                        let s = u32::try_from(b).map_err(|_| overflow())?;
                        a.checked_shl(s).ok_or_else(overflow)?
                    }
                    Shr => {
                        let s = u32::try_from(b).map_err(|_| overflow())?;
                        a.checked_shr(s).unwrap_or(0)
                    }
                    And => a & b,
                    Or => a | b,
                    Xor => a ^ b,
                    Eq => (a == b) as i64,
                    Ne => (a != b) as i64,
                    Lt => (a < b) as i64,
                    Le => (a <= b) as i64,
                    Gt => (a > b) as i64,
                    Ge => (a >= b) as i64,
                    LogicalAnd => (a != 0 && b != 0) as i64,
                    LogicalOr => (a != 0 || b != 0) as i64,
                }
            }
            ExprKind::Ternary(c, t, f) => {
                if self.const_int(c)? != 0 {
                    self.const_int(t)?
                } else {
                    self.const_int(f)?
                }
            }
            _ => return Err(self.error(e.span, "expected a constant expression")),
        })
    }

    fn range_width(&self, r: &Option<Range>) -> Result<u32, FrontendError> {
        let Some(r) = r else { return Ok(1) };
        let msb = self.const_int(&r.msb)?;
        let lsb = self.const_int(&r.lsb)?;
        if lsb != 0 || msb < lsb {
            if msb < lsb {
                return Err(self.error(r.msb.span, format!("range [{msb}:{lsb}] has non-positive width")));
            }
            return Err(self.unsupported(r.msb.span, "ranges with a nonzero least significant bit"));
        }
        let width = msb + 1;
        if width > bv::MAX_WIDTH as i64 {
            return Err(self.unsupported(r.msb.span, "vectors wider than 64 bits"));
        }
        Ok(width as u32)
    }

    fn stmt(&self, s: &Stmt, clocked: bool) -> Result<Stmt, FrontendError> {
        let kind = match &s.kind {
            StmtKind::Block(items) => {
                StmtKind::Block(items.iter().map(|i| self.stmt(i, clocked)).collect::<Result<_, _>>()?)
            }
            StmtKind::If { cond, then_branch, else_branch } => StmtKind::If {
                cond: self.expr(cond)?,
                then_branch: Box::new(self.stmt(then_branch, clocked)?),
                else_branch: match else_branch {
                    Some(e) => Some(Box::new(self.stmt(e, clocked)?)),
                    None => None,
                },
            },
            StmtKind::Assign { lhs, rhs, blocking } => {
                if clocked && *blocking {
                    return Err(self.error(s.span, "blocking assignment `=` in a clocked process (use `<=`)"));
                }
                if !clocked && !*blocking {
                    return Err(self.error(s.span, "nonblocking assignment `<=` in a combinational process (use `=`)"));
                }
                let name = lhs.name();
                let Some(info) = self.signals.get(name) else {
                    return Err(self.error(s.span, format!("undefined identifier {name}")));
                };
                let lhs = match lhs {
                    LValue::Signal(_) => {
                        if info.is_memory() {
                            return Err(self.error(s.span, format!("memory `{name}` assigned without an index")));
                        }
                        LValue::Signal(name.to_string())
                    }
                    LValue::Index { index, .. } => {
                        if !info.is_memory() {
                            return Err(self.unsupported(s.span, "bit-select assignment target"));
                        }
                        LValue::Index { name: name.to_string(), index: self.expr(index)? }
                    }
                };
                if info.is_input() {
                    return Err(self.error(s.span, format!("input `{name}` cannot be assigned")));
                }
                StmtKind::Assign { lhs, rhs: self.expr(rhs)?, blocking: *blocking }
            }
            StmtKind::Display(t) => StmtKind::Display(t.clone()),
            StmtKind::Empty => StmtKind::Empty,
        };
        Ok(Stmt { kind, span: s.span })
    }

    fn expr(&self, e: &Expr) -> Result<Expr, FrontendError> {
        let span = e.span;
        let mk = |kind, width| Expr { kind, span, width };
        let out = match &e.kind {
            ExprKind::Const { value, width } => match width {
                Some(w) => mk(ExprKind::Const { value: bv::truncate(*value, *w), width: Some(*w) }, *w),
                None => mk(ExprKind::Const { value: *value, width: None }, unsized_width(*value)),
            },
            ExprKind::Ident(n) => {
                if let Some(v) = self.params.get(n) {
                    let v = *v as u64;
                    return Ok(mk(ExprKind::Const { value: v, width: None }, unsized_width(v)));
                }
                match self.signals.get(n) {
                    None => return Err(self.error(span, format!("undefined identifier {n}"))),
                    Some(s) if s.is_memory() => {
                        return Err(self.error(span, format!("memory `{n}` used without an index")));
                    }
                    Some(s) if s.is_clock => {
                        return Err(self.unsupported(span, &format!("clock `{n}` used as data")));
                    }
                    Some(s) => mk(ExprKind::Ident(n.clone()), s.width),
                }
            }
            ExprKind::Index { name, index } => {
                let Some(s) = self.signals.get(name) else {
                    return Err(self.error(span, format!("undefined identifier {name}")));
                };
                if s.is_memory() {
                    let index = self.expr(index)?;
                    mk(ExprKind::Index { name: name.clone(), index: Box::new(index) }, s.width)
                } else {
                    let bit = self.expr(index)?;
                    let Some(k) = bit.as_const() else {
                        return Err(self.unsupported(span, "variable bit-select"));
                    };
                    self.slice(span, name, k, k, s.width)?
                }
            }
            ExprKind::Slice { name, msb, lsb } => {
                let Some(s) = self.signals.get(name) else {
                    return Err(self.error(span, format!("undefined identifier {name}")));
                };
                if s.is_memory() {
                    return Err(self.unsupported(span, "part-select of a memory"));
                }
                let m = self.const_int(msb)?;
                let l = self.const_int(lsb)?;
                if m < 0 || l < 0 {
                    return Err(self.error(span, "negative part-select bound"));
                }
                self.slice(span, name, m as u64, l as u64, s.width)?
            }
            ExprKind::Unary(op, a) => {
                let a = self.expr(a)?;
                let w = bv::unary_width(*op, a.width);
                if let Some(v) = a.as_const() {
                    let value = bv::eval_unary(*op, v, a.width);
                    return Ok(fold(span, value, w, const_sized(&a)));
                }
                mk(ExprKind::Unary(*op, Box::new(a)), w)
            }
            ExprKind::Binary(op, a, b) => {
                let a = self.expr(a)?;
                let b = self.expr(b)?;
                let w = bv::binary_width(*op, a.width, b.width);
                if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
                    let value = match bv::eval_binary(*op, x, a.width, y, b.width) {
                        Some(v) => v,
                        None => self.fold_arith(span, *op, x, y, w)?,
                    };
                    return Ok(fold(span, value, w, const_sized(&a) || const_sized(&b)));
                }
                if !op.is_runtime() {
                    return Err(self.unsupported(span, &format!("operator `{}` on non-constant operands", op.symbol())));
                }
                mk(ExprKind::Binary(*op, Box::new(a), Box::new(b)), w)
            }
            ExprKind::Concat(items) => {
                let items: Vec<Expr> = items.iter().map(|i| self.expr(i)).collect::<Result<_, _>>()?;
                let w: u32 = items.iter().map(|i| i.width).sum();
                if w > bv::MAX_WIDTH {
                    return Err(self.unsupported(span, "concatenation wider than 64 bits"));
                }
                mk(ExprKind::Concat(items), w)
            }
            ExprKind::Ternary(c, t, f) => {
                let c = self.expr(c)?;
                let t = self.expr(t)?;
                let f = self.expr(f)?;
                if let Some(v) = c.as_const() {
                    return Ok(if v != 0 { t } else { f });
                }
                let w = t.width.max(f.width);
                mk(ExprKind::Ternary(Box::new(c), Box::new(t), Box::new(f)), w)
            }
        };
        Ok(out)
    }

    fn slice(&self, span: Span, name: &str, msb: u64, lsb: u64, width: u32) -> Result<Expr, FrontendError> {
        if msb < lsb || msb >= width as u64 {
            return Err(self.error(span, format!("select [{msb}:{lsb}] out of range for `{name}` of width {width}")));
        }
        let w = (msb - lsb + 1) as u32;
        Ok(Expr {
            kind: ExprKind::Slice {
                name: name.to_string(),
                msb: Box::new(unsized_const(msb)),
                lsb: Box::new(unsized_const(lsb)),
            },
            span,
            width: w,
        })
    }

    fn fold_arith(&self, span: Span, op: BinaryOp, a: u64, b: u64, w: u32) -> Result<u64, FrontendError> {
        let v = match op {
            BinaryOp::Mul => a.wrapping_mul(b),
            BinaryOp::Div | BinaryOp::Mod if b == 0 => {
                return Err(self.error(span, "division by zero in constant expression"));
            }
            BinaryOp::Div => a / b,
            BinaryOp::Mod => a % b,
            BinaryOp::Pow => {
                let (mut base, mut exp, mut acc) = (a, b, 1u64);
                while exp > 0 {
                    if exp & 1 == 1 {
                        acc = acc.wrapping_mul(base);
                    }
                    base = base.wrapping_mul(base);
                    exp >>= 1;
                }
                acc
            }
            _ => unreachable!("runtime operators fold through bv::eval_binary"),
        };
        Ok(bv::truncate(v, w))
    }
}

fn const_sized(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Const { width: Some(_), .. })
}

fn fold(span: Span, value: u64, width: u32, sized: bool) -> Expr {
    let value = bv::truncate(value, width);
    let kind =
        if sized { ExprKind::Const { value, width: Some(width) } } else { ExprKind::Const { value, width: None } };
    // An unsized literal re-elaborates to 32 or 64 bits, so keep widths that
    // would not survive a round trip sized.
    if !sized && width != unsized_width(value) {
        return Expr { kind: ExprKind::Const { value, width: Some(width) }, span, width };
    }
    Expr { kind, span, width }
}
