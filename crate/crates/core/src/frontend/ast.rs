//! Syntax tree for the supported Verilog subset.
//!
//! The same tree is used before and after elaboration. Before elaboration
//! `Expr::width` is 0 and ranges may reference parameters; afterwards every
//! expression carries its resolved width and every range is a literal.

use serde::Serialize;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ast {
    pub module_name: String,
    pub params: Vec<ParamDecl>,
    pub ports: Vec<PortDecl>,
    pub regs: Vec<RegDecl>,
    pub memories: Vec<MemDecl>,
    pub processes: Vec<Process>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamDecl {
    pub name: String,
    pub value: Expr,
    pub local: bool,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Range {
    pub msb: Expr,
    pub lsb: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortDecl {
    pub name: String,
    pub direction: Direction,
    pub is_reg: bool,
    pub range: Option<Range>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegDecl {
    pub name: String,
    pub range: Option<Range>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemDecl {
    pub name: String,
    pub word: Option<Range>,
    pub depth: Range,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProcessKind {
    ClockedPosedge { clock: String },
    Combinational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Process {
    pub id: usize,
    pub kind: ProcessKind,
    pub body: Stmt,
    /// First and last source line of the `always` construct.
    pub source_span: (u32, u32),
}

impl Process {
    pub fn is_clocked(&self) -> bool {
        matches!(self.kind, ProcessKind::ClockedPosedge { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Block(Vec<Stmt>),
    If { cond: Expr, then_branch: Box<Stmt>, else_branch: Option<Box<Stmt>> },
    Assign { lhs: LValue, rhs: Expr, blocking: bool },
    Display(String),
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LValue {
    Signal(String),
    Index { name: String, index: Expr },
}

impl LValue {
    pub fn name(&self) -> &str {
        match self {
            LValue::Signal(n) | LValue::Index { name: n, .. } => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum UnaryOp {
    Not,
    LogicalNot,
    Neg,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Not => "~",
            UnaryOp::LogicalNot => "!",
            UnaryOp::Neg => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BinaryOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Xor,
    LogicalAnd,
    LogicalOr,
    Add,
    Sub,
    Shl,
    Shr,
    // Elaboration-time only: folded away or rejected.
    Mul,
    Div,
    Mod,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        use BinaryOp::*;
        match self {
            Eq => "==",
            Ne => "!=",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            And => "&",
            Or => "|",
            Xor => "^",
            LogicalAnd => "&&",
            LogicalOr => "||",
            Add => "+",
            Sub => "-",
            Shl => "<<",
            Shr => ">>",
            Mul => "*",
            Div => "/",
            Mod => "%",
            Pow => "**",
        }
    }

    /// Binding strength, higher binds tighter.
    pub fn precedence(self) -> u8 {
        use BinaryOp::*;
        match self {
            LogicalOr => 1,
            LogicalAnd => 2,
            Or => 3,
            Xor => 4,
            And => 5,
            Eq | Ne => 6,
            Lt | Le | Gt | Ge => 7,
            Shl | Shr => 8,
            Add | Sub => 9,
            Mul | Div | Mod => 10,
            Pow => 11,
        }
    }

    pub fn is_runtime(self) -> bool {
        !matches!(self, BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod | BinaryOp::Pow)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
    /// Resolved width; 0 until elaboration.
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Const {
        value: u64,
        width: Option<u32>,
    },
    Ident(String),
    /// `name[index]`: a memory word after elaboration, a bit-select before.
    Index {
        name: String,
        index: Box<Expr>,
    },
    Slice {
        name: String,
        msb: Box<Expr>,
        lsb: Box<Expr>,
    },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Concat(Vec<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span, width: 0 }
    }

    pub fn with_width(kind: ExprKind, width: u32) -> Self {
        Expr { kind, span: Span::default(), width }
    }

    /// A sized literal with its width already resolved.
    pub fn literal(value: u64, width: u32) -> Self {
        Expr::with_width(ExprKind::Const { value, width: Some(width) }, width)
    }

    pub fn signal(name: &str, width: u32) -> Self {
        Expr::with_width(ExprKind::Ident(name.to_string()), width)
    }

    pub fn binary(op: BinaryOp, left: Expr, right: Expr) -> Self {
        let width = crate::bv::binary_width(op, left.width, right.width);
        Expr::with_width(ExprKind::Binary(op, Box::new(left), Box::new(right)), width)
    }

    pub fn as_const(&self) -> Option<u64> {
        match self.kind {
            ExprKind::Const { value, .. } => Some(value),
            _ => None,
        }
    }

    /// Every signal name read by this expression, in first-occurrence order.
    pub fn signals(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_signals(&mut out);
        out
    }

    fn collect_signals(&self, out: &mut Vec<String>) {
        let mut push = |n: &String| {
            if !out.contains(n) {
                out.push(n.clone());
            }
        };
        match &self.kind {
            ExprKind::Const { .. } => {}
            ExprKind::Ident(n) => push(n),
            ExprKind::Index { name, index } => {
                push(name);
                index.collect_signals(out);
            }
            ExprKind::Slice { name, msb, lsb } => {
                push(name);
                msb.collect_signals(out);
                lsb.collect_signals(out);
            }
            ExprKind::Unary(_, e) => e.collect_signals(out),
            ExprKind::Binary(_, a, b) => {
                a.collect_signals(out);
                b.collect_signals(out);
            }
            ExprKind::Concat(items) => items.iter().for_each(|e| e.collect_signals(out)),
            ExprKind::Ternary(c, t, e) => {
                c.collect_signals(out);
                t.collect_signals(out);
                e.collect_signals(out);
            }
        }
    }

    /// Literal leaves as `(value, width)`.
    pub fn constants(&self) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let ExprKind::Const { value, .. } = e.kind {
                out.push((value, e.width));
            }
        });
        out
    }

    pub fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Const { .. } | ExprKind::Ident(_) => {}
            ExprKind::Index { index, .. } => index.walk(f),
            ExprKind::Slice { msb, lsb, .. } => {
                msb.walk(f);
                lsb.walk(f);
            }
            ExprKind::Unary(_, e) => e.walk(f),
            ExprKind::Binary(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            ExprKind::Concat(items) => items.iter().for_each(|e| e.walk(f)),
            ExprKind::Ternary(c, t, e) => {
                c.walk(f);
                t.walk(f);
                e.walk(f);
            }
        }
    }

    fn strip_spans(&mut self) {
        self.span = Span::default();
        match &mut self.kind {
            ExprKind::Const { .. } | ExprKind::Ident(_) => {}
            ExprKind::Index { index, .. } => index.strip_spans(),
            ExprKind::Slice { msb, lsb, .. } => {
                msb.strip_spans();
                lsb.strip_spans();
            }
            ExprKind::Unary(_, e) => e.strip_spans(),
            ExprKind::Binary(_, a, b) => {
                a.strip_spans();
                b.strip_spans();
            }
            ExprKind::Concat(items) => items.iter_mut().for_each(Expr::strip_spans),
            ExprKind::Ternary(c, t, e) => {
                c.strip_spans();
                t.strip_spans();
                e.strip_spans();
            }
        }
    }
}

impl Stmt {
    pub fn new(kind: StmtKind, span: Span) -> Self {
        Stmt { kind, span }
    }

    pub fn walk(&self, f: &mut dyn FnMut(&Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::Block(items) => items.iter().for_each(|s| s.walk(f)),
            StmtKind::If { then_branch, else_branch, .. } => {
                then_branch.walk(f);
                if let Some(e) = else_branch {
                    e.walk(f);
                }
            }
            StmtKind::Assign { .. } | StmtKind::Display(_) | StmtKind::Empty => {}
        }
    }

    fn strip_spans(&mut self) {
        self.span = Span::default();
        match &mut self.kind {
            StmtKind::Block(items) => items.iter_mut().for_each(Stmt::strip_spans),
            StmtKind::If { cond, then_branch, else_branch } => {
                cond.strip_spans();
                then_branch.strip_spans();
                if let Some(e) = else_branch {
                    e.strip_spans();
                }
            }
            StmtKind::Assign { lhs, rhs, .. } => {
                if let LValue::Index { index, .. } = lhs {
                    index.strip_spans();
                }
                rhs.strip_spans();
            }
            StmtKind::Display(_) | StmtKind::Empty => {}
        }
    }
}

fn strip_range(r: &mut Option<Range>) {
    if let Some(r) = r {
        r.msb.strip_spans();
        r.lsb.strip_spans();
    }
}

impl Ast {
    /// Copy of the tree with every source position cleared, for structural
    /// comparison.
    pub fn without_spans(&self) -> Ast {
        let mut ast = self.clone();
        ast.span = Span::default();
        for p in &mut ast.params {
            p.span = Span::default();
            p.value.strip_spans();
        }
        for p in &mut ast.ports {
            p.span = Span::default();
            strip_range(&mut p.range);
        }
        for r in &mut ast.regs {
            r.span = Span::default();
            strip_range(&mut r.range);
        }
        for m in &mut ast.memories {
            m.span = Span::default();
            strip_range(&mut m.word);
            m.depth.msb.strip_spans();
            m.depth.lsb.strip_spans();
        }
        for p in &mut ast.processes {
            p.source_span = (0, 0);
            p.body.strip_spans();
        }
        ast
    }

    pub fn input_ports(&self) -> impl Iterator<Item = &PortDecl> {
        self.ports.iter().filter(|p| p.direction == Direction::Input)
    }
}
