use std::collections::HashSet;

use super::ast::*;
use super::lexer::{Sym, Token, TokenKind};
use super::{Diagnostic, FrontendError};

const UNSUPPORTED_KEYWORDS: &[(&str, &str)] = &[
    ("task", "task"),
    ("function", "function"),
    ("fork", "fork/join"),
    ("generate", "generate block"),
    ("genvar", "genvar"),
    ("initial", "initial block"),
    ("assign", "continuous assignment"),
    ("wire", "wire declaration"),
    ("integer", "integer variable"),
    ("real", "real variable"),
    ("case", "case statement"),
    ("casez", "case statement"),
    ("casex", "case statement"),
    ("for", "for loop"),
    ("while", "while loop"),
    ("repeat", "repeat loop"),
    ("forever", "forever loop"),
    ("wait", "wait statement"),
    ("disable", "disable statement"),
    ("defparam", "defparam"),
    ("specify", "specify block"),
    ("inout", "inout port"),
    ("negedge", "negedge sensitivity"),
];

fn unsupported_name(word: &str) -> Option<&'static str> {
    UNSUPPORTED_KEYWORDS.iter().find(|(k, _)| *k == word).map(|(_, n)| *n)
}

pub struct Parser<'a> {
    path: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

impl<'a> Parser<'a> {
    pub fn new(path: &'a str, tokens: Vec<Token>) -> Self {
        Parser { path, tokens, pos: 0 }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, k: usize) -> &Token {
        &self.tokens[(self.pos + k).min(self.tokens.len() - 1)]
    }

    fn span(&self) -> Span {
        self.peek().span
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn syntax(&self, span: Span, msg: impl Into<String>) -> FrontendError {
        FrontendError::Syntax(Diagnostic::error(self.path, span, msg))
    }

    fn unsupported(&self, span: Span, what: &str) -> FrontendError {
        FrontendError::Unsupported(Diagnostic::error(self.path, span, format!("unsupported feature: {what}")))
    }

    fn expected(&self, what: &str) -> FrontendError {
        let t = self.peek();
        self.syntax(t.span, format!("expected {what}, found {}", t.kind.describe()))
    }

    fn is_sym(&self, s: Sym) -> bool {
        self.peek().kind == TokenKind::Sym(s)
    }

    fn eat_sym(&mut self, s: Sym) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: Sym) -> Result<Span, FrontendError> {
        if self.is_sym(s) {
            Ok(self.bump().span)
        } else {
            Err(self.expected(&format!("`{}`", s.text())))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(w) if w == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<Span, FrontendError> {
        if self.is_kw(kw) {
            Ok(self.bump().span)
        } else {
            Err(self.expected(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self) -> Result<(String, Span), FrontendError> {
        match &self.peek().kind {
            TokenKind::Ident(w) => {
                if let Some(what) = unsupported_name(w) {
                    return Err(self.unsupported(self.span(), what));
                }
                if is_reserved(w) {
                    return Err(self.expected("identifier"));
                }
                let w = w.clone();
                let t = self.bump();
                Ok((w, t.span))
            }
            _ => Err(self.expected("identifier")),
        }
    }

    pub fn parse_module(mut self) -> Result<Ast, FrontendError> {
        let span = self.expect_kw("module")?;
        let (module_name, _) = self.ident()?;
        let mut ast = Ast {
            module_name,
            params: Vec::new(),
            ports: Vec::new(),
            regs: Vec::new(),
            memories: Vec::new(),
            processes: Vec::new(),
            span,
        };
        if self.eat_sym(Sym::Hash) {
            self.parse_header_params(&mut ast)?;
        }
        // Names listed in a non-ANSI header, awaiting direction declarations.
        let mut pending: Vec<(String, Span)> = Vec::new();
        if self.eat_sym(Sym::LParen) {
            if !self.is_sym(Sym::RParen) {
                if self.is_kw("input") || self.is_kw("output") || self.is_kw("inout") {
                    self.parse_ansi_ports(&mut ast)?;
                } else {
                    loop {
                        pending.push(self.ident()?);
                        if !self.eat_sym(Sym::Comma) {
                            break;
                        }
                    }
                }
            }
            self.expect_sym(Sym::RParen)?;
        }
        self.expect_sym(Sym::Semi)?;

        loop {
            let t = self.peek().clone();
            match &t.kind {
                TokenKind::Eof => return Err(self.expected("`endmodule`")),
                TokenKind::Ident(w) => match w.as_str() {
                    "endmodule" => {
                        self.bump();
                        break;
                    }
                    "parameter" | "localparam" => self.parse_param_stmt(&mut ast)?,
                    "input" | "output" => self.parse_port_stmt(&mut ast, &pending)?,
                    "reg" => self.parse_reg_stmt(&mut ast, &pending)?,
                    "always" => {
                        let p = self.parse_always(ast.processes.len())?;
                        ast.processes.push(p);
                    }
                    "module" => return Err(self.unsupported(t.span, "nested module declaration")),
                    other => {
                        if let Some(what) = unsupported_name(other) {
                            return Err(self.unsupported(t.span, what));
                        }
                        if is_reserved(other) {
                            return Err(self.expected("module item or `endmodule`"));
                        }
                        if matches!(self.peek_at(1).kind, TokenKind::Ident(_) | TokenKind::Sym(Sym::Hash)) {
                            return Err(self.unsupported(t.span, "module instantiation"));
                        }
                        return Err(self.expected("module item or `endmodule`"));
                    }
                },
                _ => return Err(self.expected("module item or `endmodule`")),
            }
        }
        if self.peek().kind != TokenKind::Eof {
            if self.is_kw("module") {
                return Err(self.unsupported(self.span(), "multiple modules (flatten the design first)"));
            }
            return Err(self.expected("end of file"));
        }
        for (name, span) in &pending {
            if !ast.ports.iter().any(|p| &p.name == name) {
                return Err(self.syntax(*span, format!("port `{name}` has no direction declaration")));
            }
        }
        // Header order wins for non-ANSI port lists.
        if !pending.is_empty() {
            let order: Vec<&String> = pending.iter().map(|(n, _)| n).collect();
            ast.ports.sort_by_key(|p| order.iter().position(|n| **n == p.name).unwrap_or(usize::MAX));
        }
        self.check_unique(&ast)?;
        Ok(ast)
    }

    fn check_unique(&self, ast: &Ast) -> Result<(), FrontendError> {
        let mut seen = HashSet::new();
        let names = ast
            .params
            .iter()
            .map(|p| (&p.name, p.span))
            .chain(ast.ports.iter().map(|p| (&p.name, p.span)))
            .chain(ast.regs.iter().map(|r| (&r.name, r.span)))
            .chain(ast.memories.iter().map(|m| (&m.name, m.span)));
        for (name, span) in names {
            if !seen.insert(name.clone()) {
                return Err(self.syntax(span, format!("duplicate declaration of `{name}`")));
            }
        }
        Ok(())
    }

    fn parse_header_params(&mut self, ast: &mut Ast) -> Result<(), FrontendError> {
        self.expect_sym(Sym::LParen)?;
        loop {
            self.eat_kw("parameter");
            let (name, span) = self.ident()?;
            self.expect_sym(Sym::Assign)?;
            let value = self.expr()?;
            ast.params.push(ParamDecl { name, value, local: false, span });
            if !self.eat_sym(Sym::Comma) {
                break;
            }
        }
        self.expect_sym(Sym::RParen)?;
        Ok(())
    }

    fn parse_param_stmt(&mut self, ast: &mut Ast) -> Result<(), FrontendError> {
        let local = self.is_kw("localparam");
        self.bump();
        if self.is_sym(Sym::LBracket) {
            // Ranges on parameters carry no meaning in the two-state subset.
            self.range()?;
        }
        loop {
            let (name, span) = self.ident()?;
            self.expect_sym(Sym::Assign)?;
            let value = self.expr()?;
            ast.params.push(ParamDecl { name, value, local, span });
            if !self.eat_sym(Sym::Comma) {
                break;
            }
        }
        self.expect_sym(Sym::Semi)?;
        Ok(())
    }

    fn direction(&mut self) -> Result<Direction, FrontendError> {
        if self.eat_kw("input") {
            Ok(Direction::Input)
        } else if self.eat_kw("output") {
            Ok(Direction::Output)
        } else if self.is_kw("inout") {
            Err(self.unsupported(self.span(), "inout port"))
        } else {
            Err(self.expected("port direction"))
        }
    }

    /// `[wire|reg] [range]` following a direction keyword.
    fn port_type(&mut self) -> Result<(bool, Option<Range>), FrontendError> {
        let mut is_reg = false;
        if self.eat_kw("reg") {
            is_reg = true;
        } else {
            // `wire` is harmless on a port.
            self.eat_kw("wire");
        }
        let range = if self.is_sym(Sym::LBracket) { Some(self.range()?) } else { None };
        Ok((is_reg, range))
    }

    fn parse_ansi_ports(&mut self, ast: &mut Ast) -> Result<(), FrontendError> {
        let mut direction = self.direction()?;
        let (mut is_reg, mut range) = self.port_type()?;
        loop {
            let (name, span) = self.ident()?;
            ast.ports.push(PortDecl { name, direction, is_reg, range: range.clone(), span });
            if !self.eat_sym(Sym::Comma) {
                break;
            }
            if self.is_kw("input") || self.is_kw("output") || self.is_kw("inout") {
                direction = self.direction()?;
                let t = self.port_type()?;
                is_reg = t.0;
                range = t.1;
            }
        }
        Ok(())
    }

    fn parse_port_stmt(&mut self, ast: &mut Ast, pending: &[(String, Span)]) -> Result<(), FrontendError> {
        let start = self.span();
        let direction = self.direction()?;
        let (is_reg, range) = self.port_type()?;
        loop {
            let (name, span) = self.ident()?;
            if !pending.iter().any(|(n, _)| *n == name) {
                return Err(self.syntax(span, format!("`{name}` is not listed in the module port list")));
            }
            ast.ports.push(PortDecl { name, direction, is_reg, range: range.clone(), span });
            if !self.eat_sym(Sym::Comma) {
                break;
            }
        }
        let _ = start;
        self.expect_sym(Sym::Semi)?;
        Ok(())
    }

    fn parse_reg_stmt(&mut self, ast: &mut Ast, pending: &[(String, Span)]) -> Result<(), FrontendError> {
        self.bump();
        let range = if self.is_sym(Sym::LBracket) { Some(self.range()?) } else { None };
        loop {
            let (name, span) = self.ident()?;
            if self.is_sym(Sym::LBracket) {
                let depth = self.range()?;
                if self.is_sym(Sym::LBracket) {
                    return Err(self.unsupported(self.span(), "multi-dimensional memory"));
                }
                ast.memories.push(MemDecl { name, word: range.clone(), depth, span });
            } else if self.is_sym(Sym::Assign) {
                return Err(self.unsupported(self.span(), "declaration initializer"));
            } else if let Some(i) = ast.ports.iter().position(|p| {
                p.name == name
                    && p.direction == Direction::Output
                    && !p.is_reg
                    && pending.iter().any(|(n, _)| *n == name)
            }) {
                // `output r; reg r;` style.
                ast.ports[i].is_reg = true;
                if ast.ports[i].range.is_none() {
                    ast.ports[i].range = range.clone();
                }
            } else {
                ast.regs.push(RegDecl { name, range: range.clone(), span });
            }
            if !self.eat_sym(Sym::Comma) {
                break;
            }
        }
        self.expect_sym(Sym::Semi)?;
        Ok(())
    }

    fn range(&mut self) -> Result<Range, FrontendError> {
        self.expect_sym(Sym::LBracket)?;
        let msb = self.expr()?;
        self.expect_sym(Sym::Colon)?;
        let lsb = self.expr()?;
        self.expect_sym(Sym::RBracket)?;
        Ok(Range { msb, lsb })
    }

    fn parse_always(&mut self, id: usize) -> Result<Process, FrontendError> {
        let start = self.expect_kw("always")?;
        self.expect_sym(Sym::At)?;
        let kind = if self.eat_sym(Sym::Star) {
            ProcessKind::Combinational
        } else {
            self.expect_sym(Sym::LParen)?;
            let kind = if self.eat_sym(Sym::Star) {
                ProcessKind::Combinational
            } else if self.eat_kw("posedge") {
                let (clock, _) = self.ident()?;
                if self.is_kw("or") || self.is_sym(Sym::Comma) {
                    return Err(self.unsupported(self.span(), "multi-edge sensitivity list"));
                }
                ProcessKind::ClockedPosedge { clock }
            } else if self.is_kw("negedge") {
                return Err(self.unsupported(self.span(), "negedge sensitivity"));
            } else {
                return Err(self.unsupported(self.span(), "explicit sensitivity list (use @(*))"));
            };
            self.expect_sym(Sym::RParen)?;
            kind
        };
        let body = self.stmt()?;
        let end = self.tokens[self.pos.saturating_sub(1)].span.line;
        Ok(Process { id, kind, body, source_span: (start.line, end) })
    }

    fn stmt(&mut self) -> Result<Stmt, FrontendError> {
        let span = self.span();
        let tok = self.peek().clone();
        match &tok.kind {
            TokenKind::Sym(Sym::Semi) => {
                self.bump();
                Ok(Stmt::new(StmtKind::Empty, span))
            }
            TokenKind::Sym(Sym::Hash) => Err(self.unsupported(span, "delay control")),
            TokenKind::Sym(Sym::At) => Err(self.unsupported(span, "event control inside a process")),
            TokenKind::System(name) => {
                if name != "$display" {
                    return Err(self.unsupported(span, &format!("system task `{name}`")));
                }
                self.bump();
                self.expect_sym(Sym::LParen)?;
                let text = match self.bump().kind {
                    TokenKind::Str(s) => s,
                    _ => return Err(self.syntax(span, "expected string literal in $display")),
                };
                if self.is_sym(Sym::Comma) {
                    return Err(self.unsupported(self.span(), "$display format arguments"));
                }
                self.expect_sym(Sym::RParen)?;
                self.expect_sym(Sym::Semi)?;
                Ok(Stmt::new(StmtKind::Display(text), span))
            }
            TokenKind::Ident(w) => match w.as_str() {
                "begin" => {
                    self.bump();
                    if self.is_sym(Sym::Colon) {
                        return Err(self.unsupported(self.span(), "named block"));
                    }
                    let mut items = Vec::new();
                    while !self.is_kw("end") {
                        if self.peek().kind == TokenKind::Eof || self.is_kw("endmodule") {
                            return Err(self.expected("`end`"));
                        }
                        items.push(self.stmt()?);
                    }
                    self.bump();
                    Ok(Stmt::new(StmtKind::Block(items), span))
                }
                "if" => {
                    self.bump();
                    self.expect_sym(Sym::LParen)?;
                    let cond = self.expr()?;
                    self.expect_sym(Sym::RParen)?;
                    let then_branch = Box::new(self.stmt()?);
                    let else_branch = if self.eat_kw("else") { Some(Box::new(self.stmt()?)) } else { None };
                    Ok(Stmt::new(StmtKind::If { cond, then_branch, else_branch }, span))
                }
                "end" => Err(self.syntax(span, "unbalanced `end`")),
                "else" => Err(self.syntax(span, "`else` without matching `if`")),
                other => {
                    if let Some(what) = unsupported_name(other) {
                        return Err(self.unsupported(span, what));
                    }
                    self.assignment()
                }
            },
            _ => Err(self.expected("statement")),
        }
    }

    fn assignment(&mut self) -> Result<Stmt, FrontendError> {
        let span = self.span();
        let (name, _) = self.ident()?;
        let lhs = if self.eat_sym(Sym::LBracket) {
            let index = self.expr()?;
            if self.is_sym(Sym::Colon) {
                return Err(self.unsupported(self.span(), "part-select assignment target"));
            }
            self.expect_sym(Sym::RBracket)?;
            LValue::Index { name, index }
        } else {
            LValue::Signal(name)
        };
        let blocking = if self.eat_sym(Sym::Assign) {
            true
        } else if self.eat_sym(Sym::LessEq) {
            false
        } else {
            return Err(self.expected("`=` or `<=`"));
        };
        if self.is_sym(Sym::Hash) {
            return Err(self.unsupported(self.span(), "intra-assignment delay"));
        }
        let rhs = self.expr()?;
        self.expect_sym(Sym::Semi)?;
        Ok(Stmt::new(StmtKind::Assign { lhs, rhs, blocking }, span))
    }

    pub fn expr(&mut self) -> Result<Expr, FrontendError> {
        let cond = self.binary(1)?;
        if self.is_sym(Sym::Question) {
            let span = self.bump().span;
            let t = self.expr()?;
            self.expect_sym(Sym::Colon)?;
            let e = self.expr()?;
            return Ok(Expr::new(ExprKind::Ternary(Box::new(cond), Box::new(t), Box::new(e)), span));
        }
        Ok(cond)
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        let TokenKind::Sym(s) = self.peek().kind else { return None };
        Some(match s {
            Sym::OrOr => BinaryOp::LogicalOr,
            Sym::AndAnd => BinaryOp::LogicalAnd,
            Sym::Pipe => BinaryOp::Or,
            Sym::Caret => BinaryOp::Xor,
            Sym::Amp => BinaryOp::And,
            Sym::EqEq => BinaryOp::Eq,
            Sym::NotEq => BinaryOp::Ne,
            Sym::Less => BinaryOp::Lt,
            Sym::LessEq => BinaryOp::Le,
            Sym::Greater => BinaryOp::Gt,
            Sym::GreaterEq => BinaryOp::Ge,
            Sym::Shl => BinaryOp::Shl,
            Sym::Shr => BinaryOp::Shr,
            Sym::Plus => BinaryOp::Add,
            Sym::Minus => BinaryOp::Sub,
            Sym::Star => BinaryOp::Mul,
            Sym::Slash => BinaryOp::Div,
            Sym::Percent => BinaryOp::Mod,
            Sym::Pow => BinaryOp::Pow,
            _ => return None,
        })
    }

    /// Precedence climbing; all binary operators are left-associative.
    fn binary(&mut self, min_prec: u8) -> Result<Expr, FrontendError> {
        let mut left = self.unary()?;
        while let Some(op) = self.binary_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let span = self.bump().span;
            let right = self.binary(prec + 1)?;
            left = Expr::new(ExprKind::Binary(op, Box::new(left), Box::new(right)), span);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        let span = self.span();
        let op = match self.peek().kind {
            TokenKind::Sym(Sym::Tilde) => Some(UnaryOp::Not),
            TokenKind::Sym(Sym::Bang) => Some(UnaryOp::LogicalNot),
            TokenKind::Sym(Sym::Minus) => Some(UnaryOp::Neg),
            TokenKind::Sym(Sym::Plus) => {
                self.bump();
                return self.unary();
            }
            TokenKind::Sym(Sym::Amp) | TokenKind::Sym(Sym::Pipe) | TokenKind::Sym(Sym::Caret) => {
                return Err(self.unsupported(span, "reduction operator"));
            }
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(op, Box::new(inner)), span));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, FrontendError> {
        let tok = self.peek().clone();
        let span = tok.span;
        match tok.kind {
            TokenKind::Number { value, width } => {
                self.bump();
                if let Some(w) = width {
                    if w > crate::bv::MAX_WIDTH {
                        return Err(self.unsupported(span, "literals wider than 64 bits"));
                    }
                }
                Ok(Expr::new(ExprKind::Const { value, width }, span))
            }
            TokenKind::Sym(Sym::LParen) => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(Sym::RParen)?;
                Ok(e)
            }
            TokenKind::Sym(Sym::LBrace) => {
                self.bump();
                let mut items = vec![self.expr()?];
                if self.is_sym(Sym::LBrace) {
                    return Err(self.unsupported(span, "replication"));
                }
                while self.eat_sym(Sym::Comma) {
                    items.push(self.expr()?);
                }
                self.expect_sym(Sym::RBrace)?;
                Ok(Expr::new(ExprKind::Concat(items), span))
            }
            TokenKind::Ident(_) => {
                let (name, _) = self.ident()?;
                if self.is_sym(Sym::LParen) {
                    return Err(self.unsupported(span, "function call"));
                }
                if self.is_sym(Sym::Dot) {
                    return Err(self.unsupported(span, "hierarchical reference"));
                }
                if self.eat_sym(Sym::LBracket) {
                    let first = self.expr()?;
                    if self.eat_sym(Sym::Colon) {
                        let lsb = self.expr()?;
                        self.expect_sym(Sym::RBracket)?;
                        return Ok(Expr::new(ExprKind::Slice { name, msb: Box::new(first), lsb: Box::new(lsb) }, span));
                    }
                    self.expect_sym(Sym::RBracket)?;
                    return Ok(Expr::new(ExprKind::Index { name, index: Box::new(first) }, span));
                }
                Ok(Expr::new(ExprKind::Ident(name), span))
            }
            TokenKind::System(name) => Err(self.unsupported(span, &format!("system function `{name}`"))),
            _ => Err(self.expected("expression")),
        }
    }
}

fn is_reserved(w: &str) -> bool {
    matches!(
        w,
        "module"
            | "endmodule"
            | "input"
            | "output"
            | "reg"
            | "parameter"
            | "localparam"
            | "always"
            | "posedge"
            | "begin"
            | "end"
            | "if"
            | "else"
    )
}
