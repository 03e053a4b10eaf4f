use std::fmt::Write;

use super::ast::*;

/// Renders an Ast back into the accepted source subset. Ports are printed
/// in ANSI style and parameters as body declarations, so parsing the output
/// yields the same tree.
pub fn print_ast(ast: &Ast) -> String {
    let mut out = String::new();
    if ast.ports.is_empty() {
        let _ = writeln!(out, "module {};", ast.module_name);
    } else {
        let _ = writeln!(out, "module {} (", ast.module_name);
        for (i, p) in ast.ports.iter().enumerate() {
            let dir = match p.direction {
                Direction::Input => "input",
                Direction::Output => "output",
            };
            let reg = if p.is_reg { " reg" } else { "" };
            let sep = if i + 1 == ast.ports.len() { "" } else { "," };
            let _ = writeln!(out, "  {dir}{reg}{} {}{sep}", range_text(&p.range), p.name);
        }
        out.push_str(");\n");
    }
    for p in &ast.params {
        let kw = if p.local { "localparam" } else { "parameter" };
        let _ = writeln!(out, "  {kw} {} = {};", p.name, print_expr(&p.value));
    }
    for r in &ast.regs {
        let _ = writeln!(out, "  reg{} {};", range_text(&r.range), r.name);
    }
    for m in &ast.memories {
        let _ = writeln!(
            out,
            "  reg{} {} [{}:{}];",
            range_text(&m.word),
            m.name,
            print_expr(&m.depth.msb),
            print_expr(&m.depth.lsb)
        );
    }
    for p in &ast.processes {
        let head = match &p.kind {
            ProcessKind::ClockedPosedge { clock } => format!("always @(posedge {clock})"),
            ProcessKind::Combinational => "always @(*)".to_string(),
        };
        out.push_str("  ");
        out.push_str(&head);
        print_stmt_tail(&mut out, &p.body, 1);
    }
    out.push_str("endmodule\n");
    out
}

fn range_text(r: &Option<Range>) -> String {
    match r {
        Some(r) => format!(" [{}:{}]", print_expr(&r.msb), print_expr(&r.lsb)),
        None => String::new(),
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

/// Prints a statement that follows a header on the same line (`always`,
/// `if (...)`, `else`). Blocks open on that line, anything else goes on
/// its own indented line.
fn print_stmt_tail(out: &mut String, s: &Stmt, level: usize) {
    if let StmtKind::Block(items) = &s.kind {
        out.push_str(" begin\n");
        for item in items {
            print_stmt(out, item, level + 1);
        }
        indent(out, level);
        out.push_str("end\n");
    } else {
        out.push('\n');
        print_stmt(out, s, level + 1);
    }
}

/// True when `s` ends in an `if` without `else`, which would capture a
/// following `else` on re-parse.
fn dangles(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::If { else_branch: None, .. } => true,
        StmtKind::If { else_branch: Some(e), .. } => dangles(e),
        _ => false,
    }
}

fn print_stmt(out: &mut String, s: &Stmt, level: usize) {
    indent(out, level);
    match &s.kind {
        StmtKind::Block(items) => {
            out.push_str("begin\n");
            for item in items {
                print_stmt(out, item, level + 1);
            }
            indent(out, level);
            out.push_str("end\n");
        }
        StmtKind::If { cond, then_branch, else_branch } => {
            let _ = write!(out, "if ({})", print_expr(cond));
            if else_branch.is_some() && dangles(then_branch) {
                let wrapped = Stmt::new(StmtKind::Block(vec![(**then_branch).clone()]), then_branch.span);
                print_stmt_tail(out, &wrapped, level);
            } else {
                print_stmt_tail(out, then_branch, level);
            }
            if let Some(e) = else_branch {
                indent(out, level);
                out.push_str("else");
                print_stmt_tail(out, e, level);
            }
        }
        StmtKind::Assign { lhs, rhs, blocking } => {
            let target = match lhs {
                LValue::Signal(n) => n.clone(),
                LValue::Index { name, index } => format!("{name}[{}]", print_expr(index)),
            };
            let op = if *blocking { "=" } else { "<=" };
            let _ = writeln!(out, "{target} {op} {};", print_expr(rhs));
        }
        StmtKind::Display(text) => {
            let _ = writeln!(out, "$display(\"{}\");", escape(text));
        }
        StmtKind::Empty => out.push_str(";\n"),
    }
}

fn escape(text: &str) -> String {
    let mut s = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '"' => s.push_str("\\\""),
            '\\' => s.push_str("\\\\"),
            '\n' => s.push_str("\\n"),
            '\t' => s.push_str("\\t"),
            c => s.push(c),
        }
    }
    s
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr_into(&mut out, e, 0);
    out
}

const UNARY_PREC: u8 = 12;

fn expr_prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Ternary(..) => 0,
        ExprKind::Binary(op, ..) => op.precedence(),
        ExprKind::Unary(..) => UNARY_PREC,
        _ => UNARY_PREC + 1,
    }
}

fn expr_into(out: &mut String, e: &Expr, min_prec: u8) {
    let prec = expr_prec(e);
    let paren = prec < min_prec;
    if paren {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Const { value, width } => match width {
            Some(1) => {
                let _ = write!(out, "1'b{value}");
            }
            Some(w) => {
                let _ = write!(out, "{w}'h{value:x}");
            }
            None => {
                let _ = write!(out, "{value}");
            }
        },
        ExprKind::Ident(n) => out.push_str(n),
        ExprKind::Index { name, index } => {
            out.push_str(name);
            out.push('[');
            expr_into(out, index, 0);
            out.push(']');
        }
        ExprKind::Slice { name, msb, lsb } => {
            out.push_str(name);
            out.push('[');
            expr_into(out, msb, 0);
            out.push(':');
            expr_into(out, lsb, 0);
            out.push(']');
        }
        ExprKind::Unary(op, inner) => {
            out.push_str(op.symbol());
            // Keep `- -x` from lexing as anything else.
            if matches!(inner.kind, ExprKind::Unary(..)) {
                out.push(' ');
            }
            expr_into(out, inner, UNARY_PREC);
        }
        ExprKind::Binary(op, a, b) => {
            let p = op.precedence();
            expr_into(out, a, p);
            let _ = write!(out, " {} ", op.symbol());
            expr_into(out, b, p + 1);
        }
        ExprKind::Concat(items) => {
            out.push('{');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr_into(out, item, 0);
            }
            out.push('}');
        }
        ExprKind::Ternary(c, t, f) => {
            expr_into(out, c, 1);
            out.push_str(" ? ");
            expr_into(out, t, 0);
            out.push_str(" : ");
            expr_into(out, f, 0);
        }
    }
    if paren {
        out.push(')');
    }
}
