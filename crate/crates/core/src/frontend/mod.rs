//! Verilog-subset frontend: lexing, parsing, pretty-printing and
//! parameter elaboration.

pub mod ast;
mod elaborate;
mod lexer;
mod parser;
mod printer;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

pub use ast::Ast;
pub use elaborate::{elaborate, ElaboratedDesign, SignalInfo, SignalKind, SignalTable};
pub use printer::{print_ast, print_expr};

use ast::Span;

/// A design file loaded into memory.
#[derive(Debug, Clone)]
pub struct SourceDesign {
    pub path: String,
    pub source: String,
    /// Byte offset at which each line starts.
    line_starts: Vec<usize>,
}

impl SourceDesign {
    pub fn new(path: impl Into<String>, source: impl Into<String>) -> Self {
        let source = source.into();
        let mut line_starts = vec![0];
        line_starts.extend(source.match_indices('\n').map(|(i, _)| i + 1));
        SourceDesign { path: path.into(), source, line_starts }
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let p = path.as_ref();
        let text = std::fs::read_to_string(p)?;
        Ok(SourceDesign::new(p.display().to_string(), text))
    }

    /// Maps a byte offset to a 1-based (line, column) pair.
    pub fn line_col(&self, offset: usize) -> (u32, u32) {
        let line = match self.line_starts.binary_search(&offset) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let col = self.source[self.line_starts[line]..offset.min(self.source.len())].chars().count();
        (line as u32 + 1, col as u32 + 1)
    }

    pub fn line_count(&self) -> usize {
        self.line_starts.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// `file:line:col: severity: message`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub line: u32,
    pub col: u32,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn error(path: &str, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            path: path.to_string(),
            line: span.line,
            col: span.col,
            severity: Severity::Error,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}:{}: {}: {}", self.path, self.line, self.col, sev, self.message)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FrontendError {
    #[error("{0}")]
    Syntax(Diagnostic),
    #[error("{0}")]
    Unsupported(Diagnostic),
    #[error("{0}")]
    Elaboration(Diagnostic),
}

impl FrontendError {
    pub fn diagnostic(&self) -> &Diagnostic {
        match self {
            FrontendError::Syntax(d) | FrontendError::Unsupported(d) | FrontendError::Elaboration(d) => d,
        }
    }
}

/// Parses one module of the supported subset.
pub fn parse_design(src: &SourceDesign) -> Result<Ast, FrontendError> {
    if src.source.trim().is_empty() {
        return Err(FrontendError::Syntax(Diagnostic::error(&src.path, Span::new(1, 1), "empty design source")));
    }
    let tokens = lexer::tokenize(&src.path, &src.source)?;
    parser::Parser::new(&src.path, tokens).parse_module()
}

/// Parses and elaborates in one step, keeping the file path in diagnostics.
pub fn load_design(src: &SourceDesign, overrides: &BTreeMap<String, i64>) -> Result<ElaboratedDesign, FrontendError> {
    let ast = parse_design(src)?;
    elaborate::elaborate_at(&src.path, &ast, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_index_covers_every_byte() {
        let s = SourceDesign::new("x.v", "ab\ncd\n\ne");
        assert_eq!(s.line_col(0), (1, 1));
        assert_eq!(s.line_col(2), (1, 3));
        assert_eq!(s.line_col(3), (2, 1));
        assert_eq!(s.line_col(6), (3, 1));
        assert_eq!(s.line_col(7), (4, 1));
        assert_eq!(s.line_count(), 4);
    }

    #[test]
    fn diagnostic_format() {
        let d = Diagnostic::error("ram.v", Span::new(3, 7), "boom");
        assert_eq!(d.to_string(), "ram.v:3:7: error: boom");
    }
}
