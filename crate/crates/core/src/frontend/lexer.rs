use super::ast::Span;
use super::{Diagnostic, FrontendError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sym {
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Semi,
    Comma,
    Colon,
    Question,
    At,
    Hash,
    Dot,
    Assign,
    LessEq,
    EqEq,
    NotEq,
    Less,
    Greater,
    GreaterEq,
    AndAnd,
    OrOr,
    Amp,
    Pipe,
    Caret,
    Tilde,
    Bang,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Pow,
    Shl,
    Shr,
}

impl Sym {
    pub fn text(self) -> &'static str {
        use Sym::*;
        match self {
            LParen => "(",
            RParen => ")",
            LBracket => "[",
            RBracket => "]",
            LBrace => "{",
            RBrace => "}",
            Semi => ";",
            Comma => ",",
            Colon => ":",
            Question => "?",
            At => "@",
            Hash => "#",
            Dot => ".",
            Assign => "=",
            LessEq => "<=",
            EqEq => "==",
            NotEq => "!=",
            Less => "<",
            Greater => ">",
            GreaterEq => ">=",
            AndAnd => "&&",
            OrOr => "||",
            Amp => "&",
            Pipe => "|",
            Caret => "^",
            Tilde => "~",
            Bang => "!",
            Plus => "+",
            Minus => "-",
            Star => "*",
            Slash => "/",
            Percent => "%",
            Pow => "**",
            Shl => "<<",
            Shr => ">>",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    System(String),
    Number { value: u64, width: Option<u32> },
    Str(String),
    Sym(Sym),
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("`{s}`"),
            TokenKind::System(s) => format!("`{s}`"),
            TokenKind::Number { .. } => "number".into(),
            TokenKind::Str(_) => "string".into(),
            TokenKind::Sym(s) => format!("`{}`", s.text()),
            TokenKind::Eof => "end of file".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

pub fn tokenize(path: &str, src: &str) -> Result<Vec<Token>, FrontendError> {
    Lexer { path, chars: src.chars().collect(), pos: 0, line: 1, col: 1 }.run()
}

struct Lexer<'a> {
    path: &'a str,
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
}

impl Lexer<'_> {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, span: Span, msg: impl Into<String>) -> FrontendError {
        FrontendError::Syntax(Diagnostic::error(self.path, span, msg))
    }

    fn run(mut self) -> Result<Vec<Token>, FrontendError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia()?;
            let span = Span::new(self.line, self.col);
            let Some(c) = self.peek(0) else {
                out.push(Token { kind: TokenKind::Eof, span });
                return Ok(out);
            };
            let kind = if c.is_ascii_alphabetic() || c == '_' {
                TokenKind::Ident(self.word())
            } else if c == '$' {
                self.bump();
                TokenKind::System(format!("${}", self.word()))
            } else if c.is_ascii_digit() || c == '\'' {
                self.number(span)?
            } else if c == '"' {
                self.string(span)?
            } else {
                TokenKind::Sym(self.symbol(span)?)
            };
            out.push(Token { kind, span });
        }
    }

    fn skip_trivia(&mut self) -> Result<(), FrontendError> {
        loop {
            match (self.peek(0), self.peek(1)) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) => {
                    while let Some(c) = self.peek(0) {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                (Some('/'), Some('*')) => {
                    let span = Span::new(self.line, self.col);
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(0), self.peek(1)) {
                            (Some('*'), Some('/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => return Err(self.error(span, "unterminated block comment")),
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            if c.is_ascii_alphanumeric() || c == '_' || c == '$' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn digits(&mut self, radix: u32) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            if c == '_' {
                self.bump();
            } else if c.is_digit(radix) || matches!(c, 'x' | 'X' | 'z' | 'Z' | '?') {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn number(&mut self, span: Span) -> Result<TokenKind, FrontendError> {
        let mut size = None;
        if self.peek(0) != Some('\'') {
            let text = self.digits(10);
            let v = parse_digits(&text, 10).ok_or_else(|| self.error(span, "malformed number"))?;
            if self.peek(0) != Some('\'') {
                return Ok(TokenKind::Number { value: v, width: None });
            }
            if v == 0 || v > u32::MAX as u64 {
                return Err(self.error(span, format!("invalid literal size {v}")));
            }
            size = Some(v as u32);
        }
        self.bump(); // '
        if matches!(self.peek(0), Some('s') | Some('S')) {
            return Err(FrontendError::Unsupported(Diagnostic::error(
                self.path,
                span,
                "unsupported feature: signed literals",
            )));
        }
        let radix = match self.bump().map(|c| c.to_ascii_lowercase()) {
            Some('b') => 2,
            Some('o') => 8,
            Some('d') => 10,
            Some('h') => 16,
            _ => return Err(self.error(span, "expected base specifier after `'`")),
        };
        while matches!(self.peek(0), Some(' ') | Some('\t')) {
            self.bump();
        }
        let text = self.digits(radix);
        if text.is_empty() {
            return Err(self.error(span, "missing digits in based literal"));
        }
        if text.chars().any(|c| matches!(c, 'x' | 'X' | 'z' | 'Z' | '?')) {
            return Err(FrontendError::Unsupported(Diagnostic::error(
                self.path,
                span,
                "unsupported feature: four-state literal digits (x/z)",
            )));
        }
        let value = parse_digits(&text, radix).ok_or_else(|| self.error(span, "literal value exceeds 64 bits"))?;
        Ok(TokenKind::Number { value, width: size })
    }

    fn string(&mut self, span: Span) -> Result<TokenKind, FrontendError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                Some('"') => return Ok(TokenKind::Str(s)),
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some(c) => s.push(c),
                    None => return Err(self.error(span, "unterminated string")),
                },
                Some('\n') | None => return Err(self.error(span, "unterminated string")),
                Some(c) => s.push(c),
            }
        }
    }

    fn symbol(&mut self, span: Span) -> Result<Sym, FrontendError> {
        use Sym::*;
        let c = self.bump().unwrap();
        let next = self.peek(0);
        let two = |s: &mut Self, sym| {
            s.bump();
            Ok(sym)
        };
        match (c, next) {
            ('<', Some('=')) => two(self, LessEq),
            ('<', Some('<')) => two(self, Shl),
            ('>', Some('=')) => two(self, GreaterEq),
            ('>', Some('>')) => two(self, Shr),
            ('=', Some('=')) => two(self, EqEq),
            ('!', Some('=')) => two(self, NotEq),
            ('&', Some('&')) => two(self, AndAnd),
            ('|', Some('|')) => two(self, OrOr),
            ('*', Some('*')) => two(self, Pow),
            ('(', _) => Ok(LParen),
            (')', _) => Ok(RParen),
            ('[', _) => Ok(LBracket),
            (']', _) => Ok(RBracket),
            ('{', _) => Ok(LBrace),
            ('}', _) => Ok(RBrace),
            (';', _) => Ok(Semi),
            (',', _) => Ok(Comma),
            (':', _) => Ok(Colon),
            ('?', _) => Ok(Question),
            ('@', _) => Ok(At),
            ('#', _) => Ok(Hash),
            ('.', _) => Ok(Dot),
            ('=', _) => Ok(Assign),
            ('<', _) => Ok(Less),
            ('>', _) => Ok(Greater),
            ('&', _) => Ok(Amp),
            ('|', _) => Ok(Pipe),
            ('^', _) => Ok(Caret),
            ('~', _) => Ok(Tilde),
            ('!', _) => Ok(Bang),
            ('+', _) => Ok(Plus),
            ('-', _) => Ok(Minus),
            ('*', _) => Ok(Star),
            ('/', _) => Ok(Slash),
            ('%', _) => Ok(Percent),
            _ => Err(self.error(span, format!("unexpected character `{c}`"))),
        }
    }
}

fn parse_digits(text: &str, radix: u32) -> Option<u64> {
    if text.is_empty() {
        return None;
    }
    u64::from_str_radix(text, radix).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize("t.v", src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn sized_and_unsized_numbers() {
        assert_eq!(
            kinds("4'h4 1'b0 16'h12_34 42 'hff"),
            vec![
                TokenKind::Number { value: 4, width: Some(4) },
                TokenKind::Number { value: 0, width: Some(1) },
                TokenKind::Number { value: 0x1234, width: Some(16) },
                TokenKind::Number { value: 42, width: None },
                TokenKind::Number { value: 0xff, width: None },
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn operators_and_comments() {
        let k = kinds("a <= b ** 2; // tail\n/* block */ c == d");
        assert!(k.contains(&TokenKind::Sym(Sym::LessEq)));
        assert!(k.contains(&TokenKind::Sym(Sym::Pow)));
        assert!(k.contains(&TokenKind::Sym(Sym::EqEq)));
        assert_eq!(k.len(), 10);
    }

    #[test]
    fn positions_are_one_based() {
        let toks = tokenize("t.v", "a\n  b").unwrap();
        assert_eq!(toks[0].span, Span::new(1, 1));
        assert_eq!(toks[1].span, Span::new(2, 3));
    }

    #[test]
    fn rejects_four_state_digits() {
        assert!(matches!(tokenize("t.v", "4'bx01z"), Err(FrontendError::Unsupported(_))));
    }
}
