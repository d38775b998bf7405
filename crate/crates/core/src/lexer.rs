//! Tokenizer shared by the model-file and property parsers.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    /// Punctuation or operator, e.g. `+`, `->`, `<=`, `[`.
    Sym(&'static str),
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

// longest first
const SYMBOLS: &[&str] = &[
    "->", "<=", ">=", "!=", "=?", "+", "-", "*", "^", "(", ")", "[", "]", ",", ":", "@", "=", "<",
    ">", "!", "&", "|", "/",
];

/// Tokenize a single line. `line` is 1-based and only used for error positions.
pub fn tokenize(src: &str, line: usize) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line,
                column,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse::<f64>()
                .map_err(|_| Error::syntax(line, column, format!("malformed number `{text}`")))?;
            out.push(Token {
                tok: Tok::Number(value),
                line,
                column,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                out.push(Token {
                    tok: Tok::Sym(s),
                    line,
                    column,
                });
                i += s.chars().count();
            }
            None => return Err(Error::syntax(line, column, format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

/// Cursor over a token slice with positioned errors.
pub struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    end_column: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Token], line: usize, end_column: usize) -> Self {
        Self {
            toks,
            pos: 0,
            line,
            end_column,
        }
    }

    pub fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    pub fn peek_at(&self, offset: usize) -> Option<&'a Tok> {
        self.toks.get(self.pos + offset).map(|t| &t.tok)
    }

    pub fn next(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.pos).map(|t| &t.tok);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, sym: &str) -> Result<()> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{sym}`")))
        }
    }

    pub fn ident(&mut self) -> Result<&'a str> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error("expected a name")),
        }
    }

    pub fn number(&mut self) -> Result<f64> {
        let neg = self.eat("-");
        match self.peek() {
            Some(Tok::Number(v)) => {
                self.pos += 1;
                Ok(if neg { -v } else { *v })
            }
            _ => Err(self.error("expected a number")),
        }
    }

    /// (line, column) of the current token, or the end of the line.
    pub fn position(&self) -> (usize, usize) {
        match self.toks.get(self.pos) {
            Some(t) => (t.line, t.column),
            None => (self.line, self.end_column),
        }
    }

    /// (line, column) of the previously consumed token.
    pub fn prev_position(&self) -> (usize, usize) {
        match self.pos.checked_sub(1).and_then(|p| self.toks.get(p)) {
            Some(t) => (t.line, t.column),
            None => self.position(),
        }
    }

    pub fn error(&self, message: impl Into<String>) -> Error {
        let (line, column) = self.position();
        let found = match self.peek() {
            Some(Tok::Ident(s)) => format!(", found `{s}`"),
            Some(Tok::Number(v)) => format!(", found `{v}`"),
            Some(Tok::Sym(s)) => format!(", found `{s}`"),
            None => ", found end of input".to_string(),
        };
        Error::syntax(line, column, format!("{}{found}", message.into()))
    }
}
