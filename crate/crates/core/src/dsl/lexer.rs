use std::fmt;

use crate::model::{ModelError, ModelErrorKind, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

// Longest first.
const PUNCT: &[&str] = &[
    "~>", "->", "=>", "..", "!=", "<=", ">=", "<", ">", "=", "+", "-", "*", "#", "(", ")", "{",
    "}", ",", ";", ":", ".", "@", "|", "/",
];

/// Split `src` into tokens. Unknown characters are reported and skipped, so
/// the parser still sees the rest of the file.
pub fn lex(src: &str) -> (Vec<Token>, Vec<ModelError>) {
    let mut toks = Vec::new();
    let mut errs = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let bump = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let span = Span::new(line, col);
        if c.is_whitespace() {
            bump(&mut i, &mut line, &mut col, 1);
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            let mut n = 0;
            while i + n < chars.len() && chars[i + n] != '\n' {
                n += 1;
            }
            bump(&mut i, &mut line, &mut col, n);
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut n = 0;
            while i + n < chars.len()
                && (chars[i + n].is_ascii_alphanumeric() || chars[i + n] == '_')
            {
                n += 1;
            }
            let s: String = chars[i..i + n].iter().collect();
            toks.push(Token {
                tok: Tok::Ident(s),
                span,
            });
            bump(&mut i, &mut line, &mut col, n);
        } else if c.is_ascii_digit() {
            let mut n = 0;
            while i + n < chars.len() && chars[i + n].is_ascii_digit() {
                n += 1;
            }
            let s: String = chars[i..i + n].iter().collect();
            match s.parse() {
                Ok(v) => toks.push(Token {
                    tok: Tok::Int(v),
                    span,
                }),
                Err(_) => errs.push(ModelError::new(
                    ModelErrorKind::Lexical,
                    span,
                    format!("integer literal `{s}` is too large"),
                )),
            }
            bump(&mut i, &mut line, &mut col, n);
        } else if let Some(p) = PUNCT.iter().find(|p| {
            p.chars()
                .enumerate()
                .all(|(k, pc)| chars.get(i + k) == Some(&pc))
        }) {
            toks.push(Token {
                tok: Tok::Punct(p),
                span,
            });
            bump(&mut i, &mut line, &mut col, p.chars().count());
        } else {
            errs.push(ModelError::new(
                ModelErrorKind::Lexical,
                span,
                format!("unexpected character `{c}`"),
            ));
            bump(&mut i, &mut line, &mut col, 1);
        }
    }
    toks.push(Token {
        tok: Tok::Eof,
        span: Span::new(line, col),
    });
    (toks, errs)
}
