use std::fmt;

use thiserror::Error;

/// Source position (1-based). `line == 0` means "no location".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelErrorKind {
    Lexical,
    Syntax,
    UnknownClass,
    UnknownRelation,
    UnknownName,
    UnknownAttribute,
    UnknownRole,
    AmbiguousRole,
    Duplicate,
    Cycle,
    TypeConflict,
    Sort,
    BadDiscriminator,
    BadRelation,
}

/// A load-time error in a model: lexical, syntactic, or a failure to resolve
/// or type the declarations.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{span}: {kind:?}: {message}")]
pub struct ModelError {
    pub kind: ModelErrorKind,
    pub span: Span,
    pub message: String,
    /// Tokens that would have been accepted, for syntax errors.
    pub expected: Vec<String>,
}

impl ModelError {
    pub fn new(kind: ModelErrorKind, span: Span, message: impl Into<String>) -> Self {
        ModelError {
            kind,
            span,
            message: message.into(),
            expected: Vec::new(),
        }
    }
}
