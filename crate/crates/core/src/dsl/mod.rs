//! The `.oocp` modeling language: lexer, recovering parser, pretty printer
//! and the expanded (flattened) listing.

mod lexer;
mod parser;
mod print;

pub use crate::model::ModelError;
pub use parser::parse_expr;
pub use print::{expand, print_model};

use crate::model::Model;

/// Parse and resolve a model. Syntax errors from every declaration are
/// reported together; resolution runs only on syntactically clean input.
pub fn parse_model(src: &str) -> Result<Model, Vec<ModelError>> {
    let (decls, errors) = parser::parse_decls(src);
    if !errors.is_empty() {
        return Err(errors);
    }
    Model::new(decls.classes, decls.relations, decls.constraints)
}
