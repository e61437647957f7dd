//! The constraint language: syntax trees, name resolution and sort
//! checking, evaluation, bag aggregates and relational helpers.

mod ast;
pub mod bag;
mod eval;
mod print;
mod resolve;

pub use ast::{BinOp, Binder, Expr, Quant, Role, RoleRef, UnOp};
pub use bag::{as_seq, bag_of, bagmax, bagmin, bagsum, pick_first, transitive_closure, Bag};
pub use eval::{evaluate, evaluate_bool, floor_divmod, image, Env, EvalError, Val};
pub use resolve::{accessor_name, is_builtin, resolve, resolve_axiom, Sort};

#[cfg(test)]
mod tests;
