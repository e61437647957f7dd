//! Object-oriented constraint programs (OOCPs).
//!
//! A model is a set of classes (with multiple inheritance, attribute renaming
//! and discriminators), binary relations between class types, and first-order
//! constraints over the resulting object graph. This crate provides:
//!
//! * the `.oocp` modeling language ([`dsl`]),
//! * class flattening and type extents ([`model`]),
//! * relation kinds, multiplicities and roles ([`relations`]),
//! * the constraint language and its evaluator ([`expr`]),
//! * object graphs, validation and canonical forms ([`instance`]),
//! * bounded finite model generation ([`solver`]).

pub mod bundled;
pub mod diag;
pub mod dsl;
pub mod expr;
pub mod instance;
pub mod model;
pub mod relations;
pub mod solver;

pub use diag::{DiagCode, Diagnostic};
pub use dsl::{parse_model, print_model, ModelError};
pub use expr::{Bag, EvalError, Expr, Val};
pub use instance::{
    canonicalize, load_instance, save_instance, validate, Instance, Loaded, Object,
    PartialInstance, ValidationReport, World,
};
pub use model::{AttrDomain, ClassDef, FlatClass, Model, ObjectRef, TypeLattice, Value};
pub use relations::{Multiplicity, Ordering, RelationDecl, RelationKind};
pub use solver::{
    brute_force_enumerate, solve, solve_with, spawn_solve, BoundWarning, Solutions, SolveConfig,
    SolveError, SolveStatus, SolveSummary,
};
