//! The class system: class definitions, flattening of inheritance into full
//! class structures, type extents and discriminator rules.

mod compile;
mod error;
mod lattice;
mod objects;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::Expr;

pub use compile::{Constraint, Model, RoleTarget};
pub use error::{ModelError, ModelErrorKind, Span};
pub use lattice::{build_type_lattice, check_discriminators, type_extent, TypeLattice};
pub use objects::{check_object_table, get_attr, AttrError};

/// Opaque object reference, realized as a natural number. Numeric order is
/// the total order used wherever a "first" reference is needed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectRef(pub u64);

impl fmt::Display for ObjectRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// An attribute value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Sym(String),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn to_sort(&self) -> ScalarSort {
        match self {
            Value::Bool(_) => ScalarSort::Bool,
            Value::Int(_) => ScalarSort::Int,
            Value::Sym(_) => ScalarSort::Sym,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Sym(s) => f.write_str(s),
        }
    }
}

/// Sort of a scalar attribute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScalarSort {
    Int,
    Bool,
    Sym,
}

/// Declared domain of an attribute.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AttrDomain {
    IntRange(i64, i64),
    Nat,
    NatPositive,
    Enum(Vec<String>),
    Bool,
}

impl AttrDomain {
    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (AttrDomain::IntRange(lo, hi), Value::Int(i)) => lo <= i && i <= hi,
            (AttrDomain::Nat, Value::Int(i)) => *i >= 0,
            (AttrDomain::NatPositive, Value::Int(i)) => *i >= 1,
            (AttrDomain::Enum(vals), Value::Sym(s)) => vals.iter().any(|x| x == s),
            (AttrDomain::Bool, Value::Bool(_)) => true,
            _ => false,
        }
    }

    pub fn sort(&self) -> ScalarSort {
        match self {
            AttrDomain::IntRange(..) | AttrDomain::Nat | AttrDomain::NatPositive => ScalarSort::Int,
            AttrDomain::Enum(_) => ScalarSort::Sym,
            AttrDomain::Bool => ScalarSort::Bool,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, AttrDomain::Nat | AttrDomain::NatPositive)
    }

    /// Finite enumeration of the domain; unbounded naturals are clipped to
    /// `..= int_bound`.
    pub fn values(&self, int_bound: i64) -> Vec<Value> {
        match self {
            AttrDomain::IntRange(lo, hi) => (*lo..=*hi).map(Value::Int).collect(),
            AttrDomain::Nat => (0..=int_bound).map(Value::Int).collect(),
            AttrDomain::NatPositive => (1..=int_bound).map(Value::Int).collect(),
            AttrDomain::Enum(vals) => vals.iter().cloned().map(Value::Sym).collect(),
            AttrDomain::Bool => vec![Value::Bool(false), Value::Bool(true)],
        }
    }
}

impl fmt::Display for AttrDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrDomain::IntRange(lo, hi) => write!(f, "int {lo}..{hi}"),
            AttrDomain::Nat => f.write_str("nat"),
            AttrDomain::NatPositive => f.write_str("nat1"),
            AttrDomain::Enum(vals) => write!(f, "enum {{{}}}", vals.join(", ")),
            AttrDomain::Bool => f.write_str("bool"),
        }
    }
}

/// A named constraint attached to a class or to the model.
#[derive(Clone, Debug, PartialEq)]
pub struct Axiom {
    pub expr: Expr,
    pub span: Span,
    /// Class that declared the axiom (for inherited invariants).
    pub origin: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParentLink {
    pub parent: String,
    /// Discriminator label; `None` is the implicit `default` discriminator.
    pub discriminator: Option<String>,
    /// `(old, new)` attribute renames applied to the parent's structure.
    pub renames: Vec<(String, String)>,
}

impl ParentLink {
    pub fn new(parent: impl Into<String>) -> Self {
        ParentLink {
            parent: parent.into(),
            discriminator: None,
            renames: Vec::new(),
        }
    }

    pub fn label(&self) -> &str {
        self.discriminator
            .as_deref()
            .unwrap_or(DEFAULT_DISCRIMINATOR)
    }
}

pub const DEFAULT_DISCRIMINATOR: &str = "default";

/// A class definition as written: own attributes and invariants plus
/// inheritance links.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassDef {
    pub name: String,
    pub is_abstract: bool,
    pub discriminators: Vec<String>,
    pub parents: Vec<ParentLink>,
    pub attrs: Vec<(String, AttrDomain)>,
    pub invariants: Vec<Axiom>,
    pub span: Span,
}

impl ClassDef {
    pub fn new(name: impl Into<String>, is_abstract: bool) -> Self {
        ClassDef {
            name: name.into(),
            is_abstract,
            discriminators: Vec::new(),
            parents: Vec::new(),
            attrs: Vec::new(),
            invariants: Vec::new(),
            span: Span::default(),
        }
    }

    /// Discriminator labels usable by children: the declared ones, or the
    /// implicit default.
    pub fn labels(&self) -> Vec<&str> {
        if self.discriminators.is_empty() {
            vec![DEFAULT_DISCRIMINATOR]
        } else {
            self.discriminators.iter().map(String::as_str).collect()
        }
    }
}

/// A class after inheritance: the full structure and the full invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatClass {
    pub name: String,
    pub is_abstract: bool,
    pub attrs: BTreeMap<String, AttrDomain>,
    pub invariants: Vec<Axiom>,
    pub ancestors: BTreeSet<String>,
}

impl FlatClass {
    /// Conjunction of all inherited and own invariants (`true` when empty).
    pub fn invariant(&self) -> Expr {
        Expr::conjunction(self.invariants.iter().map(|a| a.expr.clone()))
    }
}

/// Flatten `name`: copy every parent's structure (after renaming) and
/// conjoin every parent's invariant (rewritten through the renames).
pub fn resolve_class(classes: &[ClassDef], name: &str) -> Result<FlatClass, ModelError> {
    let mut stack = Vec::new();
    resolve_rec(classes, name, &mut stack, Span::default())
}

fn find<'a>(classes: &'a [ClassDef], name: &str) -> Option<&'a ClassDef> {
    classes.iter().find(|c| c.name == name)
}

fn resolve_rec(
    classes: &[ClassDef],
    name: &str,
    stack: &mut Vec<String>,
    at: Span,
) -> Result<FlatClass, ModelError> {
    let def = find(classes, name).ok_or_else(|| {
        ModelError::new(
            ModelErrorKind::UnknownClass,
            at,
            format!("unknown class `{name}`"),
        )
    })?;
    if stack.iter().any(|s| s == name) {
        stack.push(name.to_string());
        return Err(ModelError::new(
            ModelErrorKind::Cycle,
            def.span,
            format!("cyclic inheritance: {}", stack.join(" -> ")),
        ));
    }
    stack.push(name.to_string());

    let mut attrs: BTreeMap<String, AttrDomain> = BTreeMap::new();
    let mut origin: BTreeMap<String, String> = BTreeMap::new();
    let mut invariants = Vec::new();
    let mut ancestors = BTreeSet::new();

    for link in &def.parents {
        let parent = resolve_rec(classes, &link.parent, stack, def.span)?;
        let mut rename: BTreeMap<&str, &str> = BTreeMap::new();
        for (old, new) in &link.renames {
            if !parent.attrs.contains_key(old) {
                return Err(ModelError::new(
                    ModelErrorKind::UnknownAttribute,
                    def.span,
                    format!(
                        "class `{}` renames `{old}` but `{}` has no such attribute",
                        def.name, link.parent
                    ),
                ));
            }
            rename.insert(old, new);
        }
        for (attr, dom) in &parent.attrs {
            let target = rename.get(attr.as_str()).copied().unwrap_or(attr.as_str());
            merge_attr(&mut attrs, &mut origin, target, dom, &link.parent, def)?;
        }
        for ax in &parent.invariants {
            let expr = if rename.is_empty() {
                ax.expr.clone()
            } else {
                ax.expr.rename_self_attrs(&rename)
            };
            invariants.push(Axiom {
                expr,
                span: ax.span,
                origin: ax.origin.clone(),
            });
        }
        ancestors.insert(link.parent.clone());
        ancestors.extend(parent.ancestors.iter().cloned());
    }

    let mut own = BTreeSet::new();
    for (attr, dom) in &def.attrs {
        if !own.insert(attr.as_str()) {
            return Err(ModelError::new(
                ModelErrorKind::Duplicate,
                def.span,
                format!("attribute `{attr}` declared twice in `{}`", def.name),
            ));
        }
        merge_attr(&mut attrs, &mut origin, attr, dom, &def.name, def)?;
    }
    invariants.extend(def.invariants.iter().cloned());

    stack.pop();
    Ok(FlatClass {
        name: def.name.clone(),
        is_abstract: def.is_abstract,
        attrs,
        invariants,
        ancestors,
    })
}

fn merge_attr(
    attrs: &mut BTreeMap<String, AttrDomain>,
    origin: &mut BTreeMap<String, String>,
    name: &str,
    dom: &AttrDomain,
    from: &str,
    def: &ClassDef,
) -> Result<(), ModelError> {
    match attrs.get(name) {
        Some(existing) if existing != dom => Err(ModelError::new(
            ModelErrorKind::TypeConflict,
            def.span,
            format!(
                "class `{}`: attribute `{name}` is `{existing}` in `{}` but `{dom}` in `{from}`; rename one of them",
                def.name,
                origin.get(name).map(String::as_str).unwrap_or("?"),
            ),
        )),
        Some(_) => Ok(()),
        None => {
            attrs.insert(name.to_string(), dom.clone());
            origin.insert(name.to_string(), from.to_string());
            Ok(())
        }
    }
}
