use std::collections::{BTreeMap, BTreeSet};

use super::{
    build_type_lattice, check_discriminators, resolve_class, AttrDomain, Axiom, ClassDef,
    FlatClass, ModelError, ModelErrorKind, Span, TypeLattice,
};
use crate::diag::Diagnostic;
use crate::expr::{resolve_axiom, Expr, RoleRef};
use crate::relations::{RelationDecl, RelationKind};

pub type RoleTarget = RoleRef;

/// A named global constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub expr: Expr,
    pub span: Span,
}

/// A complete, resolved OOCP: classes, relations and global constraints,
/// with every expression name-resolved and sort-checked.
#[derive(Clone, Debug)]
pub struct Model {
    pub classes: Vec<ClassDef>,
    pub relations: Vec<RelationDecl>,
    pub constraints: Vec<Constraint>,
    flat: BTreeMap<String, FlatClass>,
    lattice: TypeLattice,
    roles: BTreeMap<String, Vec<RoleTarget>>,
    enum_literals: BTreeSet<String>,
}

impl Model {
    /// Check and resolve the declarations. Every independent error is
    /// reported.
    pub fn new(
        classes: Vec<ClassDef>,
        relations: Vec<RelationDecl>,
        constraints: Vec<Constraint>,
    ) -> Result<Model, Vec<ModelError>> {
        let mut errors = Vec::new();
        duplicates(
            classes.iter().map(|c| (&c.name, c.span)),
            "class",
            &mut errors,
        );
        duplicates(
            relations.iter().map(|r| (&r.name, r.span)),
            "relation",
            &mut errors,
        );
        duplicates(
            constraints.iter().map(|c| (&c.name, c.span)),
            "constraint",
            &mut errors,
        );
        for c in &classes {
            let mut seen = BTreeSet::new();
            for d in &c.discriminators {
                if !seen.insert(d) {
                    errors.push(ModelError::new(
                        ModelErrorKind::Duplicate,
                        c.span,
                        format!("discriminator `{d}` declared twice in `{}`", c.name),
                    ));
                }
            }
            for (a, dom) in &c.attrs {
                let bad = match dom {
                    AttrDomain::IntRange(lo, hi) => lo > hi,
                    AttrDomain::Enum(vals) => {
                        vals.iter().collect::<BTreeSet<_>>().len() != vals.len() || vals.is_empty()
                    }
                    _ => false,
                };
                if bad {
                    errors.push(ModelError::new(
                        ModelErrorKind::Sort,
                        c.span,
                        format!(
                            "attribute `{a}` of `{}` has an empty or malformed domain",
                            c.name
                        ),
                    ));
                }
            }
        }
        let lattice = match build_type_lattice(&classes) {
            Ok(l) => l,
            Err(e) => {
                errors.push(e);
                return Err(errors);
            }
        };

        let mut flat = BTreeMap::new();
        for c in &classes {
            match resolve_class(&classes, &c.name) {
                Ok(f) => {
                    flat.insert(c.name.clone(), f);
                }
                Err(e) => errors.push(e),
            }
        }
        for c in &classes {
            for link in &c.parents {
                let Some(label) = &link.discriminator else {
                    continue;
                };
                let mut owners: Vec<&str> = vec![link.parent.as_str()];
                if let Some(f) = flat.get(&link.parent) {
                    owners.extend(f.ancestors.iter().map(String::as_str));
                }
                let declared = classes
                    .iter()
                    .filter(|k| owners.contains(&k.name.as_str()))
                    .any(|k| k.discriminators.contains(label));
                if !declared {
                    errors.push(ModelError::new(
                        ModelErrorKind::BadDiscriminator,
                        c.span,
                        format!(
                            "`{}` inherits `{}` via `{label}`, which no ancestor declares",
                            c.name, link.parent
                        ),
                    ));
                }
            }
        }

        let mut roles: BTreeMap<String, Vec<RoleTarget>> = BTreeMap::new();
        for r in &relations {
            check_relation_decl(r, &relations, &lattice, &mut errors);
            roles
                .entry(r.right_role().to_string())
                .or_default()
                .push(RoleRef {
                    relation: r.name.clone(),
                    inverse: false,
                });
            roles
                .entry(r.left_role().to_string())
                .or_default()
                .push(RoleRef {
                    relation: r.name.clone(),
                    inverse: true,
                });
        }
        if !errors.is_empty() {
            return Err(errors);
        }

        let enum_literals = classes
            .iter()
            .flat_map(|c| c.attrs.iter())
            .filter_map(|(_, d)| match d {
                AttrDomain::Enum(v) => Some(v.iter().cloned()),
                _ => None,
            })
            .flatten()
            .collect();

        let mut model = Model {
            classes,
            relations,
            constraints: Vec::new(),
            flat,
            lattice,
            roles,
            enum_literals,
        };

        // Resolve own invariants in the scope of each class, then flatten
        // again so inherited invariants are the resolved ones.
        let mut resolved_classes = model.classes.clone();
        for c in &mut resolved_classes {
            for ax in &mut c.invariants {
                match resolve_axiom(&ax.expr, &model, Some(&c.name), ax.span) {
                    Ok(e) => ax.expr = e,
                    Err(e) => errors.push(e),
                }
            }
        }
        let mut resolved_constraints = Vec::new();
        for c in constraints {
            match resolve_axiom(&c.expr, &model, None, c.span) {
                Ok(e) => resolved_constraints.push(Constraint { expr: e, ..c }),
                Err(e) => errors.push(e),
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        model.classes = resolved_classes;
        model.constraints = resolved_constraints;
        for c in &model.classes {
            let f = resolve_class(&model.classes, &c.name).map_err(|e| vec![e])?;
            model.flat.insert(c.name.clone(), f);
        }
        Ok(model)
    }

    pub fn flat(&self, class: &str) -> Option<&FlatClass> {
        self.flat.get(class)
    }

    pub fn flat_classes(&self) -> impl Iterator<Item = &FlatClass> {
        self.flat.values()
    }

    pub fn lattice(&self) -> &TypeLattice {
        &self.lattice
    }

    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn relation(&self, name: &str) -> Option<&RelationDecl> {
        self.relations.iter().find(|r| r.name == name)
    }

    pub fn constraint(&self, name: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.name == name)
    }

    /// Every relation/direction a role name may denote.
    pub fn roles(&self, name: &str) -> &[RoleTarget] {
        self.roles.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_enum_literal(&self, name: &str) -> bool {
        self.enum_literals.contains(name)
    }

    /// Static diagnostics that do not prevent loading: discriminator rules.
    pub fn check(&self) -> Vec<Diagnostic> {
        check_discriminators(&self.classes, &self.lattice)
    }

    /// All axioms with their owners, in declaration order: class invariants
    /// (own only) then global constraints.
    pub fn axioms(&self) -> impl Iterator<Item = (&str, &Axiom)> {
        self.classes
            .iter()
            .flat_map(|c| c.invariants.iter().map(move |a| (c.name.as_str(), a)))
    }

    /// A copy of the model without the named global constraint.
    pub fn without_constraint(&self, name: &str) -> Option<Model> {
        self.constraint(name)?;
        let mut m = self.clone();
        m.constraints.retain(|c| c.name != name);
        Some(m)
    }

    /// A copy of the model with one more global constraint (resolved here).
    pub fn with_constraint(&self, c: Constraint) -> Result<Model, ModelError> {
        let expr = resolve_axiom(&c.expr, self, None, c.span)?;
        let mut m = self.clone();
        m.constraints.push(Constraint { expr, ..c });
        Ok(m)
    }
}

fn duplicates<'a>(
    names: impl Iterator<Item = (&'a String, Span)>,
    what: &str,
    errors: &mut Vec<ModelError>,
) {
    let mut seen = BTreeSet::new();
    for (n, span) in names {
        if !seen.insert(n) {
            errors.push(ModelError::new(
                ModelErrorKind::Duplicate,
                span,
                format!("{what} `{n}` declared twice"),
            ));
        }
    }
}

fn check_relation_decl(
    r: &RelationDecl,
    all: &[RelationDecl],
    lattice: &TypeLattice,
    errors: &mut Vec<ModelError>,
) {
    let bad = |msg: String| ModelError::new(ModelErrorKind::BadRelation, r.span, msg);
    for c in [&r.source, &r.target] {
        if !lattice.contains(c) {
            errors.push(ModelError::new(
                ModelErrorKind::UnknownClass,
                r.span,
                format!("relation `{}` refers to unknown class `{c}`", r.name),
            ));
        }
    }
    if r.is_ordered() && r.kind != RelationKind::Function {
        errors.push(bad(format!(
            "ordered relation `{}` must be a function to sequences",
            r.name
        )));
    }
    if r.inverse_total && !r.composition {
        errors.push(bad(format!(
            "`{}`: `total` applies to compositions only",
            r.name
        )));
    }
    for (side, m) in [
        ("source", r.multiplicity.per_source),
        ("target", r.multiplicity.per_target),
    ] {
        if m.max.is_some_and(|x| x < m.min) {
            errors.push(bad(format!("`{}`: empty {side} multiplicity {m}", r.name)));
        }
    }
    if let Some(p) = &r.subset_of {
        match all.iter().find(|x| &x.name == p) {
            None => errors.push(ModelError::new(
                ModelErrorKind::UnknownRelation,
                r.span,
                format!("`{}` is a subset of unknown relation `{p}`", r.name),
            )),
            Some(parent) => {
                if parent.source != r.source || parent.target != r.target {
                    errors.push(bad(format!(
                        "`{}` ({} -> {}) cannot be a subset of `{p}` ({} -> {})",
                        r.name, r.source, r.target, parent.source, parent.target
                    )));
                }
                if parent.is_ordered() || r.is_ordered() {
                    errors.push(bad(format!(
                        "subset constraints need unordered relations (`{}`)",
                        r.name
                    )));
                }
            }
        }
    }
    if let Some(reif) = &r.reified_by {
        if !lattice.contains(&reif.class) {
            errors.push(ModelError::new(
                ModelErrorKind::UnknownClass,
                r.span,
                format!("`{}` is reified by unknown class `{}`", r.name, reif.class),
            ));
        }
        if r.is_ordered() {
            errors.push(bad(format!(
                "ordered relation `{}` cannot be reified",
                r.name
            )));
        }
    }
}
