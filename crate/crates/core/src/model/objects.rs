use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{Model, ObjectRef, Value};
use crate::diag::{DiagCode, Diagnostic};
use crate::instance::Instance;
use crate::solver::SolveConfig;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AttrError {
    #[error("dangling reference {0}")]
    DanglingReference(ObjectRef),
    #[error("object {0} has no attribute `{1}`")]
    UnknownAttribute(ObjectRef, String),
    #[error("object {0} carries no value for `{1}`")]
    MissingValue(ObjectRef, String),
}

/// Dereference `attr` on the object `r`. Own and inherited attributes are
/// looked up the same way: through the full structure of the creation class.
pub fn get_attr<'a>(
    model: &Model,
    instance: &'a Instance,
    r: ObjectRef,
    attr: &str,
) -> Result<&'a Value, AttrError> {
    let obj = instance
        .objects
        .iter()
        .find(|o| o.r == r)
        .ok_or(AttrError::DanglingReference(r))?;
    let known = model
        .flat(&obj.class)
        .is_some_and(|f| f.attrs.contains_key(attr));
    if !known {
        return Err(AttrError::UnknownAttribute(r, attr.to_string()));
    }
    obj.attrs
        .get(attr)
        .ok_or_else(|| AttrError::MissingValue(r, attr.to_string()))
}

/// Object-table axioms: unique references, no abstract instantiation,
/// the optional partition of the reference pool, and attribute domains.
pub fn check_object_table(
    model: &Model,
    instance: &Instance,
    config: &SolveConfig,
) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen: BTreeMap<ObjectRef, usize> = BTreeMap::new();
    for o in &instance.objects {
        *seen.entry(o.r).or_default() += 1;
    }
    for (r, n) in &seen {
        if *n > 1 {
            out.push(Diagnostic::new(
                DiagCode::DuplicateReference,
                r.to_string(),
                format!("reference {r} is used by {n} objects"),
            ));
        }
    }

    for o in &instance.objects {
        let Some(flat) = model.flat(&o.class) else {
            out.push(Diagnostic::new(
                DiagCode::UnknownClass,
                o.r.to_string(),
                format!("object {} has unknown class `{}`", o.r, o.class),
            ));
            continue;
        };
        if flat.is_abstract {
            out.push(Diagnostic::new(
                DiagCode::AbstractInstantiation,
                o.r.to_string(),
                format!("object {} is created as abstract class `{}`", o.r, o.class),
            ));
        }
        for (attr, dom) in &flat.attrs {
            match o.attrs.get(attr) {
                None => out.push(Diagnostic::new(
                    DiagCode::MissingAttribute,
                    format!("{}.{attr}", o.r),
                    format!("object {} has no value for `{attr}`", o.r),
                )),
                Some(v) if !dom.contains(v) => out.push(Diagnostic::new(
                    DiagCode::DomainViolation,
                    format!("{}.{attr}", o.r),
                    format!("value {v} is outside `{dom}`"),
                )),
                Some(_) => {}
            }
        }
        for attr in o.attrs.keys() {
            if !flat.attrs.contains_key(attr) {
                out.push(Diagnostic::new(
                    DiagCode::UnknownAttribute,
                    format!("{}.{attr}", o.r),
                    format!("`{attr}` is not part of the structure of `{}`", o.class),
                ));
            }
        }
    }

    if config.partition {
        let pool: Option<BTreeSet<ObjectRef>> = instance.pool.clone().or_else(|| {
            (config.pool_size > 0).then(|| (1..=config.pool_size as u64).map(ObjectRef).collect())
        });
        if let Some(pool) = pool {
            for r in &pool {
                if !seen.contains_key(r) {
                    out.push(Diagnostic::new(
                        DiagCode::UnusedReference,
                        r.to_string(),
                        format!("pool reference {r} belongs to no class"),
                    ));
                }
            }
            for r in seen.keys() {
                if !pool.contains(r) {
                    out.push(Diagnostic::new(
                        DiagCode::ReferenceOutsidePool,
                        r.to_string(),
                        format!("reference {r} is not in the reference pool"),
                    ));
                }
            }
        }
    }
    out
}
