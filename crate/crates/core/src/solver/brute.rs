//! Generate-and-test enumeration used as the reference semantics for the
//! solver. It shares only the bounds with the search and checks every
//! candidate with the validator.

use std::collections::{BTreeMap, BTreeSet};

use super::space::{Bounds, Refs};
use super::{SolveConfig, SolveError};
use crate::instance::{canonicalize, validate, Instance, Object, PartialInstance};
use crate::model::{Model, ObjectRef, Value};

/// Largest number of candidate instances the oracle will look at.
pub const ORACLE_LIMIT: u128 = 10_000_000;

enum Choice {
    Attr(ObjectRef, String, Value),
    Pair(String, ObjectRef, ObjectRef, bool),
    Seq(String, ObjectRef, Vec<ObjectRef>),
    Reif(String, (ObjectRef, ObjectRef), Option<ObjectRef>),
}

pub fn brute_force_enumerate(
    model: &Model,
    partial: &PartialInstance,
    config: &SolveConfig,
) -> Result<BTreeSet<Instance>, SolveError> {
    let bounds = Bounds::new(model, partial, config)?;
    let tables = object_tables(&bounds);

    let mut spaces = Vec::new();
    let mut size: u128 = 0;
    for objects in &tables {
        let dims = dimensions(&bounds, objects)?;
        let n = dims
            .iter()
            .try_fold(1u128, |acc, d| acc.checked_mul(d.len() as u128))
            .unwrap_or(u128::MAX);
        size = size.saturating_add(n);
        if size > ORACLE_LIMIT {
            return Err(SolveError::OracleTooLarge {
                size,
                limit: ORACLE_LIMIT,
            });
        }
        spaces.push((objects, dims));
    }

    let mut out = BTreeSet::new();
    for (objects, dims) in spaces {
        if dims.iter().any(Vec::is_empty) {
            continue;
        }
        let mut idx = vec![0usize; dims.len()];
        loop {
            let inst = build(partial, objects, &dims, &idx);
            if validate(model, &inst, config).valid {
                out.insert(canonicalize(&inst));
            }
            // Odometer step.
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < dims[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    Ok(out)
}

/// Every object table: a class for each input object, and for each fresh
/// slot either nothing or one of its group's classes.
fn object_tables(bounds: &Bounds<'_>) -> Vec<Vec<(ObjectRef, String)>> {
    let mut tables: Vec<Vec<(ObjectRef, String)>> = vec![Vec::new()];
    for (o, choices) in bounds.partial.objects.iter().zip(&bounds.input_classes) {
        tables = tables
            .into_iter()
            .flat_map(|t| {
                choices.iter().map(move |c| {
                    let mut t = t.clone();
                    t.push((o.r, c.clone()));
                    t
                })
            })
            .collect();
    }
    // Slot choices, `None` for an absent slot.
    let mut slots: Vec<Vec<Option<&str>>> = vec![Vec::new()];
    for g in &bounds.groups {
        for _ in 0..g.slots {
            slots = slots
                .into_iter()
                .flat_map(|s| {
                    std::iter::once(None)
                        .chain(g.classes.iter().map(|c| Some(c.as_str())))
                        .map(move |c| {
                            let mut s = s.clone();
                            s.push(c);
                            s
                        })
                })
                .collect();
        }
    }
    let mut out = Vec::new();
    for s in &slots {
        let present: Vec<&str> = s.iter().flatten().copied().collect();
        if bounds.exact_fresh.is_some_and(|n| n != present.len())
            || present.len() > bounds.fresh_refs.len()
        {
            continue;
        }
        for t in &tables {
            let mut objects = t.clone();
            objects.extend(
                bounds
                    .fresh_refs
                    .iter()
                    .zip(&present)
                    .map(|(r, c)| (*r, c.to_string())),
            );
            objects.sort();
            out.push(objects);
        }
    }
    out
}

fn dimensions(
    bounds: &Bounds<'_>,
    objects: &[(ObjectRef, String)],
) -> Result<Vec<Vec<Choice>>, SolveError> {
    let partial = bounds.partial;
    let extents = bounds.extents(objects);
    let empty = Refs::new();
    let ext = |c: &str| extents.get(c).unwrap_or(&empty);
    let mut dims = Vec::new();
    for (r, class) in objects {
        let input = partial.objects.iter().find(|o| o.r == *r);
        for (a, values) in bounds.attr_values(input, class) {
            dims.push(
                values
                    .into_iter()
                    .map(|v| Choice::Attr(*r, a.clone(), v))
                    .collect(),
            );
        }
    }
    for decl in &bounds.model.relations {
        let name = &decl.name;
        let closed = partial.closed.contains(name);
        let (srcs, tgts) = (ext(&decl.source), ext(&decl.target));
        if decl.is_ordered() {
            let given = partial.sequences.get(name);
            let all = bounds.seq_values(decl, tgts)?;
            for &s in srcs {
                let options = all.iter().filter(|q| match given.and_then(|m| m.get(&s)) {
                    Some(g) => *q == g,
                    None => !closed || q.is_empty(),
                });
                dims.push(
                    options
                        .map(|q| Choice::Seq(name.clone(), s, q.clone()))
                        .collect(),
                );
            }
        } else {
            let given = partial.relations.get(name);
            for &s in srcs {
                for &t in tgts {
                    let options: &[bool] = if given.is_some_and(|g| g.contains(&(s, t))) {
                        &[true]
                    } else if closed {
                        &[false]
                    } else {
                        &[false, true]
                    };
                    dims.push(
                        options
                            .iter()
                            .map(|&b| Choice::Pair(name.clone(), s, t, b))
                            .collect(),
                    );
                }
            }
        }
        if let Some(reif) = &decl.reified_by {
            let given = partial.reified.get(name);
            let data = ext(&reif.class);
            for &s in srcs {
                for &t in tgts {
                    let options: Vec<Option<ObjectRef>> = match given.and_then(|m| m.get(&(s, t))) {
                        Some(d) => vec![Some(*d)],
                        None if closed => vec![None],
                        None => std::iter::once(None)
                            .chain(data.iter().map(|d| Some(*d)))
                            .collect(),
                    };
                    dims.push(
                        options
                            .into_iter()
                            .map(|d| Choice::Reif(name.clone(), (s, t), d))
                            .collect(),
                    );
                }
            }
        }
    }
    Ok(dims)
}

fn build(
    partial: &PartialInstance,
    objects: &[(ObjectRef, String)],
    dims: &[Vec<Choice>],
    idx: &[usize],
) -> Instance {
    let mut table: BTreeMap<ObjectRef, Object> = objects
        .iter()
        .map(|(r, c)| (*r, Object::new(*r, c.clone())))
        .collect();
    let mut inst = Instance {
        pool: partial.pool.clone(),
        ..Instance::default()
    };
    for (d, &i) in dims.iter().zip(idx) {
        match &d[i] {
            Choice::Attr(r, a, v) => {
                table
                    .get_mut(r)
                    .expect("object")
                    .attrs
                    .insert(a.clone(), v.clone());
            }
            Choice::Pair(rel, s, t, true) => {
                inst.relations
                    .entry(rel.clone())
                    .or_default()
                    .insert((*s, *t));
            }
            Choice::Pair(..) => {}
            Choice::Seq(rel, s, q) => {
                inst.sequences
                    .entry(rel.clone())
                    .or_default()
                    .insert(*s, q.clone());
            }
            Choice::Reif(rel, pair, Some(d)) => {
                inst.reified
                    .entry(rel.clone())
                    .or_default()
                    .insert(*pair, *d);
            }
            Choice::Reif(..) => {}
        }
    }
    inst.objects = table.into_values().collect();
    inst.normalize();
    inst
}
