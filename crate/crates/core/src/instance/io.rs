//! JSON instance files.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AttrSpec, Instance, Loaded, Object, PartialInstance, PartialObject, Tuples};
use crate::model::{Model, ObjectRef, Value};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> LoadError {
    LoadError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    format: Option<u32>,
    #[serde(default)]
    objects: Vec<RawObject>,
    #[serde(default)]
    relations: BTreeMap<String, Vec<(u64, u64)>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    sequences: BTreeMap<String, BTreeMap<u64, Vec<u64>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    reified: BTreeMap<String, Vec<RawReif>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pool: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    closed: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObject {
    #[serde(rename = "ref")]
    r: u64,
    class: String,
    #[serde(default)]
    attrs: BTreeMap<String, RawAttr>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawAttr {
    Exact(Value),
    OneOf {
        #[serde(rename = "in")]
        one_of: Vec<Value>,
    },
    Range {
        range: (i64, i64),
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReif {
    pair: (u64, u64),
    data: u64,
}

/// Parse an instance file against `model`. Files whose objects all have
/// concrete classes and exact values for every attribute, and which close
/// no relation, load as complete instances; anything else is partial.
pub fn load_instance(model: &Model, text: &str) -> Result<Loaded, LoadError> {
    let raw: RawFile = serde_json::from_str(text).map_err(|e| LoadError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if let Some(v) = raw.format {
        if v != FORMAT_VERSION {
            return Err(schema("format", format!("unsupported format version {v}")));
        }
    }

    let mut complete = raw.closed.is_empty();
    let mut objects = Vec::new();
    let mut refs = BTreeSet::new();
    for (i, o) in raw.objects.into_iter().enumerate() {
        let path = format!("objects[{i}]");
        let Some(flat) = model.flat(&o.class) else {
            return Err(schema(
                format!("{path}.class"),
                format!("unknown class `{}`", o.class),
            ));
        };
        if flat.is_abstract {
            complete = false;
        }
        let mut attrs = BTreeMap::new();
        for (a, v) in o.attrs {
            let Some(dom) = flat.attrs.get(&a) else {
                return Err(schema(
                    format!("{path}.attrs.{a}"),
                    format!("`{}` has no attribute `{a}`", o.class),
                ));
            };
            let spec = match v {
                RawAttr::Exact(v) => {
                    if v.to_sort() != dom.sort() {
                        return Err(schema(
                            format!("{path}.attrs.{a}"),
                            format!("value {v} does not fit `{dom}`"),
                        ));
                    }
                    AttrSpec::Is(v)
                }
                RawAttr::OneOf { one_of } => {
                    complete = false;
                    AttrSpec::OneOf(one_of.into_iter().collect())
                }
                RawAttr::Range { range: (lo, hi) } => {
                    complete = false;
                    AttrSpec::Range(lo, hi)
                }
            };
            attrs.insert(a, spec);
        }
        if flat.attrs.len() != attrs.len() {
            complete = false;
        }
        refs.insert(ObjectRef(o.r));
        objects.push(PartialObject {
            r: ObjectRef(o.r),
            class: o.class,
            attrs,
        });
    }

    let check_ref = |path: &str, r: u64| -> Result<ObjectRef, LoadError> {
        let r = ObjectRef(r);
        if refs.contains(&r) {
            Ok(r)
        } else {
            Err(schema(path, format!("reference {r} names no object")))
        }
    };
    let check_rel = |path: &str, name: &str| -> Result<(), LoadError> {
        if model.relation(name).is_some() {
            Ok(())
        } else {
            Err(schema(path, format!("unknown relation `{name}`")))
        }
    };

    let mut relations = BTreeMap::new();
    for (name, pairs) in raw.relations {
        let path = format!("relations.{name}");
        check_rel(&path, &name)?;
        let mut t = Tuples::new();
        for (i, (s, d)) in pairs.into_iter().enumerate() {
            let p = format!("{path}[{i}]");
            t.insert((check_ref(&p, s)?, check_ref(&p, d)?));
        }
        relations.insert(name, t);
    }
    let mut sequences = BTreeMap::new();
    for (name, seqs) in raw.sequences {
        let path = format!("sequences.{name}");
        check_rel(&path, &name)?;
        let mut m = BTreeMap::new();
        for (s, q) in seqs {
            let p = format!("{path}.{s}");
            let s = check_ref(&p, s)?;
            let q = q
                .into_iter()
                .map(|t| check_ref(&p, t))
                .collect::<Result<Vec<_>, _>>()?;
            m.insert(s, q);
        }
        sequences.insert(name, m);
    }
    let mut reified = BTreeMap::new();
    for (name, entries) in raw.reified {
        let path = format!("reified.{name}");
        check_rel(&path, &name)?;
        let mut m = BTreeMap::new();
        for (i, e) in entries.into_iter().enumerate() {
            let p = format!("{path}[{i}]");
            let key = (check_ref(&p, e.pair.0)?, check_ref(&p, e.pair.1)?);
            if m.insert(key, check_ref(&p, e.data)?).is_some() {
                return Err(schema(
                    p,
                    format!("pair ({},{}) carries data twice", key.0, key.1),
                ));
            }
        }
        reified.insert(name, m);
    }
    for (i, name) in raw.closed.iter().enumerate() {
        check_rel(&format!("closed[{i}]"), name)?;
    }
    let pool = raw.pool.map(|p| p.into_iter().map(ObjectRef).collect());

    if complete {
        let objects = objects
            .into_iter()
            .map(|o| Object {
                r: o.r,
                class: o.class,
                attrs: o
                    .attrs
                    .into_iter()
                    .map(|(k, v)| match v {
                        AttrSpec::Is(v) => (k, v),
                        _ => unreachable!("complete objects have exact values"),
                    })
                    .collect(),
            })
            .collect();
        Ok(Loaded::Complete(Instance {
            objects,
            relations,
            sequences,
            reified,
            pool,
        }))
    } else {
        Ok(Loaded::Partial(PartialInstance {
            objects,
            relations,
            sequences,
            reified,
            pool,
            closed: raw.closed.into_iter().collect(),
        }))
    }
}

fn raw_common(
    relations: &BTreeMap<String, Tuples>,
    sequences: &BTreeMap<String, BTreeMap<ObjectRef, Vec<ObjectRef>>>,
    reified: &BTreeMap<String, BTreeMap<(ObjectRef, ObjectRef), ObjectRef>>,
    pool: &Option<BTreeSet<ObjectRef>>,
) -> RawFile {
    RawFile {
        format: Some(FORMAT_VERSION),
        objects: Vec::new(),
        relations: relations
            .iter()
            .map(|(k, t)| (k.clone(), t.iter().map(|(a, b)| (a.0, b.0)).collect()))
            .collect(),
        sequences: sequences
            .iter()
            .map(|(k, m)| {
                (
                    k.clone(),
                    m.iter()
                        .map(|(s, q)| (s.0, q.iter().map(|r| r.0).collect()))
                        .collect(),
                )
            })
            .collect(),
        reified: reified
            .iter()
            .map(|(k, m)| {
                (
                    k.clone(),
                    m.iter()
                        .map(|(&(s, t), d)| RawReif {
                            pair: (s.0, t.0),
                            data: d.0,
                        })
                        .collect(),
                )
            })
            .collect(),
        pool: pool.as_ref().map(|p| p.iter().map(|r| r.0).collect()),
        closed: Vec::new(),
    }
}

fn to_text(raw: &RawFile) -> String {
    let mut s = serde_json::to_string_pretty(raw).expect("instance serializes");
    s.push('\n');
    s
}

/// Serialize a complete instance. Objects are written in reference order,
/// so the output does not depend on the order objects were added in.
pub fn save_instance(instance: &Instance) -> String {
    let mut raw = raw_common(
        &instance.relations,
        &instance.sequences,
        &instance.reified,
        &instance.pool,
    );
    let mut objects: Vec<&Object> = instance.objects.iter().collect();
    objects.sort();
    raw.objects = objects
        .into_iter()
        .map(|o| RawObject {
            r: o.r.0,
            class: o.class.clone(),
            attrs: o
                .attrs
                .iter()
                .map(|(k, v)| (k.clone(), RawAttr::Exact(v.clone())))
                .collect(),
        })
        .collect();
    to_text(&raw)
}

pub fn save_partial(partial: &PartialInstance) -> String {
    let mut raw = raw_common(
        &partial.relations,
        &partial.sequences,
        &partial.reified,
        &partial.pool,
    );
    let mut objects: Vec<&PartialObject> = partial.objects.iter().collect();
    objects.sort_by_key(|o| o.r);
    raw.objects = objects
        .into_iter()
        .map(|o| RawObject {
            r: o.r.0,
            class: o.class.clone(),
            attrs: o
                .attrs
                .iter()
                .map(|(k, v)| {
                    let raw = match v {
                        AttrSpec::Is(v) => RawAttr::Exact(v.clone()),
                        AttrSpec::OneOf(s) => RawAttr::OneOf {
                            one_of: s.iter().cloned().collect(),
                        },
                        AttrSpec::Range(lo, hi) => RawAttr::Range { range: (*lo, *hi) },
                    };
                    (k.clone(), raw)
                })
                .collect(),
        })
        .collect();
    raw.closed = partial.closed.iter().cloned().collect();
    to_text(&raw)
}
