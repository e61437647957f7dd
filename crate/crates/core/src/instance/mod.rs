//! Object graphs: complete and partial instances, their JSON form, the
//! full-axiom validator and canonical forms.

mod canon;
mod io;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{AttrError, Model, ObjectRef, Value};

pub use canon::{canonicalize, is_canonical};
pub use io::{load_instance, save_instance, save_partial, LoadError};
pub use validate::{validate, ValidationReport};

pub type Tuples = BTreeSet<(ObjectRef, ObjectRef)>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Object {
    pub r: ObjectRef,
    pub class: String,
    pub attrs: BTreeMap<String, Value>,
}

impl Object {
    pub fn new(r: ObjectRef, class: impl Into<String>) -> Self {
        Object {
            r,
            class: class.into(),
            attrs: BTreeMap::new(),
        }
    }

    pub fn with(mut self, attr: impl Into<String>, v: Value) -> Self {
        self.attrs.insert(attr.into(), v);
        self
    }
}

/// A complete object graph.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instance {
    pub objects: Vec<Object>,
    pub relations: BTreeMap<String, Tuples>,
    pub sequences: BTreeMap<String, BTreeMap<ObjectRef, Vec<ObjectRef>>>,
    pub reified: BTreeMap<String, BTreeMap<(ObjectRef, ObjectRef), ObjectRef>>,
    pub pool: Option<BTreeSet<ObjectRef>>,
}

impl Instance {
    pub fn object(&self, r: ObjectRef) -> Option<&Object> {
        self.objects.iter().find(|o| o.r == r)
    }

    pub fn refs(&self) -> BTreeSet<ObjectRef> {
        self.objects.iter().map(|o| o.r).collect()
    }

    /// Drop empty relation/sequence/reification entries so that equal graphs
    /// compare equal.
    pub fn normalize(&mut self) {
        self.objects.sort();
        self.relations.retain(|_, t| !t.is_empty());
        for seqs in self.sequences.values_mut() {
            seqs.retain(|_, q| !q.is_empty());
        }
        self.sequences.retain(|_, s| !s.is_empty());
        self.reified.retain(|_, m| !m.is_empty());
    }
}

/// A restricted attribute value in a partial instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttrSpec {
    Is(Value),
    OneOf(BTreeSet<Value>),
    Range(i64, i64),
}

impl AttrSpec {
    pub fn allows(&self, v: &Value) -> bool {
        match self {
            AttrSpec::Is(x) => x == v,
            AttrSpec::OneOf(s) => s.contains(v),
            AttrSpec::Range(lo, hi) => v.as_int().is_some_and(|i| *lo <= i && i <= *hi),
        }
    }
}

/// An object of a partial instance; `class` may be abstract, meaning "some
/// concrete subtype".
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialObject {
    pub r: ObjectRef,
    pub class: String,
    pub attrs: BTreeMap<String, AttrSpec>,
}

/// An under-specified object graph. Tuples and sequences are lower bounds
/// except for relations listed in `closed`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartialInstance {
    pub objects: Vec<PartialObject>,
    pub relations: BTreeMap<String, Tuples>,
    pub sequences: BTreeMap<String, BTreeMap<ObjectRef, Vec<ObjectRef>>>,
    pub reified: BTreeMap<String, BTreeMap<(ObjectRef, ObjectRef), ObjectRef>>,
    pub pool: Option<BTreeSet<ObjectRef>>,
    pub closed: BTreeSet<String>,
}

impl From<Instance> for PartialInstance {
    fn from(i: Instance) -> Self {
        PartialInstance {
            objects: i
                .objects
                .into_iter()
                .map(|o| PartialObject {
                    r: o.r,
                    class: o.class,
                    attrs: o
                        .attrs
                        .into_iter()
                        .map(|(k, v)| (k, AttrSpec::Is(v)))
                        .collect(),
                })
                .collect(),
            relations: i.relations,
            sequences: i.sequences,
            reified: i.reified,
            pool: i.pool,
            closed: BTreeSet::new(),
        }
    }
}

/// Result of loading an instance file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Loaded {
    Complete(Instance),
    Partial(PartialInstance),
}

impl Loaded {
    pub fn into_partial(self) -> PartialInstance {
        match self {
            Loaded::Complete(i) => i.into(),
            Loaded::Partial(p) => p,
        }
    }
}

/// Read-only index over a complete instance: type extents, tuple sets
/// (derived from sequences for ordered relations) and attribute lookup.
pub struct World<'a> {
    pub model: &'a Model,
    pub instance: &'a Instance,
    objects: BTreeMap<ObjectRef, &'a Object>,
    extents: BTreeMap<String, BTreeSet<ObjectRef>>,
    tuples: BTreeMap<String, Tuples>,
    inverse: BTreeMap<String, Tuples>,
    no_refs: BTreeSet<ObjectRef>,
    no_tuples: Tuples,
    no_seqs: BTreeMap<ObjectRef, Vec<ObjectRef>>,
}

impl<'a> World<'a> {
    pub fn new(model: &'a Model, instance: &'a Instance) -> Self {
        let mut objects = BTreeMap::new();
        for o in &instance.objects {
            objects.entry(o.r).or_insert(o);
        }
        let lattice = model.lattice();
        let mut extents: BTreeMap<String, BTreeSet<ObjectRef>> = lattice
            .classes()
            .map(|c| (c.clone(), BTreeSet::new()))
            .collect();
        for o in &instance.objects {
            for (class, subs) in &lattice.subtypes_of {
                if subs.contains(&o.class) {
                    extents.get_mut(class).expect("class").insert(o.r);
                }
            }
        }
        let mut tuples = BTreeMap::new();
        for decl in &model.relations {
            let t: Tuples = if decl.is_ordered() {
                instance
                    .sequences
                    .get(&decl.name)
                    .into_iter()
                    .flatten()
                    .flat_map(|(s, q)| q.iter().map(move |t| (*s, *t)))
                    .collect()
            } else {
                instance
                    .relations
                    .get(&decl.name)
                    .cloned()
                    .unwrap_or_default()
            };
            tuples.insert(decl.name.clone(), t);
        }
        let inverse = tuples
            .iter()
            .map(|(k, t)| (k.clone(), t.iter().map(|&(a, b)| (b, a)).collect()))
            .collect();
        World {
            model,
            instance,
            objects,
            extents,
            tuples,
            inverse,
            no_refs: BTreeSet::new(),
            no_tuples: BTreeSet::new(),
            no_seqs: BTreeMap::new(),
        }
    }

    pub fn object(&self, r: ObjectRef) -> Option<&'a Object> {
        self.objects.get(&r).copied()
    }

    /// Type extent of `class` (empty for unknown classes).
    pub fn extent(&self, class: &str) -> &BTreeSet<ObjectRef> {
        self.extents.get(class).unwrap_or(&self.no_refs)
    }

    pub fn tuples(&self, rel: &str) -> &Tuples {
        self.tuples.get(rel).unwrap_or(&self.no_tuples)
    }

    /// The relational inverse of `rel`.
    pub fn inverse_tuples(&self, rel: &str) -> &Tuples {
        self.inverse.get(rel).unwrap_or(&self.no_tuples)
    }

    pub fn sequences(&self, rel: &str) -> &BTreeMap<ObjectRef, Vec<ObjectRef>> {
        self.instance.sequences.get(rel).unwrap_or(&self.no_seqs)
    }

    /// Dereference an attribute; own and inherited attributes alike.
    pub fn attr(&self, r: ObjectRef, attr: &str) -> Result<&'a Value, AttrError> {
        let o = self.object(r).ok_or(AttrError::DanglingReference(r))?;
        let known = self
            .model
            .flat(&o.class)
            .is_some_and(|f| f.attrs.contains_key(attr));
        if !known {
            return Err(AttrError::UnknownAttribute(r, attr.to_string()));
        }
        o.attrs
            .get(attr)
            .ok_or_else(|| AttrError::MissingValue(r, attr.to_string()))
    }
}
