//! Search bounds shared by the solver and the brute-force oracle, and the
//! variable space of one object frame.

use std::collections::{BTreeMap, BTreeSet};

use super::approx::{AEnv, Approx};
use super::{SolveConfig, SolveError};
use crate::expr::{BinOp, Binder, Expr, Quant};
use crate::instance::{AttrSpec, Instance, Object, PartialInstance, PartialObject};
use crate::model::{AttrDomain, Model, ObjectRef, Value};
use crate::relations::{CardRange, Ordering, RelationDecl};

pub(crate) type Refs = BTreeSet<ObjectRef>;

/// Largest number of candidate sequences one source may have.
const MAX_SEQUENCES: usize = 200_000;

/// Fresh object slots created for one `maxPerClass` entry.
#[derive(Clone, Debug)]
pub(crate) struct Group {
    pub slots: usize,
    /// Concrete classes a slot of this group may take, in name order.
    pub classes: Vec<String>,
}

/// Everything the bounds say about the space of completions of a partial
/// instance, independent of how it is searched.
pub(crate) struct Bounds<'m> {
    pub model: &'m Model,
    pub partial: &'m PartialInstance,
    pub config: &'m SolveConfig,
    pub groups: Vec<Group>,
    /// References handed to fresh objects, in slot order.
    pub fresh_refs: Vec<ObjectRef>,
    /// With a partitioned pool: the exact number of fresh objects.
    pub exact_fresh: Option<usize>,
    /// Concrete class choices for each input object.
    pub input_classes: Vec<Vec<String>>,
}

fn input_err(msg: impl Into<String>) -> SolveError {
    SolveError::Input(msg.into())
}

impl<'m> Bounds<'m> {
    pub fn new(
        model: &'m Model,
        partial: &'m PartialInstance,
        config: &'m SolveConfig,
    ) -> Result<Self, SolveError> {
        let lattice = model.lattice();
        for c in config.max_per_class.keys() {
            if !lattice.contains(c) {
                return Err(input_err(format!("class bound names unknown class `{c}`")));
            }
        }
        let total: usize = config.max_per_class.values().sum();
        if config.partition && partial.pool.is_none() && config.pool_size < total {
            return Err(input_err(format!(
                "pool size {} is smaller than the {total} objects the class bounds allow",
                config.pool_size
            )));
        }

        let mut seen = BTreeSet::new();
        let mut input_classes = Vec::new();
        for o in &partial.objects {
            if !seen.insert(o.r) {
                return Err(input_err(format!("reference {} is used twice", o.r)));
            }
            let Some(flat) = model.flat(&o.class) else {
                return Err(input_err(format!(
                    "object {} has unknown class `{}`",
                    o.r, o.class
                )));
            };
            if let Some(a) = o.attrs.keys().find(|a| !flat.attrs.contains_key(*a)) {
                return Err(input_err(format!("`{}` has no attribute `{a}`", o.class)));
            }
            let choices: Vec<String> = lattice
                .concrete_subtypes(&o.class)
                .into_iter()
                .filter(|c| {
                    let f = model.flat(c).expect("known class");
                    o.attrs.keys().all(|a| f.attrs.contains_key(a))
                })
                .collect();
            input_classes.push(choices);
        }
        let names = partial
            .relations
            .keys()
            .chain(partial.sequences.keys())
            .chain(partial.reified.keys())
            .chain(partial.closed.iter());
        for n in names {
            if model.relation(n).is_none() {
                return Err(input_err(format!("unknown relation `{n}`")));
            }
        }

        let mut used: BTreeMap<&str, usize> = BTreeMap::new();
        for o in &partial.objects {
            if let Some(e) = nearest_entry(model, config, &o.class) {
                *used.entry(e).or_default() += 1;
            }
        }
        let mut groups = Vec::new();
        for (class, &n) in &config.max_per_class {
            let classes: Vec<String> = lattice
                .concrete_subtypes(class)
                .into_iter()
                .filter(|c| nearest_entry(model, config, c) == Some(class.as_str()))
                .collect();
            let slots = n.saturating_sub(used.get(class.as_str()).copied().unwrap_or(0));
            if slots > 0 && !classes.is_empty() {
                groups.push(Group { slots, classes });
            }
        }
        let slots: usize = groups.iter().map(|g| g.slots).sum();

        let (fresh_refs, exact_fresh) = if config.partition {
            let pool: Refs = match &partial.pool {
                Some(p) => p.clone(),
                None => (1..=config.pool_size as u64).map(ObjectRef).collect(),
            };
            let free: Vec<ObjectRef> = pool.difference(&seen).copied().collect();
            let n = free.len();
            (free, Some(n))
        } else {
            let start = seen
                .iter()
                .chain(partial.pool.iter().flatten())
                .map(|r| r.0)
                .max()
                .unwrap_or(0)
                + 1;
            ((start..start + slots as u64).map(ObjectRef).collect(), None)
        };

        Ok(Bounds {
            model,
            partial,
            config,
            groups,
            fresh_refs,
            exact_fresh,
            input_classes,
        })
    }

    /// Candidate values of every attribute of a `class` object, restricted by
    /// the input object when there is one.
    pub fn attr_values(
        &self,
        input: Option<&PartialObject>,
        class: &str,
    ) -> Vec<(String, Vec<Value>)> {
        let flat = self.model.flat(class).expect("known class");
        flat.attrs
            .iter()
            .map(|(a, dom)| {
                let spec = input.and_then(|o| o.attrs.get(a));
                (
                    a.clone(),
                    domain_values(dom, spec, self.config.default_int_bound),
                )
            })
            .collect()
    }

    /// Candidate sequences of one source of an ordered relation.
    pub fn seq_values(
        &self,
        decl: &RelationDecl,
        targets: &Refs,
    ) -> Result<Vec<Vec<ObjectRef>>, SolveError> {
        let m = decl.multiplicity.per_source;
        let cap = if decl.ordering == Ordering::Iseq {
            targets.len()
        } else {
            self.config.default_int_bound.max(0) as usize
        };
        let max = m.max.map_or(cap, |x| (x as usize).min(cap));
        let targets: Vec<ObjectRef> = targets.iter().copied().collect();
        let mut out = Vec::new();
        let mut cur = Vec::new();
        sequences(
            &targets,
            decl.ordering == Ordering::Iseq,
            m.min as usize,
            max,
            &mut cur,
            &mut out,
        )?;
        out.sort();
        Ok(out)
    }

    /// Type extents of a set of objects.
    pub fn extents(&self, objects: &[(ObjectRef, String)]) -> BTreeMap<String, Refs> {
        let lattice = self.model.lattice();
        lattice
            .classes()
            .map(|c| {
                let ext = objects
                    .iter()
                    .filter(|(_, k)| lattice.is_subtype(k, c))
                    .map(|(r, _)| *r)
                    .collect();
                (c.clone(), ext)
            })
            .collect()
    }
}

fn sequences(
    targets: &[ObjectRef],
    injective: bool,
    min: usize,
    max: usize,
    cur: &mut Vec<ObjectRef>,
    out: &mut Vec<Vec<ObjectRef>>,
) -> Result<(), SolveError> {
    if cur.len() >= min {
        out.push(cur.clone());
        if out.len() > MAX_SEQUENCES {
            return Err(input_err(
                "too many candidate sequences; bound the relation's multiplicity",
            ));
        }
    }
    if cur.len() == max {
        return Ok(());
    }
    for &t in targets {
        if injective && cur.contains(&t) {
            continue;
        }
        cur.push(t);
        sequences(targets, injective, min, max, cur, out)?;
        cur.pop();
    }
    Ok(())
}

/// The `maxPerClass` entry responsible for objects of `class`: the most
/// specific bounded ancestor, ties broken by name.
fn nearest_entry<'c>(model: &Model, config: &'c SolveConfig, class: &str) -> Option<&'c str> {
    let lattice = model.lattice();
    let covering: Vec<&'c str> = config
        .max_per_class
        .keys()
        .map(String::as_str)
        .filter(|e| lattice.is_subtype(class, e))
        .collect();
    covering
        .iter()
        .copied()
        .find(|e| !covering.iter().any(|o| o != e && lattice.is_subtype(o, e)))
}

pub(crate) fn domain_values(dom: &AttrDomain, spec: Option<&AttrSpec>, bound: i64) -> Vec<Value> {
    match spec {
        None => dom.values(bound),
        Some(AttrSpec::Is(v)) => [v.clone()]
            .into_iter()
            .filter(|v| dom.contains(v))
            .collect(),
        Some(AttrSpec::OneOf(s)) => s.iter().filter(|v| dom.contains(v)).cloned().collect(),
        Some(AttrSpec::Range(lo, hi)) => (*lo..=*hi)
            .map(Value::Int)
            .filter(|v| dom.contains(v))
            .collect(),
    }
}

/// One choice of objects: input objects with a concrete class each, plus
/// fresh objects.
#[derive(Clone, Debug)]
pub(crate) struct Frame {
    pub objects: Vec<(ObjectRef, String)>,
    /// Runs of interchangeable fresh objects (same group, same class).
    pub twins: Vec<Vec<ObjectRef>>,
}

impl Bounds<'_> {
    /// Frames up to renaming of fresh objects: each group contributes a
    /// multiset of classes.
    pub fn frames(&self) -> Vec<Frame> {
        let mut per_group: Vec<Vec<Vec<usize>>> = Vec::new();
        for g in &self.groups {
            let mut all = Vec::new();
            multisets(g.classes.len(), g.slots, 0, &mut Vec::new(), &mut all);
            per_group.push(all);
        }
        let mut inputs: Vec<Vec<(ObjectRef, String)>> = vec![Vec::new()];
        for (o, choices) in self.partial.objects.iter().zip(&self.input_classes) {
            let mut next = Vec::new();
            for prefix in &inputs {
                for c in choices {
                    let mut p = prefix.clone();
                    p.push((o.r, c.clone()));
                    next.push(p);
                }
            }
            inputs = next;
        }
        let mut fresh: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
        for options in &per_group {
            let mut next = Vec::new();
            for prefix in &fresh {
                for m in options {
                    let mut p = prefix.clone();
                    p.push(m.clone());
                    next.push(p);
                }
            }
            fresh = next;
        }
        let mut out = Vec::new();
        for choice in &fresh {
            let count: usize = choice.iter().map(Vec::len).sum();
            if self.exact_fresh.is_some_and(|n| n != count) || count > self.fresh_refs.len() {
                continue;
            }
            let mut refs = self.fresh_refs.iter().copied();
            let mut made = Vec::new();
            let mut twins = Vec::new();
            for (g, classes) in self.groups.iter().zip(choice) {
                let mut start = 0;
                while start < classes.len() {
                    let ci = classes[start];
                    let len = classes[start..].iter().take_while(|&&c| c == ci).count();
                    let run: Vec<ObjectRef> = refs.by_ref().take(len).collect();
                    made.extend(run.iter().map(|r| (*r, g.classes[ci].clone())));
                    if len > 1 {
                        twins.push(run);
                    }
                    start += len;
                }
            }
            for ins in &inputs {
                let mut objects = ins.clone();
                objects.extend(made.iter().cloned());
                objects.sort();
                out.push(Frame {
                    objects,
                    twins: twins.clone(),
                });
            }
        }
        out
    }
}

/// Non-decreasing index sequences of length `0..=left` over `0..k`.
fn multisets(k: usize, left: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    out.push(cur.clone());
    if left == 0 {
        return;
    }
    for i in from..k {
        cur.push(i);
        multisets(k, left - 1, i, cur, out);
        cur.pop();
    }
}

/// Whether some tuple set between `s` sources and `t` targets can meet the
/// image and preimage bounds of `decl`: the tuple count must lie within the
/// range allowed from both sides.
fn counts_fit(decl: &RelationDecl, s: usize, t: usize) -> bool {
    if decl.is_ordered() {
        return true;
    }
    let (img, pre) = (decl.image_bounds(), decl.preimage_bounds());
    let times = |n: usize, b: Option<u32>| b.map_or(usize::MAX, |b| n.saturating_mul(b as usize));
    let lo = (s * img.min as usize).max(t * pre.min as usize);
    let hi = times(s, img.max).min(times(t, pre.max)).min(s * t);
    lo <= hi
}

/// Values of a search variable, in ascending order.
#[derive(Clone, Debug)]
pub(crate) enum Values {
    Scalar(Vec<Value>),
    /// Image of a functional relation; `None` is "no image".
    Target(Vec<Option<ObjectRef>>),
    /// Tuple membership: index 0 is absent, 1 present.
    Flag,
    Seq(Vec<Vec<ObjectRef>>),
}

impl Values {
    pub fn len(&self) -> usize {
        match self {
            Values::Scalar(v) => v.len(),
            Values::Target(v) => v.len(),
            Values::Flag => 2,
            Values::Seq(v) => v.len(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum VarKind {
    Attr(ObjectRef, String),
    Fun(usize, ObjectRef),
    Flag(usize, ObjectRef, ObjectRef),
    Seq(usize, ObjectRef),
    Reif(usize, ObjectRef, ObjectRef),
}

#[derive(Clone, Debug)]
pub(crate) struct Var {
    pub kind: VarKind,
    pub values: Values,
}

/// How the tuples of one relation are represented.
#[derive(Clone, Debug, Default)]
pub(crate) struct RelSpace {
    pub ordered: bool,
    /// Functional relations: one target variable per source.
    pub fun: BTreeMap<ObjectRef, usize>,
    /// Other unordered relations: one flag per pair.
    pub flags: BTreeMap<ObjectRef, Vec<(ObjectRef, usize)>>,
    /// Variables that may put each target in the image, with their source.
    pub by_target: BTreeMap<ObjectRef, Vec<(ObjectRef, usize)>>,
    /// Ordered relations: one sequence variable per source.
    pub seq: BTreeMap<ObjectRef, usize>,
}

#[derive(Clone, Debug)]
pub(crate) enum Premise<'m> {
    /// The object bound at `depth` belongs to the binder domain.
    Member(ObjectRef, &'m Expr, usize),
    Holds(&'m Expr, usize),
}

#[derive(Clone, Debug)]
pub(crate) enum Ground<'m> {
    /// `premises implies body` under the given bindings.
    Axiom {
        premises: Vec<Premise<'m>>,
        body: &'m Expr,
        env: AEnv<'m>,
    },
    /// Image (or preimage) size of one object.
    Count {
        rel: usize,
        obj: ObjectRef,
        inverse: bool,
        range: CardRange,
    },
    Subset {
        child: usize,
        parent: usize,
        pair: (ObjectRef, ObjectRef),
    },
    Reif {
        rel: usize,
        pair: (ObjectRef, ObjectRef),
        total: bool,
    },
    /// Symmetry breaking between twin objects: value(a) <= value(b).
    Order(usize, usize),
}

static FALSE: Expr = Expr::Bool(false);

/// Variables and ground constraints for one frame.
pub(crate) struct Problem<'m> {
    pub model: &'m Model,
    pub objects: Vec<(ObjectRef, String)>,
    pub all: Refs,
    pub extents: BTreeMap<String, Refs>,
    pub vars: Vec<Var>,
    pub init: Vec<Vec<u32>>,
    attr_index: BTreeMap<ObjectRef, BTreeMap<String, usize>>,
    rel_index: BTreeMap<String, usize>,
    pub rels: Vec<RelSpace>,
    pub reif: Vec<BTreeMap<(ObjectRef, ObjectRef), usize>>,
    pub grounds: Vec<Ground<'m>>,
    pool: Option<Refs>,
}

impl<'m> Problem<'m> {
    /// Build the search space of `frame`; `None` when some variable has no
    /// possible value.
    pub fn build(bounds: &Bounds<'m>, frame: &Frame) -> Result<Option<Problem<'m>>, SolveError> {
        let model = bounds.model;
        let partial = bounds.partial;
        let extents = bounds.extents(&frame.objects);
        let empty = Refs::new();
        let ext = |c: &str| extents.get(c).unwrap_or(&empty);
        if !model
            .relations
            .iter()
            .all(|d| counts_fit(d, ext(&d.source).len(), ext(&d.target).len()))
        {
            return Ok(None);
        }
        let inputs: BTreeMap<ObjectRef, &PartialObject> =
            partial.objects.iter().map(|o| (o.r, o)).collect();

        let mut vars: Vec<Var> = Vec::new();
        let mut init: Vec<Vec<u32>> = Vec::new();
        let mut push = |kind: VarKind, values: Values, dom: Vec<u32>| {
            vars.push(Var { kind, values });
            init.push(dom);
            vars.len() - 1
        };
        let all_of = |n: usize| (0..n as u32).collect::<Vec<u32>>();

        let mut rels = Vec::new();
        let mut reif = Vec::new();
        for (ri, decl) in model.relations.iter().enumerate() {
            let closed = partial.closed.contains(&decl.name);
            let given = partial.relations.get(&decl.name);
            let srcs = ext(&decl.source);
            let tgts = ext(&decl.target);
            let mut space = RelSpace {
                ordered: decl.is_ordered(),
                ..RelSpace::default()
            };
            if let Some(g) = given {
                if g.iter()
                    .any(|(s, t)| !srcs.contains(s) || !tgts.contains(t))
                    || decl.is_ordered()
                {
                    return Ok(None);
                }
            }
            if decl.is_ordered() {
                let given = partial.sequences.get(&decl.name);
                if given.is_some_and(|m| m.keys().any(|s| !srcs.contains(s))) {
                    return Ok(None);
                }
                let all = bounds.seq_values(decl, tgts)?;
                for &s in srcs {
                    let values = match given.and_then(|m| m.get(&s)) {
                        Some(q) => all.iter().filter(|x| *x == q).cloned().collect(),
                        None if closed => all.iter().filter(|x| x.is_empty()).cloned().collect(),
                        None => all.clone(),
                    };
                    let values: Vec<Vec<ObjectRef>> = values;
                    let n = values.len();
                    let v = push(VarKind::Seq(ri, s), Values::Seq(values), all_of(n));
                    space.seq.insert(s, v);
                }
            } else if decl.image_bounds().max.is_some_and(|m| m <= 1) {
                let optional = decl.image_bounds().min == 0;
                for &s in srcs {
                    let fixed: Vec<ObjectRef> = given
                        .into_iter()
                        .flatten()
                        .filter(|p| p.0 == s)
                        .map(|p| p.1)
                        .collect();
                    let mut values: Vec<Option<ObjectRef>> = Vec::new();
                    if fixed.len() > 1 {
                        return Ok(None);
                    } else if let Some(t) = fixed.first() {
                        values.push(Some(*t));
                    } else {
                        if optional {
                            values.push(None);
                        }
                        if !closed {
                            values.extend(tgts.iter().map(|t| Some(*t)));
                        }
                    }
                    let n = values.len();
                    let targets: Vec<ObjectRef> = values.iter().flatten().copied().collect();
                    let v = push(VarKind::Fun(ri, s), Values::Target(values), all_of(n));
                    space.fun.insert(s, v);
                    for t in targets {
                        space.by_target.entry(t).or_default().push((s, v));
                    }
                }
            } else {
                for &s in srcs {
                    for &t in tgts {
                        let dom = if given.is_some_and(|g| g.contains(&(s, t))) {
                            vec![1]
                        } else if closed {
                            vec![0]
                        } else {
                            vec![0, 1]
                        };
                        let v = push(VarKind::Flag(ri, s, t), Values::Flag, dom);
                        space.flags.entry(s).or_default().push((t, v));
                        space.by_target.entry(t).or_default().push((s, v));
                    }
                }
            }
            rels.push(space);

            let mut map = BTreeMap::new();
            if let Some(r) = &decl.reified_by {
                let given = partial.reified.get(&decl.name);
                let data = ext(&r.class);
                if given.is_some_and(|m| {
                    m.iter().any(|(&(s, t), d)| {
                        !srcs.contains(&s) || !tgts.contains(&t) || !data.contains(d)
                    })
                }) {
                    return Ok(None);
                }
                for &s in srcs {
                    for &t in tgts {
                        let mut values: Vec<Option<ObjectRef>> = Vec::new();
                        match given.and_then(|m| m.get(&(s, t))) {
                            Some(d) => values.push(Some(*d)),
                            None => {
                                values.push(None);
                                if !closed {
                                    values.extend(data.iter().map(|d| Some(*d)));
                                }
                            }
                        }
                        let n = values.len();
                        let v = push(VarKind::Reif(ri, s, t), Values::Target(values), all_of(n));
                        map.insert((s, t), v);
                    }
                }
            }
            reif.push(map);
        }

        let mut attr_index: BTreeMap<ObjectRef, BTreeMap<String, usize>> = BTreeMap::new();
        for (r, class) in &frame.objects {
            let input = inputs.get(r).copied();
            let mut m = BTreeMap::new();
            for (a, values) in bounds.attr_values(input, class) {
                let n = values.len();
                let v = push(
                    VarKind::Attr(*r, a.clone()),
                    Values::Scalar(values),
                    all_of(n),
                );
                m.insert(a, v);
            }
            attr_index.insert(*r, m);
        }
        if init.iter().any(Vec::is_empty) {
            return Ok(None);
        }

        let mut p = Problem {
            model,
            objects: frame.objects.clone(),
            all: frame.objects.iter().map(|o| o.0).collect(),
            extents,
            vars,
            init,
            attr_index,
            rel_index: model
                .relations
                .iter()
                .enumerate()
                .map(|(i, r)| (r.name.clone(), i))
                .collect(),
            rels,
            reif,
            grounds: Vec::new(),
            pool: partial.pool.clone(),
        };
        p.grounds = p.ground_all(frame);
        Ok(Some(p))
    }

    pub fn attr_var(&self, r: ObjectRef, attr: &str) -> Option<usize> {
        self.attr_index.get(&r)?.get(attr).copied()
    }

    pub fn rel(&self, name: &str) -> Option<usize> {
        self.rel_index.get(name).copied()
    }

    fn ground_all(&self, frame: &Frame) -> Vec<Ground<'m>> {
        let model = self.model;
        let mut out = Vec::new();
        for (ri, decl) in model.relations.iter().enumerate() {
            let srcs = &self.extents[&decl.source];
            let tgts = &self.extents[&decl.target];
            if decl.is_ordered() {
                let range = decl.multiplicity.per_target;
                if range != CardRange::ANY {
                    for &t in tgts {
                        out.push(Ground::Count {
                            rel: ri,
                            obj: t,
                            inverse: true,
                            range,
                        });
                    }
                }
            } else {
                let fwd = decl.image_bounds();
                if fwd != CardRange::ANY && self.rels[ri].fun.is_empty() {
                    for &s in srcs {
                        out.push(Ground::Count {
                            rel: ri,
                            obj: s,
                            inverse: false,
                            range: fwd,
                        });
                    }
                }
                let bwd = decl.preimage_bounds();
                if bwd != CardRange::ANY {
                    for &t in tgts {
                        out.push(Ground::Count {
                            rel: ri,
                            obj: t,
                            inverse: true,
                            range: bwd,
                        });
                    }
                }
                if let Some(parent) = decl.subset_of.as_deref().and_then(|n| self.rel(n)) {
                    for &s in srcs {
                        for &t in tgts {
                            out.push(Ground::Subset {
                                child: ri,
                                parent,
                                pair: (s, t),
                            });
                        }
                    }
                }
            }
            if let Some(r) = &decl.reified_by {
                for &pair in self.reif[ri].keys() {
                    out.push(Ground::Reif {
                        rel: ri,
                        pair,
                        total: r.total,
                    });
                }
            }
        }

        for run in &frame.twins {
            for w in run.windows(2) {
                let first = self
                    .attr_index
                    .get(&w[0])
                    .and_then(|m| m.values().next().copied());
                let second = self
                    .attr_index
                    .get(&w[1])
                    .and_then(|m| m.values().next().copied());
                if let (Some(a), Some(b)) = (first, second) {
                    out.push(Ground::Order(a, b));
                }
            }
        }

        let mut ax = Approx::new(self, &self.init);
        for (r, class) in &self.objects {
            let flat = model.flat(class).expect("known class");
            for inv in &flat.invariants {
                let env = AEnv {
                    self_obj: Some(*r),
                    vars: Vec::new(),
                };
                decompose(&mut ax, &inv.expr, env, Vec::new(), &mut out);
            }
        }
        for c in &model.constraints {
            decompose(&mut ax, &c.expr, AEnv::default(), Vec::new(), &mut out);
        }
        out
    }

    /// The instance denoted by a complete assignment.
    pub fn instance(&self, dom: &[Vec<u32>]) -> Instance {
        let mut inst = Instance {
            pool: self.pool.clone(),
            ..Instance::default()
        };
        let mut objects: BTreeMap<ObjectRef, Object> = self
            .objects
            .iter()
            .map(|(r, c)| (*r, Object::new(*r, c.clone())))
            .collect();
        for (v, var) in self.vars.iter().enumerate() {
            let i = dom[v][0] as usize;
            match (&var.kind, &var.values) {
                (VarKind::Attr(r, a), Values::Scalar(vals)) => {
                    objects
                        .get_mut(r)
                        .expect("object")
                        .attrs
                        .insert(a.clone(), vals[i].clone());
                }
                (VarKind::Fun(ri, s), Values::Target(vals)) => {
                    if let Some(t) = vals[i] {
                        let name = &self.model.relations[*ri].name;
                        inst.relations
                            .entry(name.clone())
                            .or_default()
                            .insert((*s, t));
                    }
                }
                (VarKind::Flag(ri, s, t), Values::Flag) => {
                    if i == 1 {
                        let name = &self.model.relations[*ri].name;
                        inst.relations
                            .entry(name.clone())
                            .or_default()
                            .insert((*s, *t));
                    }
                }
                (VarKind::Seq(ri, s), Values::Seq(vals)) => {
                    let name = &self.model.relations[*ri].name;
                    inst.sequences
                        .entry(name.clone())
                        .or_default()
                        .insert(*s, vals[i].clone());
                }
                (VarKind::Reif(ri, s, t), Values::Target(vals)) => {
                    if let Some(d) = vals[i] {
                        let name = &self.model.relations[*ri].name;
                        inst.reified
                            .entry(name.clone())
                            .or_default()
                            .insert((*s, *t), d);
                    }
                }
                _ => unreachable!("variable kind and values agree"),
            }
        }
        inst.objects = objects.into_values().collect();
        inst.normalize();
        inst
    }
}

/// Split an axiom into ground instances: conjunctions, implications and
/// universal quantifiers over the current objects become separate checks.
fn decompose<'m>(
    ax: &mut Approx<'_, 'm>,
    e: &'m Expr,
    env: AEnv<'m>,
    mut premises: Vec<Premise<'m>>,
    out: &mut Vec<Ground<'m>>,
) {
    match e {
        Expr::Bool(true) => {}
        Expr::Binary(BinOp::And, l, r) => {
            decompose(ax, l, env.clone(), premises.clone(), out);
            decompose(ax, r, env, premises, out);
        }
        Expr::Binary(BinOp::Implies, l, r) => {
            premises.push(Premise::Holds(l, env.vars.len()));
            decompose(ax, r, env, premises, out);
        }
        Expr::Quant(Quant::Forall, binders, guard, body) => {
            forall(ax, binders, guard.as_deref(), body, env, premises, out);
        }
        _ => out.push(Ground::Axiom {
            premises,
            body: e,
            env,
        }),
    }
}

fn forall<'m>(
    ax: &mut Approx<'_, 'm>,
    binders: &'m [Binder],
    guard: Option<&'m Expr>,
    body: &'m Expr,
    env: AEnv<'m>,
    mut premises: Vec<Premise<'m>>,
    out: &mut Vec<Ground<'m>>,
) {
    let Some((b, rest)) = binders.split_first() else {
        if let Some(g) = guard {
            premises.push(Premise::Holds(g, env.vars.len()));
        }
        decompose(ax, body, env, premises, out);
        return;
    };
    let Some((lo, hi)) = ax.set_of(&b.domain, &env) else {
        out.push(Ground::Axiom {
            premises,
            body: &FALSE,
            env,
        });
        return;
    };
    for x in hi {
        let mut pr = premises.clone();
        if !lo.contains(&x) {
            pr.push(Premise::Member(x, &b.domain, env.vars.len()));
        }
        let mut env2 = env.clone();
        env2.vars.push((b.var.as_str(), x));
        forall(ax, rest, guard, body, env2, pr, out);
    }
}
