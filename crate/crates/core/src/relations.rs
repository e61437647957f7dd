//! Binary relations between type extents: kinds, composition, multiplicities,
//! roles, ordered relations, subset constraints and reified associations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::diag::{DiagCode, Diagnostic};
use crate::instance::World;
use crate::model::{ObjectRef, Span};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelationKind {
    Relation,
    Function,
    PartialFunction,
    Injection,
    PartialInjection,
    Surjection,
    PartialSurjection,
    Bijection,
}

impl RelationKind {
    /// At most one image per source.
    pub fn functional(self) -> bool {
        !matches!(self, RelationKind::Relation)
    }

    /// At least one image per source.
    pub fn total(self) -> bool {
        matches!(
            self,
            RelationKind::Function
                | RelationKind::Injection
                | RelationKind::Surjection
                | RelationKind::Bijection
        )
    }

    /// At most one source per target.
    pub fn injective(self) -> bool {
        matches!(
            self,
            RelationKind::Injection | RelationKind::PartialInjection | RelationKind::Bijection
        )
    }

    /// At least one source per target.
    pub fn surjective(self) -> bool {
        matches!(
            self,
            RelationKind::Surjection | RelationKind::PartialSurjection | RelationKind::Bijection
        )
    }

    /// DSL keywords, in order.
    pub fn keywords(self) -> &'static [&'static str] {
        match self {
            RelationKind::Relation => &[],
            RelationKind::Function => &["function"],
            RelationKind::PartialFunction => &["partial", "function"],
            RelationKind::Injection => &["injection"],
            RelationKind::PartialInjection => &["partial", "injection"],
            RelationKind::Surjection => &["surjection"],
            RelationKind::PartialSurjection => &["partial", "surjection"],
            RelationKind::Bijection => &["bijection"],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Ordering {
    #[default]
    Unordered,
    Seq,
    Iseq,
}

/// Cardinality bounds; `max == None` is unbounded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CardRange {
    pub min: u32,
    pub max: Option<u32>,
}

impl CardRange {
    pub const ANY: CardRange = CardRange { min: 0, max: None };

    pub fn new(min: u32, max: Option<u32>) -> Self {
        CardRange { min, max }
    }

    pub fn contains(&self, n: usize) -> bool {
        n >= self.min as usize && self.max.is_none_or(|m| n <= m as usize)
    }

    pub fn intersect(self, other: CardRange) -> CardRange {
        CardRange {
            min: self.min.max(other.min),
            max: match (self.max, other.max) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            },
        }
    }
}

impl fmt::Display for CardRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.max {
            Some(m) => write!(f, "{}..{m}", self.min),
            None => write!(f, "{}..*", self.min),
        }
    }
}

/// Declared multiplicity: how many targets each source may reach and how
/// many sources may reach each target.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Multiplicity {
    pub per_source: CardRange,
    pub per_target: CardRange,
}

impl Multiplicity {
    pub fn is_default(&self) -> bool {
        self.per_source == CardRange::ANY && self.per_target == CardRange::ANY
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Reification {
    pub class: String,
    /// Every tuple carries association data.
    pub total: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationDecl {
    pub name: String,
    pub source: String,
    pub target: String,
    pub kind: RelationKind,
    /// The inverse is a partial injection: no part is shared.
    pub composition: bool,
    /// With `composition`: every part belongs to some whole.
    pub inverse_total: bool,
    /// Annotation only.
    pub aggregation: bool,
    pub ordering: Ordering,
    pub multiplicity: Multiplicity,
    pub subset_of: Option<String>,
    pub reified_by: Option<Reification>,
    /// Explicit `(left, right)` role names.
    pub roles: Option<(String, String)>,
    pub span: Span,
}

impl RelationDecl {
    pub fn new(
        name: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
    ) -> Self {
        RelationDecl {
            name: name.into(),
            source: source.into(),
            target: target.into(),
            kind: RelationKind::Relation,
            composition: false,
            inverse_total: false,
            aggregation: false,
            ordering: Ordering::Unordered,
            multiplicity: Multiplicity::default(),
            subset_of: None,
            reified_by: None,
            roles: None,
            span: Span::default(),
        }
    }

    pub fn with_kind(mut self, kind: RelationKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn is_ordered(&self) -> bool {
        self.ordering != Ordering::Unordered
    }

    /// Role naming the sources of a target (inverse image).
    pub fn left_role(&self) -> &str {
        self.roles
            .as_ref()
            .map_or(self.source.as_str(), |r| r.0.as_str())
    }

    /// Role naming the targets of a source (image).
    pub fn right_role(&self) -> &str {
        self.roles
            .as_ref()
            .map_or(self.target.as_str(), |r| r.1.as_str())
    }

    /// Effective bounds on the image size of each source (sequence length
    /// for ordered relations is bounded by `multiplicity` alone).
    pub fn image_bounds(&self) -> CardRange {
        if self.is_ordered() {
            return self.multiplicity.per_source;
        }
        let mut b = self.multiplicity.per_source;
        if self.kind.functional() {
            b = b.intersect(CardRange::new(0, Some(1)));
        }
        if self.kind.total() {
            b = b.intersect(CardRange::new(1, None));
        }
        if self.composition {
            b = b.intersect(CardRange::new(0, Some(1)));
        }
        b
    }

    /// Effective bounds on the number of sources reaching each target.
    pub fn preimage_bounds(&self) -> CardRange {
        let mut b = self.multiplicity.per_target;
        if self.kind.injective() || self.composition {
            b = b.intersect(CardRange::new(0, Some(1)));
        }
        if self.kind.surjective() || (self.composition && self.inverse_total) {
            b = b.intersect(CardRange::new(1, None));
        }
        b
    }

    fn diag(&self, code: DiagCode, subject: String, message: String) -> Diagnostic {
        Diagnostic::new(code, subject, message).with_axiom(&self.name, self.span.line)
    }
}

fn images(
    tuples: &BTreeSet<(ObjectRef, ObjectRef)>,
) -> (
    BTreeMap<ObjectRef, BTreeSet<ObjectRef>>,
    BTreeMap<ObjectRef, BTreeSet<ObjectRef>>,
) {
    let mut fwd: BTreeMap<ObjectRef, BTreeSet<ObjectRef>> = BTreeMap::new();
    let mut bwd: BTreeMap<ObjectRef, BTreeSet<ObjectRef>> = BTreeMap::new();
    for &(s, t) in tuples {
        fwd.entry(s).or_default().insert(t);
        bwd.entry(t).or_default().insert(s);
    }
    (fwd, bwd)
}

fn show(refs: &BTreeSet<ObjectRef>) -> String {
    refs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Type, functionality, totality, injectivity, surjectivity and
/// composition checks for one relation.
pub fn check_relation_kind(world: &World, decl: &RelationDecl) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let tuples = world.tuples(&decl.name);
    let src_ext = world.extent(&decl.source);
    let tgt_ext = world.extent(&decl.target);
    for &(s, t) in tuples {
        if !src_ext.contains(&s) || !tgt_ext.contains(&t) {
            out.push(decl.diag(
                DiagCode::TypeMismatch,
                format!("{}({s},{t})", decl.name),
                format!(
                    "tuple ({s},{t}) is outside {} x {}",
                    decl.source, decl.target
                ),
            ));
        }
    }
    if decl.is_ordered() {
        return out;
    }
    let (fwd, bwd) = images(tuples);
    let empty = BTreeSet::new();
    for s in src_ext {
        let img = fwd.get(s).unwrap_or(&empty);
        if decl.kind.functional() && img.len() > 1 {
            out.push(decl.diag(
                DiagCode::MultipleImages,
                format!("{}({s})", decl.name),
                format!(
                    "{s} has {} images under `{}`: {}",
                    img.len(),
                    decl.name,
                    show(img)
                ),
            ));
        }
        if decl.kind.total() && img.is_empty() {
            out.push(decl.diag(
                DiagCode::MissingImage,
                format!("{}({s})", decl.name),
                format!("{s} has no image under total `{}`", decl.name),
            ));
        }
        if decl.composition && !decl.kind.functional() && img.len() > 1 {
            out.push(decl.diag(
                DiagCode::MultipleComponents,
                format!("{}({s})", decl.name),
                format!(
                    "whole {s} has {} parts under composition `{}`",
                    img.len(),
                    decl.name
                ),
            ));
        }
    }
    for t in tgt_ext {
        let pre = bwd.get(t).unwrap_or(&empty);
        if pre.len() > 1 {
            if decl.composition {
                out.push(decl.diag(
                    DiagCode::SharedComponent,
                    format!("{}~({t})", decl.name),
                    format!("part {t} is shared by {}", show(pre)),
                ));
            } else if decl.kind.injective() {
                out.push(decl.diag(
                    DiagCode::NotInjective,
                    format!("{}~({t})", decl.name),
                    format!("{t} is the image of {}", show(pre)),
                ));
            }
        }
        if pre.is_empty() {
            if decl.kind.surjective() {
                out.push(decl.diag(
                    DiagCode::NotSurjective,
                    format!("{}~({t})", decl.name),
                    format!("{t} is not reached by `{}`", decl.name),
                ));
            }
            if decl.composition && decl.inverse_total {
                out.push(decl.diag(
                    DiagCode::OrphanComponent,
                    format!("{}~({t})", decl.name),
                    format!("part {t} belongs to no whole"),
                ));
            }
        }
    }
    out
}

/// Declared multiplicity bounds, per source and per target.
pub fn check_multiplicity(world: &World, decl: &RelationDecl) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let m = decl.multiplicity;
    if m.is_default() {
        return out;
    }
    let mut fwd: BTreeMap<ObjectRef, usize> = BTreeMap::new();
    let mut bwd: BTreeMap<ObjectRef, usize> = BTreeMap::new();
    if decl.is_ordered() {
        for (s, seq) in world.sequences(&decl.name) {
            fwd.insert(*s, seq.len());
            for t in seq {
                *bwd.entry(*t).or_default() += 1;
            }
        }
    } else {
        for &(s, t) in world.tuples(&decl.name) {
            *fwd.entry(s).or_default() += 1;
            *bwd.entry(t).or_default() += 1;
        }
    }
    for s in world.extent(&decl.source) {
        let n = fwd.get(s).copied().unwrap_or(0);
        if !m.per_source.contains(n) {
            out.push(decl.diag(
                DiagCode::MultiplicityViolation,
                format!("{}({s})", decl.name),
                format!("{s} has {n} images, allowed {}", m.per_source),
            ));
        }
    }
    for t in world.extent(&decl.target) {
        let n = bwd.get(t).copied().unwrap_or(0);
        if !m.per_target.contains(n) {
            out.push(decl.diag(
                DiagCode::MultiplicityViolation,
                format!("{}~({t})", decl.name),
                format!("{t} has {n} sources, allowed {}", m.per_target),
            ));
        }
    }
    out
}

/// Targets reached from `r` (sequence members for ordered relations).
pub fn role_image(world: &World, decl: &RelationDecl, r: ObjectRef) -> BTreeSet<ObjectRef> {
    world
        .tuples(&decl.name)
        .range((r, ObjectRef(0))..=(r, ObjectRef(u64::MAX)))
        .map(|&(_, t)| t)
        .collect()
}

/// Sources reaching `r`.
pub fn role_inverse_image(world: &World, decl: &RelationDecl, r: ObjectRef) -> BTreeSet<ObjectRef> {
    world
        .tuples(&decl.name)
        .iter()
        .filter(|&&(_, t)| t == r)
        .map(|&(s, _)| s)
        .collect()
}

/// Well-formedness of sequences: sources in the source extent, members in
/// the target extent, and no repeats for injective sequences.
pub fn check_ordered(world: &World, decl: &RelationDecl) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if !decl.is_ordered() {
        if world.instance.sequences.contains_key(&decl.name) {
            out.push(decl.diag(
                DiagCode::SequenceOnFlatRelation,
                decl.name.clone(),
                format!("`{}` is not ordered but sequences were given", decl.name),
            ));
        }
        return out;
    }
    if world
        .instance
        .relations
        .get(&decl.name)
        .is_some_and(|t| !t.is_empty())
    {
        out.push(decl.diag(
            DiagCode::SequenceOnFlatRelation,
            decl.name.clone(),
            format!("`{}` is ordered; give its tuples as sequences", decl.name),
        ));
    }
    let src_ext = world.extent(&decl.source);
    let tgt_ext = world.extent(&decl.target);
    for (s, seq) in world.sequences(&decl.name) {
        if !src_ext.contains(s) {
            out.push(decl.diag(
                DiagCode::TypeMismatch,
                format!("{}({s})", decl.name),
                format!("{s} is not a {}", decl.source),
            ));
        }
        let mut seen = BTreeSet::new();
        for (i, t) in seq.iter().enumerate() {
            if !tgt_ext.contains(t) {
                out.push(decl.diag(
                    DiagCode::TypeMismatch,
                    format!("{}({s})[{}]", decl.name, i + 1),
                    format!("{t} is not a {}", decl.target),
                ));
            }
            if !seen.insert(*t) && decl.ordering == Ordering::Iseq {
                out.push(decl.diag(
                    DiagCode::DuplicateInSequence,
                    format!("{}({s})[{}]", decl.name, i + 1),
                    format!("{t} occurs more than once in the sequence of {s}"),
                ));
            }
        }
    }
    out
}

/// Every tuple of `decl` also belongs to the parent relation.
pub fn check_subset(
    decl: &RelationDecl,
    tuples: &BTreeSet<(ObjectRef, ObjectRef)>,
    parent: &BTreeSet<(ObjectRef, ObjectRef)>,
) -> Vec<Diagnostic> {
    let Some(parent_name) = &decl.subset_of else {
        return Vec::new();
    };
    tuples
        .difference(parent)
        .map(|(s, t)| {
            decl.diag(
                DiagCode::SubsetViolation,
                format!("{}({s},{t})", decl.name),
                format!("({s},{t}) is in `{}` but not in `{parent_name}`", decl.name),
            )
        })
        .collect()
}

/// Reification map: defined only on tuples (on every tuple when total), and
/// mapping into the association class.
pub fn check_reified(world: &World, decl: &RelationDecl) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let Some(reif) = &decl.reified_by else {
        if world.instance.reified.contains_key(&decl.name) {
            out.push(decl.diag(
                DiagCode::UnexpectedAssociationData,
                decl.name.clone(),
                format!("`{}` is not reified", decl.name),
            ));
        }
        return out;
    };
    let tuples = world.tuples(&decl.name);
    let map = world.instance.reified.get(&decl.name);
    let ext = world.extent(&reif.class);
    let mut used: BTreeMap<ObjectRef, usize> = BTreeMap::new();
    for (&(s, t), data) in map.into_iter().flatten() {
        *used.entry(*data).or_default() += 1;
        if !tuples.contains(&(s, t)) {
            out.push(decl.diag(
                DiagCode::UnexpectedAssociationData,
                format!("{}({s},{t})", decl.name),
                format!("association data {data} attached to ({s},{t}), which is not a tuple"),
            ));
        }
        if !ext.contains(data) {
            out.push(decl.diag(
                DiagCode::TypeMismatch,
                format!("{}({s},{t})", decl.name),
                format!("association data {data} is not a {}", reif.class),
            ));
        }
    }
    if reif.total {
        for (s, t) in tuples {
            if !map.is_some_and(|m| m.contains_key(&(*s, *t))) {
                out.push(decl.diag(
                    DiagCode::MissingAssociationData,
                    format!("{}({s},{t})", decl.name),
                    format!("tuple ({s},{t}) carries no {}", reif.class),
                ));
            }
        }
    }
    out
}

/// All relation-level checks for one declaration.
pub fn check_relation(world: &World, decl: &RelationDecl) -> Vec<Diagnostic> {
    let mut out = check_relation_kind(world, decl);
    out.extend(check_multiplicity(world, decl));
    out.extend(check_ordered(world, decl));
    if let Some(parent) = &decl.subset_of {
        out.extend(check_subset(
            decl,
            world.tuples(&decl.name),
            world.tuples(parent),
        ));
    }
    out.extend(check_reified(world, decl));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_model;
    use crate::instance::{Instance, Object};
    use crate::model::Model;
    use proptest::prelude::*;

    const PC: &str = "
        class PC : concrete {}
        class MainBoard : concrete {}
        class Memory : concrete {}
        relation hasMainBoard : PC -> MainBoard bijection composition;
        relation hasMemory : PC -> Memory mult 0..4;
    ";

    fn objects(spec: &[(u64, &str)]) -> Instance {
        let mut inst = Instance::default();
        for &(r, c) in spec {
            inst.objects.push(Object::new(ObjectRef(r), c));
        }
        inst
    }

    fn with_tuples(mut inst: Instance, rel: &str, pairs: &[(u64, u64)]) -> Instance {
        inst.relations.insert(
            rel.into(),
            pairs
                .iter()
                .map(|&(a, b)| (ObjectRef(a), ObjectRef(b)))
                .collect(),
        );
        inst
    }

    fn codes(model: &Model, inst: &Instance, rel: &str) -> Vec<DiagCode> {
        let world = World::new(model, inst);
        check_relation(&world, model.relation(rel).unwrap())
            .into_iter()
            .map(|d| d.code)
            .collect()
    }

    #[test]
    fn shared_mainboard() {
        let m = parse_model(PC).unwrap();
        let inst = with_tuples(
            objects(&[(1, "PC"), (2, "PC"), (3, "MainBoard"), (4, "MainBoard")]),
            "hasMainBoard",
            &[(1, 3), (2, 3)],
        );
        let c = codes(&m, &inst, "hasMainBoard");
        assert!(c.contains(&DiagCode::SharedComponent));
        assert!(c.contains(&DiagCode::NotSurjective));
    }

    #[test]
    fn paired_bijection_is_clean() {
        let m = parse_model(PC).unwrap();
        let inst = with_tuples(
            objects(&[(1, "PC"), (2, "PC"), (3, "MainBoard"), (4, "MainBoard")]),
            "hasMainBoard",
            &[(1, 3), (2, 4)],
        );
        assert!(codes(&m, &inst, "hasMainBoard").is_empty());
    }

    #[test]
    fn empty_relation_is_clean() {
        let m = parse_model("class A : concrete {} relation r : A -> A;").unwrap();
        let inst = objects(&[(1, "A"), (2, "A")]);
        assert!(codes(&m, &inst, "r").is_empty());
    }

    #[test]
    fn memory_multiplicity() {
        let m = parse_model(PC).unwrap();
        let mut spec = vec![(1, "PC")];
        spec.extend((2..=6).map(|r| (r, "Memory")));
        let five = with_tuples(
            objects(&spec),
            "hasMemory",
            &[(1, 2), (1, 3), (1, 4), (1, 5), (1, 6)],
        );
        assert_eq!(
            codes(&m, &five, "hasMemory"),
            vec![DiagCode::MultiplicityViolation]
        );
        let none = objects(&spec);
        assert!(codes(&m, &none, "hasMemory").is_empty());
    }

    #[test]
    fn type_mismatch() {
        let m = parse_model(PC).unwrap();
        let inst = with_tuples(objects(&[(1, "PC"), (2, "Memory")]), "hasMemory", &[(2, 1)]);
        assert!(codes(&m, &inst, "hasMemory").contains(&DiagCode::TypeMismatch));
    }

    #[test]
    fn roles() {
        let m = parse_model(
            "class Person : concrete {} class Company : concrete {}
             relation worksFor : Person -> Company roles employees, employer;",
        )
        .unwrap();
        let inst = with_tuples(
            objects(&[(1, "Person"), (2, "Person"), (3, "Company"), (4, "Company")]),
            "worksFor",
            &[(1, 3), (2, 3)],
        );
        let world = World::new(&m, &inst);
        let d = m.relation("worksFor").unwrap();
        assert_eq!(d.left_role(), "employees");
        assert_eq!(
            role_inverse_image(&world, d, ObjectRef(3)),
            [ObjectRef(1), ObjectRef(2)].into()
        );
        assert_eq!(role_image(&world, d, ObjectRef(1)), [ObjectRef(3)].into());
        assert!(role_image(&world, d, ObjectRef(4)).is_empty());
    }

    const POLY: &str = "
        class Polygon : concrete {}
        class Point : concrete {}
        relation builds : Polygon -> Point iseq mult 5..5;
        relation path : Polygon -> Point seq;
    ";

    fn polygon(rel: &str, seq: &[u64]) -> Instance {
        let mut inst = objects(&[
            (1, "Polygon"),
            (2, "Point"),
            (3, "Point"),
            (4, "Point"),
            (5, "Point"),
        ]);
        inst.sequences.insert(
            rel.into(),
            [(ObjectRef(1), seq.iter().copied().map(ObjectRef).collect())].into(),
        );
        inst
    }

    #[test]
    fn sequences() {
        let m = parse_model(POLY).unwrap();
        let dup = polygon("builds", &[2, 3, 2]);
        let c = codes(&m, &dup, "builds");
        assert!(c.contains(&DiagCode::DuplicateInSequence));
        assert!(c.contains(&DiagCode::MultiplicityViolation));
        assert!(codes(&m, &polygon("path", &[2, 3, 2]), "path").is_empty());
        assert!(codes(&m, &polygon("path", &[]), "path").is_empty());
        assert_eq!(
            codes(&m, &polygon("builds", &[2, 3, 4, 5]), "builds"),
            vec![DiagCode::MultiplicityViolation]
        );
        let world = World::new(&m, &dup);
        assert_eq!(
            role_image(&world, m.relation("builds").unwrap(), ObjectRef(1)),
            [ObjectRef(2), ObjectRef(3)].into()
        );
    }

    const ENROL: &str = "
        class Person : concrete {}
        class Company : concrete {}
        class EnrolmentInfo : concrete { salary : nat; }
        relation worksFor : Person -> Company reified by EnrolmentInfo;
        relation manages : Person -> Company subset of worksFor;
        relation advises : Person -> Company reified by EnrolmentInfo partial;
    ";

    fn enrol() -> Instance {
        let mut inst = objects(&[(1, "Person"), (2, "Company"), (3, "Company")]);
        let mut info = Object::new(ObjectRef(4), "EnrolmentInfo");
        info.attrs.insert("salary".into(), crate::Value::Int(10));
        inst.objects.push(info);
        with_tuples(inst, "worksFor", &[(1, 2)])
    }

    #[test]
    fn subset() {
        let m = parse_model(ENROL).unwrap();
        let mut inst = with_tuples(enrol(), "manages", &[(1, 3)]);
        inst.reified.insert(
            "worksFor".into(),
            [((ObjectRef(1), ObjectRef(2)), ObjectRef(4))].into(),
        );
        assert_eq!(codes(&m, &inst, "manages"), vec![DiagCode::SubsetViolation]);
        let inst = with_tuples(inst, "manages", &[]);
        assert!(codes(&m, &inst, "manages").is_empty());
        let inst = with_tuples(inst, "manages", &[(1, 2)]);
        assert!(codes(&m, &inst, "manages").is_empty());
    }

    #[test]
    fn reified() {
        let m = parse_model(ENROL).unwrap();
        let missing = enrol();
        assert_eq!(
            codes(&m, &missing, "worksFor"),
            vec![DiagCode::MissingAssociationData]
        );
        let partial = with_tuples(enrol(), "advises", &[(1, 2)]);
        assert!(codes(&m, &partial, "advises").is_empty());
        let mut wrong = enrol();
        wrong.reified.insert(
            "worksFor".into(),
            [((ObjectRef(1), ObjectRef(2)), ObjectRef(3))].into(),
        );
        assert_eq!(codes(&m, &wrong, "worksFor"), vec![DiagCode::TypeMismatch]);
    }

    const KINDS: [RelationKind; 8] = [
        RelationKind::Relation,
        RelationKind::Function,
        RelationKind::PartialFunction,
        RelationKind::Injection,
        RelationKind::PartialInjection,
        RelationKind::Surjection,
        RelationKind::PartialSurjection,
        RelationKind::Bijection,
    ];

    fn kind_model(kind: RelationKind, composition: bool, inverse_total: bool) -> Model {
        let classes = vec![
            crate::ClassDef::new("A", false),
            crate::ClassDef::new("B", false),
        ];
        let mut r = RelationDecl::new("r", "A", "B").with_kind(kind);
        r.composition = composition;
        r.inverse_total = inverse_total;
        Model::new(classes, vec![r], vec![]).unwrap()
    }

    fn random_instance(na: u64, nb: u64, pairs: &[(u64, u64)]) -> Instance {
        let mut inst = Instance::default();
        for r in 1..=na {
            inst.objects.push(Object::new(ObjectRef(r), "A"));
        }
        for r in 1..=nb {
            inst.objects.push(Object::new(ObjectRef(100 + r), "B"));
        }
        inst.relations.insert(
            "r".into(),
            pairs
                .iter()
                .filter(|(s, t)| *s < na && *t < nb)
                .map(|&(s, t)| (ObjectRef(s + 1), ObjectRef(101 + t)))
                .collect(),
        );
        inst
    }

    fn clean(kind: RelationKind, inst: &Instance) -> bool {
        let m = kind_model(kind, false, false);
        let world = World::new(&m, inst);
        check_relation_kind(&world, m.relation("r").unwrap()).is_empty()
    }

    proptest! {
        #[test]
        fn role_images_are_mutually_inverse(
            na in 1u64..5, nb in 1u64..5,
            pairs in prop::collection::vec((0u64..5, 0u64..5), 0..12),
        ) {
            let inst = random_instance(na, nb, &pairs);
            let m = kind_model(RelationKind::Relation, false, false);
            let world = World::new(&m, &inst);
            let d = m.relation("r").unwrap();
            for a in world.extent("A") {
                for b in world.extent("B") {
                    prop_assert_eq!(
                        role_image(&world, d, *a).contains(b),
                        role_inverse_image(&world, d, *b).contains(a)
                    );
                }
            }
        }

        #[test]
        fn kind_lattice(
            na in 1u64..5, nb in 1u64..5,
            pairs in prop::collection::vec((0u64..5, 0u64..5), 0..12),
        ) {
            let inst = random_instance(na, nb, &pairs);
            let verdict: BTreeMap<_, _> = KINDS.iter().map(|k| (format!("{k:?}"), clean(*k, &inst))).collect();
            prop_assert_eq!(
                verdict["Bijection"],
                verdict["Injection"] && verdict["Surjection"] && verdict["Function"]
            );
            if verdict["Injection"] { prop_assert!(verdict["PartialInjection"]); }
            if verdict["Function"] { prop_assert!(verdict["PartialFunction"]); }
            if verdict["Surjection"] { prop_assert!(verdict["PartialSurjection"]); }
            prop_assert!(verdict["Relation"]);
        }

        #[test]
        fn composition_is_inverse_injection(
            na in 1u64..5, nb in 1u64..5,
            pairs in prop::collection::vec((0u64..5, 0u64..5), 0..12),
        ) {
            let inst = random_instance(na, nb, &pairs);
            let m = kind_model(RelationKind::Relation, true, true);
            let world = World::new(&m, &inst);
            let comp: BTreeSet<ObjectRef> = check_relation_kind(&world, m.relation("r").unwrap())
                .iter()
                .map(|d| match d.code {
                    DiagCode::SharedComponent | DiagCode::OrphanComponent => Some(b_ref(&d.subject)),
                    DiagCode::MultipleComponents => Some(a_ref(&d.subject)),
                    _ => None,
                })
                .map(Option::unwrap)
                .collect();

            // Brute force: the inverse as a total injection from B to A.
            let tuples = &inst.relations["r"];
            let mut expected = BTreeSet::new();
            for b in world.extent("B") {
                let n = tuples.iter().filter(|(_, t)| t == b).count();
                if n != 1 { expected.insert(*b); }
            }
            for a in world.extent("A") {
                let n = tuples.iter().filter(|(s, _)| s == a).count();
                if n > 1 { expected.insert(*a); }
            }
            prop_assert_eq!(comp, expected);
        }
    }

    fn inner(subject: &str) -> ObjectRef {
        let start = subject.find('#').unwrap() + 1;
        let end = subject[start..]
            .find(|c: char| !c.is_ascii_digit())
            .unwrap()
            + start;
        ObjectRef(subject[start..end].parse().unwrap())
    }

    fn a_ref(subject: &str) -> ObjectRef {
        inner(subject)
    }

    fn b_ref(subject: &str) -> ObjectRef {
        inner(subject)
    }
}
