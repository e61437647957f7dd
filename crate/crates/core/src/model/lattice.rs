use std::collections::{BTreeMap, BTreeSet};

use super::{ClassDef, ModelError, ModelErrorKind, ObjectRef, Span};
use crate::diag::{DiagCode, Diagnostic};
use crate::instance::Instance;

/// Subtype structure of a model: which classes' instances belong to which
/// type, and how each class is split by its discriminators.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeLattice {
    /// Reflexive-transitive descendants of every class.
    pub subtypes_of: BTreeMap<String, BTreeSet<String>>,
    /// Direct children of every class, grouped by discriminator label.
    pub partitions: BTreeMap<String, BTreeMap<String, BTreeSet<String>>>,
    pub abstract_classes: BTreeSet<String>,
}

impl TypeLattice {
    pub fn contains(&self, class: &str) -> bool {
        self.subtypes_of.contains_key(class)
    }

    pub fn subtypes(&self, class: &str) -> Option<&BTreeSet<String>> {
        self.subtypes_of.get(class)
    }

    /// `sub` is `sup` or one of its descendants.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        self.subtypes_of.get(sup).is_some_and(|s| s.contains(sub))
    }

    pub fn is_abstract(&self, class: &str) -> bool {
        self.abstract_classes.contains(class)
    }

    /// Concrete classes whose instances belong to type `class`.
    pub fn concrete_subtypes(&self, class: &str) -> Vec<String> {
        self.subtypes_of
            .get(class)
            .map(|s| {
                s.iter()
                    .filter(|c| !self.abstract_classes.contains(*c))
                    .cloned()
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn classes(&self) -> impl Iterator<Item = &String> {
        self.subtypes_of.keys()
    }
}

/// Build the subtype lattice. Fails on unknown parents and on cycles.
pub fn build_type_lattice(classes: &[ClassDef]) -> Result<TypeLattice, ModelError> {
    let names: BTreeSet<&str> = classes.iter().map(|c| c.name.as_str()).collect();
    let mut children: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut partitions: BTreeMap<String, BTreeMap<String, BTreeSet<String>>> = BTreeMap::new();
    for c in classes {
        children.entry(c.name.clone()).or_default();
        partitions.entry(c.name.clone()).or_default();
    }
    for c in classes {
        for link in &c.parents {
            if !names.contains(link.parent.as_str()) {
                return Err(ModelError::new(
                    ModelErrorKind::UnknownClass,
                    c.span,
                    format!(
                        "class `{}` inherits unknown class `{}`",
                        c.name, link.parent
                    ),
                ));
            }
            children
                .get_mut(&link.parent)
                .expect("parent registered")
                .insert(c.name.clone());
            partitions
                .get_mut(&link.parent)
                .expect("parent registered")
                .entry(link.label().to_string())
                .or_default()
                .insert(c.name.clone());
        }
    }

    // Kahn's algorithm: reject cycles, then close descendants bottom-up.
    let mut indegree: BTreeMap<&str, usize> =
        classes.iter().map(|c| (c.name.as_str(), 0)).collect();
    for kids in children.values() {
        for k in kids {
            *indegree.get_mut(k.as_str()).expect("known class") += 1;
        }
    }
    let mut queue: Vec<&str> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(n, _)| *n)
        .collect();
    let mut topo = Vec::new();
    while let Some(n) = queue.pop() {
        topo.push(n);
        for k in &children[n] {
            let d = indegree.get_mut(k.as_str()).expect("known class");
            *d -= 1;
            if *d == 0 {
                queue.push(k.as_str());
            }
        }
    }
    if topo.len() != classes.len() {
        let stuck: Vec<&str> = indegree
            .iter()
            .filter(|(_, d)| **d > 0)
            .map(|(n, _)| *n)
            .collect();
        let span = classes
            .iter()
            .find(|c| c.name == stuck[0])
            .map(|c| c.span)
            .unwrap_or(Span::default());
        return Err(ModelError::new(
            ModelErrorKind::Cycle,
            span,
            format!("cyclic inheritance among {}", stuck.join(", ")),
        ));
    }

    let mut subtypes_of: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for n in topo.iter().rev() {
        let mut set = BTreeSet::new();
        set.insert(n.to_string());
        for k in &children[*n] {
            set.extend(subtypes_of[k].iter().cloned());
        }
        subtypes_of.insert(n.to_string(), set);
    }

    Ok(TypeLattice {
        subtypes_of,
        partitions,
        abstract_classes: classes
            .iter()
            .filter(|c| c.is_abstract)
            .map(|c| c.name.clone())
            .collect(),
    })
}

/// Union of the creation-class sets of every subtype of `class`.
pub fn type_extent(
    instance: &Instance,
    lattice: &TypeLattice,
    class: &str,
) -> Result<BTreeSet<ObjectRef>, ModelError> {
    let subs = lattice.subtypes(class).ok_or_else(|| {
        ModelError::new(
            ModelErrorKind::UnknownClass,
            Span::default(),
            format!("unknown class `{class}`"),
        )
    })?;
    Ok(instance
        .objects
        .iter()
        .filter(|o| subs.contains(&o.class))
        .map(|o| o.r)
        .collect())
}

/// Multi-discriminator rules: a class split along two or more discriminators
/// and its direct children must be abstract, and every concrete descendant
/// must inherit from at least one child under each discriminator.
pub fn check_discriminators(classes: &[ClassDef], lattice: &TypeLattice) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for root in classes.iter().filter(|c| c.discriminators.len() >= 2) {
        if !root.is_abstract {
            out.push(Diagnostic::new(
                DiagCode::ConcreteDiscriminatorRoot,
                root.name.clone(),
                format!(
                    "`{}` is specialized along {} discriminators and must be abstract",
                    root.name,
                    root.discriminators.len()
                ),
            ));
        }
        let parts = lattice
            .partitions
            .get(&root.name)
            .cloned()
            .unwrap_or_default();
        let direct: BTreeSet<&String> = parts.values().flatten().collect();
        for child in &direct {
            if !lattice.is_abstract(child) {
                out.push(Diagnostic::new(
                    DiagCode::ConcreteDiscriminatorChild,
                    (*child).clone(),
                    format!(
                        "`{child}` directly specializes multi-discriminator class `{}` and must be abstract",
                        root.name
                    ),
                ));
            }
        }
        for class in lattice.concrete_subtypes(&root.name) {
            if class == root.name || direct.contains(&class) {
                continue;
            }
            for label in &root.discriminators {
                let covered = parts
                    .get(label)
                    .is_some_and(|kids| kids.iter().any(|k| lattice.is_subtype(&class, k)));
                if !covered {
                    out.push(Diagnostic::new(
                        DiagCode::MissingDiscriminator,
                        class.clone(),
                        format!(
                            "concrete class `{class}` under `{}` inherits no class of discriminator `{label}`",
                            root.name
                        ),
                    ));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClassDef, ParentLink};

    fn class(name: &str, abs: bool, parents: &[(&str, Option<&str>)]) -> ClassDef {
        let mut c = ClassDef::new(name, abs);
        for (p, d) in parents {
            c.parents.push(ParentLink {
                parent: p.to_string(),
                discriminator: d.map(str::to_string),
                renames: vec![],
            });
        }
        c
    }

    fn vehicle(bicycle_parents: &[(&str, Option<&str>)]) -> Vec<ClassDef> {
        let mut v = class("Vehicle", true, &[]);
        v.discriminators = vec!["powermode".into(), "element".into()];
        vec![
            v,
            class("Human", true, &[("Vehicle", Some("powermode"))]),
            class("Gas", true, &[("Vehicle", Some("powermode"))]),
            class("Ground", true, &[("Vehicle", Some("element"))]),
            class("Water", true, &[("Vehicle", Some("element"))]),
            class("Bicycle", false, bicycle_parents),
        ]
    }

    #[test]
    fn abc_subtypes() {
        let cs = vec![
            class("A", false, &[]),
            class("B", false, &[("A", None)]),
            class("C", false, &[("A", None)]),
        ];
        let l = build_type_lattice(&cs).unwrap();
        assert_eq!(l.subtypes("A").unwrap().len(), 3);
        assert_eq!(
            l.subtypes("B").unwrap().iter().collect::<Vec<_>>(),
            vec!["B"]
        );
    }

    #[test]
    fn single_class_is_reflexive() {
        let l = build_type_lattice(&[class("X", false, &[])]).unwrap();
        assert_eq!(
            l.subtypes("X").unwrap().iter().collect::<Vec<_>>(),
            vec!["X"]
        );
    }

    #[test]
    fn vehicle_lattice_and_discriminators() {
        let cs = vehicle(&[("Human", None), ("Ground", None)]);
        let l = build_type_lattice(&cs).unwrap();
        let v = l.subtypes("Vehicle").unwrap();
        for c in ["Human", "Ground", "Bicycle"] {
            assert!(v.contains(c));
        }
        assert!(check_discriminators(&cs, &l).is_empty());
    }

    #[test]
    fn missing_discriminator_element() {
        let cs = vehicle(&[("Human", None)]);
        let l = build_type_lattice(&cs).unwrap();
        let d = check_discriminators(&cs, &l);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagCode::MissingDiscriminator);
        assert!(d[0].message.contains("no class of discriminator"));
    }

    #[test]
    fn concrete_root_and_children_flagged() {
        let mut cs = vehicle(&[("Human", None), ("Ground", None)]);
        cs[0].is_abstract = false;
        cs[1].is_abstract = false;
        let l = build_type_lattice(&cs).unwrap();
        let codes: Vec<_> = check_discriminators(&cs, &l)
            .iter()
            .map(|d| d.code)
            .collect();
        assert!(codes.contains(&DiagCode::ConcreteDiscriminatorRoot));
        assert!(codes.contains(&DiagCode::ConcreteDiscriminatorChild));
    }

    #[test]
    fn default_discriminators_are_vacuous() {
        let cs = vec![class("A", false, &[]), class("B", false, &[("A", None)])];
        let l = build_type_lattice(&cs).unwrap();
        assert!(check_discriminators(&cs, &l).is_empty());
    }

    #[test]
    fn cycle_detected() {
        let cs = vec![
            class("A", false, &[("B", None)]),
            class("B", false, &[("A", None)]),
        ];
        assert_eq!(
            build_type_lattice(&cs).unwrap_err().kind,
            ModelErrorKind::Cycle
        );
    }

    #[test]
    fn diamond_counts_once() {
        let cs = vec![
            class("Top", false, &[]),
            class("L", false, &[("Top", None)]),
            class("R", false, &[("Top", None)]),
            class("Bottom", false, &[("L", None), ("R", None)]),
        ];
        let l = build_type_lattice(&cs).unwrap();
        assert_eq!(l.subtypes("Top").unwrap().len(), 4);
    }
}
