use std::fmt::Write;

use crate::model::{ClassDef, Model};
use crate::relations::{Multiplicity, Ordering, RelationDecl};

/// Render a model in surface syntax; parsing the output yields the same
/// model.
pub fn print_model(model: &Model) -> String {
    let mut out = String::new();
    for c in &model.classes {
        out.push_str(&class(c));
        out.push('\n');
    }
    for r in &model.relations {
        out.push_str(&relation(r));
        out.push('\n');
    }
    if !model.relations.is_empty() && !model.constraints.is_empty() {
        out.push('\n');
    }
    for c in &model.constraints {
        let _ = writeln!(out, "constraint {} : {};", c.name, c.expr);
    }
    out
}

fn class(c: &ClassDef) -> String {
    let mut s = format!(
        "class {} : {}",
        c.name,
        if c.is_abstract {
            "abstract"
        } else {
            "concrete"
        }
    );
    if !c.discriminators.is_empty() {
        let _ = write!(s, " discriminators {}", c.discriminators.join(", "));
    }
    if !c.parents.is_empty() {
        let parents: Vec<String> = c
            .parents
            .iter()
            .map(|p| {
                let mut t = p.parent.clone();
                if let Some(d) = &p.discriminator {
                    let _ = write!(t, " via {d}");
                }
                if !p.renames.is_empty() {
                    let r: Vec<String> =
                        p.renames.iter().map(|(o, n)| format!("{n}/{o}")).collect();
                    let _ = write!(t, " rename {}", r.join(", "));
                }
                t
            })
            .collect();
        let _ = write!(s, " inherits {}", parents.join(", "));
    }
    if c.attrs.is_empty() && c.invariants.is_empty() {
        s.push_str(" {}\n");
        return s;
    }
    s.push_str(" {\n");
    for (a, d) in &c.attrs {
        let _ = writeln!(s, "  {a} : {d};");
    }
    for ax in &c.invariants {
        let _ = writeln!(s, "  invariant {};", ax.expr);
    }
    s.push_str("}\n");
    s
}

fn multiplicity(m: &Multiplicity) -> String {
    if m.per_target.min == 0 && m.per_target.max.is_none() {
        m.per_source.to_string()
    } else {
        format!("{}, {}", m.per_source, m.per_target)
    }
}

fn relation(r: &RelationDecl) -> String {
    let mut s = format!("relation {} : {} -> {}", r.name, r.source, r.target);
    let mut kw: Vec<String> = Vec::new();
    if !r.is_ordered() {
        kw.extend(r.kind.keywords().iter().map(|k| k.to_string()));
    }
    match r.ordering {
        Ordering::Unordered => {}
        Ordering::Seq => kw.push("seq".into()),
        Ordering::Iseq => kw.push("iseq".into()),
    }
    if r.composition {
        kw.push(
            if r.inverse_total {
                "composition total"
            } else {
                "composition"
            }
            .into(),
        );
    }
    if r.aggregation {
        kw.push("aggregation".into());
    }
    if let Some(p) = &r.subset_of {
        kw.push(format!("subset of {p}"));
    }
    if let Some(reif) = &r.reified_by {
        kw.push(format!(
            "reified by {}{}",
            reif.class,
            if reif.total { "" } else { " partial" }
        ));
    }
    if !r.multiplicity.is_default() {
        kw.push(format!("mult {}", multiplicity(&r.multiplicity)));
    }
    if let Some((l, rr)) = &r.roles {
        kw.push(format!("roles {l}, {rr}"));
    }
    for k in kw {
        s.push(' ');
        s.push_str(&k);
    }
    s.push(';');
    s
}

/// The expanded form of a model: every class with its full structure, its
/// full invariant (each conjunct tagged with the class that declared it),
/// and its type as the union of its own instances and its direct subtypes.
pub fn expand(model: &Model) -> String {
    let mut out = String::new();
    for c in &model.classes {
        let Some(flat) = model.flat(&c.name) else {
            continue;
        };
        let _ = writeln!(
            out,
            "class {} : {}",
            c.name,
            if c.is_abstract {
                "abstract"
            } else {
                "concrete"
            }
        );
        out.push_str("  structure\n");
        if flat.attrs.is_empty() {
            out.push_str("    (none)\n");
        }
        for (a, d) in &flat.attrs {
            let _ = writeln!(out, "    {a} : {d}");
        }
        out.push_str("  invariant\n");
        if flat.invariants.is_empty() {
            out.push_str("    true\n");
        }
        for ax in &flat.invariants {
            let _ = writeln!(out, "    {}  [{}]", ax.expr, ax.origin);
        }
        let children: Vec<&str> = model
            .classes
            .iter()
            .filter(|k| k.parents.iter().any(|p| p.parent == c.name))
            .map(|k| k.name.as_str())
            .collect();
        let mut ty = format!("instances({})", c.name);
        for k in &children {
            let _ = write!(ty, " union {k}");
        }
        let _ = writeln!(out, "  type {} = {ty}", c.name);
        if c.is_abstract {
            let _ = writeln!(out, "  instances({}) = {{}}", c.name);
        }
        out.push('\n');
    }
    let all: Vec<String> = model
        .classes
        .iter()
        .map(|c| format!("instances({})", c.name))
        .collect();
    if all.len() > 1 {
        let _ = writeln!(out, "disjoint {}", all.join(", "));
    }
    out
}
