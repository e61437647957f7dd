//! Name resolution and static sort checking.
//!
//! Parsed expressions contain bare `Name` and `Call` nodes. Resolution maps
//! each name to a bound variable, an attribute of `self`, a class extent, a
//! relation or an enumeration literal, turns calls into built-in operators,
//! accessors or functional application, binds roles to relations, and checks
//! that every subexpression has the sort its context requires. Resolution is
//! idempotent, so already resolved trees pass through unchanged.

use std::fmt;

use super::ast::{BinOp, Binder, Expr, Role, RoleRef, UnOp};
use crate::model::{Model, ModelError, ModelErrorKind, ScalarSort, Span};

/// Static sort of an expression. Class names annotate object-valued sorts;
/// an empty class name means "any class".
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sort {
    Bool,
    Int,
    Sym,
    Obj(String),
    Set(String),
    Bag(ScalarSort),
    Seq(String),
    Rel(String, String),
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => f.write_str("boolean"),
            Sort::Int => f.write_str("integer"),
            Sort::Sym => f.write_str("symbol"),
            Sort::Obj(c) => write!(f, "object {c}"),
            Sort::Set(c) => write!(f, "set of {c}"),
            Sort::Bag(s) => write!(f, "bag of {s:?}"),
            Sort::Seq(c) => write!(f, "sequence of {c}"),
            Sort::Rel(a, b) => write!(f, "relation {a} <-> {b}"),
        }
    }
}

fn scalar(s: ScalarSort) -> Sort {
    match s {
        ScalarSort::Int => Sort::Int,
        ScalarSort::Bool => Sort::Bool,
        ScalarSort::Sym => Sort::Sym,
    }
}

const BUILTINS: &[&str] = &[
    "inv", "closure", "dom", "ran", "image", "dres", "rres", "card", "bagsum", "bagmin", "bagmax",
    "bagOf", "members",
];

pub fn is_builtin(name: &str) -> bool {
    BUILTINS.contains(&name)
}

/// Resolve and sort-check `expr`. `class` is the class whose invariant is
/// being resolved (enabling `self` and bare attribute names).
pub fn resolve(
    expr: &Expr,
    model: &Model,
    class: Option<&str>,
    span: Span,
) -> Result<(Expr, Sort), ModelError> {
    let mut r = Resolver {
        model,
        class,
        span,
        bound: Vec::new(),
    };
    r.go(expr)
}

/// Resolve an axiom, which must be boolean.
pub fn resolve_axiom(
    expr: &Expr,
    model: &Model,
    class: Option<&str>,
    span: Span,
) -> Result<Expr, ModelError> {
    let (e, s) = resolve(expr, model, class, span)?;
    if s != Sort::Bool {
        return Err(ModelError::new(
            ModelErrorKind::Sort,
            span,
            format!("axiom must be boolean, found {s}"),
        ));
    }
    Ok(e)
}

struct Resolver<'m> {
    model: &'m Model,
    class: Option<&'m str>,
    span: Span,
    bound: Vec<(String, Sort)>,
}

type Res = Result<(Expr, Sort), ModelError>;

fn b(e: Expr) -> Box<Expr> {
    Box::new(e)
}

impl Resolver<'_> {
    fn err(&self, kind: ModelErrorKind, msg: impl Into<String>) -> ModelError {
        ModelError::new(kind, self.span, msg)
    }

    fn sort_err(&self, what: &str, want: &str, got: &Sort) -> ModelError {
        self.err(
            ModelErrorKind::Sort,
            format!("{what} expects {want}, found {got}"),
        )
    }

    fn lookup_var(&self, name: &str) -> Option<&Sort> {
        self.bound
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
    }

    /// Sort of attribute `attr` read from an object of class `class`.
    fn attr_sort(&self, class: &str, attr: &str) -> Result<ScalarSort, ModelError> {
        let mut sorts = Vec::new();
        for flat in self.model.flat_classes() {
            let relevant = class.is_empty()
                || self.model.lattice().is_subtype(&flat.name, class)
                || self.model.lattice().is_subtype(class, &flat.name);
            if relevant {
                if let Some(d) = flat.attrs.get(attr) {
                    sorts.push(d.sort());
                }
            }
        }
        sorts.dedup();
        match sorts.as_slice() {
            [] => Err(self.err(
                ModelErrorKind::UnknownAttribute,
                if class.is_empty() {
                    format!("no class has attribute `{attr}`")
                } else {
                    format!("`{class}` has no attribute `{attr}`")
                },
            )),
            [s] => Ok(*s),
            _ if sorts.iter().all(|s| *s == sorts[0]) => Ok(sorts[0]),
            _ => Err(self.err(
                ModelErrorKind::Sort,
                format!("attribute `{attr}` has different sorts in subclasses of `{class}`"),
            )),
        }
    }

    /// Accept both `begin` and `getBegin` spellings of an attribute.
    fn attr_name(&self, class: &str, raw: &str) -> Result<(String, ScalarSort), ModelError> {
        if let Ok(s) = self.attr_sort(class, raw) {
            return Ok((raw.to_string(), s));
        }
        if let Some(rest) = raw.strip_prefix("get") {
            for cand in accessor_candidates(rest) {
                if let Ok(s) = self.attr_sort(class, &cand) {
                    return Ok((cand, s));
                }
            }
        }
        self.attr_sort(class, raw).map(|s| (raw.to_string(), s))
    }

    fn as_set(&self, what: &str, s: Sort) -> Result<String, ModelError> {
        match s {
            Sort::Set(c) | Sort::Obj(c) => Ok(c),
            other => Err(self.sort_err(what, "a set of objects", &other)),
        }
    }

    fn as_obj(&self, what: &str, s: Sort) -> Result<String, ModelError> {
        match s {
            Sort::Obj(c) => Ok(c),
            other => Err(self.sort_err(what, "an object", &other)),
        }
    }

    fn as_rel(&self, what: &str, s: Sort) -> Result<(String, String), ModelError> {
        match s {
            Sort::Rel(a, b) => Ok((a, b)),
            other => Err(self.sort_err(what, "a relation", &other)),
        }
    }

    fn expect(&self, what: &str, want: Sort, got: Sort) -> Result<(), ModelError> {
        if want == got {
            Ok(())
        } else {
            Err(self.sort_err(what, &want.to_string(), &got))
        }
    }

    fn role(&self, role: &Role, from: &str) -> Result<(Role, String), ModelError> {
        let candidates = self.model.roles(&role.name);
        let lattice = self.model.lattice();
        let fits: Vec<&RoleRef> = candidates
            .iter()
            .filter(|c| role.target.as_ref().is_none_or(|t| t == *c))
            .filter(|c| {
                let decl = self.model.relation(&c.relation).expect("indexed relation");
                let start = if c.inverse {
                    &decl.target
                } else {
                    &decl.source
                };
                from.is_empty()
                    || lattice.is_subtype(from, start)
                    || lattice.is_subtype(start, from)
            })
            .collect();
        match fits.as_slice() {
            [] => Err(self.err(
                ModelErrorKind::UnknownRole,
                format!("no role `{}` starts from `{from}`", role.name),
            )),
            [one] => {
                let decl = self
                    .model
                    .relation(&one.relation)
                    .expect("indexed relation");
                let far = if one.inverse {
                    &decl.source
                } else {
                    &decl.target
                };
                Ok((
                    Role {
                        name: role.name.clone(),
                        target: Some((*one).clone()),
                    },
                    far.clone(),
                ))
            }
            many => Err(self.err(
                ModelErrorKind::AmbiguousRole,
                format!(
                    "role `{}` is ambiguous: {}",
                    role.name,
                    many.iter()
                        .map(|c| c.relation.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            )),
        }
    }

    fn go(&mut self, e: &Expr) -> Res {
        use Expr::*;
        Ok(match e {
            Bool(v) => (Bool(*v), Sort::Bool),
            Int(v) => (Int(*v), Sort::Int),
            Name(n) | Var(n) if self.lookup_var(n).is_some() => {
                (Var(n.clone()), self.lookup_var(n).cloned().expect("bound"))
            }
            Var(n) => {
                return Err(self.err(
                    ModelErrorKind::UnknownName,
                    format!("unbound variable `{n}`"),
                ))
            }
            Name(n) => self.name(n)?,
            SelfObj => match self.class {
                Some(c) => (SelfObj, Sort::Obj(c.to_string())),
                None => {
                    return Err(self.err(
                        ModelErrorKind::UnknownName,
                        "`self` is only available in class invariants",
                    ))
                }
            },
            SelfAttr(a) => {
                let class = self.class.ok_or_else(|| {
                    self.err(ModelErrorKind::UnknownName, format!("unknown name `{a}`"))
                })?;
                let s = self.attr_sort(class, a)?;
                (SelfAttr(a.clone()), scalar(s))
            }
            EnumLit(s) => (EnumLit(s.clone()), Sort::Sym),
            Extent(c) => {
                if !self.model.lattice().contains(c) {
                    return Err(
                        self.err(ModelErrorKind::UnknownClass, format!("unknown class `{c}`"))
                    );
                }
                (Extent(c.clone()), Sort::Set(c.clone()))
            }
            Rel(r) => {
                let d = self.model.relation(r).ok_or_else(|| {
                    self.err(
                        ModelErrorKind::UnknownRelation,
                        format!("unknown relation `{r}`"),
                    )
                })?;
                (
                    Rel(r.clone()),
                    Sort::Rel(d.source.clone(), d.target.clone()),
                )
            }
            Call(name, args) => self.call(name, args)?,
            Attr(obj, a) => self.accessor(obj, a)?,
            Apply(f, x) => self.apply(f, x)?,
            Inverse(r) => {
                let (r, s) = self.go(r)?;
                let (a, bb) = self.as_rel("inv", s)?;
                (Inverse(b(r)), Sort::Rel(bb, a))
            }
            Closure(r) => {
                let (r, s) = self.go(r)?;
                let (a, bb) = self.as_rel("closure", s)?;
                (Closure(b(r)), Sort::Rel(a, bb))
            }
            Dom(r) => {
                let (r, s) = self.go(r)?;
                let (a, _) = self.as_rel("dom", s)?;
                (Dom(b(r)), Sort::Set(a))
            }
            Ran(r) => {
                let (r, s) = self.go(r)?;
                let (_, bb) = self.as_rel("ran", s)?;
                (Ran(b(r)), Sort::Set(bb))
            }
            Image(r, set) => {
                let (r, rs) = self.go(r)?;
                let (_, bb) = self.as_rel("image", rs)?;
                let (set, ss) = self.go(set)?;
                self.as_set("image", ss)?;
                (Image(b(r), b(set)), Sort::Set(bb))
            }
            DomRestrict(set, r) => {
                let (set, ss) = self.go(set)?;
                self.as_set("dres", ss)?;
                let (r, rs) = self.go(r)?;
                let (a, bb) = self.as_rel("dres", rs)?;
                (DomRestrict(b(set), b(r)), Sort::Rel(a, bb))
            }
            RanRestrict(r, set) => {
                let (r, rs) = self.go(r)?;
                let (a, bb) = self.as_rel("rres", rs)?;
                let (set, ss) = self.go(set)?;
                self.as_set("rres", ss)?;
                (RanRestrict(b(r), b(set)), Sort::Rel(a, bb))
            }
            LeadsTo(o, role) => {
                let (o, s) = self.go(o)?;
                let c = self.as_obj("~>", s)?;
                let (role, far) = self.role(role, &c)?;
                (LeadsTo(b(o), role), Sort::Set(far))
            }
            Dot(set, role) => {
                let (set, s) = self.go(set)?;
                let c = self.as_set(".", s)?;
                let (role, far) = self.role(role, &c)?;
                (Dot(b(set), role), Sort::Set(far))
            }
            Arrow(set, a) => {
                let (set, s) = self.go(set)?;
                let c = self.as_set("->", s)?;
                let (a, sort) = self.attr_name(&c, a)?;
                (Arrow(b(set), a), Sort::Bag(sort))
            }
            Harpoon(set, a) => {
                let (set, s) = self.go(set)?;
                let c = self.as_set("=>", s)?;
                let (a, sort) = self.attr_name(&c, a)?;
                (Harpoon(b(set), a), scalar(sort))
            }
            BagOf(a, set) => {
                let (set, s) = self.go(set)?;
                let c = self.as_set("bagOf", s)?;
                let (a, sort) = self.attr_name(&c, a)?;
                (BagOf(a, b(set)), Sort::Bag(sort))
            }
            Card(x) => {
                let (x, s) = self.go(x)?;
                match s {
                    Sort::Set(_) | Sort::Rel(..) | Sort::Bag(_) | Sort::Seq(_) => {}
                    other => {
                        return Err(self.sort_err(
                            "card",
                            "a set, relation, bag or sequence",
                            &other,
                        ))
                    }
                }
                (Card(b(x)), Sort::Int)
            }
            BagSum(x) | BagMin(x) | BagMax(x) => {
                let (x, s) = self.go(x)?;
                self.expect("bag aggregate", Sort::Bag(ScalarSort::Int), s)?;
                let node = match e {
                    BagSum(_) => BagSum(b(x)),
                    BagMin(_) => BagMin(b(x)),
                    _ => BagMax(b(x)),
                };
                (node, Sort::Int)
            }
            Members(q) => {
                let (q, s) = self.go(q)?;
                match s {
                    Sort::Seq(c) => (Members(b(q)), Sort::Set(c)),
                    other => return Err(self.sort_err("members", "a sequence", &other)),
                }
            }
            SetLit(items) => {
                let mut out = Vec::new();
                let mut class: Option<String> = None;
                for it in items {
                    let (it, s) = self.go(it)?;
                    let c = self.as_obj("set literal", s)?;
                    class = Some(match class {
                        None => c,
                        Some(prev) if prev == c => prev,
                        Some(_) => String::new(),
                    });
                    out.push(it);
                }
                (SetLit(out), Sort::Set(class.unwrap_or_default()))
            }
            Unary(UnOp::Not, x) => {
                let (x, s) = self.go(x)?;
                self.expect("not", Sort::Bool, s)?;
                (Unary(UnOp::Not, b(x)), Sort::Bool)
            }
            Unary(UnOp::Neg, x) => {
                let (x, s) = self.go(x)?;
                self.expect("unary minus", Sort::Int, s)?;
                match x {
                    Int(v) if v != i64::MIN => (Int(-v), Sort::Int),
                    x => (Unary(UnOp::Neg, b(x)), Sort::Int),
                }
            }
            Binary(op, l, r) => self.binary(*op, l, r)?,
            Quant(q, binders, guard, body) => {
                let depth = self.bound.len();
                let mut out = Vec::new();
                for bd in binders {
                    let (dom, s) = self.go(&bd.domain)?;
                    let c = match s {
                        Sort::Set(c) => c,
                        other => {
                            self.bound.truncate(depth);
                            return Err(self.sort_err(
                                "quantifier domain",
                                "a set of objects",
                                &other,
                            ));
                        }
                    };
                    out.push(Binder {
                        var: bd.var.clone(),
                        domain: dom,
                    });
                    self.bound.push((bd.var.clone(), Sort::Obj(c)));
                }
                let res = (|| {
                    let guard = match guard {
                        Some(g) => {
                            let (g, s) = self.go(g)?;
                            self.expect("quantifier guard", Sort::Bool, s)?;
                            Some(b(g))
                        }
                        None => None,
                    };
                    let (body, s) = self.go(body)?;
                    self.expect("quantifier body", Sort::Bool, s)?;
                    Ok((guard, body))
                })();
                self.bound.truncate(depth);
                let (guard, body) = res?;
                (Quant(*q, out, guard, b(body)), Sort::Bool)
            }
        })
    }

    fn name(&mut self, n: &str) -> Res {
        if let Some(c) = self.class {
            if self.model.flat(c).is_some_and(|f| f.attrs.contains_key(n)) {
                return self.go(&Expr::SelfAttr(n.to_string()));
            }
        }
        if self.model.lattice().contains(n) {
            return self.go(&Expr::Extent(n.to_string()));
        }
        if self.model.relation(n).is_some() {
            return self.go(&Expr::Rel(n.to_string()));
        }
        if self.model.is_enum_literal(n) {
            return Ok((Expr::EnumLit(n.to_string()), Sort::Sym));
        }
        Err(self.err(ModelErrorKind::UnknownName, format!("unknown name `{n}`")))
    }

    fn accessor(&mut self, obj: &Expr, raw: &str) -> Res {
        let (o, s) = self.go(obj)?;
        let c = self.as_obj("attribute accessor", s)?;
        let (a, sort) = self.attr_name(&c, raw)?;
        let node = match o {
            Expr::SelfObj if self.lookup_var(&a).is_none() => Expr::SelfAttr(a),
            o => Expr::Attr(b(o), a),
        };
        Ok((node, scalar(sort)))
    }

    fn apply(&mut self, f: &Expr, x: &Expr) -> Res {
        let (f, fs) = self.go(f)?;
        let (_, tgt) = self.as_rel("application", fs)?;
        let (x, xs) = self.go(x)?;
        self.as_obj("application argument", xs)?;
        let ordered =
            matches!(&f, Expr::Rel(r) if self.model.relation(r).is_some_and(|d| d.is_ordered()));
        let sort = if ordered {
            Sort::Seq(tgt)
        } else {
            Sort::Obj(tgt)
        };
        Ok((Expr::Apply(b(f), b(x)), sort))
    }

    fn call(&mut self, name: &str, args: &[Expr]) -> Res {
        use Expr::*;
        let arity = |n: usize| -> Result<(), ModelError> {
            if args.len() == n {
                Ok(())
            } else {
                Err(self.err(
                    ModelErrorKind::Sort,
                    format!("`{name}` takes {n} argument(s), {} given", args.len()),
                ))
            }
        };
        let one = || b(args[0].clone());
        let two = || (b(args[0].clone()), b(args[1].clone()));
        if is_builtin(name) {
            let node = match name {
                "inv" => {
                    arity(1)?;
                    Inverse(one())
                }
                "closure" => {
                    arity(1)?;
                    Closure(one())
                }
                "dom" => {
                    arity(1)?;
                    Dom(one())
                }
                "ran" => {
                    arity(1)?;
                    Ran(one())
                }
                "card" => {
                    arity(1)?;
                    Card(one())
                }
                "bagsum" => {
                    arity(1)?;
                    BagSum(one())
                }
                "bagmin" => {
                    arity(1)?;
                    BagMin(one())
                }
                "bagmax" => {
                    arity(1)?;
                    BagMax(one())
                }
                "members" => {
                    arity(1)?;
                    Members(one())
                }
                "image" => {
                    arity(2)?;
                    let (x, y) = two();
                    Image(x, y)
                }
                "dres" => {
                    arity(2)?;
                    let (x, y) = two();
                    DomRestrict(x, y)
                }
                "rres" => {
                    arity(2)?;
                    let (x, y) = two();
                    RanRestrict(x, y)
                }
                "bagOf" => {
                    arity(2)?;
                    let attr = match &args[0] {
                        Name(a) => a.clone(),
                        _ => {
                            return Err(self.err(
                                ModelErrorKind::Sort,
                                "bagOf expects an attribute name first",
                            ))
                        }
                    };
                    BagOf(attr, b(args[1].clone()))
                }
                _ => unreachable!("builtin list"),
            };
            return self.go(&node);
        }
        if self.lookup_var(name).is_none() && self.model.relation(name).is_some() {
            arity(1)?;
            return self.apply(&Rel(name.to_string()), &args[0]);
        }
        if let Some(rest) = name.strip_prefix("get") {
            if !rest.is_empty() {
                arity(1)?;
                return self.accessor(&args[0], name);
            }
        }
        Err(self.err(
            ModelErrorKind::UnknownName,
            format!("unknown function `{name}`"),
        ))
    }

    fn binary(&mut self, op: BinOp, l: &Expr, r: &Expr) -> Res {
        use BinOp::*;
        let (l, ls) = self.go(l)?;
        let (r, rs) = self.go(r)?;
        let node = |op| Expr::bin(op, l.clone(), r.clone());
        Ok(match op {
            And | Or | Implies | Iff => {
                self.expect(op.symbol(), Sort::Bool, ls)?;
                self.expect(op.symbol(), Sort::Bool, rs)?;
                (node(op), Sort::Bool)
            }
            Eq | Ne => {
                let compatible = match (&ls, &rs) {
                    (Sort::Obj(_) | Sort::Set(_), Sort::Obj(_) | Sort::Set(_)) => true,
                    (Sort::Rel(..), Sort::Rel(..)) => true,
                    (Sort::Seq(_), Sort::Seq(_)) => true,
                    (a, b) => a == b,
                };
                if !compatible {
                    return Err(self.err(
                        ModelErrorKind::Sort,
                        format!("cannot compare {ls} with {rs}"),
                    ));
                }
                (node(op), Sort::Bool)
            }
            Lt | Le | Gt | Ge => {
                self.expect(op.symbol(), Sort::Int, ls)?;
                self.expect(op.symbol(), Sort::Int, rs)?;
                (node(op), Sort::Bool)
            }
            Add | RelUnion if matches!((&ls, &rs), (Sort::Rel(..), Sort::Rel(..))) => {
                let (a, bb) = self.as_rel("+", ls)?;
                (node(RelUnion), Sort::Rel(a, bb))
            }
            Add | Sub | Mul | Div | Mod | RelUnion => {
                self.expect(op.symbol(), Sort::Int, ls)?;
                self.expect(op.symbol(), Sort::Int, rs)?;
                (node(if op == RelUnion { Add } else { op }), Sort::Int)
            }
            In => {
                self.as_obj("in", ls)?;
                self.as_set("in", rs)?;
                (node(op), Sort::Bool)
            }
            SubsetEq => {
                match (&ls, &rs) {
                    (Sort::Rel(..), Sort::Rel(..)) => {}
                    _ => {
                        self.as_set("subseteq", ls)?;
                        self.as_set("subseteq", rs)?;
                    }
                }
                (node(op), Sort::Bool)
            }
            Union | Inter | Diff => match (&ls, &rs) {
                (Sort::Rel(a, b1), Sort::Rel(..)) => (node(op), Sort::Rel(a.clone(), b1.clone())),
                _ => {
                    let a = self.as_set(op.symbol(), ls)?;
                    let c = self.as_set(op.symbol(), rs)?;
                    let class = if a == c || op == Diff {
                        a
                    } else {
                        String::new()
                    };
                    (node(op), Sort::Set(class))
                }
            },
        })
    }
}

/// `Begin` -> `begin`, then `Begin`.
fn accessor_candidates(rest: &str) -> Vec<String> {
    let mut chars = rest.chars();
    let mut out = Vec::new();
    if let Some(first) = chars.next() {
        out.push(first.to_lowercase().chain(chars).collect());
        out.push(rest.to_string());
    }
    out
}

/// The accessor spelling of an attribute: `begin` -> `getBegin`.
pub fn accessor_name(attr: &str) -> String {
    let mut chars = attr.chars();
    match chars.next() {
        Some(first) => format!("get{}{}", first.to_uppercase(), chars.as_str()),
        None => "get".to_string(),
    }
}
