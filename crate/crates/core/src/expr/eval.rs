use std::borrow::Cow;
use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::ast::{BinOp, Binder, Expr, Quant, RoleRef, UnOp};
use super::bag::{transitive_closure, Bag};
use crate::instance::World;
use crate::model::{AttrError, ObjectRef, Value};

type Pairs = BTreeSet<(ObjectRef, ObjectRef)>;
type Refs = BTreeSet<ObjectRef>;

/// Runtime values of constraint expressions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Val {
    Bool(bool),
    Int(i64),
    Sym(String),
    Obj(ObjectRef),
    Set(Refs),
    Bag(Bag<Value>),
    Seq(Vec<ObjectRef>),
    Rel(Pairs),
}

impl From<Value> for Val {
    fn from(v: Value) -> Self {
        match v {
            Value::Bool(b) => Val::Bool(b),
            Value::Int(i) => Val::Int(i),
            Value::Sym(s) => Val::Sym(s),
        }
    }
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let refs = |it: &mut dyn Iterator<Item = String>| it.collect::<Vec<_>>().join(", ");
        match self {
            Val::Bool(b) => write!(f, "{b}"),
            Val::Int(i) => write!(f, "{i}"),
            Val::Sym(s) => f.write_str(s),
            Val::Obj(r) => write!(f, "{r}"),
            Val::Set(s) => write!(f, "{{{}}}", refs(&mut s.iter().map(|r| r.to_string()))),
            Val::Bag(b) => write!(f, "{b}"),
            Val::Seq(q) => write!(f, "<{}>", refs(&mut q.iter().map(|r| r.to_string()))),
            Val::Rel(p) => write!(
                f,
                "{{{}}}",
                refs(&mut p.iter().map(|(a, b)| format!("({a},{b})")))
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("expected exactly one distinct value of `{attr}`, found {found}")]
    NonUniqueValue { attr: String, found: usize },
    #[error("object {0} has no attribute `{1}`")]
    UnknownAttribute(ObjectRef, String),
    #[error("{0} of an empty bag")]
    EmptyAggregate(&'static str),
    #[error("arithmetic error: {0}")]
    ArithmeticError(String),
    #[error("dangling reference {0}")]
    DanglingReference(ObjectRef),
    #[error("`{rel}` maps {arg} to {count} values")]
    NotFunctional {
        rel: String,
        arg: ObjectRef,
        count: usize,
    },
    #[error("ill-sorted expression: {0}")]
    Sort(String),
}

impl From<AttrError> for EvalError {
    fn from(e: AttrError) -> Self {
        match e {
            AttrError::DanglingReference(r) => EvalError::DanglingReference(r),
            AttrError::UnknownAttribute(r, a) | AttrError::MissingValue(r, a) => {
                EvalError::UnknownAttribute(r, a)
            }
        }
    }
}

/// Variable bindings. Bound variables always denote objects.
#[derive(Clone, Debug, Default)]
pub struct Env {
    pub self_obj: Option<ObjectRef>,
    vars: Vec<(String, ObjectRef)>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_self(r: ObjectRef) -> Self {
        Env {
            self_obj: Some(r),
            vars: Vec::new(),
        }
    }

    pub fn bind(mut self, var: impl Into<String>, r: ObjectRef) -> Self {
        self.vars.push((var.into(), r));
        self
    }

    fn get(&self, var: &str) -> Option<ObjectRef> {
        self.vars
            .iter()
            .rev()
            .find(|(n, _)| n == var)
            .map(|(_, r)| *r)
    }
}

/// Evaluate a resolved expression over a complete instance.
pub fn evaluate(expr: &Expr, world: &World, env: &Env) -> Result<Val, EvalError> {
    let mut ev = Evaluator {
        world,
        env: env.clone(),
    };
    ev.eval(expr)
}

/// Evaluate a boolean expression.
pub fn evaluate_bool(expr: &Expr, world: &World, env: &Env) -> Result<bool, EvalError> {
    match evaluate(expr, world, env)? {
        Val::Bool(b) => Ok(b),
        other => Err(EvalError::Sort(format!(
            "expected a boolean, found {other}"
        ))),
    }
}

struct Evaluator<'w, 'a> {
    world: &'w World<'a>,
    env: Env,
}

fn sort_err<T>(what: &str, v: &Val) -> Result<T, EvalError> {
    Err(EvalError::Sort(format!("{what}: unexpected value {v}")))
}

fn arith(what: &str) -> EvalError {
    EvalError::ArithmeticError(format!("{what} overflows"))
}

/// Floor division and the matching remainder.
pub fn floor_divmod(a: i64, b: i64) -> Result<(i64, i64), EvalError> {
    if b == 0 {
        return Err(EvalError::ArithmeticError("division by zero".into()));
    }
    let mut q = a.checked_div(b).ok_or_else(|| arith("div"))?;
    if a % b != 0 && ((a < 0) != (b < 0)) {
        q -= 1;
    }
    let r = a - b * q;
    Ok((q, r))
}

pub fn image(tuples: &Pairs, set: &Refs) -> Refs {
    let mut out = BTreeSet::new();
    for s in set {
        out.extend(
            tuples
                .range((*s, ObjectRef(0))..=(*s, ObjectRef(u64::MAX)))
                .map(|&(_, t)| t),
        );
    }
    out
}

impl<'w, 'a> Evaluator<'w, 'a> {
    fn eval(&mut self, e: &Expr) -> Result<Val, EvalError> {
        use Expr::*;
        Ok(match e {
            Bool(b) => Val::Bool(*b),
            Int(i) => Val::Int(*i),
            EnumLit(s) => Val::Sym(s.clone()),
            Var(v) => Val::Obj(
                self.env
                    .get(v)
                    .ok_or_else(|| EvalError::Sort(format!("unbound variable `{v}`")))?,
            ),
            SelfObj => Val::Obj(self.self_obj()?),
            SelfAttr(a) => {
                let r = self.self_obj()?;
                self.world.attr(r, a)?.clone().into()
            }
            Attr(o, a) => {
                let r = self.obj(o)?;
                self.world.attr(r, a)?.clone().into()
            }
            Extent(_) | SetLit(_) | Dom(_) | Ran(_) | Image(..) | LeadsTo(..) | Dot(..)
            | Members(_) => Val::Set(self.set(e)?.into_owned()),
            Rel(_) | Inverse(_) | Closure(_) | DomRestrict(..) | RanRestrict(..) => {
                Val::Rel(self.rel(e)?.into_owned())
            }
            Apply(f, x) => self.apply(f, x)?,
            Arrow(s, a) | BagOf(a, s) => Val::Bag(self.bag(s, a)?),
            Harpoon(s, a) => {
                let bag = self.bag(s, a)?;
                if bag.distinct() != 1 {
                    return Err(EvalError::NonUniqueValue {
                        attr: a.clone(),
                        found: bag.distinct(),
                    });
                }
                let v = bag.keys().next().cloned().expect("one value");
                v.into()
            }
            Card(x) => {
                let n = match self.eval(x)? {
                    Val::Set(s) => s.len(),
                    Val::Obj(_) => 1,
                    Val::Rel(r) => r.len(),
                    Val::Bag(b) => b.len(),
                    Val::Seq(q) => q.len(),
                    other => return sort_err("card", &other),
                };
                Val::Int(i64::try_from(n).map_err(|_| arith("card"))?)
            }
            BagSum(x) => {
                let bag = self.int_bag(x)?;
                Val::Int(super::bag::bagsum(&bag).ok_or_else(|| arith("bagsum"))?)
            }
            BagMin(x) => Val::Int(
                super::bag::bagmin(&self.int_bag(x)?).ok_or(EvalError::EmptyAggregate("bagmin"))?,
            ),
            BagMax(x) => Val::Int(
                super::bag::bagmax(&self.int_bag(x)?).ok_or(EvalError::EmptyAggregate("bagmax"))?,
            ),
            Unary(UnOp::Not, x) => Val::Bool(!self.boolean(x)?),
            Unary(UnOp::Neg, x) => Val::Int(
                self.int(x)?
                    .checked_neg()
                    .ok_or_else(|| arith("negation"))?,
            ),
            Binary(op, l, r) => self.binary(*op, l, r)?,
            Quant(q, binders, guard, body) => {
                let mut count = 0usize;
                let done = self.quant(*q, binders, guard.as_deref(), body, &mut count)?;
                Val::Bool(match q {
                    super::ast::Quant::Forall => !done,
                    super::ast::Quant::Exists => done,
                    super::ast::Quant::ExistsUnique => count == 1,
                })
            }
            Name(n) | Call(n, _) => return Err(EvalError::Sort(format!("unresolved name `{n}`"))),
        })
    }

    fn self_obj(&self) -> Result<ObjectRef, EvalError> {
        self.env
            .self_obj
            .ok_or_else(|| EvalError::Sort("`self` outside a class invariant".into()))
    }

    fn boolean(&mut self, e: &Expr) -> Result<bool, EvalError> {
        match self.eval(e)? {
            Val::Bool(b) => Ok(b),
            other => sort_err("boolean context", &other),
        }
    }

    fn int(&mut self, e: &Expr) -> Result<i64, EvalError> {
        match self.eval(e)? {
            Val::Int(i) => Ok(i),
            other => sort_err("integer context", &other),
        }
    }

    fn obj(&mut self, e: &Expr) -> Result<ObjectRef, EvalError> {
        match self.eval(e)? {
            Val::Obj(r) => Ok(r),
            other => sort_err("object context", &other),
        }
    }

    fn int_bag(&mut self, e: &Expr) -> Result<Bag<i64>, EvalError> {
        match self.eval(e)? {
            Val::Bag(b) => {
                let mut out = Bag::new();
                for (v, n) in b.iter() {
                    match v {
                        Value::Int(i) => out.insert_n(*i, n),
                        other => return sort_err("integer bag", &Val::from(other.clone())),
                    }
                }
                Ok(out)
            }
            other => sort_err("bag context", &other),
        }
    }

    fn bag(&mut self, s: &Expr, attr: &str) -> Result<Bag<Value>, EvalError> {
        let set = self.set(s)?;
        let mut bag = Bag::new();
        for r in set.iter() {
            bag.insert(self.world.attr(*r, attr)?.clone());
        }
        Ok(bag)
    }

    fn role_image(&self, role: &RoleRef, set: &Refs) -> Refs {
        let tuples = if role.inverse {
            self.world.inverse_tuples(&role.relation)
        } else {
            self.world.tuples(&role.relation)
        };
        image(tuples, set)
    }

    fn set(&mut self, e: &Expr) -> Result<Cow<'w, Refs>, EvalError> {
        use Expr::*;
        Ok(match e {
            Extent(c) => Cow::Borrowed(self.world.extent(c)),
            SetLit(items) => {
                let mut out = BTreeSet::new();
                for it in items {
                    out.insert(self.obj(it)?);
                }
                Cow::Owned(out)
            }
            Dom(r) => Cow::Owned(self.rel(r)?.iter().map(|p| p.0).collect()),
            Ran(r) => Cow::Owned(self.rel(r)?.iter().map(|p| p.1).collect()),
            Image(r, s) => {
                let s = self.set(s)?;
                let rel = self.rel(r)?;
                Cow::Owned(image(&rel, &s))
            }
            LeadsTo(o, role) | Dot(o, role) => {
                let from = self.set(o)?;
                let role = role
                    .target
                    .as_ref()
                    .ok_or_else(|| EvalError::Sort(format!("unresolved role `{}`", role.name)))?;
                Cow::Owned(self.role_image(role, &from))
            }
            Members(q) => match self.eval(q)? {
                Val::Seq(q) => Cow::Owned(q.into_iter().collect()),
                other => return sort_err("members", &other),
            },
            _ => match self.eval(e)? {
                Val::Set(s) => Cow::Owned(s),
                Val::Obj(r) => Cow::Owned(BTreeSet::from([r])),
                other => return sort_err("set context", &other),
            },
        })
    }

    fn rel(&mut self, e: &Expr) -> Result<Cow<'w, Pairs>, EvalError> {
        use Expr::*;
        Ok(match e {
            Rel(r) => Cow::Borrowed(self.world.tuples(r)),
            Inverse(r) => match &**r {
                Rel(name) => Cow::Borrowed(self.world.inverse_tuples(name)),
                other => Cow::Owned(self.rel(other)?.iter().map(|&(a, b)| (b, a)).collect()),
            },
            Closure(r) => {
                let rel = self.rel(r)?;
                Cow::Owned(transitive_closure(&rel))
            }
            DomRestrict(s, r) => {
                let s = self.set(s)?;
                Cow::Owned(
                    self.rel(r)?
                        .iter()
                        .filter(|p| s.contains(&p.0))
                        .copied()
                        .collect(),
                )
            }
            RanRestrict(r, s) => {
                let s = self.set(s)?;
                Cow::Owned(
                    self.rel(r)?
                        .iter()
                        .filter(|p| s.contains(&p.1))
                        .copied()
                        .collect(),
                )
            }
            _ => match self.eval(e)? {
                Val::Rel(r) => Cow::Owned(r),
                other => return sort_err("relation context", &other),
            },
        })
    }

    fn apply(&mut self, f: &Expr, x: &Expr) -> Result<Val, EvalError> {
        let arg = self.obj(x)?;
        if let Expr::Rel(name) = f {
            if self
                .world
                .model
                .relation(name)
                .is_some_and(|d| d.is_ordered())
            {
                return Ok(Val::Seq(
                    self.world
                        .sequences(name)
                        .get(&arg)
                        .cloned()
                        .unwrap_or_default(),
                ));
            }
        }
        let rel = self.rel(f)?;
        let img = image(&rel, &BTreeSet::from([arg]));
        if img.len() == 1 {
            Ok(Val::Obj(*img.first().expect("one image")))
        } else {
            Err(EvalError::NotFunctional {
                rel: f.to_string(),
                arg,
                count: img.len(),
            })
        }
    }

    fn binary(&mut self, op: BinOp, l: &Expr, r: &Expr) -> Result<Val, EvalError> {
        use BinOp::*;
        Ok(Val::Bool(match op {
            And => self.boolean(l)? && self.boolean(r)?,
            Or => self.boolean(l)? || self.boolean(r)?,
            Implies => !self.boolean(l)? || self.boolean(r)?,
            Iff => {
                let a = self.boolean(l)?;
                a == self.boolean(r)?
            }
            Eq | Ne => {
                let a = self.eval(l)?;
                let b = self.eval(r)?;
                let same = match (a, b) {
                    (Val::Obj(x), Val::Set(s)) | (Val::Set(s), Val::Obj(x)) => {
                        s.len() == 1 && s.contains(&x)
                    }
                    (a, b) => a == b,
                };
                same == (op == Eq)
            }
            Lt | Le | Gt | Ge => {
                let a = self.int(l)?;
                let b = self.int(r)?;
                match op {
                    Lt => a < b,
                    Le => a <= b,
                    Gt => a > b,
                    _ => a >= b,
                }
            }
            Add | Sub | Mul | Div | Mod => {
                let a = self.int(l)?;
                let b = self.int(r)?;
                let v = match op {
                    Add => a.checked_add(b).ok_or_else(|| arith("+"))?,
                    Sub => a.checked_sub(b).ok_or_else(|| arith("-"))?,
                    Mul => a.checked_mul(b).ok_or_else(|| arith("*"))?,
                    Div => floor_divmod(a, b)?.0,
                    _ => floor_divmod(a, b)?.1,
                };
                return Ok(Val::Int(v));
            }
            In => {
                let x = self.obj(l)?;
                self.set(r)?.contains(&x)
            }
            SubsetEq => match (self.eval(l)?, self.eval(r)?) {
                (Val::Rel(a), Val::Rel(b)) => a.is_subset(&b),
                (a, b) => to_set(a)?.is_subset(&to_set(b)?),
            },
            Union | Inter | Diff | RelUnion => {
                return Ok(match (self.eval(l)?, self.eval(r)?) {
                    (Val::Rel(a), Val::Rel(b)) => Val::Rel(set_op(op, a, b)),
                    (a, b) => Val::Set(set_op(op, to_set(a)?, to_set(b)?)),
                })
            }
        }))
    }

    /// Iterate the bindings; returns `true` when the quantifier is decided
    /// early (a counterexample for `forall`, a witness for `exists`).
    fn quant(
        &mut self,
        q: Quant,
        binders: &[Binder],
        guard: Option<&Expr>,
        body: &Expr,
        count: &mut usize,
    ) -> Result<bool, EvalError> {
        let Some((first, rest)) = binders.split_first() else {
            let g = match guard {
                Some(g) => self.boolean(g)?,
                None => true,
            };
            return Ok(match q {
                Quant::Forall => g && !self.boolean(body)?,
                Quant::Exists => g && self.boolean(body)?,
                Quant::ExistsUnique => {
                    if g && self.boolean(body)? {
                        *count += 1;
                    }
                    false
                }
            });
        };
        let dom = self.set(&first.domain)?.into_owned();
        for r in dom {
            self.env.vars.push((first.var.clone(), r));
            let res = self.quant(q, rest, guard, body, count);
            self.env.vars.pop();
            if res? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

fn to_set(v: Val) -> Result<Refs, EvalError> {
    match v {
        Val::Set(s) => Ok(s),
        Val::Obj(r) => Ok(BTreeSet::from([r])),
        other => sort_err("set context", &other),
    }
}

fn set_op<T: Ord + Clone>(op: BinOp, a: BTreeSet<T>, b: BTreeSet<T>) -> BTreeSet<T> {
    match op {
        BinOp::Inter => a.intersection(&b).cloned().collect(),
        BinOp::Diff => a.difference(&b).cloned().collect(),
        _ => a.union(&b).cloned().collect(),
    }
}
