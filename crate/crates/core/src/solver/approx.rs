//! Three-valued evaluation of constraints over partially assigned search
//! variables. Every value a completion can produce without an evaluation
//! error is covered by the abstract result, so "cannot be true" is a sound
//! reason to prune.

use std::collections::BTreeSet;

use super::space::{Ground, Premise, Problem, Refs, Values};
use crate::expr::{floor_divmod, image, transitive_closure, Bag, BinOp, Binder, Expr, Quant, UnOp};
use crate::model::{ObjectRef, Value};

type Pairs = BTreeSet<(ObjectRef, ObjectRef)>;

/// Which truth values remain possible.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Tri {
    pub t: bool,
    pub f: bool,
}

impl Tri {
    pub const TRUE: Tri = Tri { t: true, f: false };
    pub const UNKNOWN: Tri = Tri { t: true, f: true };
    /// Every completion errors.
    pub const NONE: Tri = Tri { t: false, f: false };

    fn exact(b: bool) -> Tri {
        Tri { t: b, f: !b }
    }

    fn not(self) -> Tri {
        Tri {
            t: self.f,
            f: self.t,
        }
    }

    // The connectives evaluate left to right and short-circuit.
    fn and(self, b: Tri) -> Tri {
        Tri {
            t: self.t && b.t,
            f: self.f || (self.t && b.f),
        }
    }

    fn or(self, b: Tri) -> Tri {
        Tri {
            t: self.t || (self.f && b.t),
            f: self.f && b.f,
        }
    }

    fn implies(self, b: Tri) -> Tri {
        Tri {
            t: self.f || (self.t && b.t),
            f: self.t && b.f,
        }
    }

    fn iff(self, b: Tri) -> Tri {
        Tri {
            t: (self.t && b.t) || (self.f && b.f),
            f: (self.t && b.f) || (self.f && b.t),
        }
    }
}

/// Bindings of quantified variables.
#[derive(Clone, Debug, Default)]
pub(crate) struct AEnv<'e> {
    pub self_obj: Option<ObjectRef>,
    pub vars: Vec<(&'e str, ObjectRef)>,
}

impl AEnv<'_> {
    fn get(&self, v: &str) -> Option<ObjectRef> {
        self.vars
            .iter()
            .rev()
            .find(|(n, _)| *n == v)
            .map(|(_, r)| *r)
    }
}

#[derive(Clone, Debug)]
struct ASeq {
    exact: Option<Vec<ObjectRef>>,
    len: (i64, i64),
    lo: Refs,
    hi: Refs,
}

#[derive(Clone, Debug)]
enum ARel {
    /// A declared relation, possibly inverted, read lazily.
    Base(usize, bool),
    Pairs(Pairs, Pairs),
}

#[derive(Clone, Debug)]
enum AV {
    /// No error-free value.
    Bot,
    Top,
    B(Tri),
    I(i64, i64),
    S(BTreeSet<Value>),
    /// Candidate objects (never empty).
    O(Refs),
    /// Lower and upper bound of a set.
    Set(Refs, Refs),
    Rel(ARel),
    Bag(Option<Bag<Value>>),
    Seq(ASeq),
}

const ANY_INT: AV = AV::I(i64::MIN, i64::MAX);

fn tri(v: &AV) -> Tri {
    match v {
        AV::B(t) => *t,
        AV::Bot => Tri::NONE,
        _ => Tri::UNKNOWN,
    }
}

fn interval(v: &AV) -> Option<(i64, i64)> {
    match v {
        AV::I(l, h) => Some((*l, *h)),
        AV::Bot => None,
        _ => Some((i64::MIN, i64::MAX)),
    }
}

fn scalar_av<'v>(vals: impl Iterator<Item = &'v Value>) -> AV {
    let mut ints: Option<(i64, i64)> = None;
    let mut bools = Tri::NONE;
    let mut syms = BTreeSet::new();
    let mut any = false;
    for v in vals {
        any = true;
        match v {
            Value::Int(i) => {
                ints = Some(ints.map_or((*i, *i), |(l, h)| (l.min(*i), h.max(*i))));
            }
            Value::Bool(b) => {
                if *b {
                    bools.t = true;
                } else {
                    bools.f = true;
                }
            }
            Value::Sym(_) => {
                syms.insert(v.clone());
            }
        }
    }
    if !any {
        AV::Bot
    } else if let Some((l, h)) = ints {
        AV::I(l, h)
    } else if bools != Tri::NONE {
        AV::B(bools)
    } else {
        AV::S(syms)
    }
}

fn join(a: AV, b: AV) -> AV {
    match (a, b) {
        (AV::Bot, x) | (x, AV::Bot) => x,
        (AV::I(a, b), AV::I(c, d)) => AV::I(a.min(c), b.max(d)),
        (AV::B(x), AV::B(y)) => AV::B(Tri {
            t: x.t || y.t,
            f: x.f || y.f,
        }),
        (AV::S(mut x), AV::S(y)) => {
            x.extend(y);
            AV::S(x)
        }
        (AV::O(mut x), AV::O(y)) => {
            x.extend(y);
            AV::O(x)
        }
        _ => AV::Top,
    }
}

fn exact_value(v: &AV) -> Option<Value> {
    match v {
        AV::I(l, h) if l == h => Some(Value::Int(*l)),
        AV::B(Tri { t: true, f: false }) => Some(Value::Bool(true)),
        AV::B(Tri { t: false, f: true }) => Some(Value::Bool(false)),
        AV::S(s) if s.len() == 1 => s.first().cloned(),
        _ => None,
    }
}

fn set_op<T: Ord + Clone>(op: BinOp, a: &BTreeSet<T>, b: &BTreeSet<T>) -> BTreeSet<T> {
    match op {
        BinOp::Inter => a.intersection(b).cloned().collect(),
        BinOp::Diff => a.difference(b).cloned().collect(),
        _ => a.union(b).cloned().collect(),
    }
}

/// Bounds of `a op b` from bounds of `a` and `b`.
fn bounds_op<T: Ord + Clone>(
    op: BinOp,
    (alo, ahi): (&BTreeSet<T>, &BTreeSet<T>),
    (blo, bhi): (&BTreeSet<T>, &BTreeSet<T>),
) -> (BTreeSet<T>, BTreeSet<T>) {
    match op {
        BinOp::Diff => (set_op(op, alo, bhi), set_op(op, ahi, blo)),
        _ => (set_op(op, alo, blo), set_op(op, ahi, bhi)),
    }
}

fn bounds_eq<T: Ord>(
    alo: &BTreeSet<T>,
    ahi: &BTreeSet<T>,
    blo: &BTreeSet<T>,
    bhi: &BTreeSet<T>,
) -> Tri {
    let exact = alo == ahi && blo == bhi;
    Tri {
        t: alo.is_subset(bhi) && blo.is_subset(ahi),
        f: !(exact && alo == blo),
    }
}

fn bounds_subset<T: Ord>(
    alo: &BTreeSet<T>,
    ahi: &BTreeSet<T>,
    blo: &BTreeSet<T>,
    bhi: &BTreeSet<T>,
) -> Tri {
    Tri {
        t: alo.is_subset(bhi),
        f: !ahi.is_subset(blo),
    }
}

pub(crate) struct Approx<'a, 'm> {
    p: &'a Problem<'m>,
    dom: &'a [Vec<u32>],
    fixed: Option<(usize, &'a [u32])>,
    /// Unassigned variables read since the last reset.
    pub touched: Vec<usize>,
}

impl<'a, 'm> Approx<'a, 'm> {
    pub fn new(p: &'a Problem<'m>, dom: &'a [Vec<u32>]) -> Self {
        Approx {
            p,
            dom,
            fixed: None,
            touched: Vec::new(),
        }
    }

    /// Evaluate as if variable `v` had only the value(s) in `vals`.
    pub fn with_fixed(mut self, v: usize, vals: &'a [u32]) -> Self {
        self.fixed = Some((v, vals));
        self
    }

    fn dom(&mut self, v: usize) -> &'a [u32] {
        let d: &'a [u32] = match self.fixed {
            Some((x, vals)) if x == v => vals,
            _ => &self.dom[v],
        };
        if d.len() > 1 {
            self.touched.push(v);
        }
        d
    }

    /// Truth of a ground constraint.
    pub fn ground(&mut self, g: &Ground<'_>) -> Tri {
        match g {
            Ground::Axiom {
                premises,
                body,
                env,
            } => {
                let mut env = env.clone();
                let mut acc = Tri::TRUE;
                for p in premises {
                    let v = match p {
                        Premise::Member(x, dom, depth) => {
                            let mut e = AEnv {
                                self_obj: env.self_obj,
                                vars: env.vars[..*depth].to_vec(),
                            };
                            self.member(&Refs::from([*x]), dom, &mut e)
                        }
                        Premise::Holds(e, depth) => {
                            let mut en = AEnv {
                                self_obj: env.self_obj,
                                vars: env.vars[..*depth].to_vec(),
                            };
                            self.truth(e, &mut en)
                        }
                    };
                    acc = acc.and(v);
                    if !acc.t {
                        return acc.implies(Tri::NONE);
                    }
                }
                let b = self.truth(body, &mut env);
                acc.implies(b)
            }
            Ground::Count {
                rel,
                obj,
                inverse,
                range,
            } => {
                let (lo, hi) = if self.p.rels[*rel].ordered {
                    self.occurrences(*rel, *obj)
                } else {
                    let (l, h) = self.img(*rel, *inverse, *obj);
                    (l.len(), h.len())
                };
                let max = range.max.map_or(usize::MAX, |m| m as usize);
                let min = range.min as usize;
                Tri {
                    t: lo <= max && hi >= min,
                    f: lo < min || hi > max,
                }
            }
            Ground::Subset {
                child,
                parent,
                pair: (s, t),
            } => {
                let (cl, ch) = self.img(*child, false, *s);
                let (pl, ph) = self.img(*parent, false, *s);
                let a = Tri {
                    t: ch.contains(t),
                    f: !cl.contains(t),
                };
                let b = Tri {
                    t: ph.contains(t),
                    f: !pl.contains(t),
                };
                Tri {
                    t: a.f || b.t,
                    f: a.t && b.f,
                }
            }
            Ground::Reif { rel, pair, total } => {
                let v = self.p.reif[*rel][pair];
                let vals = match &self.p.vars[v].values {
                    Values::Target(x) => x,
                    _ => unreachable!("reification values"),
                };
                let d = self.dom(v);
                let none = d.iter().any(|&i| vals[i as usize].is_none());
                let some = d.iter().any(|&i| vals[i as usize].is_some());
                let (lo, hi) = self.img(*rel, false, pair.0);
                let present = hi.contains(&pair.1);
                let absent = !lo.contains(&pair.1);
                Tri {
                    t: (none && (absent || !total)) || (some && present),
                    f: (some && absent) || (*total && present && none),
                }
            }
            Ground::Order(a, b) => {
                let (va, vb) = match (&self.p.vars[*a].values, &self.p.vars[*b].values) {
                    (Values::Scalar(x), Values::Scalar(y)) => (x, y),
                    _ => unreachable!("attribute values"),
                };
                let da = self.dom(*a);
                let db = self.dom(*b);
                let amin = &va[da[0] as usize];
                let amax = &va[da[da.len() - 1] as usize];
                let bmin = &vb[db[0] as usize];
                let bmax = &vb[db[db.len() - 1] as usize];
                Tri {
                    t: amin <= bmax,
                    f: amax > bmin,
                }
            }
        }
    }

    /// Bounds of a set-valued expression; `None` when it cannot evaluate.
    pub fn set_of<'e>(&mut self, e: &'e Expr, env: &AEnv<'e>) -> Option<(Refs, Refs)> {
        let mut env = env.clone();
        let v = self.ev(e, &mut env);
        self.as_set(v)
    }

    /// Whether one of the candidate objects `c` lies in `set`. Membership in
    /// the domain or range of a declared relation reads only the variables
    /// of the candidates instead of the whole relation.
    fn member<'e>(&mut self, c: &Refs, set: &'e Expr, env: &mut AEnv<'e>) -> Tri {
        if let Expr::Dom(r) | Expr::Ran(r) = set {
            if let Some(ARel::Base(ri, inv)) = self.rel(r, env) {
                let along = ARel::Base(ri, inv != matches!(set, Expr::Ran(_)));
                let mut out = Tri { t: false, f: false };
                for &x in c {
                    let (lo, hi) = self.rel_img(&along, x);
                    out.t |= !hi.is_empty();
                    out.f |= lo.is_empty();
                }
                return out;
            }
        }
        let v = self.ev(set, env);
        match self.as_set(v) {
            Some((lo, hi)) => Tri {
                t: c.iter().any(|x| hi.contains(x)),
                f: c.iter().any(|x| !lo.contains(x)),
            },
            None => Tri::NONE,
        }
    }

    fn truth<'e>(&mut self, e: &'e Expr, env: &mut AEnv<'e>) -> Tri {
        let v = self.ev(e, env);
        tri(&v)
    }

    fn as_set(&self, v: AV) -> Option<(Refs, Refs)> {
        match v {
            AV::Set(lo, hi) => Some((lo, hi)),
            AV::O(c) if c.len() == 1 => Some((c.clone(), c)),
            AV::O(c) => Some((Refs::new(), c)),
            AV::Bot => None,
            _ => Some((Refs::new(), self.p.all.clone())),
        }
    }

    fn attr(&mut self, r: ObjectRef, a: &str) -> AV {
        let Some(v) = self.p.attr_var(r, a) else {
            return AV::Bot;
        };
        let p = self.p;
        let Values::Scalar(vals) = &p.vars[v].values else {
            unreachable!("attribute values")
        };
        let d = self.dom(v);
        scalar_av(d.iter().map(|&i| &vals[i as usize]))
    }

    fn seq_members(&mut self, v: usize) -> ASeq {
        let p = self.p;
        let Values::Seq(vals) = &p.vars[v].values else {
            unreachable!("sequence values")
        };
        let d = self.dom(v);
        let mut lo: Option<Refs> = None;
        let mut hi = Refs::new();
        let mut len = (i64::MAX, i64::MIN);
        for &i in d {
            let q = &vals[i as usize];
            let m: Refs = q.iter().copied().collect();
            hi.extend(m.iter().copied());
            lo = Some(match lo {
                None => m,
                Some(l) => l.intersection(&m).copied().collect(),
            });
            len = (len.0.min(q.len() as i64), len.1.max(q.len() as i64));
        }
        ASeq {
            exact: (d.len() == 1).then(|| vals[d[0] as usize].clone()),
            len,
            lo: lo.unwrap_or_default(),
            hi,
        }
    }

    /// How often `t` occurs across all sequences of an ordered relation.
    fn occurrences(&mut self, rel: usize, t: ObjectRef) -> (usize, usize) {
        let p = self.p;
        let (mut lo, mut hi) = (0, 0);
        for &v in p.rels[rel].seq.values() {
            let Values::Seq(vals) = &p.vars[v].values else {
                unreachable!("sequence values")
            };
            let d = self.dom(v);
            let counts = d
                .iter()
                .map(|&i| vals[i as usize].iter().filter(|x| **x == t).count());
            lo += counts.clone().min().unwrap_or(0);
            hi += counts.max().unwrap_or(0);
        }
        (lo, hi)
    }

    /// Lower and upper bound of the image (or preimage) of one object.
    fn img(&mut self, rel: usize, inverse: bool, x: ObjectRef) -> (Refs, Refs) {
        let p = self.p;
        let sp = &p.rels[rel];
        let mut lo = Refs::new();
        let mut hi = Refs::new();
        if sp.ordered {
            if !inverse {
                if let Some(&v) = sp.seq.get(&x) {
                    let s = self.seq_members(v);
                    return (s.lo, s.hi);
                }
            } else {
                for (&s, &v) in &sp.seq {
                    let q = self.seq_members(v);
                    if q.lo.contains(&x) {
                        lo.insert(s);
                    }
                    if q.hi.contains(&x) {
                        hi.insert(s);
                    }
                }
            }
            return (lo, hi);
        }
        if !inverse {
            if let Some(&v) = sp.fun.get(&x) {
                let Values::Target(vals) = &p.vars[v].values else {
                    unreachable!("target values")
                };
                let d = self.dom(v);
                hi.extend(d.iter().filter_map(|&i| vals[i as usize]));
                if d.len() == 1 {
                    lo = hi.clone();
                }
            } else if let Some(list) = sp.flags.get(&x) {
                for &(t, v) in list {
                    let d = self.dom(v);
                    if d.contains(&1) {
                        hi.insert(t);
                        if d.len() == 1 {
                            lo.insert(t);
                        }
                    }
                }
            }
        } else if let Some(list) = sp.by_target.get(&x) {
            for &(s, v) in list {
                let d = self.dom(v);
                let hit = match &p.vars[v].values {
                    Values::Target(vals) => d.iter().any(|&i| vals[i as usize] == Some(x)),
                    _ => d.contains(&1),
                };
                if hit {
                    hi.insert(s);
                    if d.len() == 1 {
                        lo.insert(s);
                    }
                }
            }
        }
        (lo, hi)
    }

    fn rel_img(&mut self, r: &ARel, x: ObjectRef) -> (Refs, Refs) {
        match r {
            ARel::Base(ri, inv) => self.img(*ri, *inv, x),
            ARel::Pairs(lo, hi) => {
                let one = Refs::from([x]);
                (image(lo, &one), image(hi, &one))
            }
        }
    }

    fn rel_image(&mut self, r: &ARel, lo: &Refs, hi: &Refs) -> (Refs, Refs) {
        match r {
            ARel::Pairs(pl, ph) => (image(pl, lo), image(ph, hi)),
            ARel::Base(..) => {
                let mut out_lo = Refs::new();
                let mut out_hi = Refs::new();
                for &x in hi {
                    let (l, h) = self.rel_img(r, x);
                    if lo.contains(&x) {
                        out_lo.extend(l);
                    }
                    out_hi.extend(h);
                }
                (out_lo, out_hi)
            }
        }
    }

    fn pairs(&mut self, r: ARel) -> (Pairs, Pairs) {
        match r {
            ARel::Pairs(lo, hi) => (lo, hi),
            ARel::Base(ri, inv) => {
                let p = self.p;
                let decl = &p.model.relations[ri];
                let mut lo = Pairs::new();
                let mut hi = Pairs::new();
                for &s in &p.extents[&decl.source] {
                    let (l, h) = self.img(ri, false, s);
                    let orient = |t: ObjectRef| if inv { (t, s) } else { (s, t) };
                    lo.extend(l.into_iter().map(orient));
                    hi.extend(h.into_iter().map(orient));
                }
                (lo, hi)
            }
        }
    }

    fn rel<'e>(&mut self, e: &'e Expr, env: &mut AEnv<'e>) -> Option<ARel> {
        match self.ev(e, env) {
            AV::Rel(r) => Some(r),
            _ => None,
        }
    }

    fn ev<'e>(&mut self, e: &'e Expr, env: &mut AEnv<'e>) -> AV {
        use Expr::*;
        match e {
            Bool(b) => AV::B(Tri::exact(*b)),
            Int(i) => AV::I(*i, *i),
            EnumLit(s) => AV::S(BTreeSet::from([Value::Sym(s.clone())])),
            Var(v) => env.get(v).map_or(AV::Bot, |r| AV::O(Refs::from([r]))),
            SelfObj => env.self_obj.map_or(AV::Bot, |r| AV::O(Refs::from([r]))),
            SelfAttr(a) => match env.self_obj {
                Some(r) => self.attr(r, a),
                None => AV::Bot,
            },
            Attr(o, a) => match self.ev(o, env) {
                AV::O(c) => c.into_iter().fold(AV::Bot, |acc, r| {
                    let v = self.attr(r, a);
                    join(acc, v)
                }),
                AV::Bot => AV::Bot,
                _ => AV::Top,
            },
            Extent(c) => {
                let ext = self.p.extents.get(c).cloned().unwrap_or_default();
                AV::Set(ext.clone(), ext)
            }
            SetLit(items) => {
                let mut lo = Refs::new();
                let mut hi = Refs::new();
                for it in items {
                    match self.ev(it, env) {
                        AV::O(c) => {
                            if c.len() == 1 {
                                lo.extend(c.iter().copied());
                            }
                            hi.extend(c);
                        }
                        AV::Bot => return AV::Bot,
                        _ => hi.extend(self.p.all.iter().copied()),
                    }
                }
                AV::Set(lo, hi)
            }
            Dom(r) | Ran(r) => {
                let Some(rel) = self.rel(r, env) else {
                    return AV::Bot;
                };
                let (lo, hi) = self.pairs(rel);
                let pick = |p: &(ObjectRef, ObjectRef)| if matches!(e, Dom(_)) { p.0 } else { p.1 };
                AV::Set(lo.iter().map(pick).collect(), hi.iter().map(pick).collect())
            }
            Image(r, s) => {
                let Some(rel) = self.rel(r, env) else {
                    return AV::Bot;
                };
                let v = self.ev(s, env);
                let Some((lo, hi)) = self.as_set(v) else {
                    return AV::Bot;
                };
                let (a, b) = self.rel_image(&rel, &lo, &hi);
                AV::Set(a, b)
            }
            LeadsTo(o, role) | Dot(o, role) => {
                let Some(t) = &role.target else {
                    return AV::Bot;
                };
                let Some(ri) = self.p.rel(&t.relation) else {
                    return AV::Bot;
                };
                let v = self.ev(o, env);
                let Some((lo, hi)) = self.as_set(v) else {
                    return AV::Bot;
                };
                let (a, b) = self.rel_image(&ARel::Base(ri, t.inverse), &lo, &hi);
                AV::Set(a, b)
            }
            Members(q) => match self.ev(q, env) {
                AV::Seq(s) => AV::Set(s.lo, s.hi),
                AV::Bot => AV::Bot,
                _ => AV::Set(Refs::new(), self.p.all.clone()),
            },
            Rel(name) => match self.p.rel(name) {
                Some(ri) => AV::Rel(ARel::Base(ri, false)),
                None => AV::Bot,
            },
            Inverse(r) => match self.rel(r, env) {
                Some(ARel::Base(ri, inv)) => AV::Rel(ARel::Base(ri, !inv)),
                Some(ARel::Pairs(lo, hi)) => {
                    let flip = |p: Pairs| p.into_iter().map(|(a, b)| (b, a)).collect();
                    AV::Rel(ARel::Pairs(flip(lo), flip(hi)))
                }
                None => AV::Bot,
            },
            Closure(r) => match self.rel(r, env) {
                Some(rel) => {
                    let (lo, hi) = self.pairs(rel);
                    AV::Rel(ARel::Pairs(
                        transitive_closure(&lo),
                        transitive_closure(&hi),
                    ))
                }
                None => AV::Bot,
            },
            DomRestrict(s, r) | RanRestrict(r, s) => {
                let v = self.ev(s, env);
                let Some((slo, shi)) = self.as_set(v) else {
                    return AV::Bot;
                };
                let Some(rel) = self.rel(r, env) else {
                    return AV::Bot;
                };
                let (lo, hi) = self.pairs(rel);
                let on_dom = matches!(e, DomRestrict(..));
                let key = |p: &(ObjectRef, ObjectRef)| if on_dom { p.0 } else { p.1 };
                AV::Rel(ARel::Pairs(
                    lo.into_iter().filter(|p| slo.contains(&key(p))).collect(),
                    hi.into_iter().filter(|p| shi.contains(&key(p))).collect(),
                ))
            }
            Apply(f, x) => self.apply(f, x, env),
            Arrow(s, a) | BagOf(a, s) => match self.parts(s, a, env) {
                None => AV::Bot,
                Some((parts, true)) => {
                    let vals: Option<Vec<Value>> = parts.iter().map(exact_value).collect();
                    AV::Bag(vals.map(|v| v.into_iter().collect()))
                }
                Some(_) => AV::Bag(None),
            },
            Harpoon(s, a) => match self.parts(s, a, env) {
                None => AV::Bot,
                Some((parts, exact)) => {
                    if exact && parts.is_empty() {
                        return AV::Bot;
                    }
                    let vals: Option<BTreeSet<Value>> = parts.iter().map(exact_value).collect();
                    match vals {
                        Some(v) if exact && v.len() > 1 => AV::Bot,
                        _ => parts.into_iter().fold(AV::Bot, join),
                    }
                }
            },
            Card(x) => self.card(x, env),
            BagSum(x) | BagMin(x) | BagMax(x) => self.aggregate(e, x, env),
            Unary(UnOp::Not, x) => AV::B(self.truth(x, env).not()),
            Unary(UnOp::Neg, x) => match self.ev(x, env) {
                AV::I(l, h) => match (h.checked_neg(), l.checked_neg()) {
                    (Some(a), Some(b)) => AV::I(a, b),
                    _ => ANY_INT,
                },
                AV::Bot => AV::Bot,
                _ => ANY_INT,
            },
            Binary(op, l, r) => self.binary(*op, l, r, env),
            Quant(q, binders, guard, body) => {
                let mut acc = QAcc::default();
                self.quant(*q, binders, guard.as_deref(), body, env, true, &mut acc);
                AV::B(acc.result(*q))
            }
            Name(_) | Call(..) => AV::Bot,
        }
    }

    fn apply<'e>(&mut self, f: &'e Expr, x: &'e Expr, env: &mut AEnv<'e>) -> AV {
        let arg = self.ev(x, env);
        let cands = match arg {
            AV::O(c) => c,
            AV::Bot => return AV::Bot,
            _ => return AV::Top,
        };
        if let Expr::Rel(name) = f {
            if let Some(ri) = self.p.rel(name) {
                if self.p.rels[ri].ordered {
                    if cands.len() != 1 {
                        return AV::Seq(ASeq {
                            exact: None,
                            len: (0, i64::MAX),
                            lo: Refs::new(),
                            hi: self.p.all.clone(),
                        });
                    }
                    let s = *cands.first().expect("one candidate");
                    return AV::Seq(match self.p.rels[ri].seq.get(&s) {
                        Some(&v) => self.seq_members(v),
                        None => ASeq {
                            exact: Some(Vec::new()),
                            len: (0, 0),
                            lo: Refs::new(),
                            hi: Refs::new(),
                        },
                    });
                }
            }
        }
        let Some(rel) = self.rel(f, env) else {
            return AV::Bot;
        };
        let mut out = Refs::new();
        for c in cands {
            let (lo, hi) = self.rel_img(&rel, c);
            match lo.len() {
                0 => out.extend(hi),
                1 => out.extend(lo),
                _ => {}
            }
        }
        if out.is_empty() {
            AV::Bot
        } else {
            AV::O(out)
        }
    }

    /// Attribute values of the members of `s`: per-member abstract values
    /// over the upper bound of the set, and whether the set is exact.
    fn parts<'e>(&mut self, s: &'e Expr, a: &str, env: &mut AEnv<'e>) -> Option<(Vec<AV>, bool)> {
        let v = self.ev(s, env);
        let (lo, hi) = self.as_set(v)?;
        let exact = lo == hi;
        let parts = hi.iter().map(|r| self.attr(*r, a)).collect::<Vec<_>>();
        if exact && parts.iter().any(|p| matches!(p, AV::Bot)) {
            return None;
        }
        Some((parts, exact))
    }

    fn card<'e>(&mut self, x: &'e Expr, env: &mut AEnv<'e>) -> AV {
        let size = |n: usize| n as i64;
        if let Expr::Arrow(s, _) | Expr::BagOf(_, s) = x {
            let v = self.ev(s, env);
            return match self.as_set(v) {
                Some((lo, hi)) => AV::I(size(lo.len()), size(hi.len())),
                None => AV::Bot,
            };
        }
        match self.ev(x, env) {
            AV::Set(lo, hi) => AV::I(size(lo.len()), size(hi.len())),
            AV::O(_) => AV::I(1, 1),
            AV::Rel(r) => {
                let (lo, hi) = self.pairs(r);
                AV::I(size(lo.len()), size(hi.len()))
            }
            AV::Bag(Some(b)) => AV::I(size(b.len()), size(b.len())),
            AV::Seq(s) => AV::I(s.len.0, s.len.1),
            AV::Bot => AV::Bot,
            _ => AV::I(0, i64::MAX),
        }
    }

    fn aggregate<'e>(&mut self, op: &'e Expr, x: &'e Expr, env: &mut AEnv<'e>) -> AV {
        if let Expr::Arrow(s, a) | Expr::BagOf(a, s) = x {
            let v = self.ev(s, env);
            let Some((lo, hi)) = self.as_set(v) else {
                return AV::Bot;
            };
            let mut sum = (0i64, 0i64);
            let mut min = (i64::MAX, i64::MAX);
            let mut max = (i64::MIN, i64::MIN);
            for r in &hi {
                let Some((l, h)) = interval(&self.attr(*r, a)) else {
                    if lo.contains(r) {
                        return AV::Bot;
                    }
                    continue;
                };
                let (sl, sh) = if lo.contains(r) {
                    (l, h)
                } else {
                    (l.min(0), h.max(0))
                };
                sum = match (sum.0.checked_add(sl), sum.1.checked_add(sh)) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return ANY_INT,
                };
                min = (min.0.min(l), min.1.min(h));
                max = (max.0.max(l), max.1.max(h));
            }
            let exact = lo == hi;
            return match op {
                Expr::BagSum(_) => AV::I(sum.0, sum.1),
                _ if hi.is_empty() => AV::Bot,
                _ if !exact => ANY_INT,
                Expr::BagMin(_) => AV::I(min.0, min.1),
                _ => AV::I(max.0, max.1),
            };
        }
        match self.ev(x, env) {
            AV::Bag(Some(b)) => {
                let ints: Option<Bag<i64>> = b
                    .iter()
                    .map(|(v, n)| v.as_int().map(|i| (i, n)))
                    .collect::<Option<Vec<_>>>()
                    .map(|v| {
                        let mut out = Bag::new();
                        for (i, n) in v {
                            out.insert_n(i, n);
                        }
                        out
                    });
                let Some(ints) = ints else { return AV::Bot };
                let r = match op {
                    Expr::BagSum(_) => crate::expr::bagsum(&ints),
                    Expr::BagMin(_) => crate::expr::bagmin(&ints),
                    _ => crate::expr::bagmax(&ints),
                };
                r.map_or(AV::Bot, |i| AV::I(i, i))
            }
            AV::Bot => AV::Bot,
            _ => ANY_INT,
        }
    }

    fn binary<'e>(&mut self, op: BinOp, l: &'e Expr, r: &'e Expr, env: &mut AEnv<'e>) -> AV {
        use BinOp::*;
        match op {
            And | Or | Implies | Iff => {
                let a = self.truth(l, env);
                let skip = match op {
                    And => !a.t,
                    Or => !a.f,
                    Implies => !a.t,
                    _ => false,
                };
                let b = if skip { Tri::NONE } else { self.truth(r, env) };
                AV::B(match op {
                    And => a.and(b),
                    Or => a.or(b),
                    Implies => a.implies(b),
                    _ => a.iff(b),
                })
            }
            Eq | Ne => {
                let a = self.ev(l, env);
                let b = self.ev(r, env);
                let t = self.equal(a, b);
                AV::B(if op == Eq { t } else { t.not() })
            }
            Lt | Le | Gt | Ge => {
                let a = self.ev(l, env);
                let b = self.ev(r, env);
                let (Some((al, ah)), Some((bl, bh))) = (interval(&a), interval(&b)) else {
                    return AV::B(Tri::NONE);
                };
                AV::B(match op {
                    Lt => Tri {
                        t: al < bh,
                        f: ah >= bl,
                    },
                    Le => Tri {
                        t: al <= bh,
                        f: ah > bl,
                    },
                    Gt => Tri {
                        t: ah > bl,
                        f: al <= bh,
                    },
                    _ => Tri {
                        t: ah >= bl,
                        f: al < bh,
                    },
                })
            }
            Add | Sub | Mul | Div | Mod => {
                let a = self.ev(l, env);
                let b = self.ev(r, env);
                let (Some(a), Some(b)) = (interval(&a), interval(&b)) else {
                    return AV::Bot;
                };
                arith(op, a, b)
            }
            In => {
                let x = self.ev(l, env);
                let AV::O(c) = x else {
                    return AV::B(if matches!(x, AV::Bot) {
                        Tri::NONE
                    } else {
                        Tri::UNKNOWN
                    });
                };
                AV::B(self.member(&c, r, env))
            }
            SubsetEq => {
                let a = self.ev(l, env);
                let b = self.ev(r, env);
                match (a, b) {
                    (AV::Rel(x), AV::Rel(y)) => {
                        let (al, ah) = self.pairs(x);
                        let (bl, bh) = self.pairs(y);
                        AV::B(bounds_subset(&al, &ah, &bl, &bh))
                    }
                    (a, b) => match (self.as_set(a), self.as_set(b)) {
                        (Some((al, ah)), Some((bl, bh))) => {
                            AV::B(bounds_subset(&al, &ah, &bl, &bh))
                        }
                        _ => AV::B(Tri::NONE),
                    },
                }
            }
            Union | Inter | Diff | RelUnion => {
                let a = self.ev(l, env);
                let b = self.ev(r, env);
                match (a, b) {
                    (AV::Rel(x), AV::Rel(y)) => {
                        let (al, ah) = self.pairs(x);
                        let (bl, bh) = self.pairs(y);
                        let (lo, hi) = bounds_op(op, (&al, &ah), (&bl, &bh));
                        AV::Rel(ARel::Pairs(lo, hi))
                    }
                    (a, b) => match (self.as_set(a), self.as_set(b)) {
                        (Some((al, ah)), Some((bl, bh))) => {
                            let (lo, hi) = bounds_op(op, (&al, &ah), (&bl, &bh));
                            AV::Set(lo, hi)
                        }
                        _ => AV::Bot,
                    },
                }
            }
        }
    }

    fn equal(&mut self, a: AV, b: AV) -> Tri {
        match (a, b) {
            (AV::Bot, _) | (_, AV::Bot) => Tri::NONE,
            (AV::I(a, b), AV::I(c, d)) => Tri {
                t: a <= d && c <= b,
                f: !(a == b && c == d && a == c),
            },
            (AV::B(x), AV::B(y)) => x.iff(y),
            (AV::S(x), AV::S(y)) => Tri {
                t: x.intersection(&y).next().is_some(),
                f: !(x.len() == 1 && x == y),
            },
            (AV::O(x), AV::O(y)) => Tri {
                t: x.intersection(&y).next().is_some(),
                f: !(x.len() == 1 && x == y),
            },
            (AV::O(c), AV::Set(lo, hi)) | (AV::Set(lo, hi), AV::O(c)) => Tri {
                t: c.iter()
                    .any(|x| hi.contains(x) && lo.iter().all(|l| l == x)),
                f: !(c.len() == 1 && lo == hi && lo == c),
            },
            (AV::Set(al, ah), AV::Set(bl, bh)) => bounds_eq(&al, &ah, &bl, &bh),
            (AV::Rel(x), AV::Rel(y)) => {
                let (al, ah) = self.pairs(x);
                let (bl, bh) = self.pairs(y);
                bounds_eq(&al, &ah, &bl, &bh)
            }
            (AV::Bag(Some(x)), AV::Bag(Some(y))) => Tri::exact(x == y),
            (AV::Seq(x), AV::Seq(y)) => match (x.exact, y.exact) {
                (Some(p), Some(q)) => Tri::exact(p == q),
                _ => Tri::UNKNOWN,
            },
            _ => Tri::UNKNOWN,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn quant<'e>(
        &mut self,
        q: Quant,
        binders: &'e [Binder],
        guard: Option<&'e Expr>,
        body: &'e Expr,
        env: &mut AEnv<'e>,
        definite: bool,
        acc: &mut QAcc,
    ) {
        let Some((b, rest)) = binders.split_first() else {
            let g = guard.map_or(Tri::TRUE, |g| self.truth(g, env));
            let b = if g.t {
                self.truth(body, env)
            } else {
                Tri::NONE
            };
            let inst = match q {
                Quant::Forall => g.implies(b),
                _ => g.and(b),
            };
            acc.add(inst, definite);
            return;
        };
        let v = self.ev(&b.domain, env);
        let Some((lo, hi)) = self.as_set(v) else {
            // An error only matters when this binding is certainly reached.
            acc.halted |= definite;
            return;
        };
        for x in hi {
            env.vars.push((b.var.as_str(), x));
            self.quant(q, rest, guard, body, env, definite && lo.contains(&x), acc);
            env.vars.pop();
            if acc.halted || acc.decided(q) {
                break;
            }
        }
    }
}

fn arith(op: BinOp, (al, ah): (i64, i64), (bl, bh): (i64, i64)) -> AV {
    let corners = |f: fn(i64, i64) -> Option<i64>| -> AV {
        let c = [f(al, bl), f(al, bh), f(ah, bl), f(ah, bh)];
        if c.iter().any(Option::is_none) {
            return ANY_INT;
        }
        let c: Vec<i64> = c.into_iter().flatten().collect();
        AV::I(
            *c.iter().min().expect("four"),
            *c.iter().max().expect("four"),
        )
    };
    match op {
        BinOp::Add => corners(i64::checked_add),
        BinOp::Sub => corners(i64::checked_sub),
        BinOp::Mul => corners(i64::checked_mul),
        _ if bl != bh => {
            if bl == 0 && bh == 0 {
                AV::Bot
            } else {
                ANY_INT
            }
        }
        _ => {
            let b = bl;
            if b == 0 {
                return AV::Bot;
            }
            let (Ok((ql, rl)), Ok((qh, rh))) = (floor_divmod(al, b), floor_divmod(ah, b)) else {
                return ANY_INT;
            };
            if op == BinOp::Div {
                AV::I(ql.min(qh), ql.max(qh))
            } else if ql == qh {
                AV::I(rl, rh)
            } else if b > 0 {
                AV::I(0, b - 1)
            } else {
                AV::I(b + 1, 0)
            }
        }
    }
}

/// Running summary of a quantifier's instances.
#[derive(Default)]
struct QAcc {
    /// Some instance may be true / false (if it is in the domain).
    any_t: bool,
    any_f: bool,
    /// An instance is certainly in the domain and cannot be true / false.
    def_not_t: bool,
    def_not_f: bool,
    /// Certain members that are certainly true.
    sure_t: usize,
    maybe_t: usize,
    /// A binding that is certainly reached cannot evaluate.
    halted: bool,
}

impl QAcc {
    fn add(&mut self, inst: Tri, definite: bool) {
        self.any_t |= inst.t;
        self.any_f |= inst.f;
        if definite {
            self.halted |= !inst.t && !inst.f;
            self.def_not_t |= !inst.t;
            self.def_not_f |= !inst.f;
            if inst.t && !inst.f {
                self.sure_t += 1;
            }
        }
        if inst.t {
            self.maybe_t += 1;
        }
    }

    fn decided(&self, q: Quant) -> bool {
        match q {
            Quant::Forall => self.def_not_t && self.any_f,
            Quant::Exists => self.def_not_f && self.any_t,
            Quant::ExistsUnique => false,
        }
    }

    fn result(&self, q: Quant) -> Tri {
        // Evaluation stops at a decided binding, so an error only hides the
        // outcomes still open when it happens.
        match q {
            Quant::Forall if self.halted => Tri {
                t: false,
                f: self.any_f,
            },
            Quant::Exists if self.halted => Tri {
                t: self.any_t,
                f: false,
            },
            Quant::ExistsUnique if self.halted => Tri::NONE,
            Quant::Forall => Tri {
                t: !self.def_not_t,
                f: self.any_f,
            },
            Quant::Exists => Tri {
                t: self.any_t,
                f: !self.def_not_f,
            },
            Quant::ExistsUnique => Tri {
                t: self.sure_t <= 1 && self.maybe_t >= 1,
                f: !(self.sure_t == 1 && self.maybe_t == 1),
            },
        }
    }
}
