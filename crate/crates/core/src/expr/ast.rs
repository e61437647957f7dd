use std::collections::{BTreeMap, BTreeSet};

/// A role reference `~> name` / `. name`: which relation it traverses and in
/// which direction. `target` is filled in by name resolution.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Role {
    pub name: String,
    pub target: Option<RoleRef>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RoleRef {
    pub relation: String,
    /// `true` for the left role (inverse image), `false` for the right role.
    pub inverse: bool,
}

impl Role {
    pub fn named(name: impl Into<String>) -> Self {
        Role {
            name: name.into(),
            target: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quant {
    Forall,
    Exists,
    ExistsUnique,
}

impl Quant {
    pub fn keyword(self) -> &'static str {
        match self {
            Quant::Forall => "forall",
            Quant::Exists => "exists",
            Quant::ExistsUnique => "exists1",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    And,
    Or,
    Implies,
    Iff,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    In,
    SubsetEq,
    Union,
    Inter,
    Diff,
    /// Union of two relations, written `R + S`.
    RelUnion,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Implies => "implies",
            BinOp::Iff => "iff",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add | BinOp::RelUnion => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "div",
            BinOp::Mod => "mod",
            BinOp::In => "in",
            BinOp::SubsetEq => "subseteq",
            BinOp::Union => "union",
            BinOp::Inter => "inter",
            BinOp::Diff => "diff",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Iff => 1,
            BinOp::Implies => 2,
            BinOp::Or => 3,
            BinOp::And => 4,
            BinOp::Eq
            | BinOp::Ne
            | BinOp::Lt
            | BinOp::Le
            | BinOp::Gt
            | BinOp::Ge
            | BinOp::In
            | BinOp::SubsetEq => 6,
            BinOp::Add | BinOp::Sub | BinOp::Union | BinOp::Diff | BinOp::RelUnion => 7,
            BinOp::Mul | BinOp::Div | BinOp::Mod | BinOp::Inter => 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Binder {
    pub var: String,
    pub domain: Expr,
}

/// Constraint expressions.
///
/// The parser produces `Name` and `Call` nodes; name resolution rewrites them
/// into the specific variants (`Var`, `Extent`, `Rel`, `SelfAttr`, `Attr`,
/// `Apply`, ...). Evaluators only ever see resolved trees.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Bool(bool),
    Int(i64),
    /// Unresolved identifier.
    Name(String),
    /// Unresolved `name(args)`.
    Call(String, Vec<Expr>),
    Var(String),
    SelfObj,
    /// Attribute of the object whose invariant is being checked.
    SelfAttr(String),
    EnumLit(String),
    /// Type extent of a class.
    Extent(String),
    Rel(String),
    /// `getXyz(e)`.
    Attr(Box<Expr>, String),
    /// Functional application `R(x)`.
    Apply(Box<Expr>, Box<Expr>),
    Inverse(Box<Expr>),
    Closure(Box<Expr>),
    Dom(Box<Expr>),
    Ran(Box<Expr>),
    /// `image(R, S)`.
    Image(Box<Expr>, Box<Expr>),
    /// `dres(S, R)`: domain restriction.
    DomRestrict(Box<Expr>, Box<Expr>),
    /// `rres(R, S)`: range restriction.
    RanRestrict(Box<Expr>, Box<Expr>),
    /// `o ~> role`
    LeadsTo(Box<Expr>, Role),
    /// `s . role`
    Dot(Box<Expr>, Role),
    /// `s -> attr`: bag of attribute values.
    Arrow(Box<Expr>, String),
    /// `s => attr`: the single attribute value.
    Harpoon(Box<Expr>, String),
    Card(Box<Expr>),
    BagSum(Box<Expr>),
    BagMin(Box<Expr>),
    BagMax(Box<Expr>),
    BagOf(String, Box<Expr>),
    Members(Box<Expr>),
    SetLit(Vec<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Quant(Quant, Vec<Binder>, Option<Box<Expr>>, Box<Expr>),
}

impl Expr {
    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn negation(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    /// Left-nested conjunction; `true` for an empty list.
    pub fn conjunction(items: impl IntoIterator<Item = Expr>) -> Expr {
        items
            .into_iter()
            .reduce(|a, b| Expr::bin(BinOp::And, a, b))
            .unwrap_or(Expr::Bool(true))
    }

    /// Immediate subexpressions.
    pub fn children(&self) -> Vec<&Expr> {
        use Expr::*;
        match self {
            Bool(_) | Int(_) | Name(_) | Var(_) | SelfObj | SelfAttr(_) | EnumLit(_)
            | Extent(_) | Rel(_) => vec![],
            Call(_, args) | SetLit(args) => args.iter().collect(),
            Attr(e, _)
            | Inverse(e)
            | Closure(e)
            | Dom(e)
            | Ran(e)
            | LeadsTo(e, _)
            | Dot(e, _)
            | Arrow(e, _)
            | Harpoon(e, _)
            | Card(e)
            | BagSum(e)
            | BagMin(e)
            | BagMax(e)
            | BagOf(_, e)
            | Members(e)
            | Unary(_, e) => vec![e],
            Apply(a, b) | Image(a, b) | DomRestrict(a, b) | RanRestrict(a, b) | Binary(_, a, b) => {
                vec![a, b]
            }
            Quant(_, binders, guard, body) => {
                let mut v: Vec<&Expr> = binders.iter().map(|b| &b.domain).collect();
                if let Some(g) = guard {
                    v.push(g);
                }
                v.push(body);
                v
            }
        }
    }

    fn children_mut(&mut self) -> Vec<&mut Expr> {
        use Expr::*;
        match self {
            Bool(_) | Int(_) | Name(_) | Var(_) | SelfObj | SelfAttr(_) | EnumLit(_)
            | Extent(_) | Rel(_) => vec![],
            Call(_, args) | SetLit(args) => args.iter_mut().collect(),
            Attr(e, _)
            | Inverse(e)
            | Closure(e)
            | Dom(e)
            | Ran(e)
            | LeadsTo(e, _)
            | Dot(e, _)
            | Arrow(e, _)
            | Harpoon(e, _)
            | Card(e)
            | BagSum(e)
            | BagMin(e)
            | BagMax(e)
            | BagOf(_, e)
            | Members(e)
            | Unary(_, e) => vec![e],
            Apply(a, b) | Image(a, b) | DomRestrict(a, b) | RanRestrict(a, b) | Binary(_, a, b) => {
                vec![a, b]
            }
            Quant(_, binders, guard, body) => {
                let mut v: Vec<&mut Expr> = binders.iter_mut().map(|b| &mut b.domain).collect();
                if let Some(g) = guard {
                    v.push(g);
                }
                v.push(body);
                v
            }
        }
    }

    /// Rename attributes of `self` (bare attribute names and `self`
    /// accessors), as done when a parent structure is copied under a rename.
    /// Bound variables shadow bare names.
    pub fn rename_self_attrs(&self, map: &BTreeMap<&str, &str>) -> Expr {
        let mut out = self.clone();
        rename_rec(&mut out, map, &mut Vec::new());
        out
    }

    /// Relation names mentioned anywhere (roles unresolved are ignored).
    pub fn relations(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| match e {
            Expr::Rel(r) => {
                out.insert(r.clone());
            }
            Expr::LeadsTo(_, role) | Expr::Dot(_, role) => {
                if let Some(t) = &role.target {
                    out.insert(t.relation.clone());
                }
            }
            _ => {}
        });
        out
    }

    /// Attribute names read anywhere.
    pub fn attributes(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| match e {
            Expr::SelfAttr(a)
            | Expr::Attr(_, a)
            | Expr::Arrow(_, a)
            | Expr::Harpoon(_, a)
            | Expr::BagOf(a, _) => {
                out.insert(a.clone());
            }
            _ => {}
        });
        out
    }

    pub fn walk(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }
}

fn rename_rec(e: &mut Expr, map: &BTreeMap<&str, &str>, bound: &mut Vec<String>) {
    match e {
        Expr::SelfAttr(a) => {
            if let Some(n) = map.get(a.as_str()) {
                *a = n.to_string();
            }
        }
        Expr::Name(a) if !bound.contains(a) => {
            if let Some(n) = map.get(a.as_str()) {
                *a = n.to_string();
            }
        }
        Expr::Attr(obj, a) if matches!(**obj, Expr::SelfObj) => {
            if let Some(n) = map.get(a.as_str()) {
                *a = n.to_string();
            }
        }
        Expr::Quant(_, binders, guard, body) => {
            let depth = bound.len();
            for b in binders.iter_mut() {
                rename_rec(&mut b.domain, map, bound);
                bound.push(b.var.clone());
            }
            if let Some(g) = guard {
                rename_rec(g, map, bound);
            }
            rename_rec(body, map, bound);
            bound.truncate(depth);
            return;
        }
        _ => {}
    }
    for c in e.children_mut() {
        rename_rec(c, map, bound);
    }
}
