//! Surface-syntax printing of expressions, with minimal parentheses.

use std::fmt;

use super::ast::{BinOp, Expr, Quant, UnOp};
use super::resolve::accessor_name;

const QUANT: u8 = 0;
const NOT: u8 = 5;
const CMP: u8 = 6;
const ADD: u8 = 7;
const NEG: u8 = 9;
const POSTFIX: u8 = 10;
const ATOM: u8 = 11;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut p = Printer { bound: Vec::new() };
        f.write_str(&p.expr(self, QUANT))
    }
}

impl fmt::Display for Quant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

struct Printer {
    bound: Vec<String>,
}

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Quant(..) => QUANT,
        Expr::Binary(op, ..) => op.precedence(),
        Expr::Unary(UnOp::Not, _) => NOT,
        Expr::Unary(UnOp::Neg, _) => NEG,
        Expr::Int(i) if *i < 0 => NEG,
        Expr::LeadsTo(..) | Expr::Dot(..) | Expr::Arrow(..) | Expr::Harpoon(..) => POSTFIX,
        _ => ATOM,
    }
}

impl Printer {
    fn expr(&mut self, e: &Expr, ctx: u8) -> String {
        let s = self.inner(e);
        if level(e) < ctx {
            format!("({s})")
        } else {
            s
        }
    }

    fn call(&mut self, name: &str, args: &[&Expr]) -> String {
        let args: Vec<String> = args.iter().map(|a| self.expr(a, QUANT)).collect();
        format!("{name}({})", args.join(", "))
    }

    fn inner(&mut self, e: &Expr) -> String {
        use Expr::*;
        match e {
            Bool(b) => b.to_string(),
            Int(i) => i.to_string(),
            Name(n) | Var(n) | EnumLit(n) | Extent(n) | Rel(n) => n.clone(),
            Call(n, args) => {
                let args: Vec<&Expr> = args.iter().collect();
                self.call(n, &args)
            }
            SelfObj => "self".into(),
            SelfAttr(a) => {
                if self.bound.contains(a) {
                    format!("{}(self)", accessor_name(a))
                } else {
                    a.clone()
                }
            }
            Attr(o, a) => self.call(&accessor_name(a), &[o]),
            Apply(fun, x) => {
                let arg = self.expr(x, QUANT);
                match &**fun {
                    Rel(r) => format!("{r}({arg})"),
                    other => format!("{}({arg})", self.expr(other, ATOM)),
                }
            }
            Inverse(r) => self.call("inv", &[r]),
            Closure(r) => self.call("closure", &[r]),
            Dom(r) => self.call("dom", &[r]),
            Ran(r) => self.call("ran", &[r]),
            Image(r, s) => self.call("image", &[r, s]),
            DomRestrict(s, r) => self.call("dres", &[s, r]),
            RanRestrict(r, s) => self.call("rres", &[r, s]),
            LeadsTo(o, role) => format!("{} ~> {}", self.expr(o, POSTFIX), role.name),
            Dot(s, role) => format!("{}.{}", self.expr(s, POSTFIX), role.name),
            Arrow(s, a) => format!("{} -> {a}", self.expr(s, POSTFIX)),
            Harpoon(s, a) => format!("{} => {a}", self.expr(s, POSTFIX)),
            Card(x) => self.call("card", &[x]),
            BagSum(x) => self.call("bagsum", &[x]),
            BagMin(x) => self.call("bagmin", &[x]),
            BagMax(x) => self.call("bagmax", &[x]),
            BagOf(a, s) => format!("bagOf({a}, {})", self.expr(s, QUANT)),
            Members(q) => self.call("members", &[q]),
            SetLit(items) => {
                let items: Vec<String> = items.iter().map(|i| self.expr(i, QUANT)).collect();
                format!("{{{}}}", items.join(", "))
            }
            Unary(UnOp::Not, x) => format!("not {}", self.expr(x, NOT)),
            Unary(UnOp::Neg, x) => format!("-{}", self.expr(x, NEG)),
            Binary(op, l, r) => {
                let p = op.precedence();
                let (lc, rc) = match op {
                    BinOp::Implies => (p + 1, p),
                    _ if p == CMP => (ADD, ADD),
                    _ => (p, p + 1),
                };
                format!("{} {} {}", self.expr(l, lc), op.symbol(), self.expr(r, rc))
            }
            Quant(q, binders, guard, body) => {
                let depth = self.bound.len();
                let mut parts = Vec::new();
                for b in binders {
                    let dom = self.expr(&b.domain, ADD);
                    parts.push(format!("{} : {dom}", b.var));
                    self.bound.push(b.var.clone());
                }
                let mut s = format!("{q} {}", parts.join("; "));
                if let Some(g) = guard {
                    s.push_str(" | ");
                    s.push_str(&self.expr(g, QUANT));
                }
                s.push_str(" @ ");
                s.push_str(&self.expr(body, QUANT));
                self.bound.truncate(depth);
                s
            }
        }
    }
}
