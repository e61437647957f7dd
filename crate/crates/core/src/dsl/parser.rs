use super::lexer::{lex, Tok, Token};
use crate::expr::{BinOp, Binder, Expr, Quant, Role, UnOp};
use crate::model::{
    AttrDomain, Axiom, ClassDef, Constraint, ModelError, ModelErrorKind, ParentLink, Span,
};
use crate::relations::{CardRange, Ordering, Reification, RelationDecl, RelationKind};

/// Declarations as written, before resolution.
#[derive(Debug, Default)]
pub struct Decls {
    pub classes: Vec<ClassDef>,
    pub relations: Vec<RelationDecl>,
    pub constraints: Vec<Constraint>,
}

const RESERVED: &[&str] = &[
    "and",
    "or",
    "not",
    "implies",
    "iff",
    "forall",
    "exists",
    "exists1",
    "in",
    "notin",
    "subseteq",
    "union",
    "inter",
    "diff",
    "div",
    "mod",
    "true",
    "false",
    "self",
    "class",
    "relation",
    "constraint",
];

const TOP: &[&str] = &["class", "relation", "constraint"];

pub fn parse_decls(src: &str) -> (Decls, Vec<ModelError>) {
    let (toks, errors) = lex(src);
    let mut p = Parser {
        toks,
        pos: 0,
        errors,
    };
    let mut d = Decls::default();
    while !p.at_eof() {
        let res = match p.peek_ident() {
            Some("class") => p.class().map(|c| d.classes.push(c)),
            Some("relation") => p.relation().map(|r| d.relations.push(r)),
            Some("constraint") => p.constraint().map(|c| d.constraints.push(c)),
            _ => Err(p.unexpected(&["class", "relation", "constraint"])),
        };
        if let Err(e) = res {
            p.errors.push(e);
            p.recover();
        }
    }
    (d, p.errors)
}

/// Parse a standalone expression (used by tests and tools).
pub fn parse_expr(src: &str) -> Result<Expr, Vec<ModelError>> {
    let (toks, errors) = lex(src);
    let mut p = Parser {
        toks,
        pos: 0,
        errors,
    };
    let e = p.expr();
    match e {
        Ok(e) if p.errors.is_empty() && p.at_eof() => Ok(e),
        Ok(_) if p.errors.is_empty() => Err(vec![p.unexpected(&["end of input"])]),
        Ok(_) => Err(p.errors),
        Err(e) => {
            p.errors.push(e);
            Err(p.errors)
        }
    }
}

type PResult<T> = Result<T, ModelError>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    errors: Vec<ModelError>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn peek_ident(&self) -> Option<&str> {
        match self.peek() {
            Tok::Ident(s) => Some(s),
            _ => None,
        }
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if !matches!(t.tok, Tok::Eof) {
            self.pos += 1;
        }
        t
    }

    fn is_kw(&self, kw: &str) -> bool {
        self.peek_ident() == Some(kw)
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(x) if *x == p)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        let hit = self.is_kw(kw);
        if hit {
            self.bump();
        }
        hit
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        let hit = self.is_punct(p);
        if hit {
            self.bump();
        }
        hit
    }

    fn unexpected(&self, expected: &[&str]) -> ModelError {
        let shown: Vec<String> = expected.iter().map(|e| format!("`{e}`")).collect();
        let mut e = ModelError::new(
            ModelErrorKind::Syntax,
            self.span(),
            format!("expected {}, found {}", shown.join(" or "), self.peek()),
        );
        e.expected = expected.iter().map(|s| s.to_string()).collect();
        e
    }

    fn expect_punct(&mut self, p: &'static str) -> PResult<Span> {
        if self.is_punct(p) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[p]))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.is_kw(kw) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[kw]))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(&[what])),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = self.eat_punct("-");
        match *self.peek() {
            Tok::Int(v) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            _ => Err(self.unexpected(&["integer"])),
        }
    }

    /// Skip to the next top-level keyword.
    fn recover(&mut self) {
        self.bump();
        while !self.at_eof() && !self.peek_ident().is_some_and(|k| TOP.contains(&k)) {
            self.bump();
        }
    }

    fn class(&mut self) -> PResult<ClassDef> {
        let span = self.expect_kw("class")?;
        let name = self.ident("class name")?;
        self.expect_punct(":")?;
        let is_abstract = if self.eat_kw("abstract") {
            true
        } else if self.eat_kw("concrete") {
            false
        } else {
            return Err(self.unexpected(&["abstract", "concrete"]));
        };
        let mut c = ClassDef::new(name, is_abstract);
        c.span = span;
        if self.eat_kw("discriminators") {
            loop {
                c.discriminators.push(self.ident("discriminator name")?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        if self.eat_kw("inherits") {
            loop {
                let mut link = ParentLink::new(self.ident("parent class")?);
                if self.eat_kw("via") {
                    link.discriminator = Some(self.ident("discriminator name")?);
                }
                let more_parents;
                if self.eat_kw("rename") {
                    loop {
                        let new = self.ident("attribute name")?;
                        self.expect_punct("/")?;
                        let old = self.ident("attribute name")?;
                        link.renames.push((old, new));
                        let continues = self.is_punct(",")
                            && matches!(self.peek_at(1), Tok::Ident(_))
                            && matches!(self.peek_at(2), Tok::Punct("/"));
                        if continues {
                            self.bump();
                        } else {
                            more_parents = self.eat_punct(",");
                            break;
                        }
                    }
                } else {
                    more_parents = self.eat_punct(",");
                }
                c.parents.push(link);
                if !more_parents {
                    break;
                }
            }
        }
        self.expect_punct("{")?;
        loop {
            if self.eat_punct("}") {
                break;
            }
            if self.is_kw("invariant") {
                let span = self.bump().span;
                let expr = self.expr()?;
                self.expect_punct(";")?;
                c.invariants.push(Axiom {
                    expr,
                    span,
                    origin: c.name.clone(),
                });
                continue;
            }
            let attr = match self.ident("attribute name") {
                Ok(a) => a,
                Err(_) => return Err(self.unexpected(&["attribute name", "invariant", "}"])),
            };
            self.expect_punct(":")?;
            let dom = self.domain()?;
            self.expect_punct(";")?;
            c.attrs.push((attr, dom));
        }
        Ok(c)
    }

    fn domain(&mut self) -> PResult<AttrDomain> {
        let Some(kw) = self.peek_ident().map(str::to_string) else {
            return Err(self.unexpected(&["int", "nat", "nat1", "bool", "enum"]));
        };
        self.bump();
        Ok(match kw.as_str() {
            "int" => {
                let lo = self.int()?;
                self.expect_punct("..")?;
                let hi = self.int()?;
                AttrDomain::IntRange(lo, hi)
            }
            "nat" => AttrDomain::Nat,
            "nat1" => AttrDomain::NatPositive,
            "bool" => AttrDomain::Bool,
            "enum" => {
                self.expect_punct("{")?;
                let mut vals = Vec::new();
                loop {
                    vals.push(self.ident("enumeration value")?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct("}")?;
                AttrDomain::Enum(vals)
            }
            _ => {
                self.pos -= 1;
                return Err(self.unexpected(&["int", "nat", "nat1", "bool", "enum"]));
            }
        })
    }

    fn relation(&mut self) -> PResult<RelationDecl> {
        let span = self.expect_kw("relation")?;
        let name = self.ident("relation name")?;
        self.expect_punct(":")?;
        let src = self.ident("source class")?;
        self.expect_punct("->")?;
        let tgt = self.ident("target class")?;
        let mut r = RelationDecl::new(name, src, tgt);
        r.span = span;
        let rname = r.name.clone();
        let bad = |msg: String| ModelError::new(ModelErrorKind::BadRelation, span, msg);
        let mut base: Option<RelationKind> = None;
        let mut partial = false;
        const KINDS: &[&str] = &[
            "function",
            "partial",
            "injection",
            "surjection",
            "bijection",
            "composition",
            "aggregation",
            "seq",
            "iseq",
            "subset",
            "reified",
            "mult",
            "roles",
            ";",
        ];
        while !self.eat_punct(";") {
            let Some(kw) = self.peek_ident().map(str::to_string) else {
                return Err(self.unexpected(KINDS));
            };
            let set_base = |base: &mut Option<RelationKind>, k: RelationKind| {
                if base.is_some_and(|b| b != k) {
                    Err(bad(format!("`{rname}`: conflicting relation kinds")))
                } else {
                    *base = Some(k);
                    Ok(())
                }
            };
            match kw.as_str() {
                "function" => set_base(&mut base, RelationKind::Function)?,
                "injection" => set_base(&mut base, RelationKind::Injection)?,
                "surjection" => set_base(&mut base, RelationKind::Surjection)?,
                "bijection" => set_base(&mut base, RelationKind::Bijection)?,
                "partial" => partial = true,
                "composition" => {
                    r.composition = true;
                    self.bump();
                    r.inverse_total = self.is_kw("total");
                    if !r.inverse_total {
                        continue;
                    }
                }
                "aggregation" => r.aggregation = true,
                "seq" | "iseq" => {
                    r.ordering = if kw == "seq" {
                        Ordering::Seq
                    } else {
                        Ordering::Iseq
                    };
                }
                "subset" => {
                    self.bump();
                    self.expect_kw("of")?;
                    r.subset_of = Some(self.ident("relation name")?);
                    continue;
                }
                "reified" => {
                    self.bump();
                    self.expect_kw("by")?;
                    let class = self.ident("class name")?;
                    let total = !self.eat_kw("partial");
                    r.reified_by = Some(Reification { class, total });
                    continue;
                }
                "mult" => {
                    self.bump();
                    r.multiplicity.per_source = self.range()?;
                    if self.is_punct(",")
                        && matches!(self.peek_at(1), Tok::Int(_) | Tok::Punct("*"))
                    {
                        self.bump();
                        r.multiplicity.per_target = self.range()?;
                    }
                    continue;
                }
                "roles" => {
                    self.bump();
                    let left = self.ident("role name")?;
                    self.expect_punct(",")?;
                    let right = self.ident("role name")?;
                    r.roles = Some((left, right));
                    continue;
                }
                _ => return Err(self.unexpected(KINDS)),
            }
            self.bump();
        }
        if r.is_ordered() {
            match base {
                None | Some(RelationKind::Function) if !partial => {
                    base = Some(RelationKind::Function)
                }
                _ => {
                    return Err(bad(format!(
                        "ordered relation `{}` must be a (total) function",
                        r.name
                    )))
                }
            }
        }
        r.kind = match (base, partial) {
            (None, false) => RelationKind::Relation,
            (None | Some(RelationKind::Function), true) => RelationKind::PartialFunction,
            (Some(RelationKind::Injection), true) => RelationKind::PartialInjection,
            (Some(RelationKind::Surjection), true) => RelationKind::PartialSurjection,
            (Some(k), false) => k,
            (Some(_), true) => {
                return Err(bad(format!("`{}`: a bijection cannot be partial", r.name)))
            }
        };
        Ok(r)
    }

    fn range(&mut self) -> PResult<CardRange> {
        if self.eat_punct("*") {
            return Ok(CardRange::ANY);
        }
        let lo = self.card()?;
        if !self.eat_punct("..") {
            return Ok(CardRange::new(lo, Some(lo)));
        }
        if self.eat_punct("*") {
            return Ok(CardRange::new(lo, None));
        }
        Ok(CardRange::new(lo, Some(self.card()?)))
    }

    fn card(&mut self) -> PResult<u32> {
        match *self.peek() {
            Tok::Int(v) if u32::try_from(v).is_ok() => {
                self.bump();
                Ok(v as u32)
            }
            _ => Err(self.unexpected(&["cardinality", "*"])),
        }
    }

    fn constraint(&mut self) -> PResult<Constraint> {
        let span = self.expect_kw("constraint")?;
        let name = self.ident("constraint name")?;
        self.expect_punct(":")?;
        let expr = self.expr()?;
        self.expect_punct(";")?;
        Ok(Constraint { name, expr, span })
    }

    // Expressions, loosest first.

    fn expr(&mut self) -> PResult<Expr> {
        if let Some(q) = self.quant_kw() {
            return self.quant(q);
        }
        self.iff()
    }

    fn quant_kw(&self) -> Option<Quant> {
        match self.peek_ident()? {
            "forall" => Some(Quant::Forall),
            "exists" => Some(Quant::Exists),
            "exists1" => Some(Quant::ExistsUnique),
            _ => None,
        }
    }

    fn quant(&mut self, q: Quant) -> PResult<Expr> {
        self.bump();
        let mut binders = Vec::new();
        loop {
            let var = self.ident("variable name")?;
            self.expect_punct(":")?;
            let domain = self.additive()?;
            binders.push(Binder { var, domain });
            let more = self.is_punct(";")
                && matches!(self.peek_at(1), Tok::Ident(_))
                && matches!(self.peek_at(2), Tok::Punct(":"));
            if !more {
                break;
            }
            self.bump();
        }
        let guard = if self.eat_punct("|") {
            Some(Box::new(self.expr()?))
        } else {
            None
        };
        if !self.eat_punct("@") {
            return Err(self.unexpected(&["@", "|", ";"]));
        }
        let body = self.expr()?;
        Ok(Expr::Quant(q, binders, guard, Box::new(body)))
    }

    fn iff(&mut self) -> PResult<Expr> {
        let mut l = self.implies()?;
        while self.eat_kw("iff") {
            let r = self.implies()?;
            l = Expr::bin(BinOp::Iff, l, r);
        }
        Ok(l)
    }

    fn implies(&mut self) -> PResult<Expr> {
        let l = self.or()?;
        if self.eat_kw("implies") {
            let r = if let Some(q) = self.quant_kw() {
                self.quant(q)?
            } else {
                self.implies()?
            };
            return Ok(Expr::bin(BinOp::Implies, l, r));
        }
        Ok(l)
    }

    fn or(&mut self) -> PResult<Expr> {
        let mut l = self.and()?;
        while self.eat_kw("or") {
            let r = self.and()?;
            l = Expr::bin(BinOp::Or, l, r);
        }
        Ok(l)
    }

    fn and(&mut self) -> PResult<Expr> {
        let mut l = self.not()?;
        while self.eat_kw("and") {
            let r = self.not()?;
            l = Expr::bin(BinOp::And, l, r);
        }
        Ok(l)
    }

    fn not(&mut self) -> PResult<Expr> {
        if self.eat_kw("not") {
            return Ok(Expr::negation(self.not()?));
        }
        if let Some(q) = self.quant_kw() {
            return self.quant(q);
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let l = self.additive()?;
        let op = match self.peek() {
            Tok::Punct("=") => BinOp::Eq,
            Tok::Punct("!=") => BinOp::Ne,
            Tok::Punct("<") => BinOp::Lt,
            Tok::Punct("<=") => BinOp::Le,
            Tok::Punct(">") => BinOp::Gt,
            Tok::Punct(">=") => BinOp::Ge,
            Tok::Ident(k) if k == "in" || k == "notin" => BinOp::In,
            Tok::Ident(k) if k == "subseteq" => BinOp::SubsetEq,
            _ => return Ok(l),
        };
        let negate = self.is_kw("notin");
        self.bump();
        let r = self.additive()?;
        let e = Expr::bin(op, l, r);
        Ok(if negate { Expr::negation(e) } else { e })
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut l = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("+") => BinOp::Add,
                Tok::Punct("-") => BinOp::Sub,
                Tok::Ident(k) if k == "union" => BinOp::Union,
                Tok::Ident(k) if k == "diff" => BinOp::Diff,
                _ => return Ok(l),
            };
            self.bump();
            let r = self.multiplicative()?;
            l = Expr::bin(op, l, r);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut l = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("*") => BinOp::Mul,
                Tok::Ident(k) if k == "div" => BinOp::Div,
                Tok::Ident(k) if k == "mod" => BinOp::Mod,
                Tok::Ident(k) if k == "inter" => BinOp::Inter,
                _ => return Ok(l),
            };
            self.bump();
            let r = self.unary()?;
            l = Expr::bin(op, l, r);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_punct("-") {
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        if self.eat_punct("#") {
            return Ok(Expr::Card(Box::new(self.unary()?)));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            let op = match self.peek() {
                Tok::Punct(p @ ("~>" | "." | "->" | "=>")) => *p,
                Tok::Punct("(") => {
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_punct(")")?;
                    e = Expr::Apply(Box::new(e), Box::new(arg));
                    continue;
                }
                _ => return Ok(e),
            };
            self.bump();
            let name = self.ident(if matches!(op, "~>" | ".") {
                "role name"
            } else {
                "attribute name"
            })?;
            let b = Box::new(e);
            e = match op {
                "~>" => Expr::LeadsTo(b, Role::named(name)),
                "." => Expr::Dot(b, Role::named(name)),
                "->" => Expr::Arrow(b, name),
                _ => Expr::Harpoon(b, name),
            };
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        const START: &[&str] = &["integer", "name", "(", "{", "true", "false", "self"];
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Punct("{") => {
                self.bump();
                let mut items = Vec::new();
                if !self.eat_punct("}") {
                    loop {
                        items.push(self.expr()?);
                        if self.eat_punct("}") {
                            break;
                        }
                        self.expect_punct(",")?;
                    }
                }
                Ok(Expr::SetLit(items))
            }
            Tok::Ident(k) if k == "true" || k == "false" => {
                self.bump();
                Ok(Expr::Bool(k == "true"))
            }
            Tok::Ident(k) if k == "self" => {
                self.bump();
                Ok(Expr::SelfObj)
            }
            Tok::Ident(k) if !RESERVED.contains(&k.as_str()) => {
                self.bump();
                if self.eat_punct("(") {
                    let mut args = Vec::new();
                    if !self.eat_punct(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.eat_punct(")") {
                                break;
                            }
                            self.expect_punct(",")?;
                        }
                    }
                    Ok(Expr::Call(k, args))
                } else {
                    Ok(Expr::Name(k))
                }
            }
            _ => Err(self.unexpected(START)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(src: &str) -> Expr {
        parse_expr(src).unwrap_or_else(|errs| panic!("{src}: {errs:?}"))
    }

    #[test]
    fn precedence_of_connectives() {
        let x = e("a and b or c implies d implies f");
        let Expr::Binary(BinOp::Implies, l, r) = x else {
            panic!()
        };
        assert!(matches!(*l, Expr::Binary(BinOp::Or, ..)));
        assert!(matches!(*r, Expr::Binary(BinOp::Implies, ..)));
    }

    #[test]
    fn arithmetic_and_comparison() {
        let x = e("getBegin(w) + 1 = getEnd(w) * 2");
        let Expr::Binary(BinOp::Eq, l, r) = x else {
            panic!()
        };
        assert!(matches!(*l, Expr::Binary(BinOp::Add, ..)));
        assert!(matches!(*r, Expr::Binary(BinOp::Mul, ..)));
    }

    #[test]
    fn traversal_chains_left_to_right() {
        let x = e("p ~> theMainBoard . theProcessor -> getPowerUsed");
        let Expr::Arrow(inner, a) = x else { panic!() };
        assert_eq!(a, "getPowerUsed");
        assert!(matches!(*inner, Expr::Dot(..)));
    }

    #[test]
    fn quantifier_with_two_binders_and_guard() {
        let x = e("forall a : SA; b : SB | a != b @ getBegin(a) < getBegin(b)");
        let Expr::Quant(Quant::Forall, bs, Some(_), _) = x else {
            panic!()
        };
        assert_eq!(bs.len(), 2);
    }

    #[test]
    fn applied_inverse() {
        let x = e("inv(SASyntax)(phraseSyntax(p))");
        assert!(matches!(x, Expr::Apply(..)));
    }

    #[test]
    fn notin_is_negated_membership() {
        assert_eq!(e("x notin S"), Expr::negation(e("x in S")));
    }

    #[test]
    fn class_declaration() {
        let (d, errs) =
            parse_decls("class D : concrete inherits B rename d/b, A via x { invariant d = 5; }");
        assert!(errs.is_empty(), "{errs:?}");
        let c = &d.classes[0];
        assert_eq!(c.parents.len(), 2);
        assert_eq!(
            c.parents[0].renames,
            vec![("b".to_string(), "d".to_string())]
        );
        assert_eq!(c.parents[1].discriminator.as_deref(), Some("x"));
        assert_eq!(c.invariants.len(), 1);
    }

    #[test]
    fn relation_declaration() {
        let (d, errs) = parse_decls(
            "relation hasMemory : PC -> Memory composition total mult 0..4, 1 roles pc, memories;
             relation builds : Polygon -> Point iseq mult 5;
             relation next : Word -> Word partial injection;",
        );
        assert!(errs.is_empty(), "{errs:?}");
        let r = &d.relations[0];
        assert!(r.composition && r.inverse_total);
        assert_eq!(r.multiplicity.per_source, CardRange::new(0, Some(4)));
        assert_eq!(r.multiplicity.per_target, CardRange::new(1, Some(1)));
        assert_eq!(r.roles, Some(("pc".into(), "memories".into())));
        assert_eq!(d.relations[1].kind, RelationKind::Function);
        assert_eq!(d.relations[1].ordering, Ordering::Iseq);
        assert_eq!(d.relations[2].kind, RelationKind::PartialInjection);
    }

    #[test]
    fn all_errors_are_reported_with_positions() {
        let (_, errs) = parse_decls(
            "class A : concrete { a : int 1..; }\nclass B : maybe {}\nrelation r : A -> B frobnicate;",
        );
        assert_eq!(errs.len(), 3, "{errs:?}");
        assert_eq!(errs[0].span, Span::new(1, 33));
        assert!(errs[0].expected.contains(&"integer".to_string()));
        assert_eq!(errs[1].span.line, 2);
        assert_eq!(errs[1].expected, vec!["abstract", "concrete"]);
        assert_eq!(errs[2].span.line, 3);
    }

    #[test]
    fn ordered_relations_must_be_functions() {
        let (_, errs) = parse_decls("relation q : A -> B injection seq;");
        assert_eq!(errs[0].kind, ModelErrorKind::BadRelation);
    }
}
