use serde::{Deserialize, Serialize};

use super::{Instance, World};
use crate::diag::{DiagCode, Diagnostic};
use crate::expr::{evaluate, evaluate_bool, Env, Expr, Quant, Val};
use crate::model::{check_object_table, Model, ObjectRef};
use crate::relations::check_relation;
use crate::solver::SolveConfig;

/// Outcome of checking an instance against every axiom of a model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    fn from_diagnostics(diagnostics: Vec<Diagnostic>) -> Self {
        ValidationReport {
            valid: diagnostics.is_empty(),
            diagnostics,
        }
    }

    pub fn codes(&self) -> Vec<DiagCode> {
        self.diagnostics.iter().map(|d| d.code).collect()
    }
}

/// Check the object table, every relation declaration, each object's full
/// class invariant and every global constraint. An axiom whose evaluation
/// fails counts as violated.
pub fn validate(model: &Model, instance: &Instance, config: &SolveConfig) -> ValidationReport {
    let mut out = check_object_table(model, instance, config);
    let world = World::new(model, instance);
    for decl in &model.relations {
        out.extend(check_relation(&world, decl));
    }
    for o in &instance.objects {
        let Some(flat) = model.flat(&o.class) else {
            continue;
        };
        let env = Env::with_self(o.r);
        for ax in &flat.invariants {
            let name = format!("{} invariant", ax.origin);
            match evaluate_bool(&ax.expr, &world, &env) {
                Ok(true) => {}
                Ok(false) => out.push(
                    Diagnostic::new(
                        DiagCode::InvariantViolation,
                        o.r.to_string(),
                        format!("`{}` is false for {} ({})", ax.expr, o.r, o.class),
                    )
                    .with_axiom(name, ax.span.line),
                ),
                Err(e) => out.push(
                    Diagnostic::new(DiagCode::EvaluationError, o.r.to_string(), e.to_string())
                        .with_axiom(name, ax.span.line),
                ),
            }
        }
    }
    for c in &model.constraints {
        match evaluate_bool(&c.expr, &world, &Env::new()) {
            Ok(true) => {}
            Ok(false) => {
                let witnesses = witnesses(&c.expr, &world);
                let subject = if witnesses.is_empty() {
                    c.name.clone()
                } else {
                    witnesses
                        .iter()
                        .map(|w| {
                            let refs: Vec<String> = w.iter().map(|r| r.to_string()).collect();
                            refs.join(",")
                        })
                        .collect::<Vec<_>>()
                        .join("; ")
                };
                out.push(
                    Diagnostic::new(
                        DiagCode::ConstraintViolation,
                        subject,
                        format!("constraint `{}` does not hold", c.name),
                    )
                    .with_axiom(&c.name, c.span.line),
                );
            }
            Err(e) => out.push(
                Diagnostic::new(DiagCode::EvaluationError, c.name.clone(), e.to_string())
                    .with_axiom(&c.name, c.span.line),
            ),
        }
    }
    ValidationReport::from_diagnostics(out)
}

/// Bindings of a top-level universal quantifier under which its body fails.
fn witnesses(expr: &Expr, world: &World) -> Vec<Vec<ObjectRef>> {
    let Expr::Quant(Quant::Forall, binders, guard, body) = expr else {
        return Vec::new();
    };
    let mut found = Vec::new();
    let mut stack = Vec::new();
    search(
        world,
        binders,
        guard.as_deref(),
        body,
        Env::new(),
        &mut stack,
        &mut found,
    );
    found
}

fn search(
    world: &World,
    binders: &[crate::expr::Binder],
    guard: Option<&Expr>,
    body: &Expr,
    env: Env,
    stack: &mut Vec<ObjectRef>,
    found: &mut Vec<Vec<ObjectRef>>,
) {
    let Some((b, rest)) = binders.split_first() else {
        let holds = guard
            .map_or(Ok(true), |g| evaluate_bool(g, world, &env))
            .and_then(|g| {
                if g {
                    evaluate_bool(body, world, &env)
                } else {
                    Ok(true)
                }
            });
        if holds != Ok(true) {
            found.push(stack.clone());
        }
        return;
    };
    let dom = match evaluate(&b.domain, world, &env) {
        Ok(Val::Set(s)) => s,
        Ok(Val::Obj(r)) => [r].into(),
        _ => return,
    };
    for r in dom {
        stack.push(r);
        search(
            world,
            rest,
            guard,
            body,
            env.clone().bind(&b.var, r),
            stack,
            found,
        );
        stack.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_model;
    use crate::instance::Object;
    use crate::model::Value;

    fn cfg() -> SolveConfig {
        SolveConfig::default()
    }

    #[test]
    fn empty_instance_is_valid_without_minimums() {
        let m = parse_model(
            "class A : concrete { a : int 1..3; }
             relation r : A -> A;
             constraint c : forall x : A @ getA(x) > 1;",
        )
        .unwrap();
        let rep = validate(&m, &Instance::default(), &cfg());
        assert!(rep.valid, "{:?}", rep.diagnostics);
    }

    #[test]
    fn invariant_violation_names_object_and_line() {
        let m = parse_model(
            "class A : concrete { a : int 1..10; }
             class C : concrete inherits A {
               invariant a >= 5;
             }",
        )
        .unwrap();
        let mut inst = Instance::default();
        inst.objects
            .push(Object::new(ObjectRef(3), "C").with("a", Value::Int(2)));
        let rep = validate(&m, &inst, &cfg());
        assert!(!rep.valid);
        assert_eq!(rep.codes(), vec![DiagCode::InvariantViolation]);
        let d = &rep.diagnostics[0];
        assert_eq!(d.subject, "#3");
        assert_eq!(d.axiom.as_ref().unwrap().line, 3);
    }

    #[test]
    fn constraint_witnesses_are_reported() {
        let m = parse_model(
            "class A : concrete { a : int 1..3; }
             constraint big : forall x : A @ getA(x) > 1;",
        )
        .unwrap();
        let mut inst = Instance::default();
        inst.objects
            .push(Object::new(ObjectRef(1), "A").with("a", Value::Int(1)));
        inst.objects
            .push(Object::new(ObjectRef(2), "A").with("a", Value::Int(2)));
        inst.objects
            .push(Object::new(ObjectRef(5), "A").with("a", Value::Int(1)));
        let rep = validate(&m, &inst, &cfg());
        assert_eq!(rep.codes(), vec![DiagCode::ConstraintViolation]);
        assert_eq!(rep.diagnostics[0].subject, "#1; #5");
    }

    #[test]
    fn evaluation_errors_are_violations() {
        let m = parse_model(
            "class A : concrete { a : int 0..3; }
             constraint z : forall x : A @ 6 div getA(x) = 1;",
        )
        .unwrap();
        let mut inst = Instance::default();
        inst.objects
            .push(Object::new(ObjectRef(1), "A").with("a", Value::Int(0)));
        let rep = validate(&m, &inst, &cfg());
        assert_eq!(rep.codes(), vec![DiagCode::EvaluationError]);
    }

    #[test]
    fn report_serializes_codes() {
        let m = parse_model("class A : abstract {}").unwrap();
        let mut inst = Instance::default();
        inst.objects.push(Object::new(ObjectRef(1), "A"));
        let rep = validate(&m, &inst, &cfg());
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["valid"], false);
        assert_eq!(json["diagnostics"][0]["code"], "AbstractInstantiation");
    }
}
