use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use super::*;
use crate::dsl::{parse_expr, parse_model};
use crate::instance::{Instance, Object, World};
use crate::model::{Model, ObjectRef, Span, Value};

const NUMS: &str = "class N : concrete { v : int -5..5; }
relation r : N -> N;
relation f : N -> N function;";

fn nums() -> Model {
    parse_model(NUMS).unwrap()
}

fn eval_in(m: &Model, inst: &Instance, src: &str) -> Result<Val, EvalError> {
    let parsed = parse_expr(src).unwrap_or_else(|e| panic!("{src}: {e:?}"));
    let (e, _) =
        resolve(&parsed, m, None, Span::default()).unwrap_or_else(|e| panic!("{src}: {e:?}"));
    evaluate(&e, &World::new(m, inst), &Env::new())
}

fn instance(values: &[i64], edges: &BTreeSet<(u64, u64)>) -> Instance {
    let objects = values
        .iter()
        .enumerate()
        .map(|(i, v)| Object::new(ObjectRef(i as u64 + 1), "N").with("v", Value::Int(*v)))
        .collect();
    let tuples = edges
        .iter()
        .map(|&(a, b)| (ObjectRef(a), ObjectRef(b)))
        .collect();
    Instance {
        objects,
        relations: BTreeMap::from([("r".to_string(), tuples)]),
        ..Instance::default()
    }
}

/// Reachability by boolean matrix squaring, independent of the search in
/// `transitive_closure`.
fn warshall(n: usize, edges: &BTreeSet<(u64, u64)>) -> BTreeSet<(ObjectRef, ObjectRef)> {
    let mut m = vec![vec![false; n + 1]; n + 1];
    for &(a, b) in edges {
        m[a as usize][b as usize] = true;
    }
    for k in 1..=n {
        for i in 1..=n {
            for j in 1..=n {
                m[i][j] |= m[i][k] && m[k][j];
            }
        }
    }
    let mut out = BTreeSet::new();
    for (i, row) in m.iter().enumerate() {
        for (j, &reach) in row.iter().enumerate() {
            if reach {
                out.insert((ObjectRef(i as u64), ObjectRef(j as u64)));
            }
        }
    }
    out
}

#[test]
fn floor_division_and_modulo() {
    let m = nums();
    let i = Instance::default();
    for (src, want) in [
        ("7 div 2", 3),
        ("-7 div 2", -4),
        ("7 mod -2", -1),
        ("-7 mod 2", 1),
        ("2 - 3 * 4", -10),
    ] {
        assert_eq!(eval_in(&m, &i, src), Ok(Val::Int(want)), "{src}");
    }
    assert!(matches!(
        eval_in(&m, &i, "1 div 0"),
        Err(EvalError::ArithmeticError(_))
    ));
}

#[test]
fn quantifiers_over_extents() {
    let m = nums();
    let i = instance(&[1, 2, 2], &BTreeSet::new());
    assert_eq!(
        eval_in(&m, &i, "forall x : N @ getV(x) >= 1"),
        Ok(Val::Bool(true))
    );
    assert_eq!(
        eval_in(&m, &i, "exists x : N @ getV(x) = 3"),
        Ok(Val::Bool(false))
    );
    assert_eq!(
        eval_in(&m, &i, "exists1 x : N @ getV(x) = 1"),
        Ok(Val::Bool(true))
    );
    assert_eq!(
        eval_in(&m, &i, "exists1 x : N @ getV(x) = 2"),
        Ok(Val::Bool(false))
    );
    assert_eq!(
        eval_in(&m, &Instance::default(), "forall x : N @ false"),
        Ok(Val::Bool(true))
    );
}

#[test]
fn aggregates_of_empty_bags() {
    let m = nums();
    let i = Instance::default();
    assert_eq!(eval_in(&m, &i, "bagsum(N -> v)"), Ok(Val::Int(0)));
    assert_eq!(
        eval_in(&m, &i, "bagmin(N -> v)"),
        Err(EvalError::EmptyAggregate("bagmin"))
    );
    assert_eq!(
        eval_in(&m, &i, "bagmax(N -> v)"),
        Err(EvalError::EmptyAggregate("bagmax"))
    );
}

#[test]
fn harpoon_needs_one_value() {
    let m = nums();
    assert_eq!(
        eval_in(&m, &instance(&[4, 4], &BTreeSet::new()), "N => v"),
        Ok(Val::Int(4))
    );
    assert!(matches!(
        eval_in(&m, &instance(&[4, 5], &BTreeSet::new()), "N => v"),
        Err(EvalError::NonUniqueValue { found: 2, .. })
    ));
}

#[test]
fn application_of_a_non_function() {
    let m = nums();
    let i = instance(&[0, 0, 0], &BTreeSet::from([(1, 2), (1, 3)]));
    assert!(matches!(
        eval_in(&m, &i, "exists x : N @ r(x) = x"),
        Err(EvalError::NotFunctional { count: 2, .. })
    ));
    assert_eq!(eval_in(&m, &i, "card(image(r, {}))"), Ok(Val::Int(0)));
    assert_eq!(eval_in(&m, &i, "card(ran(r))"), Ok(Val::Int(2)));
    assert_eq!(eval_in(&m, &i, "card(inv(r))"), Ok(Val::Int(2)));
}

fn arb_world() -> impl Strategy<Value = (Vec<i64>, BTreeSet<(u64, u64)>)> {
    prop::collection::vec(-5i64..=5, 0..7).prop_flat_map(|vals| {
        let n = vals.len() as u64;
        let edges = if n == 0 {
            Just(BTreeSet::new()).boxed()
        } else {
            prop::collection::btree_set((1..=n, 1..=n), 0..12).boxed()
        };
        (Just(vals), edges)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bag_aggregates_match_direct_folds((vals, edges) in arb_world()) {
        let m = nums();
        let i = instance(&vals, &edges);
        prop_assert_eq!(eval_in(&m, &i, "bagsum(N -> v)"), Ok(Val::Int(vals.iter().sum())));
        let min = vals.iter().min().map(|v| Val::Int(*v)).ok_or(EvalError::EmptyAggregate("bagmin"));
        let max = vals.iter().max().map(|v| Val::Int(*v)).ok_or(EvalError::EmptyAggregate("bagmax"));
        prop_assert_eq!(eval_in(&m, &i, "bagmin(N -> v)"), min);
        prop_assert_eq!(eval_in(&m, &i, "bagmax(bagOf(v, N))"), max);
        prop_assert_eq!(eval_in(&m, &i, "card(N -> v)"), Ok(Val::Int(vals.len() as i64)));
    }

    #[test]
    fn closure_matches_warshall((vals, edges) in arb_world()) {
        let m = nums();
        let i = instance(&vals, &edges);
        prop_assert_eq!(eval_in(&m, &i, "closure(r)"), Ok(Val::Rel(warshall(vals.len(), &edges))));
    }

    #[test]
    fn as_seq_matches_sorted_dedup(xs in prop::collection::vec(any::<u16>(), 0..40)) {
        let mut want = xs.clone();
        want.sort_unstable();
        want.dedup();
        prop_assert_eq!(as_seq(&xs.into_iter().collect()), want);
    }
}
