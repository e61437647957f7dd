//! Whole-pipeline checks over the bundled models through the public API.

use oocp_core::instance::Loaded;
use oocp_core::model::Constraint;
use oocp_core::{
    bundled, canonicalize, load_instance, parse_model, save_instance, solve, validate, DiagCode,
    PartialInstance, SolveConfig, SolveStatus,
};

/// Small bounds under which each bundled model has a non-empty solution.
fn desk_bounds(name: &str) -> SolveConfig {
    let c = SolveConfig {
        default_int_bound: 4,
        max_solutions: Some(20),
        ..SolveConfig::default()
    };
    match name {
        "abc.oocp" => c.with_max("A", 2),
        "vehicle.oocp" => c.with_max("Vehicle", 2),
        "pc.oocp" => c
            .with_max("PC", 1)
            .with_max("PowerSupply", 1)
            .with_max("Device", 3)
            .with_max("Memory", 1),
        "polygon.oocp" => c.with_max("Polygon", 1).with_max("Point", 5),
        "enrolment.oocp" => c
            .with_max("Person", 2)
            .with_max("Company", 1)
            .with_max("EnrolmentInfo", 1),
        "anbn.oocp" => c.with_max("Phrase", 1).with_max("Word", 2).with_max("S", 1).with_max("Semantic", 1),
        other => panic!("no bounds for {other}"),
    }
}

#[test]
fn every_bundled_model_has_a_nonempty_solution() {
    for (name, src) in bundled::MODELS {
        let m = parse_model(src).unwrap();
        let c = desk_bounds(name);
        let s = solve(&m, &PartialInstance::default(), &c).unwrap();
        assert_eq!(s.summary.status, SolveStatus::Solutions, "{name}");
        assert!(
            s.instances.iter().any(|i| !i.objects.is_empty()),
            "{name}: only the empty instance"
        );
        for i in &s.instances {
            assert!(validate(&m, i, &c).valid, "{name}");
        }
    }
}

#[test]
fn solutions_survive_a_save_load_round_trip() {
    let m = parse_model(bundled::ENROLMENT).unwrap();
    let c = desk_bounds("enrolment.oocp");
    for i in solve(&m, &PartialInstance::default(), &c).unwrap().instances {
        let text = save_instance(&i);
        let Loaded::Complete(back) = load_instance(&m, &text).unwrap() else {
            panic!("solutions are complete")
        };
        assert_eq!(canonicalize(&back), canonicalize(&i));
        assert_eq!(save_instance(&back), text);
    }
}

#[test]
fn pentagon_points_are_distinct() {
    let m = parse_model(bundled::POLYGON).unwrap();
    let c = SolveConfig {
        max_solutions: Some(3),
        ..desk_bounds("polygon.oocp")
    };
    let p = load_instance(&m, r#"{"objects": [{"ref": 1, "class": "Polygon"}]}"#)
        .unwrap()
        .into_partial();
    let s = solve(&m, &p, &c).unwrap();
    assert_eq!(s.instances.len(), 3);
    let pentagon = s
        .instances
        .iter()
        .find_map(|i| i.sequences.get("builds").and_then(|q| q.values().next()))
        .expect("a polygon");
    let distinct: std::collections::BTreeSet<_> = pentagon.iter().collect();
    assert_eq!((pentagon.len(), distinct.len()), (5, 5));
}

#[test]
fn dropping_and_adding_constraints() {
    let m = parse_model(bundled::PC).unwrap();
    let Loaded::Complete(low) = load_instance(&m, bundled::inputs::PC_300).unwrap() else {
        panic!("complete")
    };
    let rep = validate(&m, &low, &SolveConfig::default());
    assert_eq!(rep.codes(), vec![DiagCode::ConstraintViolation]);

    let relaxed = m.without_constraint("powerBudget").unwrap();
    assert!(validate(&relaxed, &low, &SolveConfig::default()).valid);
    assert!(m.without_constraint("noSuchConstraint").is_none());

    let cap = parse_model(
        "class X : concrete {}
         constraint cap : forall p : PC @ card(image(PC_Monitor, {p})) = 0;",
    );
    assert!(cap.is_err(), "PC is unknown outside the pc model");
    let extra = parse_model(&format!(
        "{}\nconstraint noMonitor : forall p : PC @ card(image(PC_Monitor, {{p}})) = 0;",
        bundled::PC
    ))
    .unwrap();
    let c: Constraint = extra.constraint("noMonitor").unwrap().clone();
    let stricter = relaxed.with_constraint(c).unwrap();
    let rep = validate(&stricter, &low, &SolveConfig::default());
    assert!(!rep.valid);
    assert!(rep.diagnostics.iter().any(|d| d.axiom.as_ref().is_some_and(|a| a.name == "noMonitor")));
}
