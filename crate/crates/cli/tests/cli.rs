use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use oocp_core::bundled;

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/models")
}

fn arg(p: &Path) -> String {
    p.display().to_string()
}

fn oocp(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_oocp"))
        .args(args)
        .env("OOCP_COLOR", "0")
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn check_accepts_bundled_models() {
    for (name, _) in bundled::MODELS {
        let (code, out, _) = oocp(&["check", &arg(&models().join(name))]);
        assert_eq!(code, 0, "{name}");
        assert!(out.contains("ok"));
    }
}

#[test]
fn check_reports_a_missing_discriminator() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vehicle.oocp");
    fs::write(
        &path,
        format!(
            "{}\nclass Raft : concrete inherits Water {{}}\n",
            bundled::VEHICLE
        ),
    )
    .unwrap();
    let (code, _, err) = oocp(&["check", &arg(&path)]);
    assert_eq!(code, 3);
    assert!(err.contains("MissingDiscriminator [Raft]"), "{err}");
    assert!(err.contains("`powermode`"), "{err}");
    assert!(!err.contains('\x1b'), "color must be off");
}

#[test]
fn syntax_errors_carry_positions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.oocp");
    fs::write(&path, "class A : concrete { a : int 1..3 }\n").unwrap();
    let (code, _, err) = oocp(&["check", &arg(&path)]);
    assert_eq!(code, 3);
    assert!(err.contains("bad.oocp:1:"), "{err}");
}

#[test]
fn missing_files_are_input_errors() {
    assert_eq!(oocp(&["check", "/nonexistent/model.oocp"]).0, 3);
    let (code, _, _) = oocp(&[
        "validate",
        &arg(&models().join("pc.oocp")),
        "/nonexistent.json",
    ]);
    assert_eq!(code, 3);
}

#[test]
fn bundled_names_resolve_without_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_oocp"))
        .args(["expand", "abc.oocp"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("class D : concrete"));
}

#[test]
fn validate_lists_the_violated_bijection() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let (code, out, _) = oocp(&[
        "validate",
        &arg(&models().join("anbn.oocp")),
        &arg(&models().join("inputs/bad-abbb.json")),
        "--report",
        &arg(&report),
    ]);
    assert_eq!(code, 1);
    assert!(out.contains("invalid"));
    assert!(out.contains("SBSyntax"), "{out}");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["valid"], false);
    assert!(json["diagnostics"]
        .as_array()
        .unwrap()
        .iter()
        .any(|d| d["axiom"]["name"] == "SBSyntax"));
}

#[test]
fn validate_rejects_partial_instances() {
    let (code, _, err) = oocp(&[
        "validate",
        &arg(&models().join("anbn.oocp")),
        &arg(&models().join("inputs/dot-a-dot-b.json")),
    ]);
    assert_eq!(code, 3);
    assert!(err.contains("partial"));
}

#[test]
fn solve_writes_numbered_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sols");
    let (code, _, err) = oocp(&[
        "solve",
        &arg(&models().join("abc.oocp")),
        "--max-class",
        "C=1",
        "--out",
        &arg(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    // One C with a in 5..10, plus the empty instance.
    assert_eq!(names.len(), 7);
    assert_eq!(names[0], "solution-0001.json");
    assert_eq!(names[6], "solution-0007.json");
}

#[test]
fn solve_and_enumerate_agree() {
    let dir = tempfile::tempdir().unwrap();
    let count = |cmd: &str| {
        let out = dir.path().join(cmd);
        let (code, _, _) = oocp(&[
            cmd,
            &arg(&models().join("enrolment.oocp")),
            "--max-class",
            "Person=1",
            "--max-class",
            "Company=1",
            "--max-class",
            "EnrolmentInfo=1",
            "--out",
            &arg(&out),
        ]);
        assert_eq!(code, 0);
        let mut files: Vec<String> = fs::read_dir(&out)
            .unwrap()
            .map(|e| fs::read_to_string(e.unwrap().path()).unwrap())
            .collect();
        files.sort();
        files
    };
    assert_eq!(count("solve"), count("enumerate"));
}

#[test]
fn limits_and_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let model = arg(&models().join("abc.oocp"));
    let out = arg(&dir.path().join("a"));
    let (code, _, _) = oocp(&[
        "solve",
        &model,
        "--max-class",
        "A=2",
        "--limit",
        "3",
        "--out",
        &out,
    ]);
    assert_eq!(code, 0);
    assert_eq!(fs::read_dir(&out).unwrap().count(), 3);

    let out = arg(&dir.path().join("b"));
    let (code, _, err) = oocp(&[
        "solve",
        &model,
        "--max-class",
        "A=2",
        "--seconds",
        "0",
        "--out",
        &out,
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("budget exceeded"));

    let out = arg(&dir.path().join("c"));
    let (code, _, err) = oocp(&[
        "enumerate",
        &model,
        "--max-class",
        "A=3",
        "--max-class",
        "B=3",
        "--out",
        &out,
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("oracle"), "{err}");
}

#[test]
fn unsatisfiable_input_exits_one() {
    let (code, _, err) = oocp(&[
        "solve",
        &arg(&models().join("anbn.oocp")),
        "--input",
        &arg(&models().join("inputs/abbb.json")),
        "--max-class",
        "S=3",
        "--max-class",
        "Semantic=4",
        "--out",
        &arg(&tempfile::tempdir().unwrap().path().join("x")),
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("unsatisfiable"));
}

#[test]
fn bad_bounds_are_usage_errors() {
    let (code, _, _) = oocp(&[
        "solve",
        &arg(&models().join("abc.oocp")),
        "--max-class",
        "A",
    ]);
    assert_eq!(code, 3);
    let (code, _, _) = oocp(&[
        "solve",
        &arg(&models().join("abc.oocp")),
        "--max-class",
        "Nope=1",
    ]);
    assert_eq!(code, 3);
}

#[test]
fn nat_bound_warning_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("n.oocp");
    fs::write(&path, "class A : concrete { n : nat; invariant n >= 2; }\n").unwrap();
    let (code, _, err) = oocp(&[
        "solve",
        &arg(&path),
        "--max-class",
        "A=1",
        "--int-bound",
        "3",
        "--out",
        &arg(&dir.path().join("o")),
    ]);
    assert_eq!(code, 0);
    assert!(
        err.contains("warning: A.n reached the integer bound 3"),
        "{err}"
    );
}
