//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.
//!
//! Run with `cargo test -p oocp-cli --test acceptance -- --nocapture` to see
//! the report.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use oocp_core::expr::{as_seq, bagmax, bagmin, bagsum, transitive_closure, Bag};
use oocp_core::instance::Loaded;
use oocp_core::{
    brute_force_enumerate, bundled, canonicalize, load_instance, parse_model, solve, validate,
    Instance, Model, ObjectRef, PartialInstance, SolveConfig,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Wall-clock limit for the aaabbb parse, CLI process included.
const PARSE_TIME_LIMIT: Duration = Duration::from_secs(10);
/// Wall-clock limit for the whole oracle-equivalence criterion.
const ORACLE_SUITE_LIMIT: Duration = Duration::from_secs(300);
const MICRO_MODELS: usize = 50;
const MICRO_SEED: u64 = 0x00c0_ffee;
const EQUIVALENCE_CASES: usize = 1000;
const EQUIVALENCE_SEED: u64 = 7;
const MAX_WORDS: usize = 6;

fn models_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/models")
}

fn model_path(name: &str) -> PathBuf {
    models_dir().join(name)
}

fn input_path(name: &str) -> PathBuf {
    models_dir().join("inputs").join(name)
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn oocp(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_oocp"))
        .args(args)
        .env("OOCP_COLOR", "0")
        .output()
        .expect("run oocp");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn anbn() -> Model {
    parse_model(bundled::ANBN).unwrap()
}

/// Solve `anbn.oocp` through the CLI and load every solution file.
fn solve_anbn(input: &str, bounds: &[&str]) -> (Run, Vec<Instance>, Duration) {
    let dir = tempfile::tempdir().unwrap();
    let model = model_path("anbn.oocp");
    let input = input_path(input);
    let out = dir.path().join("solutions");
    let mut args = vec![
        "solve".to_string(),
        model.display().to_string(),
        "--input".into(),
        input.display().to_string(),
        "--out".into(),
        out.display().to_string(),
    ];
    for b in bounds {
        args.push("--max-class".into());
        args.push(b.to_string());
    }
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let start = Instant::now();
    let run = oocp(&args);
    let took = start.elapsed();
    let m = anbn();
    let mut files: Vec<PathBuf> = fs::read_dir(&out)
        .map(|d| d.map(|e| e.unwrap().path()).collect())
        .unwrap_or_default();
    files.sort();
    let instances = files
        .iter()
        .map(
            |f| match load_instance(&m, &fs::read_to_string(f).unwrap()).unwrap() {
                Loaded::Complete(i) => i,
                Loaded::Partial(_) => panic!("{} is not a complete instance", f.display()),
            },
        )
        .collect();
    (run, instances, took)
}

fn image(i: &Instance, rel: &str, from: ObjectRef) -> Option<ObjectRef> {
    i.relations
        .get(rel)?
        .iter()
        .find(|p| p.0 == from)
        .map(|p| p.1)
}

fn phrase(i: &Instance) -> ObjectRef {
    i.objects.iter().find(|o| o.class == "Phrase").unwrap().r
}

fn phrase_n(i: &Instance) -> Option<i64> {
    let sem = image(i, "phraseSemantic", phrase(i))?;
    i.object(sem)?.attrs.get("n")?.as_int()
}

fn spelling(i: &Instance) -> String {
    let mut out = String::new();
    let mut cur = image(i, "firstWord", phrase(i));
    while let Some(w) = cur {
        out.push(if i.object(w).unwrap().class == "SA" {
            'a'
        } else {
            'b'
        });
        cur = image(i, "next", w);
    }
    out
}

/// The syntax tree below the phrase, `S(SA,<sub>,SB)` with `null` for a
/// missing sub-phrase.
fn syntax_tree(i: &Instance) -> String {
    fn go(i: &Instance, s: ObjectRef) -> String {
        let sub = image(i, "subSyntax", s).map_or("null".to_string(), |t| go(i, t));
        format!("S(SA,{sub},SB)")
    }
    image(i, "phraseSyntax", phrase(i)).map_or("none".to_string(), |s| go(i, s))
}

struct Report {
    results: Vec<(u32, bool)>,
    /// Every instance a solver produced, with its model, for the soundness check.
    emitted: Vec<(Model, Instance)>,
}

impl Report {
    fn record(&mut self, id: u32, title: &str, ok: bool, detail: String) {
        println!(
            "criterion {id:>2} {} {title}: {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
        self.results.push((id, ok));
    }
}

fn c1_positive_parse(r: &mut Report) {
    let (run, sols, took) = solve_anbn("aaabbb.json", &["S=3", "Semantic=4"]);
    let tree = sols.first().map(syntax_tree).unwrap_or_default();
    let n = sols.first().and_then(phrase_n);
    let ok = run.code == 0
        && sols.len() == 1
        && n == Some(3)
        && tree == "S(SA,S(SA,S(SA,null,SB),SB),SB)"
        && took < PARSE_TIME_LIMIT;
    let detail = format!(
        "exit {}, {} solution(s), n={n:?}, tree {tree}, {took:.2?}",
        run.code,
        sols.len()
    );
    r.emitted.extend(sols.into_iter().map(|i| (anbn(), i)));
    r.record(1, "aaabbb parses uniquely", ok, detail);
}

fn c2_negative_parse(r: &mut Report) {
    let (run, sols, _) = solve_anbn("abbb.json", &["S=3", "Semantic=4"]);
    let ok = run.code == 1 && sols.is_empty() && run.stderr.contains("unsatisfiable");
    r.record(
        2,
        "abbb is rejected",
        ok,
        format!("exit {}, {} solution(s)", run.code, sols.len()),
    );
}

fn c3_partial_words(r: &mut Report) {
    let (run, sols, _) = solve_anbn("dot-a-dot-b.json", &["S=2", "Semantic=2"]);
    let spelled: Vec<String> = sols.iter().map(spelling).collect();
    let n = sols.first().and_then(phrase_n);
    let ok = run.code == 0 && spelled == ["aabb"] && n == Some(2);
    r.emitted.extend(sols.into_iter().map(|i| (anbn(), i)));
    r.record(
        3,
        ". a . b completes to aabb",
        ok,
        format!("exit {}, {spelled:?}, n={n:?}", run.code),
    );
}

fn c4_semantics_driven(r: &mut Report) {
    let (run, sols, _) = solve_anbn("n2.json", &["Word=4", "S=2", "Semantic=2"]);
    let spelled: Vec<String> = sols.iter().map(spelling).collect();
    let n = sols.first().and_then(phrase_n);
    let ok = run.code == 0 && spelled == ["aabb"] && n == Some(2);
    r.emitted.extend(sols.into_iter().map(|i| (anbn(), i)));
    r.record(
        4,
        "n=2 generates aabb",
        ok,
        format!("exit {}, {spelled:?}, n={n:?}", run.code),
    );
}

/// Supply and total device demand, added up straight from the JSON file.
fn pc_sums(file: &Path) -> (i64, i64) {
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(file).unwrap()).unwrap();
    let (mut supply, mut demand) = (0, 0);
    for o in doc["objects"].as_array().unwrap() {
        let attrs = &o["attrs"];
        supply += attrs["power"].as_i64().unwrap_or(0);
        demand += attrs["powerUsed"].as_i64().unwrap_or(0);
    }
    (supply, demand)
}

fn c5_power_budget(r: &mut Report) {
    let model = model_path("pc.oocp");
    let mut details = Vec::new();
    let mut ok = true;
    for (file, supply) in [("pc-400.json", 400), ("pc-300.json", 300)] {
        let path = input_path(file);
        let (s, d) = pc_sums(&path);
        let expect_valid = s >= d;
        let run = oocp(&[
            "validate",
            &model.display().to_string(),
            &path.display().to_string(),
        ]);
        ok &= s == supply && d == 350 && run.code == if expect_valid { 0 } else { 1 };
        details.push(format!("supply {s} vs demand {d}: exit {}", run.code));
    }
    r.record(5, "power budget verdicts", ok, details.join("; "));
}

/// A random model with at most three classes, two relations, attribute
/// domains of at most four values and three objects.
fn micro_model(rng: &mut ChaCha8Rng) -> (String, SolveConfig) {
    let n = rng.gen_range(1..=3);
    let mut src = String::new();
    let mut has_attr = Vec::new();
    for c in 0..n {
        let parent = (c > 0 && rng.gen_bool(0.4)).then(|| rng.gen_range(0..c));
        let abstract_ = parent.is_none() && n > 1 && rng.gen_bool(0.15);
        src += &format!(
            "class K{c} : {}",
            if abstract_ { "abstract" } else { "concrete" }
        );
        if let Some(p) = parent {
            src += &format!(" inherits K{p}");
        }
        src += " {\n";
        let attr = rng.gen_bool(0.6);
        if attr {
            match rng.gen_range(0..3) {
                0 => {
                    let lo = rng.gen_range(-1..=2);
                    src += &format!("  x{c} : int {lo}..{};\n", lo + rng.gen_range(0..=3));
                }
                1 => src += &format!("  x{c} : bool;\n"),
                _ => src += &format!("  x{c} : enum {{p, q, s}};\n"),
            }
        }
        has_attr.push(attr);
        src += "}\n";
    }
    let kinds = [
        "",
        "function",
        "partial",
        "injection",
        "partial injection",
        "surjection",
        "bijection",
        "composition",
        "mult 0..1",
        "mult 1..2, 0..1",
    ];
    let nrel = rng.gen_range(0..=2);
    for i in 0..nrel {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let kind = kinds.choose(rng).unwrap();
        src += &format!("relation r{i} : K{a} -> K{b} {kind};\n");
    }
    if rng.gen_bool(0.5) {
        let c = rng.gen_range(0..n);
        src += &format!("constraint g : card(K{c}) <= {};\n", rng.gen_range(0..=2));
    }
    if nrel > 0 && rng.gen_bool(0.4) {
        src += "constraint h : forall k : dom(r0) @ k notin image(r0, {k});\n";
    }
    let mut config = SolveConfig {
        default_int_bound: 3,
        ..SolveConfig::default()
    };
    let mut left = 3;
    for c in 0..n {
        let k = rng.gen_range(0..=left);
        left -= k;
        config.max_per_class.insert(format!("K{c}"), k);
    }
    (src, config)
}

fn equivalent(
    model: &Model,
    partial: &PartialInstance,
    config: &SolveConfig,
    r: &mut Report,
) -> Result<usize, String> {
    let found = solve(model, partial, config).map_err(|e| e.to_string())?;
    let oracle = brute_force_enumerate(model, partial, config).map_err(|e| e.to_string())?;
    let got: BTreeSet<Instance> = found.instances.iter().map(canonicalize).collect();
    r.emitted
        .extend(found.instances.into_iter().map(|i| (model.clone(), i)));
    if got == oracle {
        Ok(got.len())
    } else {
        Err(format!("solver {} vs oracle {}", got.len(), oracle.len()))
    }
}

fn c6_oracle_equivalence(r: &mut Report) {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut counts = Vec::new();
    let corpus = [
        (
            "abc",
            bundled::ABC,
            vec![("A", 1), ("B", 1), ("C", 1), ("D", 1)],
            3,
        ),
        ("vehicle", bundled::VEHICLE, vec![("Vehicle", 2)], 8),
        (
            "enrolment",
            bundled::ENROLMENT,
            vec![("Person", 2), ("Company", 1), ("EnrolmentInfo", 2)],
            8,
        ),
    ];
    for (name, src, bounds, int_bound) in corpus {
        let m = parse_model(src).unwrap();
        let mut c = SolveConfig {
            default_int_bound: int_bound,
            ..SolveConfig::default()
        };
        for (class, n) in bounds {
            c = c.with_max(class, n);
        }
        match equivalent(&m, &PartialInstance::default(), &c, r) {
            Ok(k) => counts.push(format!("{name} {k}")),
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(MICRO_SEED);
    let (mut done, mut solutions) = (0, 0);
    while done < MICRO_MODELS {
        let (src, config) = micro_model(&mut rng);
        let Ok(m) = parse_model(&src) else { continue };
        if !m.check().is_empty() {
            continue;
        }
        match equivalent(&m, &PartialInstance::default(), &config, r) {
            Ok(k) => solutions += k,
            Err(e) => failures.push(format!("{e} for\n{src}")),
        }
        done += 1;
    }
    counts.push(format!("{MICRO_MODELS} micro-models {solutions}"));
    let took = start.elapsed();
    let ok = failures.is_empty() && took < ORACLE_SUITE_LIMIT;
    for f in &failures {
        println!("    {f}");
    }
    r.record(
        6,
        "solver matches the oracle",
        ok,
        format!("{} solutions, {took:.2?}", counts.join(", ")),
    );
}

fn c7_soundness(r: &mut Report) {
    let invalid = r
        .emitted
        .iter()
        .filter(|(m, i)| !validate(m, i, &SolveConfig::default()).valid)
        .count();
    let n = r.emitted.len();
    r.record(
        7,
        "every emission validates",
        invalid == 0 && n > 0,
        format!("{invalid} of {n} invalid"),
    );
}

fn c8_redundant_even_span(r: &mut Report) {
    let full = anbn();
    let reduced = full
        .without_constraint("evenSpan")
        .expect("evenSpan exists");
    let partial = load_instance(&full, r#"{"objects": [{"ref": 1, "class": "Phrase"}]}"#)
        .unwrap()
        .into_partial();
    let mut ok = true;
    let mut sizes = Vec::new();
    for words in 1..=MAX_WORDS {
        let c = SolveConfig::default()
            .with_max("Word", words)
            .with_max("S", words / 2)
            .with_max("Semantic", words / 2);
        let with = solve(&full, &partial, &c).unwrap();
        let without = solve(&reduced, &partial, &c).unwrap();
        let a: BTreeSet<Instance> = with.instances.iter().map(canonicalize).collect();
        let b: BTreeSet<Instance> = without.instances.iter().map(canonicalize).collect();
        ok &= a == b;
        sizes.push(format!("{words}:{}/{}", a.len(), b.len()));
        r.emitted
            .extend(with.instances.into_iter().map(|i| (full.clone(), i)));
        r.emitted
            .extend(without.instances.into_iter().map(|i| (reduced.clone(), i)));
    }
    r.record(
        8,
        "evenSpan is redundant",
        ok,
        format!("solutions with/without by word bound {}", sizes.join(" ")),
    );
}

fn c9_expand_golden(r: &mut Report) {
    let run = oocp(&["expand", &model_path("abc.oocp").display().to_string()]);
    let golden = fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/abc.expand.txt"),
    )
    .unwrap();
    let ok = run.code == 0 && run.stdout == golden;
    r.record(
        9,
        "abc expansion matches golden",
        ok,
        format!("exit {}, {} bytes", run.code, run.stdout.len()),
    );
}

/// Reachability by Warshall's algorithm over a dense matrix.
fn warshall(n: usize, edges: &BTreeSet<(usize, usize)>) -> BTreeSet<(usize, usize)> {
    let mut m = vec![vec![false; n]; n];
    for &(a, b) in edges {
        m[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                m[i][j] |= m[i][k] && m[k][j];
            }
        }
    }
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| m[i][j])
        .collect()
}

fn c10_randomized_equivalence(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(EQUIVALENCE_SEED);
    let mut mismatches: BTreeMap<&str, usize> = BTreeMap::new();
    for _ in 0..EQUIVALENCE_CASES {
        let len = rng.gen_range(0..12);
        let xs: Vec<i64> = (0..len).map(|_| rng.gen_range(-50..50)).collect();
        let bag: Bag<i64> = xs.iter().copied().collect();
        let mut miss = |name, ok: bool| {
            if !ok {
                *mismatches.entry(name).or_default() += 1;
            }
        };
        miss("bagsum", bagsum(&bag) == Some(xs.iter().sum()));
        miss("bagmin", bagmin(&bag) == xs.iter().min().copied());
        miss("bagmax", bagmax(&bag) == xs.iter().max().copied());
        let mut sorted = xs.clone();
        sorted.sort_unstable();
        sorted.dedup();
        miss("asSeq", as_seq(&xs.iter().copied().collect()) == sorted);
        let n = rng.gen_range(1..7);
        let edges: BTreeSet<(usize, usize)> = (0..rng.gen_range(0..10))
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
            .collect();
        miss(
            "transitiveClosure",
            transitive_closure(&edges) == warshall(n, &edges),
        );
    }
    let ok = mismatches.is_empty();
    r.record(
        10,
        "bag, sequence and closure operators",
        ok,
        format!("{EQUIVALENCE_CASES} cases, mismatches {mismatches:?}"),
    );
}

#[test]
fn acceptance() {
    let mut r = Report {
        results: Vec::new(),
        emitted: Vec::new(),
    };
    c1_positive_parse(&mut r);
    c2_negative_parse(&mut r);
    c3_partial_words(&mut r);
    c4_semantics_driven(&mut r);
    c5_power_budget(&mut r);
    c6_oracle_equivalence(&mut r);
    c8_redundant_even_span(&mut r);
    c9_expand_golden(&mut r);
    c10_randomized_equivalence(&mut r);
    c7_soundness(&mut r);
    let failed: Vec<u32> = r
        .results
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(id, _)| *id)
        .collect();
    println!(
        "{} of {} criteria passed",
        r.results.len() - failed.len(),
        r.results.len()
    );
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
