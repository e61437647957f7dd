//! `oocp`: check, expand, validate and solve object-oriented constraint models.

use std::fs;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use oocp_core::dsl::expand;
use oocp_core::instance::Loaded;
use oocp_core::{
    brute_force_enumerate, bundled, canonicalize, load_instance, parse_model, save_instance,
    solve_with, validate, Model, PartialInstance, SolveConfig, SolveError, SolveStatus,
};

const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "oocp",
    version,
    about = "Object-oriented constraint models: check, expand, validate, solve"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a model and report static diagnostics.
    Check { model: PathBuf },
    /// Print every class with its inherited attributes and full invariant.
    Expand { model: PathBuf },
    /// Check a complete instance against every axiom of the model.
    Validate {
        model: PathBuf,
        instance: PathBuf,
        /// Also write the report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Complete a partial instance into every valid instance within bounds.
    Solve(SolveArgs),
    /// Like `solve`, but by exhaustive generate-and-test (small bounds only).
    Enumerate(SolveArgs),
}

#[derive(Args)]
struct SolveArgs {
    model: PathBuf,
    /// Partial instance to complete.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Bound on the objects of a class, as CLASS=N. Repeatable.
    #[arg(long = "max-class", value_name = "CLASS=N", value_parser = parse_bound)]
    max_class: Vec<(String, usize)>,
    /// Size of the reference pool for fresh objects.
    #[arg(long, default_value_t = 0)]
    pool: usize,
    /// Upper bound for nat and nat1 attributes.
    #[arg(long = "int-bound", default_value_t = 8)]
    int_bound: i64,
    /// Every pool reference must be used exactly once.
    #[arg(long)]
    partition: bool,
    /// Stop after this many solutions.
    #[arg(long)]
    limit: Option<usize>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    seconds: Option<f64>,
    /// Directory for solution files.
    #[arg(long, default_value = "solutions")]
    out: PathBuf,
}

fn parse_bound(s: &str) -> Result<(String, usize), String> {
    let (class, n) = s.split_once('=').ok_or("expected CLASS=N")?;
    let n = n
        .trim()
        .parse()
        .map_err(|e| format!("bad bound `{n}`: {e}"))?;
    Ok((class.trim().to_string(), n))
}

impl SolveArgs {
    fn config(&self) -> Result<SolveConfig> {
        let time_budget = match self.seconds {
            Some(s) if !(s.is_finite() && s >= 0.0) => {
                bail!("--seconds must be a non-negative number")
            }
            Some(s) => Some(Duration::from_secs_f64(s)),
            None => None,
        };
        Ok(SolveConfig {
            max_per_class: self.max_class.iter().cloned().collect(),
            pool_size: self.pool,
            default_int_bound: self.int_bound,
            partition: self.partition,
            max_solutions: self.limit,
            time_budget,
        })
    }
}

struct Style {
    color: bool,
}

impl Style {
    fn paint(&self, code: &str, s: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    }

    fn error(&self, s: &str) -> String {
        self.paint("1;31", s)
    }

    fn ok(&self, s: &str) -> String {
        self.paint("1;32", s)
    }

    fn warn(&self, s: &str) -> String {
        self.paint("1;33", s)
    }
}

fn main() -> ExitCode {
    // Usage errors share the input-error status; 2 means budget exceeded.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    let style = Style {
        color: std::env::var("OOCP_COLOR").map_or(true, |v| v != "0")
            && std::io::stderr().is_terminal(),
    };
    match run(cli.command, &style) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{} {e:#}", style.error("error:"));
            ExitCode::from(EXIT_INPUT)
        }
    }
}

/// Read a model file. A bare file name that does not exist on disk falls
/// back to the bundled model of that name.
fn load_model(path: &Path, style: &Style) -> Result<Option<Model>> {
    let src = match fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => match path.to_str().and_then(bundled::model) {
            Some(s) => s.to_string(),
            None => return Err(e).with_context(|| format!("reading {}", path.display())),
        },
    };
    match parse_model(&src) {
        Ok(m) => Ok(Some(m)),
        Err(errs) => {
            for e in errs {
                eprintln!("{}:{} {}", path.display(), e.span, style.error(&e.message));
                if e.expected.len() > 1 {
                    eprintln!("    expected one of: {}", e.expected.join(", "));
                }
            }
            Ok(None)
        }
    }
}

fn load_file(model: &Model, path: &Path) -> Result<Loaded> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_instance(model, &text).with_context(|| format!("loading {}", path.display()))
}

fn run(command: Command, style: &Style) -> Result<u8> {
    match command {
        Command::Check { model } => {
            let Some(m) = load_model(&model, style)? else {
                return Ok(EXIT_INPUT);
            };
            let diags = m.check();
            for d in &diags {
                eprintln!("{}: {} {d}", model.display(), style.error("error:"));
            }
            if diags.is_empty() {
                println!("{}: {}", model.display(), style.ok("ok"));
                Ok(0)
            } else {
                Ok(EXIT_INPUT)
            }
        }
        Command::Expand { model } => {
            let Some(m) = load_model(&model, style)? else {
                return Ok(EXIT_INPUT);
            };
            print!("{}", expand(&m));
            Ok(0)
        }
        Command::Validate {
            model,
            instance,
            report,
        } => {
            let Some(m) = load_model(&model, style)? else {
                return Ok(EXIT_INPUT);
            };
            let inst = match load_file(&m, &instance)? {
                Loaded::Complete(i) => i,
                Loaded::Partial(_) => bail!(
                    "{} is a partial instance; validate needs a complete one",
                    instance.display()
                ),
            };
            let rep = validate(&m, &inst, &SolveConfig::default());
            if let Some(path) = report {
                let json = serde_json::to_string_pretty(&rep)?;
                fs::write(&path, json + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if rep.valid {
                println!("{}: {}", instance.display(), style.ok("valid"));
                return Ok(0);
            }
            println!("{}: {}", instance.display(), style.error("invalid"));
            for d in &rep.diagnostics {
                println!("  {d}");
            }
            Ok(1)
        }
        Command::Solve(args) => solve_cmd(&args, style, false),
        Command::Enumerate(args) => solve_cmd(&args, style, true),
    }
}

fn solve_cmd(args: &SolveArgs, style: &Style, oracle: bool) -> Result<u8> {
    let Some(m) = load_model(&args.model, style)? else {
        return Ok(EXIT_INPUT);
    };
    let diags = m.check();
    if !diags.is_empty() {
        for d in &diags {
            eprintln!("{}: {} {d}", args.model.display(), style.error("error:"));
        }
        return Ok(EXIT_INPUT);
    }
    let partial = match &args.input {
        Some(p) => load_file(&m, p)?.into_partial(),
        None => PartialInstance::default(),
    };
    let config = args.config()?;

    let mut written = 0usize;
    let mut write = |inst: &oocp_core::Instance| -> Result<()> {
        if written == 0 {
            fs::create_dir_all(&args.out)
                .with_context(|| format!("creating {}", args.out.display()))?;
        }
        written += 1;
        let path = args.out.join(format!("solution-{written:04}.json"));
        fs::write(&path, save_instance(inst)).with_context(|| format!("writing {}", path.display()))
    };

    if oracle {
        let found = match brute_force_enumerate(&m, &partial, &config) {
            Ok(f) => f,
            Err(e @ SolveError::OracleTooLarge { .. }) => {
                eprintln!("{} {e}", style.error("error:"));
                return Ok(SolveStatus::BudgetExceeded.code() as u8);
            }
            Err(e) => return Err(e.into()),
        };
        for inst in found
            .iter()
            .take(config.max_solutions.unwrap_or(usize::MAX))
        {
            write(inst)?;
        }
        let status = if found.is_empty() {
            SolveStatus::Unsatisfiable
        } else {
            SolveStatus::Solutions
        };
        eprintln!("{status}: {written} solution(s) in {}", args.out.display());
        return Ok(status.code() as u8);
    }

    let mut io_error = None;
    let summary = solve_with(&m, &partial, &config, |inst| {
        match write(&canonicalize(&inst)) {
            Ok(()) => true,
            Err(e) => {
                io_error = Some(e);
                false
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    for w in &summary.warnings {
        eprintln!("{} {w}", style.warn("warning:"));
    }
    let label = match summary.status {
        SolveStatus::Solutions => style.ok("solutions"),
        s => style.error(&s.to_string()),
    };
    eprintln!(
        "{label}: {} solution(s) in {} ({} nodes, {:.2?})",
        summary.solutions,
        args.out.display(),
        summary.nodes,
        summary.elapsed
    );
    Ok(summary.status.code() as u8)
}
