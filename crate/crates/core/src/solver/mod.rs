//! Bounded finite model generation: complete a partial instance into every
//! valid instance within the configured bounds, one per canonical form.
//!
//! The search first fixes the object table (a concrete class for each input
//! object and a multiset of classes for the fresh objects of each bounded
//! class), then backtracks over attribute values, relation tuples and
//! sequences. Constraints are ground over the object table and pruned with
//! a three-valued evaluation of partially assigned variables. Every leaf is
//! checked by the validator before it is emitted.

mod approx;
mod brute;
mod search;
mod space;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::instance::{canonicalize, validate, Instance, PartialInstance};
use crate::model::{AttrDomain, Model};
use search::{Search, Stop};
use space::{Bounds, Problem};

pub use brute::{brute_force_enumerate, ORACLE_LIMIT};

/// Search bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveConfig {
    /// Upper bound on the objects of each listed class (counting subtypes
    /// not covered by a more specific entry). Unlisted classes get no fresh
    /// objects.
    pub max_per_class: BTreeMap<String, usize>,
    pub pool_size: usize,
    /// Cap for `nat` and `nat1` attributes.
    pub default_int_bound: i64,
    /// Every pool reference must be used by exactly one object.
    pub partition: bool,
    pub max_solutions: Option<usize>,
    pub time_budget: Option<Duration>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_per_class: BTreeMap::new(),
            pool_size: 0,
            default_int_bound: 8,
            partition: false,
            max_solutions: None,
            time_budget: None,
        }
    }
}

impl SolveConfig {
    pub fn with_max(mut self, class: impl Into<String>, n: usize) -> Self {
        self.max_per_class.insert(class.into(), n);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Solutions,
    Unsatisfiable,
    BudgetExceeded,
}

impl SolveStatus {
    /// Process exit code.
    pub fn code(self) -> i32 {
        match self {
            SolveStatus::Solutions => 0,
            SolveStatus::Unsatisfiable => 1,
            SolveStatus::BudgetExceeded => 2,
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Solutions => "solutions",
            SolveStatus::Unsatisfiable => "unsatisfiable",
            SolveStatus::BudgetExceeded => "budget exceeded",
        })
    }
}

/// A solution uses the largest value of a clipped `nat`/`nat1` domain, so
/// larger values might have given more solutions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct BoundWarning {
    pub class: String,
    pub attr: String,
    pub bound: i64,
}

impl fmt::Display for BoundWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{} reached the integer bound {}; raise it to search further",
            self.class, self.attr, self.bound
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveSummary {
    pub status: SolveStatus,
    pub solutions: usize,
    pub warnings: Vec<BoundWarning>,
    /// Search nodes visited.
    pub nodes: u64,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("invalid solver input: {0}")]
    Input(String),
    #[error("the oracle would enumerate {size} candidates (limit {limit})")]
    OracleTooLarge { size: u128, limit: u128 },
}

/// Collected output of [`solve`].
#[derive(Clone, Debug)]
pub struct Solutions {
    pub instances: Vec<Instance>,
    pub summary: SolveSummary,
}

/// Run the search to completion (or to the configured limits) and collect
/// every solution.
pub fn solve(
    model: &Model,
    partial: &PartialInstance,
    config: &SolveConfig,
) -> Result<Solutions, SolveError> {
    let mut instances = Vec::new();
    let summary = solve_with(model, partial, config, |i| {
        instances.push(i);
        true
    })?;
    Ok(Solutions { instances, summary })
}

/// Run the search, handing each solution to `emit` as soon as it is found.
/// Returning `false` from `emit` stops the search.
pub fn solve_with(
    model: &Model,
    partial: &PartialInstance,
    config: &SolveConfig,
    mut emit: impl FnMut(Instance) -> bool,
) -> Result<SolveSummary, SolveError> {
    let start = Instant::now();
    let deadline = config.time_budget.map(|d| start + d);
    let bounds = Bounds::new(model, partial, config)?;
    let mut seen = BTreeSet::new();
    let mut warnings = BTreeSet::new();
    let mut nodes = 0;
    let mut out_of_time = false;
    for frame in bounds.frames() {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            out_of_time = true;
            break;
        }
        let Some(problem) = Problem::build(&bounds, &frame)? else {
            continue;
        };
        let mut search = Search::new(&problem, deadline);
        let stop = search.run(&mut |dom| {
            let inst = problem.instance(dom);
            if !validate(model, &inst, config).valid || !seen.insert(canonicalize(&inst)) {
                return None;
            }
            warnings.extend(bound_warnings(model, &inst, config));
            let more = emit(inst);
            let full = config.max_solutions.is_some_and(|m| seen.len() >= m);
            (!more || full).then_some(Stop::Done)
        });
        nodes += search.nodes;
        match stop {
            Some(Stop::Done) => break,
            Some(Stop::OutOfTime) => {
                out_of_time = true;
                break;
            }
            None => {}
        }
    }
    let status = if out_of_time {
        SolveStatus::BudgetExceeded
    } else if seen.is_empty() {
        SolveStatus::Unsatisfiable
    } else {
        SolveStatus::Solutions
    };
    Ok(SolveSummary {
        status,
        solutions: seen.len(),
        warnings: warnings.into_iter().collect(),
        nodes,
        elapsed: start.elapsed(),
    })
}

/// Run the search on its own thread. Solutions arrive on the channel; the
/// handle yields the summary once the search ends or the receiver is dropped.
pub fn spawn_solve(
    model: Model,
    partial: PartialInstance,
    config: SolveConfig,
) -> (
    mpsc::Receiver<Instance>,
    thread::JoinHandle<Result<SolveSummary, SolveError>>,
) {
    let (tx, rx) = mpsc::channel();
    let handle =
        thread::spawn(move || solve_with(&model, &partial, &config, |i| tx.send(i).is_ok()));
    (rx, handle)
}

fn bound_warnings(model: &Model, inst: &Instance, config: &SolveConfig) -> Vec<BoundWarning> {
    let bound = config.default_int_bound;
    let mut out = Vec::new();
    for o in &inst.objects {
        let Some(flat) = model.flat(&o.class) else {
            continue;
        };
        for (a, dom) in &flat.attrs {
            let clipped = matches!(dom, AttrDomain::Nat | AttrDomain::NatPositive);
            if clipped && o.attrs.get(a).and_then(|v| v.as_int()) == Some(bound) {
                out.push(BoundWarning {
                    class: o.class.clone(),
                    attr: a.clone(),
                    bound,
                });
            }
        }
    }
    out
}
