//! Backtracking over one frame's variables with constraint propagation.

use std::time::Instant;

use super::approx::Approx;
use super::space::Problem;

/// Forward checking tries every value of the variables a constraint reads
/// when their domains hold at most this many values in total.
const CHECK_LIMIT: usize = 128;

/// Why a search stopped before exhausting its space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Stop {
    /// The consumer has enough solutions.
    Done,
    OutOfTime,
}

pub(crate) struct Search<'p, 'm> {
    p: &'p Problem<'m>,
    dom: Vec<Vec<u32>>,
    trail: Vec<(usize, Vec<u32>)>,
    entailed: Vec<bool>,
    entailed_trail: Vec<usize>,
    /// Constraints to revisit when a variable's domain shrinks.
    watchers: Vec<Vec<usize>>,
    singletons: Vec<u32>,
    queued: Vec<bool>,
    deadline: Option<Instant>,
    pub nodes: u64,
}

impl<'p, 'm> Search<'p, 'm> {
    pub fn new(p: &'p Problem<'m>, deadline: Option<Instant>) -> Self {
        let mut watchers = vec![Vec::new(); p.vars.len()];
        for (g, ground) in p.grounds.iter().enumerate() {
            let mut ax = Approx::new(p, &p.init);
            ax.ground(ground);
            let mut touched = ax.touched;
            touched.sort_unstable();
            touched.dedup();
            for v in touched {
                watchers[v].push(g);
            }
        }
        let widest = p.vars.iter().map(|v| v.values.len()).max().unwrap_or(0);
        Search {
            p,
            dom: p.init.clone(),
            trail: Vec::new(),
            entailed: vec![false; p.grounds.len()],
            entailed_trail: Vec::new(),
            watchers,
            singletons: (0..widest as u32).collect(),
            queued: vec![false; p.grounds.len()],
            deadline,
            nodes: 0,
        }
    }

    /// Enumerate every assignment consistent with the constraints, calling
    /// `leaf` on each; the callback may stop the search.
    pub fn run(&mut self, leaf: &mut dyn FnMut(&[Vec<u32>]) -> Option<Stop>) -> Option<Stop> {
        let all: Vec<usize> = (0..self.p.grounds.len()).collect();
        if !self.propagate(all) {
            return None;
        }
        self.dfs(leaf)
    }

    fn dfs(&mut self, leaf: &mut dyn FnMut(&[Vec<u32>]) -> Option<Stop>) -> Option<Stop> {
        self.nodes += 1;
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            return Some(Stop::OutOfTime);
        }
        let choice = self
            .dom
            .iter()
            .enumerate()
            .filter(|(_, d)| d.len() > 1)
            .min_by_key(|(i, d)| (d.len(), *i))
            .map(|(i, _)| i);
        let Some(v) = choice else {
            return leaf(&self.dom);
        };
        for x in self.dom[v].clone() {
            let mark = (self.trail.len(), self.entailed_trail.len());
            self.set(v, vec![x]);
            if self.propagate(self.watchers[v].clone()) {
                if let Some(stop) = self.dfs(leaf) {
                    return Some(stop);
                }
            }
            self.undo(mark);
        }
        None
    }

    fn set(&mut self, v: usize, d: Vec<u32>) {
        let old = std::mem::replace(&mut self.dom[v], d);
        self.trail.push((v, old));
    }

    fn undo(&mut self, (trail, entailed): (usize, usize)) {
        while self.trail.len() > trail {
            let (v, d) = self.trail.pop().expect("trail entry");
            self.dom[v] = d;
        }
        while self.entailed_trail.len() > entailed {
            let g = self.entailed_trail.pop().expect("entailed entry");
            self.entailed[g] = false;
        }
    }

    /// Re-evaluate constraints until nothing changes; `false` on a wipe-out.
    fn propagate(&mut self, start: Vec<usize>) -> bool {
        let mut queue = Vec::new();
        for g in start {
            if !self.queued[g] {
                self.queued[g] = true;
                queue.push(g);
            }
        }
        let ok = self.drain(&mut queue);
        for g in queue {
            self.queued[g] = false;
        }
        ok
    }

    fn drain(&mut self, queue: &mut Vec<usize>) -> bool {
        while let Some(g) = queue.pop() {
            self.queued[g] = false;
            if self.entailed[g] {
                continue;
            }
            let ground = &self.p.grounds[g];
            let mut ax = Approx::new(self.p, &self.dom);
            let t = ax.ground(ground);
            if !t.t {
                return false;
            }
            if !t.f {
                self.entailed[g] = true;
                self.entailed_trail.push(g);
                continue;
            }
            let mut touched = ax.touched;
            touched.sort_unstable();
            touched.dedup();
            let total: usize = touched.iter().map(|&v| self.dom[v].len()).sum();
            if total > CHECK_LIMIT {
                continue;
            }
            for v in touched {
                let keep: Vec<u32> = self.dom[v]
                    .iter()
                    .copied()
                    .filter(|&x| {
                        let one = &self.singletons[x as usize..=x as usize];
                        Approx::new(self.p, &self.dom)
                            .with_fixed(v, one)
                            .ground(ground)
                            .t
                    })
                    .collect();
                if keep.len() == self.dom[v].len() {
                    continue;
                }
                if keep.is_empty() {
                    return false;
                }
                self.set(v, keep);
                for &w in &self.watchers[v] {
                    if !self.queued[w] && !self.entailed[w] {
                        self.queued[w] = true;
                        queue.push(w);
                    }
                }
            }
        }
        true
    }
}
