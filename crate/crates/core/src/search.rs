//! Depth-first backtracking search with 2-way branching.
//!
//! Every decision node asks the ordering policy once, on its first visit,
//! for a variable and a value. The left child posts `x = v`; the right child,
//! created only when the search backtracks into the node, posts `x != v`
//! and records the same action. A successful right child is a fresh node and
//! queries the policy again.
//!
//! The root counts as node 1 and every created child adds one node and
//! emits one [`Transition`].

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use crate::csp::{ConstraintNetwork, Propagation, SearchState};

/// Chooses the branching variable (and value) at fresh decision nodes.
pub trait OrderingPolicy {
    /// Picks a member of `actions`, the unbound variables in ascending order.
    fn choose_variable(&mut self, state: &SearchState<'_>, actions: &[usize]) -> usize;

    /// Picks a value index in the current domain of `var`.
    fn choose_value(&mut self, state: &SearchState<'_>, var: usize) -> usize {
        lexicographic_value(state, var)
    }

    /// Called once after root propagation succeeds and before the first
    /// decision. The state must be returned at the same level and domains.
    fn on_root(&mut self, _state: &mut SearchState<'_>) {}

    /// Whether [`OrderingPolicy::observe_assignment`] should be fed.
    fn observes_assignments(&self) -> bool {
        false
    }

    /// Search-space sizes (natural log of the product of domain sizes)
    /// around a left-branch assignment; `after` is `None` on a wipeout.
    fn observe_assignment(&mut self, _var: usize, _value: usize, _before: f64, _after: Option<f64>) {}
}

impl<P: OrderingPolicy + ?Sized> OrderingPolicy for &mut P {
    fn choose_variable(&mut self, state: &SearchState<'_>, actions: &[usize]) -> usize {
        (**self).choose_variable(state, actions)
    }
    fn choose_value(&mut self, state: &SearchState<'_>, var: usize) -> usize {
        (**self).choose_value(state, var)
    }
    fn on_root(&mut self, state: &mut SearchState<'_>) {
        (**self).on_root(state)
    }
    fn observes_assignments(&self) -> bool {
        (**self).observes_assignments()
    }
    fn observe_assignment(&mut self, var: usize, value: usize, before: f64, after: Option<f64>) {
        (**self).observe_assignment(var, value, before, after)
    }
}

impl<P: OrderingPolicy + ?Sized> OrderingPolicy for Box<P> {
    fn choose_variable(&mut self, state: &SearchState<'_>, actions: &[usize]) -> usize {
        (**self).choose_variable(state, actions)
    }
    fn choose_value(&mut self, state: &SearchState<'_>, var: usize) -> usize {
        (**self).choose_value(state, var)
    }
    fn on_root(&mut self, state: &mut SearchState<'_>) {
        (**self).on_root(state)
    }
    fn observes_assignments(&self) -> bool {
        (**self).observes_assignments()
    }
    fn observe_assignment(&mut self, var: usize, value: usize, before: f64, after: Option<f64>) {
        (**self).observe_assignment(var, value, before, after)
    }
}

/// Unbound variables (`|d(x)| > 1`) in ascending index order.
pub fn action_set(state: &SearchState<'_>) -> Vec<usize> {
    (0..state.num_vars())
        .filter(|&v| state.domain_size(v) > 1)
        .collect()
}

/// Smallest remaining value index of `var`.
pub fn lexicographic_value(state: &SearchState<'_>, var: usize) -> usize {
    let mask = state.mask(var);
    assert!(mask != 0, "empty domain");
    mask.trailing_zeros() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Sat,
    Unsat,
    Cutoff,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Sat => "sat",
            Outcome::Unsat => "unsat",
            Outcome::Cutoff => "cutoff",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub node_cutoff: u64,
    pub step_cutoff: Option<u64>,
}

impl SearchLimits {
    pub const DEFAULT_NODE_CUTOFF: u64 = 500_000;

    pub fn nodes(node_cutoff: u64) -> Self {
        Self { node_cutoff, step_cutoff: None }
    }
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self::nodes(Self::DEFAULT_NODE_CUTOFF)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchStats {
    pub nodes: u64,
    pub failures: u64,
    pub outcome: Outcome,
    pub steps: u64,
    /// Wall time spent inside the ordering policy.
    pub inference_seconds: f64,
    pub total_seconds: f64,
}

/// Domain masks of one search node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Snapshot(pub Vec<u64>);

impl Snapshot {
    /// FNV-1a over the masks.
    pub fn hash64(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for m in &self.0 {
            for b in m.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// One parent-to-child edge of the search tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub instance_id: Arc<str>,
    pub parent: Snapshot,
    pub action: usize,
    pub value: usize,
    /// Left branch (`x = v`) or right branch (`x != v`).
    pub left: bool,
    pub child: Snapshot,
    pub reward: f64,
    /// The child is a leaf: a dead-end or a solution.
    pub terminal: bool,
    /// The child is a dead-end.
    pub failed: bool,
}

impl Transition {
    pub fn trace_line(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "T {:016x} {} {:016x} {}",
            self.parent.hash64(),
            self.action,
            self.child.hash64(),
            u8::from(self.terminal)
        )
        .unwrap();
        s
    }
}

#[derive(Debug)]
struct Frame {
    var: usize,
    value: usize,
    level: usize,
    parent: Vec<u64>,
    right_done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Start,
    Fresh,
    Backtrack,
    Done(Outcome),
}

/// Result of advancing a [`Search`] by one child creation.
#[derive(Debug)]
pub enum Step {
    Child(Transition),
    Done(Outcome),
}

/// A resumable search over one instance. Each [`Search::step`] creates at
/// most one child node.
pub struct Search<'a> {
    state: SearchState<'a>,
    limits: SearchLimits,
    stack: Vec<Frame>,
    phase: Phase,
    nodes: u64,
    failures: u64,
    steps: u64,
    inference: f64,
    started: Instant,
    elapsed: Option<f64>,
    solution: Option<Vec<usize>>,
    id: Arc<str>,
}

impl<'a> Search<'a> {
    pub fn new(net: &'a ConstraintNetwork, limits: SearchLimits) -> Self {
        assert!(limits.node_cutoff >= 1, "node cutoff must be positive");
        assert!(limits.step_cutoff != Some(0), "step cutoff must be positive");
        Self {
            state: SearchState::new(net),
            limits,
            stack: Vec::new(),
            phase: Phase::Start,
            nodes: 0,
            failures: 0,
            steps: 0,
            inference: 0.0,
            started: Instant::now(),
            elapsed: None,
            solution: None,
            id: Arc::from(net.id()),
        }
    }

    pub fn state(&self) -> &SearchState<'a> {
        &self.state
    }

    /// Value indices of the solution, once one is found.
    pub fn solution(&self) -> Option<&[usize]> {
        self.solution.as_deref()
    }

    pub fn is_done(&self) -> bool {
        matches!(self.phase, Phase::Done(_))
    }

    pub fn stats(&self) -> SearchStats {
        let outcome = match self.phase {
            Phase::Done(o) => o,
            _ => Outcome::Cutoff,
        };
        SearchStats {
            nodes: self.nodes,
            failures: self.failures,
            outcome,
            steps: self.steps,
            inference_seconds: self.inference,
            total_seconds: self.elapsed.unwrap_or_else(|| self.started.elapsed().as_secs_f64()),
        }
    }

    fn finish(&mut self, outcome: Outcome) -> Step {
        self.phase = Phase::Done(outcome);
        self.elapsed = Some(self.started.elapsed().as_secs_f64());
        Step::Done(outcome)
    }

    fn cutoff_reached(&self) -> bool {
        self.nodes >= self.limits.node_cutoff
            || self.limits.step_cutoff.is_some_and(|t| self.steps >= t)
    }

    pub fn step(&mut self, policy: &mut dyn OrderingPolicy) -> Step {
        loop {
            match self.phase {
                Phase::Done(outcome) => return Step::Done(outcome),
                Phase::Start => {
                    self.started = Instant::now();
                    self.nodes = 1;
                    let all = 0..self.state.network().num_constraints();
                    if let Propagation::Failure(_) = self.state.propagate(all) {
                        self.failures = 1;
                        return self.finish(Outcome::Unsat);
                    }
                    if self.all_bound() {
                        return self.settle_leaf();
                    }
                    let t0 = Instant::now();
                    policy.on_root(&mut self.state);
                    self.inference += t0.elapsed().as_secs_f64();
                    self.phase = Phase::Fresh;
                }
                Phase::Fresh => {
                    if self.cutoff_reached() {
                        return self.finish(Outcome::Cutoff);
                    }
                    let actions = action_set(&self.state);
                    let t0 = Instant::now();
                    let var = policy.choose_variable(&self.state, &actions);
                    let value = policy.choose_value(&self.state, var);
                    self.inference += t0.elapsed().as_secs_f64();
                    assert!(actions.binary_search(&var).is_ok(), "policy chose a bound variable");
                    assert!(self.state.contains(var, value), "policy chose a missing value");
                    self.stack.push(Frame {
                        var,
                        value,
                        level: self.state.level(),
                        parent: self.state.masks().to_vec(),
                        right_done: false,
                    });
                    return self.branch(policy, true);
                }
                Phase::Backtrack => {
                    while self.stack.last().is_some_and(|f| f.right_done) {
                        let frame = self.stack.pop().unwrap();
                        self.state.undo_to_level(frame.level);
                    }
                    let Some(top) = self.stack.last() else {
                        return self.finish(Outcome::Unsat);
                    };
                    self.state.undo_to_level(top.level);
                    if self.cutoff_reached() {
                        return self.finish(Outcome::Cutoff);
                    }
                    self.stack.last_mut().unwrap().right_done = true;
                    return self.branch(policy, false);
                }
            }
        }
    }

    fn all_bound(&self) -> bool {
        self.state.masks().iter().all(|m| m.count_ones() == 1)
    }

    fn settle_leaf(&mut self) -> Step {
        if self.state.is_solution() {
            self.solution = self.state.assignment();
            self.finish(Outcome::Sat)
        } else {
            self.failures += 1;
            self.finish(Outcome::Unsat)
        }
    }

    fn branch(&mut self, policy: &mut dyn OrderingPolicy, left: bool) -> Step {
        let frame = self.stack.last().unwrap();
        let (var, value) = (frame.var, frame.value);
        let parent = Snapshot(frame.parent.clone());
        let result = if left {
            let observe = policy.observes_assignments();
            let before = observe.then(|| self.state.log_search_space().unwrap_or(0.0));
            let r = self.state.assign(var, value);
            if let Some(before) = before {
                let after = if r.is_consistent() { self.state.log_search_space() } else { None };
                policy.observe_assignment(var, value, before, after);
            }
            r
        } else {
            self.state.refute(var, value)
        };
        self.nodes += 1;
        self.steps += 1;
        let (terminal, failed) = match result {
            Propagation::Failure(_) => (true, true),
            Propagation::Consistent if self.all_bound() => (true, !self.state.is_solution()),
            Propagation::Consistent => (false, false),
        };
        if failed {
            self.failures += 1;
            self.phase = Phase::Backtrack;
        } else if terminal {
            self.solution = self.state.assignment();
            self.phase = Phase::Done(Outcome::Sat);
            self.elapsed = Some(self.started.elapsed().as_secs_f64());
        } else {
            self.phase = Phase::Fresh;
        }
        Step::Child(Transition {
            instance_id: self.id.clone(),
            parent,
            action: var,
            value,
            left,
            child: Snapshot(self.state.masks().to_vec()),
            reward: 1.0,
            terminal,
            failed,
        })
    }
}

/// Statistics and solution of a completed search.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub stats: SearchStats,
    /// Value indices per variable when the outcome is `Sat`.
    pub solution: Option<Vec<usize>>,
}

/// Runs a search to completion, handing every transition to `sink`.
pub fn solve(
    net: &ConstraintNetwork,
    policy: &mut dyn OrderingPolicy,
    limits: SearchLimits,
    mut sink: Option<&mut dyn FnMut(&Transition)>,
) -> SolveResult {
    let mut search = Search::new(net, limits);
    loop {
        match search.step(policy) {
            Step::Child(t) => {
                if let Some(sink) = sink.as_mut() {
                    sink(&t);
                }
            }
            Step::Done(_) => break,
        }
    }
    SolveResult {
        stats: search.stats(),
        solution: search.solution,
    }
}
