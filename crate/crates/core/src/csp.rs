//! Constraint networks over table constraints and the trailed search state
//! that propagates generalized arc consistency on them.

use std::collections::VecDeque;

use thiserror::Error;

/// Domains are bit-masks over value indices, so a variable has at most this
/// many values.
pub const MAX_DOMAIN: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetworkError {
    #[error("variable {0} has an empty domain")]
    EmptyDomain(usize),
    #[error("variable {var} has {size} values, more than the supported {MAX_DOMAIN}")]
    DomainTooLarge { var: usize, size: usize },
    #[error("variable {0} lists a value twice")]
    DuplicateValue(usize),
    #[error("constraint {0} has arity below 2")]
    ArityTooSmall(usize),
    #[error("constraint {con} references variable {var}, which does not exist")]
    UnknownVariable { con: usize, var: usize },
    #[error("constraint {con} mentions variable {var} more than once")]
    RepeatedScopeVariable { con: usize, var: usize },
    #[error("constraint {con} has a tuple of length {len}, expected {arity}")]
    TupleArity { con: usize, len: usize, arity: usize },
    #[error("constraint {con} allows value {value} outside the domain of variable {var}")]
    ValueOutOfDomain { con: usize, var: usize, value: i64 },
    #[error("constraint {0} lists the same tuple twice")]
    DuplicateTuple(usize),
}

/// A table constraint. Tuples are stored flat, `arity` value indices each,
/// sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    scope: Vec<usize>,
    tuples: Vec<u8>,
}

impl Constraint {
    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn arity(&self) -> usize {
        self.scope.len()
    }

    pub fn tuple_count(&self) -> usize {
        self.tuples.len() / self.scope.len()
    }

    pub fn tuples(&self) -> impl ExactSizeIterator<Item = &[u8]> + '_ {
        self.tuples.chunks_exact(self.scope.len())
    }

    pub fn allows(&self, tuple: &[u8]) -> bool {
        self.tuples().any(|t| t == tuple)
    }
}

/// Immutable CSP instance `<X, D, C>` with values normalized to indices
/// `0..|d(x)|` in ascending order of their original labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintNetwork {
    id: String,
    labels: Vec<Vec<i64>>,
    constraints: Vec<Constraint>,
    var_constraints: Vec<Vec<usize>>,
}

impl ConstraintNetwork {
    /// Builds a network from domain labels and constraints expressed with
    /// those labels.
    pub fn new(
        id: impl Into<String>,
        domains: Vec<Vec<i64>>,
        constraints: Vec<(Vec<usize>, Vec<Vec<i64>>)>,
    ) -> Result<Self, NetworkError> {
        let mut labels = domains;
        for (var, dom) in labels.iter_mut().enumerate() {
            if dom.is_empty() {
                return Err(NetworkError::EmptyDomain(var));
            }
            if dom.len() > MAX_DOMAIN {
                return Err(NetworkError::DomainTooLarge { var, size: dom.len() });
            }
            dom.sort_unstable();
            if dom.windows(2).any(|w| w[0] == w[1]) {
                return Err(NetworkError::DuplicateValue(var));
            }
        }
        let n = labels.len();
        let mut built = Vec::with_capacity(constraints.len());
        for (con, (scope, tuples)) in constraints.into_iter().enumerate() {
            if scope.len() < 2 {
                return Err(NetworkError::ArityTooSmall(con));
            }
            for (k, &var) in scope.iter().enumerate() {
                if var >= n {
                    return Err(NetworkError::UnknownVariable { con, var });
                }
                if scope[..k].contains(&var) {
                    return Err(NetworkError::RepeatedScopeVariable { con, var });
                }
            }
            let mut rows = Vec::with_capacity(tuples.len());
            for tuple in &tuples {
                if tuple.len() != scope.len() {
                    return Err(NetworkError::TupleArity {
                        con,
                        len: tuple.len(),
                        arity: scope.len(),
                    });
                }
                let mut row = Vec::with_capacity(scope.len());
                for (&var, &value) in scope.iter().zip(tuple) {
                    match labels[var].binary_search(&value) {
                        Ok(idx) => row.push(idx as u8),
                        Err(_) => return Err(NetworkError::ValueOutOfDomain { con, var, value }),
                    }
                }
                rows.push(row);
            }
            rows.sort_unstable();
            if rows.windows(2).any(|w| w[0] == w[1]) {
                return Err(NetworkError::DuplicateTuple(con));
            }
            built.push(Constraint {
                scope,
                tuples: rows.concat(),
            });
        }
        Ok(Self::assemble(id.into(), labels, built))
    }

    /// Builds a network whose domains are `0..size` and whose tuples are
    /// already value indices. Used by the generator, which guarantees the
    /// invariants by construction; they are still checked in debug builds.
    pub(crate) fn from_indices(
        id: String,
        domain_sizes: &[usize],
        constraints: Vec<(Vec<usize>, Vec<u8>)>,
    ) -> Self {
        let labels = domain_sizes
            .iter()
            .map(|&d| (0..d as i64).collect())
            .collect();
        let built = constraints
            .into_iter()
            .map(|(scope, tuples)| {
                debug_assert!(scope.len() >= 2);
                debug_assert!(tuples.chunks_exact(scope.len()).is_sorted());
                Constraint { scope, tuples }
            })
            .collect();
        Self::assemble(id, labels, built)
    }

    fn assemble(id: String, labels: Vec<Vec<i64>>, constraints: Vec<Constraint>) -> Self {
        let mut var_constraints = vec![Vec::new(); labels.len()];
        for (j, c) in constraints.iter().enumerate() {
            for &v in &c.scope {
                var_constraints[v].push(j);
            }
        }
        Self {
            id,
            labels,
            constraints,
            var_constraints,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn set_id(&mut self, id: impl Into<String>) {
        self.id = id.into();
    }

    pub fn num_vars(&self) -> usize {
        self.labels.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn domain_size(&self, var: usize) -> usize {
        self.labels[var].len()
    }

    /// Original label of value index `value` of `var`.
    pub fn label(&self, var: usize, value: usize) -> i64 {
        self.labels[var][value]
    }

    pub fn labels(&self, var: usize) -> &[i64] {
        &self.labels[var]
    }

    pub fn initial_mask(&self, var: usize) -> u64 {
        full_mask(self.labels[var].len())
    }

    pub fn constraint(&self, j: usize) -> &Constraint {
        &self.constraints[j]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Indices of the constraints whose scope contains `var`, ascending.
    pub fn constraints_of(&self, var: usize) -> &[usize] {
        &self.var_constraints[var]
    }
}

fn full_mask(size: usize) -> u64 {
    if size == 64 {
        u64::MAX
    } else {
        (1u64 << size) - 1
    }
}

/// Outcome of constraint propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagation {
    Consistent,
    /// The domain of this variable became empty.
    Failure(usize),
}

impl Propagation {
    pub fn is_consistent(self) -> bool {
        matches!(self, Propagation::Consistent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TrailEntry {
    Domain { var: usize, removed: u64 },
    Live { con: usize, old: u32 },
}

/// Mutable subinstance explored by the search: current domains, live tuple
/// counts and the trail that undoes both.
#[derive(Debug, Clone)]
pub struct SearchState<'a> {
    net: &'a ConstraintNetwork,
    domains: Vec<u64>,
    live: Vec<u32>,
    trail: Vec<TrailEntry>,
    levels: Vec<usize>,
    queue: VecDeque<usize>,
    queued: Vec<bool>,
}

impl<'a> SearchState<'a> {
    pub fn new(net: &'a ConstraintNetwork) -> Self {
        let domains = (0..net.num_vars()).map(|v| net.initial_mask(v)).collect();
        let live = net
            .constraints()
            .iter()
            .map(|c| c.tuple_count() as u32)
            .collect();
        Self {
            net,
            domains,
            live,
            trail: Vec::new(),
            levels: Vec::new(),
            queue: VecDeque::new(),
            queued: vec![false; net.num_constraints()],
        }
    }

    /// Rebuilds a state from stored domain masks, recounting live tuples.
    /// The trail starts empty.
    pub fn from_masks(net: &'a ConstraintNetwork, masks: &[u64]) -> Self {
        assert_eq!(masks.len(), net.num_vars(), "snapshot size mismatch");
        let mut state = Self::new(net);
        for (v, &m) in masks.iter().enumerate() {
            debug_assert_eq!(m & !net.initial_mask(v), 0);
            state.domains[v] = m;
        }
        for j in 0..net.num_constraints() {
            state.live[j] = state.count_live(j);
        }
        state
    }

    pub fn network(&self) -> &'a ConstraintNetwork {
        self.net
    }

    pub fn num_vars(&self) -> usize {
        self.domains.len()
    }

    pub fn masks(&self) -> &[u64] {
        &self.domains
    }

    pub fn mask(&self, var: usize) -> u64 {
        self.domains[var]
    }

    pub fn domain_size(&self, var: usize) -> usize {
        self.domains[var].count_ones() as usize
    }

    pub fn contains(&self, var: usize, value: usize) -> bool {
        value < MAX_DOMAIN && self.domains[var] >> value & 1 == 1
    }

    /// Remaining value indices of `var`, ascending.
    pub fn values(&self, var: usize) -> impl Iterator<Item = usize> {
        BitIter(self.domains[var])
    }

    pub fn is_bound(&self, var: usize) -> bool {
        self.domains[var].count_ones() == 1
    }

    pub fn live_count(&self, con: usize) -> usize {
        self.live[con] as usize
    }

    pub fn live_counts(&self) -> &[u32] {
        &self.live
    }

    /// From-scratch count of the tuples of `con` surviving current domains.
    pub fn count_live(&self, con: usize) -> u32 {
        let c = self.net.constraint(con);
        c.tuples()
            .filter(|t| self.tuple_alive(c.scope(), t))
            .count() as u32
    }

    fn tuple_alive(&self, scope: &[usize], tuple: &[u8]) -> bool {
        scope
            .iter()
            .zip(tuple)
            .all(|(&v, &val)| self.domains[v] >> val & 1 == 1)
    }

    /// Current decision level (number of open levels on the trail).
    pub fn level(&self) -> usize {
        self.levels.len()
    }

    /// Depth of the search node this state represents.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn push_level(&mut self) {
        self.levels.push(self.trail.len());
    }

    /// Restores every change recorded above `level`.
    pub fn undo_to_level(&mut self, level: usize) {
        assert!(level <= self.levels.len(), "cannot undo to a deeper level");
        if level == self.levels.len() {
            return;
        }
        let mark = self.levels[level];
        while self.trail.len() > mark {
            match self.trail.pop().unwrap() {
                TrailEntry::Domain { var, removed } => self.domains[var] |= removed,
                TrailEntry::Live { con, old } => self.live[con] = old,
            }
        }
        self.levels.truncate(level);
    }

    /// Removes `removed` from the domain of `var`, recording it on the trail.
    fn remove_values(&mut self, var: usize, removed: u64) {
        debug_assert_eq!(removed & !self.domains[var], 0);
        if removed != 0 {
            self.domains[var] &= !removed;
            self.trail.push(TrailEntry::Domain { var, removed });
        }
    }

    fn set_live(&mut self, con: usize, count: u32) {
        let old = self.live[con];
        if old != count {
            self.trail.push(TrailEntry::Live { con, old });
            self.live[con] = count;
        }
    }

    /// Posts `var = value` on a new level and propagates.
    pub fn assign(&mut self, var: usize, value: usize) -> Propagation {
        assert!(self.contains(var, value), "assigning a value outside the domain");
        self.push_level();
        let removed = self.domains[var] & !(1u64 << value);
        if removed == 0 {
            return Propagation::Consistent;
        }
        self.remove_values(var, removed);
        self.propagate_from_var(var)
    }

    /// Posts `var != value` on a new level and propagates.
    pub fn refute(&mut self, var: usize, value: usize) -> Propagation {
        assert!(self.contains(var, value), "refuting a value outside the domain");
        self.push_level();
        self.remove_values(var, 1u64 << value);
        if self.domains[var] == 0 {
            return Propagation::Failure(var);
        }
        self.propagate_from_var(var)
    }

    fn propagate_from_var(&mut self, var: usize) -> Propagation {
        let net = self.net;
        self.propagate(net.constraints_of(var).iter().copied())
    }

    /// Runs GAC to a fixpoint starting from the given constraints.
    ///
    /// Supports are found by scanning each table against the domain masks.
    /// A constraint is revisited whenever the domain of one of its other
    /// variables shrinks; its live count is refreshed on every visit.
    pub fn propagate(&mut self, seeds: impl IntoIterator<Item = usize>) -> Propagation {
        let net = self.net;
        for j in seeds {
            if !self.queued[j] {
                self.queued[j] = true;
                self.queue.push_back(j);
            }
        }
        let mut supported = [0u64; 8];
        let mut supported_vec = Vec::new();
        while let Some(j) = self.queue.pop_front() {
            self.queued[j] = false;
            let c = net.constraint(j);
            let arity = c.arity();
            let sup: &mut [u64] = if arity <= supported.len() {
                &mut supported[..arity]
            } else {
                supported_vec.resize(arity, 0);
                &mut supported_vec[..]
            };
            sup.fill(0);
            let mut live = 0u32;
            for t in c.tuples() {
                if self.tuple_alive(c.scope(), t) {
                    live += 1;
                    for (s, &val) in sup.iter_mut().zip(t) {
                        *s |= 1u64 << val;
                    }
                }
            }
            self.set_live(j, live);
            for (k, &var) in c.scope().iter().enumerate() {
                let removed = self.domains[var] & !sup[k];
                if removed == 0 {
                    continue;
                }
                self.remove_values(var, removed);
                if self.domains[var] == 0 {
                    self.clear_queue();
                    return Propagation::Failure(var);
                }
                for &other in net.constraints_of(var) {
                    if other != j && !self.queued[other] {
                        self.queued[other] = true;
                        self.queue.push_back(other);
                    }
                }
            }
        }
        Propagation::Consistent
    }

    fn clear_queue(&mut self) {
        for j in self.queue.drain(..) {
            self.queued[j] = false;
        }
    }

    /// True iff every variable is bound and every constraint allows the
    /// induced tuple. Checked against the tables directly.
    pub fn is_solution(&self) -> bool {
        if !self.domains.iter().all(|m| m.count_ones() == 1) {
            return false;
        }
        let mut tuple = Vec::new();
        self.net.constraints().iter().all(|c| {
            tuple.clear();
            tuple.extend(
                c.scope()
                    .iter()
                    .map(|&v| self.domains[v].trailing_zeros() as u8),
            );
            c.allows(&tuple)
        })
    }

    /// Value index assigned to each variable, if all are bound.
    pub fn assignment(&self) -> Option<Vec<usize>> {
        self.domains
            .iter()
            .map(|m| (m.count_ones() == 1).then(|| m.trailing_zeros() as usize))
            .collect()
    }

    pub fn has_empty_domain(&self) -> bool {
        self.domains.iter().any(|&m| m == 0)
    }

    /// Natural log of the product of current domain sizes; `None` when some
    /// domain is empty.
    pub fn log_search_space(&self) -> Option<f64> {
        let mut acc = 0.0;
        for &m in &self.domains {
            match m.count_ones() {
                0 => return None,
                1 => {}
                k => acc += (k as f64).ln(),
            }
        }
        Some(acc)
    }
}

/// Iterates the set bits of a mask, lowest first.
#[derive(Debug, Clone, Copy)]
pub struct BitIter(pub u64);

impl Iterator for BitIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let bit = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(bit)
    }
}
