//! Hand-crafted variable ordering baselines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csp::SearchState;
use crate::search::OrderingPolicy;

/// Smallest current domain first; ties to the smallest index.
#[derive(Debug, Clone, Copy, Default)]
pub struct MinDom;

pub fn min_dom(state: &SearchState<'_>, actions: &[usize]) -> usize {
    assert!(!actions.is_empty(), "empty action set");
    *actions
        .iter()
        .min_by_key(|&&v| (state.domain_size(v), v))
        .unwrap()
}

impl OrderingPolicy for MinDom {
    fn choose_variable(&mut self, state: &SearchState<'_>, actions: &[usize]) -> usize {
        min_dom(state, actions)
    }
}

/// Constraints on `var` that still involve some other unbound variable.
pub fn dynamic_degree(state: &SearchState<'_>, var: usize) -> usize {
    let net = state.network();
    net.constraints_of(var)
        .iter()
        .filter(|&&j| {
            net.constraint(j)
                .scope()
                .iter()
                .any(|&u| u != var && !state.is_bound(u))
        })
        .count()
}

/// Smallest `|d(x)| / Ddeg(x)`, with a zero degree scoring as infinity;
/// ties to the smallest index.
#[derive(Debug, Clone, Copy, Default)]
pub struct DomDdeg;

pub fn dom_ddeg(state: &SearchState<'_>, actions: &[usize]) -> usize {
    assert!(!actions.is_empty(), "empty action set");
    let mut best = actions[0];
    let mut best_score = (state.domain_size(best), dynamic_degree(state, best));
    for &v in &actions[1..] {
        let score = (state.domain_size(v), dynamic_degree(state, v));
        if ratio_less(score, best_score) {
            best = v;
            best_score = score;
        }
    }
    best
}

/// `a.0 / a.1 < b.0 / b.1` with `x / 0 = +inf`, compared exactly.
fn ratio_less(a: (usize, usize), b: (usize, usize)) -> bool {
    match (a.1, b.1) {
        (0, _) => false,
        (_, 0) => true,
        (da, db) => a.0 * db < b.0 * da,
    }
}

impl OrderingPolicy for DomDdeg {
    fn choose_variable(&mut self, state: &SearchState<'_>, actions: &[usize]) -> usize {
        dom_ddeg(state, actions)
    }
}

/// Running impact averages per (variable, value).
#[derive(Debug, Clone, Default)]
pub struct ImpactStore {
    avg: Vec<Vec<f64>>,
    count: Vec<Vec<u32>>,
}

impl ImpactStore {
    pub fn new(domain_sizes: impl IntoIterator<Item = usize>) -> Self {
        let (avg, count) = domain_sizes
            .into_iter()
            .map(|d| (vec![0.0; d], vec![0; d]))
            .unzip();
        Self { avg, count }
    }

    /// `1 - D_after / D_before` from log search-space sizes; a wipeout
    /// (`after = None`) has impact 1.
    pub fn impact(before: f64, after: Option<f64>) -> f64 {
        match after {
            None => 1.0,
            Some(after) => (1.0 - (after - before).exp()).clamp(0.0, 1.0),
        }
    }

    pub fn record(&mut self, var: usize, value: usize, impact: f64) {
        let c = &mut self.count[var][value];
        *c += 1;
        let a = &mut self.avg[var][value];
        *a += (impact - *a) / f64::from(*c);
    }

    pub fn average(&self, var: usize, value: usize) -> f64 {
        self.avg[var][value]
    }

    pub fn observations(&self, var: usize, value: usize) -> u32 {
        self.count[var][value]
    }

    /// Sum of averaged impacts over the current domain of `var`.
    pub fn variable_impact(&self, state: &SearchState<'_>, var: usize) -> f64 {
        state.values(var).map(|v| self.avg[var][v]).sum()
    }
}

/// Impact-based search: largest summed impact variable, smallest impact
/// value. Impacts are seeded by probing every value at the root and then
/// refined with every assignment the search makes.
#[derive(Debug, Clone, Default)]
pub struct Impact {
    store: ImpactStore,
}

impl Impact {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn store(&self) -> &ImpactStore {
        &self.store
    }

    /// Trial-assigns every value of every unbound variable and records its
    /// impact, leaving the state unchanged.
    pub fn probe(&mut self, state: &mut SearchState<'_>) {
        let net = state.network();
        self.store = ImpactStore::new((0..net.num_vars()).map(|v| net.domain_size(v)));
        let before = state.log_search_space().expect("probing a failed state");
        let level = state.level();
        for var in 0..state.num_vars() {
            if state.is_bound(var) {
                continue;
            }
            let values: Vec<usize> = state.values(var).collect();
            for value in values {
                let after = if state.assign(var, value).is_consistent() {
                    state.log_search_space()
                } else {
                    None
                };
                state.undo_to_level(level);
                self.store.record(var, value, ImpactStore::impact(before, after));
            }
        }
    }
}

impl OrderingPolicy for Impact {
    fn choose_variable(&mut self, state: &SearchState<'_>, actions: &[usize]) -> usize {
        assert!(!actions.is_empty(), "empty action set");
        let mut best = actions[0];
        let mut best_score = self.store.variable_impact(state, best);
        for &v in &actions[1..] {
            let score = self.store.variable_impact(state, v);
            if score > best_score {
                best = v;
                best_score = score;
            }
        }
        best
    }

    fn choose_value(&mut self, state: &SearchState<'_>, var: usize) -> usize {
        state
            .values(var)
            .fold(None, |best: Option<(usize, f64)>, v| {
                let a = self.store.average(var, v);
                match best {
                    Some((_, b)) if b <= a => best,
                    _ => Some((v, a)),
                }
            })
            .expect("empty domain")
            .0
    }

    fn on_root(&mut self, state: &mut SearchState<'_>) {
        self.probe(state);
    }

    fn observes_assignments(&self) -> bool {
        true
    }

    fn observe_assignment(&mut self, var: usize, value: usize, before: f64, after: Option<f64>) {
        self.store.record(var, value, ImpactStore::impact(before, after));
    }
}

/// Uniformly random variable choice.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

pub fn random_choice<R: Rng + ?Sized>(actions: &[usize], rng: &mut R) -> usize {
    assert!(!actions.is_empty(), "empty action set");
    actions[rng.random_range(0..actions.len())]
}

impl OrderingPolicy for RandomPolicy {
    fn choose_variable(&mut self, _state: &SearchState<'_>, actions: &[usize]) -> usize {
        random_choice(actions, &mut self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::ConstraintNetwork;

    fn free_vars(sizes: &[i64]) -> ConstraintNetwork {
        let doms = sizes.iter().map(|&k| (0..k).collect()).collect();
        ConstraintNetwork::new("f", doms, vec![]).unwrap()
    }

    #[test]
    fn min_dom_picks_smallest() {
        let net = free_vars(&[3, 2, 5]);
        let s = SearchState::new(&net);
        assert_eq!(min_dom(&s, &[0, 1, 2]), 1);
        let net = free_vars(&[4, 4, 4]);
        assert_eq!(min_dom(&SearchState::new(&net), &[0, 1, 2]), 0);
    }

    #[test]
    fn ddeg_counts_constraints_with_other_unbound_vars() {
        // x (4 values) shares constraints with y and z; w only meets bound b.
        let full = |a: i64, b: i64| -> Vec<Vec<i64>> { (0..a).flat_map(|i| (0..b).map(move |j| vec![i, j])).collect() };
        let net = ConstraintNetwork::new(
            "d",
            vec![(0..4).collect(), vec![0, 1], vec![0, 1], vec![0, 1], vec![0]],
            vec![
                (vec![0, 1], full(4, 2)),
                (vec![0, 2], full(4, 2)),
                (vec![3, 4], full(2, 1)),
            ],
        )
        .unwrap();
        let s = SearchState::new(&net);
        assert_eq!(dynamic_degree(&s, 0), 2);
        assert_eq!(dynamic_degree(&s, 3), 0);
        // Scores: x 4/2 = 2, y 2/1, z 2/1, w inf. Tie at 2 goes to x.
        assert_eq!(dom_ddeg(&s, &[0, 1, 2, 3]), 0);
        assert_eq!(dom_ddeg(&s, &[3, 1]), 1);
        assert_eq!(dom_ddeg(&s, &[3]), 3);
    }

    #[test]
    fn ratio_comparison() {
        assert!(ratio_less((1, 1), (3, 2)));
        assert!(!ratio_less((4, 2), (2, 1)));
        assert!(ratio_less((9, 1), (1, 0)));
        assert!(!ratio_less((1, 0), (1, 0)));
    }

    #[test]
    fn wipeout_has_full_impact() {
        assert_eq!(ImpactStore::impact(3.0, None), 1.0);
        assert_eq!(ImpactStore::impact(3.0, Some(3.0)), 0.0);
        assert!((ImpactStore::impact(2f64.ln(), Some(0.0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn running_average() {
        let mut st = ImpactStore::new([2]);
        st.record(0, 1, 1.0);
        st.record(0, 1, 0.0);
        st.record(0, 1, 0.5);
        assert!((st.average(0, 1) - 0.5).abs() < 1e-15);
        assert_eq!(st.observations(0, 1), 3);
    }

    #[test]
    fn random_policy_is_reproducible() {
        let net = free_vars(&[2; 5]);
        let s = SearchState::new(&net);
        let acts = [0, 1, 2, 3, 4];
        let draw = |seed| {
            let mut p = RandomPolicy::new(seed);
            (0..20).map(|_| p.choose_variable(&s, &acts)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_eq!(RandomPolicy::new(1).choose_variable(&s, &[3]), 3);
    }
}
