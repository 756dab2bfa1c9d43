use crate::csp::SearchState;

use super::Scalar;

/// Features per variable: current domain size and bound indicator.
pub const VAR_FEATURES: usize = 2;
/// Features per constraint: unbound variables in scope and current
/// tightness.
pub const CON_FEATURES: usize = 2;

/// Raw node features of a search state, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFeatures<T> {
    /// `n x VAR_FEATURES`.
    pub vars: Vec<T>,
    /// `e x CON_FEATURES`.
    pub cons: Vec<T>,
}

impl<T: Scalar> RawFeatures<T> {
    pub fn var(&self, i: usize) -> &[T] {
        &self.vars[i * VAR_FEATURES..(i + 1) * VAR_FEATURES]
    }

    pub fn con(&self, j: usize) -> &[T] {
        &self.cons[j * CON_FEATURES..(j + 1) * CON_FEATURES]
    }
}

/// Tightness `1 - live / prod |d(x)|`; 1 when the product is zero.
pub fn tightness(live: usize, space: u64) -> f64 {
    if space == 0 {
        1.0
    } else {
        1.0 - live as f64 / space as f64
    }
}

pub fn extract_features<T: Scalar>(state: &SearchState<'_>) -> RawFeatures<T> {
    let net = state.network();
    let mut vars = Vec::with_capacity(net.num_vars() * VAR_FEATURES);
    for v in 0..net.num_vars() {
        let size = state.domain_size(v);
        vars.push(T::from_usize(size).unwrap());
        vars.push(if size == 1 { T::one() } else { T::zero() });
    }
    let mut cons = Vec::with_capacity(net.num_constraints() * CON_FEATURES);
    for (j, c) in net.constraints().iter().enumerate() {
        let unbound = c.scope().iter().filter(|&&v| state.domain_size(v) > 1).count();
        let space: u64 = c.scope().iter().map(|&v| state.domain_size(v) as u64).product();
        cons.push(T::from_usize(unbound).unwrap());
        cons.push(T::from_f64_lossy(tightness(state.live_count(j), space)));
    }
    RawFeatures { vars, cons }
}
