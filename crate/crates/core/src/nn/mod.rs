//! Value network over the constraint hypergraph.

mod adam;
mod checkpoint;
mod features;
mod net;
mod scalar;

pub use adam::{Adam, AdamConfig, OptimError};
pub use checkpoint::{
    load_checkpoint, load_checkpoint_as, parse_checkpoint, save_checkpoint, write_checkpoint, CheckpointError,
};
pub use features::{extract_features, tightness, RawFeatures, CON_FEATURES, VAR_FEATURES};
pub use net::{argmin, Layout, MlpLayout, NetParams, NetShape, Tape, DEFAULT_HIDDEN};
pub use scalar::{gemm, MatMut, MatRef, Scalar};

use crate::csp::SearchState;
use crate::heuristics::dom_ddeg;
use crate::search::OrderingPolicy;

/// Greedy policy of a trained network.
#[derive(Debug, Clone, Copy)]
pub struct DrlPolicy<'p, T> {
    params: &'p NetParams<T>,
}

impl<'p, T: Scalar> DrlPolicy<'p, T> {
    pub fn new(params: &'p NetParams<T>) -> Self {
        Self { params }
    }
}

impl<T: Scalar> OrderingPolicy for DrlPolicy<'_, T> {
    fn choose_variable(&mut self, state: &SearchState<'_>, actions: &[usize]) -> usize {
        self.params.greedy_action(state, actions)
    }
}

/// Network above depth `k`, Dom/Ddeg from depth `k` on.
#[derive(Debug, Clone, Copy)]
pub struct HybridPolicy<'p, T> {
    params: &'p NetParams<T>,
    k: usize,
}

impl<'p, T: Scalar> HybridPolicy<'p, T> {
    pub fn new(params: &'p NetParams<T>, k: usize) -> Self {
        Self { params, k }
    }
}

impl<T: Scalar> OrderingPolicy for HybridPolicy<'_, T> {
    fn choose_variable(&mut self, state: &SearchState<'_>, actions: &[usize]) -> usize {
        if state.depth() < self.k {
            self.params.greedy_action(state, actions)
        } else {
            dom_ddeg(state, actions)
        }
    }
}
