mod common;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varorder::csp::{ConstraintNetwork, SearchState};
use varorder::nn::{NetParams, NetShape};
use varorder::rbgen::{generate, Preset};
use varorder::search::action_set;

fn shape(embed: usize, rounds: usize, hidden: usize) -> NetShape {
    NetShape { embed, rounds, hidden }
}

#[test]
fn forward_matches_dense_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..6 {
        let net = common::random_network(&mut rng, 7, 4, 3, 6);
        let params = NetParams::<f64>::random(shape(5, case % 4, 16), &mut rng);
        let state = common::random_state(&net, &mut rng, 2);
        let actions: Vec<usize> = (0..net.num_vars()).collect();
        let fast = params.evaluate(&state, &actions);
        let slow = common::dense_q(&params, &state, &actions);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..3 {
        let net = common::random_network(&mut rng, 6, 4, 3, 5);
        let params = NetParams::<f64>::random(shape(4, 2, 8), &mut rng);
        let state = common::random_state(&net, &mut rng, 1);
        let mut idx: Vec<usize> = (0..params.len()).collect();
        idx.shuffle(&mut rng);
        idx.truncate(60);
        let action = rng.random_range(0..net.num_vars());
        let err = common::max_gradient_error(&params, &state, action, &idx);
        assert!(err < 1e-4, "relative error {err}");
    }
}

#[test]
fn backward_accumulates_scaled_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let net = generate(&Preset::D1.params(6).with_seed(3)).unwrap();
    let params = NetParams::<f64>::random(shape(4, 2, 8), &mut rng);
    let state = SearchState::new(&net);
    let tape = params.forward(&state);
    let mut once = vec![0.0; params.len()];
    params.backward(&tape, 1, 1.0, &mut once);
    let mut twice = vec![0.0; params.len()];
    params.backward(&tape, 1, 0.5, &mut twice);
    params.backward(&tape, 1, 1.5, &mut twice);
    for (a, b) in once.iter().zip(&twice) {
        assert!((2.0 * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }
}

/// Same instance with variables renamed by `perm` (new index `perm[v]`) and
/// constraints listed in reverse order.
fn permuted(net: &ConstraintNetwork, perm: &[usize]) -> ConstraintNetwork {
    let n = net.num_vars();
    let mut domains = vec![Vec::new(); n];
    for v in 0..n {
        domains[perm[v]] = net.labels(v).to_vec();
    }
    let constraints = net
        .constraints()
        .iter()
        .rev()
        .map(|c| {
            let scope = c.scope().iter().map(|&v| perm[v]).collect();
            let tuples = c
                .tuples()
                .map(|t| c.scope().iter().zip(t).map(|(&v, &x)| net.label(v, x as usize)).collect())
                .collect();
            (scope, tuples)
        })
        .collect();
    ConstraintNetwork::new("perm", domains, constraints).unwrap()
}

#[test]
fn q_values_are_permutation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5 {
        let net = common::random_network(&mut rng, 8, 5, 3, 7);
        let mut perm: Vec<usize> = (0..8).collect();
        perm.shuffle(&mut rng);
        let other = permuted(&net, &perm);
        let params = NetParams::<f64>::random(shape(6, 3, 12), &mut rng);
        let a = SearchState::new(&net);
        let b = SearchState::new(&other);
        let qa = params.evaluate(&a, &(0..8).collect::<Vec<_>>());
        let qb = params.evaluate(&b, &(0..8).collect::<Vec<_>>());
        for v in 0..8 {
            let (x, y) = (qa[v], qb[perm[v]]);
            assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()), "{x} vs {y}");
        }
    }
}

#[test]
fn f32_tracks_f64() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let net = generate(&Preset::D1.params(10).with_seed(4)).unwrap();
    let p64 = NetParams::<f64>::random(NetShape::new(8, 2), &mut rng);
    let p32 = p64.cast::<f32>();
    let s = SearchState::new(&net);
    let acts = action_set(&s);
    let q64 = p64.evaluate(&s, &acts);
    let q32 = p32.evaluate(&s, &acts);
    for (a, b) in q64.iter().zip(&q32) {
        assert!((a - *b as f64).abs() <= 1e-3 * (1.0 + a.abs()));
    }
}
