use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use varorder::corpus::sample_instances;
use varorder::csp::SearchState;
use varorder::dqn::*;
use varorder::nn::{NetParams, NetShape};
use varorder::rbgen::Preset;
use varorder::search::{action_set, Search, SearchLimits, Step};

fn small_config() -> TrainConfig {
    TrainConfig {
        episodes: 3,
        t_max: 200,
        batch: 8,
        capacity: 500,
        target_sync: 2,
        val_size: 4,
        val_period: 1,
        embed: 4,
        rounds: 1,
        hidden: 8,
        n: 8,
        ..TrainConfig::default()
    }
}

#[test]
fn one_step_episode() {
    let cfg = TrainConfig { episodes: 1, t_max: 1, ..small_config() };
    let out = train::<f64>(&cfg, &mut |_| {}).unwrap();
    assert!(out.global_steps <= 1);
    assert_eq!(out.gradient_steps, 0);
    assert_eq!(out.log.len(), 1);
}

#[test]
fn no_updates_before_a_full_batch() {
    let cfg = TrainConfig { batch: 500, ..small_config() };
    let out = train::<f64>(&cfg, &mut |_| {}).unwrap();
    assert!(out.global_steps < 500);
    assert_eq!(out.gradient_steps, 0);
    assert_eq!(out.best, out.last);
}

#[test]
fn short_run_updates_and_logs() {
    let mut rows = Vec::new();
    let out = train::<f32>(&small_config(), &mut |r| rows.push(r.clone())).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.validation.is_some()));
    assert!(out.gradient_steps > 0);
    assert_eq!(out.gradient_steps, out.global_steps - 7);
    let best = rows.iter().map(|r| r.validation.unwrap().0).fold(f64::INFINITY, f64::min);
    assert_eq!(out.best_validation.mean_nodes, best);
    assert!(rows.windows(2).all(|w| w[0].epsilon >= w[1].epsilon));
}

#[test]
fn training_is_reproducible() {
    let a = train::<f64>(&small_config(), &mut |_| {}).unwrap();
    let b = train::<f64>(&small_config(), &mut |_| {}).unwrap();
    assert_eq!(a.last, b.last);
    assert_eq!(a.log, b.log.iter().map(|r| LogRow { seconds: a.log[r.episode - 1].seconds, ..r.clone() }).collect::<Vec<_>>());
}

#[test]
fn validation_properties() {
    let set = sample_instances(Preset::D1.params(10), 6, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let params = NetParams::<f64>::random(NetShape { embed: 4, rounds: 1, hidden: 8 }, &mut rng);
    let one = validate(&params, &set, 1);
    assert_eq!(one.mean_nodes, 1.0);
    let a = validate(&params, &set, 10_000);
    let b = validate(&params, &set, 10_000);
    let key = |r: &varorder::dqn::ValidationResult| r.stats.iter().map(|s| (s.nodes, s.failures, s.outcome)).collect::<Vec<_>>();
    assert_eq!(key(&a), key(&b));
    let recomputed: f64 = a.stats.iter().map(|s| s.nodes as f64).sum::<f64>() / 6.0;
    assert_eq!(a.mean_nodes, recomputed);
    let failures: f64 = a.stats.iter().map(|s| s.failures as f64).sum::<f64>() / 6.0;
    assert_eq!(a.mean_failures, failures);
}

#[test]
fn target_uses_online_argmin_and_target_values() {
    let net = std::sync::Arc::new(varorder::rbgen::generate(&Preset::D1.params(8).with_seed(5)).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let shape = NetShape { embed: 4, rounds: 2, hidden: 8 };
    let online = NetParams::<f64>::random(shape, &mut rng);
    let target = NetParams::<f64>::random(shape, &mut rng);
    let root = SearchState::new(&net);
    let masks = root.masks().to_vec();
    let exp = Experience::<f64>::new(net.clone(), masks.clone(), 0, masks.clone(), 1.0, false);
    let acts = action_set(&root);
    let qo = online.evaluate(&root, &acts);
    let qt = target.evaluate(&root, &acts);
    let best = (0..acts.len()).min_by(|&i, &j| qo[i].partial_cmp(&qo[j]).unwrap()).unwrap();
    assert_eq!(ddqn_target(&exp, &online, &target, 0.9), 1.0 + 0.9 * qt[best]);
    let term = Experience::<f64>::new(net, masks.clone(), 0, masks, 1.0, true);
    assert_eq!(ddqn_target(&term, &online, &target, 0.9), 1.0);
    assert_eq!(ddqn_target(&exp, &online, &target, 0.0), 1.0);
}

#[test]
fn truncation_does_not_mark_terminal() {
    for net in sample_instances(Preset::D1.params(12), 10, 6).unwrap() {
        let mut search = Search::new(&net, SearchLimits { node_cutoff: u64::MAX, step_cutoff: Some(5) });
        let mut policy = varorder::heuristics::MinDom;
        while let Step::Child(t) = search.step(&mut policy) {
            let child = SearchState::from_masks(&net, &t.child.0);
            let leaf = t.failed || child.masks().iter().all(|m| m.count_ones() == 1);
            assert_eq!(t.terminal, leaf);
            assert!(!t.failed || t.terminal);
        }
    }
}

proptest! {
    #[test]
    fn replay_is_fifo(capacity in 1usize..50, extra in 0usize..60) {
        let mut b = ReplayBuffer::new(capacity);
        for i in 0..capacity + extra {
            b.push(i);
        }
        let held: Vec<usize> = b.iter().copied().collect();
        prop_assert_eq!(held, (extra..capacity + extra).collect::<Vec<_>>());
    }

    #[test]
    fn batches_have_distinct_indices(len in 1usize..200, seed in any::<u64>()) {
        let mut b = ReplayBuffer::new(200);
        for i in 0..len {
            b.push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size = len.min(16);
        let mut idx = b.sample_indices(&mut rng, size).unwrap();
        idx.sort();
        idx.dedup();
        prop_assert_eq!(idx.len(), size);
    }

    #[test]
    fn epsilon_is_monotone_and_bounded(a in 0u64..100_000, b in 0u64..100_000) {
        let cfg = TrainConfig::default();
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(epsilon_at(lo, &cfg) >= epsilon_at(hi, &cfg));
        prop_assert!((0.05..=1.0).contains(&epsilon_at(a, &cfg)));
    }
}
