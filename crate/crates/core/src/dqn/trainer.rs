use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::sample_instances;
use crate::csp::{ConstraintNetwork, SearchState};
use crate::heuristics::{random_choice, RandomPolicy};
use crate::nn::{argmin, Adam, AdamConfig, DrlPolicy, NetParams, OptimError, Scalar};
use crate::rbgen::{generate, RbError};
use crate::search::{action_set, solve, OrderingPolicy, Search, SearchLimits, SearchStats, Snapshot, Step};

use super::config::{epsilon_at, ConfigError, TrainConfig};
use super::replay::ReplayBuffer;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Generator(#[from] RbError),
    #[error("non-finite loss at episode {episode}, gradient step {step}; batch:\n{batch}")]
    NonFiniteLoss { episode: usize, step: u64, batch: String },
    #[error(transparent)]
    Optimizer(#[from] OptimError),
}

/// One stored transition. States are kept as domain masks and rebuilt
/// against the shared instance when sampled.
#[derive(Debug, Clone)]
pub struct Experience<T> {
    pub net: Arc<ConstraintNetwork>,
    pub parent: Vec<u64>,
    pub action: usize,
    pub child: Vec<u64>,
    pub reward: f64,
    pub terminal: bool,
    /// Target-network Q-values over the child's action set, tagged with the
    /// target generation they were computed under.
    target_cache: Option<(u64, Vec<T>)>,
}

impl<T> Experience<T> {
    pub fn new(net: Arc<ConstraintNetwork>, parent: Vec<u64>, action: usize, child: Vec<u64>, reward: f64, terminal: bool) -> Self {
        Self { net, parent, action, child, reward, terminal, target_cache: None }
    }

    fn describe(&self) -> String {
        format!(
            "{} parent={:016x} action={} child={:016x} terminal={}",
            self.net.id(),
            Snapshot(self.parent.clone()).hash64(),
            self.action,
            Snapshot(self.child.clone()).hash64(),
            self.terminal
        )
    }
}

/// Double-DQN target from the two networks' Q-values over the child's
/// action set: `r` for terminal children or an empty action set, otherwise
/// `r + gamma * target_q[argmin online_q]`.
pub fn ddqn_target_from<T: Scalar>(reward: T, gamma: T, terminal: bool, online_q: &[T], target_q: &[T]) -> T {
    if terminal || online_q.is_empty() {
        return reward;
    }
    assert_eq!(online_q.len(), target_q.len(), "Q vectors differ in length");
    let positions: Vec<usize> = (0..online_q.len()).collect();
    reward + gamma * target_q[argmin(&positions, online_q)]
}

/// Double-DQN target of one experience, evaluating both networks on the
/// reconstructed child state.
pub fn ddqn_target<T: Scalar>(exp: &Experience<T>, online: &NetParams<T>, target: &NetParams<T>, gamma: T) -> T {
    let reward = T::from_f64_lossy(exp.reward);
    if exp.terminal {
        return reward;
    }
    let child = SearchState::from_masks(&exp.net, &exp.child);
    let actions = action_set(&child);
    if actions.is_empty() {
        return reward;
    }
    let online_q = online.evaluate(&child, &actions);
    let target_q = target.evaluate(&child, &actions);
    ddqn_target_from(reward, gamma, false, &online_q, &target_q)
}

/// Random variable with probability `eps`, otherwise the online greedy one.
pub struct EpsilonGreedy<'a, T, R> {
    pub params: &'a NetParams<T>,
    pub eps: f64,
    pub rng: &'a mut R,
}

impl<T: Scalar, R: Rng> OrderingPolicy for EpsilonGreedy<'_, T, R> {
    fn choose_variable(&mut self, state: &SearchState<'_>, actions: &[usize]) -> usize {
        if self.eps >= 1.0 || self.rng.random::<f64>() < self.eps {
            random_choice(actions, self.rng)
        } else {
            self.params.greedy_action(state, actions)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationResult {
    pub mean_nodes: f64,
    pub mean_failures: f64,
    pub stats: Vec<SearchStats>,
}

impl ValidationResult {
    pub fn from_stats(stats: Vec<SearchStats>) -> Self {
        let n = stats.len().max(1) as f64;
        Self {
            mean_nodes: stats.iter().map(|s| s.nodes as f64).sum::<f64>() / n,
            mean_failures: stats.iter().map(|s| s.failures as f64).sum::<f64>() / n,
            stats,
        }
    }
}

/// Solves every instance with a fresh policy from `make`; cutoff runs count
/// their cutoff node total.
pub fn run_policy<P: OrderingPolicy>(
    instances: &[ConstraintNetwork],
    node_cutoff: u64,
    mut make: impl FnMut(usize) -> P,
) -> ValidationResult {
    let stats = instances
        .iter()
        .enumerate()
        .map(|(i, net)| {
            let mut policy = make(i);
            solve(net, &mut policy, SearchLimits::nodes(node_cutoff), None).stats
        })
        .collect();
    ValidationResult::from_stats(stats)
}

/// Greedy policy of `params` on every instance.
pub fn validate<T: Scalar>(params: &NetParams<T>, instances: &[ConstraintNetwork], node_cutoff: u64) -> ValidationResult {
    run_policy(instances, node_cutoff, |_| DrlPolicy::new(params))
}

/// Uniformly random ordering, seeded per instance from `seed`.
pub fn random_baseline(instances: &[ConstraintNetwork], node_cutoff: u64, seed: u64) -> ValidationResult {
    run_policy(instances, node_cutoff, |i| RandomPolicy::new(seed.wrapping_add(i as u64)))
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub episode: usize,
    pub global_step: u64,
    pub epsilon: f64,
    /// Mean batch loss over the episode's gradient steps, if any.
    pub loss_mean: Option<f64>,
    pub validation: Option<(f64, f64)>,
    pub episode_nodes: u64,
    pub seconds: f64,
}

pub const LOG_HEADER: &str = "episode,global_step,epsilon,loss_mean,val_mean_nodes,val_mean_failures";

impl LogRow {
    pub fn csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.episode,
            self.global_step,
            self.epsilon,
            opt(self.loss_mean),
            opt(self.validation.map(|v| v.0)),
            opt(self.validation.map(|v| v.1)),
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Parameters with the best validation mean nodes.
    pub best: NetParams<T>,
    pub best_episode: usize,
    pub best_validation: ValidationResult,
    pub last: NetParams<T>,
    /// The epsilon = 1 policy on the validation set.
    pub baseline: ValidationResult,
    pub log: Vec<LogRow>,
    pub global_steps: u64,
    pub gradient_steps: u64,
}

/// Everything that changes during training.
struct Learner<T> {
    online: NetParams<T>,
    target: NetParams<T>,
    generation: u64,
    adam: Adam<T>,
    buffer: ReplayBuffer<Experience<T>>,
    grads: Vec<T>,
    batch: usize,
    gamma: T,
    rng: ChaCha8Rng,
    gradient_steps: u64,
}

impl<T: Scalar> Learner<T> {
    fn sync_target(&mut self) {
        self.target = self.online.clone();
        self.generation += 1;
    }

    /// Target for buffer slot `i`; the target network's Q-values are cached
    /// until the next sync.
    fn target_value(&mut self, i: usize) -> T {
        let exp = self.buffer.get(i);
        let reward = T::from_f64_lossy(exp.reward);
        if exp.terminal {
            return reward;
        }
        let child = SearchState::from_masks(&exp.net, &exp.child);
        let actions = action_set(&child);
        if actions.is_empty() {
            return reward;
        }
        let online_q = self.online.evaluate(&child, &actions);
        let fresh = match &exp.target_cache {
            Some((g, _)) => *g != self.generation,
            None => true,
        };
        if fresh {
            let q = self.target.evaluate(&child, &actions);
            self.buffer.get_mut(i).target_cache = Some((self.generation, q));
        }
        let cached = &self.buffer.get(i).target_cache.as_ref().unwrap().1;
        ddqn_target_from(reward, self.gamma, false, &online_q, cached)
    }

    fn gradient_step(&mut self, episode: usize) -> Result<Option<f64>, TrainError> {
        let Some(batch) = self.buffer.sample_indices(&mut self.rng, self.batch) else {
            return Ok(None);
        };
        self.grads.fill(T::zero());
        let scale = T::from_f64_lossy(2.0 / self.batch as f64);
        let mut loss = 0.0;
        for &i in &batch {
            let y = self.target_value(i);
            let exp = self.buffer.get(i);
            let parent = SearchState::from_masks(&exp.net, &exp.parent);
            let tape = self.online.forward(&parent);
            let diff = self.online.q_value(&tape, exp.action) - y;
            loss += diff.to_f64_lossy().powi(2);
            self.online.backward(&tape, exp.action, scale * diff, &mut self.grads);
        }
        loss /= self.batch as f64;
        if !loss.is_finite() {
            let dump = batch.iter().map(|&i| self.buffer.get(i).describe()).collect::<Vec<_>>().join("\n");
            return Err(TrainError::NonFiniteLoss { episode, step: self.gradient_steps, batch: dump });
        }
        self.adam.step(self.online.data_mut(), &self.grads)?;
        self.gradient_steps += 1;
        Ok(Some(loss))
    }
}

/// Seed of the validation set [`train`] draws for `cfg`.
pub fn validation_seed(cfg: &TrainConfig) -> u64 {
    ChaCha8Rng::seed_from_u64(cfg.seed).next_u64()
}

/// Trains on freshly generated instances and validates on a set drawn from
/// the same class with its own seed.
pub fn train<T: Scalar>(cfg: &TrainConfig, progress: &mut dyn FnMut(&LogRow)) -> Result<TrainOutcome<T>, TrainError> {
    cfg.validate()?;
    let validation = sample_instances(cfg.instance_class(), cfg.val_size, validation_seed(cfg))?;
    train_with(cfg, &validation, progress)
}

/// Training loop over `cfg.episodes` episodes with the given validation
/// set. Per stored transition one gradient step is taken once the buffer
/// holds a full batch; updates pause while validating.
pub fn train_with<T: Scalar>(
    cfg: &TrainConfig,
    validation: &[ConstraintNetwork],
    progress: &mut dyn FnMut(&LogRow),
) -> Result<TrainOutcome<T>, TrainError> {
    cfg.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let _val_seed = master.next_u64();
    let mut instance_rng = ChaCha8Rng::seed_from_u64(master.next_u64());
    let mut explore_rng = ChaCha8Rng::seed_from_u64(master.next_u64());
    let batch_rng = ChaCha8Rng::seed_from_u64(master.next_u64());
    let mut init_rng = ChaCha8Rng::seed_from_u64(master.next_u64());
    let baseline_seed = master.next_u64();

    let mut online = NetParams::<T>::random(cfg.shape(), &mut init_rng);
    // Every action starts at the one-node reward, so early targets separate
    // dead ends (y = 1) from everything else (y = 1 + gamma).
    online.set_constant_q(T::one());
    let len = online.len();
    let mut learner = Learner {
        target: online.clone(),
        online,
        generation: 0,
        adam: Adam::new(AdamConfig { lr: cfg.lr, ..AdamConfig::default() }, len),
        buffer: ReplayBuffer::new(cfg.capacity),
        grads: vec![T::zero(); len],
        batch: cfg.batch,
        gamma: T::from_f64_lossy(cfg.gamma),
        rng: batch_rng,
        gradient_steps: 0,
    };

    let baseline = random_baseline(validation, cfg.val_cutoff, baseline_seed);
    let class = cfg.instance_class();
    let limits = SearchLimits { node_cutoff: u64::MAX, step_cutoff: Some(cfg.t_max) };
    let mut global_step = 0u64;
    let mut best: Option<(NetParams<T>, usize, ValidationResult)> = None;
    let mut log = Vec::with_capacity(cfg.episodes);

    for episode in 1..=cfg.episodes {
        let started = Instant::now();
        let net = Arc::new(generate(&class.with_seed(instance_rng.next_u64()))?);
        let mut search = Search::new(&net, limits);
        let mut losses = Vec::new();
        loop {
            let eps = epsilon_at(global_step, cfg);
            let mut policy = EpsilonGreedy { params: &learner.online, eps, rng: &mut explore_rng };
            match search.step(&mut policy) {
                Step::Done(_) => break,
                Step::Child(t) => {
                    learner.buffer.push(Experience::new(net.clone(), t.parent.0, t.action, t.child.0, t.reward, t.terminal));
                    global_step += 1;
                    if let Some(loss) = learner.gradient_step(episode)? {
                        losses.push(loss);
                    }
                }
            }
        }
        let episode_nodes = search.stats().nodes;
        drop(search);

        if episode % cfg.target_sync == 0 {
            learner.sync_target();
        }
        let validation_row = if episode % cfg.val_period == 0 || episode == cfg.episodes {
            let v = validate(&learner.online, validation, cfg.val_cutoff);
            let summary = (v.mean_nodes, v.mean_failures);
            if best.as_ref().is_none_or(|b| v.mean_nodes < b.2.mean_nodes) {
                best = Some((learner.online.clone(), episode, v));
            }
            Some(summary)
        } else {
            None
        };
        let row = LogRow {
            episode,
            global_step,
            epsilon: epsilon_at(global_step, cfg),
            loss_mean: (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64),
            validation: validation_row,
            episode_nodes,
            seconds: started.elapsed().as_secs_f64(),
        };
        progress(&row);
        log.push(row);
    }

    let (best, best_episode, best_validation) = best.expect("at least one validation");
    Ok(TrainOutcome {
        best,
        best_episode,
        best_validation,
        last: learner.online,
        baseline,
        log,
        global_steps: global_step,
        gradient_steps: learner.gradient_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terminal_and_zero_discount_targets() {
        assert_eq!(ddqn_target_from(1.0, 0.99, true, &[3.0, 1.0], &[5.0, 7.0]), 1.0);
        assert_eq!(ddqn_target_from(1.0, 0.0, false, &[3.0, 1.0], &[5.0, 7.0]), 1.0);
        assert_eq!(ddqn_target_from(1.0, 0.99, false, &[], &[]), 1.0);
    }

    #[test]
    fn online_selects_target_evaluates() {
        // Online prefers the second action (smaller Q); the target's value
        // for that action is used even though its own minimum is the first.
        let y = ddqn_target_from(1.0, 0.5, false, &[4.0, 2.0], &[1.0, 6.0]);
        assert_eq!(y, 1.0 + 0.5 * 6.0);
    }

    #[test]
    fn target_stays_frozen_between_syncs() {
        use crate::nn::NetShape;
        use crate::rbgen::Preset;
        use crate::search::Transition;
        use crate::solve;

        let net = Arc::new(generate(&Preset::D1.params(8).with_seed(3)).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let online = NetParams::<f64>::random(NetShape { embed: 4, rounds: 1, hidden: 8 }, &mut rng);
        let len = online.len();
        let mut learner = Learner {
            target: online.clone(),
            online,
            generation: 0,
            adam: Adam::new(AdamConfig { lr: 1e-2, ..AdamConfig::default() }, len),
            buffer: ReplayBuffer::new(100),
            grads: vec![0.0; len],
            batch: 4,
            gamma: 0.99,
            rng,
            gradient_steps: 0,
        };
        let mut transitions = Vec::new();
        solve(&net, &mut crate::heuristics::MinDom, SearchLimits::default(), Some(&mut |t: &Transition| transitions.push(t.clone())));
        for t in transitions.into_iter().take(20) {
            learner.buffer.push(Experience::new(net.clone(), t.parent.0, t.action, t.child.0, t.reward, t.terminal));
        }
        let frozen = learner.target.clone();
        for _ in 0..5 {
            learner.gradient_step(1).unwrap();
        }
        assert_ne!(learner.online, frozen);
        assert_eq!(learner.target, frozen);
        learner.sync_target();
        assert_eq!(learner.target, learner.online);
    }

    #[test]
    fn log_row_csv() {
        let r = LogRow {
            episode: 3,
            global_step: 40,
            epsilon: 0.5,
            loss_mean: None,
            validation: Some((12.5, 4.0)),
            episode_nodes: 9,
            seconds: 0.1,
        };
        assert_eq!(r.csv(), "3,40,0.5,,12.5,4");
        assert_eq!(LOG_HEADER.split(',').count(), r.csv().split(',').count());
    }
}
