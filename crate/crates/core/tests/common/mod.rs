//! Independent reference implementations shared by the integration tests
//! and the acceptance suite. Everything here is written with plain loops
//! and avoids the library's fast paths.

#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::Rng;
use varorder::csp::{ConstraintNetwork, SearchState};
use varorder::nn::{NetParams, CON_FEATURES, VAR_FEATURES};

/// Random table-constraint network with `n` variables, domains of size
/// `1..=dmax`, arity `2..=max_arity` and tables of random density.
pub fn random_network<R: Rng>(rng: &mut R, n: usize, dmax: usize, max_arity: usize, cons: usize) -> ConstraintNetwork {
    let sizes: Vec<usize> = (0..n).map(|_| rng.random_range(1..=dmax)).collect();
    let domains = sizes.iter().map(|&d| (0..d as i64).collect()).collect();
    let mut constraints = Vec::new();
    let vars: Vec<usize> = (0..n).collect();
    for _ in 0..cons {
        let arity = rng.random_range(2..=max_arity.min(n));
        let scope: Vec<usize> = vars.choose_multiple(rng, arity).copied().collect();
        let density: f64 = rng.random_range(0.2..0.95);
        let mut tuples = Vec::new();
        for t in all_tuples(&scope.iter().map(|&v| sizes[v]).collect::<Vec<_>>()) {
            if rng.random_bool(density) {
                tuples.push(t.iter().map(|&x| x as i64).collect());
            }
        }
        constraints.push((scope, tuples));
    }
    ConstraintNetwork::new("rand", domains, constraints).unwrap()
}

/// Cartesian product of `0..sizes[k]`, lexicographic.
pub fn all_tuples(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &d in sizes {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..d).map(move |x| {
                    let mut t = t.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    out
}

/// Satisfiability by enumerating every complete assignment.
pub fn brute_force_sat(net: &ConstraintNetwork) -> bool {
    let sizes: Vec<usize> = (0..net.num_vars()).map(|v| net.domain_size(v)).collect();
    all_tuples(&sizes).iter().any(|a| satisfies(net, a))
}

pub fn satisfies(net: &ConstraintNetwork, a: &[usize]) -> bool {
    net.constraints().iter().all(|c| {
        let t: Vec<u8> = c.scope().iter().map(|&v| a[v] as u8).collect();
        c.tuples().any(|row| row == t.as_slice())
    })
}

/// Generalized arc consistency closure by repeated full sweeps. Returns
/// `None` when some domain empties.
pub fn naive_gac(net: &ConstraintNetwork, masks: &[u64]) -> Option<Vec<u64>> {
    let mut d = masks.to_vec();
    loop {
        let mut changed = false;
        for c in net.constraints() {
            for (k, &var) in c.scope().iter().enumerate() {
                for val in 0..net.domain_size(var) {
                    if d[var] >> val & 1 == 0 {
                        continue;
                    }
                    let supported = c.tuples().any(|t| {
                        t[k] as usize == val && c.scope().iter().zip(t).all(|(&u, &x)| d[u] >> x & 1 == 1)
                    });
                    if !supported {
                        d[var] &= !(1u64 << val);
                        changed = true;
                    }
                }
            }
        }
        if d.iter().any(|&m| m == 0) {
            return None;
        }
        if !changed {
            return Some(d);
        }
    }
}

/// Random reachable state: root propagation plus a few random decisions,
/// retried until consistent.
pub fn random_state<'a, R: Rng>(net: &'a ConstraintNetwork, rng: &mut R, decisions: usize) -> SearchState<'a> {
    loop {
        let mut s = SearchState::new(net);
        if !s.propagate(0..net.num_constraints()).is_consistent() {
            return SearchState::new(net);
        }
        let mut ok = true;
        for _ in 0..decisions {
            let free: Vec<usize> = (0..net.num_vars()).filter(|&v| s.domain_size(v) > 1).collect();
            let Some(&v) = free.choose(rng) else { break };
            let vals: Vec<usize> = s.values(v).collect();
            let &x = vals.choose(rng).unwrap();
            let r = if rng.random_bool(0.5) { s.assign(v, x) } else { s.refute(v, x) };
            if !r.is_consistent() {
                ok = false;
                break;
            }
        }
        if ok {
            return s;
        }
    }
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Two-layer perceptron read straight from the flat parameter vector.
fn mlp(data: &[f64], w1: usize, b1: usize, w2: usize, b2: usize, hidden: usize, out: usize, input: &[f64]) -> Vec<f64> {
    let m = input.len();
    let h: Vec<f64> = (0..hidden)
        .map(|r| relu(data[b1 + r] + (0..m).map(|c| data[w1 + r * m + c] * input[c]).sum::<f64>()))
        .collect();
    (0..out)
        .map(|r| data[b2 + r] + (0..hidden).map(|c| data[w2 + r * hidden + c] * h[c]).sum::<f64>())
        .collect()
}

/// Raw features computed from the definitions.
pub fn dense_features(state: &SearchState<'_>) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let net = state.network();
    let x = (0..net.num_vars())
        .map(|v| {
            let k = state.mask(v).count_ones() as f64;
            vec![k, if k == 1.0 { 1.0 } else { 0.0 }]
        })
        .collect();
    let c = net
        .constraints()
        .iter()
        .map(|c| {
            let unbound = c.scope().iter().filter(|&&v| state.mask(v).count_ones() > 1).count();
            let space: f64 = c.scope().iter().map(|&v| state.mask(v).count_ones() as f64).product();
            let live = c
                .tuples()
                .filter(|t| c.scope().iter().zip(*t).all(|(&v, &x)| state.mask(v) >> x & 1 == 1))
                .count() as f64;
            let tight = if space == 0.0 { 1.0 } else { 1.0 - live / space };
            vec![unbound as f64, tight]
        })
        .collect();
    (x, c)
}

/// Q-values computed by direct evaluation of the message-passing
/// equations, one node at a time.
pub fn dense_q(params: &NetParams<f64>, state: &SearchState<'_>, actions: &[usize]) -> Vec<f64> {
    let shape = params.shape();
    let (p, h) = (shape.embed, shape.hidden);
    let l = *params.layout();
    let d = params.data();
    let net = state.network();
    let (x, c) = dense_features(state);
    let lin = |off: usize, inw: usize, v: &[f64]| -> Vec<f64> {
        (0..p).map(|r| (0..inw).map(|k| d[off + r * inw + k] * v[k]).sum()).collect()
    };
    let mut mu: Vec<Vec<f64>> = x.iter().map(|xi| lin(l.w_var, VAR_FEATURES, xi)).collect();
    let mut nu: Vec<Vec<f64>> = c.iter().map(|cj| lin(l.w_con, CON_FEATURES, cj)).collect();
    for _ in 0..shape.rounds {
        let cm = l.con_mlp;
        let nu_new: Vec<Vec<f64>> = (0..net.num_constraints())
            .map(|j| {
                let mut s = vec![0.0; p];
                for &i in net.constraint(j).scope() {
                    for k in 0..p {
                        s[k] += mu[i][k];
                    }
                }
                let input: Vec<f64> = s.iter().chain(&nu[j]).chain(&c[j]).copied().collect();
                mlp(d, cm.w1, cm.b1, cm.w2, cm.b2, h, p, &input)
            })
            .collect();
        let vm = l.var_mlp;
        let mu_new: Vec<Vec<f64>> = (0..net.num_vars())
            .map(|i| {
                let mut s = vec![0.0; p];
                for &j in net.constraints_of(i) {
                    for k in 0..p {
                        s[k] += nu_new[j][k];
                    }
                }
                let input: Vec<f64> = s.iter().chain(&mu[i]).chain(&x[i]).copied().collect();
                mlp(d, vm.w1, vm.b1, vm.w2, vm.b2, h, p, &input)
            })
            .collect();
        mu = mu_new;
        nu = nu_new;
    }
    let mut pooled = vec![0.0; p];
    for m in &mu {
        for k in 0..p {
            pooled[k] += m[k];
        }
    }
    let qm = l.q_mlp;
    actions
        .iter()
        .map(|&a| {
            let input: Vec<f64> = pooled.iter().chain(&mu[a]).copied().collect();
            mlp(d, qm.w1, qm.b1, qm.w2, qm.b2, h, 1, &input)[0]
        })
        .collect()
}

/// Largest relative error between the analytic gradient of `Q(s, a)` and
/// central differences, over the given parameter indices.
pub fn max_gradient_error(params: &NetParams<f64>, state: &SearchState<'_>, action: usize, indices: &[usize]) -> f64 {
    let tape = params.forward(state);
    let mut grad = vec![0.0; params.len()];
    params.backward(&tape, action, 1.0, &mut grad);
    let mut worst: f64 = 0.0;
    let eps = 1e-6;
    for &i in indices {
        let mut plus = params.clone();
        plus.data_mut()[i] += eps;
        let mut minus = params.clone();
        minus.data_mut()[i] -= eps;
        let qp = dense_q(&plus, state, &[action])[0];
        let qm = dense_q(&minus, state, &[action])[0];
        let numeric = (qp - qm) / (2.0 * eps);
        let analytic = grad[i];
        let scale = analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic - numeric).abs() / scale);
    }
    worst
}

/// Lower tail of Student's t distribution by Simpson quadrature of the
/// density, normalized with the log-gamma function.
pub fn student_t_cdf(t: f64, dof: f64) -> f64 {
    let ln_norm = ln_gamma((dof + 1.0) / 2.0) - ln_gamma(dof / 2.0) - 0.5 * (dof * std::f64::consts::PI).ln();
    let pdf = |x: f64| (ln_norm - (dof + 1.0) / 2.0 * (1.0 + x * x / dof).ln()).exp();
    let a = 0.0;
    let b = t.abs();
    let steps = 20_000;
    let hstep = (b - a) / steps as f64;
    let mut acc = pdf(a) + pdf(b);
    for k in 1..steps {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * pdf(a + k as f64 * hstep);
    }
    let half = acc * hstep / 3.0;
    if t >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// Lanczos approximation (g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, &c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}
