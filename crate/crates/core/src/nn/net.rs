//! Hypergraph message-passing Q-network.
//!
//! Embeddings start as linear maps of the raw features, `mu = w_v X` and
//! `nu = w_c C`. Each round first updates every constraint from the sum of
//! its scope's variable embeddings, its own embedding and its features, then
//! updates every variable from the sum of its (already updated) constraint
//! embeddings, its own embedding and its features. The Q-head reads the sum
//! of all variable embeddings concatenated with the action's embedding.
//!
//! All parameters live in one flat vector; [`Layout`] gives the offsets, in
//! this fixed order: `w_v`, `w_c`, constraint MLP, variable MLP, Q MLP, each
//! MLP as `w1`, `b1`, `w2`, `b2`. Matrices are row-major `out x in`.
//!
//! Sums over neighbours run in ascending index order, so outputs are
//! bit-reproducible for given parameters and state.

use rand::Rng;

use crate::csp::{ConstraintNetwork, SearchState};

use super::features::{extract_features, RawFeatures, CON_FEATURES, VAR_FEATURES};
use super::scalar::{gemm, MatMut, MatRef, Scalar};

pub const DEFAULT_HIDDEN: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NetShape {
    /// Embedding width `p`.
    pub embed: usize,
    /// Message-passing rounds `K`.
    pub rounds: usize,
    /// Hidden width of every MLP.
    pub hidden: usize,
}

impl NetShape {
    pub fn new(embed: usize, rounds: usize) -> Self {
        Self { embed, rounds, hidden: DEFAULT_HIDDEN }
    }
}

/// Offsets of a two-layer perceptron `out x hidden x in`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpLayout {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
}

impl MlpLayout {
    fn at(offset: usize, input: usize, hidden: usize, output: usize) -> Self {
        let w1 = offset;
        let b1 = w1 + hidden * input;
        let w2 = b1 + hidden;
        let b2 = w2 + output * hidden;
        Self { input, hidden, output, w1, b1, w2, b2 }
    }

    fn end(&self) -> usize {
        self.b2 + self.output
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub w_var: usize,
    pub w_con: usize,
    pub con_mlp: MlpLayout,
    pub var_mlp: MlpLayout,
    pub q_mlp: MlpLayout,
    pub len: usize,
}

impl Layout {
    pub fn new(shape: NetShape) -> Self {
        let (p, h) = (shape.embed, shape.hidden);
        let w_var = 0;
        let w_con = w_var + p * VAR_FEATURES;
        let con_mlp = MlpLayout::at(w_con + p * CON_FEATURES, 2 * p + CON_FEATURES, h, p);
        let var_mlp = MlpLayout::at(con_mlp.end(), 2 * p + VAR_FEATURES, h, p);
        let q_mlp = MlpLayout::at(var_mlp.end(), 2 * p, h, 1);
        let len = q_mlp.end();
        Self { w_var, w_con, con_mlp, var_mlp, q_mlp, len }
    }

    /// `(offset, fan_in, count)` for every parameter tensor, in order.
    fn tensors(&self, shape: NetShape) -> Vec<(usize, usize, usize)> {
        let p = shape.embed;
        let mut out = vec![
            (self.w_var, VAR_FEATURES, p * VAR_FEATURES),
            (self.w_con, CON_FEATURES, p * CON_FEATURES),
        ];
        for m in [self.con_mlp, self.var_mlp, self.q_mlp] {
            out.push((m.w1, m.input, m.hidden * m.input));
            out.push((m.b1, m.input, m.hidden));
            out.push((m.w2, m.hidden, m.output * m.hidden));
            out.push((m.b2, m.hidden, m.output));
        }
        out
    }
}

/// Learnable parameters of the value network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams<T> {
    shape: NetShape,
    layout: Layout,
    data: Vec<T>,
}

/// Recorded forward pass for one state.
#[derive(Debug, Clone)]
pub struct Tape<'n, T> {
    net: &'n ConstraintNetwork,
    features: RawFeatures<T>,
    /// Variable embeddings after each round, `K + 1` entries of `n x p`.
    mu: Vec<Vec<T>>,
    /// Constraint embeddings after each round, `K + 1` entries of `e x p`.
    nu: Vec<Vec<T>>,
    con_hidden: Vec<Vec<T>>,
    var_agg: Vec<Vec<T>>,
    var_hidden: Vec<Vec<T>>,
    pooled: Vec<T>,
    /// Q-head hidden pre-activation without the action term.
    q_base: Vec<T>,
}

impl<T: Scalar> Tape<'_, T> {
    pub fn var_embeddings(&self) -> &[T] {
        self.mu.last().unwrap()
    }

    pub fn con_embeddings(&self) -> &[T] {
        self.nu.last().unwrap()
    }

    pub fn features(&self) -> &RawFeatures<T> {
        &self.features
    }

    pub fn pooled(&self) -> &[T] {
        &self.pooled
    }
}

fn add_row<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn relu_in_place<T: Scalar>(xs: &mut [T]) {
    for x in xs {
        if *x < T::zero() {
            *x = T::zero();
        }
    }
}

/// Zeroes `grad` wherever the rectified activation was zero.
fn mask_relu<T: Scalar>(grad: &mut [T], activation: &[T]) {
    for (g, &a) in grad.iter_mut().zip(activation) {
        if a <= T::zero() {
            *g = T::zero();
        }
    }
}

fn col_sums_into<T: Scalar>(dst: &mut [T], m: &[T], cols: usize) {
    for row in m.chunks_exact(cols) {
        add_row(dst, row);
    }
}

impl<T: Scalar> NetParams<T> {
    pub fn zeros(shape: NetShape) -> Self {
        let layout = Layout::new(shape);
        Self { shape, layout, data: vec![T::zero(); layout.len] }
    }

    /// Uniform in `[-s, s]` with `s = 1 / sqrt(fan_in)` for every tensor.
    pub fn random<R: Rng + ?Sized>(shape: NetShape, rng: &mut R) -> Self {
        let mut params = Self::zeros(shape);
        for (offset, fan_in, count) in params.layout.tensors(shape) {
            let s = 1.0 / (fan_in as f64).sqrt();
            for x in &mut params.data[offset..offset + count] {
                *x = T::from_f64_lossy(rng.random_range(-s..=s));
            }
        }
        params
    }

    /// Sets the Q head's output weights to zero and its bias to `value`, so
    /// every action starts with the same estimate.
    pub fn set_constant_q(&mut self, value: T) {
        let q = self.layout.q_mlp;
        self.data[q.w2..q.w2 + q.hidden * q.output].fill(T::zero());
        self.data[q.b2..q.b2 + q.output].fill(value);
    }

    pub fn from_data(shape: NetShape, data: Vec<T>) -> Option<Self> {
        let layout = Layout::new(shape);
        (data.len() == layout.len).then_some(Self { shape, layout, data })
    }

    pub fn shape(&self) -> NetShape {
        self.shape
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Same parameters in another precision.
    pub fn cast<U: Scalar>(&self) -> NetParams<U> {
        NetParams {
            shape: self.shape,
            layout: self.layout,
            data: self.data.iter().map(|&x| U::from_f64_lossy(x.to_f64_lossy())).collect(),
        }
    }

    fn s(&self, offset: usize, len: usize) -> &[T] {
        &self.data[offset..offset + len]
    }

    /// Runs message passing on `state` and records what backward needs.
    pub fn forward<'n>(&self, state: &SearchState<'n>) -> Tape<'n, T> {
        let features = extract_features::<T>(state);
        self.forward_features(state.network(), features)
    }

    pub fn forward_features<'n>(&self, net: &'n ConstraintNetwork, features: RawFeatures<T>) -> Tape<'n, T> {
        let (one, zero) = (T::one(), T::zero());
        let (p, h) = (self.shape.embed, self.shape.hidden);
        let (n, e) = (net.num_vars(), net.num_constraints());
        let lay = self.layout;
        let x = MatRef::new(&features.vars, n, VAR_FEATURES);
        let c = MatRef::new(&features.cons, e, CON_FEATURES);

        let mut mu0 = vec![zero; n * p];
        let wv = MatRef::new(self.s(lay.w_var, p * VAR_FEATURES), p, VAR_FEATURES);
        gemm(one, x, wv.t(), zero, MatMut::new(&mut mu0, n, p));
        let mut nu0 = vec![zero; e * p];
        let wc = MatRef::new(self.s(lay.w_con, p * CON_FEATURES), p, CON_FEATURES);
        gemm(one, c, wc.t(), zero, MatMut::new(&mut nu0, e, p));

        let rounds = self.shape.rounds;
        let mut tape = Tape {
            net,
            mu: Vec::with_capacity(rounds + 1),
            nu: Vec::with_capacity(rounds + 1),
            con_hidden: Vec::with_capacity(rounds),
            var_agg: Vec::with_capacity(rounds),
            var_hidden: Vec::with_capacity(rounds),
            pooled: Vec::new(),
            q_base: Vec::new(),
            features: RawFeatures { vars: Vec::new(), cons: Vec::new() },
        };
        tape.mu.push(mu0);
        tape.nu.push(nu0);

        let cm = lay.con_mlp;
        let vm = lay.var_mlp;
        let cw1 = self.s(cm.w1, h * cm.input);
        let vw1 = self.s(vm.w1, h * vm.input);
        let mut gathered = vec![zero; n * h];
        for _ in 0..rounds {
            let mu_prev = tape.mu.last().unwrap();
            let nu_prev = tape.nu.last().unwrap();

            // Constraint update. The scope-sum term is mapped per variable
            // first and then gathered, which is the same linear map.
            gemm(
                one,
                MatRef::new(mu_prev, n, p),
                MatRef::block(cw1, h, p, cm.input).t(),
                zero,
                MatMut::new(&mut gathered, n, h),
            );
            let mut hidden_c = vec![zero; e * h];
            gemm(
                one,
                MatRef::new(nu_prev, e, p),
                MatRef::block(&cw1[p..], h, p, cm.input).t(),
                zero,
                MatMut::new(&mut hidden_c, e, h),
            );
            gemm(
                one,
                c,
                MatRef::block(&cw1[2 * p..], h, CON_FEATURES, cm.input).t(),
                one,
                MatMut::new(&mut hidden_c, e, h),
            );
            let b1 = self.s(cm.b1, h);
            for (j, row) in hidden_c.chunks_exact_mut(h).enumerate() {
                add_row(row, b1);
                for &i in net.constraint(j).scope() {
                    add_row(row, &gathered[i * h..(i + 1) * h]);
                }
            }
            relu_in_place(&mut hidden_c);
            let mut nu_new = vec![zero; e * p];
            gemm(
                one,
                MatRef::new(&hidden_c, e, h),
                MatRef::new(self.s(cm.w2, p * h), p, h).t(),
                zero,
                MatMut::new(&mut nu_new, e, p),
            );
            let b2 = self.s(cm.b2, p);
            for row in nu_new.chunks_exact_mut(p) {
                add_row(row, b2);
            }

            // Variable update from the new constraint embeddings.
            let mut agg = vec![zero; n * p];
            for (i, row) in agg.chunks_exact_mut(p).enumerate() {
                for &j in net.constraints_of(i) {
                    add_row(row, &nu_new[j * p..(j + 1) * p]);
                }
            }
            let mut hidden_v = vec![zero; n * h];
            gemm(
                one,
                MatRef::new(&agg, n, p),
                MatRef::block(vw1, h, p, vm.input).t(),
                zero,
                MatMut::new(&mut hidden_v, n, h),
            );
            gemm(
                one,
                MatRef::new(mu_prev, n, p),
                MatRef::block(&vw1[p..], h, p, vm.input).t(),
                one,
                MatMut::new(&mut hidden_v, n, h),
            );
            gemm(
                one,
                x,
                MatRef::block(&vw1[2 * p..], h, VAR_FEATURES, vm.input).t(),
                one,
                MatMut::new(&mut hidden_v, n, h),
            );
            let vb1 = self.s(vm.b1, h);
            for row in hidden_v.chunks_exact_mut(h) {
                add_row(row, vb1);
            }
            relu_in_place(&mut hidden_v);
            let mut mu_new = vec![zero; n * p];
            gemm(
                one,
                MatRef::new(&hidden_v, n, h),
                MatRef::new(self.s(vm.w2, p * h), p, h).t(),
                zero,
                MatMut::new(&mut mu_new, n, p),
            );
            let vb2 = self.s(vm.b2, p);
            for row in mu_new.chunks_exact_mut(p) {
                add_row(row, vb2);
            }

            tape.con_hidden.push(hidden_c);
            tape.var_agg.push(agg);
            tape.var_hidden.push(hidden_v);
            tape.nu.push(nu_new);
            tape.mu.push(mu_new);
        }

        let mut pooled = vec![zero; p];
        col_sums_into(&mut pooled, tape.mu.last().unwrap(), p);
        let qm = lay.q_mlp;
        let mut q_base = self.s(qm.b1, h).to_vec();
        gemm(
            one,
            MatRef::block(self.s(qm.w1, h * qm.input), h, p, qm.input),
            MatRef::new(&pooled, p, 1),
            one,
            MatMut::new(&mut q_base, h, 1),
        );
        tape.pooled = pooled;
        tape.q_base = q_base;
        tape.features = features;
        tape
    }

    /// Q-head hidden pre-activation for action `a`.
    fn q_hidden(&self, tape: &Tape<'_, T>, a: usize) -> Vec<T> {
        let (p, h) = (self.shape.embed, self.shape.hidden);
        let qm = self.layout.q_mlp;
        let mut z = tape.q_base.clone();
        let mu = tape.var_embeddings();
        gemm(
            T::one(),
            MatRef::block(&self.s(qm.w1, h * qm.input)[p..], h, p, qm.input),
            MatRef::new(&mu[a * p..(a + 1) * p], p, 1),
            T::one(),
            MatMut::new(&mut z, h, 1),
        );
        z
    }

    pub fn q_value(&self, tape: &Tape<'_, T>, a: usize) -> T {
        let qm = self.layout.q_mlp;
        let h = self.shape.hidden;
        let z = self.q_hidden(tape, a);
        let w2 = self.s(qm.w2, h);
        let mut q = self.data[qm.b2];
        for (&zi, &wi) in z.iter().zip(w2) {
            if zi > T::zero() {
                q += zi * wi;
            }
        }
        q
    }

    pub fn q_values(&self, tape: &Tape<'_, T>, actions: &[usize]) -> Vec<T> {
        actions.iter().map(|&a| self.q_value(tape, a)).collect()
    }

    /// Accumulates `dq * dQ(s, a)/dtheta` into `grads`.
    pub fn backward(&self, tape: &Tape<'_, T>, action: usize, dq: T, grads: &mut [T]) {
        assert_eq!(grads.len(), self.data.len(), "gradient buffer size");
        let (one, zero) = (T::one(), T::zero());
        let (p, h) = (self.shape.embed, self.shape.hidden);
        let net = tape.net;
        let (n, e) = (net.num_vars(), net.num_constraints());
        let lay = self.layout;

        // Q-head.
        let qm = lay.q_mlp;
        let z = self.q_hidden(tape, action);
        let w2 = self.s(qm.w2, h);
        grads[qm.b2] += dq;
        let mut dz = vec![zero; h];
        for k in 0..h {
            if z[k] > zero {
                grads[qm.w2 + k] += dq * z[k];
                dz[k] = dq * w2[k];
            }
        }
        add_row(&mut grads[qm.b1..qm.b1 + h], &dz);
        let mu_k = tape.var_embeddings();
        let mu_a = &mu_k[action * p..(action + 1) * p];
        let dz_col = MatRef::new(&dz, h, 1);
        gemm(one, dz_col, MatRef::new(&tape.pooled, 1, p), one, MatMut::block(&mut grads[qm.w1..], h, p, qm.input));
        gemm(one, dz_col, MatRef::new(mu_a, 1, p), one, MatMut::block(&mut grads[qm.w1 + p..], h, p, qm.input));
        let qw1 = self.s(qm.w1, h * qm.input);
        let mut dpool = vec![zero; p];
        gemm(one, MatRef::block(qw1, h, p, qm.input).t(), dz_col, zero, MatMut::new(&mut dpool, p, 1));
        let mut dact = vec![zero; p];
        gemm(one, MatRef::block(&qw1[p..], h, p, qm.input).t(), dz_col, zero, MatMut::new(&mut dact, p, 1));

        let mut dmu = vec![zero; n * p];
        for row in dmu.chunks_exact_mut(p) {
            row.copy_from_slice(&dpool);
        }
        add_row(&mut dmu[action * p..(action + 1) * p], &dact);
        let mut dnu = vec![zero; e * p];

        let x = MatRef::new(&tape.features.vars, n, VAR_FEATURES);
        let c = MatRef::new(&tape.features.cons, e, CON_FEATURES);
        let cm = lay.con_mlp;
        let vm = lay.var_mlp;
        let cw1 = self.s(cm.w1, h * cm.input);
        let vw1 = self.s(vm.w1, h * vm.input);
        let mut dhid_v = vec![zero; n * h];
        let mut dagg = vec![zero; n * p];
        let mut dhid_c = vec![zero; e * h];
        let mut dgathered = vec![zero; n * h];

        for k in (0..self.shape.rounds).rev() {
            let mu_prev = &tape.mu[k];
            let nu_prev = &tape.nu[k];
            let hidden_v = &tape.var_hidden[k];
            let hidden_c = &tape.con_hidden[k];
            let agg = &tape.var_agg[k];

            // Variable update: dmu holds dL/dmu^(k+1).
            col_sums_into(&mut grads[vm.b2..vm.b2 + p], &dmu, p);
            gemm(
                one,
                MatRef::new(&dmu, n, p).t(),
                MatRef::new(hidden_v, n, h),
                one,
                MatMut::new(&mut grads[vm.w2..vm.w2 + p * h], p, h),
            );
            gemm(
                one,
                MatRef::new(&dmu, n, p),
                MatRef::new(self.s(vm.w2, p * h), p, h),
                zero,
                MatMut::new(&mut dhid_v, n, h),
            );
            mask_relu(&mut dhid_v, hidden_v);
            col_sums_into(&mut grads[vm.b1..vm.b1 + h], &dhid_v, h);
            let dh_v = MatRef::new(&dhid_v, n, h);
            gemm(one, dh_v.t(), MatRef::new(agg, n, p), one, MatMut::block(&mut grads[vm.w1..], h, p, vm.input));
            gemm(one, dh_v.t(), MatRef::new(mu_prev, n, p), one, MatMut::block(&mut grads[vm.w1 + p..], h, p, vm.input));
            gemm(one, dh_v.t(), x, one, MatMut::block(&mut grads[vm.w1 + 2 * p..], h, VAR_FEATURES, vm.input));
            gemm(one, dh_v, MatRef::block(vw1, h, p, vm.input), zero, MatMut::new(&mut dagg, n, p));
            // dmu now becomes dL/dmu^(k).
            gemm(one, dh_v, MatRef::block(&vw1[p..], h, p, vm.input), zero, MatMut::new(&mut dmu, n, p));
            for (j, row) in dnu.chunks_exact_mut(p).enumerate() {
                for &i in net.constraint(j).scope() {
                    add_row(row, &dagg[i * p..(i + 1) * p]);
                }
            }

            // Constraint update: dnu holds dL/dnu^(k+1).
            col_sums_into(&mut grads[cm.b2..cm.b2 + p], &dnu, p);
            gemm(
                one,
                MatRef::new(&dnu, e, p).t(),
                MatRef::new(hidden_c, e, h),
                one,
                MatMut::new(&mut grads[cm.w2..cm.w2 + p * h], p, h),
            );
            gemm(
                one,
                MatRef::new(&dnu, e, p),
                MatRef::new(self.s(cm.w2, p * h), p, h),
                zero,
                MatMut::new(&mut dhid_c, e, h),
            );
            mask_relu(&mut dhid_c, hidden_c);
            col_sums_into(&mut grads[cm.b1..cm.b1 + h], &dhid_c, h);
            let dh_c = MatRef::new(&dhid_c, e, h);
            gemm(one, dh_c.t(), MatRef::new(nu_prev, e, p), one, MatMut::block(&mut grads[cm.w1 + p..], h, p, cm.input));
            gemm(one, dh_c.t(), c, one, MatMut::block(&mut grads[cm.w1 + 2 * p..], h, CON_FEATURES, cm.input));
            dgathered.fill(zero);
            for (j, row) in dhid_c.chunks_exact(h).enumerate() {
                for &i in net.constraint(j).scope() {
                    add_row(&mut dgathered[i * h..(i + 1) * h], row);
                }
            }
            let dg = MatRef::new(&dgathered, n, h);
            gemm(one, dg.t(), MatRef::new(mu_prev, n, p), one, MatMut::block(&mut grads[cm.w1..], h, p, cm.input));
            gemm(one, dg, MatRef::block(cw1, h, p, cm.input), one, MatMut::new(&mut dmu, n, p));
            // dnu becomes dL/dnu^(k).
            gemm(one, dh_c, MatRef::block(&cw1[p..], h, p, cm.input), zero, MatMut::new(&mut dnu, e, p));
        }

        gemm(
            one,
            MatRef::new(&dmu, n, p).t(),
            x,
            one,
            MatMut::new(&mut grads[lay.w_var..lay.w_var + p * VAR_FEATURES], p, VAR_FEATURES),
        );
        gemm(
            one,
            MatRef::new(&dnu, e, p).t(),
            c,
            one,
            MatMut::new(&mut grads[lay.w_con..lay.w_con + p * CON_FEATURES], p, CON_FEATURES),
        );
    }

    /// Q-values of `actions` in `state`.
    pub fn evaluate(&self, state: &SearchState<'_>, actions: &[usize]) -> Vec<T> {
        let tape = self.forward(state);
        self.q_values(&tape, actions)
    }

    /// Action with the smallest Q-value; ties go to the smallest index.
    pub fn greedy_action(&self, state: &SearchState<'_>, actions: &[usize]) -> usize {
        assert!(!actions.is_empty(), "empty action set");
        if actions.len() == 1 {
            return actions[0];
        }
        argmin(actions, &self.evaluate(state, actions))
    }
}

/// `actions[i]` minimizing `q[i]`, first on ties. Non-finite values are
/// never preferred over finite ones.
pub fn argmin<T: Scalar>(actions: &[usize], q: &[T]) -> usize {
    let mut best = 0;
    for i in 1..q.len() {
        if q[i] < q[best] || (!q[best].is_finite() && q[i].is_finite()) {
            best = i;
        }
    }
    actions[best]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn layout_is_contiguous() {
        let shape = NetShape::new(4, 2);
        let l = Layout::new(shape);
        let tensors = l.tensors(shape);
        let mut next = 0;
        for (off, _, count) in tensors {
            assert_eq!(off, next);
            next += count;
        }
        assert_eq!(next, l.len);
    }

    #[test]
    fn argmin_tie_goes_to_first() {
        assert_eq!(argmin(&[3, 5, 9], &[1.0, 0.5, 0.5]), 5);
        assert_eq!(argmin(&[3, 5], &[f64::NAN, 2.0]), 5);
    }

    #[test]
    fn constant_q_head() {
        let net = ConstraintNetwork::new("c", vec![vec![0, 1]; 3], vec![(vec![0, 1], vec![vec![0, 1]])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut p = NetParams::<f64>::random(NetShape { embed: 3, rounds: 2, hidden: 4 }, &mut rng);
        p.set_constant_q(1.0);
        assert_eq!(p.evaluate(&SearchState::new(&net), &[0, 1, 2]), vec![1.0; 3]);
    }

    #[test]
    fn zero_params_give_equal_q() {
        let net = crate::rbgen::generate(&crate::rbgen::Preset::D1.params(6).with_seed(1)).unwrap();
        let state = SearchState::new(&net);
        let mut params = NetParams::<f64>::zeros(NetShape::new(4, 2));
        let b2 = params.layout().q_mlp.b2;
        params.data_mut()[b2] = 0.25;
        let q = params.evaluate(&state, &[0, 1, 2]);
        assert_eq!(q, vec![0.25; 3]);
    }

    #[test]
    fn random_init_within_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let shape = NetShape::new(8, 1);
        let params = NetParams::<f64>::random(shape, &mut rng);
        let l = params.layout();
        let bound = 1.0 / ((2 * 8 + CON_FEATURES) as f64).sqrt();
        let w1 = &params.data()[l.con_mlp.w1..l.con_mlp.b1];
        assert!(w1.iter().all(|w| w.abs() <= bound));
        assert!(w1.iter().any(|w| w.abs() > bound / 2.0));
    }
}
