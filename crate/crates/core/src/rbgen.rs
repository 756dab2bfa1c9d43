//! Model RB random instance generator.
//!
//! An instance class is `<m, n, alpha, beta, rho>`: arity `m`, `n` variables
//! with domain size `d = n^alpha`, `e = beta * n * ln n` constraints, each
//! forbidding `q = rho * d^m` of its tuples. Counts are rounded half-up.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::csp::{ConstraintNetwork, MAX_DOMAIN};

/// Upper bound on `d^m`, the size of one constraint's tuple space.
const MAX_TUPLE_SPACE: u64 = 1 << 24;

#[derive(Debug, Error, PartialEq)]
pub enum RbError {
    #[error("arity must be at least 2, got {0}")]
    Arity(usize),
    #[error("need at least 2 variables, got {0}")]
    Vars(usize),
    #[error("parameter {name} = {value} out of range")]
    Range { name: &'static str, value: f64 },
    #[error("domain size {0} must lie in 2..={MAX_DOMAIN}")]
    DomainSize(u64),
    #[error("constraint count rounds to zero")]
    NoConstraints,
    #[error("{q} forbidden tuples out of {space} leaves the relation empty or unconstrained")]
    Tightness { q: u64, space: u64 },
    #[error("tuple space {0} is too large")]
    TupleSpace(u64),
    #[error("unknown preset `{0}` (expected D1 or D2)")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbParams {
    pub m: usize,
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RbCounts {
    /// Domain size.
    pub d: usize,
    /// Number of constraints.
    pub e: usize,
    /// Forbidden tuples per constraint.
    pub q: usize,
}

impl RbCounts {
    pub fn tuple_space(&self, m: usize) -> usize {
        self.d.pow(m as u32)
    }
}

fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor() as u64
}

/// The two phase-transition classes used for training and evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Binary constraints: `<2, n, 0.7, 3, 0.21>`.
    D1,
    /// Ternary constraints: `<3, n, 0.7, 2.5, 0.24>`.
    D2,
}

impl Preset {
    pub fn params(self, n: usize) -> RbParams {
        match self {
            Preset::D1 => RbParams { m: 2, n, alpha: 0.7, beta: 3.0, rho: 0.21, seed: 0 },
            Preset::D2 => RbParams { m: 3, n, alpha: 0.7, beta: 2.5, rho: 0.24, seed: 0 },
        }
    }
}

impl FromStr for Preset {
    type Err = RbError;

    fn from_str(s: &str) -> Result<Self, RbError> {
        match s {
            "D1" | "d1" => Ok(Preset::D1),
            "D2" | "d2" => Ok(Preset::D2),
            _ => Err(RbError::UnknownPreset(s.to_string())),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::D1 => "D1",
            Preset::D2 => "D2",
        })
    }
}

/// Parameters of a named preset; rejects `n < 2` and unknown names.
pub fn preset(name: &str, n: usize) -> Result<RbParams, RbError> {
    if n < 2 {
        return Err(RbError::Vars(n));
    }
    Ok(name.parse::<Preset>()?.params(n))
}

impl RbParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Validates the parameters and derives `(d, e, q)`.
    pub fn derive_counts(&self) -> Result<RbCounts, RbError> {
        if self.m < 2 {
            return Err(RbError::Arity(self.m));
        }
        if self.n < 2 {
            return Err(RbError::Vars(self.n));
        }
        for (name, value) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(RbError::Range { name, value });
            }
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(RbError::Range { name: "rho", value: self.rho });
        }
        let n = self.n as f64;
        let d = round_half_up(n.powf(self.alpha));
        if !(2..=MAX_DOMAIN as u64).contains(&d) {
            return Err(RbError::DomainSize(d));
        }
        let e = round_half_up(self.beta * n * n.ln());
        if e == 0 {
            return Err(RbError::NoConstraints);
        }
        let space = d
            .checked_pow(self.m as u32)
            .filter(|&s| s <= MAX_TUPLE_SPACE)
            .ok_or(RbError::TupleSpace(u64::MAX))?;
        let q = round_half_up(self.rho * space as f64);
        if q == 0 || q >= space {
            return Err(RbError::Tightness { q, space });
        }
        Ok(RbCounts { d: d as usize, e: e as usize, q: q as usize })
    }

    /// A compact identifier for instances of this class and seed.
    pub fn instance_name(&self) -> String {
        format!(
            "rb-m{}-n{}-a{}-b{}-r{}-s{}",
            self.m, self.n, self.alpha, self.beta, self.rho, self.seed
        )
    }
}

/// Draws one model RB instance; a pure function of `params`.
///
/// Each constraint picks `m` distinct variables uniformly (scopes may repeat
/// across constraints) and forbids `q` distinct tuples drawn uniformly from
/// the `d^m` possible ones. The allowed tuples are the complement, listed in
/// lexicographic order.
pub fn generate(params: &RbParams) -> Result<ConstraintNetwork, RbError> {
    let counts = params.derive_counts()?;
    let RbCounts { d, e, q } = counts;
    let m = params.m;
    let space = counts.tuple_space(m);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut constraints = Vec::with_capacity(e);
    let mut forbidden = vec![false; space];
    for _ in 0..e {
        let mut scope = index::sample(&mut rng, params.n, m).into_vec();
        scope.sort_unstable();
        forbidden.fill(false);
        for t in index::sample(&mut rng, space, q) {
            forbidden[t] = true;
        }
        let mut tuples = Vec::with_capacity((space - q) * m);
        for code in (0..space).filter(|&t| !forbidden[t]) {
            push_digits(code, d, m, &mut tuples);
        }
        constraints.push((scope, tuples));
    }
    Ok(ConstraintNetwork::from_indices(
        params.instance_name(),
        &vec![d; params.n],
        constraints,
    ))
}

/// Base-`d` digits of `code`, most significant first, so ascending codes
/// give lexicographically ascending tuples.
fn push_digits(mut code: usize, d: usize, m: usize, out: &mut Vec<u8>) {
    let start = out.len();
    out.resize(start + m, 0);
    for k in (0..m).rev() {
        out[start + k] = (code % d) as u8;
        code /= d;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::write_instance;

    #[test]
    fn d1_15_counts() {
        let c = Preset::D1.params(15).derive_counts().unwrap();
        assert_eq!(c, RbCounts { d: 7, e: 122, q: 10 });
    }

    #[test]
    fn tiny_counts() {
        let p = RbParams { m: 2, n: 2, alpha: 1.0, beta: 1.0, rho: 0.5, seed: 0 };
        assert_eq!(p.derive_counts().unwrap(), RbCounts { d: 2, e: 1, q: 2 });
    }

    #[test]
    fn all_tuples_forbidden_is_rejected() {
        let p = RbParams { m: 2, n: 2, alpha: 1.0, beta: 1.0, rho: 0.95, seed: 0 };
        assert_eq!(p.derive_counts(), Err(RbError::Tightness { q: 4, space: 4 }));
    }

    #[test]
    fn bad_params_rejected() {
        let base = Preset::D1.params(15);
        assert!(RbParams { m: 1, ..base }.derive_counts().is_err());
        assert!(RbParams { rho: 1.0, ..base }.derive_counts().is_err());
        assert!(RbParams { alpha: -1.0, ..base }.derive_counts().is_err());
        assert_eq!(preset("D3", 10), Err(RbError::UnknownPreset("D3".into())));
        assert_eq!(preset("D1", 1), Err(RbError::Vars(1)));
    }

    #[test]
    fn presets() {
        assert_eq!(preset("D1", 15).unwrap(), RbParams { m: 2, n: 15, alpha: 0.7, beta: 3.0, rho: 0.21, seed: 0 });
        assert_eq!(preset("D2", 10).unwrap(), RbParams { m: 3, n: 10, alpha: 0.7, beta: 2.5, rho: 0.24, seed: 0 });
        assert_eq!(preset("D1", 40).unwrap().n, 40);
    }

    #[test]
    fn generation_is_deterministic() {
        let p = Preset::D1.params(15).with_seed(42);
        assert_eq!(write_instance(&generate(&p).unwrap()), write_instance(&generate(&p).unwrap()));
        let other = generate(&p.with_seed(43)).unwrap();
        assert_ne!(write_instance(&generate(&p).unwrap()), write_instance(&other));
    }

    #[test]
    fn d1_15_structure() {
        let net = generate(&Preset::D1.params(15).with_seed(7)).unwrap();
        assert_eq!(net.num_vars(), 15);
        assert_eq!(net.num_constraints(), 122);
        for c in net.constraints() {
            assert_eq!(c.tuple_count(), 39);
            assert!(c.scope()[0] < c.scope()[1]);
        }
    }

    #[test]
    fn digits_are_lexicographic() {
        let mut out = Vec::new();
        for code in 0..8 {
            push_digits(code, 2, 3, &mut out);
        }
        let rows: Vec<_> = out.chunks(3).collect();
        assert!(rows.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(rows[5], &[1, 0, 1]);
    }
}
