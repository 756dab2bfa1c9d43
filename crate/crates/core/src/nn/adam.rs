use thiserror::Error;

use super::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum OptimError {
    #[error("gradient has {got} entries, parameters have {want}")]
    Size { got: usize, want: usize },
    #[error("non-finite gradient at index {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 5e-5, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    config: AdamConfig,
    m: Vec<T>,
    v: Vec<T>,
    t: u64,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig, len: usize) -> Self {
        Self { config, m: vec![T::zero(); len], v: vec![T::zero(); len], t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Applies one update. The parameters are left untouched when the
    /// gradient contains a NaN or infinity.
    pub fn step(&mut self, params: &mut [T], grad: &[T]) -> Result<(), OptimError> {
        if grad.len() != params.len() || params.len() != self.m.len() {
            return Err(OptimError::Size { got: grad.len(), want: self.m.len() });
        }
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(OptimError::NonFinite(i));
        }
        self.t += 1;
        let c = self.config;
        let b1 = T::from_f64_lossy(c.beta1);
        let b2 = T::from_f64_lossy(c.beta2);
        let one = T::one();
        let t = self.t as i32;
        let lr_t = T::from_f64_lossy(c.lr * (1.0 - c.beta2.powi(t)).sqrt() / (1.0 - c.beta1.powi(t)));
        let eps_t = T::from_f64_lossy(c.eps * (1.0 - c.beta2.powi(t)).sqrt());
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            *p -= lr_t * *m / (v.sqrt() + eps_t);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut opt = Adam::<f64>::new(AdamConfig { lr: 0.1, ..Default::default() }, 2);
        let mut p = vec![1.0, -1.0];
        opt.step(&mut p, &[3.0, -0.5]).unwrap();
        assert!((p[0] - 0.9).abs() < 1e-6);
        assert!((p[1] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut opt = Adam::<f64>::new(AdamConfig { lr: 0.05, ..Default::default() }, 1);
        let mut p = vec![4.0];
        for _ in 0..2000 {
            let g = [2.0 * (p[0] - 1.5)];
            opt.step(&mut p, &g).unwrap();
        }
        assert!((p[0] - 1.5).abs() < 1e-3);
    }

    #[test]
    fn rejects_nan() {
        let mut opt = Adam::<f32>::new(AdamConfig::default(), 2);
        let mut p = vec![1.0, 2.0];
        assert_eq!(opt.step(&mut p, &[0.0, f32::NAN]), Err(OptimError::NonFinite(1)));
        assert_eq!(p, vec![1.0, 2.0]);
        assert_eq!(opt.steps(), 0);
    }
}
