//! Adam with bias correction, operating on the network's named parameter
//! registry.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First/second moment estimates for every parameter array, mirrored by
/// name and shape.
#[derive(Debug, Clone)]
pub struct AdamState<S> {
    names: Vec<String>,
    m: Vec<Vec<S>>,
    v: Vec<Vec<S>>,
    t: u64,
    beta1: S,
    beta2: S,
    eps: S,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(params: &[(String, &[S])]) -> Self {
        AdamState {
            names: params.iter().map(|(n, _)| n.clone()).collect(),
            m: params.iter().map(|(_, p)| vec![S::zero(); p.len()]).collect(),
            v: params.iter().map(|(_, p)| vec![S::zero(); p.len()]).collect(),
            t: 0,
            beta1: S::from_f64(ADAM_BETA1),
            beta2: S::from_f64(ADAM_BETA2),
            eps: S::from_f64(ADAM_EPS),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One Adam step over all parameter arrays. `params` and `grads` must
    /// be the registries the state was built from, in the same order.
    /// A non-finite gradient aborts the step and names the parameter.
    pub fn step(
        &mut self,
        params: &mut [(String, &mut [S])],
        grads: &[(String, &[S])],
        lr: S,
    ) -> Result<()> {
        assert_eq!(params.len(), self.names.len(), "adam: registry size changed");
        assert_eq!(grads.len(), self.names.len(), "adam: gradient registry size");
        // validate before mutating anything
        for (idx, name) in self.names.iter().enumerate() {
            assert_eq!(&params[idx].0, name, "adam: parameter order changed");
            assert_eq!(&grads[idx].0, name, "adam: gradient order changed");
            assert_eq!(params[idx].1.len(), self.m[idx].len(), "adam: shape changed");
            assert_eq!(grads[idx].1.len(), self.m[idx].len(), "adam: gradient shape");
            if grads[idx].1.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite(format!("gradient of parameter '{name}'")));
            }
        }
        self.t += 1;
        let t = self.t as i32;
        let bc1 = S::one() - self.beta1.powi(t);
        let bc2 = S::one() - self.beta2.powi(t);
        let one = S::one();
        for idx in 0..self.names.len() {
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            let p = &mut *params[idx].1;
            let g = grads[idx].1;
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = self.beta1 * m[i] + (one - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (one - self.beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
