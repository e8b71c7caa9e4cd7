//! LayerNorm, dense layer, and ReLU with exact backward passes.

use crate::numerics::{Matrix, Rng};
use crate::scalar::Scalar;

pub const LAYERNORM_EPS: f64 = 1e-5;

/// Per-row layer normalization: standardize to mean 0 / population
/// variance 1 (plus eps), then apply the learnable affine map.
#[derive(Debug, Clone)]
pub struct LayerNorm<S> {
    gamma: Vec<S>,
    beta: Vec<S>,
    eps: S,
}

#[derive(Debug, Clone)]
pub struct LayerNormCache<S> {
    x_hat: Matrix<S>,
    rstd: Vec<S>,
}

#[derive(Debug, Clone)]
pub struct LayerNormGrads<S> {
    pub gamma: Vec<S>,
    pub beta: Vec<S>,
}

impl<S: Scalar> LayerNorm<S> {
    pub fn new(dim: usize) -> Self {
        LayerNorm {
            gamma: vec![S::one(); dim],
            beta: vec![S::zero(); dim],
            eps: S::from_f64(LAYERNORM_EPS),
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn params(&self) -> [(&'static str, &[S]); 2] {
        [("gamma", &self.gamma), ("beta", &self.beta)]
    }

    pub fn params_mut(&mut self) -> [(&'static str, &mut [S]); 2] {
        [("gamma", &mut self.gamma), ("beta", &mut self.beta)]
    }

    pub fn forward(&self, x: &Matrix<S>) -> (Matrix<S>, LayerNormCache<S>) {
        let d = self.gamma.len();
        assert_eq!(x.cols(), d, "layernorm: dim mismatch");
        let dn = S::from_usize(d);
        let mut out = Matrix::zeros(x.rows(), d);
        let mut x_hat = Matrix::zeros(x.rows(), d);
        let mut rstd = Vec::with_capacity(x.rows());
        for r in 0..x.rows() {
            let row = x.row(r);
            let mut mean = S::zero();
            for &v in row {
                mean += v;
            }
            mean /= dn;
            let mut var = S::zero();
            for &v in row {
                let c = v - mean;
                var += c * c;
            }
            var /= dn;
            let rs = S::one() / (var + self.eps).sqrt();
            rstd.push(rs);
            let hat_row: &mut [S] = x_hat.row_mut(r);
            for (c, &v) in row.iter().enumerate() {
                hat_row[c] = (v - mean) * rs;
            }
            let out_row: &mut [S] = out.row_mut(r);
            for c in 0..d {
                out_row[c] = hat_row[c] * self.gamma[c] + self.beta[c];
            }
        }
        (out, LayerNormCache { x_hat, rstd })
    }

    pub fn backward(
        &self,
        cache: &LayerNormCache<S>,
        d_out: &Matrix<S>,
    ) -> (Matrix<S>, LayerNormGrads<S>) {
        let d = self.gamma.len();
        assert_eq!(d_out.cols(), d, "layernorm backward: dim mismatch");
        assert_eq!(d_out.rows(), cache.x_hat.rows(), "layernorm backward: stale cache");
        let dn = S::from_usize(d);
        let mut d_x = Matrix::zeros(d_out.rows(), d);
        let mut grads = LayerNormGrads {
            gamma: vec![S::zero(); d],
            beta: vec![S::zero(); d],
        };
        for r in 0..d_out.rows() {
            let dy = d_out.row(r);
            let hat = cache.x_hat.row(r);
            let rs = cache.rstd[r];
            let mut dnorm_mean = S::zero();
            let mut dnorm_hat_mean = S::zero();
            for c in 0..d {
                let dnorm = dy[c] * self.gamma[c];
                dnorm_mean += dnorm;
                dnorm_hat_mean += dnorm * hat[c];
            }
            dnorm_mean /= dn;
            dnorm_hat_mean /= dn;
            let dx_row: &mut [S] = d_x.row_mut(r);
            for c in 0..d {
                let dnorm = dy[c] * self.gamma[c];
                grads.beta[c] += dy[c];
                grads.gamma[c] += dy[c] * hat[c];
                dx_row[c] = (dnorm - dnorm_mean - hat[c] * dnorm_hat_mean) * rs;
            }
        }
        (d_x, grads)
    }
}

/// Dense layer `y = x W + b` with `W` stored input-major (`in x out`).
#[derive(Debug, Clone)]
pub struct Dense<S> {
    w: Matrix<S>,
    b: Vec<S>,
}

#[derive(Debug, Clone)]
pub struct DenseCache<S> {
    x: Matrix<S>,
}

#[derive(Debug, Clone)]
pub struct DenseGrads<S> {
    pub w: Vec<S>,
    pub b: Vec<S>,
}

impl<S: Scalar> Dense<S> {
    pub fn new(in_dim: usize, out_dim: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        Dense {
            w: Matrix::from_fn(in_dim, out_dim, |_, _| S::from_f64(rng.uniform(-bound, bound))),
            b: vec![S::zero(); out_dim],
        }
    }

    pub fn from_parts(w: Matrix<S>, b: Vec<S>) -> Self {
        assert_eq!(w.cols(), b.len(), "dense: bias length");
        Dense { w, b }
    }

    pub fn in_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn params(&self) -> [(&'static str, &[S]); 2] {
        [("w", self.w.data()), ("b", &self.b)]
    }

    pub fn params_mut(&mut self) -> [(&'static str, &mut [S]); 2] {
        [("w", self.w.data_mut()), ("b", &mut self.b)]
    }

    pub fn forward(&self, x: &Matrix<S>) -> (Matrix<S>, DenseCache<S>) {
        let mut y = x.matmul(&self.w);
        for r in 0..y.rows() {
            let row: &mut [S] = y.row_mut(r);
            for (v, &b) in row.iter_mut().zip(&self.b) {
                *v += b;
            }
        }
        (y, DenseCache { x: x.clone() })
    }

    pub fn backward(&self, cache: &DenseCache<S>, d_out: &Matrix<S>) -> (Matrix<S>, DenseGrads<S>) {
        assert_eq!(d_out.rows(), cache.x.rows(), "dense backward: stale cache");
        assert_eq!(d_out.cols(), self.w.cols(), "dense backward: dim mismatch");
        let dw = cache.x.transpose().matmul(d_out);
        let mut db = vec![S::zero(); self.w.cols()];
        for r in 0..d_out.rows() {
            for (g, &v) in db.iter_mut().zip(d_out.row(r)) {
                *g += v;
            }
        }
        let dx = d_out.matmul(&self.w.transpose());
        (
            dx,
            DenseGrads {
                w: dw.data().to_vec(),
                b: db,
            },
        )
    }
}

#[derive(Debug, Clone)]
pub struct ReluCache<S> {
    x: Matrix<S>,
}

pub fn relu_forward<S: Scalar>(x: &Matrix<S>) -> (Matrix<S>, ReluCache<S>) {
    let mut y = x.clone();
    for v in y.data_mut() {
        if *v < S::zero() {
            *v = S::zero();
        }
    }
    (y, ReluCache { x: x.clone() })
}

/// Upstream gradient masked by `x > 0`; the subgradient at 0 is 0.
pub fn relu_backward<S: Scalar>(cache: &ReluCache<S>, d_out: &Matrix<S>) -> Matrix<S> {
    assert_eq!(
        (d_out.rows(), d_out.cols()),
        (cache.x.rows(), cache.x.cols()),
        "relu backward: shape mismatch"
    );
    let mut dx = d_out.clone();
    for (g, &x) in dx.data_mut().iter_mut().zip(cache.x.data()) {
        if x <= S::zero() {
            *g = S::zero();
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_grad, grads_close, init_params, Init};

    #[test]
    fn layernorm_constant_row_maps_near_zero() {
        let ln = LayerNorm::<f64>::new(4);
        let x = Matrix::from_rows(&[vec![3.7; 4]]);
        let (y, _) = ln.forward(&x);
        assert!(y.data().iter().all(|v| v.abs() < 1e-3));
    }

    #[test]
    fn layernorm_standardizes_rows() {
        let ln = LayerNorm::<f64>::new(5);
        let x = Matrix::from_rows(&[vec![1.0, -2.0, 0.5, 4.0, -1.5]]);
        let (y, _) = ln.forward(&x);
        let mean: f64 = y.row(0).iter().sum::<f64>() / 5.0;
        assert!(mean.abs() < 1e-12);
        let var: f64 = y.row(0).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0;
        assert!(var <= 1.0 + 1e-12);
        assert!(var > 1.0 - 1e-3);
    }

    #[test]
    fn layernorm_gradients_match_finite_differences() {
        let mut rng = Rng::new(3);
        let mut ln = LayerNorm::<f64>::new(4);
        for v in ln.params_mut()[0].1.iter_mut() {
            *v = rng.uniform(0.5, 1.5);
        }
        for v in ln.params_mut()[1].1.iter_mut() {
            *v = rng.uniform(-0.5, 0.5);
        }
        let x = init_params(&mut rng, 3, 4, Init::Uniform { bound: 2.0 });
        let dy = init_params(&mut rng, 3, 4, Init::Uniform { bound: 1.0 });
        let objective = |l: &LayerNorm<f64>, xm: &Matrix<f64>| -> f64 {
            let (y, _) = l.forward(xm);
            y.data().iter().zip(dy.data()).map(|(a, b)| a * b).sum()
        };
        let (_, cache) = ln.forward(&x);
        let (dx, grads) = ln.backward(&cache, &dy);

        let fd_x = finite_diff_grad(
            |p: &[f64]| objective(&ln, &Matrix::from_vec(3, 4, p.to_vec())),
            x.data(),
            1e-5,
        );
        for (a, f) in dx.data().iter().zip(&fd_x) {
            assert!(grads_close(*a, *f, 1e-4, 1e-8), "dx {a} vs {f}");
        }
        for (idx, analytic) in [&grads.gamma, &grads.beta].into_iter().enumerate() {
            let base: Vec<f64> = ln.params()[idx].1.to_vec();
            let fd = finite_diff_grad(
                |p: &[f64]| {
                    let mut probe = ln.clone();
                    probe.params_mut()[idx].1.copy_from_slice(p);
                    objective(&probe, &x)
                },
                &base,
                1e-5,
            );
            for (a, f) in analytic.iter().zip(&fd) {
                assert!(grads_close(*a, *f, 1e-4, 1e-8));
            }
        }
    }

    #[test]
    fn relu_basics() {
        let x = Matrix::from_rows(&[vec![-1.0, 0.0, 2.0]]);
        let (y, cache) = relu_forward(&x);
        assert_eq!(y.row(0), &[0.0, 0.0, 2.0]);
        let dy = Matrix::from_rows(&[vec![5.0, 5.0, 5.0]]);
        let dx = relu_backward(&cache, &dy);
        assert_eq!(dx.row(0), &[0.0, 0.0, 5.0]);
    }

    #[test]
    fn relu_gradient_matches_finite_differences_away_from_zero() {
        let mut rng = Rng::new(8);
        // keep probes away from the kink
        let x = Matrix::from_fn(2, 5, |_, _| {
            let v = rng.uniform(0.01, 2.0);
            if rng.next_f64() < 0.5 {
                v
            } else {
                -v
            }
        });
        let dy = init_params(&mut rng, 2, 5, Init::Uniform { bound: 1.0 });
        let (_, cache) = relu_forward(&x);
        let dx = relu_backward(&cache, &dy);
        let fd = finite_diff_grad(
            |p: &[f64]| {
                let (y, _) = relu_forward(&Matrix::from_vec(2, 5, p.to_vec()));
                y.data().iter().zip(dy.data()).map(|(a, b)| a * b).sum()
            },
            x.data(),
            1e-6,
        );
        for (a, f) in dx.data().iter().zip(&fd) {
            assert!(grads_close(*a, *f, 1e-4, 1e-8));
        }
    }

    #[test]
    fn dense_gradients_match_finite_differences() {
        let mut rng = Rng::new(4);
        let dense = Dense::<f64>::new(4, 3, &mut rng);
        let x = init_params(&mut rng, 2, 4, Init::Uniform { bound: 1.0 });
        let dy = init_params(&mut rng, 2, 3, Init::Uniform { bound: 1.0 });
        let (_, cache) = dense.forward(&x);
        let (dx, grads) = dense.backward(&cache, &dy);
        let objective = |d: &Dense<f64>, xm: &Matrix<f64>| -> f64 {
            let (y, _) = d.forward(xm);
            y.data().iter().zip(dy.data()).map(|(a, b)| a * b).sum()
        };
        let fd_x = finite_diff_grad(
            |p: &[f64]| objective(&dense, &Matrix::from_vec(2, 4, p.to_vec())),
            x.data(),
            1e-5,
        );
        for (a, f) in dx.data().iter().zip(&fd_x) {
            assert!(grads_close(*a, *f, 1e-4, 1e-8));
        }
        for (idx, analytic) in [&grads.w, &grads.b].into_iter().enumerate() {
            let base: Vec<f64> = dense.params()[idx].1.to_vec();
            let fd = finite_diff_grad(
                |p: &[f64]| {
                    let mut probe = dense.clone();
                    probe.params_mut()[idx].1.copy_from_slice(p);
                    objective(&probe, &x)
                },
                &base,
                1e-5,
            );
            for (a, f) in analytic.iter().zip(&fd) {
                assert!(grads_close(*a, *f, 1e-4, 1e-8));
            }
        }
    }
}
