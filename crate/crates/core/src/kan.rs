//! The KAN layer: output `j` is the sum over inputs `i` of learnable
//! univariate edge functions
//!
//! ```text
//! phi_{j,i}(x) = base_w[j,i] * silu(x) + spline_w[j,i] * sum_r coeffs[j,i,r] * B_r(x)
//! ```
//!
//! with every edge sharing one B-spline grid. Inputs are clamped to the
//! grid domain before BOTH terms, so the whole edge function is constant
//! outside the domain (and its input gradient vanishes there); LayerNorm
//! upstream keeps activations inside the domain in practice.
//!
//! The silu base term can be disabled to get the pure-spline reading.

use crate::numerics::{Matrix, Rng};
use crate::scalar::Scalar;
use crate::spline::{SplineGrid, MAX_DEGREE};

/// Base-function choice for the edge functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseKind {
    Silu,
    None,
}

/// One KAN layer: `in_dim * out_dim` learnable univariate functions.
///
/// Coefficients are stored input-major (`[i][j][r]` flattened) so that the
/// forward pass streams contiguously over outputs; the public accessors
/// use the `(output j, input i)` order of the layer's logical matrix.
#[derive(Debug, Clone)]
pub struct KanLayer<S> {
    in_dim: usize,
    out_dim: usize,
    grid: SplineGrid<S>,
    num_coeff: usize,
    coeffs: Vec<S>,
    base_w: Vec<S>,
    spline_w: Vec<S>,
    base: BaseKind,
}

/// Gradients of a [`KanLayer`], same shapes and layouts as the layer.
#[derive(Debug, Clone)]
pub struct KanGrads<S> {
    pub coeffs: Vec<S>,
    pub base_w: Vec<S>,
    pub spline_w: Vec<S>,
}

/// Forward-pass byproducts needed by [`KanLayer::backward`].
#[derive(Debug, Clone)]
pub struct KanCache<S> {
    batch: usize,
    x_clamped: Vec<S>,
    inside: Vec<bool>,
    offsets: Vec<u32>,
    basis: Vec<S>,
}

#[inline]
fn silu<S: Scalar>(x: S) -> S {
    x / (S::one() + (-x).exp())
}

#[inline]
fn silu_deriv<S: Scalar>(x: S) -> S {
    let sig = S::one() / (S::one() + (-x).exp());
    sig * (S::one() + x * (S::one() - sig))
}

impl<S: Scalar> KanLayer<S> {
    /// Fresh layer with near-linear initialization: small uniform spline
    /// coefficients to break symmetry, `base_w ~ U(-1/sqrt(n), 1/sqrt(n))`,
    /// unit spline scale.
    pub fn new(in_dim: usize, out_dim: usize, grid: SplineGrid<S>, base: BaseKind, rng: &mut Rng) -> Self {
        assert!(in_dim > 0 && out_dim > 0, "kan: empty layer");
        let num_coeff = grid.num_basis();
        let edges = in_dim * out_dim;
        let coeffs = (0..edges * num_coeff)
            .map(|_| S::from_f64(rng.uniform(-0.1, 0.1)))
            .collect();
        let bound = 1.0 / (in_dim as f64).sqrt();
        let base_w = (0..edges)
            .map(|_| S::from_f64(rng.uniform(-bound, bound)))
            .collect();
        let spline_w = vec![S::one(); edges];
        KanLayer {
            in_dim,
            out_dim,
            grid,
            num_coeff,
            coeffs,
            base_w,
            spline_w,
            base,
        }
    }

    /// Layer from explicit parameter arrays in `(output, input)` order:
    /// `coeffs[j][i][r]`, `base_w[j][i]`, `spline_w[j][i]`.
    pub fn from_parts(
        in_dim: usize,
        out_dim: usize,
        grid: SplineGrid<S>,
        base: BaseKind,
        coeffs: &[S],
        base_w: &[S],
        spline_w: &[S],
    ) -> Self {
        let num_coeff = grid.num_basis();
        let edges = in_dim * out_dim;
        assert_eq!(coeffs.len(), edges * num_coeff, "kan: coeffs length");
        assert_eq!(base_w.len(), edges, "kan: base_w length");
        assert_eq!(spline_w.len(), edges, "kan: spline_w length");
        let mut layer = KanLayer {
            in_dim,
            out_dim,
            grid,
            num_coeff,
            coeffs: vec![S::zero(); edges * num_coeff],
            base_w: vec![S::zero(); edges],
            spline_w: vec![S::zero(); edges],
            base,
        };
        for j in 0..out_dim {
            for i in 0..in_dim {
                let e = i * out_dim + j;
                layer.base_w[e] = base_w[j * in_dim + i];
                layer.spline_w[e] = spline_w[j * in_dim + i];
                for r in 0..num_coeff {
                    layer.coeffs[e * num_coeff + r] = coeffs[(j * in_dim + i) * num_coeff + r];
                }
            }
        }
        layer
    }

    /// All-zero parameters (the zero function).
    pub fn zeros(in_dim: usize, out_dim: usize, grid: SplineGrid<S>, base: BaseKind) -> Self {
        let num_coeff = grid.num_basis();
        let edges = in_dim * out_dim;
        KanLayer {
            in_dim,
            out_dim,
            grid,
            num_coeff,
            coeffs: vec![S::zero(); edges * num_coeff],
            base_w: vec![S::zero(); edges],
            spline_w: vec![S::zero(); edges],
            base,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn grid(&self) -> &SplineGrid<S> {
        &self.grid
    }

    pub fn has_silu_base(&self) -> bool {
        self.base == BaseKind::Silu
    }

    /// Spline coefficient `r` of edge function `phi_{j,i}`.
    pub fn coeff(&self, j: usize, i: usize, r: usize) -> S {
        self.coeffs[(i * self.out_dim + j) * self.num_coeff + r]
    }

    pub fn base_weight(&self, j: usize, i: usize) -> S {
        self.base_w[i * self.out_dim + j]
    }

    pub fn spline_weight(&self, j: usize, i: usize) -> S {
        self.spline_w[i * self.out_dim + j]
    }

    /// Named views of the parameter arrays, in a stable order.
    pub fn params(&self) -> [(&'static str, &[S]); 3] {
        [
            ("coeffs", self.coeffs.as_slice()),
            ("base_w", self.base_w.as_slice()),
            ("spline_w", self.spline_w.as_slice()),
        ]
    }

    pub fn params_mut(&mut self) -> [(&'static str, &mut [S]); 3] {
        [
            ("coeffs", self.coeffs.as_mut_slice()),
            ("base_w", self.base_w.as_mut_slice()),
            ("spline_w", self.spline_w.as_mut_slice()),
        ]
    }

    pub fn zero_grads(&self) -> KanGrads<S> {
        KanGrads {
            coeffs: vec![S::zero(); self.coeffs.len()],
            base_w: vec![S::zero(); self.base_w.len()],
            spline_w: vec![S::zero(); self.spline_w.len()],
        }
    }

    /// Forward pass: `y[b][j] = sum_i phi_{j,i}(x[b][i])`.
    /// Panics if `x.cols() != in_dim`.
    pub fn forward(&self, x: &Matrix<S>) -> (Matrix<S>, KanCache<S>) {
        assert_eq!(
            x.cols(),
            self.in_dim,
            "kan forward: input has {} columns, layer expects {}",
            x.cols(),
            self.in_dim
        );
        let batch = x.rows();
        let (n, m, nc) = (self.in_dim, self.out_dim, self.num_coeff);
        let k1 = self.grid.degree() + 1;
        let (lo, hi) = self.grid.domain();
        let use_base = self.base == BaseKind::Silu;

        let mut out = Matrix::zeros(batch, m);
        let mut cache = KanCache {
            batch,
            x_clamped: vec![S::zero(); batch * n],
            inside: vec![false; batch * n],
            offsets: vec![0u32; batch * n],
            basis: vec![S::zero(); batch * n * k1],
        };
        let mut bvals = [S::zero(); MAX_DEGREE + 1];

        for b in 0..batch {
            let xrow = x.row(b);
            let yrow = out.row_mut(b);
            for (i, &xi) in xrow.iter().enumerate() {
                let slot = b * n + i;
                let xc = self.grid.clamp(xi);
                let off = self.grid.eval_active(xc, &mut bvals[..k1]);
                cache.x_clamped[slot] = xc;
                cache.inside[slot] = xi >= lo && xi <= hi;
                cache.offsets[slot] = off as u32;
                cache.basis[slot * k1..(slot + 1) * k1].copy_from_slice(&bvals[..k1]);

                let sil = if use_base { silu(xc) } else { S::zero() };
                let block = &self.coeffs[i * m * nc..(i + 1) * m * nc];
                let bw = &self.base_w[i * m..(i + 1) * m];
                let sw = &self.spline_w[i * m..(i + 1) * m];
                for j in 0..m {
                    let edge_coeffs = &block[j * nc + off..j * nc + off + k1];
                    let mut acc = S::zero();
                    for (&c, &bv) in edge_coeffs.iter().zip(&bvals[..k1]) {
                        acc += c * bv;
                    }
                    yrow[j] += bw[j] * sil + sw[j] * acc;
                }
            }
        }
        (out, cache)
    }

    /// Backward pass for the scalar objective `sum(d_out ⊙ y)`: exact
    /// gradients for the inputs and all three parameter arrays.
    /// Panics if the cache or `d_out` does not match this layer.
    pub fn backward(&self, cache: &KanCache<S>, d_out: &Matrix<S>) -> (Matrix<S>, KanGrads<S>) {
        let (n, m, nc) = (self.in_dim, self.out_dim, self.num_coeff);
        assert_eq!(d_out.cols(), m, "kan backward: d_out column mismatch");
        assert_eq!(d_out.rows(), cache.batch, "kan backward: batch mismatch");
        assert_eq!(
            cache.x_clamped.len(),
            cache.batch * n,
            "kan backward: cache belongs to a different layer shape"
        );
        let batch = cache.batch;
        let k1 = self.grid.degree() + 1;
        let use_base = self.base == BaseKind::Silu;

        let mut d_x = Matrix::zeros(batch, n);
        let mut grads = self.zero_grads();
        let mut dvals = [S::zero(); MAX_DEGREE + 1];
        let mut scratch = [S::zero(); MAX_DEGREE + 1];

        for b in 0..batch {
            let dyrow = d_out.row(b);
            let dxrow: &mut [S] = d_x.row_mut(b);
            for (i, dx_slot) in dxrow.iter_mut().enumerate() {
                let slot = b * n + i;
                let xc = cache.x_clamped[slot];
                let off = cache.offsets[slot] as usize;
                let bvals = &cache.basis[slot * k1..(slot + 1) * k1];
                self.grid
                    .eval_active_with_deriv(xc, &mut scratch[..k1], &mut dvals[..k1]);

                let (sil, dsil) = if use_base {
                    (silu(xc), silu_deriv(xc))
                } else {
                    (S::zero(), S::zero())
                };

                let block = &self.coeffs[i * m * nc..(i + 1) * m * nc];
                let gblock = &mut grads.coeffs[i * m * nc..(i + 1) * m * nc];
                let bw = &self.base_w[i * m..(i + 1) * m];
                let sw = &self.spline_w[i * m..(i + 1) * m];
                let gbw = &mut grads.base_w[i * m..(i + 1) * m];
                let gsw = &mut grads.spline_w[i * m..(i + 1) * m];

                let mut dxi = S::zero();
                for (j, &dy) in dyrow.iter().enumerate() {
                    let edge_coeffs = &block[j * nc + off..j * nc + off + k1];
                    let edge_grads = &mut gblock[j * nc + off..j * nc + off + k1];
                    let swj = sw[j];
                    let mut spline_val = S::zero();
                    let mut dspline_dx = S::zero();
                    for r in 0..k1 {
                        let bv = bvals[r];
                        spline_val += edge_coeffs[r] * bv;
                        dspline_dx += edge_coeffs[r] * dvals[r];
                        edge_grads[r] += dy * swj * bv;
                    }
                    gbw[j] += dy * sil;
                    gsw[j] += dy * spline_val;
                    dxi += dy * (bw[j] * dsil + swj * dspline_dx);
                }
                // clamp kills the input gradient outside the domain
                *dx_slot = if cache.inside[slot] { dxi } else { S::zero() };
            }
        }
        (d_x, grads)
    }
}

impl<S: Scalar> KanGrads<S> {
    pub fn params(&self) -> [(&'static str, &[S]); 3] {
        [
            ("coeffs", self.coeffs.as_slice()),
            ("base_w", self.base_w.as_slice()),
            ("spline_w", self.spline_w.as_slice()),
        ]
    }

    pub fn scale(&mut self, s: S) {
        for v in self
            .coeffs
            .iter_mut()
            .chain(&mut self.base_w)
            .chain(&mut self.spline_w)
        {
            *v *= s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_grad, grads_close, init_params, Init};
    use crate::reference::kan_forward_scalar;

    fn grid64() -> SplineGrid<f64> {
        SplineGrid::uniform(3, 5, -2.0, 2.0).unwrap()
    }

    fn random_layer(n: usize, m: usize, seed: u64) -> KanLayer<f64> {
        let mut rng = Rng::new(seed);
        KanLayer::new(n, m, grid64(), BaseKind::Silu, &mut rng)
    }

    fn random_input(batch: usize, n: usize, seed: u64) -> Matrix<f64> {
        let mut rng = Rng::new(seed);
        init_params(&mut rng, batch, n, Init::Uniform { bound: 1.5 })
    }

    #[test]
    fn zero_layer_maps_everything_to_zero() {
        let layer = KanLayer::zeros(3, 2, grid64(), BaseKind::Silu);
        let x = random_input(4, 3, 1);
        let (y, _) = layer.forward(&x);
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pure_base_edge_is_silu() {
        let grid = grid64();
        let nc = grid.num_basis();
        let layer = KanLayer::from_parts(
            1,
            1,
            grid,
            BaseKind::Silu,
            &vec![0.0; nc],
            &[1.0],
            &[0.0],
        );
        let x = Matrix::from_rows(&[vec![0.0], vec![0.7], vec![-1.2]]);
        let (y, _) = layer.forward(&x);
        assert_eq!(y.at(0, 0), 0.0); // silu(0) = 0 exactly
        assert!((y.at(1, 0) - 0.7 / (1.0 + (-0.7f64).exp())).abs() < 1e-15);
        assert!((y.at(2, 0) - (-1.2) / (1.0 + 1.2f64.exp())).abs() < 1e-15);
    }

    #[test]
    fn forward_matches_per_edge_scalar_oracle() {
        let layer = random_layer(3, 2, 42);
        let x = random_input(4, 3, 43);
        let (y, _) = layer.forward(&x);
        let oracle = kan_forward_scalar(&layer, &x);
        assert!(y.max_abs_diff(&oracle) < 1e-12);
    }

    #[test]
    fn forward_matches_oracle_on_many_random_instances() {
        for seed in 0..20u64 {
            let mut rng = Rng::new(900 + seed);
            let n = 1 + rng.below(8);
            let m = 1 + rng.below(8);
            let batch = 1 + rng.below(5);
            let base = if rng.below(2) == 0 { BaseKind::Silu } else { BaseKind::None };
            let layer = KanLayer::new(n, m, grid64(), base, &mut rng);
            let x = init_params(&mut rng, batch, n, Init::Uniform { bound: 2.5 });
            let (y, _) = layer.forward(&x);
            let oracle = kan_forward_scalar(&layer, &x);
            assert!(
                y.max_abs_diff(&oracle) < 1e-12,
                "seed {seed}: n={n} m={m} batch={batch}"
            );
        }
    }

    #[test]
    fn backward_zero_upstream_gives_zero_grads() {
        let layer = random_layer(3, 2, 5);
        let x = random_input(4, 3, 6);
        let (_, cache) = layer.forward(&x);
        let (dx, grads) = layer.backward(&cache, &Matrix::zeros(4, 2));
        assert!(dx.data().iter().all(|&v| v == 0.0));
        assert!(grads.coeffs.iter().all(|&v| v == 0.0));
        assert!(grads.base_w.iter().all(|&v| v == 0.0));
        assert!(grads.spline_w.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_is_linear_in_upstream() {
        let layer = random_layer(3, 2, 7);
        let x = random_input(4, 3, 8);
        let (_, cache) = layer.forward(&x);
        let dy = random_input(4, 2, 9);
        let mut dy2 = dy.clone();
        dy2.scale(2.0);
        let (dx1, mut g1) = layer.backward(&cache, &dy);
        let (dx2, g2) = layer.backward(&cache, &dy2);
        g1.scale(2.0);
        let mut dx1s = dx1;
        dx1s.scale(2.0);
        assert!(dx1s.max_abs_diff(&dx2) < 1e-12);
        for (a, b) in g1.coeffs.iter().zip(&g2.coeffs) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in g1.spline_w.iter().zip(&g2.spline_w) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    /// Finite-difference check of every parameter array and the input,
    /// for the objective sum(dY ⊙ forward(X)).
    #[test]
    fn gradients_match_finite_differences() {
        let n = 4;
        let m = 3;
        let batch = 2;
        let layer = random_layer(n, m, 11);
        let x = random_input(batch, n, 12);
        let dy = random_input(batch, m, 13);
        let (_, cache) = layer.forward(&x);
        let (dx, grads) = layer.backward(&cache, &dy);
        let eps = 1e-5;
        let objective = |l: &KanLayer<f64>, x: &Matrix<f64>| -> f64 {
            let (y, _) = l.forward(x);
            y.data().iter().zip(dy.data()).map(|(a, b)| a * b).sum()
        };

        // inputs
        let fd_x = finite_diff_grad(
            |p: &[f64]| {
                let xp = Matrix::from_vec(batch, n, p.to_vec());
                objective(&layer, &xp)
            },
            x.data(),
            eps,
        );
        for (a, f) in dx.data().iter().zip(&fd_x) {
            assert!(grads_close(*a, *f, 1e-4, 1e-8), "dX: {a} vs {f}");
        }

        // each parameter array, through the mutable registry
        for idx in 0..3 {
            let analytic: Vec<f64> = grads.params()[idx].1.to_vec();
            let base: Vec<f64> = layer.params()[idx].1.to_vec();
            let fd = finite_diff_grad(
                |p: &[f64]| {
                    let mut probe = layer.clone();
                    probe.params_mut()[idx].1.copy_from_slice(p);
                    objective(&probe, &x)
                },
                &base,
                eps,
            );
            let name = layer.params()[idx].0;
            for (a, f) in analytic.iter().zip(&fd) {
                assert!(grads_close(*a, *f, 1e-4, 1e-8), "{name}: {a} vs {f}");
            }
        }
    }

    #[test]
    fn output_permutation_permutes_parameter_rows() {
        let n = 3;
        let m = 4;
        let layer = random_layer(n, m, 21);
        let x = random_input(5, n, 22);
        let perm = [2usize, 0, 3, 1];

        let nc = layer.grid().num_basis();
        let mut coeffs = vec![0.0; m * n * nc];
        let mut base_w = vec![0.0; m * n];
        let mut spline_w = vec![0.0; m * n];
        for (jnew, &jold) in perm.iter().enumerate() {
            for i in 0..n {
                base_w[jnew * n + i] = layer.base_weight(jold, i);
                spline_w[jnew * n + i] = layer.spline_weight(jold, i);
                for r in 0..nc {
                    coeffs[(jnew * n + i) * nc + r] = layer.coeff(jold, i, r);
                }
            }
        }
        let permuted = KanLayer::from_parts(
            n,
            m,
            layer.grid().clone(),
            BaseKind::Silu,
            &coeffs,
            &base_w,
            &spline_w,
        );

        let (y, _) = layer.forward(&x);
        let (yp, _) = permuted.forward(&x);
        for b in 0..x.rows() {
            for (jnew, &jold) in perm.iter().enumerate() {
                assert_eq!(yp.at(b, jnew), y.at(b, jold));
            }
        }
    }

    /// Pins the documented clamping rule: both the spline term and the
    /// silu base see the clamped input, so the layer output at an
    /// out-of-domain input equals the output at the clamped input, and
    /// the input gradient vanishes there.
    #[test]
    fn clamp_rule_is_value_at_clamped_point() {
        let layer = random_layer(2, 3, 31);
        let (lo, hi) = layer.grid().domain();
        let x_out = Matrix::from_rows(&[vec![hi + 5.0, lo - 3.0]]);
        let x_edge = Matrix::from_rows(&[vec![hi, lo]]);
        let (y_out, cache) = layer.forward(&x_out);
        let (y_edge, _) = layer.forward(&x_edge);
        assert!(y_out.max_abs_diff(&y_edge) < 1e-15);

        let dy = Matrix::from_rows(&[vec![1.0, -2.0, 0.5]]);
        let (dx, _) = layer.backward(&cache, &dy);
        assert!(dx.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn f32_layer_matches_oracle_loosely() {
        let grid = SplineGrid::<f32>::uniform(3, 5, -2.0, 2.0).unwrap();
        let mut rng = Rng::new(77);
        let layer = KanLayer::<f32>::new(3, 2, grid, BaseKind::Silu, &mut rng);
        let x = Matrix::<f32>::from_fn(4, 3, |_, _| rng.uniform(-1.5, 1.5) as f32);
        let (y, _) = layer.forward(&x);
        let oracle = kan_forward_scalar(&layer, &x);
        assert!(y.max_abs_diff(&oracle) < 1e-5);
    }

    #[test]
    #[should_panic(expected = "column mismatch")]
    fn backward_rejects_mismatched_upstream() {
        let layer = random_layer(3, 2, 41);
        let x = random_input(4, 3, 42);
        let (_, cache) = layer.forward(&x);
        let _ = layer.backward(&cache, &Matrix::zeros(4, 5));
    }
}
