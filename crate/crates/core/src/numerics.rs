//! Dense matrix arithmetic, deterministic RNG, parameter initialization,
//! and the finite-difference gradient oracle used by every gradient test.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Dense row-major matrix. A batch of nodes is stored as rows, so row `b`
/// is the feature vector of node `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    /// Builds a matrix from a flat row-major buffer.
    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "matrix: {} values for a {}x{} shape",
            data.len(),
            rows,
            cols
        );
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "matrix: ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |r, c| if r == c { S::one() } else { S::zero() })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> S {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: S) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [S] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    /// Standard matrix product. Panics on inner-dimension mismatch.
    pub fn matmul(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!(
            self.cols, other.rows,
            "matmul: inner dimensions differ ({}x{} . {}x{})",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Matrix::zeros(self.rows, other.cols);
        // ikj order: the inner loop streams over contiguous rows of
        // `other` and `out`.
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row: &mut [S] = out.row_mut(i);
            for (k, &a_ik) in a_row.iter().enumerate() {
                let b_row = other.row(k);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a_ik * b;
                }
            }
        }
        debug_assert!(out.data.iter().all(|v| v.is_finite()), "matmul: non-finite output");
        out
    }

    pub fn transpose(&self) -> Matrix<S> {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.at(c, r))
    }

    /// Elementwise `self += other`. Panics on shape mismatch.
    pub fn add_assign(&mut self, other: &Matrix<S>) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add: shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: S) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// Copies the rows selected by `mask` into a new matrix, preserving order.
    pub fn select_rows(&self, mask: &[bool]) -> Matrix<S> {
        assert_eq!(mask.len(), self.rows, "select_rows: mask length mismatch");
        let picked: Vec<&[S]> = mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| self.row(i))
            .collect();
        let mut data = Vec::with_capacity(picked.len() * self.cols);
        for r in picked.iter() {
            data.extend_from_slice(r);
        }
        Matrix {
            rows: picked.len(),
            cols: self.cols,
            data,
        }
    }

    /// Splits columns into `[0, at)` and `[at, cols)`.
    pub fn split_cols(&self, at: usize) -> (Matrix<S>, Matrix<S>) {
        assert!(at <= self.cols, "split_cols: {at} > {}", self.cols);
        let mut left = Matrix::zeros(self.rows, at);
        let mut right = Matrix::zeros(self.rows, self.cols - at);
        for r in 0..self.rows {
            let row = self.row(r);
            left.row_mut(r).copy_from_slice(&row[..at]);
            right.row_mut(r).copy_from_slice(&row[at..]);
        }
        (left, right)
    }

    /// Horizontal concatenation `[self | other]`. Panics on row mismatch.
    pub fn hcat(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.rows, other.rows, "hcat: row mismatch");
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        Matrix {
            rows: self.rows,
            cols,
            data,
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix<S>) -> S {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "diff: shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(S::zero(), S::max)
    }
}

/// Parameter initialization rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// i.i.d. uniform on (-bound, bound).
    Uniform { bound: f64 },
    Zeros,
}

/// Draws a freshly initialized parameter matrix.
pub fn init_params<S: Scalar>(rng: &mut Rng, rows: usize, cols: usize, rule: Init) -> Matrix<S> {
    assert!(rows > 0 && cols > 0, "init_params: empty shape");
    match rule {
        Init::Zeros => Matrix::zeros(rows, cols),
        Init::Uniform { bound } => {
            Matrix::from_fn(rows, cols, |_, _| S::from_f64(rng.uniform(-bound, bound)))
        }
    }
}

/// xoshiro256++ seeded through SplitMix64.
///
/// The generator is pinned so that a seed identifies the exact same draw
/// stream in every build: trial results are bit-reproducible. Gaussian
/// draws use Box-Muller with the spare value cached.
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let mut s = [0u64; 4];
        for slot in &mut s {
            *slot = splitmix64(&mut sm);
        }
        Rng {
            s,
            spare_normal: None,
        }
    }

    /// Independent stream `stream` of the given seed. Used to give the
    /// split, the model init, and the data generator their own streams so
    /// that consuming one never shifts another.
    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut sm = seed ^ stream.wrapping_mul(0x9e3779b97f4a7c15);
        let mut s = [0u64; 4];
        for slot in &mut s {
            *slot = splitmix64(&mut sm);
        }
        Rng {
            s,
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform on [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal draw (Box-Muller).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.next_f64(); // (0, 1]
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Uniform index in [0, n). Widening-multiply map; the bias is far
    /// below anything observable at benchmark sizes.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Central-difference gradient of a scalar function: coordinate `i` gets
/// `(f(x + eps e_i) - f(x - eps e_i)) / (2 eps)`.
///
/// Panics if `f` returns a non-finite value; every gradient check depends
/// on this oracle, so a silent NaN here would poison all of them.
pub fn finite_diff_grad<S: Scalar>(f: impl Fn(&[S]) -> S, x: &[S], eps: S) -> Vec<S> {
    assert!(eps > S::zero(), "finite_diff_grad: eps must be positive");
    let two_eps = eps + eps;
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + eps;
        let fp = f(&probe);
        probe[i] = orig - eps;
        let fm = f(&probe);
        probe[i] = orig;
        assert!(
            fp.is_finite() && fm.is_finite(),
            "finite_diff_grad: non-finite function value at coordinate {i}"
        );
        grad.push((fp - fm) / two_eps);
    }
    grad
}

/// `|a - b| / max(|a|, |b|)` with the denominator floored at `floor`.
pub fn rel_err<S: Scalar>(a: S, b: S, floor: S) -> S {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Gradient-check pass rule: absolute agreement below `atol`, or relative
/// error below `rtol`.
pub fn grads_close<S: Scalar>(a: S, b: S, rtol: S, atol: S) -> bool {
    let diff = (a - b).abs();
    diff < atol || diff / a.abs().max(b.abs()) < rtol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::matmul_naive;

    #[test]
    fn matmul_identity() {
        let a = Matrix::<f64>::identity(2);
        let b = Matrix::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0]]);
        assert_eq!(a.matmul(&b), b);
    }

    #[test]
    fn matmul_hand_computed() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let b = Matrix::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0]]);
        let expect = Matrix::from_rows(&[vec![19.0, 22.0], vec![43.0, 50.0]]);
        assert_eq!(a.matmul(&b), expect);
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let mut rng = Rng::new(11);
        let a: Matrix<f64> = init_params(&mut rng, 5, 4, Init::Uniform { bound: 1.0 });
        let b: Matrix<f64> = init_params(&mut rng, 4, 3, Init::Uniform { bound: 1.0 });
        let got = a.matmul(&b);
        let want = matmul_naive(&a, &b);
        assert!(got.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    #[should_panic(expected = "inner dimensions differ")]
    fn matmul_dimension_mismatch_panics() {
        let a = Matrix::<f64>::zeros(2, 3);
        let b = Matrix::<f64>::zeros(2, 3);
        let _ = a.matmul(&b);
    }

    #[test]
    fn matmul_associativity_on_random_triples() {
        let mut rng = Rng::new(7);
        for _ in 0..10 {
            let a: Matrix<f64> = init_params(&mut rng, 4, 6, Init::Uniform { bound: 1.0 });
            let b: Matrix<f64> = init_params(&mut rng, 6, 5, Init::Uniform { bound: 1.0 });
            let c: Matrix<f64> = init_params(&mut rng, 5, 3, Init::Uniform { bound: 1.0 });
            let left = a.matmul(&b).matmul(&c);
            let right = a.matmul(&b.matmul(&c));
            for (l, r) in left.data().iter().zip(right.data()) {
                assert!(rel_err(*l, *r, 1e-12) < 1e-9, "associativity violated: {l} vs {r}");
            }
        }
    }

    #[test]
    fn init_zeros_rule() {
        let mut rng = Rng::new(1);
        let m: Matrix<f64> = init_params(&mut rng, 2, 3, Init::Zeros);
        assert!(m.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_uniform_statistics() {
        let mut rng = Rng::new(3);
        let m: Matrix<f64> = init_params(&mut rng, 1000, 10, Init::Uniform { bound: 0.1 });
        let max_abs = m.data().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        assert!(max_abs <= 0.1);
        let mean = m.data().iter().sum::<f64>() / m.data().len() as f64;
        // sd of the mean of 10^4 U(-0.1, 0.1) draws: 0.1/sqrt(3) / 100
        let three_sigma = 3.0 * 0.1 / 3.0f64.sqrt() / 100.0;
        assert!(mean.abs() < three_sigma, "sample mean {mean} outside 3 sigma");
    }

    #[test]
    fn init_same_seed_identical() {
        let a: Matrix<f64> =
            init_params(&mut Rng::new(42), 4, 4, Init::Uniform { bound: 0.5 });
        let b: Matrix<f64> =
            init_params(&mut Rng::new(42), 4, 4, Init::Uniform { bound: 0.5 });
        assert_eq!(a, b);
    }

    #[test]
    fn rng_streams_equal_seed_equal_stream() {
        let mut a = Rng::new(123);
        let mut b = Rng::new(123);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn rng_streams_differ_across_seeds() {
        let mut a = Rng::new(123);
        let mut b = Rng::new(124);
        let same = (0..1000).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn rng_derived_streams_are_independent() {
        let mut a = Rng::derive(9, 1);
        let mut b = Rng::derive(9, 2);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn finite_diff_on_square() {
        let g = finite_diff_grad(|x: &[f64]| x[0] * x[0], &[3.0], 1e-5);
        assert!((g[0] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn finite_diff_on_constant() {
        let g = finite_diff_grad(|_: &[f64]| 4.5, &[1.0, 2.0, 3.0], 1e-5);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    #[should_panic(expected = "non-finite")]
    fn finite_diff_rejects_non_finite() {
        let _ = finite_diff_grad(|x: &[f64]| x[0].ln(), &[0.0], 1e-5);
    }
}
