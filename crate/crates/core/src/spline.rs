//! B-spline basis evaluation and differentiation on a uniform knot grid.
//!
//! Every learnable univariate function in a KAN layer is a weighted sum of
//! the `G + k` basis functions defined here (`G` grid intervals, degree
//! `k`). The production evaluator locates the active knot span and runs
//! the de Boor triangular recurrence over the `k + 1` functions that are
//! nonzero there; [`crate::reference::basis_naive`] re-derives the same
//! values by direct recursion for cross-checking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Degrees above this are rejected at construction; the active-basis
/// evaluators use fixed stack buffers of this size.
pub const MAX_DEGREE: usize = 10;

/// Uniform B-spline grid on `[lo, hi]`: `intervals` equal spans extended
/// by `degree` steps on each side, defining `intervals + degree` basis
/// functions that are non-negative, locally supported, and sum to one on
/// the domain.
///
/// Inputs outside the domain are clamped before evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineGrid<S> {
    degree: usize,
    intervals: usize,
    lo: S,
    hi: S,
    knots: Vec<S>,
}

impl<S: Scalar> SplineGrid<S> {
    pub fn uniform(degree: usize, intervals: usize, lo: S, hi: S) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::Config("spline: need at least one grid interval".into()));
        }
        if degree > MAX_DEGREE {
            return Err(Error::Config(format!(
                "spline: degree {degree} exceeds the supported maximum {MAX_DEGREE}"
            )));
        }
        if lo >= hi || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!(
                "spline: invalid domain [{lo}, {hi}]"
            )));
        }
        let step = (hi - lo) / S::from_usize(intervals);
        let knots = (0..intervals + 2 * degree + 1)
            .map(|i| lo + step * (S::from_usize(i) - S::from_usize(degree)))
            .collect();
        Ok(SplineGrid {
            degree,
            intervals,
            lo,
            hi,
            knots,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn domain(&self) -> (S, S) {
        (self.lo, self.hi)
    }

    pub fn knots(&self) -> &[S] {
        &self.knots
    }

    /// Number of basis functions: `intervals + degree`.
    pub fn num_basis(&self) -> usize {
        self.intervals + self.degree
    }

    #[inline]
    pub fn clamp(&self, x: S) -> S {
        x.max(self.lo).min(self.hi)
    }

    /// Index of the knot span containing the (clamped) input: the unique
    /// `s` with `knots[s] <= x < knots[s+1]`, with `x = hi` assigned to
    /// the last interior span.
    #[inline]
    pub fn find_span(&self, x_clamped: S) -> usize {
        let step = (self.hi - self.lo) / S::from_usize(self.intervals);
        let raw = ((x_clamped - self.lo) / step).to_f64() as usize;
        raw.min(self.intervals - 1) + self.degree
    }

    /// Evaluates the `degree + 1` basis functions active at `x` (after
    /// clamping) into `vals`, returning the index of the first one in the
    /// full basis vector.
    ///
    /// `vals.len()` must be exactly `degree + 1`.
    pub fn eval_active(&self, x: S, vals: &mut [S]) -> usize {
        let k = self.degree;
        debug_assert_eq!(vals.len(), k + 1);
        let xc = self.clamp(x);
        let span = self.find_span(xc);
        self.basis_funs(span, xc, k, vals);
        span - k
    }

    /// Active basis values and their first derivatives in one pass.
    /// Both slices must have length `degree + 1`. Returns the first
    /// active index.
    pub fn eval_active_with_deriv(&self, x: S, vals: &mut [S], derivs: &mut [S]) -> usize {
        let k = self.degree;
        debug_assert_eq!(vals.len(), k + 1);
        debug_assert_eq!(derivs.len(), k + 1);
        let xc = self.clamp(x);
        let span = self.find_span(xc);
        self.basis_funs(span, xc, k, vals);
        if k == 0 {
            derivs[0] = S::zero();
            return span;
        }
        // Degree k-1 row on the same span: functions span-k+1 .. span.
        let mut lower = [S::zero(); MAX_DEGREE + 1];
        self.basis_funs(span, xc, k - 1, &mut lower[..k]);
        // N'_{i,k} = k * ( N_{i,k-1}/(t_{i+k}-t_i) - N_{i+1,k-1}/(t_{i+k+1}-t_{i+1}) )
        let kf = S::from_usize(k);
        for r in 0..=k {
            let i = span - k + r;
            let mut d = S::zero();
            if r > 0 {
                d += lower[r - 1] / (self.knots[i + k] - self.knots[i]);
            }
            if r < k {
                d -= lower[r] / (self.knots[i + k + 1] - self.knots[i + 1]);
            }
            derivs[r] = kf * d;
        }
        span - k
    }

    /// The de Boor triangular recurrence: fills `out[0..=deg]` with
    /// `N_{span-deg..span, deg}(x)`.
    fn basis_funs(&self, span: usize, x: S, deg: usize, out: &mut [S]) {
        let mut left = [S::zero(); MAX_DEGREE + 1];
        let mut right = [S::zero(); MAX_DEGREE + 1];
        out[0] = S::one();
        for j in 1..=deg {
            left[j] = x - self.knots[span + 1 - j];
            right[j] = self.knots[span + j] - x;
            let mut saved = S::zero();
            for r in 0..j {
                let temp = out[r] / (right[r + 1] + left[j - r]);
                out[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            out[j] = saved;
        }
    }

    /// Full basis vector of length [`num_basis`](Self::num_basis); at most
    /// `degree + 1` entries are nonzero.
    pub fn basis(&self, x: S) -> Vec<S> {
        let k = self.degree;
        let mut active = [S::zero(); MAX_DEGREE + 1];
        let offset = self.eval_active(x, &mut active[..=k]);
        let mut out = vec![S::zero(); self.num_basis()];
        out[offset..=offset + k].copy_from_slice(&active[..=k]);
        out
    }

    /// Full derivative vector; at clamped points this is the one-sided
    /// derivative into the domain.
    pub fn basis_deriv(&self, x: S) -> Vec<S> {
        let k = self.degree;
        let mut vals = [S::zero(); MAX_DEGREE + 1];
        let mut ders = [S::zero(); MAX_DEGREE + 1];
        let offset = self.eval_active_with_deriv(x, &mut vals[..=k], &mut ders[..=k]);
        let mut out = vec![S::zero(); self.num_basis()];
        out[offset..=offset + k].copy_from_slice(&ders[..=k]);
        out
    }
}
