//! Deliberately naive reference implementations.
//!
//! Each function here recomputes a result that the optimized modules also
//! produce, through the most literal formulation available: triple-loop
//! matrix products, textbook Cox-de Boor recursion, dense-matrix
//! aggregation, a per-edge scalar KAN forward, and a second silhouette.
//! They share no code with the production paths, so agreement between the
//! two is evidence rather than tautology. The verification tests and the
//! `gradcheck` command both lean on them; none of them is fast.

use crate::graph::{Graph, NormAdjacency};
use crate::kan::KanLayer;
use crate::numerics::Matrix;
use crate::scalar::Scalar;
use crate::spline::SplineGrid;

/// Triple-loop matrix product.
pub fn matmul_naive<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>) -> Matrix<S> {
    assert_eq!(a.cols(), b.rows());
    let mut out = Matrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc = S::zero();
            for k in 0..a.cols() {
                acc += a.at(i, k) * b.at(k, j);
            }
            out.set(i, j, acc);
        }
    }
    out
}

/// Value of the `i`-th B-spline basis function of degree `k` on `knots`,
/// by direct recursion. Intervals are half-open except the last one of
/// the whole knot vector's interior, which is closed so that the basis
/// still sums to one at the right end of the domain.
pub fn bspline_basis_naive(knots: &[f64], i: usize, k: usize, x: f64, last_interior: usize) -> f64 {
    if k == 0 {
        let inside = if i == last_interior {
            knots[i] <= x && x <= knots[i + 1]
        } else if i > last_interior {
            // intervals at/beyond the domain's right end must not also
            // claim x == b
            knots[i] < x && x < knots[i + 1]
        } else {
            knots[i] <= x && x < knots[i + 1]
        };
        return if inside { 1.0 } else { 0.0 };
    }
    let mut value = 0.0;
    let denom_l = knots[i + k] - knots[i];
    if denom_l != 0.0 {
        value += (x - knots[i]) / denom_l * bspline_basis_naive(knots, i, k - 1, x, last_interior);
    }
    let denom_r = knots[i + k + 1] - knots[i + 1];
    if denom_r != 0.0 {
        value += (knots[i + k + 1] - x) / denom_r
            * bspline_basis_naive(knots, i + 1, k - 1, x, last_interior);
    }
    value
}

/// Full basis vector for a grid, evaluated by the recursion above.
/// The input is clamped to the grid domain first, matching the
/// production contract.
pub fn basis_naive<S: Scalar>(grid: &SplineGrid<S>, x: S) -> Vec<f64> {
    let knots: Vec<f64> = grid.knots().iter().map(|&t| t.to_f64()).collect();
    let k = grid.degree();
    let xc = x
        .to_f64()
        .clamp(grid.domain().0.to_f64(), grid.domain().1.to_f64());
    // index of [t_{G+k-1}, t_{G+k}], the right-most interior interval
    let last_interior = grid.intervals() + k - 1;
    (0..grid.num_basis())
        .map(|i| bspline_basis_naive(&knots, i, k, xc, last_interior))
        .collect()
}

/// Per-edge scalar KAN forward: loops over (batch row, output, input) and
/// evaluates each univariate edge function independently via the naive
/// basis recursion.
pub fn kan_forward_scalar<S: Scalar>(layer: &KanLayer<S>, x: &Matrix<S>) -> Matrix<S> {
    assert_eq!(x.cols(), layer.in_dim());
    let mut out = Matrix::zeros(x.rows(), layer.out_dim());
    for b in 0..x.rows() {
        for j in 0..layer.out_dim() {
            let mut acc = 0.0;
            for i in 0..layer.in_dim() {
                acc += phi_scalar(layer, j, i, x.at(b, i).to_f64());
            }
            out.set(b, j, S::from_f64(acc));
        }
    }
    out
}

/// One edge function phi_{j,i}(x) evaluated in f64.
fn phi_scalar<S: Scalar>(layer: &KanLayer<S>, j: usize, i: usize, x: f64) -> f64 {
    let grid = layer.grid();
    let (lo, hi) = (grid.domain().0.to_f64(), grid.domain().1.to_f64());
    let xc = x.clamp(lo, hi);
    let basis = basis_naive(grid, S::from_f64(x));
    let mut spline = 0.0;
    for (r, bval) in basis.iter().enumerate() {
        spline += layer.coeff(j, i, r).to_f64() * bval;
    }
    let base = if layer.has_silu_base() {
        xc / (1.0 + (-xc).exp())
    } else {
        0.0
    };
    layer.base_weight(j, i).to_f64() * base + layer.spline_weight(j, i).to_f64() * spline
}

/// Dense-matrix aggregation oracle: builds D^{-1/2} (A[+I]) D^{-1/2}
/// explicitly and multiplies.
pub fn aggregate_dense<S: Scalar>(
    graph: &Graph<S>,
    self_loops: bool,
    h: &Matrix<S>,
) -> Matrix<S> {
    let n = graph.n_nodes();
    assert_eq!(h.rows(), n);
    let mut adj = vec![vec![0.0f64; n]; n];
    for &(u, w) in graph.edges() {
        adj[u as usize][w as usize] = 1.0;
        adj[w as usize][u as usize] = 1.0;
    }
    if self_loops {
        for (v, row) in adj.iter_mut().enumerate() {
            row[v] = 1.0;
        }
    }
    let deg: Vec<f64> = adj.iter().map(|row| row.iter().sum()).collect();
    let mut out = Matrix::zeros(n, h.cols());
    for v in 0..n {
        for w in 0..n {
            if adj[v][w] == 0.0 {
                continue;
            }
            let coeff = 1.0 / (deg[v] * deg[w]).sqrt();
            for c in 0..h.cols() {
                let cur = out.at(v, c);
                out.set(v, c, cur + S::from_f64(coeff) * h.at(w, c));
            }
        }
    }
    out
}

/// Aggregation through an already-normalized adjacency, dense style.
pub fn aggregate_from_norm<S: Scalar>(adj: &NormAdjacency<S>, h: &Matrix<S>) -> Matrix<S> {
    let n = adj.n_nodes();
    let mut out = Matrix::zeros(n, h.cols());
    for v in 0..n {
        for (w, coeff) in adj.neighbors(v) {
            for c in 0..h.cols() {
                let cur = out.at(v, c);
                out.set(v, c, cur + coeff * h.at(w, c));
            }
        }
    }
    out
}

/// Row-wise layer normalization with population variance, the literal
/// formula without cached statistics.
pub fn layernorm_rows_naive<S: Scalar>(
    x: &Matrix<S>,
    gamma: &[S],
    beta: &[S],
    eps: f64,
) -> Matrix<S> {
    assert_eq!(x.cols(), gamma.len());
    let d = x.cols() as f64;
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for r in 0..x.rows() {
        let row: Vec<f64> = x.row(r).iter().map(|&v| v.to_f64()).collect();
        let mean = row.iter().sum::<f64>() / d;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d;
        let denom = (var + eps).sqrt();
        for c in 0..x.cols() {
            let norm = (row[c] - mean) / denom;
            out.set(
                r,
                c,
                S::from_f64(norm * gamma[c].to_f64() + beta[c].to_f64()),
            );
        }
    }
    out
}

/// Independent silhouette: loops clusters directly instead of
/// accumulating per-class sums. Degenerate points (singleton class, or
/// a == b == 0) score zero, matching the production rule.
pub fn silhouette_naive<S: Scalar>(features: &Matrix<S>, labels: &[usize]) -> f64 {
    assert_eq!(features.rows(), labels.len());
    let n = features.rows();
    let classes: Vec<usize> = {
        let mut cs: Vec<usize> = labels.to_vec();
        cs.sort_unstable();
        cs.dedup();
        cs
    };
    let dist = |a: usize, b: usize| -> f64 {
        features
            .row(a)
            .iter()
            .zip(features.row(b))
            .map(|(&x, &y)| (x.to_f64() - y.to_f64()).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut total = 0.0;
    for i in 0..n {
        let own = labels[i];
        let own_members: Vec<usize> = (0..n).filter(|&j| labels[j] == own).collect();
        if own_members.len() < 2 {
            continue; // singleton scores 0
        }
        let a = own_members
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| dist(i, j))
            .sum::<f64>()
            / (own_members.len() - 1) as f64;
        let b = classes
            .iter()
            .filter(|&&c| c != own)
            .map(|&c| {
                let members: Vec<usize> = (0..n).filter(|&j| labels[j] == c).collect();
                members.iter().map(|&j| dist(i, j)).sum::<f64>() / members.len() as f64
            })
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    total / n as f64
}
