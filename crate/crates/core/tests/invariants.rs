//! Property tests for the mathematical invariants: partition of unity,
//! spline locality, silhouette geometry invariances, and aggregation
//! against the dense oracle.

use proptest::prelude::*;

use graphkan::graph::{normalize, Graph};
use graphkan::metrics::silhouette;
use graphkan::numerics::{Matrix, Rng};
use graphkan::reference::aggregate_dense;
use graphkan::spline::SplineGrid;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn basis_is_a_partition_of_unity(
        degree in 0usize..=4,
        intervals in 1usize..=9,
        x in -3.0f64..3.0,
    ) {
        let grid = SplineGrid::uniform(degree, intervals, -2.0, 2.0).unwrap();
        let basis = grid.basis(x);
        let sum: f64 = basis.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12, "sum {} at x={}", sum, x);
        for (i, v) in basis.iter().enumerate() {
            prop_assert!(*v >= 0.0);
            let supported = grid.knots()[i] <= grid.clamp(x)
                && grid.clamp(x) <= grid.knots()[i + degree + 1];
            if !supported {
                prop_assert_eq!(*v, 0.0, "basis {} outside support at x={}", i, x);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn silhouette_is_invariant_to_rigid_motion_and_scale(
        seed in 0u64..1000,
        shift in -50.0f64..50.0,
        scale in 0.1f64..10.0,
    ) {
        let mut rng = Rng::new(seed);
        let n = 24;
        let d = 4;
        let features = Matrix::from_fn(n, d, |_, _| rng.uniform(-2.0, 2.0));
        let labels: Vec<Option<u32>> = (0..n).map(|i| Some((i % 3) as u32)).collect();
        let mask = vec![true; n];
        let base = silhouette(&features, &labels, &mask).unwrap();

        // random rotation via Gram-Schmidt of a Gaussian matrix
        let q = random_orthogonal(d, seed ^ 0xABCD);
        let rotated = features.matmul(&q);
        let rot = silhouette(&rotated, &labels, &mask).unwrap();
        prop_assert!((base.mean - rot.mean).abs() < 1e-9, "rotation changed {} -> {}", base.mean, rot.mean);

        let mut moved = features.clone();
        for v in moved.data_mut() {
            *v = *v * scale + shift;
        }
        let ms = silhouette(&moved, &labels, &mask).unwrap();
        prop_assert!((base.mean - ms.mean).abs() < 1e-9, "scale+shift changed {} -> {}", base.mean, ms.mean);
    }
}

fn random_orthogonal(d: usize, seed: u64) -> Matrix<f64> {
    let mut rng = Rng::new(seed);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        for c in &cols {
            let dot: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            for (vi, ci) in v.iter_mut().zip(c) {
                *vi -= dot * ci;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            for vi in &mut v {
                *vi /= norm;
            }
            cols.push(v);
        }
    }
    Matrix::from_fn(d, d, |r, c| cols[c][r])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn aggregation_matches_dense_oracle_on_random_graphs(
        seed in 0u64..10_000,
        n in 2usize..=20,
        self_loops in proptest::bool::ANY,
    ) {
        let mut rng = Rng::new(seed);
        let mut edges = Vec::new();
        for u in 0..n as u32 {
            for w in (u + 1)..n as u32 {
                if rng.next_f64() < 0.35 {
                    edges.push((u, w));
                }
            }
        }
        // connect stragglers so degree > 0 without self-loops
        let mut degree = vec![0usize; n];
        for &(u, w) in &edges {
            degree[u as usize] += 1;
            degree[w as usize] += 1;
        }
        for v in 0..n {
            if degree[v] == 0 {
                let w = if v == 0 { 1 } else { 0 };
                edges.push(((v.min(w)) as u32, (v.max(w)) as u32));
                degree[v] += 1;
                degree[w] += 1;
            }
        }
        let features = Matrix::from_fn(n, 3, |_, _| rng.uniform(-2.0, 2.0));
        let g = Graph::new(
            n,
            features,
            edges,
            vec![Some(0); n],
            vec![false; n],
            vec![false; n],
            vec![false; n],
            None,
        ).unwrap();
        let adj = normalize(&g, self_loops).unwrap();
        let fast = adj.aggregate(g.features());
        let dense = aggregate_dense(&g, self_loops, g.features());
        prop_assert!(fast.max_abs_diff(&dense) < 1e-12);

        // symmetry of the normalized coefficients
        for v in 0..n {
            for (w, c) in adj.neighbors(v) {
                prop_assert_eq!(adj.coeff(w, v), Some(c));
            }
        }
    }
}
