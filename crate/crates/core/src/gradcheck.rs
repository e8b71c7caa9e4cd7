//! The assembled gradient-check suite: every analytic backward pass in
//! the crate against the central finite-difference oracle.
//!
//! One unified error metric makes the pass rule printable:
//! `err = |a - b| / (floor + max(|a|, |b|))` with `floor = atol / rtol`,
//! so `err < rtol` is exactly "absolute difference below atol, or
//! relative error below rtol".

use std::time::Instant;

use crate::graph::{normalize, Graph, NormAdjacency};
use crate::kan::{BaseKind, KanLayer};
use crate::model::{cross_entropy, Dense, LayerNorm, ModelConfig, ModelKind, Network, SplineSpec};
use crate::numerics::{finite_diff_grad, init_params, Init, Matrix, Rng};
use crate::spline::SplineGrid;

pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const FD_EPS: f64 = 1e-5;
pub const ABS_FLOOR: f64 = 1e-8;
/// Absolute tolerance for the spline derivative against finite
/// differences of the basis.
pub const SPLINE_ABS_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ComponentCheck {
    pub name: String,
    /// Worst error over all checked values, under `metric`.
    pub worst_err: f64,
    /// Where the worst error occurred.
    pub worst_at: String,
    pub threshold: f64,
    pub metric: &'static str,
    pub pass: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub eps: f64,
    pub components: Vec<ComponentCheck>,
}

impl GradCheckReport {
    pub fn all_pass(&self) -> bool {
        self.components.iter().all(|c| c.pass)
    }
}

fn unified_err(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / (floor + analytic.abs().max(numeric.abs()))
}

struct ErrTracker {
    worst: f64,
    at: String,
    floor: f64,
}

impl ErrTracker {
    fn new(floor: f64) -> Self {
        ErrTracker {
            worst: 0.0,
            at: String::new(),
            floor,
        }
    }

    fn observe(&mut self, analytic: f64, numeric: f64, what: &str, index: usize) {
        let err = unified_err(analytic, numeric, self.floor);
        if err > self.worst {
            self.worst = err;
            self.at = format!("{what}[{index}]");
        }
    }

    fn observe_all(&mut self, analytic: &[f64], numeric: &[f64], what: &str) {
        for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
            self.observe(a, n, what, i);
        }
    }

    fn finish(self, name: &str, threshold: f64, started: Instant) -> ComponentCheck {
        ComponentCheck {
            name: name.to_string(),
            worst_err: self.worst,
            worst_at: self.at,
            threshold,
            metric: "relative",
            pass: self.worst < threshold,
            seconds: started.elapsed().as_secs_f64(),
        }
    }
}

/// Spline derivative against finite differences of the basis, absolute
/// error, at random interior points.
fn check_spline(seed: u64) -> ComponentCheck {
    let started = Instant::now();
    let grid = SplineGrid::<f64>::uniform(3, 5, -2.0, 2.0).unwrap();
    let mut rng = Rng::derive(seed, 0x5F1);
    let mut worst = 0.0f64;
    let mut at = String::new();
    for _ in 0..100 {
        let x = rng.uniform(-1.99, 1.99);
        let analytic = grid.basis_deriv(x);
        for (i, &a) in analytic.iter().enumerate() {
            let fd = finite_diff_grad(|p: &[f64]| grid.basis(p[0])[i], &[x], 1e-6)[0];
            let err = (a - fd).abs();
            if err > worst {
                worst = err;
                at = format!("basis[{i}] at x={x:.4}");
            }
        }
    }
    ComponentCheck {
        name: "spline.basis_deriv".to_string(),
        worst_err: worst,
        worst_at: at,
        threshold: SPLINE_ABS_TOL,
        metric: "absolute",
        pass: worst < SPLINE_ABS_TOL,
        seconds: started.elapsed().as_secs_f64(),
    }
}

/// KAN layer: all three parameter arrays and the input gradient, for the
/// objective `sum(dY ⊙ forward(X))`.
fn check_kan(seed: u64, tolerance: f64) -> ComponentCheck {
    let started = Instant::now();
    let floor = ABS_FLOOR / tolerance;
    let mut rng = Rng::derive(seed, 0x4A1);
    let grid = SplineGrid::uniform(3, 5, -2.0, 2.0).unwrap();
    let layer = KanLayer::<f64>::new(4, 3, grid, BaseKind::Silu, &mut rng);
    let x = init_params(&mut rng, 2, 4, Init::Uniform { bound: 1.5 });
    let dy = init_params(&mut rng, 2, 3, Init::Uniform { bound: 1.0 });
    let objective = |l: &KanLayer<f64>, xm: &Matrix<f64>| -> f64 {
        let (y, _) = l.forward(xm);
        y.data().iter().zip(dy.data()).map(|(a, b)| a * b).sum()
    };
    let (_, cache) = layer.forward(&x);
    let (dx, grads) = layer.backward(&cache, &dy);

    let mut tracker = ErrTracker::new(floor);
    let fd_x = finite_diff_grad(
        |p: &[f64]| objective(&layer, &Matrix::from_vec(2, 4, p.to_vec())),
        x.data(),
        FD_EPS,
    );
    tracker.observe_all(dx.data(), &fd_x, "dX");
    for idx in 0..3 {
        let name = layer.params()[idx].0;
        let base: Vec<f64> = layer.params()[idx].1.to_vec();
        let analytic: Vec<f64> = grads.params()[idx].1.to_vec();
        let fd = finite_diff_grad(
            |p: &[f64]| {
                let mut probe = layer.clone();
                probe.params_mut()[idx].1.copy_from_slice(p);
                objective(&probe, &x)
            },
            &base,
            FD_EPS,
        );
        tracker.observe_all(&analytic, &fd, name);
    }
    tracker.finish("kan_layer", tolerance, started)
}

fn check_layernorm(seed: u64, tolerance: f64) -> ComponentCheck {
    let started = Instant::now();
    let floor = ABS_FLOOR / tolerance;
    let mut rng = Rng::derive(seed, 0x1A7);
    let mut ln = LayerNorm::<f64>::new(5);
    for v in ln.params_mut()[0].1.iter_mut() {
        *v = rng.uniform(0.5, 1.5);
    }
    for v in ln.params_mut()[1].1.iter_mut() {
        *v = rng.uniform(-0.5, 0.5);
    }
    let x = init_params(&mut rng, 3, 5, Init::Uniform { bound: 2.0 });
    let dy = init_params(&mut rng, 3, 5, Init::Uniform { bound: 1.0 });
    let objective = |l: &LayerNorm<f64>, xm: &Matrix<f64>| -> f64 {
        let (y, _) = l.forward(xm);
        y.data().iter().zip(dy.data()).map(|(a, b)| a * b).sum()
    };
    let (_, cache) = ln.forward(&x);
    let (dx, grads) = ln.backward(&cache, &dy);

    let mut tracker = ErrTracker::new(floor);
    let fd_x = finite_diff_grad(
        |p: &[f64]| objective(&ln, &Matrix::from_vec(3, 5, p.to_vec())),
        x.data(),
        FD_EPS,
    );
    tracker.observe_all(dx.data(), &fd_x, "dX");
    for (idx, analytic) in [&grads.gamma, &grads.beta].into_iter().enumerate() {
        let name = ln.params()[idx].0;
        let base: Vec<f64> = ln.params()[idx].1.to_vec();
        let fd = finite_diff_grad(
            |p: &[f64]| {
                let mut probe = ln.clone();
                probe.params_mut()[idx].1.copy_from_slice(p);
                objective(&probe, &x)
            },
            &base,
            FD_EPS,
        );
        tracker.observe_all(analytic, &fd, name);
    }
    tracker.finish("layernorm", tolerance, started)
}

fn check_dense(seed: u64, tolerance: f64) -> ComponentCheck {
    let started = Instant::now();
    let floor = ABS_FLOOR / tolerance;
    let mut rng = Rng::derive(seed, 0xDE5);
    let dense = Dense::<f64>::new(4, 3, &mut rng);
    let x = init_params(&mut rng, 2, 4, Init::Uniform { bound: 1.0 });
    let dy = init_params(&mut rng, 2, 3, Init::Uniform { bound: 1.0 });
    let objective = |d: &Dense<f64>, xm: &Matrix<f64>| -> f64 {
        let (y, _) = d.forward(xm);
        y.data().iter().zip(dy.data()).map(|(a, b)| a * b).sum()
    };
    let (_, cache) = dense.forward(&x);
    let (dx, grads) = dense.backward(&cache, &dy);

    let mut tracker = ErrTracker::new(floor);
    let fd_x = finite_diff_grad(
        |p: &[f64]| objective(&dense, &Matrix::from_vec(2, 4, p.to_vec())),
        x.data(),
        FD_EPS,
    );
    tracker.observe_all(dx.data(), &fd_x, "dX");
    for (idx, analytic) in [&grads.w, &grads.b].into_iter().enumerate() {
        let name = dense.params()[idx].0;
        let base: Vec<f64> = dense.params()[idx].1.to_vec();
        let fd = finite_diff_grad(
            |p: &[f64]| {
                let mut probe = dense.clone();
                probe.params_mut()[idx].1.copy_from_slice(p);
                objective(&probe, &x)
            },
            &base,
            FD_EPS,
        );
        tracker.observe_all(analytic, &fd, name);
    }
    tracker.finish("dense", tolerance, started)
}

fn check_cross_entropy(seed: u64, tolerance: f64) -> ComponentCheck {
    let started = Instant::now();
    let floor = ABS_FLOOR / tolerance;
    let mut rng = Rng::derive(seed, 0xCE0);
    let logits = init_params(&mut rng, 5, 6, Init::Uniform { bound: 2.0 });
    let labels: Vec<Option<u32>> = (0..5).map(|_| Some(rng.below(6) as u32)).collect();
    let mask = vec![true, false, true, true, true];
    let (_, analytic) = cross_entropy(&logits, &labels, &mask).unwrap();
    let fd = finite_diff_grad(
        |p: &[f64]| {
            let m = Matrix::from_vec(5, 6, p.to_vec());
            cross_entropy(&m, &labels, &mask).unwrap().0
        },
        logits.data(),
        FD_EPS,
    );
    let mut tracker = ErrTracker::new(floor);
    tracker.observe_all(analytic.data(), &fd, "dLogits");
    tracker.finish("cross_entropy", tolerance, started)
}

/// The toy graph every whole-model check runs on: 6 nodes, one label per
/// class, fully train-masked.
fn toy_graph(seed: u64, d_in: usize) -> (Graph<f64>, NormAdjacency<f64>) {
    let mut rng = Rng::derive(seed, 0x96);
    let g = Graph::new(
        6,
        init_params(&mut rng, 6, d_in, Init::Uniform { bound: 1.5 }),
        vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (1, 4)],
        (0..6).map(|c| Some(c as u32)).collect(),
        vec![true; 6],
        vec![false; 6],
        vec![false; 6],
        None,
    )
    .unwrap();
    let adj = normalize(&g, true).unwrap();
    (g, adj)
}

/// Whole-model check: cross-entropy loss through three aggregated blocks
/// and the head, every parameter array against finite differences.
fn check_model(
    name: &str,
    kind: ModelKind,
    concat_self: bool,
    seed: u64,
    tolerance: f64,
    widths: [usize; 3],
) -> ComponentCheck {
    let started = Instant::now();
    let floor = ABS_FLOOR / tolerance;
    let d_in = 4;
    let (g, adj) = toy_graph(seed, d_in);
    let cfg = ModelConfig {
        d_in,
        num_classes: 6,
        widths,
        spline: SplineSpec::default(),
        base: BaseKind::Silu,
        concat_self,
    };
    let mut rng = Rng::derive(seed, 0x40D);
    let net = Network::new(kind, &cfg, &mut rng).unwrap();

    let loss_of = |n: &Network<f64>| -> f64 {
        let out = n.forward(&adj, g.features());
        cross_entropy(&out.logits, g.labels(), g.train_mask()).unwrap().0
    };
    let out = net.forward(&adj, g.features());
    let (_, d_logits) = cross_entropy(&out.logits, g.labels(), g.train_mask()).unwrap();
    let grads = net.backward(&adj, &out.cache, &d_logits);

    let mut tracker = ErrTracker::new(floor);
    let analytic = grads.params();
    let names: Vec<String> = net.params().iter().map(|(n, _)| n.clone()).collect();
    for (idx, name) in names.iter().enumerate() {
        let base: Vec<f64> = net.params()[idx].1.to_vec();
        let fd = finite_diff_grad(
            |p: &[f64]| {
                let mut probe = net.clone();
                probe.params_mut()[idx].1.copy_from_slice(p);
                loss_of(&probe)
            },
            &base,
            FD_EPS,
        );
        tracker.observe_all(analytic[idx].1, &fd, name);
    }
    tracker.finish(name, tolerance, started)
}

/// Runs the full suite. `widths` sizes the whole-model checks.
pub fn run_suite(seed: u64, tolerance: f64, widths: [usize; 3]) -> GradCheckReport {
    let components = vec![
        check_spline(seed),
        check_kan(seed, tolerance),
        check_layernorm(seed, tolerance),
        check_dense(seed, tolerance),
        check_cross_entropy(seed, tolerance),
        check_model("model_graphkan", ModelKind::GraphKan, false, seed, tolerance, widths),
        check_model("model_gcn", ModelKind::Gcn, false, seed, tolerance, widths),
        check_model(
            "model_graphkan_concat",
            ModelKind::GraphKan,
            true,
            seed,
            tolerance,
            widths,
        ),
    ];
    GradCheckReport {
        tolerance,
        eps: FD_EPS,
        components,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_suite_passes_at_default_tolerance() {
        let report = run_suite(42, DEFAULT_TOLERANCE, [8, 8, 8]);
        for c in &report.components {
            assert!(
                c.pass,
                "{}: worst {} {} at {} (threshold {})",
                c.name, c.metric, c.worst_err, c.worst_at, c.threshold
            );
        }
    }

    #[test]
    fn impossible_tolerance_fails() {
        let report = run_suite(42, 1e-12, [8, 8, 8]);
        assert!(!report.all_pass());
    }

    #[test]
    fn suite_is_deterministic() {
        let a = run_suite(7, DEFAULT_TOLERANCE, [8, 8, 8]);
        let b = run_suite(7, DEFAULT_TOLERANCE, [8, 8, 8]);
        for (x, y) in a.components.iter().zip(&b.components) {
            assert_eq!(x.worst_err, y.worst_err, "{}", x.name);
            assert_eq!(x.worst_at, y.worst_at);
        }
    }
}
