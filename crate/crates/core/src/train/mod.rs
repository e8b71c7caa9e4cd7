//! Training: cosine-annealed Adam over full-graph epochs with
//! validation-based model selection, and the multi-trial experiment
//! runner with paired seeding.
//!
//! Every trial derives its RNG streams from `base_seed + trial_index`,
//! one stream for the validation split and one for model init, so trial
//! `i` of GraphKAN and trial `i` of the GCN baseline see the same data
//! split and differ only in architecture.

mod adam;
mod report;

pub use adam::{AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use report::{
    render_table, CompareEntry, CompareReport, ExperimentReport, FailedTrial, GraphInfo,
    ModelReport, TrialRow, COMPARE_SCHEMA, REPORT_SCHEMA,
};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{normalize, Graph};
use crate::kan::BaseKind;
use crate::metrics::{self, SilhouetteScore};
use crate::model::{cross_entropy, ModelConfig, ModelKind, Network, SplineSpec};
use crate::numerics::{Matrix, Rng};

/// RNG stream tag for the validation split.
pub const SPLIT_STREAM: u64 = 0x53504C54;
/// RNG stream tag for parameter initialization.
pub const INIT_STREAM: u64 = 0x494E4954;

/// Training protocol configuration.
///
/// Defaults follow the benchmark protocol: 200 epochs of cosine
/// annealing from `lr_max` down to 1e-4, a 20% stratified validation
/// split, ten trials. The default widths are the desk-scale 64-32-16;
/// pass `widths = [512, 256, 128]` for the full-size structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr_max: f64,
    pub lr_min: f64,
    pub seed: u64,
    pub trials: usize,
    pub val_fraction: f64,
    pub widths: [usize; 3],
    pub spline: SplineSpec,
    pub self_loops: bool,
    pub base: BaseKind,
    pub concat_self: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            lr_max: 3e-3,
            lr_min: 1e-4,
            seed: 0,
            trials: 10,
            val_fraction: 0.2,
            widths: [64, 32, 16],
            spline: SplineSpec::default(),
            self_loops: true,
            base: BaseKind::Silu,
            concat_self: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr_min > 0.0 && self.lr_min <= self.lr_max) {
            return Err(Error::Config(format!(
                "learning rates need 0 < lr_min <= lr_max, got {} and {}",
                self.lr_min, self.lr_max
            )));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config(format!(
                "val_fraction {} outside [0, 1)",
                self.val_fraction
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.widths.contains(&0) {
            return Err(Error::Config("zero layer width".into()));
        }
        self.spline.build::<f64>().map(|_| ())
    }

    /// Cosine annealing schedule:
    /// `lr(t) = lr_min + (lr_max - lr_min) (1 + cos(pi t / epochs)) / 2`.
    pub fn cosine_lr(&self, epoch: usize) -> f64 {
        if self.epochs == 0 {
            return self.lr_max;
        }
        let ratio = epoch as f64 / self.epochs as f64;
        self.lr_min + 0.5 * (self.lr_max - self.lr_min) * (1.0 + (std::f64::consts::PI * ratio).cos())
    }

    fn model_config(&self, d_in: usize, num_classes: usize) -> ModelConfig {
        ModelConfig {
            d_in,
            num_classes,
            widths: self.widths,
            spline: self.spline,
            base: self.base,
            concat_self: self.concat_self,
        }
    }
}

/// Outcome of one training trial: accuracies and features are taken from
/// the epoch with the highest validation accuracy (earliest on ties).
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub test_acc: f64,
    pub wall_time_s: f64,
    /// Training loss at every evaluation (epochs + 1 entries).
    pub loss_curve: Vec<f64>,
    /// Selection-criterion accuracy at every evaluation (validation
    /// accuracy, or train accuracy when the validation split is empty).
    pub val_acc_curve: Vec<f64>,
    /// Post-norm features of the test nodes at the best epoch, one
    /// matrix per hidden layer.
    pub test_features: Vec<Matrix<f64>>,
    /// Original node ids of the rows in `test_features`.
    pub test_node_ids: Vec<u32>,
    /// Labels of the test nodes, aligned with `test_node_ids`.
    pub test_labels: Vec<u32>,
    /// Per-layer silhouette of the test features.
    pub silhouettes: Vec<SilhouetteScore>,
}

impl TrialResult {
    /// Writes the stored test-node features as CSV files under `dir`.
    pub fn export_test_features(&self, dir: impl AsRef<std::path::Path>) -> Result<Vec<std::path::PathBuf>> {
        metrics::export_feature_rows(
            &self.test_features,
            &self.test_node_ids,
            &self.test_labels,
            dir,
        )
    }
}

/// Runs one full training trial on `graph` (which must carry train and
/// test masks but no validation mask yet).
pub fn train_trial(
    cfg: &TrainConfig,
    kind: ModelKind,
    graph: &Graph<f64>,
    trial: usize,
) -> Result<TrialResult> {
    train_trial_impl(cfg, kind, graph, trial, false).map(|(r, _)| r)
}

/// Like [`train_trial`], additionally returning the model as of the best
/// epoch (for checkpointing).
pub fn train_trial_with_model(
    cfg: &TrainConfig,
    kind: ModelKind,
    graph: &Graph<f64>,
    trial: usize,
) -> Result<(TrialResult, Network<f64>)> {
    let (r, net) = train_trial_impl(cfg, kind, graph, trial, true)?;
    Ok((r, net.expect("capture requested")))
}

fn train_trial_impl(
    cfg: &TrainConfig,
    kind: ModelKind,
    graph: &Graph<f64>,
    trial: usize,
    capture_model: bool,
) -> Result<(TrialResult, Option<Network<f64>>)> {
    cfg.validate()?;
    let seed = cfg.seed.wrapping_add(trial as u64);
    let mut split_rng = Rng::derive(seed, SPLIT_STREAM);
    let (g, warnings) = graph.clone().split_validation(cfg.val_fraction, &mut split_rng)?;
    for w in &warnings {
        eprintln!("trial {trial}: warning: {w}");
    }
    if crate::graph::count_mask(g.test_mask()) == 0 {
        return Err(Error::Graph("train_trial: graph has no test nodes".into()));
    }
    let adj = normalize(&g, cfg.self_loops)?;
    let num_classes = g.num_classes().max(2);
    let model_cfg = cfg.model_config(g.d_in(), num_classes);
    let mut init_rng = Rng::derive(seed, INIT_STREAM);
    let mut net = Network::new(kind, &model_cfg, &mut init_rng)?;
    let mut opt = AdamState::new(&net.params());

    let has_val = g.val_mask().iter().any(|&m| m);
    let mut best_val = f64::NEG_INFINITY;
    let mut best_epoch = 0usize;
    let mut best_test_acc = 0.0f64;
    let mut best_features: Vec<Matrix<f64>> = Vec::new();
    let mut best_net: Option<Network<f64>> = None;
    let mut loss_curve = Vec::with_capacity(cfg.epochs + 1);
    let mut val_acc_curve = Vec::with_capacity(cfg.epochs + 1);

    let started = Instant::now();
    for epoch in 0..=cfg.epochs {
        let out = net.forward(&adj, g.features());
        let (loss, d_logits) = cross_entropy(&out.logits, g.labels(), g.train_mask())?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        loss_curve.push(loss);
        // selection criterion: validation accuracy, falling back to train
        // accuracy when the split is empty (val_fraction = 0)
        let val_acc = if has_val {
            metrics::accuracy(&out.logits, g.labels(), g.val_mask())?
        } else {
            metrics::accuracy(&out.logits, g.labels(), g.train_mask())?
        };
        val_acc_curve.push(val_acc);
        if val_acc > best_val {
            best_val = val_acc;
            best_epoch = epoch;
            best_test_acc = metrics::accuracy(&out.logits, g.labels(), g.test_mask())?;
            best_features = out
                .per_layer
                .iter()
                .map(|m| m.select_rows(g.test_mask()))
                .collect();
            if capture_model {
                best_net = Some(net.clone());
            }
        }
        if epoch < cfg.epochs {
            let grads = net.backward(&adj, &out.cache, &d_logits);
            let lr = cfg.cosine_lr(epoch);
            let mut params = net.params_mut();
            opt.step(&mut params, &grads.params(), lr)?;
        }
    }
    let wall_time_s = started.elapsed().as_secs_f64();

    let test_node_ids: Vec<u32> = (0..g.n_nodes())
        .filter(|&v| g.test_mask()[v])
        .map(|v| v as u32)
        .collect();
    let test_labels: Vec<u32> = test_node_ids
        .iter()
        .map(|&v| g.labels()[v as usize].expect("test nodes carry ground-truth labels"))
        .collect();
    let label_opts: Vec<Option<u32>> = test_labels.iter().map(|&c| Some(c)).collect();
    let all = vec![true; test_node_ids.len()];
    let distinct = {
        let mut cs = test_labels.clone();
        cs.sort_unstable();
        cs.dedup();
        cs.len()
    };
    let silhouettes = if distinct >= 2 {
        best_features
            .iter()
            .map(|f| metrics::silhouette(f, &label_opts, &all))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    Ok((
        TrialResult {
            trial,
            seed,
            best_epoch,
            best_val_acc: best_val,
            test_acc: best_test_acc,
            wall_time_s,
            loss_curve,
            val_acc_curve,
            test_features: best_features,
            test_node_ids,
            test_labels,
            silhouettes,
        },
        best_net,
    ))
}

/// Everything an experiment produced: the serializable report plus the
/// in-memory trial results (features included) for export.
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub trial_results: Vec<(ModelKind, Vec<TrialResult>)>,
}

/// Runs `cfg.trials` paired trials of every requested model kind.
/// Trials are independent; with `workers > 1` they run on a thread pool,
/// and results are identical to the sequential order by construction.
pub fn run_experiment(
    cfg: &TrainConfig,
    kinds: &[ModelKind],
    graph: &Graph<f64>,
    info: GraphInfo,
    workers: usize,
    include_timing: bool,
) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let workers = workers.max(1);
    let mut models = Vec::with_capacity(kinds.len());
    let mut trial_results = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let results = run_trials(cfg, kind, graph, workers);
        let (report, keep) = summarize(cfg, kind, results, include_timing);
        models.push(report);
        trial_results.push((kind, keep));
    }
    Ok(ExperimentOutcome {
        report: ExperimentReport {
            schema: REPORT_SCHEMA.to_string(),
            graph: info,
            config: cfg.clone(),
            workers,
            models,
        },
        trial_results,
    })
}

fn run_trials(
    cfg: &TrainConfig,
    kind: ModelKind,
    graph: &Graph<f64>,
    workers: usize,
) -> Vec<Result<TrialResult>> {
    if workers == 1 || cfg.trials == 1 {
        return (0..cfg.trials)
            .map(|t| train_trial(cfg, kind, graph, t))
            .collect();
    }
    let mut slots: Vec<Option<Result<TrialResult>>> = (0..cfg.trials).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots_mutex = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..workers.min(cfg.trials) {
            scope.spawn(|| loop {
                let t = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if t >= cfg.trials {
                    break;
                }
                let result = train_trial(cfg, kind, graph, t);
                let mut guard = slots_mutex.lock().unwrap();
                guard[t] = Some(result);
            });
        }
    });
    slots.into_iter().map(|s| s.expect("trial slot filled")).collect()
}

fn summarize(
    cfg: &TrainConfig,
    kind: ModelKind,
    results: Vec<Result<TrialResult>>,
    include_timing: bool,
) -> (ModelReport, Vec<TrialResult>) {
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    let mut keep = Vec::new();
    for (t, result) in results.into_iter().enumerate() {
        match result {
            Ok(r) => {
                rows.push(TrialRow {
                    trial: r.trial,
                    seed: r.seed,
                    best_epoch: r.best_epoch,
                    best_val_acc: r.best_val_acc,
                    test_acc: r.test_acc,
                    wall_time_s: include_timing.then_some(r.wall_time_s),
                    silhouette: r.silhouettes.clone(),
                });
                keep.push(r);
            }
            Err(e) => failed.push(FailedTrial {
                trial: t,
                seed: cfg.seed.wrapping_add(t as u64),
                error: e.to_string(),
            }),
        }
    }
    let accs = rows.iter().map(|r| r.test_acc).collect::<Vec<_>>();
    let layers = rows
        .first()
        .map(|r| r.silhouette.len())
        .unwrap_or_default();
    let mean_silhouette = (0..layers)
        .map(|l| {
            let means: Vec<f64> = rows
                .iter()
                .filter_map(|r| r.silhouette.get(l).map(|s| s.mean))
                .collect();
            report::mean(means.iter().copied()).unwrap_or(0.0)
        })
        .collect();
    let report = ModelReport {
        model: kind,
        mean_test_acc: report::mean(accs.iter().copied()),
        std_test_acc: report::std_dev(accs.iter().copied()),
        mean_best_val_acc: report::mean(rows.iter().map(|r| r.best_val_acc)),
        mean_wall_time_s: if include_timing {
            report::mean(keep.iter().map(|r| r.wall_time_s))
        } else {
            None
        },
        mean_silhouette,
        trials: rows,
        failed,
    };
    (report, keep)
}
