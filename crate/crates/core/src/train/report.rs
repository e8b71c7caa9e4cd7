//! Serializable experiment reports and the aligned plain-text table.
//!
//! Wall-clock fields are optional: a report written without timing is
//! byte-reproducible from config + seed, which the reproducibility
//! checks rely on. The compare flow always records timing because the
//! accuracy/time trade-off is the point of the comparison.

use serde::{Deserialize, Serialize};

use crate::graph::{count_mask, Graph};
use crate::metrics::SilhouetteScore;
use crate::model::ModelKind;
use crate::scalar::Scalar;

use super::TrainConfig;

pub const REPORT_SCHEMA: &str = "graphkan-report/v1";
pub const COMPARE_SCHEMA: &str = "graphkan-compare/v1";

/// Identity of the graph an experiment ran on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphInfo {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_id: Option<u8>,
    pub n_nodes: usize,
    pub d_in: usize,
    pub n_labeled: usize,
    pub n_test: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_seed: Option<u64>,
}

impl GraphInfo {
    pub fn from_graph<S: Scalar>(g: &Graph<S>, path: Option<String>) -> Self {
        GraphInfo {
            path,
            graph_id: g.meta().map(|m| m.generator.graph_id),
            n_nodes: g.n_nodes(),
            d_in: g.d_in(),
            n_labeled: count_mask(g.train_mask()) + count_mask(g.val_mask()),
            n_test: count_mask(g.test_mask()),
            gen_seed: g.meta().map(|m| m.seed),
        }
    }

    /// Short label for table rows: "bg3" for generated graphs, the path
    /// stem otherwise.
    pub fn label(&self) -> String {
        match self.graph_id {
            Some(id) => format!("bg{id}"),
            None => self
                .path
                .as_deref()
                .map(|p| {
                    std::path::Path::new(p)
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| p.to_string())
                })
                .unwrap_or_else(|| "graph".to_string()),
        }
    }
}

/// One successful trial, as serialized into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub test_acc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    /// Silhouette of the test-node features (mean, per-class means,
    /// degenerate count), one entry per hidden layer.
    pub silhouette: Vec<SilhouetteScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedTrial {
    pub trial: usize,
    pub seed: u64,
    pub error: String,
}

/// Aggregate over the trials of one model on one graph. Failed trials
/// are recorded and excluded from every mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: ModelKind,
    pub trials: Vec<TrialRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed: Vec<FailedTrial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_test_acc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_test_acc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_best_val_acc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_wall_time_s: Option<f64>,
    /// Layer-wise mean over trials of the per-trial silhouette means.
    pub mean_silhouette: Vec<f64>,
}

impl ModelReport {
    pub fn n_ok(&self) -> usize {
        self.trials.len()
    }

    pub fn n_total(&self) -> usize {
        self.trials.len() + self.failed.len()
    }
}

/// Report of one `train` run: one graph, one or more models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub graph: GraphInfo,
    pub config: TrainConfig,
    pub workers: usize,
    pub models: Vec<ModelReport>,
}

/// Report of one `compare` run: both models across several graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub schema: String,
    pub config: TrainConfig,
    pub workers: usize,
    pub entries: Vec<CompareEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareEntry {
    pub graph: GraphInfo,
    pub models: Vec<ModelReport>,
}

fn fmt_opt(v: Option<f64>, precision: usize) -> String {
    match v {
        Some(x) => format!("{x:.precision$}"),
        None => "-".to_string(),
    }
}

/// Aligned plain-text table: one row per (graph, model).
pub fn render_table<'a>(rows: impl IntoIterator<Item = (String, &'a ModelReport)>) -> String {
    let header = [
        "graph", "model", "acc_mean", "acc_std", "time_s", "sil_l1", "sil_l2", "sil_l3", "trials",
    ];
    let mut cells: Vec<[String; 9]> = Vec::new();
    for (graph, r) in rows {
        let sil = |l: usize| {
            r.mean_silhouette
                .get(l)
                .map(|&s| format!("{s:.4}"))
                .unwrap_or_else(|| "-".to_string())
        };
        cells.push([
            graph,
            r.model.to_string(),
            fmt_opt(r.mean_test_acc, 4),
            fmt_opt(r.std_test_acc, 4),
            fmt_opt(r.mean_wall_time_s, 2),
            sil(0),
            sil(1),
            sil(2),
            format!("{}/{}", r.n_ok(), r.n_total()),
        ]);
    }
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for (i, h) in header.iter().enumerate() {
        out.push_str(&format!("{:<width$}  ", h, width = widths[i]));
    }
    out.push('\n');
    for (i, w) in widths.iter().enumerate() {
        out.push_str(&"-".repeat(*w));
        out.push_str(if i + 1 == widths.len() { "\n" } else { "  " });
    }
    for row in &cells {
        for (i, cell) in row.iter().enumerate() {
            out.push_str(&format!("{:<width$}  ", cell, width = widths[i]));
        }
        out.push('\n');
    }
    out
}

pub(super) fn mean(xs: impl Iterator<Item = f64> + Clone) -> Option<f64> {
    let n = xs.clone().count();
    if n == 0 {
        None
    } else {
        Some(xs.sum::<f64>() / n as f64)
    }
}

/// Population standard deviation; 0 for a single value.
pub(super) fn std_dev(xs: impl Iterator<Item = f64> + Clone) -> Option<f64> {
    let m = mean(xs.clone())?;
    let n = xs.clone().count();
    Some((xs.map(|x| (x - m).powi(2)).sum::<f64>() / n as f64).sqrt())
}
