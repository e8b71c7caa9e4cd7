//! Accuracy, silhouette-based cluster separation of intermediate
//! features, and feature export.
//!
//! The silhouette score stands in for visual t-SNE cluster inspection:
//! it is deterministic and ordered, so "clusters features of the same
//! type more closely" becomes a checkable number. Raw features can still
//! be exported as CSV for external embedding plots.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::Scalar;

/// Fraction of masked nodes whose argmax logit equals the label; argmax
/// ties resolve to the lowest class index.
pub fn accuracy<S: Scalar>(
    logits: &Matrix<S>,
    labels: &[Option<u32>],
    mask: &[bool],
) -> Result<f64> {
    assert_eq!(logits.rows(), labels.len(), "accuracy: label count");
    assert_eq!(logits.rows(), mask.len(), "accuracy: mask length");
    let mut total = 0usize;
    let mut correct = 0usize;
    for v in 0..logits.rows() {
        if !mask[v] {
            continue;
        }
        let label = labels[v]
            .ok_or_else(|| Error::Graph(format!("accuracy: masked node {v} has no label")))?;
        let row = logits.row(v);
        let mut best = 0usize;
        for (c, &z) in row.iter().enumerate().skip(1) {
            if z > row[best] {
                best = c;
            }
        }
        total += 1;
        if best as u32 == label {
            correct += 1;
        }
    }
    if total == 0 {
        return Err(Error::Graph("accuracy: empty mask".into()));
    }
    Ok(correct as f64 / total as f64)
}

/// Silhouette of one feature matrix restricted to masked nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteScore {
    /// Mean per-node silhouette, in [-1, 1].
    pub mean: f64,
    /// Mean silhouette per class id.
    pub per_class: Vec<f64>,
    /// Number of masked nodes scored.
    pub n_used: usize,
    /// Nodes pinned to score 0 because their class was a singleton or
    /// all distances were zero.
    pub degenerate: usize,
}

/// Brute-force silhouette: for node `i`, `a` is the mean distance to its
/// own class (excluding itself), `b` the smallest mean distance to any
/// other class, and the score `(b - a) / max(a, b)`. Singleton classes
/// and all-identical points score 0 and are counted as degenerate.
///
/// Requires at least two classes among the masked nodes.
pub fn silhouette<S: Scalar>(
    features: &Matrix<S>,
    labels: &[Option<u32>],
    mask: &[bool],
) -> Result<SilhouetteScore> {
    assert_eq!(features.rows(), labels.len(), "silhouette: label count");
    assert_eq!(features.rows(), mask.len(), "silhouette: mask length");
    let nodes: Vec<usize> = (0..features.rows()).filter(|&v| mask[v]).collect();
    let n = nodes.len();
    if n == 0 {
        return Err(Error::Graph("silhouette: empty mask".into()));
    }
    let mut cls = Vec::with_capacity(n);
    for &v in &nodes {
        let c = labels[v]
            .ok_or_else(|| Error::Graph(format!("silhouette: masked node {v} has no label")))?;
        cls.push(c as usize);
    }
    let num_classes = cls.iter().max().unwrap() + 1;
    let mut counts = vec![0usize; num_classes];
    for &c in &cls {
        counts[c] += 1;
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::Graph(
            "silhouette: need at least two classes among masked nodes".into(),
        ));
    }

    // One pass over pairs, accumulating per-(node, class) distance sums.
    let mut sums = vec![0.0f64; n * num_classes];
    for i in 0..n {
        let row_i = features.row(nodes[i]);
        for j in (i + 1)..n {
            let row_j = features.row(nodes[j]);
            let mut d2 = 0.0f64;
            for (&a, &b) in row_i.iter().zip(row_j) {
                let diff = a.to_f64() - b.to_f64();
                d2 += diff * diff;
            }
            let d = d2.sqrt();
            sums[i * num_classes + cls[j]] += d;
            sums[j * num_classes + cls[i]] += d;
        }
    }

    let mut total = 0.0;
    let mut per_class_sum = vec![0.0f64; num_classes];
    let mut degenerate = 0usize;
    for i in 0..n {
        let own = cls[i];
        let score = if counts[own] < 2 {
            degenerate += 1;
            0.0
        } else {
            let a = sums[i * num_classes + own] / (counts[own] - 1) as f64;
            let b = (0..num_classes)
                .filter(|&c| c != own && counts[c] > 0)
                .map(|c| sums[i * num_classes + c] / counts[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom == 0.0 {
                degenerate += 1;
                0.0
            } else {
                (b - a) / denom
            }
        };
        total += score;
        per_class_sum[own] += score;
    }
    let per_class = per_class_sum
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    Ok(SilhouetteScore {
        mean: total / n as f64,
        per_class,
        n_used: n,
        degenerate,
    })
}

/// Writes one CSV per layer (`features_layer1.csv`, ...) under `dir`:
/// columns `node_id,label,f_0..f_{d-1}`, masked nodes only, full float
/// precision (values re-parse exactly). Returns the written paths.
pub fn export_features<S: Scalar>(
    per_layer: &[Matrix<S>],
    labels: &[Option<u32>],
    mask: &[bool],
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let mut ids = Vec::new();
    let mut picked_labels = Vec::new();
    for (v, &m) in mask.iter().enumerate() {
        if !m {
            continue;
        }
        let label = labels[v]
            .ok_or_else(|| Error::Graph(format!("export: masked node {v} has no label")))?;
        ids.push(v as u32);
        picked_labels.push(label);
    }
    let rows: Vec<Matrix<S>> = per_layer
        .iter()
        .map(|f| {
            assert_eq!(f.rows(), mask.len(), "export: mask length");
            f.select_rows(mask)
        })
        .collect();
    export_feature_rows(&rows, &ids, &picked_labels, dir)
}

/// Same CSV format for features already restricted to the nodes of
/// interest: `rows[l]` holds one row per id.
pub fn export_feature_rows<S: Scalar>(
    per_layer: &[Matrix<S>],
    node_ids: &[u32],
    labels: &[u32],
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut written = Vec::with_capacity(per_layer.len());
    for (l, features) in per_layer.iter().enumerate() {
        assert_eq!(features.rows(), node_ids.len(), "export: id count");
        assert_eq!(features.rows(), labels.len(), "export: label count");
        let path = dir.join(format!("features_layer{}.csv", l + 1));
        let mut body = String::new();
        body.push_str("node_id,label");
        for c in 0..features.cols() {
            body.push_str(&format!(",f_{c}"));
        }
        body.push('\n');
        for (r, (&id, &label)) in node_ids.iter().zip(labels).enumerate() {
            body.push_str(&format!("{id},{label}"));
            for &x in features.row(r) {
                body.push_str(&format!(",{}", x.to_f64()));
            }
            body.push('\n');
        }
        let mut file =
            fs::File::create(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        file.write_all(body.as_bytes())
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{init_params, Init, Rng};
    use crate::reference::silhouette_naive;

    #[test]
    fn accuracy_perfect_and_anti() {
        let logits = Matrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let labels = vec![Some(0), Some(1), Some(2)];
        let mask = vec![true; 3];
        assert_eq!(accuracy(&logits, &labels, &mask).unwrap(), 1.0);
        let anti = vec![Some(1), Some(2), Some(0)];
        assert_eq!(accuracy(&logits, &anti, &mask).unwrap(), 0.0);
    }

    #[test]
    fn accuracy_ties_pick_lowest_class() {
        let logits = Matrix::from_rows(&[vec![2.0, 2.0, 1.0]]);
        assert_eq!(accuracy(&logits, &[Some(0)], &[true]).unwrap(), 1.0);
        assert_eq!(accuracy(&logits, &[Some(1)], &[true]).unwrap(), 0.0);
    }

    #[test]
    fn accuracy_of_random_logits_is_near_chance() {
        let mut rng = Rng::new(77);
        let n = 7000;
        let logits: Matrix<f64> = init_params(&mut rng, n, 6, Init::Uniform { bound: 1.0 });
        let labels: Vec<Option<u32>> = (0..n).map(|_| Some(rng.below(6) as u32)).collect();
        let acc = accuracy(&logits, &labels, &vec![true; n]).unwrap();
        assert!((acc - 1.0 / 6.0).abs() < 0.02, "accuracy {acc}");
    }

    #[test]
    fn accuracy_invariant_to_per_node_logit_shift() {
        let mut rng = Rng::new(78);
        let logits: Matrix<f64> = init_params(&mut rng, 50, 6, Init::Uniform { bound: 1.0 });
        let labels: Vec<Option<u32>> = (0..50).map(|_| Some(rng.below(6) as u32)).collect();
        let mask = vec![true; 50];
        let base = accuracy(&logits, &labels, &mask).unwrap();
        let mut shifted = logits.clone();
        for v in 0..50 {
            let delta = rng.uniform(-100.0, 100.0);
            for z in shifted.row_mut(v) {
                *z += delta;
            }
        }
        assert_eq!(accuracy(&shifted, &labels, &mask).unwrap(), base);
    }

    #[test]
    fn well_separated_clusters_score_near_one() {
        let mut rng = Rng::new(5);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..2 {
            for _ in 0..10 {
                let center = c as f64 * 100.0;
                rows.push(vec![
                    center + rng.uniform(-0.05, 0.05),
                    rng.uniform(-0.05, 0.05),
                ]);
                labels.push(Some(c as u32));
            }
        }
        let score = silhouette(
            &Matrix::from_rows(&rows),
            &labels,
            &vec![true; labels.len()],
        )
        .unwrap();
        assert!(score.mean > 0.99, "mean {}", score.mean);
        assert_eq!(score.degenerate, 0);
    }

    #[test]
    fn identical_points_score_zero() {
        let rows = vec![vec![1.0, 1.0]; 6];
        let labels: Vec<Option<u32>> = (0..6).map(|i| Some((i % 2) as u32)).collect();
        let score = silhouette(&Matrix::from_rows(&rows), &labels, &vec![true; 6]).unwrap();
        assert_eq!(score.mean, 0.0);
        assert_eq!(score.degenerate, 6);
    }

    #[test]
    fn singleton_class_scores_zero_and_is_flagged() {
        let rows = vec![vec![0.0], vec![0.1], vec![5.0]];
        let labels = vec![Some(0), Some(0), Some(1)];
        let score = silhouette(&Matrix::from_rows(&rows), &labels, &vec![true; 3]).unwrap();
        assert_eq!(score.degenerate, 1);
        assert_eq!(score.per_class.len(), 2);
        assert_eq!(score.per_class[1], 0.0);
    }

    #[test]
    fn matches_independent_naive_implementation() {
        let mut rng = Rng::new(9);
        for trial in 0..5 {
            let n = 30;
            let features: Matrix<f64> = init_params(&mut rng, n, 4, Init::Uniform { bound: 3.0 });
            let cls: Vec<usize> = (0..n).map(|_| rng.below(3)).collect();
            let labels: Vec<Option<u32>> = cls.iter().map(|&c| Some(c as u32)).collect();
            let fast = silhouette(&features, &labels, &vec![true; n]).unwrap();
            let naive = silhouette_naive(&features, &cls);
            assert!(
                (fast.mean - naive).abs() < 1e-12,
                "trial {trial}: {} vs {naive}",
                fast.mean
            );
        }
    }

    #[test]
    fn fewer_than_two_classes_is_an_error() {
        let rows = vec![vec![0.0], vec![1.0]];
        let labels = vec![Some(0), Some(0)];
        assert!(silhouette(&Matrix::from_rows(&rows), &labels, &vec![true; 2]).is_err());
    }

    #[test]
    fn export_writes_masked_rows_with_exact_values() {
        let dir = std::env::temp_dir().join("graphkan-metrics-tests");
        let features = Matrix::from_rows(&[
            vec![0.1, 0.2],
            vec![std::f64::consts::PI, -1.0 / 3.0],
            vec![7.0, 8.0],
        ]);
        let labels = vec![Some(0), Some(1), Some(2)];
        let mask = vec![true, true, false];
        let paths = export_features(&[features.clone()], &labels, &mask, &dir).unwrap();
        let body = fs::read_to_string(&paths[0]).unwrap();
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines.len(), 3); // header + 2 masked rows
        assert_eq!(lines[0], "node_id,label,f_0,f_1");
        assert!(!body.contains("\n2,")); // masked-out node absent
        let fields: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(fields[0], "1");
        assert_eq!(fields[1], "1");
        // full round-trip precision
        assert_eq!(fields[2].parse::<f64>().unwrap(), std::f64::consts::PI);
        assert_eq!(fields[3].parse::<f64>().unwrap(), -1.0 / 3.0);
    }

    #[test]
    fn export_shape_matches_contract() {
        let dir = std::env::temp_dir().join("graphkan-metrics-shape");
        let n = 50;
        let d = 128;
        let mut rng = Rng::new(3);
        let features: Matrix<f64> = init_params(&mut rng, n, d, Init::Uniform { bound: 1.0 });
        let labels: Vec<Option<u32>> = (0..n).map(|_| Some(rng.below(6) as u32)).collect();
        let mask: Vec<bool> = (0..n).map(|v| v % 2 == 0).collect();
        let paths = export_features(&[features], &labels, &mask, &dir).unwrap();
        let body = fs::read_to_string(&paths[0]).unwrap();
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines.len(), 1 + 25);
        for line in &lines[1..] {
            assert_eq!(line.split(',').count(), d + 2);
        }
    }
}
