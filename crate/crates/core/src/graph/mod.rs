//! Graph representation, symmetric-normalized aggregation, the synthetic
//! benchmark generator, and graph file I/O.

mod gen;
mod io;

pub use gen::{gen_bg, label_budget, BgConfig, NUM_CLASSES, TEST_NODES};
pub use io::{read_graph, write_graph};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};
use crate::scalar::Scalar;

/// Provenance of a generated graph, echoed into the graph file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub generator: BgConfig,
    pub seed: u64,
}

/// An undirected graph with node features, optional per-node labels, and
/// disjoint train/val/test masks.
///
/// Edges are stored canonically: `u < w`, sorted, no duplicates, no
/// self-edges. Self-loops are a property of the normalized adjacency, not
/// of the stored edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph<S> {
    n_nodes: usize,
    features: Matrix<S>,
    edges: Vec<(u32, u32)>,
    labels: Vec<Option<u32>>,
    train_mask: Vec<bool>,
    val_mask: Vec<bool>,
    test_mask: Vec<bool>,
    meta: Option<GraphMeta>,
}

impl<S: Scalar> Graph<S> {
    /// Validates and builds a graph. Edges may arrive in any orientation
    /// and order; duplicates and self-edges are rejected.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_nodes: usize,
        features: Matrix<S>,
        edges: Vec<(u32, u32)>,
        labels: Vec<Option<u32>>,
        train_mask: Vec<bool>,
        val_mask: Vec<bool>,
        test_mask: Vec<bool>,
        meta: Option<GraphMeta>,
    ) -> Result<Self> {
        if features.rows() != n_nodes {
            return Err(Error::Graph(format!(
                "feature matrix has {} rows for {} nodes",
                features.rows(),
                n_nodes
            )));
        }
        for (name, mask) in [
            ("train_mask", &train_mask),
            ("val_mask", &val_mask),
            ("test_mask", &test_mask),
        ] {
            if mask.len() != n_nodes {
                return Err(Error::Graph(format!(
                    "{name} has {} entries for {} nodes",
                    mask.len(),
                    n_nodes
                )));
            }
        }
        if labels.len() != n_nodes {
            return Err(Error::Graph(format!(
                "labels have {} entries for {} nodes",
                labels.len(),
                n_nodes
            )));
        }
        for v in 0..n_nodes {
            let in_sets =
                usize::from(train_mask[v]) + usize::from(val_mask[v]) + usize::from(test_mask[v]);
            if in_sets > 1 {
                return Err(Error::Graph(format!(
                    "node {v} appears in more than one of train/val/test"
                )));
            }
            if (train_mask[v] || val_mask[v]) && labels[v].is_none() {
                return Err(Error::Graph(format!(
                    "node {v} is in train/val but has no label"
                )));
            }
        }
        let mut canonical = Vec::with_capacity(edges.len());
        for (idx, &(u, w)) in edges.iter().enumerate() {
            if u as usize >= n_nodes || w as usize >= n_nodes {
                return Err(Error::Graph(format!(
                    "edge #{idx} ({u}, {w}) has an endpoint >= n_nodes ({n_nodes})"
                )));
            }
            if u == w {
                return Err(Error::Graph(format!("edge #{idx} ({u}, {w}) is a self-edge")));
            }
            canonical.push((u.min(w), u.max(w)));
        }
        canonical.sort_unstable();
        if let Some(dup) = canonical.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Graph(format!(
                "duplicate edge ({}, {})",
                dup[0].0, dup[0].1
            )));
        }
        Ok(Graph {
            n_nodes,
            features,
            edges: canonical,
            labels,
            train_mask,
            val_mask,
            test_mask,
            meta,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn d_in(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix<S> {
        &self.features
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn labels(&self) -> &[Option<u32>] {
        &self.labels
    }

    pub fn train_mask(&self) -> &[bool] {
        &self.train_mask
    }

    pub fn val_mask(&self) -> &[bool] {
        &self.val_mask
    }

    pub fn test_mask(&self) -> &[bool] {
        &self.test_mask
    }

    pub fn meta(&self) -> Option<&GraphMeta> {
        self.meta.as_ref()
    }

    /// Number of classes: one past the highest label.
    pub fn num_classes(&self) -> usize {
        self.labels
            .iter()
            .flatten()
            .map(|&c| c as usize + 1)
            .max()
            .unwrap_or(0)
    }

    /// Moves a stratified `fraction` of the train nodes (per class,
    /// rounding down) into the validation mask. Classes with fewer than
    /// two labeled nodes stay fully in train and are reported back.
    ///
    /// The validation mask must still be empty.
    pub fn split_validation(mut self, fraction: f64, rng: &mut Rng) -> Result<(Self, Vec<String>)> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::Config(format!(
                "validation fraction {fraction} outside [0, 1)"
            )));
        }
        if self.val_mask.iter().any(|&m| m) {
            return Err(Error::Graph("validation mask already populated".into()));
        }
        if !self.train_mask.iter().any(|&m| m) {
            return Err(Error::Graph("no labeled train nodes to split".into()));
        }
        let mut warnings = Vec::new();
        let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); self.num_classes()];
        for v in 0..self.n_nodes {
            if self.train_mask[v] {
                let c = self.labels[v].expect("train node without label") as usize;
                per_class[c].push(v);
            }
        }
        for (c, mut nodes) in per_class.into_iter().enumerate() {
            if nodes.is_empty() {
                continue;
            }
            if nodes.len() < 2 {
                warnings.push(format!(
                    "class {c} has only {} labeled node(s); kept fully in train",
                    nodes.len()
                ));
                continue;
            }
            let take = (fraction * nodes.len() as f64).floor() as usize;
            rng.shuffle(&mut nodes);
            for &v in nodes.iter().take(take) {
                self.train_mask[v] = false;
                self.val_mask[v] = true;
            }
        }
        Ok((self, warnings))
    }
}

/// Number of set entries in a mask.
pub fn count_mask(mask: &[bool]) -> usize {
    mask.iter().filter(|&&m| m).count()
}

/// Compressed symmetric-normalized adjacency: per node a sorted neighbor
/// list with coefficient `(deg(v) deg(w))^{-1/2}`. When built with
/// self-loops each node lists itself and degrees count the loop.
#[derive(Debug, Clone, PartialEq)]
pub struct NormAdjacency<S> {
    n_nodes: usize,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    coeffs: Vec<S>,
    self_loops: bool,
}

/// Builds the normalized adjacency of a graph. An isolated node without
/// self-loops has degree zero and no valid coefficient, which is a data
/// error.
pub fn normalize<S: Scalar>(g: &Graph<S>, self_loops: bool) -> Result<NormAdjacency<S>> {
    let n = g.n_nodes();
    let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &(u, w) in g.edges() {
        lists[u as usize].push(w);
        lists[w as usize].push(u);
    }
    if self_loops {
        for (v, list) in lists.iter_mut().enumerate() {
            list.push(v as u32);
        }
    }
    let degrees: Vec<usize> = lists.iter().map(Vec::len).collect();
    if let Some(v) = degrees.iter().position(|&d| d == 0) {
        return Err(Error::Graph(format!(
            "node {v} is isolated; degree zero has no (deg v * deg w)^(-1/2) coefficient \
             (enable self-loops or connect the node)"
        )));
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut neighbors = Vec::new();
    let mut coeffs = Vec::new();
    offsets.push(0);
    for (v, mut list) in lists.into_iter().enumerate() {
        list.sort_unstable();
        for &w in &list {
            let d = (degrees[v] as f64 * degrees[w as usize] as f64).sqrt();
            coeffs.push(S::from_f64(1.0 / d));
        }
        neighbors.extend_from_slice(&list);
        offsets.push(neighbors.len());
    }
    Ok(NormAdjacency {
        n_nodes: n,
        offsets,
        neighbors,
        coeffs,
        self_loops,
    })
}

impl<S: Scalar> NormAdjacency<S> {
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn has_self_loops(&self) -> bool {
        self.self_loops
    }

    /// Neighbors of `v` (including `v` itself when built with self-loops)
    /// with their normalization coefficients.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, S)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.neighbors[range.clone()]
            .iter()
            .zip(&self.coeffs[range])
            .map(|(&w, &c)| (w as usize, c))
    }

    /// Coefficient of the (v, w) entry, if present.
    pub fn coeff(&self, v: usize, w: usize) -> Option<S> {
        let range = self.offsets[v]..self.offsets[v + 1];
        let list = &self.neighbors[range.clone()];
        list.binary_search(&(w as u32))
            .ok()
            .map(|pos| self.coeffs[range.start + pos])
    }

    /// Message aggregation: `M[v] = sum_w coeff(v, w) * H[w]`.
    /// Panics if `h` does not have one row per node.
    pub fn aggregate(&self, h: &Matrix<S>) -> Matrix<S> {
        assert_eq!(
            h.rows(),
            self.n_nodes,
            "aggregate: feature matrix has {} rows for {} nodes",
            h.rows(),
            self.n_nodes
        );
        let d = h.cols();
        let mut out = Matrix::zeros(self.n_nodes, d);
        for v in 0..self.n_nodes {
            let out_row = out.row_mut(v);
            for idx in self.offsets[v]..self.offsets[v + 1] {
                let w = self.neighbors[idx] as usize;
                let c = self.coeffs[idx];
                for (o, &hval) in out_row.iter_mut().zip(h.row(w)) {
                    *o += c * hval;
                }
            }
        }
        out
    }
}
