//! Graph file I/O.
//!
//! A graph is a single JSON document:
//!
//! ```json
//! {
//!   "n_nodes": 3,
//!   "d_in": 2,
//!   "features": [[0.1, -0.2], [0.0, 1.5], [2.25, 0.5]],
//!   "edges": [[0, 1], [1, 2]],
//!   "labels": [0, 1, null],
//!   "train_mask": [true, true, false],
//!   "val_mask": [false, false, false],
//!   "test_mask": [false, false, true],
//!   "meta": { "generator": { ... }, "seed": 7 }
//! }
//! ```
//!
//! Floats round-trip exactly (shortest-representation encoding), so
//! write-then-read reproduces the graph field by field and generation is
//! byte-deterministic.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::Scalar;

use super::{Graph, GraphMeta};

#[derive(Serialize, Deserialize)]
struct GraphFile<S> {
    n_nodes: usize,
    d_in: usize,
    features: Vec<Vec<S>>,
    edges: Vec<(u32, u32)>,
    labels: Vec<Option<u32>>,
    train_mask: Vec<bool>,
    val_mask: Vec<bool>,
    test_mask: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<GraphMeta>,
}

pub fn write_graph<S: Scalar + Serialize>(g: &Graph<S>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = GraphFile {
        n_nodes: g.n_nodes(),
        d_in: g.d_in(),
        features: (0..g.n_nodes()).map(|v| g.features().row(v).to_vec()).collect(),
        edges: g.edges().to_vec(),
        labels: g.labels().to_vec(),
        train_mask: g.train_mask().to_vec(),
        val_mask: g.val_mask().to_vec(),
        test_mask: g.test_mask().to_vec(),
        meta: g.meta().cloned(),
    };
    let mut body = serde_json::to_string(&file)
        .map_err(|e| Error::Parse {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
    body.push('\n');
    fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_graph<S: Scalar + DeserializeOwned>(path: impl AsRef<Path>) -> Result<Graph<S>> {
    let path = path.as_ref();
    let body = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let file: GraphFile<S> = serde_json::from_str(&body).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        detail: e.to_string(), // serde_json reports line and column
    })?;
    if file.features.len() != file.n_nodes {
        return Err(Error::Parse {
            path: path.display().to_string(),
            detail: format!(
                "features: {} rows for n_nodes = {}",
                file.features.len(),
                file.n_nodes
            ),
        });
    }
    if let Some(bad) = file.features.iter().position(|row| row.len() != file.d_in) {
        return Err(Error::Parse {
            path: path.display().to_string(),
            detail: format!(
                "features: row {bad} has {} values, d_in = {}",
                file.features[bad].len(),
                file.d_in
            ),
        });
    }
    let features = Matrix::from_rows(&file.features);
    Graph::new(
        file.n_nodes,
        features,
        file.edges,
        file.labels,
        file.train_mask,
        file.val_mask,
        file.test_mask,
        file.meta,
    )
    .map_err(|e| Error::Parse {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}
