//! Layer stacks: the GraphKAN network and the MLP+ReLU GCN baseline.
//!
//! Both architectures share the same skeleton — three hidden blocks of
//!
//! ```text
//! M = aggregate(adj, H)          symmetric-normalized message passing
//! U = update(M)                  KAN layer, or dense + ReLU
//! H' = LayerNorm(U)
//! ```
//!
//! followed by a classifier head (one more KAN/dense layer, no
//! aggregation, no norm) mapping the last hidden width to the class
//! logits. The `concat_self` mode feeds `[H | M]` to the update instead
//! of the message alone.

mod checkpoint;
mod layers;
mod loss;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, ParamEntry};
pub use layers::{
    relu_backward, relu_forward, Dense, DenseCache, DenseGrads, LayerNorm, LayerNormCache,
    LayerNormGrads, ReluCache, LAYERNORM_EPS,
};
pub use loss::cross_entropy;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NormAdjacency;
use crate::kan::{BaseKind, KanCache, KanGrads, KanLayer};
use crate::numerics::{Matrix, Rng};
use crate::scalar::Scalar;
use crate::spline::SplineGrid;

/// Which architecture a network instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    GraphKan,
    Gcn,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::GraphKan => "graphkan",
            ModelKind::Gcn => "gcn",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graphkan" => Ok(ModelKind::GraphKan),
            "gcn" => Ok(ModelKind::Gcn),
            other => Err(Error::Config(format!(
                "unknown model '{other}', expected graphkan or gcn"
            ))),
        }
    }
}

/// Shared B-spline grid parameters for all KAN layers of a network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplineSpec {
    pub degree: usize,
    pub intervals: usize,
    pub domain: (f64, f64),
}

impl Default for SplineSpec {
    fn default() -> Self {
        SplineSpec {
            degree: 3,
            intervals: 5,
            domain: (-2.0, 2.0),
        }
    }
}

impl SplineSpec {
    pub fn build<S: Scalar>(&self) -> Result<SplineGrid<S>> {
        SplineGrid::uniform(
            self.degree,
            self.intervals,
            S::from_f64(self.domain.0),
            S::from_f64(self.domain.1),
        )
    }
}

/// Structural configuration of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d_in: usize,
    pub num_classes: usize,
    pub widths: [usize; 3],
    pub spline: SplineSpec,
    pub base: BaseKind,
    pub concat_self: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_in: 64,
            num_classes: 6,
            widths: [512, 256, 128],
            spline: SplineSpec::default(),
            base: BaseKind::Silu,
            concat_self: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_in == 0 {
            return Err(Error::Config("model: d_in must be positive".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::Config("model: need at least two classes".into()));
        }
        if self.widths.contains(&0) {
            return Err(Error::Config("model: zero layer width".into()));
        }
        self.spline.build::<f64>().map(|_| ())
    }
}

/// A node-update function: the thing that differs between the two
/// architectures. `Identity` exists so aggregation can be tested in
/// isolation.
#[derive(Debug, Clone)]
pub enum Update<S> {
    Kan(KanLayer<S>),
    Dense { layer: Dense<S>, relu: bool },
    Identity { dim: usize },
}

#[derive(Debug)]
pub enum UpdateCache<S> {
    Kan(KanCache<S>),
    Dense {
        dense: DenseCache<S>,
        relu: Option<ReluCache<S>>,
    },
    Identity,
}

#[derive(Debug, Clone)]
pub enum UpdateGrads<S> {
    Kan(KanGrads<S>),
    Dense(DenseGrads<S>),
    Identity,
}

impl<S: Scalar> Update<S> {
    pub fn in_dim(&self) -> usize {
        match self {
            Update::Kan(l) => l.in_dim(),
            Update::Dense { layer, .. } => layer.in_dim(),
            Update::Identity { dim } => *dim,
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Update::Kan(l) => l.out_dim(),
            Update::Dense { layer, .. } => layer.out_dim(),
            Update::Identity { dim } => *dim,
        }
    }

    fn forward(&self, x: &Matrix<S>) -> (Matrix<S>, UpdateCache<S>) {
        match self {
            Update::Kan(l) => {
                let (y, cache) = l.forward(x);
                (y, UpdateCache::Kan(cache))
            }
            Update::Dense { layer, relu } => {
                let (z, dense) = layer.forward(x);
                if *relu {
                    let (y, rcache) = relu_forward(&z);
                    (
                        y,
                        UpdateCache::Dense {
                            dense,
                            relu: Some(rcache),
                        },
                    )
                } else {
                    (z, UpdateCache::Dense { dense, relu: None })
                }
            }
            Update::Identity { .. } => (x.clone(), UpdateCache::Identity),
        }
    }

    fn backward(&self, cache: &UpdateCache<S>, d_out: &Matrix<S>) -> (Matrix<S>, UpdateGrads<S>) {
        match (self, cache) {
            (Update::Kan(l), UpdateCache::Kan(c)) => {
                let (dx, grads) = l.backward(c, d_out);
                (dx, UpdateGrads::Kan(grads))
            }
            (Update::Dense { layer, .. }, UpdateCache::Dense { dense, relu }) => {
                let dz = match relu {
                    Some(rcache) => relu_backward(rcache, d_out),
                    None => d_out.clone(),
                };
                let (dx, grads) = layer.backward(dense, &dz);
                (dx, UpdateGrads::Dense(grads))
            }
            (Update::Identity { .. }, UpdateCache::Identity) => {
                (d_out.clone(), UpdateGrads::Identity)
            }
            _ => panic!("update backward: cache kind does not match the layer"),
        }
    }

    fn params(&self) -> Vec<(&'static str, &[S])> {
        match self {
            Update::Kan(l) => l.params().to_vec(),
            Update::Dense { layer, .. } => layer.params().to_vec(),
            Update::Identity { .. } => Vec::new(),
        }
    }

    fn params_mut(&mut self) -> Vec<(&'static str, &mut [S])> {
        match self {
            Update::Kan(l) => l.params_mut().into(),
            Update::Dense { layer, .. } => layer.params_mut().into(),
            Update::Identity { .. } => Vec::new(),
        }
    }

    /// Logical shapes of the parameter arrays, matching the flat storage
    /// order of [`Update::params`].
    fn param_shapes(&self) -> Vec<(&'static str, Vec<usize>)> {
        match self {
            Update::Kan(l) => vec![
                (
                    "coeffs",
                    vec![l.in_dim(), l.out_dim(), l.grid().num_basis()],
                ),
                ("base_w", vec![l.in_dim(), l.out_dim()]),
                ("spline_w", vec![l.in_dim(), l.out_dim()]),
            ],
            Update::Dense { layer, .. } => vec![
                ("w", vec![layer.in_dim(), layer.out_dim()]),
                ("b", vec![layer.out_dim()]),
            ],
            Update::Identity { .. } => Vec::new(),
        }
    }
}

impl<S: Scalar> UpdateGrads<S> {
    fn params(&self) -> Vec<(&'static str, &[S])> {
        match self {
            UpdateGrads::Kan(g) => g.params().to_vec(),
            UpdateGrads::Dense(g) => vec![("w", g.w.as_slice()), ("b", g.b.as_slice())],
            UpdateGrads::Identity => Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
struct Block<S> {
    update: Update<S>,
    norm: LayerNorm<S>,
}

/// A 3-block network plus classifier head, of either architecture.
#[derive(Debug, Clone)]
pub struct Network<S> {
    kind: ModelKind,
    config: ModelConfig,
    blocks: Vec<Block<S>>,
    head: Update<S>,
}

/// Everything the forward pass produces: class logits, the post-norm
/// hidden features of each block (the "intermediate features" that get
/// clustered), and the cache the backward pass consumes.
pub struct NetForward<S> {
    pub logits: Matrix<S>,
    pub per_layer: Vec<Matrix<S>>,
    pub cache: NetCache<S>,
}

pub struct NetCache<S> {
    blocks: Vec<(UpdateCache<S>, LayerNormCache<S>)>,
    head: UpdateCache<S>,
    batch: usize,
}

/// Gradients for every parameter array of a [`Network`], in registry order.
pub struct NetGrads<S> {
    blocks: Vec<(UpdateGrads<S>, LayerNormGrads<S>)>,
    head: UpdateGrads<S>,
}

impl<S: Scalar> Network<S> {
    /// Freshly initialized network. Parameter draws happen in a fixed
    /// order (blocks first, then head), so a seed pins the full model.
    pub fn new(kind: ModelKind, config: &ModelConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let grid: SplineGrid<S> = config.spline.build()?;
        let mut blocks = Vec::with_capacity(config.widths.len());
        let mut prev = config.d_in;
        for &width in &config.widths {
            let in_dim = if config.concat_self { 2 * prev } else { prev };
            let update = match kind {
                ModelKind::GraphKan => {
                    Update::Kan(KanLayer::new(in_dim, width, grid.clone(), config.base, rng))
                }
                ModelKind::Gcn => Update::Dense {
                    layer: Dense::new(in_dim, width, rng),
                    relu: true,
                },
            };
            blocks.push(Block {
                update,
                norm: LayerNorm::new(width),
            });
            prev = width;
        }
        let head = match kind {
            ModelKind::GraphKan => Update::Kan(KanLayer::new(
                prev,
                config.num_classes,
                grid,
                config.base,
                rng,
            )),
            ModelKind::Gcn => Update::Dense {
                layer: Dense::new(prev, config.num_classes, rng),
                relu: false,
            },
        };
        Ok(Network {
            kind,
            config: config.clone(),
            blocks,
            head,
        })
    }

    /// Network whose updates are all identity maps: aggregation and norm
    /// only. Requires every width to equal `d_in` and `concat_self` off.
    pub fn identity(config: &ModelConfig) -> Result<Self> {
        if config.concat_self || config.widths.iter().any(|&w| w != config.d_in) {
            return Err(Error::Config(
                "identity network: widths must all equal d_in, concat_self off".into(),
            ));
        }
        let blocks = config
            .widths
            .iter()
            .map(|&w| Block {
                update: Update::Identity { dim: w },
                norm: LayerNorm::new(w),
            })
            .collect();
        Ok(Network {
            kind: ModelKind::Gcn,
            config: config.clone(),
            blocks,
            head: Update::Identity {
                dim: config.d_in,
            },
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn num_layers(&self) -> usize {
        self.blocks.len()
    }

    /// Full forward pass over the graph.
    /// Panics if `x` does not have `d_in` columns or `adj` a row per node.
    pub fn forward(&self, adj: &NormAdjacency<S>, x: &Matrix<S>) -> NetForward<S> {
        assert_eq!(
            x.cols(),
            self.config.d_in,
            "forward: input has {} columns, model expects {}",
            x.cols(),
            self.config.d_in
        );
        let mut h = x.clone();
        let mut per_layer = Vec::with_capacity(self.blocks.len());
        let mut caches = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let m = adj.aggregate(&h);
            let u_in = if self.config.concat_self {
                h.hcat(&m)
            } else {
                m
            };
            let (u, ucache) = block.update.forward(&u_in);
            let (hn, ncache) = block.norm.forward(&u);
            caches.push((ucache, ncache));
            per_layer.push(hn.clone());
            h = hn;
        }
        let (logits, head_cache) = self.head.forward(&h);
        NetForward {
            logits,
            per_layer,
            cache: NetCache {
                blocks: caches,
                head: head_cache,
                batch: x.rows(),
            },
        }
    }

    /// Backward pass from the logit gradient; returns gradients for every
    /// parameter array. The aggregation backward reuses `aggregate`
    /// itself: the normalized adjacency is symmetric.
    pub fn backward(
        &self,
        adj: &NormAdjacency<S>,
        cache: &NetCache<S>,
        d_logits: &Matrix<S>,
    ) -> NetGrads<S> {
        assert_eq!(d_logits.rows(), cache.batch, "backward: stale cache");
        let (mut dh, head_grads) = self.head.backward(&cache.head, d_logits);
        let mut rev = Vec::with_capacity(self.blocks.len());
        for (block, (ucache, ncache)) in self.blocks.iter().zip(&cache.blocks).rev() {
            let (du, ngrads) = block.norm.backward(ncache, &dh);
            let (du_in, ugrads) = block.update.backward(ucache, &du);
            dh = if self.config.concat_self {
                let prev = block.update.in_dim() / 2;
                let (dh_direct, dm) = du_in.split_cols(prev);
                let mut next = adj.aggregate(&dm);
                next.add_assign(&dh_direct);
                next
            } else {
                adj.aggregate(&du_in)
            };
            rev.push((ugrads, ngrads));
        }
        rev.reverse();
        NetGrads {
            blocks: rev,
            head: head_grads,
        }
    }

    /// Named views of every parameter array, in a stable order (blocks in
    /// depth order — update then norm — followed by the head).
    pub fn params(&self) -> Vec<(String, &[S])> {
        let mut out = Vec::new();
        for (l, block) in self.blocks.iter().enumerate() {
            for (name, data) in block.update.params() {
                out.push((format!("layer{l}.update.{name}"), data));
            }
            for (name, data) in block.norm.params() {
                out.push((format!("layer{l}.norm.{name}"), data));
            }
        }
        for (name, data) in self.head.params() {
            out.push((format!("head.{name}"), data));
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<(String, &mut [S])> {
        let mut out = Vec::new();
        for (l, block) in self.blocks.iter_mut().enumerate() {
            for (name, data) in block.update.params_mut() {
                out.push((format!("layer{l}.update.{name}"), data));
            }
            for (name, data) in block.norm.params_mut() {
                out.push((format!("layer{l}.norm.{name}"), data));
            }
        }
        for (name, data) in self.head.params_mut() {
            out.push((format!("head.{name}"), data));
        }
        out
    }

    /// Logical shapes aligned with [`Network::params`].
    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        for (l, block) in self.blocks.iter().enumerate() {
            for (name, shape) in block.update.param_shapes() {
                out.push((format!("layer{l}.update.{name}"), shape));
            }
            out.push((format!("layer{l}.norm.gamma"), vec![block.norm.dim()]));
            out.push((format!("layer{l}.norm.beta"), vec![block.norm.dim()]));
        }
        for (name, shape) in self.head.param_shapes() {
            out.push((format!("head.{name}"), shape));
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|(_, d)| d.len()).sum()
    }
}

impl<S: Scalar> NetGrads<S> {
    /// Gradient views aligned one-to-one with [`Network::params`].
    pub fn params(&self) -> Vec<(String, &[S])> {
        let mut out = Vec::new();
        for (l, (ugrads, ngrads)) in self.blocks.iter().enumerate() {
            for (name, data) in ugrads.params() {
                out.push((format!("layer{l}.update.{name}"), data));
            }
            out.push((format!("layer{l}.norm.gamma"), ngrads.gamma.as_slice()));
            out.push((format!("layer{l}.norm.beta"), ngrads.beta.as_slice()));
        }
        for (name, data) in self.head.params() {
            out.push((format!("head.{name}"), data));
        }
        out
    }
}
