//! Model checkpointing: a self-describing JSON container mapping
//! parameter names (layer index + array role) to flat f64 arrays with
//! their logical shapes, plus the structural config needed to rebuild
//! the network.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::scalar::Scalar;

use super::{ModelConfig, ModelKind, Network};

pub const CHECKPOINT_SCHEMA: &str = "graphkan-checkpoint/v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema: String,
    pub model: ModelKind,
    pub config: ModelConfig,
    pub params: Vec<ParamEntry>,
}

impl Checkpoint {
    pub fn from_network<S: Scalar>(net: &Network<S>) -> Self {
        let shapes = net.param_shapes();
        let params = net
            .params()
            .into_iter()
            .zip(shapes)
            .map(|((name, data), (_, shape))| ParamEntry {
                name,
                shape,
                data: data.iter().map(|&v| v.to_f64()).collect(),
            })
            .collect();
        Checkpoint {
            schema: CHECKPOINT_SCHEMA.to_string(),
            model: net.kind(),
            config: net.config().clone(),
            params,
        }
    }

    pub fn into_network<S: Scalar>(self) -> Result<Network<S>> {
        if self.schema != CHECKPOINT_SCHEMA {
            return Err(Error::Config(format!(
                "checkpoint schema '{}' is not {CHECKPOINT_SCHEMA}",
                self.schema
            )));
        }
        // Build the skeleton, then overwrite every array by name.
        let mut net = Network::new(self.model, &self.config, &mut Rng::new(0))?;
        let mut targets = net.params_mut();
        if targets.len() != self.params.len() {
            return Err(Error::Config(format!(
                "checkpoint has {} parameter arrays, model expects {}",
                self.params.len(),
                targets.len()
            )));
        }
        for entry in &self.params {
            let slot = targets
                .iter_mut()
                .find(|(name, _)| name == &entry.name)
                .ok_or_else(|| {
                    Error::Config(format!("checkpoint names unknown parameter '{}'", entry.name))
                })?;
            if slot.1.len() != entry.data.len() {
                return Err(Error::Config(format!(
                    "parameter '{}' has {} values, model expects {}",
                    entry.name,
                    entry.data.len(),
                    slot.1.len()
                )));
            }
            for (dst, &src) in slot.1.iter_mut().zip(&entry.data) {
                *dst = S::from_f64(src);
            }
        }
        drop(targets);
        Ok(net)
    }
}

pub fn save_checkpoint<S: Scalar>(net: &Network<S>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut body = serde_json::to_string(&Checkpoint::from_network(net)).map_err(|e| {
        Error::Parse {
            path: path.display().to_string(),
            detail: e.to_string(),
        }
    })?;
    body.push('\n');
    fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_checkpoint<S: Scalar>(path: impl AsRef<Path>) -> Result<Network<S>> {
    let path = path.as_ref();
    let body = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let ckpt: Checkpoint = serde_json::from_str(&body).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    ckpt.into_network()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{normalize, Graph};
    use crate::numerics::{init_params, Init};

    #[test]
    fn round_trip_preserves_forward_outputs() {
        let dir = std::env::temp_dir().join("graphkan-ckpt-tests");
        fs::create_dir_all(&dir).unwrap();
        let cfg = ModelConfig {
            d_in: 4,
            widths: [6, 5, 4],
            ..ModelConfig::default()
        };
        for kind in [ModelKind::GraphKan, ModelKind::Gcn] {
            let net = Network::<f64>::new(kind, &cfg, &mut Rng::new(44)).unwrap();
            let path = dir.join(format!("{kind}.json"));
            save_checkpoint(&net, &path).unwrap();
            let loaded: Network<f64> = load_checkpoint(&path).unwrap();

            let mut rng = Rng::new(45);
            let g = Graph::new(
                5,
                init_params(&mut rng, 5, 4, Init::Uniform { bound: 1.0 }),
                vec![(0, 1), (1, 2), (2, 3), (3, 4)],
                vec![Some(0); 5],
                vec![true; 5],
                vec![false; 5],
                vec![false; 5],
                None,
            )
            .unwrap();
            let adj = normalize(&g, true).unwrap();
            let a = net.forward(&adj, g.features());
            let b = loaded.forward(&adj, g.features());
            assert_eq!(a.logits, b.logits, "{kind}");
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let cfg = ModelConfig {
            d_in: 4,
            widths: [6, 5, 4],
            ..ModelConfig::default()
        };
        let net = Network::<f64>::new(ModelKind::Gcn, &cfg, &mut Rng::new(1)).unwrap();
        let mut ckpt = Checkpoint::from_network(&net);
        ckpt.params[0].data.pop();
        assert!(ckpt.into_network::<f64>().is_err());
    }

    #[test]
    fn checkpoint_carries_nonzero_data_and_shapes() {
        let cfg = ModelConfig {
            d_in: 3,
            widths: [4, 4, 4],
            ..ModelConfig::default()
        };
        let net = Network::<f64>::new(ModelKind::GraphKan, &cfg, &mut Rng::new(7)).unwrap();
        let ckpt = Checkpoint::from_network(&net);
        let total: f64 = ckpt
            .params
            .iter()
            .flat_map(|p| p.data.iter())
            .map(|v| v.abs())
            .sum();
        assert!(total > 0.0);
        for p in &ckpt.params {
            assert_eq!(p.shape.iter().product::<usize>(), p.data.len(), "{}", p.name);
        }
    }
}
