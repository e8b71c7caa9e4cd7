//! Shared flag handling: config-file loading, flag overrides, and output
//! path resolution.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;

use graphkan::kan::BaseKind;
use graphkan::model::ModelKind;
use graphkan::train::TrainConfig;

/// Environment variable that re-roots relative output paths.
pub const OUT_DIR_ENV: &str = "GRAPHKAN_OUT_DIR";

/// Resolves an output path: relative paths land under `$GRAPHKAN_OUT_DIR`
/// when it is set.
pub fn resolve_out(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Training-protocol overrides shared by `train` and `compare`.
/// Values omitted here (and in the optional config file) fall back to the
/// benchmark defaults.
#[derive(Args, Debug, Clone)]
pub struct TrainOverrides {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Trials per model (paired seeds across models).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Base seed; trial i uses seed + i.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Training epochs (the schedule anneals over this horizon).
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr_max: Option<f64>,
    #[arg(long)]
    pub lr_min: Option<f64>,
    /// Fraction of labeled nodes moved to the validation split.
    #[arg(long)]
    pub val_fraction: Option<f64>,
    /// Hidden widths, e.g. 64,32,16 (use 512,256,128 for the full-size
    /// structure).
    #[arg(long, value_parser = parse_widths)]
    pub widths: Option<Widths>,
    /// B-spline degree of the KAN edge functions.
    #[arg(long)]
    pub spline_degree: Option<usize>,
    /// Number of B-spline grid intervals.
    #[arg(long)]
    pub spline_grid: Option<usize>,
    /// Spline domain as lo,hi.
    #[arg(long, value_parser = parse_domain)]
    pub spline_domain: Option<Domain>,
    /// Disable self-loops in the normalized adjacency.
    #[arg(long)]
    pub no_self_loops: bool,
    /// Base term of the KAN edge functions.
    #[arg(long, value_parser = parse_base)]
    pub base: Option<BaseKind>,
    /// Feed [h_v | m_v] to the update function instead of the message alone.
    #[arg(long)]
    pub concat_self: bool,
    /// Concurrent trials (default 1 for a reproducible trial order).
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

pub type Widths = [usize; 3];
pub type Domain = (f64, f64);

/// Widths parser shared with the gradcheck --sizes flag.
pub fn parse_widths_pub(s: &str) -> Result<Widths, String> {
    parse_widths(s)
}

fn parse_widths(s: &str) -> Result<Widths, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let [a, b, c] = parts[..] else {
        return Err(format!("expected three widths like 64,32,16, got '{s}'"));
    };
    Ok([a, b, c])
}

fn parse_domain(s: &str) -> Result<Domain, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let [lo, hi] = parts[..] else {
        return Err(format!("expected lo,hi like -2,2, got '{s}'"));
    };
    Ok((lo, hi))
}

fn parse_base(s: &str) -> Result<BaseKind, String> {
    match s {
        "silu" => Ok(BaseKind::Silu),
        "none" => Ok(BaseKind::None),
        other => Err(format!("unknown base '{other}', expected silu or none")),
    }
}

pub fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse::<ModelKind>().map_err(|e| e.to_string())
}

impl TrainOverrides {
    /// Defaults <- config file <- flags.
    pub fn build_config(&self) -> Result<TrainConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let body = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str::<TrainConfig>(&body)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => TrainConfig::default(),
        };
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.lr_max {
            cfg.lr_max = v;
        }
        if let Some(v) = self.lr_min {
            cfg.lr_min = v;
        }
        if let Some(v) = self.val_fraction {
            cfg.val_fraction = v;
        }
        if let Some(v) = self.widths {
            cfg.widths = v;
        }
        if let Some(v) = self.spline_degree {
            cfg.spline.degree = v;
        }
        if let Some(v) = self.spline_grid {
            cfg.spline.intervals = v;
        }
        if let Some(v) = self.spline_domain {
            cfg.spline.domain = v;
        }
        if self.no_self_loops {
            cfg.self_loops = false;
        }
        if let Some(v) = self.base {
            cfg.base = v;
        }
        if self.concat_self {
            cfg.concat_self = true;
        }
        graphkan::train::TrainConfig::validate(&cfg)?;
        Ok(cfg)
    }
}
