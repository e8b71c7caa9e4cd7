//! `graphkan gen`: write a synthetic benchmark graph.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;

use graphkan::graph::{self, count_mask, label_budget, write_graph, BgConfig};
use graphkan::Graph64;

use crate::options::resolve_out;

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Benchmark graph id (fixes the labeled-node budget).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub graph_id: u8,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output graph file (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Feature dimensionality (waveform samples per node).
    #[arg(long)]
    pub d_in: Option<usize>,
    /// Neighbors per node in the k-NN edge construction.
    #[arg(long)]
    pub knn_k: Option<usize>,
    /// Spacing of the class-specific frequencies.
    #[arg(long)]
    pub separation: Option<f64>,
    /// Standard deviation of the additive Gaussian noise.
    #[arg(long)]
    pub noise: Option<f64>,
}

pub fn run(args: GenArgs) -> Result<ExitCode> {
    let defaults = BgConfig::default();
    let cfg = BgConfig {
        graph_id: args.graph_id,
        d_in: args.d_in.unwrap_or(defaults.d_in),
        knn_k: args.knn_k.unwrap_or(defaults.knn_k),
        class_separation: args.separation.unwrap_or(defaults.class_separation),
        noise: args.noise.unwrap_or(defaults.noise),
    };
    let g: Graph64 = graph::gen_bg(&cfg, args.seed).context("generating graph")?;
    let out = resolve_out(&args.out);
    write_graph(&g, &out).context("writing graph")?;

    let (label0, per_class) = label_budget(cfg.graph_id)?;
    println!("wrote {}", out.display());
    println!(
        "bg{}: {} nodes, {} edges, d_in {}",
        cfg.graph_id,
        g.n_nodes(),
        g.edges().len(),
        g.d_in()
    );
    println!(
        "labeled: {} (label 0: {label0}, labels 1-5: {per_class} each), test: {}",
        count_mask(g.train_mask()),
        count_mask(g.test_mask()),
    );
    Ok(ExitCode::SUCCESS)
}
