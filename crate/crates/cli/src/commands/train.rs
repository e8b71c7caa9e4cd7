//! `graphkan train`: run seeded trials of one model on a graph and write
//! the experiment report.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;

use graphkan::graph::read_graph;
use graphkan::model::{save_checkpoint, ModelKind};
use graphkan::train::{render_table, run_experiment, train_trial_with_model, GraphInfo};
use graphkan::Graph64;

use crate::options::{parse_model, resolve_out, TrainOverrides};

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Graph file produced by `gen` (or hand-written in the same format).
    #[arg(long)]
    pub graph: PathBuf,
    /// Which model to train.
    #[arg(long, value_parser = parse_model)]
    pub model: ModelKind,
    /// Where to write the report JSON.
    #[arg(long)]
    pub out_report: PathBuf,
    /// Embed wall-clock timing in the report (makes the bytes
    /// run-dependent; off by default so reports are reproducible).
    #[arg(long)]
    pub timing: bool,
    /// Export the best trial's test-node features as CSV under this
    /// directory.
    #[arg(long)]
    pub export_features: Option<PathBuf>,
    /// Save the best trial's best-epoch model as a checkpoint.
    #[arg(long)]
    pub save_checkpoint: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: TrainOverrides,
}

pub fn run(args: TrainArgs) -> Result<ExitCode> {
    let cfg = args.overrides.build_config()?;
    let g: Graph64 = read_graph(&args.graph).context("loading graph")?;
    let info = GraphInfo::from_graph(&g, Some(args.graph.display().to_string()));
    let label = info.label();

    let outcome = run_experiment(
        &cfg,
        &[args.model],
        &g,
        info,
        args.overrides.workers,
        args.timing,
    )
    .context("running experiment")?;

    let report_path = resolve_out(&args.out_report);
    let mut body = serde_json::to_string_pretty(&outcome.report)?;
    body.push('\n');
    std::fs::write(&report_path, body)
        .with_context(|| format!("writing report {}", report_path.display()))?;

    let model_report = &outcome.report.models[0];
    print!(
        "{}",
        render_table(std::iter::once((label, model_report)))
    );
    for f in &model_report.failed {
        eprintln!("trial {} (seed {}) failed: {}", f.trial, f.seed, f.error);
    }
    println!("report: {}", report_path.display());

    let trials = &outcome.trial_results[0].1;
    if let Some(best) = trials.iter().max_by(|a, b| {
        a.best_val_acc
            .partial_cmp(&b.best_val_acc)
            .unwrap()
            .then(b.trial.cmp(&a.trial))
    }) {
        if let Some(dir) = &args.export_features {
            let dir = resolve_out(dir);
            let written = best.export_test_features(&dir).context("exporting features")?;
            for p in written {
                println!("features: {}", p.display());
            }
        }
        if let Some(ckpt) = &args.save_checkpoint {
            let (_, net) = train_trial_with_model(&cfg, args.model, &g, best.trial)
                .context("re-running best trial for checkpoint")?;
            let ckpt = resolve_out(ckpt);
            save_checkpoint(&net, &ckpt).context("saving checkpoint")?;
            println!("checkpoint: {}", ckpt.display());
        }
    }

    if model_report.trials.is_empty() {
        eprintln!("error: every trial failed");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}
