//! `graphkan compare`: both models on each graph with paired seeds,
//! accuracy/time/silhouette side by side. The benchmark analogue of the
//! accuracy-and-time comparison figure.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;

use graphkan::graph::read_graph;
use graphkan::model::ModelKind;
use graphkan::train::{
    render_table, run_experiment, CompareEntry, CompareReport, GraphInfo, COMPARE_SCHEMA,
};
use graphkan::Graph64;

use crate::options::{resolve_out, TrainOverrides};

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Graph files to compare on.
    #[arg(long, num_args = 1.., required = true)]
    pub graphs: Vec<PathBuf>,
    /// Where to write the combined report JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the plain-text table here.
    #[arg(long)]
    pub out_table: Option<PathBuf>,
    /// Export each model's best-trial test features under
    /// DIR/<graph>/<model>/.
    #[arg(long)]
    pub export_features: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: TrainOverrides,
}

pub fn run(args: CompareArgs) -> Result<ExitCode> {
    let cfg = args.overrides.build_config()?;
    let kinds = [ModelKind::GraphKan, ModelKind::Gcn];
    let mut entries = Vec::new();
    let mut rows: Vec<(String, graphkan::train::ModelReport)> = Vec::new();
    let mut failures = Vec::new();

    for path in &args.graphs {
        let loaded: Result<Graph64> =
            read_graph(path).with_context(|| format!("loading {}", path.display()));
        let g = match loaded {
            Ok(g) => g,
            Err(e) => {
                eprintln!("skipping {}: {e:#}", path.display());
                failures.push((path.display().to_string(), format!("{e:#}")));
                continue;
            }
        };
        let info = GraphInfo::from_graph(&g, Some(path.display().to_string()));
        let label = info.label();
        // timing always recorded here: the time comparison is the point
        match run_experiment(&cfg, &kinds, &g, info.clone(), args.overrides.workers, true) {
            Ok(outcome) => {
                for m in &outcome.report.models {
                    rows.push((label.clone(), m.clone()));
                }
                if let Some(dir) = &args.export_features {
                    let dir = resolve_out(dir);
                    for (kind, trials) in &outcome.trial_results {
                        if let Some(best) = trials.iter().max_by(|a, b| {
                            a.best_val_acc
                                .partial_cmp(&b.best_val_acc)
                                .unwrap()
                                .then(b.trial.cmp(&a.trial))
                        }) {
                            let sub = dir.join(&label).join(kind.to_string());
                            best.export_test_features(&sub)
                                .context("exporting features")?;
                        }
                    }
                }
                entries.push(CompareEntry {
                    graph: info,
                    models: outcome.report.models,
                });
            }
            Err(e) => {
                eprintln!("skipping {}: {e:#}", path.display());
                failures.push((path.display().to_string(), format!("{e:#}")));
            }
        }
    }

    let report = CompareReport {
        schema: COMPARE_SCHEMA.to_string(),
        config: cfg,
        workers: args.overrides.workers,
        entries,
    };
    let out = resolve_out(&args.out);
    let mut body = serde_json::to_string_pretty(&report)?;
    body.push('\n');
    std::fs::write(&out, body).with_context(|| format!("writing report {}", out.display()))?;

    let table = render_table(rows.iter().map(|(g, m)| (g.clone(), m)));
    print!("{table}");
    println!("report: {}", out.display());
    if let Some(table_path) = &args.out_table {
        let table_path = resolve_out(table_path);
        std::fs::write(&table_path, &table)
            .with_context(|| format!("writing table {}", table_path.display()))?;
        println!("table: {}", table_path.display());
    }

    for (path, e) in &failures {
        eprintln!("failed graph {path}: {e}");
    }
    if report.entries.is_empty() {
        eprintln!("error: no graph produced results");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}
