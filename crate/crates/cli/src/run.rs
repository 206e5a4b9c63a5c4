use std::fs;
use std::path::{Path, PathBuf};

use mlal_core::engine::{history_csv, run_experiment, selections_csv, ExperimentResult};
use mlal_core::{DatasetPool, MetricReport};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const SUMMARY_FILE: &str = "summary.csv";

/// Mean over seeds, row by row. All seeds must share the labeling schedule.
pub fn summarize(histories: &[Vec<MetricReport>]) -> Result<Vec<MetricReport>> {
    let first = histories
        .first()
        .ok_or_else(|| CliError::Runtime("no runs to summarize".into()))?;
    if histories.iter().any(|h| h.len() != first.len()) {
        return Err(CliError::Runtime(
            "seeds ran a different number of iterations".into(),
        ));
    }
    let n = histories.len() as f64;
    let mut out = Vec::with_capacity(first.len());
    for (i, head) in first.iter().enumerate() {
        let mut mean = MetricReport {
            micro_f1: 0.0,
            macro_f1: 0.0,
            per_class_f1: vec![0.0; head.per_class_f1.len()],
            ..head.clone()
        };
        for h in histories {
            let row = &h[i];
            if row.iteration != head.iteration || row.num_labeled != head.num_labeled {
                return Err(CliError::Runtime(format!(
                    "seeds disagree on the schedule at row {i}"
                )));
            }
            mean.micro_f1 += row.micro_f1 / n;
            mean.macro_f1 += row.macro_f1 / n;
            for (m, v) in mean.per_class_f1.iter_mut().zip(&row.per_class_f1) {
                *m += v / n;
            }
        }
        out.push(mean);
    }
    Ok(out)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// Runs every seed on its own thread and writes the artifacts in seed order.
/// Returns the run directory.
pub fn run(config: &RunConfig, dataset: &DatasetPool, out: &Path) -> Result<PathBuf> {
    let dir = out.join(config.label());
    fs::create_dir_all(&dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    let seeds = config.seeds();

    let results: Vec<mlal_core::Result<ExperimentResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                scope.spawn(move || run_experiment(&config.experiment(seed, true), dataset))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(mlal_core::Error::Config("worker panicked".into())))
            })
            .collect()
    });

    let mut histories = Vec::with_capacity(seeds.len());
    for (seed, result) in seeds.iter().zip(results) {
        let result = result.map_err(|e| CliError::Runtime(format!("seed {seed}: {e}")))?;
        write(
            &dir.join(format!("history_seed{seed}.csv")),
            &history_csv(&result.history),
        )?;
        write(
            &dir.join(format!("selection_seed{seed}.csv")),
            &selections_csv(&result.selections),
        )?;
        histories.push(result.history);
    }
    write(
        &dir.join(SUMMARY_FILE),
        &history_csv(&summarize(&histories)?),
    )?;
    let resolved = toml::to_string(config).map_err(|e| CliError::Runtime(e.to_string()))?;
    write(&dir.join("config.toml"), &resolved)?;
    Ok(dir)
}
