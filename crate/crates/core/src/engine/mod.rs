//! The iterative protocol: train, evaluate, query, label, extend.

mod checkpoint;
mod logs;
mod state;

pub use checkpoint::{
    load_checkpoint, load_checkpoint_file, save_checkpoint, save_checkpoint_file,
    CHECKPOINT_VERSION,
};
pub use logs::{
    history_csv, round6, selections_csv, write_history, write_selections, HISTORY_HEADER,
    SELECTION_HEADER,
};
pub use state::{
    AlState, ExperimentConfig, InitMode, IterationOutcome, PendingBatch, SelectionRecord,
    SubmitOutcome,
};

use crate::metrics::MetricReport;
use crate::pool::DatasetPool;
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub history: Vec<MetricReport>,
    pub selections: Vec<SelectionRecord>,
    pub state: AlState,
}

/// Seeded initial draw followed by oracle rounds until a stopping rule
/// fires.
pub fn run_experiment(
    config: &ExperimentConfig,
    dataset: &DatasetPool,
) -> Result<ExperimentResult> {
    if !config.oracle {
        return Err(crate::Error::Config(
            "run_experiment needs oracle mode".into(),
        ));
    }
    let mut state = AlState::start(config.clone(), dataset.clone())?;
    state.run_to_completion()?;
    Ok(ExperimentResult {
        history: state.history.clone(),
        selections: state.selections.clone(),
        state,
    })
}
