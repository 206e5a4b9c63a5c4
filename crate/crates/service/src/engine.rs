//! Single-writer actor around [`AlState`].
//!
//! All mutations run on one thread in arrival order. After each one the
//! actor publishes a [`Snapshot`], which request handlers read without
//! waiting on training.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::{mpsc, Arc, RwLock};
use std::thread;

use tokio::sync::oneshot;

use mlal_core::engine::{round6, save_checkpoint_file, AlState, IterationOutcome, SubmitOutcome};
use mlal_core::{DatasetOrigin, Error, LabelVector, SampleId};

use crate::thumbnail::heatmap_base64;

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub num_classes: usize,
    pub class_names: Vec<String>,
    pub budget: usize,
    pub iteration: usize,
    pub labeled_count: usize,
    pub unlabeled_count: usize,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ProgressRow {
    pub iteration: usize,
    pub num_labeled: usize,
    pub micro_f1: f64,
    pub macro_f1: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchItem {
    pub id: SampleId,
    pub features: Vec<f64>,
    /// Base64 PNG, when the dataset has a renderer.
    pub thumbnail: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PendingView {
    pub iteration: usize,
    pub items: Vec<BatchItem>,
    pub received: BTreeSet<SampleId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub session: SessionInfo,
    pub history: Vec<ProgressRow>,
    pub pending: Option<PendingView>,
    pub busy: bool,
    pub finished: bool,
}

impl Snapshot {
    fn of(state: &AlState, session_id: &str, items: Option<Vec<BatchItem>>) -> Self {
        let pending = state.pending.as_ref().map(|p| PendingView {
            iteration: p.iteration,
            items: items.unwrap_or_default(),
            received: p.received.keys().cloned().collect(),
        });
        Self {
            session: SessionInfo {
                session_id: session_id.to_owned(),
                num_classes: state.pool.num_classes(),
                class_names: state.pool.class_names().to_vec(),
                budget: state.config.query.budget,
                iteration: state.tau,
                labeled_count: state.pool.labeled().len(),
                unlabeled_count: state.pool.unlabeled().len(),
            },
            history: state
                .history
                .iter()
                .map(|r| ProgressRow {
                    iteration: r.iteration,
                    num_labeled: r.num_labeled,
                    micro_f1: round6(r.micro_f1),
                    macro_f1: round6(r.macro_f1),
                })
                .collect(),
            pending,
            busy: false,
            finished: state.pending.is_none() && !state.can_continue(),
        }
    }
}

fn batch_items(state: &AlState) -> Option<Vec<BatchItem>> {
    let pending = state.pending.as_ref()?;
    let render = state.pool.origin() == DatasetOrigin::Synthetic;
    Some(
        pending
            .ids
            .iter()
            .filter_map(|id| state.pool.sample(id.as_str()))
            .map(|s| BatchItem {
                id: s.id.clone(),
                features: s.features.clone(),
                thumbnail: render.then(|| heatmap_base64(&s.features)),
            })
            .collect(),
    )
}

enum Command {
    Advance(oneshot::Sender<Result<(), String>>),
    Submit(
        BTreeMap<SampleId, LabelVector>,
        oneshot::Sender<Result<SubmitOutcome, Error>>,
    ),
}

/// Handle to the actor thread.
#[derive(Clone)]
pub struct Engine {
    snapshot: Arc<RwLock<Snapshot>>,
    commands: mpsc::Sender<Command>,
}

#[derive(Debug)]
pub struct EngineClosed;

impl Engine {
    /// Starts the actor. The state is switched to interactive labeling;
    /// `checkpoint`, when set, is rewritten after every mutation.
    pub fn spawn(
        mut state: AlState,
        session_id: impl Into<String>,
        checkpoint: Option<PathBuf>,
    ) -> Self {
        state.config.oracle = false;
        let session_id = session_id.into();
        let items = batch_items(&state);
        let snapshot = Arc::new(RwLock::new(Snapshot::of(&state, &session_id, items)));
        let (tx, rx) = mpsc::channel();
        let shared = Arc::clone(&snapshot);
        thread::spawn(move || {
            let mut actor = Actor {
                state,
                session_id,
                checkpoint,
                snapshot: shared,
                items: None,
            };
            actor.items = batch_items(&actor.state);
            for command in rx {
                actor.handle(command);
            }
        });
        Self {
            snapshot,
            commands: tx,
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        self.snapshot
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    /// Trains and queries the next batch if none is pending.
    pub async fn advance(&self) -> Result<Result<(), String>, EngineClosed> {
        let (tx, rx) = oneshot::channel();
        self.commands
            .send(Command::Advance(tx))
            .map_err(|_| EngineClosed)?;
        rx.await.map_err(|_| EngineClosed)
    }

    pub async fn submit(
        &self,
        labels: BTreeMap<SampleId, LabelVector>,
    ) -> Result<Result<SubmitOutcome, Error>, EngineClosed> {
        let (tx, rx) = oneshot::channel();
        self.commands
            .send(Command::Submit(labels, tx))
            .map_err(|_| EngineClosed)?;
        rx.await.map_err(|_| EngineClosed)
    }
}

struct Actor {
    state: AlState,
    session_id: String,
    checkpoint: Option<PathBuf>,
    snapshot: Arc<RwLock<Snapshot>>,
    items: Option<Vec<BatchItem>>,
}

impl Actor {
    fn publish(&self, busy: bool) {
        let mut snap = Snapshot::of(&self.state, &self.session_id, self.items.clone());
        snap.busy = busy;
        *self.snapshot.write().unwrap_or_else(|e| e.into_inner()) = snap;
    }

    fn persist(&self) -> Result<(), String> {
        match &self.checkpoint {
            Some(path) => {
                save_checkpoint_file(&self.state, path).map_err(|e| format!("checkpoint: {e}"))
            }
            None => Ok(()),
        }
    }

    fn handle(&mut self, command: Command) {
        match command {
            Command::Advance(reply) => {
                let _ = reply.send(self.advance());
            }
            Command::Submit(labels, reply) => {
                let result = self.state.submit_labels(labels);
                if result.is_ok() {
                    if self.state.pending.is_none() {
                        self.items = None;
                    }
                    self.publish(false);
                    if let Err(e) = self.persist() {
                        let _ = reply.send(Err(Error::Config(e)));
                        return;
                    }
                }
                let _ = reply.send(result);
            }
        }
    }

    fn advance(&mut self) -> Result<(), String> {
        if self.state.pending.is_some() || !self.state.can_continue() {
            self.publish(false);
            return Ok(());
        }
        self.publish(true);
        let outcome = self.state.run_iteration();
        self.items = batch_items(&self.state);
        self.publish(false);
        match outcome {
            Ok(
                IterationOutcome::AwaitingLabels
                | IterationOutcome::Exhausted
                | IterationOutcome::Advanced,
            ) => self.persist(),
            Err(e) => Err(e.to_string()),
        }
    }
}
