//! Versioned JSON checkpoints.
//!
//! All randomness is derived from configured seeds and the round counter,
//! so the state holds no generator cursors and a resumed run replays the
//! same draws as an uninterrupted one.

use serde::{Deserialize, Serialize};

use super::AlState;
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize)]
struct CheckpointRef<'a> {
    format_version: u32,
    state: &'a AlState,
}

#[derive(Deserialize)]
struct Header {
    format_version: Option<u32>,
}

#[derive(Deserialize)]
struct CheckpointOwned {
    #[allow(dead_code)]
    format_version: u32,
    state: AlState,
}

pub fn save_checkpoint(state: &AlState) -> Result<Vec<u8>> {
    let doc = CheckpointRef {
        format_version: CHECKPOINT_VERSION,
        state,
    };
    serde_json::to_vec_pretty(&doc).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<AlState> {
    let header: Header = serde_json::from_slice(bytes)
        .map_err(|e| Error::Checkpoint(format!("corrupt checkpoint: {e}")))?;
    match header.format_version {
        Some(CHECKPOINT_VERSION) => {}
        Some(v) => {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {v} (expected {CHECKPOINT_VERSION})"
            )))
        }
        None => return Err(Error::Checkpoint("missing format_version".into())),
    }
    let doc: CheckpointOwned = serde_json::from_slice(bytes)
        .map_err(|e| Error::Checkpoint(format!("corrupt checkpoint: {e}")))?;
    let state = doc.state;
    state.config.validate()?;
    state.pool.check_invariants()?;
    if let Some(p) = &state.params_now {
        p.validate()?;
    }
    if let Some(p) = &state.params_prev {
        p.validate()?;
    }
    Ok(state)
}

pub fn save_checkpoint_file(state: &AlState, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, save_checkpoint(state)?)?;
    Ok(())
}

pub fn load_checkpoint_file(path: &std::path::Path) -> Result<AlState> {
    load_checkpoint(&std::fs::read(path)?)
}
