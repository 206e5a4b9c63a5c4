use std::io::Write;

use super::SelectionRecord;
use crate::metrics::MetricReport;
use crate::Result;

pub const HISTORY_HEADER: &str = "iteration,num_labeled,micro_f1,macro_f1";
pub const SELECTION_HEADER: &str = "iteration,sample_id,strategy,score";

/// Rounds to the 6 decimals written in history files.
pub fn round6(v: f64) -> f64 {
    format!("{v:.6}").parse().unwrap_or(v)
}

pub fn write_history<W: Write>(mut out: W, history: &[MetricReport]) -> Result<()> {
    writeln!(out, "{HISTORY_HEADER}")?;
    for r in history {
        writeln!(
            out,
            "{},{},{:.6},{:.6}",
            r.iteration, r.num_labeled, r.micro_f1, r.macro_f1
        )?;
    }
    Ok(())
}

/// Scores are written at full precision; random picks leave the score empty.
pub fn write_selections<W: Write>(mut out: W, selections: &[SelectionRecord]) -> Result<()> {
    writeln!(out, "{SELECTION_HEADER}")?;
    for s in selections {
        let score = s.score.map(|v| format!("{v:e}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{}",
            s.iteration, s.sample_id, s.strategy, score
        )?;
    }
    Ok(())
}

pub fn history_csv(history: &[MetricReport]) -> String {
    let mut buf = Vec::new();
    write_history(&mut buf, history).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub fn selections_csv(selections: &[SelectionRecord]) -> String {
    let mut buf = Vec::new();
    write_selections(&mut buf, selections).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}
