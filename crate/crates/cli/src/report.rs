//! Report serialization in JSON and CSV.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use schur_radii::registry::{ChainReport, Verdict};
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Common envelope of every report.
#[derive(Debug, Serialize)]
pub struct Envelope<T: Serialize> {
    pub toolkit: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    #[serde(flatten)]
    pub body: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(config: RunConfig, body: T) -> Self {
        Envelope {
            toolkit: "schur-radii",
            version: env!("CARGO_PKG_VERSION"),
            config,
            body,
        }
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Inconclusive => "inconclusive",
        Verdict::Fail => "fail",
    }
}

/// One row per term; the slack and verdict are those of the link that ends
/// at the term, empty for the first term of each segment.
pub fn write_csv<'a, W: Write>(out: W, reports: impl IntoIterator<Item = &'a ChainReport>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["chain_id", "trial", "term_index", "term_label", "lo", "hi", "slack", "verdict"])?;
    for r in reports {
        let trial = r.trial.map(|t| t.to_string()).unwrap_or_default();
        for t in &r.terms {
            let link = r.links.iter().find(|l| l.to == t.index);
            w.write_record([
                r.chain_id.clone(),
                trial.clone(),
                t.index.to_string(),
                t.label.clone(),
                format!("{:e}", t.lo),
                format!("{:e}", t.hi),
                link.map(|l| format!("{:e}", l.slack)).unwrap_or_default(),
                link.map(|l| verdict_str(l.verdict).to_string()).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `bytes` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Exit code for a collection of verdicts: fail beats inconclusive beats pass.
pub fn exit_code(verdicts: impl IntoIterator<Item = Verdict>) -> u8 {
    match verdicts.into_iter().max() {
        Some(Verdict::Fail) => 1,
        Some(Verdict::Inconclusive) => 3,
        _ => 0,
    }
}
