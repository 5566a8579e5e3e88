use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EpochSummary, RunHistory, RunSummary, SimConfig};
use crate::error::{Error, Result};
use crate::rds::ThresholdChange;
use crate::stats::{write_scatter_csv, GroupKey};

/// Files written into a run directory.
pub const RUN_FILES: [&str; 5] = ["steps.jsonl", "history.jsonl", "scatter.csv", "transitions.jsonl", "manifest.json"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: SimConfig,
    pub seed: u64,
    pub threshold_changes: Vec<ThresholdChange>,
    pub summary: RunSummary,
    pub epochs: Vec<EpochSummary>,
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Io(e.to_string())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

impl RunHistory {
    pub fn manifest(&self) -> RunManifest {
        RunManifest {
            config: self.config.clone(),
            seed: self.config.seed,
            threshold_changes: self.threshold_changes.clone(),
            summary: self.summary.clone(),
            epochs: self.epochs.clone(),
        }
    }

    /// Writes the step log, stats history, scatter table (grouped by tool
    /// count), stage transitions and manifest into `dir`, creating it.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;

        let mut w = create(dir, "steps.jsonl")?;
        for step in &self.steps {
            step.write_log(&mut w)?;
        }
        w.flush()?;

        let mut w = create(dir, "history.jsonl")?;
        self.tracker.write_history(&mut w)?;
        w.flush()?;

        let rows = self.tracker.export_scatter(None, Some(GroupKey::NumTools))?;
        write_scatter_csv(&rows, create(dir, "scatter.csv")?)?;

        let mut w = create(dir, "transitions.jsonl")?;
        for t in &self.transitions {
            serde_json::to_writer(&mut w, t).map_err(json_err)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;

        let mut w = create(dir, "manifest.json")?;
        serde_json::to_writer_pretty(&mut w, &self.manifest()).map_err(json_err)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}
