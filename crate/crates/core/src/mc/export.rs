use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::config::StudyConfig;
use super::studies::{Cell, StudyResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const HISTOGRAM_FILE: &str = "histogram.csv";

/// Everything needed to rerun a study and check its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyManifest {
    pub version: String,
    pub config: StudyConfig,
    pub criteria: Vec<String>,
    pub flagged_cells: Vec<Cell>,
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// `memory,bandwidth_rule,d,value,mc_error` rows of one criterion.
pub fn write_criterion_csv<W: Write>(result: &StudyResult, criterion: &str, writer: W) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(["memory", "bandwidth_rule", "d", "value", "mc_error"])?;
    for c in result.cells.iter().filter(|c| c.criterion == criterion) {
        w.write_record([
            c.memory.clone(),
            c.bandwidth_rule.clone(),
            c.d.to_string(),
            c.value.to_string(),
            c.mc_error.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `memory,bandwidth_rule,d,replication,t_normalized` rows.
pub fn write_histogram_csv<W: Write>(result: &StudyResult, writer: W) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(["memory", "bandwidth_rule", "d", "replication", "t_normalized"])?;
    for h in &result.histograms {
        for (r, v) in h.replications.iter().zip(&h.values) {
            w.write_record([h.memory.clone(), h.bandwidth_rule.clone(), h.d.to_string(), r.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn manifest(result: &StudyResult) -> StudyManifest {
    StudyManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: result.config.clone(),
        criteria: result.config.criteria(),
        flagged_cells: result.flagged().cloned().collect(),
    }
}

/// Writes one CSV per criterion, `histogram.csv` and `manifest.json` into
/// `dir`, returning the paths written.
pub fn export_study(result: &StudyResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for criterion in result.config.criteria() {
        let path = dir.join(format!("{criterion}.csv"));
        write_criterion_csv(result, &criterion, fs::File::create(&path)?)?;
        written.push(path);
    }
    let path = dir.join(HISTOGRAM_FILE);
    write_histogram_csv(result, fs::File::create(&path)?)?;
    written.push(path);
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest(result))? + "\n")?;
    written.push(path);
    Ok(written)
}

pub fn load_manifest(path: &Path) -> Result<StudyManifest> {
    let manifest: StudyManifest = serde_json::from_str(&fs::read_to_string(path)?)?;
    manifest.config.validate()?;
    Ok(manifest)
}
