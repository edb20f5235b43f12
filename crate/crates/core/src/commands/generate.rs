use std::fs::File;
use std::io::{BufWriter, Write};

use serde::{Deserialize, Serialize};

use super::{ensure_dir, write_json, ReportHeader, Status};
use crate::config::RunConfig;
use crate::datagen::{generate_dataset, DatasetWriter, GenerationSummary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateReport {
    #[serde(flatten)]
    pub header: ReportHeader,
    pub dataset: String,
    pub oracle: String,
    #[serde(flatten)]
    pub summary: GenerationSummary,
}

/// Writes the oracle-labelled dataset CSV and `generate_report.json`.
pub fn cmd_generate(cfg: &RunConfig) -> Result<(GenerateReport, Status)> {
    cfg.validate()?;
    ensure_dir(&cfg.out_dir)?;
    let path = cfg.dataset_path();
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    let oracle = cfg.oracle();
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut writer = DatasetWriter::new(BufWriter::new(file))?;
    let summary = generate_dataset(
        &cfg.scenario,
        &oracle,
        cfg.generate.experiments,
        cfg.seed,
        cfg.execution,
        |s| writer.write(&s),
    )?;
    writer.finish()?.flush().map_err(|e| Error::io(&path, e))?;
    log::info!(
        "generated {} samples from {} experiments ({} skipped)",
        summary.samples,
        summary.completed,
        summary.skipped
    );
    let report = GenerateReport {
        header: ReportHeader::new("generate", cfg)?,
        dataset: cfg.dataset.display().to_string(),
        oracle: format!("{:?}", cfg.oracle.kind).to_lowercase(),
        summary,
    };
    write_json(&cfg.out_dir.join("generate_report.json"), &report)?;
    Ok((report, Status::Success))
}
