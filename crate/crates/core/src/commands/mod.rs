//! The five command entry points behind the `reachverify` binary. Each
//! returns a report that is also written as JSON into the output
//! directory; wall-clock timings go to separate files so that reports are
//! byte-identical across runs with the same configuration and seed.

mod evaluate;
mod generate;
mod simulate;
pub mod svg;
mod train;
mod verify;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};

pub use evaluate::{
    cmd_evaluate, time_engine, BoxDiff, DisagreementRecord, EvaluateReport, EvaluateTimings, StepStats,
    EVALUATION_ID_BASE,
};
pub use generate::{cmd_generate, GenerateReport};
pub use simulate::{cmd_simulate, FrameRecord, SimulateReport, SimulateTimings, BRAKE};
pub use train::{cmd_train, split_dataset, split_metrics, SplitMetrics, TrainReport};
pub use verify::{
    cmd_verify, compare_traces, initial_system, verify_svg, ComparisonStep, EngineRun, StepRecord, VehicleStepRecord,
    VerificationReport, VerifyComparison,
};

/// Which step engines a command runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Oracle,
    Surrogate,
    Both,
}

impl Engine {
    pub fn oracle(self) -> bool {
        matches!(self, Engine::Oracle | Engine::Both)
    }

    pub fn surrogate(self) -> bool {
        matches!(self, Engine::Surrogate | Engine::Both)
    }
}

/// How a command ended: success, or a verification that found a violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    Unsafe,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::Unsafe => 2,
        }
    }
}

/// Fields shared by every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
}

impl ReportHeader {
    pub fn new(command: &str, cfg: &RunConfig) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            config_hash: config_hash(cfg)?,
            seed: cfg.seed,
        })
    }
}

/// Hash of the configuration with the output location blanked, so that
/// runs written to different directories share it.
pub fn config_hash(cfg: &RunConfig) -> Result<String> {
    let mut c = cfg.clone();
    c.out_dir = Default::default();
    c.hash()
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads the configured surrogate model.
pub(crate) fn load_surrogate(cfg: &RunConfig) -> Result<crate::surrogate::SurrogateModel> {
    let path = cfg.model_path();
    if !path.exists() {
        return Err(Error::ConfigInvalid(format!(
            "model {} does not exist; run `train` first or set `model`",
            path.display()
        )));
    }
    crate::surrogate::load_model(&path)
}
