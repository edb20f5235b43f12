//! Run configuration, read from TOML. Every field has a default, so an
//! empty file reproduces the reference scenario envelope.

use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datagen::{FeedbackGains, IdmParams, MobilParams, ScenarioSpec};
use crate::dynamics::{BicycleModel, VehicleConstants, DEFAULT_MAX_SUBSTEP, DEFAULT_V_GUARD};
use crate::error::{Error, Result};
use crate::parallel::Execution;
use crate::reach::{Oracle, OracleKind};
use crate::safety::SafetyStandards;
use crate::surrogate::OperatorConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Dataset CSV, relative to `out_dir` unless absolute.
    pub dataset: PathBuf,
    /// Surrogate model file, relative to `out_dir` unless absolute.
    pub model: PathBuf,
    pub execution: Execution,
    pub vehicle: VehicleConstants,
    pub dynamics: DynamicsConfig,
    pub oracle: OracleConfig,
    pub scenario: ScenarioSpec,
    /// Safety standards; lane bounds follow the scenario road when absent.
    pub safety: Option<SafetyStandards>,
    pub surrogate: OperatorConfig,
    pub generate: GenerateConfig,
    pub verify: VerifyConfig,
    pub simulate: SimulateConfig,
    pub evaluate: EvaluateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            dataset: PathBuf::from("dataset.csv"),
            model: PathBuf::from("model.bin"),
            execution: Execution::default(),
            vehicle: VehicleConstants::default(),
            dynamics: DynamicsConfig::default(),
            oracle: OracleConfig::default(),
            scenario: ScenarioSpec::default(),
            safety: None,
            surrogate: OperatorConfig::default(),
            generate: GenerateConfig::default(),
            verify: VerifyConfig::default(),
            simulate: SimulateConfig::default(),
            evaluate: EvaluateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    /// Smallest admissible longitudinal speed, m/s.
    pub v_guard: f64,
    /// Longest Euler substep, s.
    pub max_substep: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            v_guard: DEFAULT_V_GUARD,
            max_substep: DEFAULT_MAX_SUBSTEP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub kind: OracleKind,
    /// Point samples per step for the sampled oracle.
    pub samples: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            kind: OracleKind::Linearized,
            samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub experiments: usize,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self { experiments: 20_000 }
    }
}

/// Explicit initial system for `verify`; drawn from the scenario when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialVehicle {
    pub center: [f64; 6],
    pub radius: [f64; 6],
    /// Control box of the first step; background vehicles ignore it.
    #[serde(default)]
    pub control_center: [f64; 2],
    #[serde(default)]
    pub control_radius: [f64; 2],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Ego first, then background vehicles.
    pub vehicles: Vec<InitialVehicle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Closed-loop duration, s.
    pub duration: f64,
    /// Frame advance, s.
    pub frame: f64,
    /// Wall-clock verification budget per frame, s. Overruns are recorded.
    pub budget: f64,
    pub lanes: usize,
    /// Radii of the verification boxes around each vehicle's point state.
    pub state_radius: [f64; 6],
    /// Radius of the ego control box around the proposed signal.
    pub control_radius: [f64; 2],
    pub ego: [f64; 6],
    pub ego_lane: usize,
    pub background: Vec<BackgroundVehicle>,
    pub idm: IdmParams,
    pub mobil: MobilParams,
    /// Background vehicle feedback toward their lane center and speed.
    pub feedback: FeedbackGains,
    /// Ego steering toward the target lane center; `k_v` is unused since
    /// IDM sets the ego acceleration.
    pub ego_steering: FeedbackGains,
    /// Lowest speed the ego is allowed to brake to, m/s.
    pub min_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundVehicle {
    pub x: f64,
    pub lane: usize,
    pub v: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            duration: 8.0,
            frame: 0.2,
            budget: 1.0,
            lanes: 3,
            state_radius: [0.2, 0.1, 0.002, 0.1, 0.01, 0.002],
            control_radius: [0.1, 0.0005],
            ego: [0.0, 0.0, 0.0, 7.5, 0.0, 0.0],
            ego_lane: 1,
            background: vec![BackgroundVehicle { x: 25.0, lane: 1, v: 4.5 }],
            idm: IdmParams::default(),
            mobil: MobilParams::default(),
            feedback: FeedbackGains::default(),
            ego_steering: FeedbackGains {
                k_v: 0.0,
                k_y: 0.1,
                k_theta: 0.8,
            },
            min_speed: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub experiments: usize,
    /// Timed repeats per engine for the step latency.
    pub timing_repeats: usize,
    /// Write step timings to a separate file (they differ run to run).
    pub timings: bool,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            experiments: 100,
            timing_repeats: 20,
            timings: true,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    pub fn validate(&self) -> Result<()> {
        self.vehicle.validate()?;
        if !(self.dynamics.v_guard > 0.0) {
            return Err(Error::ConfigInvalid("dynamics.v_guard must be positive".into()));
        }
        self.scenario.validate(self.dynamics.v_guard)?;
        self.surrogate.validate()?;
        if self.oracle.kind == OracleKind::Sampled && self.oracle.samples == 0 {
            return Err(Error::ConfigInvalid("oracle.samples must be positive".into()));
        }
        let s = &self.simulate;
        if !(s.frame > 0.0) || s.duration < 0.0 || s.lanes == 0 || s.ego_lane >= s.lanes {
            return Err(Error::ConfigInvalid(
                "simulate: frame must be positive, duration non-negative, ego_lane < lanes".into(),
            ));
        }
        if !(s.min_speed > self.dynamics.v_guard) {
            return Err(Error::ConfigInvalid("simulate.min_speed must exceed dynamics.v_guard".into()));
        }
        if s.background.iter().any(|b| b.lane >= s.lanes) {
            return Err(Error::ConfigInvalid("simulate.background: lane out of range".into()));
        }
        Ok(())
    }

    /// Resolves `p` against the output directory. `..` is folded lexically so
    /// the result is usable before the output directory exists.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            return p.to_path_buf();
        }
        let mut out = PathBuf::new();
        for c in self.out_dir.join(p).components() {
            match c {
                Component::ParentDir
                    if matches!(out.components().next_back(), Some(Component::Normal(_))) =>
                {
                    out.pop();
                }
                Component::CurDir => {}
                c => out.push(c),
            }
        }
        if out.as_os_str().is_empty() {
            out.push(".");
        }
        out
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.resolve(&self.dataset)
    }

    pub fn model_path(&self) -> PathBuf {
        self.resolve(&self.model)
    }

    pub fn bicycle_model(&self) -> BicycleModel {
        BicycleModel::new(self.vehicle)
            .with_v_guard(self.dynamics.v_guard)
            .with_max_substep(self.dynamics.max_substep)
    }

    pub fn oracle(&self) -> Oracle {
        let mut o = Oracle::new(self.bicycle_model(), self.oracle.kind);
        o.samples = self.oracle.samples;
        o.seed = self.seed;
        o
    }

    pub fn safety_standards(&self) -> SafetyStandards {
        self.safety.clone().unwrap_or_else(|| {
            let (lo, hi) = self.scenario.road_edges();
            SafetyStandards::lane_bounds(lo, hi)
        })
    }
}
