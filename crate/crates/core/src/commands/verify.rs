use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::svg::{vehicle_color, SvgCanvas};
use super::{ensure_dir, load_surrogate, write_json, write_text, Engine, ReportHeader, Status};
use crate::config::RunConfig;
use crate::datagen::{experiment_rng, sample_system, Vehicle, VehicleSystem};
use crate::error::Result;
use crate::metrics::{agreement, precision_pos, recall_pos, BoxPair2D, MeanStd};
use crate::reach::{deduce_trajectory, ReachTrace, StepDeducer};
use crate::safety::{check_system_safety, S1Constraint, SafetyStandards, SafetyVerdict};
use crate::sets::IntervalBox;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleStepRecord {
    pub center: Vec<f64>,
    pub radius: Vec<f64>,
    pub control_center: Vec<f64>,
    pub control_radius: Vec<f64>,
    pub s1: bool,
    pub occupancy: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based step index.
    pub step: usize,
    pub safe: bool,
    /// Ego against each background vehicle; true means disjoint.
    pub s2: Vec<bool>,
    pub vehicles: Vec<VehicleStepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineRun {
    pub engine: String,
    pub safe: bool,
    pub first_unsafe_step: Option<usize>,
    pub steps: Vec<StepRecord>,
}

impl EngineRun {
    fn new(engine: &str, traces: &[ReachTrace], verdict: &SafetyVerdict) -> Self {
        let steps = verdict
            .steps
            .iter()
            .enumerate()
            .map(|(k, s)| StepRecord {
                step: k + 1,
                safe: s.safe,
                s2: s.s2.clone(),
                vehicles: traces
                    .iter()
                    .zip(&s.s1)
                    .zip(&s.occupancy)
                    .map(|((t, &s1), poly)| VehicleStepRecord {
                        center: t.steps[k].centers().to_vec(),
                        radius: t.steps[k].radii().to_vec(),
                        control_center: t.controls[k].centers().to_vec(),
                        control_radius: t.controls[k].radii().to_vec(),
                        s1,
                        occupancy: poly.vertices.clone(),
                    })
                    .collect(),
            })
            .collect();
        Self {
            engine: engine.to_string(),
            safe: verdict.safe,
            first_unsafe_step: verdict.first_unsafe_step(),
            steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonStep {
    pub step: usize,
    /// Surrogate box measured against the oracle box, over all vehicles.
    pub recall_pos: MeanStd,
    pub precision_pos: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyComparison {
    pub flags_agree: bool,
    /// Fraction of steps whose per-step verdicts agree.
    pub step_agreement: f64,
    pub steps: Vec<ComparisonStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    #[serde(flatten)]
    pub header: ReportHeader,
    /// "safe" or "unsafe"; unsafe when any selected engine finds a violation.
    pub flag: String,
    pub horizon: usize,
    pub vehicles: usize,
    pub runs: Vec<EngineRun>,
    pub comparison: Option<VerifyComparison>,
}

impl VerificationReport {
    pub fn safe(&self) -> bool {
        self.flag == "safe"
    }
}

/// The configured initial system, or one drawn from the scenario with the
/// run seed when none is configured.
pub fn initial_system(cfg: &RunConfig) -> Result<VehicleSystem> {
    if cfg.verify.vehicles.is_empty() {
        return sample_system(&cfg.scenario, &mut experiment_rng(cfg.seed, 0));
    }
    let mut vehicles = Vec::with_capacity(cfg.verify.vehicles.len());
    for (i, v) in cfg.verify.vehicles.iter().enumerate() {
        let state = IntervalBox::new(v.center.to_vec(), v.radius.to_vec())?;
        vehicles.push(if i == 0 {
            Vehicle::ego(state, IntervalBox::new(v.control_center.to_vec(), v.control_radius.to_vec())?)
        } else {
            Vehicle::background(state, cfg.scenario.full_control_box())
        });
    }
    Ok(VehicleSystem::new(vehicles, &cfg.scenario))
}

/// Per-step surrogate-versus-oracle position coverage.
pub fn compare_traces(surrogate: &[ReachTrace], oracle: &[ReachTrace]) -> Vec<ComparisonStep> {
    let horizon = oracle.iter().map(|t| t.len()).min().unwrap_or(0);
    (0..horizon)
        .map(|k| {
            let pairs: Vec<BoxPair2D> = surrogate
                .iter()
                .zip(oracle)
                .map(|(s, o)| BoxPair2D::from_states(&s.steps[k], &o.steps[k]))
                .collect();
            ComparisonStep {
                step: k + 1,
                recall_pos: MeanStd::of(&pairs.iter().map(recall_pos).collect::<Vec<_>>()),
                precision_pos: MeanStd::of(&pairs.iter().map(precision_pos).collect::<Vec<_>>()),
            }
        })
        .collect()
}

/// Deduces the initial system over the scenario horizon with the selected
/// engines, applies S1/S2, and writes `verify_report.json` (plus
/// `verify.svg` when requested). Returns [`Status::Unsafe`] on a violation.
pub fn cmd_verify(cfg: &RunConfig, engine: Engine, svg: bool) -> Result<(VerificationReport, Status)> {
    cfg.validate()?;
    let system = initial_system(cfg)?;
    let standards = cfg.safety_standards();
    let horizon = cfg.scenario.horizon;
    let mut engines: Vec<Box<dyn StepDeducer>> = Vec::new();
    if engine.oracle() {
        engines.push(Box::new(cfg.oracle()));
    }
    if engine.surrogate() {
        engines.push(Box::new(load_surrogate(cfg)?));
    }
    ensure_dir(&cfg.out_dir)?;

    let mut runs = Vec::new();
    let mut all_traces = Vec::new();
    let mut timings = serde_json::Map::new();
    for e in &engines {
        let t0 = Instant::now();
        let traces = deduce_trajectory(&system, e.as_ref(), horizon)?;
        let seconds = t0.elapsed().as_secs_f64();
        let verdict = check_system_safety(&traces, &standards)?;
        timings.insert(
            e.name().to_string(),
            serde_json::json!({ "seconds": seconds, "seconds_per_step": seconds / horizon.max(1) as f64 }),
        );
        runs.push(EngineRun::new(e.name(), &traces, &verdict));
        all_traces.push(traces);
    }

    let comparison = if engine == Engine::Both {
        let flags_o: Vec<bool> = runs[0].steps.iter().map(|s| s.safe).collect();
        let flags_s: Vec<bool> = runs[1].steps.iter().map(|s| s.safe).collect();
        Some(VerifyComparison {
            flags_agree: runs[0].safe == runs[1].safe,
            step_agreement: if flags_o.is_empty() { 1.0 } else { agreement(&flags_o, &flags_s)? },
            steps: compare_traces(&all_traces[1], &all_traces[0]),
        })
    } else {
        None
    };

    let safe = runs.iter().all(|r| r.safe);
    let report = VerificationReport {
        header: ReportHeader::new("verify", cfg)?,
        flag: if safe { "safe" } else { "unsafe" }.to_string(),
        horizon,
        vehicles: system.vehicles.len(),
        runs,
        comparison,
    };
    write_json(&cfg.out_dir.join("verify_report.json"), &report)?;
    write_json(&cfg.out_dir.join("verify_timings.json"), &timings)?;
    if svg {
        write_text(&cfg.out_dir.join("verify.svg"), &verify_svg(&system, &report, &standards))?;
    }
    let status = if safe { Status::Success } else { Status::Unsafe };
    Ok((report, status))
}

/// One occupancy octagon per vehicle per step for each engine, on top of
/// the initial boxes and the lateral S1 bounds.
pub fn verify_svg(system: &VehicleSystem, report: &VerificationReport, standards: &SafetyStandards) -> String {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for v in &system.vehicles {
        xs.extend([v.state.lb(0), v.state.ub(0)]);
        ys.extend([v.state.lb(1), v.state.ub(1)]);
    }
    for run in &report.runs {
        for s in &run.steps {
            for v in &s.vehicles {
                for p in &v.occupancy {
                    xs.push(p[0]);
                    ys.push(p[1]);
                }
            }
        }
    }
    let bounds: Vec<f64> = standards
        .s1
        .iter()
        .filter_map(|c| match c {
            S1Constraint::Occupancy { normal, bound } if normal[0] == 0.0 && normal[1] != 0.0 => {
                Some(bound / normal[1])
            }
            _ => None,
        })
        .collect();
    ys.extend(&bounds);
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut c = SvgCanvas::new(min(&xs), max(&xs), min(&ys), max(&ys), 20.0);
    for y in bounds {
        c.hline(y, "bound", "#444", false);
    }
    c.open_group("initial");
    for (i, v) in system.vehicles.iter().enumerate() {
        c.rect(
            [v.state.lb(0), v.state.lb(1)],
            [v.state.ub(0), v.state.ub(1)],
            "initial",
            vehicle_color(i),
            &format!(r#"data-vehicle="{i}""#),
        );
    }
    c.close_group();
    for run in &report.runs {
        c.open_group(&format!("engine-{}", run.engine));
        for s in &run.steps {
            for (i, v) in s.vehicles.iter().enumerate() {
                let fill = if v.s1 && s.safe { vehicle_color(i) } else { "#ff0000" };
                c.polygon(
                    &v.occupancy,
                    "occupancy",
                    vehicle_color(i),
                    fill,
                    &format!(r#"data-engine="{}" data-step="{}" data-vehicle="{i}""#, run.engine, s.step),
                );
            }
        }
        c.close_group();
    }
    c.text([min(&xs), max(&ys) + 0.5], 12.0, &format!("flag: {}", report.flag));
    c.finish()
}
