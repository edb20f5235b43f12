use serde::{Deserialize, Serialize};

use super::svg::SvgCanvas;
use super::verify::compare_traces;
use super::{ensure_dir, load_surrogate, write_json, write_text, ReportHeader, Status};
use crate::config::RunConfig;
use crate::datagen::{experiment_rng, sample_system};
use crate::error::{Error, Result};
use crate::metrics::{time_step, MeanStd, MIN_REPEATS};
use crate::parallel::map_range;
use crate::reach::{deduce_trajectory, ReachTrace, StepDeducer, StepInput};
use crate::safety::check_system_safety;

/// Evaluation experiments use ids from here on, disjoint from the ids a
/// dataset of any practical size draws from.
pub const EVALUATION_ID_BASE: u64 = 1 << 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub step: usize,
    pub recall_pos: MeanStd,
    pub precision_pos: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDiff {
    pub step: usize,
    pub vehicle: usize,
    pub oracle_center: Vec<f64>,
    pub oracle_radius: Vec<f64>,
    pub surrogate_center: Vec<f64>,
    pub surrogate_radius: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementRecord {
    pub experiment_id: u64,
    pub oracle_safe: bool,
    pub surrogate_safe: bool,
    pub oracle_first_unsafe: Option<usize>,
    pub surrogate_first_unsafe: Option<usize>,
    pub diffs: Vec<BoxDiff>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateReport {
    #[serde(flatten)]
    pub header: ReportHeader,
    pub experiments: usize,
    pub completed: usize,
    pub skipped: usize,
    pub steps: Vec<StepStats>,
    pub agreement_count: usize,
    pub agreement_fraction: f64,
    pub oracle_unsafe: usize,
    pub surrogate_unsafe: usize,
    pub disagreements: Vec<DisagreementRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateTimings {
    pub repeats: usize,
    pub oracle_step_seconds: MeanStd,
    pub surrogate_step_seconds: MeanStd,
    /// Oracle mean over surrogate mean.
    pub ratio: f64,
}

struct Outcome {
    id: u64,
    oracle: Vec<ReachTrace>,
    surrogate: Vec<ReachTrace>,
    oracle_safe: bool,
    surrogate_safe: bool,
    oracle_first_unsafe: Option<usize>,
    surrogate_first_unsafe: Option<usize>,
}

fn run_one(cfg: &RunConfig, oracle: &dyn StepDeducer, surrogate: &dyn StepDeducer, id: u64) -> Result<Outcome> {
    let system = sample_system(&cfg.scenario, &mut experiment_rng(cfg.seed, id))?;
    let standards = cfg.safety_standards();
    let o = deduce_trajectory(&system, oracle, cfg.scenario.horizon)?;
    let s = deduce_trajectory(&system, surrogate, cfg.scenario.horizon)?;
    let vo = check_system_safety(&o, &standards)?;
    let vs = check_system_safety(&s, &standards)?;
    Ok(Outcome {
        id,
        oracle_safe: vo.safe,
        surrogate_safe: vs.safe,
        oracle_first_unsafe: vo.first_unsafe_step(),
        surrogate_first_unsafe: vs.first_unsafe_step(),
        oracle: o,
        surrogate: s,
    })
}

/// Mean step latency of one engine on a fixed input.
pub fn time_engine(engine: &dyn StepDeducer, input: &StepInput, repeats: usize) -> Result<MeanStd> {
    engine.deduce_step(input)?;
    Ok(time_step(|| engine.deduce_step(input), repeats.max(MIN_REPEATS)))
}

/// Runs `evaluate.experiments` random experiments with both engines and
/// aggregates per-step position coverage of the surrogate against the
/// oracle and the agreement of their safety flags. Writes
/// `evaluate_report.json`, and `evaluate_timings.json` when enabled.
pub fn cmd_evaluate(cfg: &RunConfig, svg: bool) -> Result<(EvaluateReport, Status)> {
    cfg.validate()?;
    let n = cfg.evaluate.experiments;
    if n == 0 {
        return Err(Error::ConfigInvalid("evaluate.experiments must be positive".into()));
    }
    let oracle = cfg.oracle();
    let surrogate = load_surrogate(cfg)?;
    ensure_dir(&cfg.out_dir)?;

    let results = map_range(cfg.execution, n, |i| run_one(cfg, &oracle, &surrogate, EVALUATION_ID_BASE + i as u64));
    let mut outcomes = Vec::with_capacity(n);
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => log::warn!("evaluation experiment {i} skipped: {e}"),
        }
    }
    if outcomes.is_empty() {
        return Err(Error::DatasetEmpty);
    }

    let horizon = cfg.scenario.horizon;
    let mut recall = vec![Vec::new(); horizon];
    let mut precision = vec![Vec::new(); horizon];
    let mut disagreements = Vec::new();
    for o in &outcomes {
        for c in compare_traces(&o.surrogate, &o.oracle) {
            recall[c.step - 1].push(c.recall_pos.mean);
            precision[c.step - 1].push(c.precision_pos.mean);
        }
        if o.oracle_safe != o.surrogate_safe {
            let mut diffs = Vec::new();
            for (v, (to, ts)) in o.oracle.iter().zip(&o.surrogate).enumerate() {
                for (k, (bo, bs)) in to.steps.iter().zip(&ts.steps).enumerate() {
                    diffs.push(BoxDiff {
                        step: k + 1,
                        vehicle: v,
                        oracle_center: bo.centers().to_vec(),
                        oracle_radius: bo.radii().to_vec(),
                        surrogate_center: bs.centers().to_vec(),
                        surrogate_radius: bs.radii().to_vec(),
                    });
                }
            }
            log::warn!(
                "experiment {}: oracle says {}, surrogate says {}",
                o.id,
                if o.oracle_safe { "safe" } else { "unsafe" },
                if o.surrogate_safe { "safe" } else { "unsafe" }
            );
            disagreements.push(DisagreementRecord {
                experiment_id: o.id,
                oracle_safe: o.oracle_safe,
                surrogate_safe: o.surrogate_safe,
                oracle_first_unsafe: o.oracle_first_unsafe,
                surrogate_first_unsafe: o.surrogate_first_unsafe,
                diffs,
            });
        }
    }
    let steps: Vec<StepStats> = (0..horizon)
        .map(|k| StepStats {
            step: k + 1,
            recall_pos: MeanStd::of(&recall[k]),
            precision_pos: MeanStd::of(&precision[k]),
        })
        .collect();
    let completed = outcomes.len();
    let agreement_count = completed - disagreements.len();
    let report = EvaluateReport {
        header: ReportHeader::new("evaluate", cfg)?,
        experiments: n,
        completed,
        skipped: n - completed,
        steps,
        agreement_count,
        agreement_fraction: agreement_count as f64 / completed as f64,
        oracle_unsafe: outcomes.iter().filter(|o| !o.oracle_safe).count(),
        surrogate_unsafe: outcomes.iter().filter(|o| !o.surrogate_safe).count(),
        disagreements,
    };
    log::info!(
        "flag agreement {}/{} ({:.3})",
        report.agreement_count,
        report.completed,
        report.agreement_fraction
    );
    write_json(&cfg.out_dir.join("evaluate_report.json"), &report)?;

    if cfg.evaluate.timings {
        let first = &outcomes[0];
        let system = sample_system(&cfg.scenario, &mut experiment_rng(cfg.seed, first.id))?;
        let input = StepInput::new(system.vehicles[0].state.clone(), system.control_for_step(0, 0), system.dt);
        let repeats = cfg.evaluate.timing_repeats;
        let o = time_engine(&oracle, &input, repeats)?;
        let s = time_engine(&surrogate, &input, repeats)?;
        let timings = EvaluateTimings {
            repeats: repeats.max(MIN_REPEATS),
            ratio: o.mean / s.mean,
            oracle_step_seconds: o,
            surrogate_step_seconds: s,
        };
        log::info!(
            "step latency: oracle {:.3e} s, surrogate {:.3e} s, ratio {:.2}",
            timings.oracle_step_seconds.mean,
            timings.surrogate_step_seconds.mean,
            timings.ratio
        );
        write_json(&cfg.out_dir.join("evaluate_timings.json"), &timings)?;
    }
    if svg {
        write_text(&cfg.out_dir.join("evaluate.svg"), &metrics_svg(&report))?;
    }
    Ok((report, Status::Success))
}

/// Per-step mean recall and precision, one unit per step horizontally and
/// the unit interval stretched to ten units vertically.
fn metrics_svg(report: &EvaluateReport) -> String {
    const Y: f64 = 10.0;
    let n = report.steps.len() as f64;
    let mut c = SvgCanvas::new(0.0, n + 1.0, 0.0, Y, 40.0);
    c.line([0.5, 0.0], [n + 0.5, 0.0], "axis", "#444", false);
    c.line([0.5, 0.0], [0.5, Y], "axis", "#444", false);
    c.hline(0.9 * Y, "reference", "#bbb", true);
    c.text([0.0, 0.9 * Y], 10.0, "0.9");
    c.text([0.0, Y], 10.0, "1.0");
    for (series, color, pick) in [
        ("recall", "#1f77b4", 0usize),
        ("precision", "#d62728", 1usize),
    ] {
        c.open_group(series);
        for w in report.steps.windows(2) {
            let val = |s: &StepStats| if pick == 0 { s.recall_pos.mean } else { s.precision_pos.mean };
            c.line(
                [w[0].step as f64, val(&w[0]) * Y],
                [w[1].step as f64, val(&w[1]) * Y],
                series,
                color,
                false,
            );
        }
        c.close_group();
    }
    for s in &report.steps {
        c.text([s.step as f64 - 0.1, -0.5], 10.0, &s.step.to_string());
    }
    c.text(
        [1.0, Y + 0.6],
        12.0,
        &format!("agreement {}/{}", report.agreement_count, report.completed),
    );
    c.finish()
}
