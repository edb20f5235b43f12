use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::svg::{vehicle_color, SvgCanvas};
use super::{ensure_dir, load_surrogate, write_json, write_text, Engine, ReportHeader, Status};
use crate::config::RunConfig;
use crate::datagen::{
    bv_feedback_control, idm_acceleration, mobil_lane_change, LaneDecision, LaneVehicle, Vehicle, VehicleSystem,
};
use crate::dynamics::{ControlVec, StateVec};
use crate::error::{Error, Result};
use crate::reach::{deduce_trajectory, StepDeducer, StepInput};
use crate::safety::{check_system_safety, SafetyStandards, SafetyVerdict};
use crate::sets::IntervalBox;

/// Emergency control applied when verification rejects the proposal.
pub const BRAKE: ControlVec = [-3.0, 0.0];

/// Position the verification engines see; the dynamics are invariant under
/// planar translation, so every box is moved here before deduction and
/// moved back afterwards. Keeps the surrogate inside its training ranges.
const REFERENCE_POSITION: [f64; 2] = [8.0, 0.0];

struct Recentered<'a>(&'a dyn StepDeducer);

fn shift(b: &IntervalBox, dx: f64, dy: f64) -> Result<IntervalBox> {
    let mut c = b.centers().to_vec();
    c[0] += dx;
    c[1] += dy;
    IntervalBox::new(c, b.radii().to_vec())
}

impl StepDeducer for Recentered<'_> {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn deduce_step(&self, input: &StepInput) -> Result<IntervalBox> {
        Ok(self.deduce_batch(std::slice::from_ref(input))?.remove(0))
    }

    fn deduce_batch(&self, inputs: &[StepInput]) -> Result<Vec<IntervalBox>> {
        let offsets: Vec<(f64, f64)> = inputs
            .iter()
            .map(|i| {
                let c = i.state.centers();
                (REFERENCE_POSITION[0] - c[0], REFERENCE_POSITION[1] - c[1])
            })
            .collect();
        let moved = inputs
            .iter()
            .zip(&offsets)
            .map(|(i, &(dx, dy))| Ok(StepInput::new(shift(&i.state, dx, dy)?, i.control.clone(), i.dt)))
            .collect::<Result<Vec<_>>>()?;
        self.0
            .deduce_batch(&moved)?
            .iter()
            .zip(&offsets)
            .map(|(b, &(dx, dy))| shift(b, -dx, -dy))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: usize,
    pub time: f64,
    pub ego_lane: usize,
    pub target_lane: usize,
    pub lane_decision: LaneDecision,
    pub proposed: ControlVec,
    pub applied: ControlVec,
    pub braked: bool,
    /// "safe", "unsafe", or "error" (deduction failed; treated as unsafe).
    pub verdict: String,
    pub error: Option<String>,
    /// Point states at the start of the frame, ego first.
    pub states: Vec<StateVec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    #[serde(flatten)]
    pub header: ReportHeader,
    pub engine: Engine,
    pub duration: f64,
    pub frame_dt: f64,
    pub lane_changes: usize,
    pub brakes: usize,
    pub frames: Vec<FrameRecord>,
    pub final_states: Vec<StateVec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateTimings {
    pub budget: f64,
    /// Wall-clock verification seconds per frame.
    pub verify_seconds: Vec<f64>,
    pub budget_overruns: usize,
}

struct Car {
    state: StateVec,
    lane: usize,
    target_lane: usize,
    v_target: f64,
}

fn lane_center(cfg: &RunConfig, lane: usize) -> f64 {
    (lane as f64 - (cfg.simulate.lanes as f64 - 1.0) / 2.0) * cfg.scenario.lane_width
}

fn nearest_lane(cfg: &RunConfig, y: f64) -> usize {
    let w = cfg.scenario.lane_width;
    let k = (y / w + (cfg.simulate.lanes as f64 - 1.0) / 2.0).round();
    k.clamp(0.0, cfg.simulate.lanes as f64 - 1.0) as usize
}

fn standards(cfg: &RunConfig) -> SafetyStandards {
    cfg.safety.clone().unwrap_or_else(|| {
        let half = 0.5 * cfg.simulate.lanes as f64 * cfg.scenario.lane_width;
        SafetyStandards::lane_bounds(-half, half)
    })
}

/// IDM acceleration and steering toward the target lane for the ego.
fn ego_proposal(cfg: &RunConfig, cars: &[Car], length: f64) -> ControlVec {
    let s = &cfg.simulate;
    let ego = &cars[0];
    let leader = cars[1..]
        .iter()
        .filter(|c| nearest_lane(cfg, c.state[1]) == ego.target_lane && c.state[0] > ego.state[0])
        .min_by(|a, b| a.state[0].total_cmp(&b.state[0]));
    let u_min = cfg.scenario.u_min;
    let u_max = cfg.scenario.u_max;
    let a = match leader {
        Some(l) if l.state[0] - ego.state[0] - length <= 0.0 => u_min[0],
        Some(l) => idm_acceleration(
            &s.idm,
            ego.state[3],
            Some((l.state[3], l.state[0] - ego.state[0] - length)),
            (u_min[0], u_max[0]),
        )
        .unwrap_or(u_min[0]),
        None => idm_acceleration(&s.idm, ego.state[3], None, (u_min[0], u_max[0])).unwrap_or(u_min[0]),
    };
    let y_target = lane_center(cfg, ego.target_lane);
    let steer = bv_feedback_control(&ego.state, ego.state[3], y_target, &s.ego_steering, &u_min, &u_max);
    [a, steer.delta_f]
}

/// Verification problem for one frame: boxes of the configured radii around
/// every point state, the ego control box around the proposal.
fn frame_system(cfg: &RunConfig, cars: &[Car], proposal: &ControlVec) -> Result<VehicleSystem> {
    let s = &cfg.simulate;
    let mut vehicles = Vec::with_capacity(cars.len());
    for (i, car) in cars.iter().enumerate() {
        let state = IntervalBox::new(car.state.to_vec(), s.state_radius.to_vec())?;
        if i == 0 {
            let lb: Vec<f64> = (0..2)
                .map(|k| (proposal[k] - s.control_radius[k]).max(cfg.scenario.u_min[k]))
                .collect();
            let ub: Vec<f64> = (0..2)
                .map(|k| (proposal[k] + s.control_radius[k]).min(cfg.scenario.u_max[k]))
                .collect();
            vehicles.push(Vehicle::ego(state, IntervalBox::from_bounds(&lb, &ub)?));
        } else {
            vehicles.push(Vehicle::background(state, cfg.scenario.full_control_box()));
        }
    }
    Ok(VehicleSystem::new(vehicles, &cfg.scenario))
}

/// Closed-loop rollout. Each frame the ego proposes an IDM/MOBIL control,
/// the selected engines verify it over the scenario horizon, and the
/// proposal is applied if safe or replaced by [`BRAKE`] otherwise. All
/// vehicles then advance one frame on the point dynamics. Writes
/// `simulate_report.json`, `trajectory.csv`, `simulate_timings.json`, and
/// per-frame SVGs under `frames/` when requested.
pub fn cmd_simulate(cfg: &RunConfig, engine: Engine, svg: bool) -> Result<(SimulateReport, Status)> {
    cfg.validate()?;
    let s = &cfg.simulate;
    let model = cfg.bicycle_model();
    let oracle = cfg.oracle();
    let surrogate = if engine.surrogate() { Some(load_surrogate(cfg)?) } else { None };
    let mut engines: Vec<&dyn StepDeducer> = Vec::new();
    if engine.oracle() {
        engines.push(&oracle);
    }
    if let Some(m) = &surrogate {
        engines.push(m);
    }
    let standards = standards(cfg);
    let length = standards.shape.length;
    ensure_dir(&cfg.out_dir)?;
    if svg {
        ensure_dir(&cfg.out_dir.join("frames"))?;
    }

    let mut ego_state = s.ego;
    ego_state[1] += lane_center(cfg, s.ego_lane);
    let mut cars = vec![Car {
        state: ego_state,
        lane: s.ego_lane,
        target_lane: s.ego_lane,
        v_target: s.idm.v0,
    }];
    for b in &s.background {
        cars.push(Car {
            state: [b.x, lane_center(cfg, b.lane), 0.0, b.v, 0.0, 0.0],
            lane: b.lane,
            target_lane: b.lane,
            v_target: b.v,
        });
    }

    let n_frames = (s.duration / s.frame + 1e-9).floor() as usize;
    let mut frames = Vec::with_capacity(n_frames);
    let mut timings = SimulateTimings {
        budget: s.budget,
        verify_seconds: Vec::with_capacity(n_frames),
        budget_overruns: 0,
    };
    let mut trajectory = String::from("frame,time,vehicle,x_pos,y_pos,theta,v,w,r,a_cc,delta_f\n");
    let mut lane_changes = 0;
    let mut brakes = 0;

    for frame in 0..n_frames {
        let time = frame as f64 * s.frame;
        let states: Vec<StateVec> = cars.iter().map(|c| c.state).collect();

        // lane decision, only once the ego has settled in its lane
        let mut decision = LaneDecision::Keep;
        let ego = &cars[0];
        if ego.lane == ego.target_lane && (ego.state[1] - lane_center(cfg, ego.lane)).abs() < 0.5 {
            let me = LaneVehicle {
                x: ego.state[0],
                v: ego.state[3],
                lane: ego.lane,
            };
            let others: Vec<LaneVehicle> = cars[1..]
                .iter()
                .map(|c| LaneVehicle {
                    x: c.state[0],
                    v: c.state[3],
                    lane: nearest_lane(cfg, c.state[1]),
                })
                .collect();
            decision = mobil_lane_change(&me, &others, s.lanes, &s.idm, &s.mobil, length);
            match decision {
                LaneDecision::Left => cars[0].target_lane += 1,
                LaneDecision::Right => cars[0].target_lane -= 1,
                LaneDecision::Keep => {}
            }
            if decision != LaneDecision::Keep {
                lane_changes += 1;
            }
        }
        let proposed = ego_proposal(cfg, &cars, length);

        let t0 = Instant::now();
        let mut verdicts: Vec<SafetyVerdict> = Vec::new();
        let outcome: Result<bool> = (|| {
            let system = frame_system(cfg, &cars, &proposed)?;
            let mut safe = true;
            for e in &engines {
                let traces = deduce_trajectory(&system, &Recentered(*e), cfg.scenario.horizon)?;
                let v = check_system_safety(&traces, &standards)?;
                safe &= v.safe;
                verdicts.push(v);
            }
            Ok(safe)
        })();
        let seconds = t0.elapsed().as_secs_f64();
        if seconds > s.budget {
            timings.budget_overruns += 1;
        }
        timings.verify_seconds.push(seconds);

        let (verdict, error) = match &outcome {
            Ok(true) => ("safe", None),
            Ok(false) => ("unsafe", None),
            Err(e) => ("error", Some(e.to_string())),
        };
        let braked = verdict != "safe";
        let mut applied = if braked { BRAKE } else { proposed };
        if braked {
            brakes += 1;
        }
        // keep the ego above the speed floor instead of braking through it
        let floor_accel = (s.min_speed - cars[0].state[3]) / s.frame;
        applied[0] = applied[0].max(floor_accel.min(cfg.scenario.u_max[0]));

        let mut controls = vec![applied];
        for car in &cars[1..] {
            let u = bv_feedback_control(
                &car.state,
                car.v_target,
                lane_center(cfg, car.lane),
                &s.feedback,
                &cfg.scenario.u_min,
                &cfg.scenario.u_max,
            );
            controls.push([u.a_cc, u.delta_f]);
        }
        for (i, (st, u)) in states.iter().zip(&controls).enumerate() {
            writeln!(
                trajectory,
                "{frame},{time:.16e},{i},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                st[0], st[1], st[2], st[3], st[4], st[5], u[0], u[1]
            )
            .expect("string write");
        }
        if svg {
            let pic = frame_svg(cfg, &cars, verdicts.first(), time, verdict);
            write_text(&cfg.out_dir.join("frames").join(format!("frame_{frame:04}.svg")), &pic)?;
        }
        frames.push(FrameRecord {
            frame,
            time,
            ego_lane: cars[0].lane,
            target_lane: cars[0].target_lane,
            lane_decision: decision,
            proposed,
            applied,
            braked,
            verdict: verdict.to_string(),
            error,
            states,
        });

        for (car, u) in cars.iter_mut().zip(&controls) {
            car.state = model
                .step(&car.state, u, s.frame)
                .map_err(|e| Error::ConfigInvalid(format!("simulation frame {frame}: {e}")))?;
        }
        let ego = &mut cars[0];
        if ego.lane != ego.target_lane && (ego.state[1] - lane_center(cfg, ego.target_lane)).abs() < 0.5 {
            ego.lane = ego.target_lane;
        }
    }

    let report = SimulateReport {
        header: ReportHeader::new("simulate", cfg)?,
        engine,
        duration: s.duration,
        frame_dt: s.frame,
        lane_changes,
        brakes,
        frames,
        final_states: cars.iter().map(|c| c.state).collect(),
    };
    write_json(&cfg.out_dir.join("simulate_report.json"), &report)?;
    write_text(&cfg.out_dir.join("trajectory.csv"), &trajectory)?;
    write_json(&cfg.out_dir.join("simulate_timings.json"), &timings)?;
    Ok((report, Status::Success))
}

fn frame_svg(cfg: &RunConfig, cars: &[Car], verdict: Option<&SafetyVerdict>, time: f64, label: &str) -> String {
    let ego_x = cars[0].state[0];
    let half = 0.5 * cfg.simulate.lanes as f64 * cfg.scenario.lane_width;
    let mut c = SvgCanvas::new(ego_x - 10.0, ego_x + 40.0, -half, half, 12.0);
    c.hline(-half, "road-edge", "#444", false);
    c.hline(half, "road-edge", "#444", false);
    for k in 1..cfg.simulate.lanes {
        c.hline(-half + k as f64 * cfg.scenario.lane_width, "lane-line", "#999", true);
    }
    if let Some(v) = verdict {
        c.open_group("reach");
        for s in &v.steps {
            for (i, poly) in s.occupancy.iter().enumerate() {
                c.polygon(&poly.vertices, "occupancy", vehicle_color(i), "none", "");
            }
        }
        c.close_group();
    }
    let shape = cfg.safety_standards().shape;
    c.open_group("vehicles");
    for (i, car) in cars.iter().enumerate() {
        let body = shape.corners(car.state[0], car.state[1], car.state[2]);
        c.polygon(&body, "vehicle", vehicle_color(i), vehicle_color(i), &format!(r#"data-vehicle="{i}""#));
    }
    c.close_group();
    c.text([ego_x - 10.0, half + 0.6], 12.0, &format!("t = {time:.1} s, {label}"));
    c.finish()
}
