use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlVec, CONTROL_DIM};
use crate::error::{Error, Result};
use crate::safety::{polygons_intersect, state_occupancy, VehicleShape};
use crate::sets::IntervalBox;

const DEG: f64 = std::f64::consts::PI / 180.0;

/// Sampling range of one variable: its center and its radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariableRange {
    pub center: [f64; 2],
    pub radius: [f64; 2],
}

impl VariableRange {
    pub const fn new(center: [f64; 2], radius: [f64; 2]) -> Self {
        Self { center, radius }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ordered = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        if !ordered(self.center) {
            return Err(Error::ConfigInvalid(format!(
                "scenario.{name}.center range {:?} is not ordered",
                self.center
            )));
        }
        if !ordered(self.radius) || self.radius[0] < 0.0 {
            return Err(Error::ConfigInvalid(format!(
                "scenario.{name}.radius range {:?} must be ordered and non-negative",
                self.radius
            )));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut impl Rng) -> (f64, f64) {
        (draw(rng, self.center), draw(rng, self.radius))
    }
}

fn draw(rng: &mut impl Rng, r: [f64; 2]) -> f64 {
    if r[1] > r[0] {
        rng.gen_range(r[0]..r[1])
    } else {
        r[0]
    }
}

/// Envelope from which verification experiments are drawn. Angles in
/// radians. Defaults reproduce the single-vehicle scenario table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub x_pos: VariableRange,
    pub y_pos: VariableRange,
    pub theta: VariableRange,
    pub v: VariableRange,
    pub w: VariableRange,
    pub r: VariableRange,
    pub a_cc: VariableRange,
    pub delta_f: VariableRange,
    /// Ego plus background vehicles.
    pub vehicles: usize,
    pub lanes: usize,
    pub lane_width: f64,
    /// Deduction interval, s.
    pub dt: f64,
    /// Verification steps.
    pub horizon: usize,
    /// Ego control expansion above and below the initial signal.
    pub delta_plus: ControlVec,
    pub delta_minus: ControlVec,
    /// Global actuator bounds; background vehicles use the full box.
    pub u_min: ControlVec,
    pub u_max: ControlVec,
    /// Center-to-center distance from one vehicle to the next one ahead, m.
    pub bv_gap: [f64; 2],
    pub placement_attempts: usize,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            x_pos: VariableRange::new([1.0, 15.0], [0.5, 1.0]),
            y_pos: VariableRange::new([-2.0, 2.0], [0.25, 0.5]),
            theta: VariableRange::new([-4.0 * DEG, 4.0 * DEG], [0.25 * DEG, 0.5 * DEG]),
            v: VariableRange::new([4.0, 8.0], [0.25, 0.5]),
            w: VariableRange::new([-0.6, 0.6], [0.05, 0.1]),
            r: VariableRange::new([-0.1, 0.1], [0.01, 0.02]),
            a_cc: VariableRange::new([-3.0, 3.0], [0.1, 0.2]),
            delta_f: VariableRange::new([-5.0 * DEG, 5.0 * DEG], [0.05 * DEG, 0.1 * DEG]),
            vehicles: 1,
            lanes: 1,
            lane_width: 5.0,
            dt: 0.2,
            horizon: 5,
            delta_plus: [0.2, 0.1 * DEG],
            delta_minus: [0.2, 0.1 * DEG],
            u_min: [-3.0, -5.0 * DEG],
            u_max: [3.0, 5.0 * DEG],
            bv_gap: [6.0, 15.0],
            placement_attempts: 100,
        }
    }
}

impl ScenarioSpec {
    pub fn variables(&self) -> [(&'static str, &VariableRange); 8] {
        [
            ("x_pos", &self.x_pos),
            ("y_pos", &self.y_pos),
            ("theta", &self.theta),
            ("v", &self.v),
            ("w", &self.w),
            ("r", &self.r),
            ("a_cc", &self.a_cc),
            ("delta_f", &self.delta_f),
        ]
    }

    pub fn validate(&self, v_guard: f64) -> Result<()> {
        for (name, range) in self.variables() {
            range.validate(name)?;
        }
        if self.vehicles == 0 {
            return Err(Error::ConfigInvalid("scenario.vehicles must be at least 1".into()));
        }
        if self.lanes == 0 || !(self.lane_width > 0.0) {
            return Err(Error::ConfigInvalid("scenario.lanes and scenario.lane_width must be positive".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::ConfigInvalid(format!("scenario.dt = {} must be positive", self.dt)));
        }
        for i in 0..CONTROL_DIM {
            if !(self.u_min[i] <= self.u_max[i]) {
                return Err(Error::ConfigInvalid(format!(
                    "scenario.u_min[{i}] = {} exceeds u_max[{i}] = {}",
                    self.u_min[i], self.u_max[i]
                )));
            }
            if !(self.delta_plus[i] >= 0.0 && self.delta_minus[i] >= 0.0) {
                return Err(Error::ConfigInvalid("scenario.delta_plus/delta_minus must be non-negative".into()));
            }
        }
        if !(self.bv_gap[0] <= self.bv_gap[1]) {
            return Err(Error::ConfigInvalid(format!("scenario.bv_gap {:?} is not ordered", self.bv_gap)));
        }
        let worst_brake = (self.a_cc.center[0] - self.a_cc.radius[1]).min(self.u_min[0]).min(0.0);
        let slowest = self.v.center[0] - self.v.radius[1] + worst_brake * self.dt * self.horizon as f64;
        if !(slowest > v_guard) {
            return Err(Error::ConfigInvalid(format!(
                "scenario.v range {:?} minus braking over the horizon reaches {slowest:.3} m/s, not above the guard {v_guard}",
                self.v.center
            )));
        }
        Ok(())
    }

    pub fn lane_center(&self, lane: usize) -> f64 {
        (lane as f64 - (self.lanes as f64 - 1.0) / 2.0) * self.lane_width
    }

    /// Lateral road edges `(lower, upper)`.
    pub fn road_edges(&self) -> (f64, f64) {
        let half = 0.5 * self.lanes as f64 * self.lane_width;
        (-half, half)
    }

    pub fn full_control_box(&self) -> IntervalBox {
        IntervalBox::from_bounds(&self.u_min, &self.u_max).expect("validated control bounds")
    }
}

/// `[u0 - delta_minus, u0 + delta_plus]` clipped to `[u_min, u_max]`.
pub fn expand_control(
    u0: &ControlVec,
    delta_plus: &ControlVec,
    delta_minus: &ControlVec,
    u_min: &ControlVec,
    u_max: &ControlVec,
) -> IntervalBox {
    let mut lb = [0.0; CONTROL_DIM];
    let mut ub = [0.0; CONTROL_DIM];
    for i in 0..CONTROL_DIM {
        lb[i] = (u0[i] - delta_minus[i]).clamp(u_min[i], u_max[i]);
        ub[i] = (u0[i] + delta_plus[i]).clamp(u_min[i], u_max[i]);
    }
    IntervalBox::from_bounds(&lb, &ub).expect("clamped bounds are ordered")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "lowercase")]
pub enum Role {
    /// Verified vehicle; later steps expand around the nominal signal.
    Ego { nominal: ControlVec },
    Background,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub state: IntervalBox,
    /// Control box of the first step.
    pub control: IntervalBox,
    #[serde(flatten)]
    pub role: Role,
}

impl Vehicle {
    pub fn ego(state: IntervalBox, control: IntervalBox) -> Self {
        let nominal = [control.centers()[0], control.centers()[1]];
        Self {
            state,
            control,
            role: Role::Ego { nominal },
        }
    }

    pub fn background(state: IntervalBox, control: IntervalBox) -> Self {
        Self {
            state,
            control,
            role: Role::Background,
        }
    }
}

/// Ego (index 0) and background vehicles with the shared control rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSystem {
    pub vehicles: Vec<Vehicle>,
    pub dt: f64,
    pub horizon: usize,
    pub delta_plus: ControlVec,
    pub delta_minus: ControlVec,
    pub u_min: ControlVec,
    pub u_max: ControlVec,
}

impl VehicleSystem {
    pub fn new(vehicles: Vec<Vehicle>, spec: &ScenarioSpec) -> Self {
        Self {
            vehicles,
            dt: spec.dt,
            horizon: spec.horizon,
            delta_plus: spec.delta_plus,
            delta_minus: spec.delta_minus,
            u_min: spec.u_min,
            u_max: spec.u_max,
        }
    }

    /// Control box vehicle `i` applies during step `step` (0-based).
    pub fn control_for_step(&self, i: usize, step: usize) -> IntervalBox {
        let v = &self.vehicles[i];
        match &v.role {
            Role::Ego { .. } if step == 0 => v.control.clone(),
            Role::Ego { nominal } => expand_control(nominal, &self.delta_plus, &self.delta_minus, &self.u_min, &self.u_max),
            Role::Background => IntervalBox::from_bounds(&self.u_min, &self.u_max).expect("ordered control bounds"),
        }
    }
}

fn draw_state(spec: &ScenarioSpec, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    let mut c = Vec::with_capacity(6);
    let mut r = Vec::with_capacity(6);
    for (_, range) in &spec.variables()[..6] {
        let (ci, ri) = range.draw(rng);
        c.push(ci);
        r.push(ri);
    }
    (c, r)
}

/// Draws an experiment: uniform centers and radii within the spec ranges,
/// background vehicles placed ahead of the ego without initial overlap.
pub fn sample_system(spec: &ScenarioSpec, rng: &mut impl Rng) -> Result<VehicleSystem> {
    let (c, r) = draw_state(spec, rng);
    let (ac, ar) = spec.a_cc.draw(rng);
    let (dc, dr) = spec.delta_f.draw(rng);
    let ego = Vehicle::ego(IntervalBox::new(c, r)?, IntervalBox::new(vec![ac, dc], vec![ar, dr])?);
    let shape = VehicleShape::default();
    let mut vehicles = vec![ego];
    let mut occupied = vec![state_occupancy(&vehicles[0].state, &shape)?];

    for _ in 1..spec.vehicles {
        let mut placed = false;
        for _ in 0..spec.placement_attempts.max(1) {
            let (mut c, r) = draw_state(spec, rng);
            let ahead_of = vehicles.last().expect("ego exists").state.centers()[0];
            c[0] = ahead_of + draw(rng, spec.bv_gap);
            if spec.lanes > 1 {
                let lane = rng.gen_range(0..spec.lanes);
                c[1] += spec.lane_center(lane);
            }
            let state = IntervalBox::new(c, r)?;
            let poly = state_occupancy(&state, &shape)?;
            let mut clear = true;
            for other in &occupied {
                if polygons_intersect(&poly, other)? {
                    clear = false;
                    break;
                }
            }
            if clear {
                vehicles.push(Vehicle::background(state, spec.full_control_box()));
                occupied.push(poly);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::PlacementFailed {
                attempts: spec.placement_attempts,
            });
        }
    }
    Ok(VehicleSystem::new(vehicles, spec))
}
