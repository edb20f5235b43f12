//! Driver models used by the closed-loop simulation: IDM car following,
//! MOBIL lane changes, and linear feedback for background vehicles.

use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlSignal, ControlVec, StateVec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdmParams {
    /// Desired speed, m/s.
    pub v0: f64,
    /// Time headway, s.
    pub time_headway: f64,
    /// Jam distance, m.
    pub s0: f64,
    pub a_max: f64,
    pub b_comf: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            v0: 8.0,
            time_headway: 1.5,
            s0: 2.0,
            a_max: 3.0,
            b_comf: 3.0,
        }
    }
}

/// Unclipped IDM acceleration. `leader` is `(v_lead, gap)` with the gap
/// measured bumper to bumper.
pub fn idm_acceleration_raw(p: &IdmParams, v: f64, leader: Option<(f64, f64)>) -> Result<f64> {
    let free = 1.0 - (v / p.v0).powi(4);
    let interaction = match leader {
        None => 0.0,
        Some((v_lead, gap)) => {
            if !(gap > 0.0) {
                return Err(Error::NonPositiveGap { gap });
            }
            let dv = v - v_lead;
            let s_star = p.s0 + v * p.time_headway + v * dv / (2.0 * (p.a_max * p.b_comf).sqrt());
            (s_star.max(0.0) / gap).powi(2)
        }
    };
    Ok(p.a_max * (free - interaction))
}

/// IDM acceleration clipped to the longitudinal actuator bounds.
pub fn idm_acceleration(p: &IdmParams, v: f64, leader: Option<(f64, f64)>, bounds: (f64, f64)) -> Result<f64> {
    Ok(idm_acceleration_raw(p, v, leader)?.clamp(bounds.0, bounds.1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MobilParams {
    pub politeness: f64,
    /// Incentive threshold, m/s^2.
    pub threshold: f64,
    /// Largest deceleration imposed on the new follower, m/s^2.
    pub b_safe: f64,
}

impl Default for MobilParams {
    fn default() -> Self {
        Self {
            politeness: 0.5,
            threshold: 0.1,
            b_safe: 3.0,
        }
    }
}

/// Point view of a vehicle on a multi-lane road.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneVehicle {
    pub x: f64,
    pub v: f64,
    pub lane: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaneDecision {
    Keep,
    /// Toward higher lane index (+y).
    Left,
    /// Toward lower lane index (-y).
    Right,
}

struct Neighbors {
    leader: Option<LaneVehicle>,
    follower: Option<LaneVehicle>,
}

fn neighbors_in_lane(x: f64, lane: usize, others: &[LaneVehicle]) -> Neighbors {
    let mut leader: Option<LaneVehicle> = None;
    let mut follower: Option<LaneVehicle> = None;
    for o in others.iter().filter(|o| o.lane == lane) {
        if o.x >= x {
            if leader.is_none_or(|l| o.x < l.x) {
                leader = Some(*o);
            }
        } else if follower.is_none_or(|f| o.x > f.x) {
            follower = Some(*o);
        }
    }
    Neighbors { leader, follower }
}

/// Acceleration of `me` following `leader`; `None` when the bumper gap is
/// not positive (the configuration is infeasible).
fn accel_behind(idm: &IdmParams, me: &LaneVehicle, leader: Option<&LaneVehicle>, length: f64) -> Option<f64> {
    let lead = leader.map(|l| (l.v, l.x - me.x - length));
    idm_acceleration_raw(idm, me.v, lead).ok()
}

/// MOBIL: change lanes when the safety criterion holds for the new follower
/// and the politeness-weighted incentive exceeds the threshold.
pub fn mobil_lane_change(
    ego: &LaneVehicle,
    others: &[LaneVehicle],
    lanes: usize,
    idm: &IdmParams,
    mobil: &MobilParams,
    vehicle_length: f64,
) -> LaneDecision {
    let here = neighbors_in_lane(ego.x, ego.lane, others);
    let Some(a_c) = accel_behind(idm, ego, here.leader.as_ref(), vehicle_length) else {
        return LaneDecision::Keep;
    };
    // old follower before and after the change
    let (a_o, a_o_new) = match &here.follower {
        Some(o) => (
            accel_behind(idm, o, Some(ego), vehicle_length).unwrap_or(-f64::INFINITY),
            accel_behind(idm, o, here.leader.as_ref(), vehicle_length).unwrap_or(-f64::INFINITY),
        ),
        None => (0.0, 0.0),
    };

    let mut best = (LaneDecision::Keep, mobil.threshold);
    let candidates = [
        (LaneDecision::Left, ego.lane + 1 < lanes, ego.lane + 1),
        (LaneDecision::Right, ego.lane > 0, ego.lane.wrapping_sub(1)),
    ];
    for (decision, exists, lane) in candidates {
        if !exists {
            continue;
        }
        let there = neighbors_in_lane(ego.x, lane, others);
        let moved = LaneVehicle { lane, ..*ego };
        let Some(a_c_new) = accel_behind(idm, &moved, there.leader.as_ref(), vehicle_length) else {
            continue;
        };
        let (a_n, a_n_new) = match &there.follower {
            Some(n) => {
                let Some(after) = accel_behind(idm, n, Some(&moved), vehicle_length) else {
                    continue;
                };
                let before = accel_behind(idm, n, there.leader.as_ref(), vehicle_length).unwrap_or(0.0);
                (before, after)
            }
            None => (0.0, 0.0),
        };
        if a_n_new < -mobil.b_safe {
            continue;
        }
        let incentive = a_c_new - a_c + mobil.politeness * (a_n_new - a_n + a_o_new - a_o);
        if incentive > best.1 {
            best = (decision, incentive);
        }
    }
    best.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeedbackGains {
    pub k_v: f64,
    pub k_y: f64,
    pub k_theta: f64,
}

impl Default for FeedbackGains {
    fn default() -> Self {
        Self {
            k_v: 0.5,
            k_y: 0.05,
            k_theta: 0.5,
        }
    }
}

/// Linear feedback on speed and lateral position, clipped to the actuator box.
pub fn bv_feedback_control(
    state: &StateVec,
    v_target: f64,
    y_target: f64,
    gains: &FeedbackGains,
    u_min: &ControlVec,
    u_max: &ControlVec,
) -> ControlSignal {
    let a = gains.k_v * (v_target - state[3]);
    let delta = -gains.k_y * (state[1] - y_target) - gains.k_theta * state[2];
    ControlSignal::new(a.clamp(u_min[0], u_max[0]), delta.clamp(u_min[1], u_max[1]))
}
