//! Two-degree-of-freedom bicycle model.
//!
//! State order is `(x_pos, y_pos, theta, v, w, r)` and control order is
//! `(a_cc, delta_f)`. The lateral equations carry `1/v` terms, so every
//! evaluation requires `v > v_guard`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sets::Interval;

pub const STATE_DIM: usize = 6;
pub const CONTROL_DIM: usize = 2;

pub type StateVec = [f64; STATE_DIM];
pub type ControlVec = [f64; CONTROL_DIM];
pub type StateJacobian = [[f64; STATE_DIM]; STATE_DIM];
pub type ControlJacobian = [[f64; CONTROL_DIM]; STATE_DIM];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x_pos: f64,
    pub y_pos: f64,
    pub theta: f64,
    pub v: f64,
    pub w: f64,
    pub r: f64,
}

impl VehicleState {
    pub fn to_array(&self) -> StateVec {
        [self.x_pos, self.y_pos, self.theta, self.v, self.w, self.r]
    }

    pub fn from_array(a: StateVec) -> Self {
        Self {
            x_pos: a[0],
            y_pos: a[1],
            theta: a[2],
            v: a[3],
            w: a[4],
            r: a[5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    pub a_cc: f64,
    pub delta_f: f64,
}

impl ControlSignal {
    pub const fn new(a_cc: f64, delta_f: f64) -> Self {
        Self { a_cc, delta_f }
    }

    pub fn to_array(&self) -> ControlVec {
        [self.a_cc, self.delta_f]
    }

    pub fn from_array(a: ControlVec) -> Self {
        Self {
            a_cc: a[0],
            delta_f: a[1],
        }
    }
}

/// Physical constants shared by every vehicle in a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleConstants {
    /// mass, kg
    pub m: f64,
    /// yaw moment of inertia, kg m^2
    pub i_z: f64,
    /// front axle to center of mass, m
    pub a: f64,
    /// rear axle to center of mass, m
    pub b: f64,
    /// front cornering stiffness, N/rad
    pub c_af: f64,
    /// rear cornering stiffness, N/rad
    pub c_ar: f64,
}

impl Default for VehicleConstants {
    fn default() -> Self {
        Self {
            m: 1500.0,
            i_z: 2800.0,
            a: 1.2,
            b: 1.4,
            c_af: 1.7e5,
            c_ar: 1.3e5,
        }
    }
}

impl VehicleConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("m", self.m),
            ("i_z", self.i_z),
            ("a", self.a),
            ("b", self.b),
            ("c_af", self.c_af),
            ("c_ar", self.c_ar),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::ConfigInvalid(format!(
                    "vehicle constant {name} = {v} must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Precomputed coefficients of the lateral equations.
///
/// `w_dot = -k1 w/v - k2 r/v + v r + k5 delta_f`
/// `r_dot = -k3 w/v - k4 r/v + k6 delta_f`
#[derive(Debug, Clone, Copy)]
struct Lateral {
    k1: f64,
    k2: f64,
    k3: f64,
    k4: f64,
    k5: f64,
    k6: f64,
}

impl Lateral {
    fn new(c: &VehicleConstants) -> Self {
        let cross = c.b * c.c_ar - c.a * c.c_af;
        Self {
            k1: (c.c_af + c.c_ar) / c.m,
            k2: cross / c.m,
            k3: cross / c.i_z,
            k4: (c.a * c.a * c.c_af + c.b * c.b * c.c_ar) / c.i_z,
            k5: c.c_af / c.m,
            k6: c.a * c.c_af / c.i_z,
        }
    }
}

pub const DEFAULT_V_GUARD: f64 = 0.1;
pub const DEFAULT_MAX_SUBSTEP: f64 = 0.002;

#[derive(Debug, Clone, Copy)]
pub struct BicycleModel {
    constants: VehicleConstants,
    lat: Lateral,
    v_guard: f64,
    max_substep: f64,
}

impl Default for BicycleModel {
    fn default() -> Self {
        Self::new(VehicleConstants::default())
    }
}

impl BicycleModel {
    pub fn new(constants: VehicleConstants) -> Self {
        Self {
            constants,
            lat: Lateral::new(&constants),
            v_guard: DEFAULT_V_GUARD,
            max_substep: DEFAULT_MAX_SUBSTEP,
        }
    }

    pub fn with_v_guard(mut self, v_guard: f64) -> Self {
        self.v_guard = v_guard;
        self
    }

    /// Longest Euler substep used by [`BicycleModel::step`].
    pub fn with_max_substep(mut self, max_substep: f64) -> Self {
        self.max_substep = max_substep;
        self
    }

    pub fn constants(&self) -> &VehicleConstants {
        &self.constants
    }

    pub fn v_guard(&self) -> f64 {
        self.v_guard
    }

    pub fn max_substep(&self) -> f64 {
        self.max_substep
    }

    fn check_speed(&self, v: f64) -> Result<()> {
        if v > self.v_guard {
            Ok(())
        } else {
            Err(Error::SpeedBelowGuard {
                v,
                guard: self.v_guard,
            })
        }
    }

    pub fn derivative(&self, x: &StateVec, u: &ControlVec) -> Result<StateVec> {
        self.check_speed(x[3])?;
        Ok(self.derivative_unchecked(x, u))
    }

    #[inline]
    fn derivative_unchecked(&self, x: &StateVec, u: &ControlVec) -> StateVec {
        let [_, _, theta, v, w, r] = *x;
        let [a_cc, delta_f] = *u;
        let (s, c) = theta.sin_cos();
        let l = &self.lat;
        [
            v * c + w * s,
            -w * c + v * s,
            r,
            a_cc,
            -l.k1 * w / v - l.k2 * r / v + v * r + l.k5 * delta_f,
            -l.k3 * w / v - l.k4 * r / v + l.k6 * delta_f,
        ]
    }

    /// One explicit Euler step `x + f(x, u) * dt`.
    pub fn euler_step(&self, x: &StateVec, u: &ControlVec, dt: f64) -> Result<StateVec> {
        let d = self.derivative(x, u)?;
        Ok(euler_update(x, &d, dt))
    }

    /// Number of equal Euler substeps covering `dt`.
    pub fn substeps(&self, dt: f64) -> usize {
        if !(self.max_substep > 0.0) || dt <= self.max_substep {
            return 1;
        }
        // relative slack so that dt = k * max_substep does not round up
        ((dt / self.max_substep) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }

    /// Point successor over one deduction interval: `substeps(dt)` explicit
    /// Euler steps of length `dt / substeps(dt)`.
    pub fn step(&self, x: &StateVec, u: &ControlVec, dt: f64) -> Result<StateVec> {
        let k = self.substeps(dt);
        let h = dt / k as f64;
        let mut s = *x;
        for _ in 0..k {
            s = self.euler_step(&s, u, h)?;
        }
        Ok(s)
    }

    /// Analytic Jacobians `(df/dx, df/du)` at `(x, u)`.
    pub fn jacobian(&self, x: &StateVec, u: &ControlVec) -> Result<(StateJacobian, ControlJacobian)> {
        self.check_speed(x[3])?;
        let [_, _, theta, v, w, r] = *x;
        let _ = u;
        let (s, c) = theta.sin_cos();
        let l = &self.lat;
        let v2 = v * v;
        let mut a = [[0.0; STATE_DIM]; STATE_DIM];
        a[0][2] = -v * s + w * c;
        a[0][3] = c;
        a[0][4] = s;
        a[1][2] = w * s + v * c;
        a[1][3] = s;
        a[1][4] = -c;
        a[2][5] = 1.0;
        a[4][3] = l.k1 * w / v2 + l.k2 * r / v2 + r;
        a[4][4] = -l.k1 / v;
        a[4][5] = -l.k2 / v + v;
        a[5][3] = l.k3 * w / v2 + l.k4 * r / v2;
        a[5][4] = -l.k3 / v;
        a[5][5] = -l.k4 / v;
        Ok((a, self.control_jacobian()))
    }

    /// `df/du`, which does not depend on the operating point.
    pub fn control_jacobian(&self) -> ControlJacobian {
        let mut b = [[0.0; CONTROL_DIM]; STATE_DIM];
        b[3][0] = 1.0;
        b[4][1] = self.lat.k5;
        b[5][1] = self.lat.k6;
        b
    }

    fn check_speed_interval(&self, v: Interval) -> Result<()> {
        if v.lb > self.v_guard {
            Ok(())
        } else {
            Err(Error::SpeedBelowGuard {
                v: v.lb,
                guard: self.v_guard,
            })
        }
    }

    /// Interval enclosure of `f` over a state box and control box.
    pub fn interval_derivative(
        &self,
        x: &[Interval; STATE_DIM],
        u: &[Interval; CONTROL_DIM],
    ) -> Result<[Interval; STATE_DIM]> {
        let [_, _, theta, v, w, r] = *x;
        self.check_speed_interval(v)?;
        let inv_v = v.recip()?;
        let (s, c) = (theta.sin(), theta.cos());
        let l = &self.lat;
        Ok([
            v * c + w * s,
            -(w * c) + v * s,
            r,
            u[0],
            (w * inv_v) * -l.k1 - (r * inv_v) * l.k2 + v * r + u[1] * l.k5,
            (w * inv_v) * -l.k3 - (r * inv_v) * l.k4 + u[1] * l.k6,
        ])
    }

    /// Interval enclosure of `df/dx` over a state box.
    pub fn interval_jacobian(&self, x: &[Interval; STATE_DIM]) -> Result<[[Interval; STATE_DIM]; STATE_DIM]> {
        let [_, _, theta, v, w, r] = *x;
        self.check_speed_interval(v)?;
        let inv_v = v.recip()?;
        let inv_v2 = inv_v.sqr();
        let (s, c) = (theta.sin(), theta.cos());
        let l = &self.lat;
        let zero = Interval::point(0.0);
        let mut a = [[zero; STATE_DIM]; STATE_DIM];
        a[0][2] = -(v * s) + w * c;
        a[0][3] = c;
        a[0][4] = s;
        a[1][2] = w * s + v * c;
        a[1][3] = s;
        a[1][4] = -c;
        a[2][5] = Interval::point(1.0);
        a[4][3] = (w * l.k1 + r * l.k2) * inv_v2 + r;
        a[4][4] = inv_v * -l.k1;
        a[4][5] = inv_v * -l.k2 + v;
        a[5][3] = (w * l.k3 + r * l.k4) * inv_v2;
        a[5][4] = inv_v * -l.k3;
        a[5][5] = inv_v * -l.k4;
        Ok(a)
    }
}

#[inline]
pub(crate) fn euler_update(x: &StateVec, d: &StateVec, dt: f64) -> StateVec {
    let mut out = *x;
    for i in 0..STATE_DIM {
        out[i] += d[i] * dt;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn model() -> BicycleModel {
        BicycleModel::default()
    }

    /// Independent transcription of the lateral equations with the raw
    /// constants, no precomputed coefficients.
    fn reference_derivative(x: &StateVec, u: &ControlVec) -> StateVec {
        let (m, iz, a, b, caf, car) = (1500.0, 2800.0, 1.2, 1.4, 1.7e5, 1.3e5);
        let [_, _, th, v, w, r] = *x;
        let [acc, df] = *u;
        [
            v * th.cos() + w * th.sin(),
            -w * th.cos() + v * th.sin(),
            r,
            acc,
            -((caf + car) / (m * v)) * w - ((b * car - a * caf) / (m * v) - v) * r + caf / m * df,
            -((b * car - a * caf) / (iz * v)) * w - ((a * a * caf + b * b * car) / (iz * v)) * r + a * caf / iz * df,
        ]
    }

    #[test]
    fn straight_line_derivative() {
        let d = model().derivative(&[0.0, 0.0, 0.0, 5.0, 0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(d, [5.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn steering_derivative() {
        let d = model().derivative(&[0.0, 0.0, 0.0, 5.0, 0.0, 0.0], &[0.0, 0.01]).unwrap();
        assert_relative_eq!(d[4], 1.7e5 / 1500.0 * 0.01, max_relative = 1e-12);
        assert_relative_eq!(d[4], 1.133_333_333_333, epsilon = 1e-9);
        assert_relative_eq!(d[5], 1.2 * 1.7e5 / 2800.0 * 0.01, max_relative = 1e-12);
        assert_relative_eq!(d[5], 0.728_571_428_571, epsilon = 1e-9);
        assert_eq!(&d[..4], &[5.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rotated_heading_derivative() {
        let x = [0.0, 0.0, FRAC_PI_2, 5.0, 1.0, 0.1];
        let d = model().derivative(&x, &[0.0, 0.0]).unwrap();
        let reference = reference_derivative(&x, &[0.0, 0.0]);
        assert_relative_eq!(d[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(d[1], 5.0, epsilon = 1e-12);
        assert_eq!(d[2], 0.1);
        assert_eq!(d[3], 0.0);
        // w_dot = -200/5 * 1 - (-14.6667/5 - 5) * 0.1 ; r_dot = 7.857/5 - 178.43/5 * 0.1
        assert_relative_eq!(d[4], -40.0 + (22000.0 / 1500.0 / 5.0 + 5.0) * 0.1, epsilon = 1e-9);
        assert_relative_eq!(d[5], 22000.0 / 2800.0 / 5.0 - 499_600.0 / 2800.0 / 5.0 * 0.1, epsilon = 1e-9);
        for i in 0..6 {
            assert_relative_eq!(d[i], reference[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn guard_is_enforced() {
        let m = model();
        let err = m.derivative(&[0.0, 0.0, 0.0, 0.1, 0.0, 0.0], &[0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::SpeedBelowGuard { .. }));
        assert!(m.jacobian(&[0.0, 0.0, 0.0, -1.0, 0.0, 0.0], &[0.0, 0.0]).is_err());
        assert!(m.euler_step(&[0.0, 0.0, 0.0, 0.05, 0.0, 0.0], &[0.0, 0.0], 0.1).is_err());
    }

    #[test]
    fn euler_examples() {
        let m = model();
        let x = [0.0, 0.0, 0.0, 5.0, 0.0, 0.0];
        let next = m.euler_step(&x, &[1.0, 0.0], 0.2).unwrap();
        assert_eq!(next, [1.0, 0.0, 0.0, 5.2, 0.0, 0.0]);
        assert_eq!(m.euler_step(&x, &[1.0, 0.0], 0.0).unwrap(), x);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = random_state(&mut rng);
            let u = [rng.gen_range(-3.0..3.0), rng.gen_range(-0.1..0.1)];
            let dt = rng.gen_range(0.0..0.3);
            let d = m.derivative(&x, &u).unwrap();
            let next = m.euler_step(&x, &u, dt).unwrap();
            for i in 0..6 {
                assert_eq!(next[i], x[i] + d[i] * dt);
            }
        }
    }

    #[test]
    fn substep_count() {
        let m = model();
        assert_eq!(m.substeps(0.2), 100);
        assert_eq!(m.substeps(0.001), 1);
        assert_eq!(m.with_max_substep(0.2).substeps(0.2), 1);
        assert_eq!(m.with_max_substep(0.03).substeps(0.2), 7);
    }

    #[test]
    fn single_substep_step_is_euler() {
        let m = model().with_max_substep(1.0);
        let x = [1.0, 2.0, 0.05, 6.0, 0.1, 0.02];
        let u = [0.5, 0.01];
        assert_eq!(m.step(&x, &u, 0.2).unwrap(), m.euler_step(&x, &u, 0.2).unwrap());
    }

    fn random_state(rng: &mut ChaCha8Rng) -> StateVec {
        [
            rng.gen_range(-20.0..20.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-0.5..0.5),
            rng.gen_range(0.5..12.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-0.3..0.3),
        ]
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-6;
        for _ in 0..100 {
            let x = random_state(&mut rng);
            let u = [rng.gen_range(-3.0..3.0), rng.gen_range(-0.1..0.1)];
            let (a, b) = m.jacobian(&x, &u).unwrap();
            for j in 0..6 {
                let (mut xp, mut xm) = (x, x);
                xp[j] += h;
                xm[j] -= h;
                let (fp, fm) = (reference_derivative(&xp, &u), reference_derivative(&xm, &u));
                for i in 0..6 {
                    let fd = (fp[i] - fm[i]) / (2.0 * h);
                    assert!(
                        (fd - a[i][j]).abs() <= 1e-4 * fd.abs().max(1.0),
                        "dA[{i}][{j}] analytic {} vs fd {fd}",
                        a[i][j]
                    );
                }
            }
            for j in 0..2 {
                let (mut up, mut um) = (u, u);
                up[j] += h;
                um[j] -= h;
                let (fp, fm) = (reference_derivative(&x, &up), reference_derivative(&x, &um));
                for i in 0..6 {
                    let fd = (fp[i] - fm[i]) / (2.0 * h);
                    assert!((fd - b[i][j]).abs() <= 1e-4 * fd.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn linear_rows_exact() {
        let (a, b) = model().jacobian(&[0.0, 0.0, 0.0, 5.0, 0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(b[3][0], 1.0);
        assert_eq!(a[2][5], 1.0);
        assert_eq!(a[0][3], 1.0);
    }

    #[test]
    fn straight_motion_stays_on_axis() {
        let m = model();
        let mut x = [0.0, 0.0, 0.0, 5.0, 0.0, 0.0];
        for _ in 0..200 {
            x = m.euler_step(&x, &[0.0, 0.0], 0.2).unwrap();
            assert_eq!([x[1], x[2], x[4], x[5]], [0.0; 4]);
        }
        let y = m.step(&[0.0, 0.0, 0.0, 5.0, 0.0, 0.0], &[0.0, 0.0], 0.2).unwrap();
        assert_eq!([y[1], y[2], y[4], y[5]], [0.0; 4]);
    }

    #[test]
    fn translation_invariance() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let mut x = random_state(&mut rng);
            x[3] += 1.0;
            let u = [rng.gen_range(-3.0..3.0), rng.gen_range(-0.1..0.1)];
            let (dx, dy) = (rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0));
            let mut shifted = x;
            shifted[0] += dx;
            shifted[1] += dy;
            let a = m.step(&x, &u, 0.2).unwrap();
            let b = m.step(&shifted, &u, 0.2).unwrap();
            assert_relative_eq!(b[0] - dx, a[0], epsilon = 1e-9);
            assert_relative_eq!(b[1] - dy, a[1], epsilon = 1e-9);
            assert_eq!(&a[2..], &b[2..]);
        }
    }

    #[test]
    fn derivative_is_finite_on_valid_inputs() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100_000 {
            let mut x = random_state(&mut rng);
            x[3] = rng.gen_range(0.1000001..40.0);
            let u = [rng.gen_range(-5.0..5.0), rng.gen_range(-0.5..0.5)];
            assert!(m.derivative(&x, &u).unwrap().iter().all(|d| d.is_finite()));
        }
    }

    #[test]
    fn interval_derivative_contains_points() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let c = random_state(&mut rng);
            let xs: [Interval; 6] = std::array::from_fn(|i| {
                Interval::from_center_radius(c[i], if i == 3 { 0.3 } else { rng.gen_range(0.0..0.2) })
            });
            let us = [
                Interval::from_center_radius(0.0, 1.0),
                Interval::from_center_radius(0.0, 0.05),
            ];
            let fi = m.interval_derivative(&xs, &us).unwrap();
            let ji = m.interval_jacobian(&xs).unwrap();
            for _ in 0..200 {
                let x: StateVec = std::array::from_fn(|i| rng.gen_range(xs[i].lb..=xs[i].ub));
                let u = [rng.gen_range(us[0].lb..=us[0].ub), rng.gen_range(us[1].lb..=us[1].ub)];
                let f = m.derivative(&x, &u).unwrap();
                let (a, _) = m.jacobian(&x, &u).unwrap();
                for i in 0..6 {
                    assert!(fi[i].lb - 1e-9 <= f[i] && f[i] <= fi[i].ub + 1e-9);
                    for j in 0..6 {
                        assert!(ji[i][j].lb - 1e-9 <= a[i][j] && a[i][j] <= ji[i][j].ub + 1e-9);
                    }
                }
            }
        }
    }
}
