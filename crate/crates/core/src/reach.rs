//! One-step reachable-set deduction (the oracle) and multi-step rollouts.
//!
//! Three engines share the same point map, [`BicycleModel::step`]:
//!
//! * [`deduce_step_linearized`] keeps the state set as a zonotope across the
//!   Euler substeps of one deduction interval. Each substep linearizes at the
//!   set center and bounds the remainder with the mean-value form
//!   `(J(box) - J(center)) * (x - center)` evaluated in interval arithmetic.
//!   The result is hulled to a box at the end of the interval.
//! * [`deduce_step_interval`] evaluates the derivative in plain interval
//!   arithmetic every substep. Sound but loose.
//! * [`deduce_step_sampled`] is the hull of sampled point successors, an
//!   under-approximation used as ground truth in tests and metrics.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::VehicleSystem;
use crate::dynamics::{euler_update, BicycleModel, ControlVec, StateVec, CONTROL_DIM, STATE_DIM};
use crate::error::{Error, Result};
use crate::parallel::{map_range, Execution};
use crate::sets::{Interval, IntervalBox};

/// Sets entering one deduction step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInput {
    pub state: IntervalBox,
    pub control: IntervalBox,
    pub dt: f64,
}

impl StepInput {
    pub fn new(state: IntervalBox, control: IntervalBox, dt: f64) -> Self {
        Self { state, control, dt }
    }

    pub fn validate(&self, model: &BicycleModel) -> Result<()> {
        if self.state.dim() != STATE_DIM {
            return Err(Error::DimensionMismatch {
                expected: STATE_DIM,
                got: self.state.dim(),
            });
        }
        if self.control.dim() != CONTROL_DIM {
            return Err(Error::DimensionMismatch {
                expected: CONTROL_DIM,
                got: self.control.dim(),
            });
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidSet(format!("step length {} must be positive", self.dt)));
        }
        let v_lb = self.state.lb(3);
        if !(v_lb > model.v_guard()) {
            return Err(Error::SpeedBelowGuard {
                v: v_lb,
                guard: model.v_guard(),
            });
        }
        Ok(())
    }

    fn arrays(&self) -> (StateVec, StateVec, ControlVec, ControlVec) {
        let s = |b: &IntervalBox, i: usize| (b.centers()[i], b.radii()[i]);
        let mut cx = [0.0; STATE_DIM];
        let mut rx = [0.0; STATE_DIM];
        for i in 0..STATE_DIM {
            (cx[i], rx[i]) = s(&self.state, i);
        }
        let mut cu = [0.0; CONTROL_DIM];
        let mut ru = [0.0; CONTROL_DIM];
        for i in 0..CONTROL_DIM {
            (cu[i], ru[i]) = s(&self.control, i);
        }
        (cx, rx, cu, ru)
    }
}

const GEN: usize = STATE_DIM + CONTROL_DIM;

/// Remainder generators kept before order reduction.
const MAX_REMAINDER_GENS: usize = 48;
/// Generators boxed per reduction.
const REDUCE_COUNT: usize = 30;

type Column = [f64; STATE_DIM];

/// Replaces the `REDUCE_COUNT` generators whose boxing loses least
/// (smallest `|g|_1 - |g|_inf`) by their axis-aligned bounding box.
fn reduce_order(gens: &mut Vec<Column>) {
    let cost = |g: &Column| {
        let l1: f64 = g.iter().map(|x| x.abs()).sum();
        let linf = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        l1 - linf
    };
    let mut order: Vec<usize> = (0..gens.len()).collect();
    order.sort_by(|&a, &b| cost(&gens[a]).total_cmp(&cost(&gens[b])));
    let mut boxed = [0.0; STATE_DIM];
    let mut drop = vec![false; gens.len()];
    for &idx in order.iter().take(REDUCE_COUNT) {
        drop[idx] = true;
        for i in 0..STATE_DIM {
            boxed[i] += gens[idx][i].abs();
        }
    }
    let mut kept: Vec<Column> = gens.iter().zip(&drop).filter(|(_, &d)| !d).map(|(g, _)| *g).collect();
    for i in 0..STATE_DIM {
        if boxed[i] > 0.0 {
            let mut col = [0.0; STATE_DIM];
            col[i] = boxed[i];
            kept.push(col);
        }
    }
    *gens = kept;
}

/// Largest speed radius per slice, relative to the slice's lowest reachable
/// speed. The lateral terms scale with `1/v`, so a wide speed range makes the
/// Jacobian spread, and hence the remainder, dominate the contraction.
const SLICE_RATIO: f64 = 0.1;
const MAX_SLICES: usize = 32;

/// Number of equal speed slices used for `input`.
pub fn speed_slices(input: &StepInput) -> usize {
    let v = input.state.interval(3);
    let a_lb = input.control.lb(0).min(0.0);
    let v_end = v.lb + a_lb * input.dt;
    if !(v_end > 0.0) {
        return MAX_SLICES;
    }
    let n = (v.radius() / (SLICE_RATIO * v_end)).ceil();
    (n.max(1.0) as usize).min(MAX_SLICES)
}

/// Linearized zonotope propagation with a mean-value remainder bound. The
/// speed range is split into slices (see [`speed_slices`]) whose results
/// are hulled.
pub fn deduce_step_linearized(model: &BicycleModel, input: &StepInput) -> Result<IntervalBox> {
    input.validate(model)?;
    let n = speed_slices(input);
    if n == 1 {
        return linearized_single(model, input);
    }
    let v = input.state.interval(3);
    let width = v.width() / n as f64;
    let mut out: Option<IntervalBox> = None;
    for k in 0..n {
        let lb = v.lb + k as f64 * width;
        let ub = if k + 1 == n { v.ub } else { v.lb + (k + 1) as f64 * width };
        let mut centers = input.state.centers().to_vec();
        let mut radii = input.state.radii().to_vec();
        centers[3] = 0.5 * (lb + ub);
        radii[3] = 0.5 * (ub - lb);
        // rounding must not leave a gap between slices or at the ends
        radii[3] = radii[3].max(centers[3] - lb).max(ub - centers[3]);
        let slice = StepInput::new(IntervalBox::new(centers, radii)?, input.control.clone(), input.dt);
        let b = linearized_single(model, &slice)?;
        out = Some(match out {
            None => b,
            Some(acc) => acc.hull(&b)?,
        });
    }
    Ok(out.expect("at least one slice"))
}

fn linearized_single(model: &BicycleModel, input: &StepInput) -> Result<IntervalBox> {
    let (cx, rx, cu, ru) = input.arrays();
    let k = model.substeps(input.dt);
    let h = input.dt / k as f64;
    let b = model.control_jacobian();

    // state set: c + G alpha + E beta, alpha shared with the control box,
    // E collecting the linearization remainders
    let mut c = cx;
    let mut g = [[0.0; GEN]; STATE_DIM];
    for i in 0..STATE_DIM {
        g[i][i] = rx[i];
    }
    let mut err: Vec<Column> = Vec::new();

    let radius = |g: &[[f64; GEN]; STATE_DIM], err: &[Column], i: usize| {
        g[i].iter().map(|x| x.abs()).sum::<f64>() + err.iter().map(|col| col[i].abs()).sum::<f64>()
    };

    for _ in 0..k {
        let mut rad = [0.0; STATE_DIM];
        let mut hull = [Interval::point(0.0); STATE_DIM];
        for i in 0..STATE_DIM {
            rad[i] = radius(&g, &err, i);
            hull[i] = Interval::from_center_radius(c[i], rad[i]);
        }
        let f0 = model.derivative(&c, &cu)?;
        let (a, _) = model.jacobian(&c, &cu)?;
        let ja = model.interval_jacobian(&hull)?;

        let mut rem = [0.0; STATE_DIM];
        for i in 0..STATE_DIM {
            rem[i] = (0..STATE_DIM)
                .map(|j| (ja[i][j].lb - a[i][j]).abs().max((ja[i][j].ub - a[i][j]).abs()) * rad[j])
                .sum();
        }

        // x + h A x applied to every generator
        let advance = |col: &dyn Fn(usize) -> f64| -> Column {
            std::array::from_fn(|i| col(i) + h * (0..STATE_DIM).map(|j| a[i][j] * col(j)).sum::<f64>())
        };
        let mut g_next = g;
        for gi in 0..GEN {
            let moved = advance(&|i| g[i][gi]);
            for i in 0..STATE_DIM {
                g_next[i][gi] = moved[i];
            }
        }
        for i in 0..STATE_DIM {
            for j in 0..CONTROL_DIM {
                g_next[i][STATE_DIM + j] += h * b[i][j] * ru[j];
            }
        }
        for col in err.iter_mut() {
            let src = *col;
            *col = advance(&|i| src[i]);
        }
        for i in 0..STATE_DIM {
            if rem[i] > 0.0 {
                let mut col = [0.0; STATE_DIM];
                col[i] = h * rem[i];
                err.push(col);
            }
        }
        if err.len() > MAX_REMAINDER_GENS {
            reduce_order(&mut err);
        }
        c = euler_update(&c, &f0, h);
        g = g_next;
    }

    let radii: Vec<f64> = (0..STATE_DIM).map(|i| radius(&g, &err, i)).collect();
    IntervalBox::new(c.to_vec(), radii)
}

/// Plain interval evaluation `X + h * F(X, U)` per substep.
pub fn deduce_step_interval(model: &BicycleModel, input: &StepInput) -> Result<IntervalBox> {
    input.validate(model)?;
    let k = model.substeps(input.dt);
    let h = input.dt / k as f64;
    let mut x: [Interval; STATE_DIM] = std::array::from_fn(|i| input.state.interval(i));
    let u: [Interval; CONTROL_DIM] = std::array::from_fn(|i| input.control.interval(i));
    for _ in 0..k {
        let f = model.interval_derivative(&x, &u)?;
        for i in 0..STATE_DIM {
            x[i] = x[i] + f[i].scale(h);
        }
    }
    IntervalBox::from_intervals(&x)
}

const SAMPLE_CHUNK: usize = 4096;

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

fn uniform(rng: &mut ChaCha8Rng, c: f64, r: f64) -> f64 {
    if r > 0.0 {
        rng.gen_range(c - r..=c + r)
    } else {
        c
    }
}

/// `n` point successors of uniform samples from the input boxes.
///
/// Sample `i` depends only on `(seed, i)`, so the first `n` samples of a
/// larger draw are the same points.
pub fn sample_successors(
    model: &BicycleModel,
    input: &StepInput,
    n: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<StateVec>> {
    input.validate(model)?;
    let (cx, rx, cu, ru) = input.arrays();
    let chunks = n.div_ceil(SAMPLE_CHUNK);
    let parts = map_range(exec, chunks, |ci| -> Result<Vec<StateVec>> {
        let mut rng = chunk_rng(seed, ci);
        let len = SAMPLE_CHUNK.min(n - ci * SAMPLE_CHUNK);
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let x: StateVec = std::array::from_fn(|i| uniform(&mut rng, cx[i], rx[i]));
            let u: ControlVec = std::array::from_fn(|i| uniform(&mut rng, cu[i], ru[i]));
            out.push(model.step(&x, &u, input.dt)?);
        }
        Ok(out)
    });
    let mut all = Vec::with_capacity(n);
    for p in parts {
        all.extend(p?);
    }
    Ok(all)
}

/// Hull of `n` sampled successors; an inner approximation of the reachable box.
pub fn deduce_step_sampled(model: &BicycleModel, input: &StepInput, n: usize, seed: u64) -> Result<IntervalBox> {
    deduce_step_sampled_with(model, input, n, seed, Execution::Sequential)
}

pub fn deduce_step_sampled_with(
    model: &BicycleModel,
    input: &StepInput,
    n: usize,
    seed: u64,
    exec: Execution,
) -> Result<IntervalBox> {
    if n == 0 {
        return Err(Error::InvalidSet("sample count must be at least 1".into()));
    }
    let pts = sample_successors(model, input, n, seed, exec)?;
    IntervalBox::hull_of_points(pts.iter().map(|p| p.as_slice()))
        .ok_or_else(|| Error::InvalidSet("empty sample set".into()))
}

/// Anything that maps one step's input sets to the next state box.
pub trait StepDeducer: Sync {
    fn name(&self) -> &str;

    fn deduce_step(&self, input: &StepInput) -> Result<IntervalBox>;

    /// Several independent steps at once; engines with batched evaluation
    /// override this.
    fn deduce_batch(&self, inputs: &[StepInput]) -> Result<Vec<IntervalBox>> {
        inputs.iter().map(|i| self.deduce_step(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    #[default]
    Linearized,
    Interval,
    Sampled,
}

/// Traditional set-propagation engine.
#[derive(Debug, Clone)]
pub struct Oracle {
    pub model: BicycleModel,
    pub kind: OracleKind,
    /// Sample count and seed for [`OracleKind::Sampled`].
    pub samples: usize,
    pub seed: u64,
}

impl Oracle {
    pub fn new(model: BicycleModel, kind: OracleKind) -> Self {
        Self {
            model,
            kind,
            samples: 10_000,
            seed: 0,
        }
    }

    pub fn linearized(model: BicycleModel) -> Self {
        Self::new(model, OracleKind::Linearized)
    }
}

impl StepDeducer for Oracle {
    fn name(&self) -> &str {
        match self.kind {
            OracleKind::Linearized => "oracle-linearized",
            OracleKind::Interval => "oracle-interval",
            OracleKind::Sampled => "oracle-sampled",
        }
    }

    fn deduce_step(&self, input: &StepInput) -> Result<IntervalBox> {
        match self.kind {
            OracleKind::Linearized => deduce_step_linearized(&self.model, input),
            OracleKind::Interval => deduce_step_interval(&self.model, input),
            OracleKind::Sampled => deduce_step_sampled(&self.model, input, self.samples, self.seed),
        }
    }
}

/// Deduced boxes of one vehicle over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachTrace {
    /// State box after step `k + 1`.
    pub steps: Vec<IntervalBox>,
    /// Control box used during step `k + 1`.
    pub controls: Vec<IntervalBox>,
    /// Wall-clock seconds per step (shared by all vehicles of that step).
    #[serde(skip)]
    pub step_seconds: Vec<f64>,
}

impl ReachTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Rolls every vehicle `horizon` steps forward. All vehicles of a step are
/// deduced in one batch.
pub fn deduce_trajectory(
    system: &VehicleSystem,
    engine: &dyn StepDeducer,
    horizon: usize,
) -> Result<Vec<ReachTrace>> {
    let n = system.vehicles.len();
    let mut traces = vec![
        ReachTrace {
            steps: Vec::with_capacity(horizon),
            controls: Vec::with_capacity(horizon),
            step_seconds: Vec::with_capacity(horizon),
        };
        n
    ];
    let mut states: Vec<IntervalBox> = system.vehicles.iter().map(|v| v.state.clone()).collect();
    for step in 0..horizon {
        let inputs: Vec<StepInput> = (0..n)
            .map(|i| StepInput::new(states[i].clone(), system.control_for_step(i, step), system.dt))
            .collect();
        let t0 = Instant::now();
        let next = match engine.deduce_batch(&inputs) {
            Ok(next) => next,
            Err(_) => {
                // locate the failing vehicle for the diagnostic
                for (i, inp) in inputs.iter().enumerate() {
                    engine.deduce_step(inp).map_err(|e| e.at_step(step, i))?;
                }
                return Err(Error::InvalidSet(format!("batched deduction failed at step {step}")));
            }
        };
        let elapsed = t0.elapsed().as_secs_f64();
        for (i, (inp, out)) in inputs.into_iter().zip(next).enumerate() {
            traces[i].controls.push(inp.control);
            traces[i].steps.push(out.clone());
            traces[i].step_seconds.push(elapsed);
            states[i] = out;
        }
    }
    Ok(traces)
}
