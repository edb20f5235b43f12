//! Set-coverage metrics on the position plane, safety-flag agreement, and a
//! small wall-clock timing harness.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sets::IntervalBox;

/// Axis-aligned rectangle `[lb_x, ub_x] x [lb_y, ub_y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lb_x: f64,
    pub ub_x: f64,
    pub lb_y: f64,
    pub ub_y: f64,
}

impl Rect {
    pub fn new(lb_x: f64, ub_x: f64, lb_y: f64, ub_y: f64) -> Result<Self> {
        if !(lb_x <= ub_x && lb_y <= ub_y) {
            return Err(Error::InvalidSet(format!(
                "rectangle [{lb_x}, {ub_x}] x [{lb_y}, {ub_y}] has reversed bounds"
            )));
        }
        Ok(Self { lb_x, ub_x, lb_y, ub_y })
    }

    /// Position projection (first two components) of a state box.
    pub fn from_state(b: &IntervalBox) -> Self {
        Self {
            lb_x: b.lb(0),
            ub_x: b.ub(0),
            lb_y: b.lb(1),
            ub_y: b.ub(1),
        }
    }

    pub fn area(&self) -> f64 {
        (self.ub_x - self.lb_x) * (self.ub_y - self.lb_y)
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.lb_x + self.ub_x), 0.5 * (self.lb_y + self.ub_y)]
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.lb_x <= p[0] && p[0] <= self.ub_x && self.lb_y <= p[1] && p[1] <= self.ub_y
    }
}

/// Predicted and reference position rectangles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxPair2D {
    pub model: Rect,
    pub label: Rect,
}

impl BoxPair2D {
    pub fn new(model: Rect, label: Rect) -> Self {
        Self { model, label }
    }

    pub fn from_states(model: &IntervalBox, label: &IntervalBox) -> Self {
        Self::new(Rect::from_state(model), Rect::from_state(label))
    }

    /// Overlap area, with negative covers clamped to zero.
    pub fn overlap(&self) -> f64 {
        let (m, l) = (&self.model, &self.label);
        let cover_x = (m.ub_x.min(l.ub_x) - m.lb_x.max(l.lb_x)).max(0.0);
        let cover_y = (m.ub_y.min(l.ub_y) - m.lb_y.max(l.lb_y)).max(0.0);
        cover_x * cover_y
    }
}

fn coverage(overlap: f64, denom: &Rect, other: &Rect) -> f64 {
    let area = denom.area();
    if area > 0.0 {
        (overlap / area).clamp(0.0, 1.0)
    } else if other.contains(denom.center()) {
        1.0
    } else {
        0.0
    }
}

/// Fraction of the label rectangle covered by the model rectangle. A
/// zero-area label scores 1 when its center lies in the model box.
pub fn recall_pos(p: &BoxPair2D) -> f64 {
    coverage(p.overlap(), &p.label, &p.model)
}

/// Fraction of the model rectangle covered by the label rectangle.
pub fn precision_pos(p: &BoxPair2D) -> f64 {
    coverage(p.overlap(), &p.model, &p.label)
}

/// Fraction of positions where the two flag lists agree.
pub fn agreement(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
    Ok(same as f64 / a.len() as f64)
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self::default();
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std, n }
    }
}

pub const MIN_REPEATS: usize = 3;

/// Times `op` once per repeat after one untimed warm-up call. `repeats` is
/// raised to [`MIN_REPEATS`].
pub fn time_step<T>(mut op: impl FnMut() -> T, repeats: usize) -> MeanStd {
    std::hint::black_box(op());
    let samples: Vec<f64> = (0..repeats.max(MIN_REPEATS))
        .map(|_| {
            let t0 = Instant::now();
            std::hint::black_box(op());
            t0.elapsed().as_secs_f64()
        })
        .collect();
    MeanStd::of(&samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rect(lx: f64, ux: f64, ly: f64, uy: f64) -> Rect {
        Rect::new(lx, ux, ly, uy).unwrap()
    }

    /// Midpoint-grid estimate of overlap / area(denominator).
    fn grid_ratio(denom: &Rect, other: &Rect, n: usize) -> f64 {
        let mut hit = 0usize;
        for i in 0..n {
            let x = denom.lb_x + (i as f64 + 0.5) / n as f64 * (denom.ub_x - denom.lb_x);
            for j in 0..n {
                let y = denom.lb_y + (j as f64 + 0.5) / n as f64 * (denom.ub_y - denom.lb_y);
                if other.contains([x, y]) {
                    hit += 1;
                }
            }
        }
        hit as f64 / (n * n) as f64
    }

    #[test]
    fn identical_boxes() {
        let r = rect(0.0, 1.0, 2.0, 5.0);
        let p = BoxPair2D::new(r, r);
        assert_eq!(recall_pos(&p), 1.0);
        assert_eq!(precision_pos(&p), 1.0);
    }

    #[test]
    fn quarter_overlap() {
        let p = BoxPair2D::new(rect(0.0, 2.0, 0.0, 2.0), rect(1.0, 3.0, 1.0, 3.0));
        assert!((recall_pos(&p) - 0.25).abs() < 1e-15);
        assert!((precision_pos(&p) - 0.25).abs() < 1e-15);
        assert!((grid_ratio(&p.label, &p.model, 1000) - 0.25).abs() < 0.01);
    }

    #[test]
    fn disjoint_is_zero() {
        let p = BoxPair2D::new(rect(0.0, 1.0, 0.0, 1.0), rect(5.0, 6.0, -3.0, -2.0));
        assert_eq!(recall_pos(&p), 0.0);
        assert_eq!(precision_pos(&p), 0.0);
    }

    #[test]
    fn containment() {
        let p = BoxPair2D::new(rect(0.0, 4.0, 0.0, 4.0), rect(1.0, 2.0, 1.0, 3.0));
        assert_eq!(recall_pos(&p), 1.0);
        assert!((precision_pos(&p) - 2.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn zero_area_rules() {
        let point = rect(1.0, 1.0, 1.0, 1.0);
        let big = rect(0.0, 2.0, 0.0, 2.0);
        assert_eq!(recall_pos(&BoxPair2D::new(big, point)), 1.0);
        assert_eq!(recall_pos(&BoxPair2D::new(rect(5.0, 6.0, 5.0, 6.0), point)), 0.0);
        assert_eq!(precision_pos(&BoxPair2D::new(point, big)), 1.0);
    }

    #[test]
    fn agreement_cases() {
        let a = vec![true; 100];
        assert_eq!(agreement(&a, &a).unwrap(), 1.0);
        let mut b = a.clone();
        b[17] = false;
        assert!((agreement(&a, &b).unwrap() - 0.99).abs() < 1e-15);
        assert!(matches!(agreement(&[], &[]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(agreement(&[true], &[true, false]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn timing_enforces_minimum_repeats() {
        let mut calls = 0;
        let t = time_step(
            || {
                calls += 1;
            },
            1,
        );
        assert_eq!(t.n, 3);
        assert_eq!(calls, 4);
    }

    #[test]
    fn timing_is_stable_for_fixed_work() {
        let work = || (0..std::hint::black_box(200_000u64)).fold(0u64, |a, x| a.wrapping_add(std::hint::black_box(x * x)));
        let t = time_step(work, 20);
        assert!(t.mean > 0.0);
        assert!(t.std < 0.5 * t.mean, "{t:?}");
    }

    #[test]
    fn grid_agrees_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut r = || {
            let (x, y) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let (w, h): (f64, f64) = (rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0));
            rect(x, x + w, y, y + h)
        };
        for _ in 0..50 {
            let p = BoxPair2D::new(r(), r());
            assert!((recall_pos(&p) - grid_ratio(&p.label, &p.model, 300)).abs() < 0.02);
            assert!((precision_pos(&p) - grid_ratio(&p.model, &p.label, 300)).abs() < 0.02);
        }
    }

    fn arb_rect() -> impl Strategy<Value = Rect> {
        (-5.0..5.0f64, -5.0..5.0f64, 0.0..3.0f64, 0.0..3.0f64).prop_map(|(x, y, w, h)| rect(x, x + w, y, y + h))
    }

    proptest! {
        #[test]
        fn metrics_in_unit_interval(m in arb_rect(), l in arb_rect()) {
            let p = BoxPair2D::new(m, l);
            prop_assert!((0.0..=1.0).contains(&recall_pos(&p)));
            prop_assert!((0.0..=1.0).contains(&precision_pos(&p)));
        }

        #[test]
        fn swapping_roles_swaps_metrics(m in arb_rect(), l in arb_rect()) {
            let p = BoxPair2D::new(m, l);
            let q = BoxPair2D::new(l, m);
            prop_assert_eq!(recall_pos(&p), precision_pos(&q));
            prop_assert_eq!(precision_pos(&p), recall_pos(&q));
        }
    }
}
