//! Safety standards: per-vehicle halfspace containment (S1) and pairwise
//! occupancy disjointness (S2).

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::dynamics::STATE_DIM;
use crate::error::{Error, Result};
use crate::reach::ReachTrace;
use crate::sets::{box_to_zonotope, support, Interval, IntervalBox, Zonotope};

/// `{ x | C x <= d }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceSet {
    c: Vec<Vec<f64>>,
    d: Vec<f64>,
}

impl HalfspaceSet {
    pub fn new(c: Vec<Vec<f64>>, d: Vec<f64>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::InvalidSet("halfspace set needs at least one row".into()));
        }
        if c.len() != d.len() {
            return Err(Error::DimensionMismatch {
                expected: c.len(),
                got: d.len(),
            });
        }
        let k = c[0].len();
        if let Some(row) = c.iter().find(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: row.len(),
            });
        }
        if c.iter().flatten().chain(&d).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSet("halfspace rows must be finite".into()));
        }
        Ok(Self { c, d })
    }

    pub fn dim(&self) -> usize {
        self.c[0].len()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.c.iter().map(|r| r.as_slice()).zip(self.d.iter().copied())
    }
}

/// `X subset S`, decided exactly through the zonotope support function.
pub fn check_s1_state(x: &Zonotope, s: &HalfspaceSet) -> Result<bool> {
    if x.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: x.dim(),
        });
    }
    for (row, d) in s.rows() {
        if support(x, row)? > d {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleShape {
    pub length: f64,
    pub width: f64,
}

impl Default for VehicleShape {
    fn default() -> Self {
        Self {
            length: 3.5,
            width: 1.8,
        }
    }
}

impl VehicleShape {
    pub fn validate(&self) -> Result<()> {
        if self.length > 0.0 && self.width > 0.0 {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(format!(
                "vehicle shape {}x{} must be positive",
                self.length, self.width
            )))
        }
    }

    fn half_diagonal(&self) -> f64 {
        0.5 * self.length.hypot(self.width)
    }

    /// Corners of the body rectangle at `(x, y, theta)`, counterclockwise.
    pub fn corners(&self, x: f64, y: f64, theta: f64) -> [[f64; 2]; 4] {
        let (s, c) = theta.sin_cos();
        let (hl, hw) = (0.5 * self.length, 0.5 * self.width);
        [(-hl, -hw), (hl, -hw), (hl, hw), (-hl, hw)].map(|(dx, dy)| [x + c * dx - s * dy, y + s * dx + c * dy])
    }
}

/// Convex polygon with counterclockwise vertices. Degenerate polygons (a
/// point or a segment) are allowed and handled by [`polygons_intersect`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyPolygon {
    pub vertices: Vec<[f64; 2]>,
}

impl OccupancyPolygon {
    pub fn new(vertices: Vec<[f64; 2]>) -> Self {
        Self { vertices }
    }

    /// `max { dir . p | p in polygon }`.
    pub fn support(&self, dir: [f64; 2]) -> f64 {
        self.vertices
            .iter()
            .map(|p| p[0] * dir[0] + p[1] * dir[1])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        let n = self.vertices.len();
        match n {
            0 => false,
            1 => dist2(self.vertices[0], p).sqrt() <= tol,
            _ => (0..n).all(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                let len = dist2(a, b).sqrt();
                if len == 0.0 {
                    return true;
                }
                // left of every directed edge
                cross(sub(b, a), sub(p, a)) / len >= -tol
            }) && (n > 2 || segment_distance(self.vertices[0], self.vertices[1], p) <= tol),
        }
    }

    pub fn y_extent(&self) -> Interval {
        Interval {
            lb: -self.support([0.0, -1.0]),
            ub: self.support([0.0, 1.0]),
        }
    }
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = sub(a, b);
    d[0] * d[0] + d[1] * d[1]
}

fn segment_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let ab = sub(b, a);
    let l2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if l2 == 0.0 {
        0.0
    } else {
        ((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / l2
    }
    .clamp(0.0, 1.0);
    dist2([a[0] + t * ab[0], a[1] + t * ab[1]], p).sqrt()
}

/// The eight support directions, counterclockwise from +x.
const DIRECTIONS: [[f64; 2]; 8] = [
    [1.0, 0.0],
    [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
    [0.0, 1.0],
    [-FRAC_1_SQRT_2, FRAC_1_SQRT_2],
    [-1.0, 0.0],
    [-FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
    [0.0, -1.0],
    [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
];

/// `max (L/2)|cos(psi)| + (W/2)|sin(psi)|` over `psi` in `[lo, hi]`.
fn body_support(shape: &VehicleShape, lo: f64, hi: f64) -> f64 {
    let (hl, hw) = (0.5 * shape.length, 0.5 * shape.width);
    let g = |psi: f64| hl * psi.cos().abs() + hw * psi.sin().abs();
    let mut best = g(lo).max(g(hi));
    // interior maxima at +-atan(W/L) + k*pi
    let peak = hw.atan2(hl);
    for offset in [peak, -peak] {
        let k = ((lo - offset) / PI).ceil();
        if offset + k * PI <= hi {
            best = best.max(hl.hypot(hw));
        }
    }
    best
}

/// Octagon enclosing the body footprint for every position in `pos` and
/// heading in `theta`.
pub fn occupancy(pos: &IntervalBox, theta: Interval, shape: &VehicleShape) -> Result<OccupancyPolygon> {
    if pos.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: pos.dim(),
        });
    }
    if !(theta.width() < FRAC_PI_2) {
        return Err(Error::HeadingRangeTooWide { width: theta.width() });
    }
    let supports = DIRECTIONS.map(|[dx, dy]| {
        let phi = dy.atan2(dx);
        position_support(pos, [dx, dy]) + body_support(shape, phi - theta.ub, phi - theta.lb)
    });
    Ok(octagon_from_supports(&supports))
}

/// Heading-free octagon: the body can point anywhere, so each direction gets
/// the half diagonal. Used when the heading range is too wide.
pub fn occupancy_any_heading(pos: &IntervalBox, shape: &VehicleShape) -> Result<OccupancyPolygon> {
    if pos.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: pos.dim(),
        });
    }
    let supports = DIRECTIONS.map(|d| position_support(pos, d) + shape.half_diagonal());
    Ok(octagon_from_supports(&supports))
}

fn position_support(pos: &IntervalBox, d: [f64; 2]) -> f64 {
    let (c, r) = (pos.centers(), pos.radii());
    d[0] * c[0] + d[1] * c[1] + r[0] * d[0].abs() + r[1] * d[1].abs()
}

fn octagon_from_supports(s: &[f64; 8]) -> OccupancyPolygon {
    let (xmin, xmax, ymin, ymax) = (-s[4], s[0], -s[6], s[2]);
    let mut poly = vec![[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]];
    for k in [1, 3, 5, 7] {
        poly = clip(&poly, DIRECTIONS[k], s[k]);
    }
    OccupancyPolygon::new(dedup(poly))
}

/// Sutherland-Hodgman clip of a convex polygon against `n . p <= d`.
fn clip(poly: &[[f64; 2]], n: [f64; 2], d: f64) -> Vec<[f64; 2]> {
    // points within eps of the line count as inside, so rounding cannot
    // empty a degenerate polygon
    let eps = 1e-12 * (1.0 + d.abs());
    let val = |p: [f64; 2]| n[0] * p[0] + n[1] * p[1] - d;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let (va, vb) = (val(a), val(b));
        if va <= eps {
            out.push(a);
        }
        if (va < -eps && vb > eps) || (va > eps && vb < -eps) {
            let t = va / (va - vb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

fn dedup(poly: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    const TOL: f64 = 1e-12;
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(poly.len());
    for p in poly {
        if out.last().is_none_or(|q| dist2(*q, p) > TOL * TOL) {
            out.push(p);
        }
    }
    while out.len() > 1 && dist2(out[0], *out.last().unwrap()) <= TOL * TOL {
        out.pop();
    }
    out
}

fn separating_axes(p: &OccupancyPolygon, axes: &mut Vec<[f64; 2]>) {
    let n = p.vertices.len();
    if n < 2 {
        return;
    }
    let edges = if n == 2 { 1 } else { n };
    for i in 0..edges {
        let e = sub(p.vertices[(i + 1) % n], p.vertices[i]);
        if e[0] == 0.0 && e[1] == 0.0 {
            continue;
        }
        axes.push([-e[1], e[0]]);
        if n == 2 {
            axes.push(e);
        }
    }
}

fn project(p: &OccupancyPolygon, axis: [f64; 2]) -> (f64, f64) {
    p.vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        let d = v[0] * axis[0] + v[1] * axis[1];
        (lo.min(d), hi.max(d))
    })
}

/// Separating-axis test on closed convex polygons: touching counts as
/// intersecting.
pub fn polygons_intersect(p: &OccupancyPolygon, q: &OccupancyPolygon) -> Result<bool> {
    for poly in [p, q] {
        if poly.vertices.is_empty() {
            return Err(Error::DegeneratePolygon { vertices: 0 });
        }
    }
    let mut axes = Vec::with_capacity(p.vertices.len() + q.vertices.len() + 2);
    separating_axes(p, &mut axes);
    separating_axes(q, &mut axes);
    if axes.is_empty() {
        axes.extend([[1.0, 0.0], [0.0, 1.0]]);
    }
    for axis in axes {
        let (p_lo, p_hi) = project(p, axis);
        let (q_lo, q_hi) = project(q, axis);
        if p_hi < q_lo || q_hi < p_lo {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One S1 constraint, either on the state set or on the occupancy polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum S1Constraint {
    /// `normal . p <= bound` for every point of the occupancy polygon.
    Occupancy { normal: [f64; 2], bound: f64 },
    /// `row . x <= bound` for every state in the deduced set.
    State { row: [f64; STATE_DIM], bound: f64 },
}

/// Safety standards applied to every step of a verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SafetyStandards {
    pub s1: Vec<S1Constraint>,
    pub s2: bool,
    pub shape: VehicleShape,
}

impl Default for SafetyStandards {
    fn default() -> Self {
        Self::lane_bounds(-2.5, 2.5)
    }
}

impl SafetyStandards {
    /// Occupancy must stay within `lower <= y <= upper`.
    pub fn lane_bounds(lower: f64, upper: f64) -> Self {
        Self {
            s1: vec![
                S1Constraint::Occupancy {
                    normal: [0.0, 1.0],
                    bound: upper,
                },
                S1Constraint::Occupancy {
                    normal: [0.0, -1.0],
                    bound: -lower,
                },
            ],
            s2: true,
            shape: VehicleShape::default(),
        }
    }

    fn state_halfspaces(&self) -> Option<HalfspaceSet> {
        let (c, d): (Vec<Vec<f64>>, Vec<f64>) = self
            .s1
            .iter()
            .filter_map(|s| match s {
                S1Constraint::State { row, bound } => Some((row.to_vec(), *bound)),
                _ => None,
            })
            .unzip();
        HalfspaceSet::new(c, d).ok()
    }
}

/// Occupancy of a state box, falling back to the heading-free octagon when
/// the heading range is too wide for the tight construction.
pub fn state_occupancy(state: &IntervalBox, shape: &VehicleShape) -> Result<OccupancyPolygon> {
    let pos = IntervalBox::new(state.centers()[..2].to_vec(), state.radii()[..2].to_vec())?;
    match occupancy(&pos, state.interval(2), shape) {
        Err(Error::HeadingRangeTooWide { .. }) => occupancy_any_heading(&pos, shape),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSafety {
    /// S1 verdict per vehicle.
    pub s1: Vec<bool>,
    /// S2 verdict for the ego against each background vehicle.
    pub s2: Vec<bool>,
    pub safe: bool,
    /// Occupancy octagon per vehicle.
    pub occupancy: Vec<OccupancyPolygon>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyVerdict {
    pub steps: Vec<StepSafety>,
    pub safe: bool,
}

impl SafetyVerdict {
    pub fn step_flags(&self) -> Vec<bool> {
        self.steps.iter().map(|s| s.safe).collect()
    }

    /// First unsafe step, 1-based.
    pub fn first_unsafe_step(&self) -> Option<usize> {
        self.steps.iter().position(|s| !s.safe).map(|k| k + 1)
    }
}

/// Applies S1 to every vehicle and S2 between the ego (trace 0) and every
/// other vehicle at each deduced step. An empty horizon is safe.
pub fn check_system_safety(traces: &[ReachTrace], standards: &SafetyStandards) -> Result<SafetyVerdict> {
    let horizon = traces.iter().map(|t| t.len()).min().unwrap_or(0);
    let state_set = standards.state_halfspaces();
    let mut steps = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let mut occupancy = Vec::with_capacity(traces.len());
        let mut s1 = Vec::with_capacity(traces.len());
        for t in traces {
            let b = &t.steps[k];
            let poly = state_occupancy(b, &standards.shape)?;
            let mut ok = standards.s1.iter().all(|c| match c {
                S1Constraint::Occupancy { normal, bound } => poly.support(*normal) <= *bound,
                S1Constraint::State { .. } => true,
            });
            if let Some(hs) = &state_set {
                ok &= check_s1_state(&box_to_zonotope(b), hs)?;
            }
            s1.push(ok);
            occupancy.push(poly);
        }
        let mut s2 = Vec::new();
        if standards.s2 {
            for other in occupancy.iter().skip(1) {
                s2.push(!polygons_intersect(&occupancy[0], other)?);
            }
        }
        let safe = s1.iter().all(|&b| b) && s2.iter().all(|&b| b);
        steps.push(StepSafety {
            s1,
            s2,
            safe,
            occupancy,
        });
    }
    let safe = steps.iter().all(|s| s.safe);
    Ok(SafetyVerdict { steps, safe })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lane_box(y: f64, ry: f64) -> Zonotope {
        box_to_zonotope(&IntervalBox::new(vec![3.0, y, 0.0, 5.0, 0.0, 0.0], vec![0.5, ry, 0.01, 0.3, 0.05, 0.01]).unwrap())
    }

    fn y_upper(bound: f64) -> HalfspaceSet {
        HalfspaceSet::new(vec![vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]], vec![bound]).unwrap()
    }

    #[test]
    fn s1_state_examples() {
        let x = lane_box(0.0, 0.5);
        assert!(check_s1_state(&x, &y_upper(2.5)).unwrap());
        assert!(!check_s1_state(&x, &y_upper(0.4)).unwrap());
        let row = vec![0.3, -1.0, 2.0, 0.1, 0.0, 5.0];
        let d = support(&x, &row).unwrap();
        let exact = HalfspaceSet::new(vec![row], vec![d]).unwrap();
        assert!(check_s1_state(&x, &exact).unwrap());
        assert!(check_s1_state(&box_to_zonotope(&IntervalBox::point(vec![0.0; 2]).unwrap()), &y_upper(1.0)).is_err());
    }

    #[test]
    fn s1_matches_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let r: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..2.0)).collect();
            let b = IntervalBox::new(c, r).unwrap();
            let rows: Vec<Vec<f64>> = (0..3).map(|_| (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let d: Vec<f64> = (0..3).map(|_| rng.gen_range(-5.0..10.0)).collect();
            let hs = HalfspaceSet::new(rows.clone(), d.clone()).unwrap();
            let brute = (0..64u32).all(|mask| {
                let v: Vec<f64> = (0..6)
                    .map(|i| if mask >> i & 1 == 1 { b.ub(i) } else { b.lb(i) })
                    .collect();
                rows.iter()
                    .zip(&d)
                    .all(|(row, di)| row.iter().zip(&v).map(|(a, x)| a * x).sum::<f64>() <= *di + 1e-9)
            });
            assert_eq!(check_s1_state(&box_to_zonotope(&b), &hs).unwrap(), brute);
        }
    }

    #[test]
    fn octagon_degenerates_to_rectangle() {
        let pos = IntervalBox::new(vec![0.0, 0.0], vec![0.5, 0.25]).unwrap();
        let poly = occupancy(&pos, Interval::point(0.0), &VehicleShape::default()).unwrap();
        assert!((poly.support([1.0, 0.0]) - 2.25).abs() < 1e-12);
        assert!((poly.support([0.0, 1.0]) - 1.15).abs() < 1e-12);
        assert!((poly.support([-1.0, 0.0]) - 2.25).abs() < 1e-12);
        let diag = poly.support([FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        assert!((diag - (1.75 + 0.9 + 0.5 + 0.25) / 2f64.sqrt()).abs() < 1e-9);
        assert!((diag - 2.404).abs() < 1e-3);
        assert_eq!(poly.vertices.len(), 4);
    }

    #[test]
    fn point_occupancy() {
        let pos = IntervalBox::point(vec![1.0, 2.0]).unwrap();
        let shape = VehicleShape {
            length: 0.0,
            width: 0.0,
        };
        let poly = occupancy(&pos, Interval::point(0.3), &shape).unwrap();
        assert_eq!(poly.vertices.len(), 1);
        assert!((poly.vertices[0][0] - 1.0).abs() < 1e-12 && (poly.vertices[0][1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn wide_heading_rejected() {
        let pos = IntervalBox::point(vec![0.0, 0.0]).unwrap();
        let r = occupancy(&pos, Interval::new(0.0, 2.0).unwrap(), &VehicleShape::default());
        assert!(matches!(r, Err(Error::HeadingRangeTooWide { .. })));
    }

    #[test]
    fn occupancy_contains_rotated_corners() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let shape = VehicleShape::default();
        for _ in 0..50 {
            let pos = IntervalBox::new(
                vec![rng.gen_range(-10.0..10.0), rng.gen_range(-3.0..3.0)],
                vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..0.5)],
            )
            .unwrap();
            let th = Interval::from_center_radius(rng.gen_range(-3.0..3.0), rng.gen_range(0.0..0.7));
            let poly = occupancy(&pos, th, &shape).unwrap();
            for _ in 0..1000 {
                let x = rng.gen_range(pos.lb(0)..=pos.ub(0));
                let y = rng.gen_range(pos.lb(1)..=pos.ub(1));
                let t = rng.gen_range(th.lb..=th.ub);
                for p in shape.corners(x, y, t) {
                    assert!(poly.contains(p, 1e-9));
                }
            }
        }
    }

    #[test]
    fn larger_position_box_never_shrinks() {
        let shape = VehicleShape::default();
        let th = Interval::new(-0.05, 0.1).unwrap();
        let small = IntervalBox::new(vec![1.0, 0.5], vec![0.3, 0.2]).unwrap();
        let big = small.with_radii_scaled(1.5);
        let (a, b) = (occupancy(&small, th, &shape).unwrap(), occupancy(&big, th, &shape).unwrap());
        for d in DIRECTIONS {
            assert!(b.support(d) >= a.support(d));
        }
    }

    fn square(x: f64, y: f64, s: f64) -> OccupancyPolygon {
        OccupancyPolygon::new(vec![[x, y], [x + s, y], [x + s, y + s], [x, y + s]])
    }

    #[test]
    fn sat_examples() {
        let a = square(0.0, 0.0, 1.0);
        assert!(polygons_intersect(&a, &a).unwrap());
        assert!(!polygons_intersect(&a, &square(10.0, 10.0, 1.0)).unwrap());
        assert!(polygons_intersect(&a, &square(1.0, 0.0, 1.0)).unwrap());
        assert!(polygons_intersect(&a, &OccupancyPolygon::new(vec![[0.5, 0.5]])).unwrap());
        assert!(!polygons_intersect(&a, &OccupancyPolygon::new(vec![[1.5, 0.5]])).unwrap());
        let seg = OccupancyPolygon::new(vec![[-1.0, 2.0], [3.0, 2.0]]);
        assert!(!polygons_intersect(&a, &seg).unwrap());
        assert!(polygons_intersect(&a, &OccupancyPolygon::new(vec![[-1.0, 1.0], [3.0, 1.0]])).unwrap());
        assert!(matches!(
            polygons_intersect(&a, &OccupancyPolygon::new(vec![])),
            Err(Error::DegeneratePolygon { .. })
        ));
    }

    #[test]
    fn system_safety_lane_bounds() {
        use crate::reach::ReachTrace;
        let inside = IntervalBox::new(vec![3.0, 0.0, 0.0, 5.0, 0.0, 0.0], vec![0.5, 0.3, 0.01, 0.3, 0.05, 0.01]).unwrap();
        let outside = IntervalBox::new(vec![3.0, 1.5, 0.0, 5.0, 0.0, 0.0], vec![0.5, 0.3, 0.01, 0.3, 0.05, 0.01]).unwrap();
        let trace = |boxes: Vec<IntervalBox>| ReachTrace {
            controls: vec![IntervalBox::point(vec![0.0, 0.0]).unwrap(); boxes.len()],
            step_seconds: vec![0.0; boxes.len()],
            steps: boxes,
        };
        let std = SafetyStandards::default();
        let v = check_system_safety(&[trace(vec![inside.clone(), inside.clone()])], &std).unwrap();
        assert!(v.safe);
        let v = check_system_safety(&[trace(vec![inside.clone(), outside])], &std).unwrap();
        assert!(!v.safe);
        assert_eq!(v.first_unsafe_step(), Some(2));
        let v = check_system_safety(&[trace(vec![])], &std).unwrap();
        assert!(v.safe && v.steps.is_empty());

        // ego and a background vehicle in the same spot collide
        let v = check_system_safety(&[trace(vec![inside.clone()]), trace(vec![inside])], &std).unwrap();
        assert_eq!(v.steps[0].s2, vec![false]);
        assert!(!v.safe);
    }
}
