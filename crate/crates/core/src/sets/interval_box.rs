use serde::{Deserialize, Serialize};

use super::Interval;
use crate::error::{Error, Result};

/// Axis-aligned box stored as per-dimension centers and radii.
///
/// Bounds are derived: `lb_i = centers[i] - radii[i]`, `ub_i = centers[i] + radii[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox {
    centers: Vec<f64>,
    radii: Vec<f64>,
}

impl IntervalBox {
    pub fn new(centers: Vec<f64>, radii: Vec<f64>) -> Result<Self> {
        if centers.len() != radii.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                got: radii.len(),
            });
        }
        if let Some(i) = radii.iter().position(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidSet(format!(
                "radius {} in dimension {i} is not a finite non-negative value",
                radii[i]
            )));
        }
        if let Some(i) = centers.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFiniteInput { index: i });
        }
        Ok(Self { centers, radii })
    }

    pub fn point(centers: Vec<f64>) -> Result<Self> {
        let radii = vec![0.0; centers.len()];
        Self::new(centers, radii)
    }

    /// Box spanning `[lb_i, ub_i]` in every dimension.
    pub fn from_bounds(lb: &[f64], ub: &[f64]) -> Result<Self> {
        if lb.len() != ub.len() {
            return Err(Error::DimensionMismatch {
                expected: lb.len(),
                got: ub.len(),
            });
        }
        let centers = lb.iter().zip(ub).map(|(l, u)| 0.5 * (l + u)).collect();
        let radii = lb.iter().zip(ub).map(|(l, u)| 0.5 * (u - l)).collect();
        Self::new(centers, radii)
    }

    pub fn from_intervals(xs: &[Interval]) -> Result<Self> {
        let lb: Vec<f64> = xs.iter().map(|x| x.lb).collect();
        let ub: Vec<f64> = xs.iter().map(|x| x.ub).collect();
        Self::from_bounds(&lb, &ub)
    }

    pub fn dim(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn lb(&self, i: usize) -> f64 {
        self.centers[i] - self.radii[i]
    }

    pub fn ub(&self, i: usize) -> f64 {
        self.centers[i] + self.radii[i]
    }

    pub fn interval(&self, i: usize) -> Interval {
        Interval {
            lb: self.lb(i),
            ub: self.ub(i),
        }
    }

    pub fn intervals(&self) -> Vec<Interval> {
        (0..self.dim()).map(|i| self.interval(i)).collect()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .enumerate()
                .all(|(i, &v)| self.lb(i) - tol <= v && v <= self.ub(i) + tol)
    }

    /// True if `other` lies inside `self` up to `tol` in every bound.
    pub fn contains_box(&self, other: &IntervalBox, tol: f64) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|i| self.lb(i) - tol <= other.lb(i) && other.ub(i) <= self.ub(i) + tol)
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &IntervalBox) -> Result<IntervalBox> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let xs: Vec<Interval> = (0..self.dim())
            .map(|i| self.interval(i).hull(&other.interval(i)))
            .collect();
        Self::from_intervals(&xs)
    }

    /// Smallest box containing all the points.
    pub fn hull_of_points<'a>(mut points: impl Iterator<Item = &'a [f64]>) -> Option<IntervalBox> {
        let first = points.next()?;
        let mut lb = first.to_vec();
        let mut ub = first.to_vec();
        for p in points {
            for (i, &v) in p.iter().enumerate() {
                lb[i] = lb[i].min(v);
                ub[i] = ub[i].max(v);
            }
        }
        Self::from_bounds(&lb, &ub).ok()
    }

    pub fn with_radii_scaled(&self, k: f64) -> IntervalBox {
        IntervalBox {
            centers: self.centers.clone(),
            radii: self.radii.iter().map(|r| r * k).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_bounds() {
        let b = IntervalBox::new(vec![1.0, -2.0], vec![0.5, 0.25]).unwrap();
        assert_eq!((b.lb(0), b.ub(0)), (0.5, 1.5));
        assert_eq!((b.lb(1), b.ub(1)), (-2.25, -1.75));
    }

    #[test]
    fn rejects_negative_radius_and_mismatch() {
        assert!(IntervalBox::new(vec![0.0], vec![-1.0]).is_err());
        assert!(IntervalBox::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(IntervalBox::new(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn point_hull() {
        let pts = [vec![0.0, 1.0], vec![2.0, -1.0], vec![1.0, 0.0]];
        let h = IntervalBox::hull_of_points(pts.iter().map(|p| p.as_slice())).unwrap();
        assert_eq!(h.centers(), &[1.0, 0.0]);
        assert_eq!(h.radii(), &[1.0, 1.0]);
    }
}
