use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lb, ub]` with inclusion-isotone arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lb: f64,
    pub ub: f64,
}

impl Interval {
    /// Builds an interval, swapping nothing: `lb > ub` is rejected.
    pub fn new(lb: f64, ub: f64) -> Result<Self> {
        if !(lb <= ub) {
            return Err(Error::InvalidSet(format!("interval [{lb}, {ub}] has lb > ub")));
        }
        Ok(Self { lb, ub })
    }

    pub const fn point(x: f64) -> Self {
        Self { lb: x, ub: x }
    }

    pub fn from_center_radius(center: f64, radius: f64) -> Self {
        Self {
            lb: center - radius,
            ub: center + radius,
        }
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lb + self.ub)
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.ub - self.lb)
    }

    pub fn width(&self) -> f64 {
        self.ub - self.lb
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lb <= x && x <= self.ub
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    /// Largest absolute value in the interval.
    pub fn mag(&self) -> f64 {
        self.lb.abs().max(self.ub.abs())
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lb: self.lb.min(other.lb),
            ub: self.ub.max(other.ub),
        }
    }

    pub fn scale(self, k: f64) -> Interval {
        if k >= 0.0 {
            Interval {
                lb: self.lb * k,
                ub: self.ub * k,
            }
        } else {
            Interval {
                lb: self.ub * k,
                ub: self.lb * k,
            }
        }
    }

    pub fn recip(self) -> Result<Interval> {
        if self.contains_zero() {
            return Err(Error::DivisorContainsZero {
                lb: self.lb,
                ub: self.ub,
            });
        }
        Ok(Interval {
            lb: 1.0 / self.ub,
            ub: 1.0 / self.lb,
        })
    }

    pub fn checked_div(self, rhs: Interval) -> Result<Interval> {
        Ok(self * rhs.recip()?)
    }

    pub fn sqr(self) -> Interval {
        if self.lb >= 0.0 {
            Interval {
                lb: self.lb * self.lb,
                ub: self.ub * self.ub,
            }
        } else if self.ub <= 0.0 {
            Interval {
                lb: self.ub * self.ub,
                ub: self.lb * self.lb,
            }
        } else {
            Interval {
                lb: 0.0,
                ub: self.mag() * self.mag(),
            }
        }
    }

    /// Interval cosine. Interior extrema at multiples of pi are detected.
    pub fn cos(self) -> Interval {
        if self.width() >= TAU {
            return Interval { lb: -1.0, ub: 1.0 };
        }
        let (ca, cb) = (self.lb.cos(), self.ub.cos());
        let mut lb = ca.min(cb);
        let mut ub = ca.max(cb);
        // maxima at 2k*pi, minima at (2k+1)*pi
        if contains_periodic_point(self, 0.0) {
            ub = 1.0;
        }
        if contains_periodic_point(self, PI) {
            lb = -1.0;
        }
        Interval { lb, ub }
    }

    /// Interval sine. Interior extrema at pi/2 + k*pi are detected.
    pub fn sin(self) -> Interval {
        if self.width() >= TAU {
            return Interval { lb: -1.0, ub: 1.0 };
        }
        let (sa, sb) = (self.lb.sin(), self.ub.sin());
        let mut lb = sa.min(sb);
        let mut ub = sa.max(sb);
        if contains_periodic_point(self, FRAC_PI_2) {
            ub = 1.0;
        }
        if contains_periodic_point(self, -FRAC_PI_2) {
            lb = -1.0;
        }
        Interval { lb, ub }
    }
}

/// True if `offset + 2k*pi` lies in `x` for some integer `k`.
fn contains_periodic_point(x: Interval, offset: f64) -> bool {
    let k = ((x.lb - offset) / TAU).ceil();
    offset + k * TAU <= x.ub
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lb, self.ub)
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lb: self.lb + rhs.lb,
            ub: self.ub + rhs.ub,
        }
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, rhs: f64) -> Interval {
        Interval {
            lb: self.lb + rhs,
            ub: self.ub + rhs,
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lb: self.lb - rhs.ub,
            ub: self.ub - rhs.lb,
        }
    }
}

impl Sub<f64> for Interval {
    type Output = Interval;
    fn sub(self, rhs: f64) -> Interval {
        Interval {
            lb: self.lb - rhs,
            ub: self.ub - rhs,
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lb: -self.ub,
            ub: -self.lb,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let p = [
            self.lb * rhs.lb,
            self.lb * rhs.ub,
            self.ub * rhs.lb,
            self.ub * rhs.ub,
        ];
        Interval {
            lb: p.iter().copied().fold(f64::INFINITY, f64::min),
            ub: p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, rhs: f64) -> Interval {
        self.scale(rhs)
    }
}
