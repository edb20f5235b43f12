use serde::{Deserialize, Serialize};

use super::IntervalBox;
use crate::error::{Error, Result};

/// `{ center + sum_j alpha_j * generators[j] | alpha_j in [-1, 1] }`.
///
/// Generators are stored as columns, each of length `dim()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zonotope {
    center: Vec<f64>,
    generators: Vec<Vec<f64>>,
}

impl Zonotope {
    pub fn new(center: Vec<f64>, generators: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| g.len() != center.len()) {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                got: g.len(),
            });
        }
        Ok(Self { center, generators })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    /// Point of the set for generator coefficients `alpha`.
    pub fn point(&self, alpha: &[f64]) -> Vec<f64> {
        let mut x = self.center.clone();
        for (g, a) in self.generators.iter().zip(alpha) {
            for (xi, gi) in x.iter_mut().zip(g) {
                *xi += a * gi;
            }
        }
        x
    }
}

/// Diagonal zonotope with one generator per dimension.
pub fn box_to_zonotope(b: &IntervalBox) -> Zonotope {
    let k = b.dim();
    let generators = (0..k)
        .map(|j| {
            let mut g = vec![0.0; k];
            g[j] = b.radii()[j];
            g
        })
        .collect();
    Zonotope {
        center: b.centers().to_vec(),
        generators,
    }
}

/// Interval hull of a zonotope.
pub fn zonotope_to_box(z: &Zonotope) -> IntervalBox {
    let mut radii = vec![0.0; z.dim()];
    for g in &z.generators {
        for (r, gi) in radii.iter_mut().zip(g) {
            *r += gi.abs();
        }
    }
    IntervalBox::new(z.center.clone(), radii).expect("hull radii are non-negative")
}

/// Support function `max { dir . x | x in z }`.
pub fn support(z: &Zonotope, dir: &[f64]) -> Result<f64> {
    if dir.len() != z.dim() {
        return Err(Error::DimensionMismatch {
            expected: z.dim(),
            got: dir.len(),
        });
    }
    let dot = |a: &[f64]| a.iter().zip(dir).map(|(x, d)| x * d).sum::<f64>();
    Ok(dot(&z.center) + z.generators.iter().map(|g| dot(g).abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn box_to_zonotope_is_diagonal() {
        let b = IntervalBox::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let z = box_to_zonotope(&b);
        assert_eq!(z.center(), &[0.0, 0.0]);
        assert_eq!(z.generators(), &[vec![1.0, 0.0], vec![0.0, 2.0]]);
    }

    #[test]
    fn point_box_gives_zero_generators() {
        let b = IntervalBox::point(vec![3.0, 4.0, 5.0]).unwrap();
        let z = box_to_zonotope(&b);
        assert!(z.generators().iter().flatten().all(|&g| g == 0.0));
        assert!(zonotope_to_box(&z).radii().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn round_trip_bounds() {
        let b = IntervalBox::new(vec![1.0, -2.0], vec![0.5, 0.25]).unwrap();
        let back = zonotope_to_box(&box_to_zonotope(&b));
        assert_eq!((back.lb(0), back.ub(0)), (0.5, 1.5));
        assert_eq!((back.lb(1), back.ub(1)), (-2.25, -1.75));
    }

    #[test]
    fn hull_sums_absolute_rows() {
        let z = Zonotope::new(vec![0.0, 0.0], vec![vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let b = zonotope_to_box(&z);
        assert_eq!(b.centers(), &[0.0, 0.0]);
        assert_eq!(b.radii(), &[2.0, 2.0]);
    }

    #[test]
    fn support_examples() {
        let unit = box_to_zonotope(&IntervalBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap());
        assert_eq!(support(&unit, &[1.0, 0.0]).unwrap(), 1.0);

        let z = Zonotope::new(vec![0.0, 0.0], vec![vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        // vertex enumeration over alpha in {-1, 1}^2
        let best = [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)]
            .iter()
            .map(|&(a, b)| z.point(&[a, b])[0])
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best, 2.0);
        assert_eq!(support(&z, &[1.0, 0.0]).unwrap(), best);
        assert_eq!(support(&z, &[0.0, 0.0]).unwrap(), 0.0);
        assert!(support(&z, &[1.0]).is_err());
    }

    #[test]
    fn support_bounds_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let k = rng.gen_range(1..7);
            let g = rng.gen_range(0..9);
            let center: Vec<f64> = (0..k).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let gens: Vec<Vec<f64>> = (0..g)
                .map(|_| (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let z = Zonotope::new(center, gens).unwrap();
            let dir: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = support(&z, &dir).unwrap();
            for _ in 0..10_000 {
                let alpha: Vec<f64> = (0..g).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                let x = z.point(&alpha);
                let d: f64 = x.iter().zip(&dir).map(|(a, b)| a * b).sum();
                assert!(d <= s + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn box_round_trip_exact(
            c in proptest::collection::vec(-1e3f64..1e3, 1..8),
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r: Vec<f64> = c.iter().map(|_| rng.gen_range(0.0..10.0)).collect();
            let b = IntervalBox::new(c, r).unwrap();
            let back = zonotope_to_box(&box_to_zonotope(&b));
            for i in 0..b.dim() {
                prop_assert!((back.centers()[i] - b.centers()[i]).abs() <= 1e-12);
                prop_assert!((back.radii()[i] - b.radii()[i]).abs() <= 1e-12);
            }
        }
    }
}
