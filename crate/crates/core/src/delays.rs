//! Turning a [`DelayModel`] into a concrete delay matrix.

use rand::distr::Open01;
use rand::Rng as _;

use crate::error::Result;
use crate::matrix::SquareMatrix;
use crate::rng::stream_rng;
use crate::scenario::DelayModel;

/// Location and scale of the per-pair logistic delay distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticDelay {
    pub location: f64,
    pub scale: f64,
}

impl LogisticDelay {
    /// Parameters of logistic gossip spreading among `n` miners whose
    /// arrival time has the given mean.
    ///
    /// With infection rate β the informed fraction follows a logistic curve
    /// with location `ln(n-1)/(βn)` and scale `1/(βn)`; choosing β so the
    /// location equals `mean` gives scale `mean / ln(n-1)`.
    pub fn from_gossip(mean: f64, n: usize) -> Self {
        Self {
            location: mean,
            scale: mean / ((n - 1) as f64).ln(),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if self.scale == 0.0 {
            return if t >= self.location { 1.0 } else { 0.0 };
        }
        1.0 / (1.0 + (-(t - self.location) / self.scale).exp())
    }

    /// Inverse CDF at `u` in (0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        self.location + self.scale * (u / (1.0 - u)).ln()
    }
}

/// Realizes an N×N delay matrix. `rng_seed` is only consulted by random models.
///
/// Random draws run over rows then columns in ascending order, one uniform
/// per ordered pair (per unordered pair `i < j` when symmetric). Negative
/// draws are clamped to zero.
pub fn realize_delays(model: &DelayModel, n: usize, rng_seed: u64) -> Result<SquareMatrix> {
    model.validate(n)?;
    let matrix = match model {
        DelayModel::FixedUniform { d } => SquareMatrix::uniform_off_diagonal(n, *d),
        DelayModel::ExplicitMatrix { matrix } => matrix.clone(),
        DelayModel::LogisticRandom {
            mean,
            symmetric,
            scale,
            ..
        } => {
            let mut dist = LogisticDelay::from_gossip(*mean, n.max(3));
            if let Some(s) = scale {
                dist.scale = *s;
            }
            let mut rng = stream_rng(rng_seed, 0);
            let mut m = SquareMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    if i == j || (*symmetric && j < i) {
                        continue;
                    }
                    let u: f64 = rng.sample(Open01);
                    let t = dist.quantile(u).max(0.0);
                    m[(i, j)] = t;
                    if *symmetric {
                        m[(j, i)] = t;
                    }
                }
            }
            m
        }
        DelayModel::GroupedFixed {
            groups,
            group_delays,
        } => SquareMatrix::from_fn(n, |i, j| {
            if i == j {
                0.0
            } else {
                group_delays[(groups[i], groups[j])]
            }
        }),
    };
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic(symmetric: bool) -> DelayModel {
        DelayModel::LogisticRandom {
            mean: 6.0,
            symmetric,
            seed: 0,
            scale: None,
        }
    }

    #[test]
    fn fixed_uniform() {
        let m = realize_delays(&DelayModel::FixedUniform { d: 6.0 }, 3, 0).unwrap();
        assert_eq!(
            m.to_rows(),
            vec![
                vec![0.0, 6.0, 6.0],
                vec![6.0, 0.0, 6.0],
                vec![6.0, 6.0, 0.0]
            ]
        );
    }

    #[test]
    fn logistic_is_deterministic_per_seed() {
        let a = realize_delays(&logistic(false), 50, 9).unwrap();
        let b = realize_delays(&logistic(false), 50, 9).unwrap();
        let c = realize_delays(&logistic(false), 50, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(!a.is_symmetric());
        assert!((0..50).all(|i| a[(i, i)] == 0.0));
    }

    #[test]
    fn symmetric_flag_gives_exact_symmetry() {
        let m = realize_delays(&logistic(true), 40, 3).unwrap();
        assert!(m.is_symmetric());
    }

    #[test]
    fn zero_scale_is_fixed() {
        let model = DelayModel::LogisticRandom {
            mean: 6.0,
            symmetric: false,
            seed: 0,
            scale: Some(0.0),
        };
        let m = realize_delays(&model, 5, 1).unwrap();
        assert_eq!(m.common_off_diagonal(), Some(6.0));
    }

    #[test]
    fn grouped() {
        let model = DelayModel::GroupedFixed {
            groups: vec![0, 0, 1],
            group_delays: SquareMatrix::from_rows(&[vec![3.0, 6.0], vec![6.0, 6.0]]).unwrap(),
        };
        let m = realize_delays(&model, 3, 0).unwrap();
        assert_eq!(m[(0, 1)], 3.0);
        assert_eq!(m[(1, 2)], 6.0);
        assert_eq!(m[(2, 2)], 0.0);
    }

    #[test]
    fn gossip_cdf_at_zero_is_one_over_n() {
        for n in [10usize, 100, 1000] {
            let d = LogisticDelay::from_gossip(6.0, n);
            assert!((d.cdf(0.0) - 1.0 / n as f64).abs() < 1e-12);
        }
    }
}
