use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seeded, splittable random stream. Identical seeds give identical streams.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream keyed by `stream`; does not advance `self`.
    pub fn split(&self, stream: u64) -> Rng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(stream.wrapping_add(1));
        Rng {
            seed: self.seed ^ stream.rotate_left(17),
            inner,
        }
    }

    pub fn uniform01(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Gaussian {
        mean: f64,
        std: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    /// `loc + |N(0, sigma)|`.
    HalfNormal {
        loc: f64,
        sigma: f64,
    },
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Distribution::Gaussian { std, .. } if !(std >= 0.0) => {
                Err(Error::invalid("std", format!("must be >= 0, got {std}")))
            }
            Distribution::HalfNormal { sigma, .. } if !(sigma >= 0.0) => {
                Err(Error::invalid("sigma", format!("must be >= 0, got {sigma}")))
            }
            Distribution::Uniform { low, high } if !(low <= high) => {
                Err(Error::invalid("uniform", format!("low {low} exceeds high {high}")))
            }
            _ => Ok(()),
        }
    }
}

pub fn sample(rng: &mut Rng, dist: Distribution) -> Result<f64> {
    dist.validate()?;
    Ok(match dist {
        Distribution::Gaussian { mean, std } => {
            if std == 0.0 {
                mean
            } else {
                mean + std * rng.standard_normal()
            }
        }
        Distribution::Uniform { low, high } => low + (high - low) * rng.uniform01(),
        Distribution::HalfNormal { loc, sigma } => {
            if sigma == 0.0 {
                loc
            } else {
                loc + (sigma * rng.standard_normal()).abs()
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn degenerate_gaussian() {
        let mut rng = Rng::new(1);
        let d = Distribution::Gaussian { mean: 5.0, std: 0.0 };
        assert_eq!(sample(&mut rng, d).unwrap(), 5.0);
    }

    #[test]
    fn half_normal_respects_location() {
        let mut rng = Rng::new(2);
        let d = Distribution::HalfNormal { loc: 0.1, sigma: 0.3 };
        assert!((0..10_000).all(|_| sample(&mut rng, d).unwrap() >= 0.1));
    }

    #[test]
    fn negative_sigma_rejected() {
        let mut rng = Rng::new(3);
        assert!(sample(&mut rng, Distribution::Gaussian { mean: 0.0, std: -1.0 }).is_err());
        assert!(sample(&mut rng, Distribution::HalfNormal { loc: 0.0, sigma: -0.1 }).is_err());
        assert!(sample(&mut rng, Distribution::Uniform { low: 1.0, high: 0.0 }).is_err());
    }

    #[test]
    fn uniform_phase_moments() {
        let mut rng = Rng::new(4);
        let d = Distribution::Uniform {
            low: 0.0,
            high: 2.0 * PI,
        };
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| sample(&mut rng, d).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let expected_var = (2.0 * PI).powi(2) / 12.0;
        assert!((mean - PI).abs() < 0.01, "mean {mean}");
        assert!(((var - expected_var) / expected_var).abs() < 0.01, "var {var}");
    }

    #[test]
    fn reproducible_and_split_streams_differ() {
        let mut a = Rng::new(9);
        let mut b = Rng::new(9);
        let xa: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        assert_eq!(xa, xb);
        let mut c = a.split(0);
        let mut d = a.split(1);
        assert_ne!(c.next_u64(), d.next_u64());
        assert_eq!(a.split(5).next_u64(), Rng::new(9).split(5).next_u64());
    }
}
