use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::types::ln_factorial;

const MAX_SUPPORT: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TrPoissonSpec {
    lambda: f64,
    min: usize,
    max: usize,
}

/// Poisson(lambda) restricted to the integers `min..=max` and renormalised.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrPoissonSpec", into = "TrPoissonSpec")]
pub struct TrPoisson {
    lambda: f64,
    min: usize,
    max: usize,
    probs: Vec<f64>,
}

impl TryFrom<TrPoissonSpec> for TrPoisson {
    type Error = Error;

    fn try_from(s: TrPoissonSpec) -> Result<Self> {
        TrPoisson::new(s.lambda, s.min, s.max)
    }
}

impl From<TrPoisson> for TrPoissonSpec {
    fn from(t: TrPoisson) -> Self {
        Self {
            lambda: t.lambda,
            min: t.min,
            max: t.max,
        }
    }
}

impl TrPoisson {
    pub fn new(lambda: f64, min: usize, max: usize) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!(
                "Poisson rate must be positive, got {lambda}"
            )));
        }
        if max < min {
            return Err(invalid(format!("empty support [{min}, {max}]")));
        }
        if max - min >= MAX_SUPPORT {
            return Err(invalid("truncated Poisson support too wide"));
        }
        let logw: Vec<f64> = (min..=max)
            .map(|k| k as f64 * lambda.ln() - ln_factorial(k))
            .collect();
        let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        Ok(Self {
            lambda,
            min,
            max,
            probs: w.into_iter().map(|x| x / total).collect(),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn min(&self) -> usize {
        self.min
    }

    pub fn max(&self) -> usize {
        self.max
    }

    pub fn pmf(&self, k: usize) -> f64 {
        if k < self.min || k > self.max {
            0.0
        } else {
            self.probs[k - self.min]
        }
    }

    pub fn ln_pmf(&self, k: usize) -> f64 {
        self.pmf(k).ln()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return self.min + i;
            }
        }
        self.max
    }
}
