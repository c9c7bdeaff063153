//! Spherical models over interaction sequences and multisets, and brute-force
//! normalising constants, probabilities and entropies on small bounded spaces.

mod hollywood;
mod trpoisson;

use std::collections::HashMap;

use rand::Rng;

use crate::distances::{MetricLevel, MetricSpec, PathMetric};
use crate::error::{invalid, Error, Result};
use crate::types::{
    in_support, InteractionMultiset, InteractionSeq, Observation, Path, SpaceBounds,
};

pub use hollywood::{hollywood_sample, HollywoodParams};
pub use trpoisson::TrPoisson;

pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// Location (mode) and dispersion (gamma) of a spherical model, together with
/// the path metric and the bounded space it lives on.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<O> {
    pub mode: O,
    pub gamma: f64,
    pub inner: PathMetric,
    pub bounds: SpaceBounds,
}

pub type SisParams = ModelParams<InteractionSeq>;
pub type SimParams = ModelParams<InteractionMultiset>;

impl<O: Observation> ModelParams<O> {
    pub fn new(mode: O, gamma: f64, inner: PathMetric, bounds: SpaceBounds) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid(format!("dispersion must be positive, got {gamma}")));
        }
        if !in_support(&mode, &bounds) {
            return Err(invalid("mode lies outside the bounded space"));
        }
        Ok(Self {
            mode,
            gamma,
            inner,
            bounds,
        })
    }

    pub fn metric(&self) -> MetricSpec {
        MetricSpec::for_observation::<O>(self.inner)
    }

    pub fn distance_to_mode(&self, obs: &O) -> usize {
        obs.distance(&self.mode, self.inner)
    }
}

/// Unnormalised log-probability `-gamma * d(obs, mode)`.
pub fn log_kernel<O: Observation>(obs: &O, params: &ModelParams<O>) -> Result<f64> {
    if !in_support(obs, &params.bounds) {
        return Err(Error::OutOfSupport);
    }
    Ok(-params.gamma * params.distance_to_mode(obs) as f64)
}

/// All non-empty paths of length at most `K`, shortest first then
/// lexicographic.
pub fn enumerate_paths(bounds: &SpaceBounds) -> Vec<Path> {
    let mut out = Vec::new();
    for len in 1..=bounds.k {
        let mut cur = vec![0usize; len];
        'next: loop {
            out.push(Path::new(cur.clone()));
            let mut i = len;
            while i > 0 {
                i -= 1;
                cur[i] += 1;
                if cur[i] < bounds.v {
                    continue 'next;
                }
                cur[i] = 0;
            }
            break;
        }
    }
    out
}

fn binomial_f64(n: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i as f64) / (i as f64 + 1.0))
}

/// Number of observations of type `O` in the bounded space.
pub fn space_size<O: Observation>(bounds: &SpaceBounds) -> f64 {
    let paths: f64 = (1..=bounds.k)
        .map(|k| (bounds.v as f64).powi(k as i32))
        .sum();
    (1..=bounds.l)
        .map(|n| match O::LEVEL {
            MetricLevel::SequenceEdit => paths.powi(n as i32),
            MetricLevel::MultisetMatching => binomial_f64(paths + n as f64 - 1.0, n),
        })
        .sum()
}

/// Every observation of the bounded space. Multisets are enumerated once each,
/// in canonical form.
pub fn enumerate_space<O: Observation>(bounds: &SpaceBounds, cap: usize) -> Result<Vec<O>> {
    let size = space_size::<O>(bounds);
    if size > cap as f64 {
        return Err(Error::SpaceTooLarge { size, cap });
    }
    let paths = enumerate_paths(bounds);
    let p = paths.len();
    let ordered = O::LEVEL == MetricLevel::SequenceEdit;
    let mut out = Vec::with_capacity(size as usize);
    for n in 1..=bounds.l {
        let mut idx = vec![0usize; n];
        loop {
            out.push(O::from_paths(
                idx.iter().map(|&i| paths[i].clone()).collect(),
            ));
            // advance the odometer; multisets keep indices non-decreasing
            let mut pos = n;
            let mut done = true;
            while pos > 0 {
                pos -= 1;
                if idx[pos] + 1 < p {
                    idx[pos] += 1;
                    let reset = if ordered { 0 } else { idx[pos] };
                    for later in idx.iter_mut().skip(pos + 1) {
                        *later = reset;
                    }
                    done = false;
                    break;
                }
            }
            if done {
                break;
            }
        }
    }
    Ok(out)
}

/// An enumerated bounded space with cached pairwise distances, for exact
/// computations that are repeated at many (mode, gamma) values.
#[derive(Clone, Debug)]
pub struct EnumeratedSpace<O> {
    elements: Vec<O>,
    index: HashMap<O, usize>,
    inner: PathMetric,
    distances: Vec<u32>,
}

impl<O: Observation> EnumeratedSpace<O> {
    pub fn new(bounds: &SpaceBounds, inner: PathMetric, cap: usize) -> Result<Self> {
        let elements = enumerate_space::<O>(bounds, cap)?;
        let n = elements.len();
        if n > 5000 {
            return Err(Error::SpaceTooLarge {
                size: n as f64,
                cap: 5000,
            });
        }
        let index = elements
            .iter()
            .enumerate()
            .map(|(i, o)| (o.clone(), i))
            .collect();
        let mut distances = vec![0u32; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = elements[i].distance(&elements[j], inner) as u32;
                distances[i * n + j] = d;
                distances[j * n + i] = d;
            }
        }
        Ok(Self {
            elements,
            index,
            inner,
            distances,
        })
    }

    pub fn elements(&self) -> &[O] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, obs: &O) -> Option<usize> {
        self.index.get(obs).copied()
    }

    pub fn distance(&self, i: usize, j: usize) -> usize {
        self.distances[i * self.elements.len() + j] as usize
    }

    pub fn distances_to(&self, mode: &O) -> Vec<usize> {
        match self.index_of(mode) {
            Some(m) => (0..self.len()).map(|i| self.distance(i, m)).collect(),
            None => self
                .elements
                .iter()
                .map(|e| e.distance(mode, self.inner))
                .collect(),
        }
    }

    pub fn pmf(&self, mode: &O, gamma: f64) -> Vec<f64> {
        let w: Vec<f64> = self
            .distances_to(mode)
            .into_iter()
            .map(|d| (-gamma * d as f64).exp())
            .collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }

    pub fn log_partition(&self, mode: &O, gamma: f64) -> f64 {
        self.distances_to(mode)
            .into_iter()
            .map(|d| (-gamma * d as f64).exp())
            .sum::<f64>()
            .ln()
    }

    /// `n` independent draws from the exact model at (mode, gamma).
    pub fn sample<R: Rng + ?Sized>(&self, mode: &O, gamma: f64, n: usize, rng: &mut R) -> Vec<O> {
        let pmf = self.pmf(mode, gamma);
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for p in pmf {
            acc += p;
            cdf.push(acc);
        }
        (0..n)
            .map(|_| {
                let u = rng.random::<f64>() * acc;
                let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                self.elements[i].clone()
            })
            .collect()
    }
}

fn weights<O: Observation>(params: &ModelParams<O>, cap: usize) -> Result<Vec<(O, usize, f64)>> {
    let space = enumerate_space::<O>(&params.bounds, cap)?;
    Ok(space
        .into_iter()
        .map(|o| {
            let d = params.distance_to_mode(&o);
            (o, d, (-params.gamma * d as f64).exp())
        })
        .collect())
}

/// Normalising constant by summing the kernel over the whole bounded space.
pub fn exact_partition<O: Observation>(params: &ModelParams<O>, cap: usize) -> Result<f64> {
    Ok(weights(params, cap)?.iter().map(|w| w.2).sum())
}

pub fn exact_pmf<O: Observation>(params: &ModelParams<O>, cap: usize) -> Result<Vec<(O, f64)>> {
    let w = weights(params, cap)?;
    let z: f64 = w.iter().map(|x| x.2).sum();
    Ok(w.into_iter().map(|(o, _, x)| (o, x / z)).collect())
}

/// Entropy `-sum p log p` by enumeration.
pub fn exact_entropy<O: Observation>(params: &ModelParams<O>, cap: usize) -> Result<f64> {
    let w = weights(params, cap)?;
    let z: f64 = w.iter().map(|x| x.2).sum();
    Ok(w.iter()
        .map(|(_, _, x)| {
            let p = x / z;
            if p > 0.0 {
                -p * p.ln()
            } else {
                0.0
            }
        })
        .sum())
}

/// Entropy through the identity `H = gamma * E[d] + log Z`.
pub fn entropy_via_partition<O: Observation>(params: &ModelParams<O>, cap: usize) -> Result<f64> {
    let w = weights(params, cap)?;
    let z: f64 = w.iter().map(|x| x.2).sum();
    let mean_d: f64 = w.iter().map(|(_, d, x)| *d as f64 * x / z).sum();
    Ok(params.gamma * mean_d + z.ln())
}
