use crate::error::{invalid, Result};
use crate::types::{Observation, Vertex};

/// Data-driven weights for informed insertions.
///
/// `counts[v][w]` (v != w) is the number of observations with at least one
/// path containing both `v` and `w`; `counts[v][v]` the number with a path
/// visiting `v` at least twice. Rows of `transition` are `counts` normalised
/// (all-zero rows become uniform) and `smoothed` mixes them with a uniform
/// row: `(P + alpha) / (1 + V alpha)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoOccurrence {
    v: usize,
    alpha: f64,
    counts: Vec<Vec<u64>>,
    transition: Vec<Vec<f64>>,
    smoothed: Vec<Vec<f64>>,
    vertex_obs: Vec<u64>,
    marginal: Vec<f64>,
}

impl CoOccurrence {
    pub fn build<O: Observation>(data: &[O], v: usize, alpha: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(invalid("co-occurrence needs at least one observation"));
        }
        if v == 0 {
            return Err(invalid("co-occurrence needs at least one vertex"));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(invalid(format!(
                "smoothing must be non-negative, got {alpha}"
            )));
        }
        let mut counts = vec![vec![0u64; v]; v];
        let mut vertex_obs = vec![0u64; v];
        for obs in data {
            let mut pair = vec![vec![false; v]; v];
            let mut present = vec![false; v];
            for path in obs.paths() {
                let mut k = vec![0usize; v];
                for &x in path.iter() {
                    if x >= v {
                        return Err(invalid(format!("vertex {x} outside [0, {v})")));
                    }
                    k[x] += 1;
                }
                let here: Vec<Vertex> = (0..v).filter(|&x| k[x] > 0).collect();
                for &a in &here {
                    present[a] = true;
                    if k[a] >= 2 {
                        pair[a][a] = true;
                    }
                    for &b in &here {
                        if a != b {
                            pair[a][b] = true;
                        }
                    }
                }
            }
            for a in 0..v {
                if present[a] {
                    vertex_obs[a] += 1;
                }
                for b in 0..v {
                    if pair[a][b] {
                        counts[a][b] += 1;
                    }
                }
            }
        }
        let uniform = 1.0 / v as f64;
        let transition: Vec<Vec<f64>> = counts
            .iter()
            .map(|row| {
                let s: u64 = row.iter().sum();
                if s == 0 {
                    vec![uniform; v]
                } else {
                    row.iter().map(|&c| c as f64 / s as f64).collect()
                }
            })
            .collect();
        let denom = 1.0 + v as f64 * alpha;
        let smoothed = transition
            .iter()
            .map(|row| row.iter().map(|&p| (p + alpha) / denom).collect())
            .collect();
        let total: u64 = vertex_obs.iter().sum();
        let marginal = vertex_obs
            .iter()
            .map(|&c| {
                let p = if total == 0 {
                    uniform
                } else {
                    c as f64 / total as f64
                };
                (p + alpha) / denom
            })
            .collect();
        Ok(Self {
            v,
            alpha,
            counts,
            transition,
            smoothed,
            vertex_obs,
            marginal,
        })
    }

    pub fn vertices(&self) -> usize {
        self.v
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn smoothed(&self) -> &[Vec<f64>] {
        &self.smoothed
    }

    /// Number of observations with a path containing each vertex.
    pub fn vertex_observations(&self) -> &[u64] {
        &self.vertex_obs
    }

    /// Smoothed vertex marginal used for whole-path insertions.
    pub fn marginal(&self) -> &[f64] {
        &self.marginal
    }

    /// Equal-weight mixture of the smoothed rows of the distinct preserved
    /// vertices; uniform when nothing is preserved.
    pub fn informed_entry_dist(&self, preserved: &[Vertex]) -> Vec<f64> {
        let mut distinct: Vec<Vertex> = preserved.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.is_empty() {
            return vec![1.0 / self.v as f64; self.v];
        }
        let w = 1.0 / distinct.len() as f64;
        let mut out = vec![0.0; self.v];
        for &x in &distinct {
            for (o, p) in out.iter_mut().zip(&self.smoothed[x]) {
                *o += w * p;
            }
        }
        out
    }
}
