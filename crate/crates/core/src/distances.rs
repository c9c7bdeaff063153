//! Distances between paths, interaction sequences, interaction multisets and
//! graphs, plus sample Fréchet means.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::error::{Error, Result};
use crate::types::{Observation, Path, Vertex};

/// Which common-substructure length drives the path distance `n + m - 2*len`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathMetric {
    /// Longest common contiguous subpath.
    Lsp,
    /// Longest common subsequence.
    Lcs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricLevel {
    /// Optimal monotone matching; applies to interaction sequences.
    SequenceEdit,
    /// Optimal unconstrained matching; applies to interaction multisets.
    MultisetMatching,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetricSpec {
    pub level: MetricLevel,
    pub inner: PathMetric,
}

impl MetricSpec {
    pub fn for_observation<O: Observation>(inner: PathMetric) -> Self {
        Self {
            level: O::LEVEL,
            inner,
        }
    }

    pub fn check<O: Observation>(&self) -> Result<()> {
        if self.level != O::LEVEL {
            return Err(Error::InvalidParameter(format!(
                "metric level {:?} does not apply to this observation type",
                self.level
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphMetric {
    Hamming,
    L1,
}

pub fn common_subpath_len(a: &[Vertex], b: &[Vertex]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    // prev[j] = length of the common run ending at a[i-1], b[j-1]
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    let mut best = 0;
    for &x in a {
        for (j, &y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { 0 };
            best = best.max(cur[j + 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

pub fn common_subseq_len(a: &[Vertex], b: &[Vertex]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &x in a {
        for (j, &y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `n + m - 2*len`, where `len` is the common subpath or subsequence length.
/// An empty argument stands for the missing path, giving the other length.
pub fn path_distance(a: &[Vertex], b: &[Vertex], kind: PathMetric) -> usize {
    let common = match kind {
        PathMetric::Lsp => common_subpath_len(a, b),
        PathMetric::Lcs => common_subseq_len(a, b),
    };
    a.len() + b.len() - 2 * common
}

/// Edit distance between interaction sequences: cheapest monotone matching
/// where unmatched paths pay their distance to the empty path.
pub fn seq_distance(s: &[Path], t: &[Path], inner: PathMetric) -> usize {
    let m = t.len();
    let mut prev: Vec<usize> = Vec::with_capacity(m + 1);
    prev.push(0);
    for p in t {
        let last = *prev.last().unwrap();
        prev.push(last + p.len());
    }
    let mut cur = vec![0usize; m + 1];
    for p in s {
        cur[0] = prev[0] + p.len();
        for (j, q) in t.iter().enumerate() {
            let del = prev[j + 1] + p.len();
            let ins = cur[j] + q.len();
            let sub = prev[j] + path_distance(p, q, inner);
            cur[j + 1] = del.min(ins).min(sub);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Matching distance between interaction multisets: optimal assignment on
/// the `(N+M)`-square matrix padded with unmatched-path penalties.
pub fn multiset_distance(e: &[Path], f: &[Path], inner: PathMetric) -> usize {
    let (n, m) = (e.len(), f.len());
    if n == 0 {
        return f.iter().map(|p| p.len()).sum();
    }
    if m == 0 {
        return e.iter().map(|p| p.len()).sum();
    }
    let size = n + m;
    let mut cost = vec![vec![0i64; size]; size];
    for i in 0..size {
        for j in 0..size {
            cost[i][j] = match (i < n, j < m) {
                (true, true) => path_distance(&e[i], &f[j], inner) as i64,
                (true, false) => e[i].len() as i64,
                (false, true) => f[j].len() as i64,
                (false, false) => 0,
            };
        }
    }
    assignment::solve(&cost).0 as usize
}

/// Matching distance mapped into `[0, 1]` via `2d / (d(E,0) + d(E',0) + d)`.
pub fn steinhaus(e: &[Path], f: &[Path], inner: PathMetric) -> Result<f64> {
    if e.is_empty() && f.is_empty() {
        return Err(Error::BothEmpty);
    }
    let d = multiset_distance(e, f, inner) as f64;
    let de: usize = e.iter().map(|p| p.len()).sum();
    let df: usize = f.iter().map(|p| p.len()).sum();
    let denom = de as f64 + df as f64 + d;
    if denom == 0.0 {
        // both consist only of empty paths
        return Ok(0.0);
    }
    Ok(2.0 * d / denom)
}

/// Entrywise L1 distance between adjacency matrices given row-major.
pub fn graph_distance(a: &[u64], b: &[u64], kind: GraphMetric) -> Result<u64> {
    if a.len() != b.len() {
        return Err(Error::VertexMismatch(a.len(), b.len()));
    }
    if kind == GraphMetric::Hamming && a.iter().chain(b.iter()).any(|&x| x > 1) {
        return Err(Error::NonBinaryGraph);
    }
    Ok(a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y)).sum())
}

/// Index of the sample element minimising the sum of squared distances to
/// the whole sample; the first index wins ties.
pub fn frechet_mean_index<F>(n: usize, dist: F) -> Option<usize>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    if n == 0 {
        return None;
    }
    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| dist(i, j).powi(2)).sum())
        .collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    Some(best)
}

pub fn frechet_mean<O: Observation>(sample: &[O], inner: PathMetric) -> Option<&O> {
    frechet_mean_index(sample.len(), |i, j| {
        sample[i].distance(&sample[j], inner) as f64
    })
    .map(|i| &sample[i])
}

/// Symmetric matrix of pairwise distances.
pub fn distance_matrix<O: Observation>(sample: &[O], inner: PathMetric) -> Vec<Vec<usize>> {
    let n = sample.len();
    let rows: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if j > i {
                        sample[i].distance(&sample[j], inner)
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    let mut out = rows;
    for i in 0..n {
        for j in 0..i {
            out[i][j] = out[j][i];
        }
    }
    out
}
