//! Involutive proposals over collections of paths: entry-level edit
//! allocation and whole-path insertion/deletion.
//!
//! Auxiliary variables use 0-based positions throughout.

mod cooccurrence;
mod edit;
mod path_id;

use std::sync::Arc;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::models::TrPoisson;
use crate::types::{ln_factorial, Observation, Path, SpaceBounds, Vertex};

pub use cooccurrence::CoOccurrence;
pub use edit::{
    edit_alloc_involution, edit_alloc_log_density, edit_alloc_log_ratio, edit_alloc_sample_aux,
    EditAllocAux, PathEdit,
};
pub use path_id::{
    path_id_involution, path_id_log_density, path_id_log_ratio, path_id_sample_aux, PathIdAux,
};

/// How inserted vertices are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum InsertionSpec {
    Uniform,
    /// Co-occurrence weights learned from the data, smoothed by `alpha`.
    Informed {
        alpha: f64,
    },
}

fn default_nu() -> usize {
    2
}

fn default_beta() -> f64 {
    0.7
}

fn default_insertion() -> InsertionSpec {
    InsertionSpec::Uniform
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveConfig {
    /// Largest number of entry edits in one edit-allocation proposal.
    #[serde(default = "default_nu")]
    pub nu_ed: usize,
    /// Largest number of whole-path insertions plus deletions.
    #[serde(default = "default_nu")]
    pub nu_td: usize,
    /// Probability of choosing the edit-allocation move.
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_insertion")]
    pub insertion: InsertionSpec,
    /// Length distribution of inserted paths; defaults to
    /// TrPoisson(3, 1, K) when absent.
    #[serde(default)]
    pub path_length: Option<TrPoisson>,
}

impl Default for MoveConfig {
    fn default() -> Self {
        Self {
            nu_ed: default_nu(),
            nu_td: default_nu(),
            beta: default_beta(),
            insertion: InsertionSpec::Uniform,
            path_length: None,
        }
    }
}

impl MoveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nu_ed == 0 || self.nu_td == 0 {
            return Err(invalid("nu_ed and nu_td must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(invalid(format!(
                "beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if let InsertionSpec::Informed { alpha } = self.insertion {
            if !(alpha >= 0.0 && alpha.is_finite()) {
                return Err(invalid("informed smoothing alpha must be non-negative"));
            }
        }
        if let Some(t) = &self.path_length {
            if t.min() == 0 {
                return Err(invalid("inserted path lengths must be at least 1"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    EditAllocation,
    PathInsertDelete,
}

/// Categorical distribution over inserted vertices.
#[derive(Clone, Debug, PartialEq)]
pub enum EntryDist {
    Uniform(usize),
    Weights(Vec<f64>),
}

impl EntryDist {
    pub fn ln_prob(&self, y: Vertex) -> f64 {
        match self {
            EntryDist::Uniform(v) if y < *v => -(*v as f64).ln(),
            EntryDist::Uniform(_) => f64::NEG_INFINITY,
            EntryDist::Weights(w) => w.get(y).map_or(f64::NEG_INFINITY, |p| p.ln()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vertex {
        match self {
            EntryDist::Uniform(v) => rng.random_range(0..*v),
            EntryDist::Weights(w) => {
                let total: f64 = w.iter().sum();
                let u = rng.random::<f64>() * total;
                let mut acc = 0.0;
                for (i, p) in w.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return i;
                    }
                }
                w.iter().rposition(|&p| p > 0.0).unwrap_or(0)
            }
        }
    }
}

/// A proposed state together with `log q(u'|x') - log q(u|x)`.
#[derive(Clone, Debug)]
pub struct Proposal {
    pub paths: Vec<Path>,
    pub log_ratio: f64,
    pub kind: MoveKind,
}

/// Move configuration resolved against a vertex budget and, for informed
/// insertions, a dataset.
#[derive(Clone, Debug)]
pub struct MoveKernel {
    cfg: MoveConfig,
    v: usize,
    path_length: TrPoisson,
    cooc: Option<Arc<CoOccurrence>>,
}

impl MoveKernel {
    /// Kernel with uniform insertions; informed configurations need data and
    /// are rejected here.
    pub fn uniform(cfg: &MoveConfig, bounds: &SpaceBounds) -> Result<Self> {
        if matches!(cfg.insertion, InsertionSpec::Informed { .. }) {
            return Err(invalid("informed insertions need a dataset"));
        }
        Self::build(cfg, bounds, None)
    }

    pub fn new<O: Observation>(cfg: &MoveConfig, bounds: &SpaceBounds, data: &[O]) -> Result<Self> {
        let cooc = match cfg.insertion {
            InsertionSpec::Uniform => None,
            InsertionSpec::Informed { alpha } => {
                Some(Arc::new(CoOccurrence::build(data, bounds.v, alpha)?))
            }
        };
        Self::build(cfg, bounds, cooc)
    }

    pub fn with_cooccurrence(
        cfg: &MoveConfig,
        bounds: &SpaceBounds,
        cooc: Arc<CoOccurrence>,
    ) -> Result<Self> {
        Self::build(cfg, bounds, Some(cooc))
    }

    fn build(
        cfg: &MoveConfig,
        bounds: &SpaceBounds,
        cooc: Option<Arc<CoOccurrence>>,
    ) -> Result<Self> {
        cfg.validate()?;
        if let Some(c) = &cooc {
            if c.vertices() != bounds.v {
                return Err(invalid("co-occurrence vertex count differs from V"));
            }
        }
        let path_length = match &cfg.path_length {
            Some(t) => t.clone(),
            None => TrPoisson::new(3.0, 1, bounds.k)?,
        };
        Ok(Self {
            cfg: cfg.clone(),
            v: bounds.v,
            path_length,
            cooc,
        })
    }

    pub fn config(&self) -> &MoveConfig {
        &self.cfg
    }

    pub fn vertices(&self) -> usize {
        self.v
    }

    pub fn path_length(&self) -> &TrPoisson {
        &self.path_length
    }

    pub fn cooccurrence(&self) -> Option<&CoOccurrence> {
        self.cooc.as_deref()
    }

    /// Distribution of an inserted entry given the entries a path keeps.
    pub fn entry_dist(&self, preserved: &[Vertex]) -> EntryDist {
        match &self.cooc {
            None => EntryDist::Uniform(self.v),
            Some(c) => EntryDist::Weights(c.informed_entry_dist(preserved)),
        }
    }

    fn vertex_dist(&self) -> EntryDist {
        match &self.cooc {
            None => EntryDist::Uniform(self.v),
            Some(c) => EntryDist::Weights(c.marginal().to_vec()),
        }
    }

    /// Log-density of a whole inserted path: length, then i.i.d. entries.
    pub fn path_log_density(&self, path: &Path) -> f64 {
        let dist = self.vertex_dist();
        self.path_length.ln_pmf(path.len()) + path.iter().map(|&x| dist.ln_prob(x)).sum::<f64>()
    }

    pub fn sample_path<R: Rng + ?Sized>(&self, rng: &mut R) -> Path {
        let dist = self.vertex_dist();
        let len = self.path_length.sample(rng);
        Path::new((0..len).map(|_| dist.sample(rng)).collect())
    }

    /// Draws one of the two moves (edit allocation with probability beta) and
    /// applies it to `paths`.
    pub fn propose<R: Rng + ?Sized>(&self, paths: &[Path], rng: &mut R) -> Proposal {
        if rng.random::<f64>() < self.cfg.beta {
            let aux = edit_alloc_sample_aux(paths, self, rng);
            let log_ratio = edit_alloc_log_ratio(paths, &aux, self);
            let (next, _) = edit_alloc_involution(paths, &aux).expect("sampled aux is valid");
            Proposal {
                paths: next,
                log_ratio,
                kind: MoveKind::EditAllocation,
            }
        } else {
            let aux = path_id_sample_aux(paths, self, rng);
            let log_ratio = path_id_log_ratio(paths, &aux, self);
            let (next, _) = path_id_involution(paths, &aux).expect("sampled aux is valid");
            Proposal {
                paths: next,
                log_ratio,
                kind: MoveKind::PathInsertDelete,
            }
        }
    }
}

/// Uniformly random increasing `k`-subset of `0..n`.
pub(crate) fn sorted_subset<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let mut v = index::sample(rng, n, k).into_vec();
    v.sort_unstable();
    v
}

pub(crate) fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

pub(crate) fn is_increasing_below(v: &[usize], n: usize) -> bool {
    v.windows(2).all(|w| w[0] < w[1]) && v.last().is_none_or(|&x| x < n)
}

/// Interleaves `inserted` at positions `at` (0-based, increasing, in the
/// output) with `kept` filling the remaining slots in order.
pub(crate) fn interleave<T: Clone>(kept: &[T], at: &[usize], inserted: &[T]) -> Vec<T> {
    let total = kept.len() + inserted.len();
    let mut out = Vec::with_capacity(total);
    let (mut k, mut s) = (0, 0);
    for pos in 0..total {
        if s < at.len() && at[s] == pos {
            out.push(inserted[s].clone());
            s += 1;
        } else {
            out.push(kept[k].clone());
            k += 1;
        }
    }
    out
}

/// Splits `items` into those at positions `at` and the rest, both in order.
pub(crate) fn split_at_positions<T: Clone>(items: &[T], at: &[usize]) -> (Vec<T>, Vec<T>) {
    let mut picked = Vec::with_capacity(at.len());
    let mut rest = Vec::with_capacity(items.len() - at.len());
    let mut s = 0;
    for (i, x) in items.iter().enumerate() {
        if s < at.len() && at[s] == i {
            picked.push(x.clone());
            s += 1;
        } else {
            rest.push(x.clone());
        }
    }
    (picked, rest)
}
