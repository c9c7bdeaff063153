//! Whole-path insertion and deletion, changing the number of paths.

use rand::Rng;

use super::{
    interleave, is_increasing_below, ln_binomial, sorted_subset, split_at_positions, MoveKernel,
};
use crate::error::{Error, Result};
use crate::types::Path;

/// Delete the paths at `delete_at`, then place `inserted` at positions
/// `insert_at` of the result. `epsilon` is the total operation count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathIdAux {
    pub epsilon: usize,
    pub delete_at: Vec<usize>,
    pub insert_at: Vec<usize>,
    pub inserted: Vec<Path>,
}

impl PathIdAux {
    pub fn deletions(&self) -> usize {
        self.delete_at.len()
    }

    pub fn insertions(&self) -> usize {
        self.insert_at.len()
    }
}

pub fn path_id_sample_aux<R: Rng + ?Sized>(
    paths: &[Path],
    kernel: &MoveKernel,
    rng: &mut R,
) -> PathIdAux {
    let n = paths.len();
    let epsilon = rng.random_range(1..=kernel.config().nu_td);
    let d = rng.random_range(0..=n.min(epsilon));
    let a = epsilon - d;
    let m = n - d + a;
    let delete_at = sorted_subset(rng, n, d);
    let insert_at = sorted_subset(rng, m, a);
    let inserted = (0..a).map(|_| kernel.sample_path(rng)).collect();
    PathIdAux {
        epsilon,
        delete_at,
        insert_at,
        inserted,
    }
}

fn check(paths: &[Path], aux: &PathIdAux) -> Result<()> {
    let n = paths.len();
    let d = aux.deletions();
    if aux.epsilon == 0 || aux.epsilon != d + aux.insertions() {
        return Err(Error::InvalidAux(
            "epsilon must equal deletions plus insertions".into(),
        ));
    }
    if !is_increasing_below(&aux.delete_at, n) {
        return Err(Error::InvalidAux("bad deletion positions".into()));
    }
    let m = n - d + aux.insertions();
    if !is_increasing_below(&aux.insert_at, m) || aux.inserted.len() != aux.insertions() {
        return Err(Error::InvalidAux("bad insertions".into()));
    }
    if aux.inserted.iter().any(|p| p.is_empty()) {
        return Err(Error::InvalidAux("inserted paths must be non-empty".into()));
    }
    Ok(())
}

/// Applies the deletions and insertions; the returned auxiliary variable
/// reverses them. The result may have no paths at all, which callers treat
/// as leaving the support.
pub fn path_id_involution(paths: &[Path], aux: &PathIdAux) -> Result<(Vec<Path>, PathIdAux)> {
    check(paths, aux)?;
    let (deleted, kept) = split_at_positions(paths, &aux.delete_at);
    let out = interleave(&kept, &aux.insert_at, &aux.inserted);
    let back = PathIdAux {
        epsilon: aux.epsilon,
        delete_at: aux.insert_at.clone(),
        insert_at: aux.delete_at.clone(),
        inserted: deleted,
    };
    Ok((out, back))
}

pub fn path_id_log_density(paths: &[Path], aux: &PathIdAux, kernel: &MoveKernel) -> f64 {
    if check(paths, aux).is_err() || aux.epsilon > kernel.config().nu_td {
        return f64::NEG_INFINITY;
    }
    let n = paths.len();
    let d = aux.deletions();
    let a = aux.insertions();
    let m = n - d + a;
    -(kernel.config().nu_td as f64).ln()
        - ((n.min(aux.epsilon) + 1) as f64).ln()
        - ln_binomial(n, d)
        - ln_binomial(m, a)
        + aux
            .inserted
            .iter()
            .map(|p| kernel.path_log_density(p))
            .sum::<f64>()
}

/// `log q(aux'|paths') - log q(aux|paths)` in closed form.
pub fn path_id_log_ratio(paths: &[Path], aux: &PathIdAux, kernel: &MoveKernel) -> f64 {
    let n = paths.len();
    let m = n - aux.deletions() + aux.insertions();
    let deleted: f64 = aux
        .delete_at
        .iter()
        .map(|&i| kernel.path_log_density(&paths[i]))
        .sum();
    let inserted: f64 = aux
        .inserted
        .iter()
        .map(|p| kernel.path_log_density(p))
        .sum();
    ((n.min(aux.epsilon) + 1) as f64).ln() - ((m.min(aux.epsilon) + 1) as f64).ln() + deleted
        - inserted
}
