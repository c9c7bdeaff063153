//! Edit allocation: spread a random number of entry deletions/insertions
//! over the paths, then apply them path by path.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::{
    interleave, is_increasing_below, ln_binomial, sorted_subset, split_at_positions, MoveKernel,
};
use crate::error::{Error, Result};
use crate::types::{ln_factorial, Path, Vertex};

/// Edits applied to one path: delete the entries at `delete_at`, then place
/// `inserted` at positions `insert_at` of the resulting path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathEdit {
    pub delete_at: Vec<usize>,
    pub insert_at: Vec<usize>,
    pub inserted: Vec<Vertex>,
}

impl PathEdit {
    pub fn none() -> Self {
        Self {
            delete_at: Vec::new(),
            insert_at: Vec::new(),
            inserted: Vec::new(),
        }
    }

    /// Edits allocated to this path (`z_i = d_i + a_i`).
    pub fn edits(&self) -> usize {
        self.delete_at.len() + self.insert_at.len()
    }
}

/// One [`PathEdit`] per path of the current state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EditAllocAux {
    pub paths: Vec<PathEdit>,
}

impl EditAllocAux {
    /// Total number of edits.
    pub fn delta(&self) -> usize {
        self.paths.iter().map(PathEdit::edits).sum()
    }

    /// Allocation vector.
    pub fn z(&self) -> Vec<usize> {
        self.paths.iter().map(PathEdit::edits).collect()
    }
}

fn multinomial_uniform<R: Rng + ?Sized>(total: usize, cells: usize, rng: &mut R) -> Vec<usize> {
    let mut out = vec![0usize; cells];
    let mut left = total as u64;
    for (i, slot) in out.iter_mut().enumerate() {
        if left == 0 {
            break;
        }
        let remaining_cells = cells - i;
        let draw = if remaining_cells == 1 {
            left
        } else {
            Binomial::new(left, 1.0 / remaining_cells as f64)
                .expect("valid binomial")
                .sample(rng)
        };
        *slot = draw as usize;
        left -= draw;
    }
    out
}

pub fn edit_alloc_sample_aux<R: Rng + ?Sized>(
    paths: &[Path],
    kernel: &MoveKernel,
    rng: &mut R,
) -> EditAllocAux {
    assert!(!paths.is_empty(), "edit allocation needs at least one path");
    let delta = rng.random_range(1..=kernel.config().nu_ed);
    let z = multinomial_uniform(delta, paths.len(), rng);
    let edits = paths
        .iter()
        .zip(z)
        .map(|(p, zi)| {
            if zi == 0 {
                return PathEdit::none();
            }
            let n = p.len();
            let d = rng.random_range(0..=zi.min(n));
            let a = zi - d;
            let m = n - d + a;
            let delete_at = sorted_subset(rng, n, d);
            let insert_at = sorted_subset(rng, m, a);
            let (_, kept) = split_at_positions(p, &delete_at);
            let dist = kernel.entry_dist(&kept);
            let inserted = (0..a).map(|_| dist.sample(rng)).collect();
            PathEdit {
                delete_at,
                insert_at,
                inserted,
            }
        })
        .collect();
    EditAllocAux { paths: edits }
}

fn check(paths: &[Path], aux: &EditAllocAux) -> Result<()> {
    if aux.paths.len() != paths.len() {
        return Err(Error::InvalidAux(format!(
            "{} path edits for {} paths",
            aux.paths.len(),
            paths.len()
        )));
    }
    if aux.delta() == 0 {
        return Err(Error::InvalidAux("at least one edit is required".into()));
    }
    for (i, (p, e)) in paths.iter().zip(&aux.paths).enumerate() {
        let n = p.len();
        if !is_increasing_below(&e.delete_at, n) {
            return Err(Error::InvalidAux(format!(
                "bad deletion positions on path {i}"
            )));
        }
        let m = n - e.delete_at.len() + e.insert_at.len();
        if !is_increasing_below(&e.insert_at, m) || e.inserted.len() != e.insert_at.len() {
            return Err(Error::InvalidAux(format!("bad insertions on path {i}")));
        }
    }
    Ok(())
}

/// Applies the edits and returns the new paths with the auxiliary variable
/// that undoes them; applying the map twice gives back the input exactly.
/// Paths may become empty, which callers treat as leaving the support.
pub fn edit_alloc_involution(
    paths: &[Path],
    aux: &EditAllocAux,
) -> Result<(Vec<Path>, EditAllocAux)> {
    check(paths, aux)?;
    let mut out = Vec::with_capacity(paths.len());
    let mut back = Vec::with_capacity(paths.len());
    for (p, e) in paths.iter().zip(&aux.paths) {
        let (deleted, kept) = split_at_positions(p, &e.delete_at);
        out.push(Path::new(interleave(&kept, &e.insert_at, &e.inserted)));
        back.push(PathEdit {
            delete_at: e.insert_at.clone(),
            insert_at: e.delete_at.clone(),
            inserted: deleted,
        });
    }
    Ok((out, EditAllocAux { paths: back }))
}

/// Log-density of `aux` given the current paths, factor by factor.
/// Returns negative infinity outside the support.
pub fn edit_alloc_log_density(paths: &[Path], aux: &EditAllocAux, kernel: &MoveKernel) -> f64 {
    if check(paths, aux).is_err() || aux.delta() > kernel.config().nu_ed {
        return f64::NEG_INFINITY;
    }
    let n_paths = paths.len() as f64;
    let delta = aux.delta();
    let mut out = -(kernel.config().nu_ed as f64).ln();
    out += ln_factorial(delta) - delta as f64 * n_paths.ln();
    for (p, e) in paths.iter().zip(&aux.paths) {
        let z = e.edits();
        let n = p.len();
        let d = e.delete_at.len();
        let a = e.insert_at.len();
        let m = n - d + a;
        out -= ln_factorial(z);
        out -= ((n.min(z) + 1) as f64).ln();
        out -= ln_binomial(n, d) + ln_binomial(m, a);
        let (_, kept) = split_at_positions(p, &e.delete_at);
        let dist = kernel.entry_dist(&kept);
        out += e.inserted.iter().map(|&y| dist.ln_prob(y)).sum::<f64>();
    }
    out
}

/// `log q(aux'|paths') - log q(aux|paths)` in closed form, where
/// `(paths', aux')` is the image of `(paths, aux)` under the involution.
pub fn edit_alloc_log_ratio(paths: &[Path], aux: &EditAllocAux, kernel: &MoveKernel) -> f64 {
    let mut out = 0.0;
    for (p, e) in paths.iter().zip(&aux.paths) {
        let z = e.edits();
        if z == 0 {
            continue;
        }
        let n = p.len();
        let m = n - e.delete_at.len() + e.insert_at.len();
        out += ((n.min(z) + 1) as f64).ln() - ((m.min(z) + 1) as f64).ln();
        let (deleted, kept) = split_at_positions(p, &e.delete_at);
        let dist = kernel.entry_dist(&kept);
        out += deleted.iter().map(|&y| dist.ln_prob(y)).sum::<f64>();
        out -= e.inserted.iter().map(|&y| dist.ln_prob(y)).sum::<f64>();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moves::MoveConfig;
    use crate::types::SpaceBounds;
    use rand::SeedableRng;

    fn kernel(v: usize, nu: usize) -> MoveKernel {
        let cfg = MoveConfig {
            nu_ed: nu,
            ..MoveConfig::default()
        };
        MoveKernel::uniform(&cfg, &SpaceBounds::new(v, 6, 6).unwrap()).unwrap()
    }

    fn p(v: &[usize]) -> Path {
        Path::new(v.to_vec())
    }

    #[test]
    fn worked_example() {
        // (a,b,a,b,a) with a=0, b=1, d=3: delete the 4th and 5th entries,
        // insert d at the front
        let paths = vec![p(&[0, 1, 0, 1, 0])];
        let aux = EditAllocAux {
            paths: vec![PathEdit {
                delete_at: vec![3, 4],
                insert_at: vec![0],
                inserted: vec![3],
            }],
        };
        let (next, back) = edit_alloc_involution(&paths, &aux).unwrap();
        assert_eq!(next, vec![p(&[3, 0, 1, 0])]);
        assert_eq!(back.paths[0].inserted, vec![1, 0]);
        let (again, aux2) = edit_alloc_involution(&next, &back).unwrap();
        assert_eq!(again, paths);
        assert_eq!(aux2, aux);
    }

    #[test]
    fn delete_and_reinsert_same_entry() {
        let paths = vec![p(&[2, 1]), p(&[0])];
        let aux = EditAllocAux {
            paths: vec![
                PathEdit {
                    delete_at: vec![0],
                    insert_at: vec![0],
                    inserted: vec![2],
                },
                PathEdit::none(),
            ],
        };
        let (next, back) = edit_alloc_involution(&paths, &aux).unwrap();
        assert_eq!(next, paths);
        assert_eq!(edit_alloc_involution(&next, &back).unwrap().1, aux);
    }

    #[test]
    fn single_edit_budget() {
        let k = kernel(3, 1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let paths = vec![p(&[0, 1]), p(&[2]), p(&[1, 1, 1])];
        for _ in 0..200 {
            let aux = edit_alloc_sample_aux(&paths, &k, &mut rng);
            assert_eq!(aux.delta(), 1);
            assert_eq!(aux.z().iter().filter(|&&z| z == 1).count(), 1);
            for e in &aux.paths {
                if e.edits() == 0 {
                    assert!(e.delete_at.is_empty() && e.inserted.is_empty());
                }
            }
        }
    }

    #[test]
    fn balanced_uniform_edits_have_zero_ratio() {
        let k = kernel(4, 3);
        let paths = vec![p(&[0, 1, 2]), p(&[3])];
        let aux = EditAllocAux {
            paths: vec![
                PathEdit {
                    delete_at: vec![1],
                    insert_at: vec![2],
                    inserted: vec![3],
                },
                PathEdit::none(),
            ],
        };
        assert_eq!(edit_alloc_log_ratio(&paths, &aux, &k), 0.0);
    }

    #[test]
    fn ratio_matches_density_difference() {
        // n = 3, z = 2, d = 2, a = 0, V = 4 under uniform insertions
        let k = kernel(4, 2);
        let paths = vec![p(&[0, 1, 2])];
        let aux = EditAllocAux {
            paths: vec![PathEdit {
                delete_at: vec![0, 2],
                insert_at: vec![],
                inserted: vec![],
            }],
        };
        let closed = edit_alloc_log_ratio(&paths, &aux, &k);
        let want = (3f64 / 2.0).ln() + 2.0 * (0.25f64).ln();
        assert!((closed - want).abs() < 1e-12);
        let (next, back) = edit_alloc_involution(&paths, &aux).unwrap();
        let direct =
            edit_alloc_log_density(&next, &back, &k) - edit_alloc_log_density(&paths, &aux, &k);
        assert!((closed - direct).abs() < 1e-12);
    }

    #[test]
    fn delta_is_uniform() {
        let k = kernel(3, 4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let paths = vec![p(&[0, 1]), p(&[2, 2, 0])];
        let mut counts = [0usize; 5];
        let n = 10000;
        for _ in 0..n {
            counts[edit_alloc_sample_aux(&paths, &k, &mut rng).delta()] += 1;
        }
        let sd = (n as f64 * 0.25 * 0.75).sqrt();
        for c in &counts[1..] {
            assert!((*c as f64 - n as f64 / 4.0).abs() < 3.0 * sd);
        }
    }

    #[test]
    fn rejects_malformed_aux() {
        let paths = vec![p(&[0, 1])];
        let bad = EditAllocAux {
            paths: vec![PathEdit {
                delete_at: vec![2],
                insert_at: vec![],
                inserted: vec![],
            }],
        };
        assert!(edit_alloc_involution(&paths, &bad).is_err());
        let empty = EditAllocAux {
            paths: vec![PathEdit::none()],
        };
        assert!(edit_alloc_involution(&paths, &empty).is_err());
    }
}
