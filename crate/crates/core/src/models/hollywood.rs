//! Finite-regime Hollywood model: a two-parameter urn over vertices in which
//! frequently seen vertices are more likely to be picked again.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::trpoisson::TrPoisson;
use crate::error::{invalid, Result};
use crate::types::{InteractionSeq, Path};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HollywoodParams {
    pub alpha: f64,
    pub theta: f64,
    pub length: TrPoisson,
    #[serde(rename = "V")]
    pub v: usize,
}

impl HollywoodParams {
    /// Finite regime with `theta = -alpha * V`.
    pub fn finite(alpha: f64, v: usize, length: TrPoisson) -> Result<Self> {
        Self::new(alpha, -alpha * v as f64, length, v)
    }

    pub fn new(alpha: f64, theta: f64, length: TrPoisson, v: usize) -> Result<Self> {
        let p = Self {
            alpha,
            theta,
            length,
            v,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.v == 0 {
            return Err(invalid("Hollywood model needs at least one vertex"));
        }
        if !(self.alpha < 0.0) || !self.alpha.is_finite() {
            return Err(invalid(format!(
                "only the finite regime (alpha < 0) is supported, got alpha = {}",
                self.alpha
            )));
        }
        let want = -self.alpha * self.v as f64;
        if (self.theta - want).abs() > 1e-9 * want.abs().max(1.0) {
            return Err(invalid(format!(
                "finite regime requires theta = -alpha*V = {want}, got {}",
                self.theta
            )));
        }
        if self.length.min() == 0 {
            return Err(invalid("path lengths must be at least 1"));
        }
        Ok(())
    }
}

/// Draws `n_paths` paths. Vertices keep their raw labels in `[0, V)`: a new
/// vertex is chosen uniformly among those not yet seen.
pub fn hollywood_sample<R: Rng + ?Sized>(
    params: &HollywoodParams,
    n_paths: usize,
    rng: &mut R,
) -> Result<InteractionSeq> {
    params.validate()?;
    let alpha = params.alpha;
    let theta = params.theta;
    let mut counts = vec![0usize; params.v];
    let mut seen: Vec<usize> = Vec::new();
    let mut unseen: Vec<usize> = (0..params.v).collect();
    let mut total = 0usize;
    let mut paths = Vec::with_capacity(n_paths);
    for _ in 0..n_paths {
        let len = params.length.sample(rng);
        let mut entries = Vec::with_capacity(len);
        for _ in 0..len {
            let u = rng.random::<f64>() * (theta + total as f64);
            let mut acc = 0.0;
            let mut pick = None;
            for &v in &seen {
                acc += counts[v] as f64 - alpha;
                if u < acc {
                    pick = Some(v);
                    break;
                }
            }
            let v = match pick {
                Some(v) => v,
                None if !unseen.is_empty() => {
                    let i = rng.random_range(0..unseen.len());
                    let v = unseen.swap_remove(i);
                    seen.push(v);
                    v
                }
                // rounding left a sliver of mass after every vertex was seen
                None => *seen.last().expect("at least one vertex seen"),
            };
            counts[v] += 1;
            total += 1;
            entries.push(v);
        }
        paths.push(Path::new(entries));
    }
    Ok(InteractionSeq::new(paths))
}
