//! Metropolis-Hastings samplers for the sequence and multiset models, built on
//! the involutive moves.
//!
//! Multiset states are kept in canonical order and the moves act on that
//! stored order. Accepting a multiset proposal includes the ratio of ordering
//! counts `A(E)/A(E')`, which turns the sequence-level chain into one that
//! targets the multiset model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::models::{ModelParams, SimParams, SisParams};
use crate::moves::{MoveConfig, MoveKernel, MoveKind};
use crate::types::{in_support, InteractionMultiset, InteractionSeq, Observation};

fn one() -> usize {
    1
}

/// How many states to keep and which steps they come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub iterations: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "one")]
    pub lag: usize,
}

impl Schedule {
    pub fn new(iterations: usize, burn_in: usize, lag: usize) -> Result<Self> {
        let s = Self {
            iterations,
            burn_in,
            lag,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.lag == 0 {
            return Err(invalid("iterations and lag must be at least 1"));
        }
        Ok(())
    }

    /// Steps taken after initialisation: `b + (m - 1) l + 1`.
    pub fn total_steps(&self) -> usize {
        self.burn_in + (self.iterations - 1) * self.lag + 1
    }

    /// Whether the state after step `t` (1-based) is recorded.
    pub fn records(&self, t: usize) -> bool {
        t > self.burn_in && (t - self.burn_in - 1) % self.lag == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    #[serde(flatten)]
    pub schedule: Schedule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub moves: MoveConfig,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveStats {
    pub proposed: usize,
    pub accepted: usize,
    /// Proposals rejected because they left the bounded space.
    pub out_of_support: usize,
}

impl MoveStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveDiagnostics {
    pub edit_allocation: MoveStats,
    pub path_insert_delete: MoveStats,
}

impl MoveDiagnostics {
    pub fn get_mut(&mut self, kind: MoveKind) -> &mut MoveStats {
        match kind {
            MoveKind::EditAllocation => &mut self.edit_allocation,
            MoveKind::PathInsertDelete => &mut self.path_insert_delete,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub moves: MoveDiagnostics,
    /// Distance from each recorded state to the mode.
    pub distance_trace: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct ChainOutput<O> {
    pub samples: Vec<O>,
    pub diagnostics: ChainDiagnostics,
}

/// Log acceptance ratio for moving from `current` to `proposed`; negative
/// infinity when the proposal leaves the support.
pub fn log_acceptance<O: Observation>(
    params: &ModelParams<O>,
    current: &O,
    current_dist: usize,
    proposed: &O,
    proposed_dist: usize,
    log_q_ratio: f64,
) -> f64 {
    if !in_support(proposed, &params.bounds) {
        return f64::NEG_INFINITY;
    }
    -params.gamma * (proposed_dist as f64 - current_dist as f64)
        + log_q_ratio
        + current.log_orderings()
        - proposed.log_orderings()
}

pub(crate) fn accept<R: Rng + ?Sized>(log_h: f64, rng: &mut R) -> bool {
    if log_h >= 0.0 {
        return true;
    }
    if log_h == f64::NEG_INFINITY {
        return false;
    }
    rng.random::<f64>().ln() < log_h
}

/// One Metropolis-Hastings step; returns whether the proposal was accepted.
pub fn mh_step<O: Observation, R: Rng + ?Sized>(
    params: &ModelParams<O>,
    kernel: &MoveKernel,
    state: &mut O,
    dist: &mut usize,
    stats: &mut MoveDiagnostics,
    rng: &mut R,
) -> bool {
    let prop = kernel.propose(state.paths(), rng);
    let s = stats.get_mut(prop.kind);
    s.proposed += 1;
    let cand = O::from_paths(prop.paths);
    if !in_support(&cand, &params.bounds) {
        s.out_of_support += 1;
        return false;
    }
    let d = params.distance_to_mode(&cand);
    let log_h = log_acceptance(params, state, *dist, &cand, d, prop.log_ratio);
    if accept(log_h, rng) {
        s.accepted += 1;
        *state = cand;
        *dist = d;
        true
    } else {
        false
    }
}

/// Runs a chain with an explicit kernel and RNG, starting from `init` (the
/// mode when absent).
pub fn run_chain<O: Observation, R: Rng + ?Sized>(
    params: &ModelParams<O>,
    kernel: &MoveKernel,
    schedule: &Schedule,
    init: Option<O>,
    rng: &mut R,
) -> Result<ChainOutput<O>> {
    schedule.validate()?;
    let mut state = init.unwrap_or_else(|| params.mode.clone());
    if !in_support(&state, &params.bounds) {
        return Err(invalid("initial state lies outside the bounded space"));
    }
    let mut dist = params.distance_to_mode(&state);
    let mut diagnostics = ChainDiagnostics::default();
    let mut samples = Vec::with_capacity(schedule.iterations);
    for t in 1..=schedule.total_steps() {
        mh_step(
            params,
            kernel,
            &mut state,
            &mut dist,
            &mut diagnostics.moves,
            rng,
        );
        if schedule.records(t) {
            samples.push(state.clone());
            diagnostics.distance_trace.push(dist);
        }
    }
    Ok(ChainOutput {
        samples,
        diagnostics,
    })
}

/// Chain with uniform insertions from `init` (the mode when absent).
pub fn sample_chain<O: Observation>(
    params: &ModelParams<O>,
    chain: &ChainConfig,
    init: Option<O>,
) -> Result<ChainOutput<O>> {
    let kernel = MoveKernel::uniform(&chain.moves, &params.bounds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(chain.seed);
    run_chain(params, &kernel, &chain.schedule, init, &mut rng)
}

/// Approximate draws from the sequence model. Informed insertions need data,
/// so use [`run_chain`] with a data-built kernel for those.
pub fn sis_mcmc_sample(
    params: &SisParams,
    chain: &ChainConfig,
    init: Option<InteractionSeq>,
) -> Result<ChainOutput<InteractionSeq>> {
    sample_chain(params, chain, init)
}

pub fn sim_mcmc_sample(
    params: &SimParams,
    chain: &ChainConfig,
    init: Option<InteractionMultiset>,
) -> Result<ChainOutput<InteractionMultiset>> {
    sample_chain(params, chain, init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distances::PathMetric;
    use crate::types::SpaceBounds;

    #[test]
    fn schedule_bookkeeping() {
        let s = Schedule::new(5, 3, 2).unwrap();
        assert_eq!(s.total_steps(), 3 + 4 * 2 + 1);
        let recorded: Vec<usize> = (1..=s.total_steps()).filter(|&t| s.records(t)).collect();
        assert_eq!(recorded, vec![4, 6, 8, 10, 12]);
        assert!(Schedule::new(0, 0, 1).is_err());
        assert!(Schedule::new(1, 0, 0).is_err());
    }

    #[test]
    fn step_count_matches_schedule() {
        let b = SpaceBounds::new(3, 3, 3).unwrap();
        let mode = InteractionSeq::from_vecs(vec![vec![0, 1], vec![2]]);
        let params = SisParams::new(mode, 1.0, PathMetric::Lsp, b).unwrap();
        let chain = ChainConfig {
            schedule: Schedule::new(7, 11, 3).unwrap(),
            seed: 1,
            moves: MoveConfig::default(),
        };
        let out = sis_mcmc_sample(&params, &chain, None).unwrap();
        assert_eq!(out.samples.len(), 7);
        let m = &out.diagnostics.moves;
        assert_eq!(
            m.edit_allocation.proposed + m.path_insert_delete.proposed,
            chain.schedule.total_steps()
        );
        assert!(out.samples.iter().all(|s| in_support(s, &b)));
    }

    #[test]
    fn huge_dispersion_stays_at_mode() {
        let b = SpaceBounds::new(2, 2, 2).unwrap();
        let mode = InteractionMultiset::from_vecs(vec![vec![0, 1]]);
        let params = SimParams::new(mode.clone(), 50.0, PathMetric::Lsp, b).unwrap();
        let chain = ChainConfig {
            schedule: Schedule::new(2000, 0, 1).unwrap(),
            seed: 3,
            moves: MoveConfig::default(),
        };
        let out = sim_mcmc_sample(&params, &chain, None).unwrap();
        let at_mode = out.samples.iter().filter(|s| **s == mode).count();
        assert!(at_mode as f64 >= 0.99 * 2000.0);
    }

    #[test]
    fn closer_proposals_with_balanced_ratio_are_accepted() {
        let b = SpaceBounds::new(3, 3, 3).unwrap();
        let mode = InteractionSeq::from_vecs(vec![vec![0, 1]]);
        let params = SisParams::new(mode.clone(), 2.0, PathMetric::Lsp, b).unwrap();
        let cur = InteractionSeq::from_vecs(vec![vec![0, 2]]);
        let lh = log_acceptance(&params, &cur, 2, &mode, 0, 0.0);
        assert!(lh > 0.0 && accept(lh, &mut ChaCha8Rng::seed_from_u64(0)));
        assert_eq!(log_acceptance(&params, &cur, 2, &cur, 2, 0.0), 0.0);
        let outside = InteractionSeq::from_vecs(vec![vec![0, 1, 2, 0]]);
        assert_eq!(
            log_acceptance(&params, &cur, 2, &outside, 2, 0.0),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn multiset_ordering_term() {
        let b = SpaceBounds::new(3, 3, 3).unwrap();
        let mode = InteractionMultiset::from_vecs(vec![vec![0]]);
        let params = SimParams::new(mode, 1.0, PathMetric::Lsp, b).unwrap();
        let distinct = InteractionMultiset::from_vecs(vec![vec![0], vec![1]]);
        let dup = InteractionMultiset::from_vecs(vec![vec![0], vec![0]]);
        // A(distinct) = 2, A(dup) = 1
        let lh = log_acceptance(&params, &distinct, 0, &dup, 0, 0.0);
        assert!((lh - 2f64.ln()).abs() < 1e-12);
        let other = InteractionMultiset::from_vecs(vec![vec![2], vec![1]]);
        assert_eq!(log_acceptance(&params, &distinct, 0, &other, 0, 0.0), 0.0);
    }
}
