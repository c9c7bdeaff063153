//! Posterior inference for the mode and dispersion of the sequence and
//! multiset models.
//!
//! Each outer iteration makes an exchange update of the dispersion followed by
//! an involutive exchange update of the mode. Both updates draw an auxiliary
//! dataset of the same size as the observed one, either exactly (by
//! enumerating a small space) or from an inner MCMC chain.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distances::{frechet_mean, PathMetric};
use crate::error::{invalid, Result};
use crate::models::{EnumeratedSpace, ModelParams, DEFAULT_ENUMERATION_CAP};
use crate::moves::{MoveConfig, MoveKernel};
use crate::samplers::{accept, run_chain, MoveDiagnostics, MoveStats, Schedule};
use crate::types::{in_support, InteractionMultiset, InteractionSeq, Observation, SpaceBounds};

/// Prior on the dispersion. Gamma priors take exactly one of `rate` or
/// `scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DispersionPrior {
    Gamma {
        shape: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<f64>,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
}

impl DispersionPrior {
    pub fn gamma_rate(shape: f64, rate: f64) -> Self {
        Self::Gamma {
            shape,
            rate: Some(rate),
            scale: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Gamma { shape, rate, scale } => {
                if !(shape > 0.0) {
                    return Err(invalid("gamma prior shape must be positive"));
                }
                match (rate, scale) {
                    (Some(r), None) if r > 0.0 => Ok(()),
                    (None, Some(s)) if s > 0.0 => Ok(()),
                    _ => Err(invalid(
                        "gamma prior needs exactly one positive `rate` or `scale`",
                    )),
                }
            }
            Self::Uniform { lo, hi } => {
                if lo >= 0.0 && hi > lo && hi.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("uniform prior needs 0 <= lo < hi"))
                }
            }
        }
    }

    fn rate(&self) -> f64 {
        match *self {
            Self::Gamma { rate: Some(r), .. } => r,
            Self::Gamma { scale: Some(s), .. } => 1.0 / s,
            _ => f64::NAN,
        }
    }

    /// Log-density up to an additive constant; negative infinity outside the
    /// support.
    pub fn ln_density(&self, gamma: f64) -> f64 {
        if !(gamma > 0.0) {
            return f64::NEG_INFINITY;
        }
        match *self {
            Self::Gamma { shape, .. } => (shape - 1.0) * gamma.ln() - self.rate() * gamma,
            Self::Uniform { lo, hi } => {
                if gamma >= lo && gamma <= hi {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Gamma { shape, .. } => shape / self.rate(),
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }
}

fn default_cap() -> usize {
    DEFAULT_ENUMERATION_CAP
}

/// Source of the auxiliary datasets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum AuxSampling {
    /// Inner MCMC chain started at the mode, thinned by `burn_in` and `lag`.
    Mcmc { burn_in: usize, lag: usize },
    /// Exact draws by enumerating the bounded space (tiny spaces only).
    Exact {
        #[serde(default = "default_cap")]
        cap: usize,
    },
}

fn default_gamma0() -> f64 {
    0.1
}

fn default_gamma_step() -> f64 {
    0.2
}

fn default_inner() -> PathMetric {
    PathMetric::Lsp
}

fn default_aux() -> AuxSampling {
    AuxSampling::Mcmc {
        burn_in: 50,
        lag: 5,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorConfig {
    #[serde(default = "default_inner")]
    pub inner: PathMetric,
    /// Dispersion of the prior on the mode (centred at the prior mode).
    #[serde(default = "default_gamma0")]
    pub gamma0: f64,
    pub dispersion: DispersionPrior,
    /// Half-width of the reflected uniform proposal for the dispersion.
    #[serde(default = "default_gamma_step")]
    pub gamma_step: f64,
    /// Starting dispersion; defaults to the prior mean.
    #[serde(default)]
    pub init_gamma: Option<f64>,
    #[serde(default)]
    pub moves: MoveConfig,
    #[serde(default = "default_aux")]
    pub aux: AuxSampling,
    #[serde(flatten)]
    pub schedule: Schedule,
    #[serde(default)]
    pub seed: u64,
}

impl PosteriorConfig {
    pub fn validate(&self) -> Result<()> {
        self.dispersion.validate()?;
        self.schedule.validate()?;
        self.moves.validate()?;
        if !(self.gamma0 >= 0.0) {
            return Err(invalid("gamma0 must be non-negative"));
        }
        if !(self.gamma_step > 0.0) {
            return Err(invalid("gamma_step must be positive"));
        }
        if let AuxSampling::Mcmc { lag, .. } = self.aux {
            if lag == 0 {
                return Err(invalid("auxiliary lag must be at least 1"));
            }
        }
        Ok(())
    }
}

/// Everything except the dispersion prior that the mode prior needs.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorSpec<O> {
    pub mode: O,
    pub gamma0: f64,
    pub dispersion: DispersionPrior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSample<O> {
    pub mode: O,
    pub gamma: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDiagnostics {
    pub gamma: MoveStats,
    pub mode: MoveDiagnostics,
    /// Distance from each recorded mode to the prior mode.
    pub distance_trace: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorChain<O> {
    pub format_version: u32,
    pub samples: Vec<PosteriorSample<O>>,
    pub diagnostics: PosteriorDiagnostics,
}

impl<O: Clone> PosteriorChain<O> {
    pub fn modes(&self) -> Vec<O> {
        self.samples.iter().map(|s| s.mode.clone()).collect()
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.gamma).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

enum AuxSource<O> {
    Mcmc { burn_in: usize, lag: usize },
    Exact(EnumeratedSpace<O>),
}

/// State shared by the two exchange updates.
pub struct ExchangeSampler<'a, O> {
    data: &'a [O],
    bounds: SpaceBounds,
    inner: PathMetric,
    prior: PriorSpec<O>,
    gamma_step: f64,
    kernel: MoveKernel,
    aux: AuxSource<O>,
}

impl<'a, O: Observation> ExchangeSampler<'a, O> {
    pub fn new(
        data: &'a [O],
        bounds: SpaceBounds,
        prior: PriorSpec<O>,
        cfg: &PosteriorConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        prior.dispersion.validate()?;
        if data.is_empty() {
            return Err(invalid("posterior needs at least one observation"));
        }
        if let Some(i) = data.iter().position(|x| !in_support(x, &bounds)) {
            return Err(invalid(format!(
                "observation {i} lies outside the bounded space"
            )));
        }
        if !in_support(&prior.mode, &bounds) {
            return Err(invalid("prior mode lies outside the bounded space"));
        }
        let kernel = MoveKernel::new(&cfg.moves, &bounds, data)?;
        let aux = match cfg.aux {
            AuxSampling::Mcmc { burn_in, lag } => AuxSource::Mcmc { burn_in, lag },
            AuxSampling::Exact { cap } => {
                AuxSource::Exact(EnumeratedSpace::new(&bounds, cfg.inner, cap)?)
            }
        };
        Ok(Self {
            data,
            bounds,
            inner: cfg.inner,
            prior,
            gamma_step: cfg.gamma_step,
            kernel,
            aux,
        })
    }

    pub fn kernel(&self) -> &MoveKernel {
        &self.kernel
    }

    pub fn data_distance(&self, mode: &O) -> f64 {
        self.data
            .iter()
            .map(|x| x.distance(mode, self.inner) as f64)
            .sum()
    }

    /// Draws `n` auxiliary observations at `(mode, gamma)`.
    pub fn draw_aux<R: Rng + ?Sized>(&self, mode: &O, gamma: f64, rng: &mut R) -> Result<Vec<O>> {
        let n = self.data.len();
        match &self.aux {
            AuxSource::Exact(space) => Ok(space.sample(mode, gamma, n, rng)),
            AuxSource::Mcmc { burn_in, lag } => {
                let params = ModelParams::new(mode.clone(), gamma, self.inner, self.bounds)?;
                let schedule = Schedule::new(n, *burn_in, *lag)?;
                Ok(run_chain(&params, &self.kernel, &schedule, None, rng)?.samples)
            }
        }
    }

    /// Reflected uniform proposal for the dispersion.
    pub fn propose_gamma<R: Rng + ?Sized>(&self, gamma: f64, rng: &mut R) -> f64 {
        let raw = gamma + rng.random_range(-self.gamma_step..self.gamma_step);
        raw.abs()
    }

    /// Exchange update of the dispersion. `data_dist` is the summed distance
    /// from the data to `mode`.
    pub fn gamma_step<R: Rng + ?Sized>(
        &self,
        mode: &O,
        gamma: f64,
        data_dist: f64,
        rng: &mut R,
        aux_rng: &mut R,
    ) -> Result<(f64, bool)> {
        let proposed = self.propose_gamma(gamma, rng);
        let prior_ratio =
            self.prior.dispersion.ln_density(proposed) - self.prior.dispersion.ln_density(gamma);
        if !prior_ratio.is_finite() {
            return Ok((gamma, false));
        }
        let aux = self.draw_aux(mode, proposed, aux_rng)?;
        let aux_dist: f64 = aux
            .iter()
            .map(|y| y.distance(mode, self.inner) as f64)
            .sum();
        let log_h = -(proposed - gamma) * (data_dist - aux_dist) + prior_ratio;
        if accept(log_h, rng) {
            Ok((proposed, true))
        } else {
            Ok((gamma, false))
        }
    }

    /// Involutive exchange update of the mode. Returns the new mode, its
    /// summed data distance and whether the proposal was accepted.
    pub fn mode_step<R: Rng + ?Sized>(
        &self,
        mode: &O,
        gamma: f64,
        data_dist: f64,
        stats: &mut MoveDiagnostics,
        rng: &mut R,
        aux_rng: &mut R,
    ) -> Result<(O, f64, bool)> {
        let prop = self.kernel.propose(mode.paths(), rng);
        let s = stats.get_mut(prop.kind);
        s.proposed += 1;
        let cand = O::from_paths(prop.paths);
        if !in_support(&cand, &self.bounds) {
            s.out_of_support += 1;
            return Ok((mode.clone(), data_dist, false));
        }
        let aux = self.draw_aux(&cand, gamma, aux_rng)?;
        let cand_data = self.data_distance(&cand);
        let (mut aux_cur, mut aux_cand) = (0.0, 0.0);
        for y in &aux {
            aux_cur += y.distance(mode, self.inner) as f64;
            aux_cand += y.distance(&cand, self.inner) as f64;
        }
        let prior_cur = mode.distance(&self.prior.mode, self.inner) as f64;
        let prior_cand = cand.distance(&self.prior.mode, self.inner) as f64;
        let log_h = -gamma * (cand_data - data_dist)
            - gamma * (aux_cur - aux_cand)
            - self.prior.gamma0 * (prior_cand - prior_cur)
            + prop.log_ratio
            + mode.log_orderings()
            - cand.log_orderings();
        if accept(log_h, rng) {
            s.accepted += 1;
            Ok((cand, cand_data, true))
        } else {
            Ok((mode.clone(), data_dist, false))
        }
    }
}

/// Stand-alone dispersion update; see [`ExchangeSampler::gamma_step`].
pub fn gamma_exchange_step<O: Observation, R: Rng + ?Sized>(
    sampler: &ExchangeSampler<'_, O>,
    mode: &O,
    gamma: f64,
    rng: &mut R,
    aux_rng: &mut R,
) -> Result<f64> {
    let d = sampler.data_distance(mode);
    Ok(sampler.gamma_step(mode, gamma, d, rng, aux_rng)?.0)
}

/// Stand-alone mode update for either observation type.
pub fn mode_iexchange_step<O: Observation, R: Rng + ?Sized>(
    sampler: &ExchangeSampler<'_, O>,
    mode: &O,
    gamma: f64,
    rng: &mut R,
    aux_rng: &mut R,
) -> Result<O> {
    let d = sampler.data_distance(mode);
    let mut stats = MoveDiagnostics::default();
    Ok(sampler
        .mode_step(mode, gamma, d, &mut stats, rng, aux_rng)?
        .0)
}

pub fn mode_iexchange_step_sis<R: Rng + ?Sized>(
    sampler: &ExchangeSampler<'_, InteractionSeq>,
    mode: &InteractionSeq,
    gamma: f64,
    rng: &mut R,
    aux_rng: &mut R,
) -> Result<InteractionSeq> {
    mode_iexchange_step(sampler, mode, gamma, rng, aux_rng)
}

pub fn mode_iexchange_step_sim<R: Rng + ?Sized>(
    sampler: &ExchangeSampler<'_, InteractionMultiset>,
    mode: &InteractionMultiset,
    gamma: f64,
    rng: &mut R,
    aux_rng: &mut R,
) -> Result<InteractionMultiset> {
    mode_iexchange_step(sampler, mode, gamma, rng, aux_rng)
}

/// Runs the component-wise sampler. The prior mode defaults to the sample
/// Fréchet mean of the data. The outer chain and each auxiliary draw use
/// separate ChaCha streams of the configured seed.
pub fn fit<O: Observation>(
    data: &[O],
    bounds: SpaceBounds,
    prior_mode: Option<O>,
    cfg: &PosteriorConfig,
) -> Result<PosteriorChain<O>> {
    if data.is_empty() {
        return Err(invalid("posterior needs at least one observation"));
    }
    let prior_mode = match prior_mode {
        Some(m) => m,
        None => frechet_mean(data, cfg.inner).expect("non-empty").clone(),
    };
    let prior = PriorSpec {
        mode: prior_mode.clone(),
        gamma0: cfg.gamma0,
        dispersion: cfg.dispersion.clone(),
    };
    let sampler = ExchangeSampler::new(data, bounds, prior, cfg)?;
    let mut gamma = cfg.init_gamma.unwrap_or_else(|| cfg.dispersion.mean());
    if !cfg.dispersion.ln_density(gamma).is_finite() {
        return Err(invalid(format!(
            "initial dispersion {gamma} lies outside the prior support"
        )));
    }
    let mut mode = prior_mode.clone();
    let mut data_dist = sampler.data_distance(&mode);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut aux_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut diagnostics = PosteriorDiagnostics::default();
    let mut samples = Vec::with_capacity(cfg.schedule.iterations);
    for t in 1..=cfg.schedule.total_steps() {
        aux_rng.set_stream(t as u64);
        let (g, ok) = sampler.gamma_step(&mode, gamma, data_dist, &mut rng, &mut aux_rng)?;
        diagnostics.gamma.proposed += 1;
        if ok {
            diagnostics.gamma.accepted += 1;
        }
        gamma = g;
        let (m, d, _) = sampler.mode_step(
            &mode,
            gamma,
            data_dist,
            &mut diagnostics.mode,
            &mut rng,
            &mut aux_rng,
        )?;
        mode = m;
        data_dist = d;
        if cfg.schedule.records(t) {
            diagnostics
                .distance_trace
                .push(mode.distance(&prior_mode, cfg.inner));
            samples.push(PosteriorSample {
                mode: mode.clone(),
                gamma,
            });
        }
    }
    Ok(PosteriorChain {
        format_version: crate::types::FORMAT_VERSION,
        samples,
        diagnostics,
    })
}

/// Fréchet mean of the sampled modes and arithmetic mean of the dispersions.
pub fn point_estimates<O: Observation>(
    chain: &PosteriorChain<O>,
    inner: PathMetric,
) -> Result<(O, f64)> {
    if chain.is_empty() {
        return Err(invalid("empty posterior chain"));
    }
    let modes = chain.modes();
    let mode = frechet_mean(&modes, inner).expect("non-empty").clone();
    let gamma = chain.gammas().iter().sum::<f64>() / chain.len() as f64;
    Ok((mode, gamma))
}

fn check_position<O: Observation>(obs: &O, position: (usize, usize)) -> Result<()> {
    let (i, j) = position;
    match obs.paths().get(i) {
        Some(p) if j < p.len() => Ok(()),
        _ => Err(invalid(format!(
            "position ({i}, {j}) does not identify an entry"
        ))),
    }
}

/// Distances to `mode` of the observation with the entry at `position`
/// replaced by each vertex in turn.
fn fill_in_distances<O: Observation>(
    obs: &O,
    position: (usize, usize),
    v: usize,
    mode: &O,
    inner: PathMetric,
) -> Vec<usize> {
    let (i, j) = position;
    (0..v)
        .map(|x| {
            let mut paths = obs.paths().to_vec();
            let mut entries = paths[i].to_vec();
            entries[j] = x;
            paths[i] = entries.into();
            O::from_paths(paths).distance(mode, inner)
        })
        .collect()
}

fn softmin(dists: &[usize], gamma: f64) -> Vec<f64> {
    let lo = dists.iter().copied().min().unwrap_or(0) as f64;
    let w: Vec<f64> = dists
        .iter()
        .map(|&d| (-gamma * (d as f64 - lo)).exp())
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Distribution of one entry of `obs` given the rest, under the model.
pub fn true_predictive<O: Observation>(
    params: &ModelParams<O>,
    obs: &O,
    position: (usize, usize),
) -> Result<Vec<f64>> {
    check_position(obs, position)?;
    let d = fill_in_distances(obs, position, params.bounds.v, &params.mode, params.inner);
    Ok(softmin(&d, params.gamma))
}

/// Average of the model predictive over the posterior samples.
pub fn posterior_predictive<O: Observation>(
    chain: &PosteriorChain<O>,
    obs: &O,
    position: (usize, usize),
    inner: PathMetric,
    v: usize,
) -> Result<Vec<f64>> {
    check_position(obs, position)?;
    if chain.is_empty() {
        return Err(invalid("empty posterior chain"));
    }
    let mut cache: HashMap<&O, Vec<usize>> = HashMap::new();
    let mut out = vec![0.0; v];
    for s in &chain.samples {
        let d = cache
            .entry(&s.mode)
            .or_insert_with(|| fill_in_distances(obs, position, v, &s.mode, inner));
        for (o, p) in out.iter_mut().zip(softmin(d, s.gamma)) {
            *o += p;
        }
    }
    let m = chain.len() as f64;
    out.iter_mut().for_each(|x| *x /= m);
    Ok(out)
}

/// Most probable vertex; the smallest index wins ties.
pub fn map_vertex(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}
