//! Aggregated (multi)graphs, the majority-vote and rounded-mean baselines, and
//! the spherical network family over directed multigraphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distances::{frechet_mean_index, graph_distance, GraphMetric};
use crate::error::{invalid, Error, Result};
use crate::posterior::DispersionPrior;
use crate::samplers::{accept, MoveStats, Schedule};
use crate::types::Observation;

/// Directed multigraph stored as a row-major `v x v` count matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DirectedMultigraph {
    pub v: usize,
    pub counts: Vec<u64>,
}

impl DirectedMultigraph {
    pub fn empty(v: usize) -> Self {
        Self {
            v,
            counts: vec![0; v * v],
        }
    }

    pub fn from_counts(v: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != v * v {
            return Err(invalid(format!(
                "{} counts given for {v} vertices",
                counts.len()
            )));
        }
        Ok(Self { v, counts })
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let v = rows.len();
        if rows.iter().any(|r| r.len() != v) {
            return Err(invalid("adjacency rows must form a square matrix"));
        }
        Ok(Self {
            v,
            counts: rows.into_iter().flatten().collect(),
        })
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.v + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: u64) {
        self.counts[i * self.v + j] = x;
    }

    pub fn is_binary(&self) -> bool {
        self.counts.iter().all(|&x| x <= 1)
    }

    pub fn to_binary(&self) -> Self {
        Self {
            v: self.v,
            counts: self.counts.iter().map(|&x| u64::from(x > 0)).collect(),
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Non-zero entries as `(i, j, count)` in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(k, &c)| (k / self.v, k % self.v, c))
    }

    pub fn distance(&self, other: &Self, kind: GraphMetric) -> Result<u64> {
        if self.v != other.v {
            return Err(Error::VertexMismatch(self.v, other.v));
        }
        graph_distance(&self.counts, &other.counts, kind)
    }

    fn l1(&self, other: &Self) -> u64 {
        self.counts
            .iter()
            .zip(&other.counts)
            .map(|(&a, &b)| a.abs_diff(b))
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateKind {
    Graph,
    Multigraph,
}

/// Counts consecutive vertex pairs over all paths. Self-loops are kept.
pub fn aggregate<O: Observation>(
    obs: &O,
    v: usize,
    kind: AggregateKind,
) -> Result<DirectedMultigraph> {
    let mut g = DirectedMultigraph::empty(v);
    for path in obs.paths() {
        if let Some(&x) = path.iter().find(|&&x| x >= v) {
            return Err(invalid(format!("vertex {x} outside 0..{v}")));
        }
        for w in path.windows(2) {
            g.counts[w[0] * v + w[1]] += 1;
        }
    }
    Ok(match kind {
        AggregateKind::Multigraph => g,
        AggregateKind::Graph => g.to_binary(),
    })
}

fn same_size(graphs: &[DirectedMultigraph]) -> Result<usize> {
    let first = graphs.first().ok_or_else(|| invalid("no graphs given"))?;
    if let Some(g) = graphs.iter().find(|g| g.v != first.v) {
        return Err(Error::VertexMismatch(first.v, g.v));
    }
    Ok(first.v)
}

/// Edge present when observed in at least half of the graphs.
pub fn majority_vote(graphs: &[DirectedMultigraph]) -> Result<DirectedMultigraph> {
    let v = same_size(graphs)?;
    if graphs.iter().any(|g| !g.is_binary()) {
        return Err(Error::NonBinaryGraph);
    }
    let n = graphs.len() as u64;
    let counts = (0..v * v)
        .map(|k| {
            let s: u64 = graphs.iter().map(|g| g.counts[k]).sum();
            u64::from(2 * s >= n)
        })
        .collect();
    Ok(DirectedMultigraph { v, counts })
}

/// Entrywise mean rounded to the nearest integer, halves rounding up.
pub fn rounded_mean(graphs: &[DirectedMultigraph]) -> Result<DirectedMultigraph> {
    let v = same_size(graphs)?;
    let n = graphs.len() as u64;
    let counts = (0..v * v)
        .map(|k| {
            let s: u64 = graphs.iter().map(|g| g.counts[k]).sum();
            let (q, r) = (s / n, s % n);
            q + u64::from(2 * r >= n)
        })
        .collect();
    Ok(DirectedMultigraph { v, counts })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phi {
    #[default]
    Identity,
    Square,
}

impl Phi {
    pub fn apply(self, d: u64) -> f64 {
        let d = d as f64;
        match self {
            Phi::Identity => d,
            Phi::Square => d * d,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnfParams {
    pub mode: DirectedMultigraph,
    pub gamma: f64,
    pub phi: Phi,
}

impl SnfParams {
    pub fn new(mode: DirectedMultigraph, gamma: f64, phi: Phi) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(invalid("dispersion must be positive and finite"));
        }
        Ok(Self { mode, gamma, phi })
    }
}

pub fn snf_log_kernel(g: &DirectedMultigraph, params: &SnfParams) -> Result<f64> {
    let d = g.distance(&params.mode, GraphMetric::L1)?;
    Ok(-params.gamma * params.phi.apply(d))
}

/// Proposal on one multiplicity: a uniform non-zero step of size at most
/// `nu`, reflected at zero.
pub fn propose_multiplicity<R: Rng + ?Sized>(x: u64, nu: u64, rng: &mut R) -> u64 {
    let nu = nu as i64;
    let mut s = rng.random_range(-nu..nu);
    if s >= 0 {
        s += 1;
    }
    (x as i64 + s).unsigned_abs()
}

/// Probability that [`propose_multiplicity`] moves `x` to `y`. Not symmetric
/// next to zero, so callers use the ratio of both directions.
pub fn multiplicity_proposal_prob(x: u64, y: u64, nu: u64) -> f64 {
    let (x, y, nu) = (x as i64, y as i64, nu as i64);
    let ok = |s: i64| s != 0 && s.abs() <= nu;
    let mut hits = u32::from(ok(y - x));
    if y != 0 && ok(-y - x) {
        hits += 1;
    }
    hits as f64 / (2 * nu) as f64
}

fn log_proposal_ratio(x: u64, y: u64, nu: u64) -> f64 {
    (multiplicity_proposal_prob(y, x, nu) / multiplicity_proposal_prob(x, y, nu)).ln()
}

fn default_edge_step() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnfChainConfig {
    #[serde(flatten)]
    pub schedule: Schedule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_edge_step")]
    pub edge_step: u64,
    /// Largest allowed multiplicity; larger proposals are rejected.
    #[serde(default)]
    pub cap: Option<u64>,
}

fn run_snf_chain<R: Rng + ?Sized>(
    params: &SnfParams,
    schedule: &Schedule,
    edge_step: u64,
    cap: Option<u64>,
    init: DirectedMultigraph,
    stats: &mut MoveStats,
    rng: &mut R,
) -> Result<Vec<DirectedMultigraph>> {
    schedule.validate()?;
    if edge_step == 0 {
        return Err(invalid("edge_step must be at least 1"));
    }
    let mut g = init;
    let mut d = g.distance(&params.mode, GraphMetric::L1)?;
    let cells = g.counts.len();
    let mut out = Vec::with_capacity(schedule.iterations);
    for t in 1..=schedule.total_steps() {
        let k = rng.random_range(0..cells);
        let x = g.counts[k];
        let y = propose_multiplicity(x, edge_step, rng);
        stats.proposed += 1;
        if cap.is_some_and(|c| y > c) {
            stats.out_of_support += 1;
        } else {
            let m = params.mode.counts[k];
            let d_new = d - x.abs_diff(m) + y.abs_diff(m);
            let log_h = -params.gamma * (params.phi.apply(d_new) - params.phi.apply(d))
                + log_proposal_ratio(x, y, edge_step);
            if accept(log_h, rng) {
                stats.accepted += 1;
                g.counts[k] = y;
                d = d_new;
            }
        }
        if schedule.records(t) {
            out.push(g.clone());
        }
    }
    Ok(out)
}

/// Random-scan single-edge Metropolis-Hastings draws from the SNF model,
/// started at the mode.
pub fn snf_mcmc_sample(
    params: &SnfParams,
    cfg: &SnfChainConfig,
) -> Result<Vec<DirectedMultigraph>> {
    if let Some(c) = cfg.cap {
        if params.mode.counts.iter().any(|&x| x > c) {
            return Err(invalid("mode exceeds the multiplicity cap"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stats = MoveStats::default();
    run_snf_chain(
        params,
        &cfg.schedule,
        cfg.edge_step,
        cfg.cap,
        params.mode.clone(),
        &mut stats,
        &mut rng,
    )
}

fn default_gamma0() -> f64 {
    0.1
}

fn default_gamma_step() -> f64 {
    0.2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnfAuxConfig {
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "one")]
    pub lag: usize,
}

fn one() -> usize {
    1
}

impl Default for SnfAuxConfig {
    fn default() -> Self {
        Self { burn_in: 0, lag: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnfPosteriorConfig {
    /// Prior mode; defaults to the rounded mean of the data.
    #[serde(default)]
    pub prior_mode: Option<DirectedMultigraph>,
    #[serde(default = "default_gamma0")]
    pub gamma0: f64,
    pub dispersion: DispersionPrior,
    #[serde(default = "default_gamma_step")]
    pub gamma_step: f64,
    #[serde(default = "default_edge_step")]
    pub edge_step: u64,
    #[serde(default)]
    pub init_gamma: Option<f64>,
    #[serde(default)]
    pub phi: Phi,
    #[serde(default)]
    pub aux: SnfAuxConfig,
    #[serde(flatten)]
    pub schedule: Schedule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub cap: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnfSample {
    pub mode: DirectedMultigraph,
    pub gamma: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SnfDiagnostics {
    pub gamma: MoveStats,
    pub edges: MoveStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnfChain {
    pub format_version: u32,
    pub samples: Vec<SnfSample>,
    pub diagnostics: SnfDiagnostics,
}

struct SnfFitter<'a> {
    cfg: &'a SnfPosteriorConfig,
    prior_mode: DirectedMultigraph,
    aux_schedule: Schedule,
}

impl SnfFitter<'_> {
    fn phi_sum(&self, graphs: &[DirectedMultigraph], mode: &DirectedMultigraph) -> f64 {
        graphs.iter().map(|g| self.cfg.phi.apply(g.l1(mode))).sum()
    }

    fn draw_aux<R: Rng + ?Sized>(
        &self,
        mode: &DirectedMultigraph,
        gamma: f64,
        rng: &mut R,
    ) -> Result<Vec<DirectedMultigraph>> {
        let params = SnfParams::new(mode.clone(), gamma, self.cfg.phi)?;
        let mut stats = MoveStats::default();
        run_snf_chain(
            &params,
            &self.aux_schedule,
            self.cfg.edge_step,
            self.cfg.cap,
            mode.clone(),
            &mut stats,
            rng,
        )
    }
}

/// Exchange update of the dispersion followed by a full sweep of exchange
/// updates over the mode's edges, per outer iteration.
pub fn snf_fit(data: &[DirectedMultigraph], cfg: &SnfPosteriorConfig) -> Result<SnfChain> {
    let v = same_size(data)?;
    cfg.dispersion.validate()?;
    cfg.schedule.validate()?;
    if cfg.edge_step == 0 || !(cfg.gamma_step > 0.0) || !(cfg.gamma0 >= 0.0) || cfg.aux.lag == 0 {
        return Err(invalid(
            "edge_step, gamma_step and aux lag must be positive, gamma0 non-negative",
        ));
    }
    let prior_mode = match &cfg.prior_mode {
        Some(g) if g.v != v => return Err(Error::VertexMismatch(v, g.v)),
        Some(g) => g.clone(),
        None => rounded_mean(data)?,
    };
    if let Some(c) = cfg.cap {
        if data
            .iter()
            .chain([&prior_mode])
            .any(|g| g.counts.iter().any(|&x| x > c))
        {
            return Err(invalid("data or prior mode exceed the multiplicity cap"));
        }
    }
    let fitter = SnfFitter {
        cfg,
        prior_mode: prior_mode.clone(),
        aux_schedule: Schedule::new(data.len(), cfg.aux.burn_in, cfg.aux.lag)?,
    };
    let mut gamma = cfg.init_gamma.unwrap_or_else(|| cfg.dispersion.mean());
    if !cfg.dispersion.ln_density(gamma).is_finite() {
        return Err(invalid(format!(
            "initial dispersion {gamma} lies outside the prior support"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut aux_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stream = 0u64;
    let mut mode = prior_mode;
    let mut diagnostics = SnfDiagnostics::default();
    let mut samples = Vec::with_capacity(cfg.schedule.iterations);
    let phi = cfg.phi;
    for t in 1..=cfg.schedule.total_steps() {
        // dispersion
        let obs_sum = fitter.phi_sum(data, &mode);
        let proposed = (gamma + rng.random_range(-cfg.gamma_step..cfg.gamma_step)).abs();
        let prior_ratio = cfg.dispersion.ln_density(proposed) - cfg.dispersion.ln_density(gamma);
        diagnostics.gamma.proposed += 1;
        if prior_ratio.is_finite() {
            stream += 1;
            aux_rng.set_stream(stream);
            let aux = fitter.draw_aux(&mode, proposed, &mut aux_rng)?;
            let aux_sum = fitter.phi_sum(&aux, &mode);
            let log_h = -(proposed - gamma) * (obs_sum - aux_sum) + prior_ratio;
            if accept(log_h, &mut rng) {
                gamma = proposed;
                diagnostics.gamma.accepted += 1;
            }
        }
        // mode, one edge at a time
        for k in 0..mode.counts.len() {
            let x = mode.counts[k];
            let y = propose_multiplicity(x, cfg.edge_step, &mut rng);
            diagnostics.edges.proposed += 1;
            if cfg.cap.is_some_and(|c| y > c) {
                diagnostics.edges.out_of_support += 1;
                continue;
            }
            let mut cand = mode.clone();
            cand.counts[k] = y;
            stream += 1;
            aux_rng.set_stream(stream);
            let aux = fitter.draw_aux(&cand, gamma, &mut aux_rng)?;
            let log_h = -gamma * (fitter.phi_sum(data, &cand) - fitter.phi_sum(data, &mode))
                - gamma * (fitter.phi_sum(&aux, &mode) - fitter.phi_sum(&aux, &cand))
                - cfg.gamma0
                    * (phi.apply(cand.l1(&fitter.prior_mode))
                        - phi.apply(mode.l1(&fitter.prior_mode)))
                + log_proposal_ratio(x, y, cfg.edge_step);
            if accept(log_h, &mut rng) {
                mode = cand;
                diagnostics.edges.accepted += 1;
            }
        }
        if cfg.schedule.records(t) {
            samples.push(SnfSample {
                mode: mode.clone(),
                gamma,
            });
        }
    }
    Ok(SnfChain {
        format_version: crate::types::FORMAT_VERSION,
        samples,
        diagnostics,
    })
}

/// Fréchet mean (under L1) of the sampled modes and mean dispersion.
pub fn snf_point_estimate(chain: &SnfChain) -> Result<(DirectedMultigraph, f64)> {
    let modes: Vec<&DirectedMultigraph> = chain.samples.iter().map(|s| &s.mode).collect();
    let i = frechet_mean_index(modes.len(), |a, b| modes[a].l1(modes[b]) as f64)
        .ok_or_else(|| invalid("empty SNF chain"))?;
    let gamma = chain.samples.iter().map(|s| s.gamma).sum::<f64>() / modes.len() as f64;
    Ok((modes[i].clone(), gamma))
}

/// Writes `i,j,count` rows for the non-zero entries.
pub fn write_edge_csv<W: std::io::Write>(g: &DirectedMultigraph, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["i", "j", "count"])?;
    for (i, j, c) in g.edges() {
        wtr.serialize((i, j, c))?;
    }
    wtr.flush()?;
    Ok(())
}
