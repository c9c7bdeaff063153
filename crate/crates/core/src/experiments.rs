//! Simulation studies: posterior concentration as the sample size grows,
//! sensitivity to the structure of the true mode, and missing-entry
//! prediction. Also the Hollywood `alpha` selection utility.
//!
//! Every (setting, n, repetition) cell gets its own seed derived from the
//! master seed and the cell index, so results do not depend on scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distances::PathMetric;
use crate::error::{invalid, Result};
use crate::models::{hollywood_sample, HollywoodParams, ModelParams, TrPoisson};
use crate::moves::MoveKernel;
use crate::posterior::{fit, map_vertex, posterior_predictive, true_predictive, PosteriorConfig};
use crate::samplers::{run_chain, Schedule};
use crate::types::{vertex_count, InteractionMultiset, InteractionSeq, Observation, SpaceBounds};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Sis,
    Sim,
}

/// How true modes are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthConfig {
    pub alpha: f64,
    /// Number of paths in each true mode.
    pub paths: usize,
    pub length: TrPoisson,
}

/// Chain used to simulate observations from the true model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataChain {
    pub burn_in: usize,
    pub lag: usize,
}

impl Default for DataChain {
    fn default() -> Self {
        Self {
            burn_in: 200,
            lag: 10,
        }
    }
}

fn default_repetitions() -> usize {
    10
}

fn default_n_test() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub bounds: SpaceBounds,
    #[serde(default)]
    pub model: ModelKind,
    pub inner: PathMetric,
    #[serde(default)]
    pub gamma_true: Vec<f64>,
    /// Hollywood `alpha` grid for the structure study.
    #[serde(default)]
    pub alphas: Vec<f64>,
    pub n: Vec<usize>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Test observations per cell in the predictive study.
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    pub truth: TruthConfig,
    #[serde(default)]
    pub data: DataChain,
    /// Posterior settings; `inner` and `seed` are overridden per cell.
    pub posterior: PosteriorConfig,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; all available cores when absent.
    #[serde(default)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StudyKind {
    Concentration,
    Structure,
    Predictive,
}

impl StudyConfig {
    pub fn validate(&self, kind: StudyKind) -> Result<()> {
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(invalid("n grid must be non-empty and positive"));
        }
        if self.repetitions == 0 {
            return Err(invalid("repetitions must be at least 1"));
        }
        match kind {
            StudyKind::Structure if self.alphas.is_empty() => {
                return Err(invalid("structure study needs a non-empty alphas grid"))
            }
            StudyKind::Concentration | StudyKind::Predictive if self.gamma_true.is_empty() => {
                return Err(invalid("study needs a non-empty gamma_true grid"))
            }
            _ => {}
        }
        if self.gamma_true.iter().any(|&g| !(g > 0.0)) {
            return Err(invalid("gamma_true values must be positive"));
        }
        if kind == StudyKind::Predictive && self.n_test == 0 {
            return Err(invalid("n_test must be at least 1"));
        }
        if self.truth.paths == 0 || self.truth.paths > self.bounds.l {
            return Err(invalid("truth.paths must lie in 1..=L"));
        }
        if self.truth.length.min() == 0 || self.truth.length.max() > self.bounds.k {
            return Err(invalid("truth.length must lie within 1..=K"));
        }
        if self.data.lag == 0 {
            return Err(invalid("data lag must be at least 1"));
        }
        self.posterior.validate()
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.threads {
            b = b.num_threads(t);
        }
        b.build().map_err(|e| invalid(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub gamma_true: f64,
    pub n: usize,
    pub rep: usize,
    pub d_bar: f64,
    pub gamma_bar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureRow {
    pub alpha: f64,
    pub n: usize,
    pub rep: usize,
    pub d_bar: f64,
    pub gamma_bar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictiveRow {
    pub gamma_true: f64,
    pub n: usize,
    pub rep: usize,
    pub acc_posterior: f64,
    pub acc_true: f64,
}

/// Acceptance rates of one cell's posterior chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellDiagnostics {
    pub setting: f64,
    pub n: usize,
    pub rep: usize,
    pub gamma_acceptance: f64,
    pub edit_acceptance: f64,
    pub path_acceptance: f64,
}

#[derive(Clone, Debug)]
pub struct StudyOutput<R> {
    pub rows: Vec<R>,
    pub diagnostics: Vec<CellDiagnostics>,
}

/// Seed for cell `counter`, independent of execution order.
pub fn cell_seed(master: u64, counter: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(counter);
    rng.next_u64()
}

fn true_mode(cfg: &StudyConfig, alpha: f64, rng: &mut ChaCha8Rng) -> Result<InteractionSeq> {
    let params = HollywoodParams::finite(alpha, cfg.bounds.v, cfg.truth.length.clone())?;
    hollywood_sample(&params, cfg.truth.paths, rng)
}

fn simulate<O: Observation>(
    cfg: &StudyConfig,
    mode: &O,
    gamma: f64,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<O>> {
    let params = ModelParams::new(mode.clone(), gamma, cfg.inner, cfg.bounds)?;
    let kernel = MoveKernel::uniform(&cfg.posterior.moves, &cfg.bounds)?;
    let schedule = Schedule::new(n, cfg.data.burn_in, cfg.data.lag)?;
    Ok(run_chain(&params, &kernel, &schedule, None, rng)?.samples)
}

struct CellFit {
    d_bar: f64,
    gamma_bar: f64,
    diag: [f64; 3],
}

fn fit_cell<O: Observation>(
    cfg: &StudyConfig,
    truth: &O,
    data: &[O],
    seed: u64,
) -> Result<(CellFit, crate::posterior::PosteriorChain<O>)> {
    let mut pcfg = cfg.posterior.clone();
    pcfg.inner = cfg.inner;
    pcfg.seed = seed;
    let chain = fit(data, cfg.bounds, None, &pcfg)?;
    let m = chain.len() as f64;
    let d_bar = chain
        .samples
        .iter()
        .map(|s| s.mode.distance(truth, cfg.inner) as f64)
        .sum::<f64>()
        / m;
    let gamma_bar = chain.samples.iter().map(|s| s.gamma).sum::<f64>() / m;
    let d = &chain.diagnostics;
    let diag = [
        d.gamma.acceptance_rate(),
        d.mode.edit_allocation.acceptance_rate(),
        d.mode.path_insert_delete.acceptance_rate(),
    ];
    Ok((
        CellFit {
            d_bar,
            gamma_bar,
            diag,
        },
        chain,
    ))
}

#[derive(Clone, Copy)]
struct Cell {
    index: usize,
    setting: f64,
    n: usize,
    rep: usize,
}

fn cells(settings: &[f64], ns: &[usize], reps: usize) -> Vec<Cell> {
    let mut out = Vec::new();
    for &setting in settings {
        for &n in ns {
            for rep in 0..reps {
                out.push(Cell {
                    index: out.len(),
                    setting,
                    n,
                    rep,
                });
            }
        }
    }
    out
}

fn diag_row(c: &Cell, f: &CellFit) -> CellDiagnostics {
    CellDiagnostics {
        setting: c.setting,
        n: c.n,
        rep: c.rep,
        gamma_acceptance: f.diag[0],
        edit_acceptance: f.diag[1],
        path_acceptance: f.diag[2],
    }
}

fn as_model<O: Observation>(s: InteractionSeq) -> O {
    O::from_paths(s.into_paths())
}

fn concentration<O: Observation>(cfg: &StudyConfig) -> Result<StudyOutput<ConcentrationRow>> {
    // one true mode shared by every cell
    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(cfg.seed, u64::MAX));
    let truth: O = as_model(true_mode(cfg, cfg.truth.alpha, &mut rng)?);
    let grid = cells(&cfg.gamma_true, &cfg.n, cfg.repetitions);
    let results: Result<Vec<_>> = cfg.pool()?.install(|| {
        grid.par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(cfg.seed, c.index as u64));
                let data = simulate(cfg, &truth, c.setting, c.n, &mut rng)?;
                let (f, _) = fit_cell(cfg, &truth, &data, rng.next_u64())?;
                let row = ConcentrationRow {
                    gamma_true: c.setting,
                    n: c.n,
                    rep: c.rep,
                    d_bar: f.d_bar,
                    gamma_bar: f.gamma_bar,
                };
                Ok((row, diag_row(c, &f)))
            })
            .collect()
    });
    let (rows, diagnostics) = results?.into_iter().unzip();
    Ok(StudyOutput { rows, diagnostics })
}

fn structure<O: Observation>(cfg: &StudyConfig) -> Result<StudyOutput<StructureRow>> {
    let gamma = *cfg
        .gamma_true
        .first()
        .ok_or_else(|| invalid("structure study needs gamma_true[0] for the data"))?;
    let grid = cells(&cfg.alphas, &cfg.n, cfg.repetitions);
    let results: Result<Vec<_>> = cfg.pool()?.install(|| {
        grid.par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(cfg.seed, c.index as u64));
                let truth: O = as_model(true_mode(cfg, c.setting, &mut rng)?);
                let data = simulate(cfg, &truth, gamma, c.n, &mut rng)?;
                let (f, _) = fit_cell(cfg, &truth, &data, rng.next_u64())?;
                let row = StructureRow {
                    alpha: c.setting,
                    n: c.n,
                    rep: c.rep,
                    d_bar: f.d_bar,
                    gamma_bar: f.gamma_bar,
                };
                Ok((row, diag_row(c, &f)))
            })
            .collect()
    });
    let (rows, diagnostics) = results?.into_iter().unzip();
    Ok(StudyOutput { rows, diagnostics })
}

/// Fraction of test entries whose MAP fill-in equals the held-out value,
/// under the true predictive and the posterior predictive. Entries are
/// visited path by path, left to right.
pub fn predictive_accuracy<O: Observation>(
    truth: &ModelParams<O>,
    chain: &crate::posterior::PosteriorChain<O>,
    test: &[O],
) -> Result<(f64, f64)> {
    let (mut hit_true, mut hit_post, mut total) = (0usize, 0usize, 0usize);
    for obs in test {
        for (i, path) in obs.paths().iter().enumerate() {
            for (j, &actual) in path.iter().enumerate() {
                let pt = true_predictive(truth, obs, (i, j))?;
                let pp = posterior_predictive(chain, obs, (i, j), truth.inner, truth.bounds.v)?;
                hit_true += usize::from(map_vertex(&pt) == actual);
                hit_post += usize::from(map_vertex(&pp) == actual);
                total += 1;
            }
        }
    }
    let t = total.max(1) as f64;
    Ok((hit_post as f64 / t, hit_true as f64 / t))
}

fn predictive<O: Observation>(cfg: &StudyConfig) -> Result<StudyOutput<PredictiveRow>> {
    let grid = cells(&cfg.gamma_true, &cfg.n, cfg.repetitions);
    let results: Result<Vec<_>> = cfg.pool()?.install(|| {
        grid.par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(cfg.seed, c.index as u64));
                let truth: O = as_model(true_mode(cfg, cfg.truth.alpha, &mut rng)?);
                let all = simulate(cfg, &truth, c.setting, c.n + cfg.n_test, &mut rng)?;
                let (train, test) = all.split_at(c.n);
                let (f, chain) = fit_cell(cfg, &truth, train, rng.next_u64())?;
                let params = ModelParams::new(truth, c.setting, cfg.inner, cfg.bounds)?;
                let (acc_posterior, acc_true) = predictive_accuracy(&params, &chain, test)?;
                let row = PredictiveRow {
                    gamma_true: c.setting,
                    n: c.n,
                    rep: c.rep,
                    acc_posterior,
                    acc_true,
                };
                Ok((row, diag_row(c, &f)))
            })
            .collect()
    });
    let (rows, diagnostics) = results?.into_iter().unzip();
    Ok(StudyOutput { rows, diagnostics })
}

/// Rows `(gamma_true, n, rep, d_bar, gamma_bar)` for a fixed true mode.
pub fn run_concentration(cfg: &StudyConfig) -> Result<StudyOutput<ConcentrationRow>> {
    cfg.validate(StudyKind::Concentration)?;
    match cfg.model {
        ModelKind::Sis => concentration::<InteractionSeq>(cfg),
        ModelKind::Sim => concentration::<InteractionMultiset>(cfg),
    }
}

/// Rows `(alpha, n, rep, d_bar, gamma_bar)`, with a fresh true mode per cell
/// and data dispersion `gamma_true[0]`.
pub fn run_structure(cfg: &StudyConfig) -> Result<StudyOutput<StructureRow>> {
    cfg.validate(StudyKind::Structure)?;
    match cfg.model {
        ModelKind::Sis => structure::<InteractionSeq>(cfg),
        ModelKind::Sim => structure::<InteractionMultiset>(cfg),
    }
}

/// Rows `(gamma_true, n, rep, acc_posterior, acc_true)`, with a fresh true
/// mode per cell and `n_test` held-out observations.
pub fn run_predictive(cfg: &StudyConfig) -> Result<StudyOutput<PredictiveRow>> {
    cfg.validate(StudyKind::Predictive)?;
    match cfg.model {
        ModelKind::Sis => predictive::<InteractionSeq>(cfg),
        ModelKind::Sim => predictive::<InteractionMultiset>(cfg),
    }
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSelectConfig {
    #[serde(rename = "V")]
    pub v: usize,
    pub alphas: Vec<f64>,
    pub paths: usize,
    pub length: TrPoisson,
    pub draws: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Mean over draws of the 95% quantile of per-vertex counts, for each alpha
/// in the grid.
pub fn alpha_quantile_table(cfg: &AlphaSelectConfig) -> Result<Vec<(f64, f64)>> {
    if cfg.alphas.is_empty() || cfg.draws == 0 {
        return Err(invalid("alpha grid and draws must be non-empty"));
    }
    cfg.alphas
        .iter()
        .enumerate()
        .map(|(k, &alpha)| {
            let params = HollywoodParams::finite(alpha, cfg.v, cfg.length.clone())?;
            let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(cfg.seed, k as u64));
            let mut total = 0.0;
            for _ in 0..cfg.draws {
                let s = hollywood_sample(&params, cfg.paths, &mut rng)?;
                let counts: Vec<f64> = (0..cfg.v).map(|v| vertex_count(&s, v) as f64).collect();
                total += quantile(&counts, 0.95);
            }
            Ok((alpha, total / cfg.draws as f64))
        })
        .collect()
}

/// Inverts a piecewise-linear `(alpha, value)` table at each target. The
/// first segment containing the target is used.
pub fn interpolate_alphas(table: &[(f64, f64)], targets: &[f64]) -> Result<Vec<f64>> {
    let mut t = table.to_vec();
    t.sort_by(|a, b| a.0.total_cmp(&b.0));
    targets
        .iter()
        .map(|&y| {
            if let Some(&(a, _)) = t.iter().find(|&&(_, v)| v == y) {
                return Ok(a);
            }
            for w in t.windows(2) {
                let ((a0, v0), (a1, v1)) = (w[0], w[1]);
                if (v0 - y) * (v1 - y) < 0.0 {
                    return Ok(a0 + (y - v0) / (v1 - v0) * (a1 - a0));
                }
            }
            Err(invalid(format!(
                "target {y} lies outside the simulated range"
            )))
        })
        .collect()
}

pub fn select_alphas(targets: &[f64], cfg: &AlphaSelectConfig) -> Result<Vec<f64>> {
    interpolate_alphas(&alpha_quantile_table(cfg)?, targets)
}

/// Median of two metric columns per `(setting, n)` group, in first-seen
/// order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub setting: f64,
    pub n: usize,
    pub count: usize,
    pub median_a: f64,
    pub median_b: f64,
}

pub fn summarize(rows: &[(f64, usize, f64, f64)]) -> Vec<SummaryRow> {
    let mut keys: Vec<(f64, usize)> = Vec::new();
    for &(s, n, _, _) in rows {
        if !keys.contains(&(s, n)) {
            keys.push((s, n));
        }
    }
    keys.into_iter()
        .map(|(s, n)| {
            let (a, b): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.0 == s && r.1 == n)
                .map(|r| (r.2, r.3))
                .unzip();
            SummaryRow {
                setting: s,
                n,
                count: a.len(),
                median_a: median(&a),
                median_b: median(&b),
            }
        })
        .collect()
}
