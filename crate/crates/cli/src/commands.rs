use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::Path as FsPath;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use intnet::distances::{distance_matrix, steinhaus, PathMetric};
use intnet::experiments::{
    alpha_quantile_table, interpolate_alphas, run_concentration, run_predictive, run_structure,
    summarize, AlphaSelectConfig, CellDiagnostics, StudyConfig, StudyKind,
};
use intnet::graphs::{
    aggregate, majority_vote, rounded_mean, snf_fit, snf_mcmc_sample, snf_point_estimate,
    write_edge_csv, AggregateKind, DirectedMultigraph, Phi, SnfChainConfig, SnfParams,
    SnfPosteriorConfig,
};
use intnet::ingest::{ingest, select_subset, IngestConfig};
use intnet::models::{hollywood_sample, HollywoodParams, ModelParams, TrPoisson};
use intnet::moves::MoveConfig;
use intnet::posterior::{fit, point_estimates, PosteriorChain, PosteriorConfig};
use intnet::samplers::{sample_chain, ChainConfig, MoveStats, Schedule};
use intnet::{Dataset, InteractionMultiset, InteractionSeq, Observation, Path, SpaceBounds};

use crate::{
    BaselineMethod, Cli, Command, FitModel, Inner, Metric, ModelArgs, PhiArg, SampleCommand, Study,
};

pub fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Ingest(a) => {
            let mut cfg: IngestConfig = match &a.config {
                Some(p) => read_toml(p)?,
                None => IngestConfig::default(),
            };
            if let Some(x) = a.min_path_len {
                cfg.min_path_len = x;
            }
            if let Some(x) = a.min_paths_per_user {
                cfg.min_paths_per_user = x;
            }
            cfg.ordered |= a.ordered;
            let tsv = open(&a.checkins)?;
            let map = open(&a.categories)?;
            let mut ds = ingest(tsv, map, &cfg)?;
            if let Some(m) = a.subset {
                ds = select_subset(&ds, m, metric_of(a.inner), a.include_self)?;
            }
            eprintln!(
                "{} users, V={} K={} L={}",
                ds.observations.len(),
                ds.v,
                ds.k,
                ds.l
            );
            ds.write(&a.out)
                .with_context(|| format!("writing {}", a.out.display()))?;
        }
        Command::Subset(a) => {
            let ds = read_dataset(&a.data)?;
            let out = select_subset(&ds, a.size, metric_of(a.inner), a.include_self)?;
            out.write(&a.out)
                .with_context(|| format!("writing {}", a.out.display()))?;
        }
        Command::Distance(a) => {
            let x: Vec<Path> = read_json(&a.a)?;
            let y: Vec<Path> = read_json(&a.b)?;
            let inner = metric_of(a.inner);
            if a.normalized {
                println!("{}", steinhaus(&x, &y, inner)?);
            } else {
                let d = match a.metric {
                    Metric::Edit => InteractionSeq::new(x).distance(&InteractionSeq::new(y), inner),
                    Metric::Matching => {
                        InteractionMultiset::new(x).distance(&InteractionMultiset::new(y), inner)
                    }
                };
                println!("{d}");
            }
        }
        Command::Distmatrix(a) => {
            let ds = read_dataset(&a.data)?;
            let inner = metric_of(a.inner);
            let m = if ds.ordered {
                distance_matrix(&ds.observations_as::<InteractionSeq>()?, inner)
            } else {
                distance_matrix(&ds.observations_as::<InteractionMultiset>()?, inner)
            };
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(output(a.out.as_deref())?);
            for row in m {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Command::Sample(cmd) => sample(cmd, seed.unwrap_or(0))?,
        Command::Fit {
            model,
            data,
            config,
            out,
        } => {
            let ds = read_dataset(&data)?;
            let cfg: FitConfig = read_toml(&config)?;
            match model {
                FitModel::Sis => fit_model::<InteractionSeq>(&ds, cfg, seed, &out)?,
                FitModel::Sim => fit_model::<InteractionMultiset>(&ds, cfg, seed, &out)?,
            }
        }
        Command::Baseline {
            method,
            data,
            config,
            out,
        } => baseline(method, &data, config.as_deref(), out.as_deref(), seed)?,
        Command::Simulate { study, io } => simulate(study, &io.config, &io.out, seed)?,
        Command::Summarize { results } => summarize_results(&results)?,
        Command::SelectAlphas { config, targets } => {
            let mut cfg: AlphaSelectConfig = read_toml(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let table = alpha_quantile_table(&cfg)?;
            eprintln!("alpha,mean_q95");
            for (a, q) in &table {
                eprintln!("{a},{q}");
            }
            let alphas = interpolate_alphas(&table, &targets)?;
            println!("target,alpha");
            for (t, a) in targets.iter().zip(alphas) {
                println!("{t},{a}");
            }
        }
    }
    Ok(())
}

fn metric_of(inner: Inner) -> PathMetric {
    match inner {
        Inner::Lsp => PathMetric::Lsp,
        Inner::Lcs => PathMetric::Lcs,
    }
}

fn open(p: &FsPath) -> Result<BufReader<File>> {
    let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
    Ok(BufReader::new(f))
}

fn output(p: Option<&FsPath>) -> Result<Box<dyn Write>> {
    Ok(match p {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn read_toml<T: DeserializeOwned>(p: &FsPath) -> Result<T> {
    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
}

fn read_dataset(p: &FsPath) -> Result<Dataset> {
    Dataset::read(p).with_context(|| format!("reading dataset {}", p.display()))
}

fn read_json<T: DeserializeOwned>(p: &FsPath) -> Result<T> {
    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
}

fn write_json<T: Serialize>(p: &FsPath, value: &T) -> Result<()> {
    let mut s = serde_json::to_string(value)?;
    s.push('\n');
    fs::write(p, s).with_context(|| format!("writing {}", p.display()))
}

fn write_csv<T: Serialize>(p: &FsPath, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(p).with_context(|| format!("creating {}", p.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct GraphSamples {
    format_version: u32,
    graphs: Vec<DirectedMultigraph>,
}

fn sample(cmd: SampleCommand, seed: u64) -> Result<()> {
    match cmd {
        SampleCommand::Hollywood(a) => {
            let length = TrPoisson::new(a.lambda, a.lmin, a.lmax)?;
            let params = HollywoodParams::finite(a.alpha, a.v, length)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let draws = (0..a.reps)
                .map(|_| hollywood_sample(&params, a.paths, &mut rng))
                .collect::<intnet::Result<Vec<_>>>()?;
            let bounds = SpaceBounds::new(a.v, a.lmax, a.paths.max(1))?;
            Dataset::from_observations(&draws, bounds, Vec::new()).write(&a.out)?;
        }
        SampleCommand::Sis(a) => sample_model::<InteractionSeq>(a, Metric::Edit, seed)?,
        SampleCommand::Sim(a) => sample_model::<InteractionMultiset>(a, Metric::Matching, seed)?,
        SampleCommand::Snf(a) => {
            let rows: Vec<Vec<u64>> = read_json(&a.mode)?;
            let phi = match a.phi {
                PhiArg::Identity => Phi::Identity,
                PhiArg::Square => Phi::Square,
            };
            let params = SnfParams::new(DirectedMultigraph::from_rows(rows)?, a.gamma, phi)?;
            let cfg = SnfChainConfig {
                schedule: Schedule::new(a.iters, a.burnin, a.lag)?,
                seed,
                edge_step: a.edge_step,
                cap: a.cap,
            };
            let graphs = snf_mcmc_sample(&params, &cfg)?;
            write_json(
                &a.out,
                &GraphSamples {
                    format_version: intnet::types::FORMAT_VERSION,
                    graphs,
                },
            )?;
        }
    }
    Ok(())
}

fn sample_model<O: Observation>(a: ModelArgs, metric: Metric, seed: u64) -> Result<()> {
    if a.metric.is_some_and(|m| m != metric) {
        bail!(
            "this model uses the {} metric",
            format!("{metric:?}").to_lowercase()
        );
    }
    let bounds = SpaceBounds::new(a.v, a.k, a.l)?;
    let moves: MoveConfig = match &a.moves {
        Some(p) => read_toml(p)?,
        None => MoveConfig::default(),
    };
    let chain = ChainConfig {
        schedule: Schedule::new(a.iters, a.burnin, a.lag)?,
        seed,
        moves,
    };
    let mode = O::from_paths(read_json(&a.mode)?);
    let init = match &a.init {
        Some(p) => Some(O::from_paths(read_json(p)?)),
        None => None,
    };
    let params = ModelParams::new(mode, a.gamma, metric_of(a.inner), bounds)?;
    let output = sample_chain(&params, &chain, init)?;
    Dataset::from_observations(&output.samples, bounds, Vec::new()).write(&a.out)?;
    let d = &output.diagnostics;
    let mut rows = move_rows(&[
        ("edit_allocation", d.moves.edit_allocation),
        ("path_insert_delete", d.moves.path_insert_delete),
    ]);
    rows.iter_mut()
        .for_each(|r| r.mean_distance = mean(&d.distance_trace));
    let diag = a
        .diagnostics
        .unwrap_or_else(|| a.out.with_extension("diagnostics.csv"));
    write_csv(&diag, &rows)?;
    Ok(())
}

fn mean(xs: &[usize]) -> f64 {
    xs.iter().sum::<usize>() as f64 / xs.len().max(1) as f64
}

/// Posterior settings plus an optional prior mode; the Fréchet mean of the
/// data is used when the mode is absent.
#[derive(Deserialize)]
struct FitConfig {
    #[serde(default)]
    prior_mode: Option<Vec<Path>>,
    #[serde(flatten)]
    posterior: PosteriorConfig,
}

#[derive(Serialize)]
struct Estimate<O> {
    mode: O,
    gamma: f64,
}

#[derive(Serialize)]
struct MoveRow {
    update: &'static str,
    proposed: usize,
    accepted: usize,
    out_of_support: usize,
    acceptance_rate: f64,
    /// Mean distance from recorded states to the mode they were compared to.
    mean_distance: f64,
}

fn move_rows(stats: &[(&'static str, MoveStats)]) -> Vec<MoveRow> {
    stats
        .iter()
        .map(|&(update, s)| MoveRow {
            update,
            proposed: s.proposed,
            accepted: s.accepted,
            out_of_support: s.out_of_support,
            acceptance_rate: s.acceptance_rate(),
            mean_distance: 0.0,
        })
        .collect()
}

#[derive(Serialize)]
struct TraceRow {
    sample: usize,
    gamma: f64,
    distance_to_prior_mode: usize,
}

fn fit_model<O: Observation + Serialize>(
    ds: &Dataset,
    cfg: FitConfig,
    seed: Option<u64>,
    out: &FsPath,
) -> Result<()> {
    let data: Vec<O> = ds.observations_as()?;
    let mut post = cfg.posterior;
    if let Some(s) = seed {
        post.seed = s;
    }
    post.validate()?;
    let chain: PosteriorChain<O> =
        fit(&data, ds.bounds(), cfg.prior_mode.map(O::from_paths), &post)?;
    let (mode, gamma) = point_estimates(&chain, post.inner)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_json(&out.join("chain.json"), &chain)?;
    write_json(&out.join("estimate.json"), &Estimate { mode, gamma })?;
    let d = &chain.diagnostics;
    let mut rows = move_rows(&[
        ("gamma", d.gamma),
        ("edit_allocation", d.mode.edit_allocation),
        ("path_insert_delete", d.mode.path_insert_delete),
    ]);
    rows.iter_mut()
        .for_each(|r| r.mean_distance = mean(&d.distance_trace));
    write_csv(&out.join("diagnostics.csv"), &rows)?;
    let trace: Vec<TraceRow> = chain
        .samples
        .iter()
        .zip(&d.distance_trace)
        .enumerate()
        .map(|(i, (s, &dist))| TraceRow {
            sample: i,
            gamma: s.gamma,
            distance_to_prior_mode: dist,
        })
        .collect();
    write_csv(&out.join("trace.csv"), &trace)?;
    eprintln!(
        "gamma acceptance {:.3}, posterior mean gamma {gamma:.4}",
        d.gamma.acceptance_rate()
    );
    Ok(())
}

fn aggregate_all(ds: &Dataset, kind: AggregateKind) -> Result<Vec<DirectedMultigraph>> {
    ds.observations
        .iter()
        .map(|o| Ok(aggregate(&InteractionSeq::new(o.clone()), ds.v, kind)?))
        .collect()
}

fn baseline(
    method: BaselineMethod,
    data: &FsPath,
    config: Option<&FsPath>,
    out: Option<&FsPath>,
    seed: Option<u64>,
) -> Result<()> {
    let ds = read_dataset(data)?;
    let g = match method {
        BaselineMethod::Mv => majority_vote(&aggregate_all(&ds, AggregateKind::Graph)?)?,
        BaselineMethod::Rm => rounded_mean(&aggregate_all(&ds, AggregateKind::Multigraph)?)?,
        BaselineMethod::Snf => {
            let Some(config) = config else {
                bail!("the snf baseline needs --config");
            };
            let mut cfg: SnfPosteriorConfig = read_toml(config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let chain = snf_fit(&aggregate_all(&ds, AggregateKind::Multigraph)?, &cfg)?;
            let (mode, gamma) = snf_point_estimate(&chain)?;
            eprintln!(
                "posterior mean gamma {gamma:.4}, gamma acceptance {:.3}, edge acceptance {:.3}",
                chain.diagnostics.gamma.acceptance_rate(),
                chain.diagnostics.edges.acceptance_rate()
            );
            mode
        }
    };
    write_edge_csv(&g, output(out)?)?;
    Ok(())
}

fn simulate(study: Study, config: &FsPath, out: &FsPath, seed: Option<u64>) -> Result<()> {
    let mut cfg: StudyConfig = read_toml(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let kind = match study {
        Study::Concentration => StudyKind::Concentration,
        Study::Structure => StudyKind::Structure,
        Study::Predictive => StudyKind::Predictive,
    };
    cfg.validate(kind)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("config.echo.toml"), toml::to_string(&cfg)?)?;
    let results = out.join("results.csv");
    let diagnostics: Vec<CellDiagnostics> = match study {
        Study::Concentration => {
            let o = run_concentration(&cfg)?;
            write_csv(&results, &o.rows)?;
            o.diagnostics
        }
        Study::Structure => {
            let o = run_structure(&cfg)?;
            write_csv(&results, &o.rows)?;
            o.diagnostics
        }
        Study::Predictive => {
            let o = run_predictive(&cfg)?;
            write_csv(&results, &o.rows)?;
            o.diagnostics
        }
    };
    write_csv(&out.join("diagnostics.csv"), &diagnostics)?;
    Ok(())
}

/// Groups a results CSV by its first two columns (setting and `n`) and
/// reports medians of the last two.
fn summarize_results(results: &FsPath) -> Result<()> {
    let mut r = csv::Reader::from_path(results)
        .with_context(|| format!("opening {}", results.display()))?;
    let headers = r.headers()?.clone();
    if headers.len() < 4 {
        bail!("results need a setting, n and two metric columns");
    }
    let last = headers.len() - 1;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .with_context(|| format!("bad value {:?} in column {}", &rec[i], &headers[i]))
        };
        rows.push((
            field(0)?,
            field(1)? as usize,
            field(last - 1)?,
            field(last)?,
        ));
    }
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record([
        &headers[0],
        "n",
        "count",
        &format!("median_{}", &headers[last - 1]),
        &format!("median_{}", &headers[last]),
    ])?;
    for s in summarize(&rows) {
        w.serialize((s.setting, s.n, s.count, s.median_a, s.median_b))?;
    }
    w.flush()?;
    Ok(())
}
