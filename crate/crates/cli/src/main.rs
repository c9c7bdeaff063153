use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Distance-based models for populations of interaction networks.
#[derive(Parser, Debug)]
#[command(name = "intnet", version, about)]
struct Cli {
    /// RNG seed; overrides any `seed` key in a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Turn a check-in TSV into a dataset JSON (one multiset per user).
    Ingest(IngestArgs),
    /// Keep the neighbourhood of the most central observations.
    Subset(SubsetArgs),
    /// Distance between two observation files.
    Distance(DistanceArgs),
    /// Pairwise distance matrix of a dataset, as CSV.
    Distmatrix(DistmatrixArgs),
    /// Draw samples from a model.
    #[command(subcommand)]
    Sample(SampleCommand),
    /// Posterior inference for the mode and dispersion.
    Fit {
        #[arg(value_enum)]
        model: FitModel,
        /// Dataset JSON.
        #[arg(long)]
        data: PathBuf,
        /// Posterior config TOML.
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Graph baselines on the aggregated data, written as `i,j,count` CSV.
    Baseline {
        #[arg(value_enum)]
        method: BaselineMethod,
        #[arg(long)]
        data: PathBuf,
        /// SNF posterior config TOML (snf only).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a simulation study.
    Simulate {
        #[arg(value_enum)]
        study: Study,
        #[command(flatten)]
        io: ConfigOut,
    },
    /// Median trends per grid cell of a study's results CSV.
    Summarize {
        #[arg(long)]
        results: PathBuf,
    },
    /// Choose Hollywood alpha values hitting target count quantiles.
    SelectAlphas {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated targets for the mean 95% vertex-count quantile.
        #[arg(long, value_delimiter = ',', required = true)]
        targets: Vec<f64>,
    },
}

#[derive(Args, Debug)]
struct ConfigOut {
    /// Study config TOML.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum SampleCommand {
    /// Finite-regime Hollywood draws (raw vertex labels), as an ordered dataset.
    Hollywood(HollywoodArgs),
    /// MCMC draws from the interaction-sequence model.
    Sis(ModelArgs),
    /// MCMC draws from the interaction-multiset model.
    Sim(ModelArgs),
    /// MCMC draws from the spherical network family over multigraphs.
    Snf(SnfArgs),
}

#[derive(Args, Debug)]
struct HollywoodArgs {
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    /// Number of vertices.
    #[arg(long)]
    v: usize,
    /// Path length: Poisson rate, truncated to lmin..=lmax.
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 1)]
    lmin: usize,
    #[arg(long)]
    lmax: usize,
    /// Paths per draw.
    #[arg(long)]
    paths: usize,
    /// Number of draws.
    #[arg(long)]
    reps: usize,
    /// Dataset JSON to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// JSON array of paths.
    #[arg(long)]
    mode: PathBuf,
    #[arg(long)]
    gamma: f64,
    /// Must agree with the model: edit for sis, matching for sim.
    #[arg(long, value_enum)]
    metric: Option<Metric>,
    #[arg(long, value_enum, default_value_t = Inner::Lsp)]
    inner: Inner,
    #[arg(long)]
    v: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    l: usize,
    #[arg(long)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    burnin: usize,
    #[arg(long, default_value_t = 1)]
    lag: usize,
    /// Starting state (JSON array of paths); the mode when absent.
    #[arg(long)]
    init: Option<PathBuf>,
    /// TOML file of move settings (`nu_ed`, `nu_td`, `beta`, `path_length`).
    #[arg(long)]
    moves: Option<PathBuf>,
    /// Dataset JSON to write.
    #[arg(long)]
    out: PathBuf,
    /// Move diagnostics CSV; next to --out when absent.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SnfArgs {
    /// JSON adjacency rows of the mode, e.g. `[[0,2],[1,0]]`.
    #[arg(long)]
    mode: PathBuf,
    #[arg(long)]
    gamma: f64,
    #[arg(long, value_enum, default_value_t = PhiArg::Identity)]
    phi: PhiArg,
    #[arg(long)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    burnin: usize,
    #[arg(long, default_value_t = 1)]
    lag: usize,
    /// Largest step of the multiplicity proposal.
    #[arg(long, default_value_t = 1)]
    edge_step: u64,
    /// Largest allowed multiplicity.
    #[arg(long)]
    cap: Option<u64>,
    /// JSON file of sampled graphs.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Check-in TSV.
    #[arg(long)]
    checkins: PathBuf,
    /// Two-column TSV mapping venue categories to top-level categories.
    #[arg(long)]
    categories: PathBuf,
    /// Dataset JSON to write.
    #[arg(long)]
    out: PathBuf,
    /// Ingestion config TOML (`min_path_len`, `min_paths_per_user`, `ordered`).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    min_path_len: Option<usize>,
    #[arg(long)]
    min_paths_per_user: Option<usize>,
    /// Keep days in date order (sequences) instead of multisets.
    #[arg(long)]
    ordered: bool,
    /// Also keep only this many users, chosen by `subset`.
    #[arg(long)]
    subset: Option<usize>,
    #[arg(long, value_enum, default_value_t = Inner::Lsp)]
    inner: Inner,
    /// With --subset, count the central observation as one of the kept.
    #[arg(long)]
    include_self: bool,
}

#[derive(Args, Debug)]
struct SubsetArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    size: usize,
    #[arg(long, value_enum, default_value_t = Inner::Lsp)]
    inner: Inner,
    #[arg(long)]
    include_self: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DistanceArgs {
    /// JSON array of paths, e.g. `[[0,1],[2]]`.
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Ordered edit distance or unordered matching distance.
    #[arg(long, value_enum, default_value_t = Metric::Edit)]
    metric: Metric,
    #[arg(long, value_enum, default_value_t = Inner::Lsp)]
    inner: Inner,
    /// Print the normalised (Steinhaus) matching distance instead.
    #[arg(long)]
    normalized: bool,
}

#[derive(Args, Debug)]
struct DistmatrixArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = Inner::Lsp)]
    inner: Inner,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Inner {
    Lsp,
    Lcs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Metric {
    Edit,
    Matching,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PhiArg {
    Identity,
    Square,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FitModel {
    Sis,
    Sim,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BaselineMethod {
    Mv,
    Rm,
    Snf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Study {
    Concentration,
    Structure,
    Predictive,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
