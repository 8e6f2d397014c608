//! `kwm`: reproducible experiments on random reversible circuits and the
//! clique-coloring chains used to analyse them.

mod commands;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kwm::chains::ChainSpec;
use kwm::generic::make_partition;
use kwm::mixing::{KwiseSource, Statistic};
use kwm::{GateMeasure, LogBase, StateCap};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "kwm", version, about = "Exact and Monte Carlo experiments on reversible-circuit Markov chains")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Result file; a `<out>.meta.json` sidecar is written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ChainKind {
    Rev,
    Cc,
    Ucc,
    Grev,
    Tgrev,
    Complete,
}

#[derive(Clone, Debug, Args, Serialize)]
struct ChainArgs {
    #[arg(long, value_enum)]
    chain: ChainKind,
    /// Tuple length.
    #[arg(long)]
    k: Option<usize>,
    /// Number of colors (cc, ucc, complete).
    #[arg(long = "N")]
    colors: Option<u32>,
    /// Number of wires (rev, grev, tgrev).
    #[arg(long)]
    n: Option<usize>,
    /// Gate measure: parameter-uniform or set-uniform.
    #[arg(long, default_value = "parameter-uniform")]
    mode: GateMeasure,
    #[command(flatten)]
    partition: PartitionArgs,
}

#[derive(Clone, Debug, Args, Serialize)]
struct PartitionArgs {
    /// Block width override.
    #[arg(long, requires = "p")]
    w: Option<usize>,
    /// Block count override.
    #[arg(long, requires = "w")]
    p: Option<usize>,
    /// Log base of the default block width: 2 or e.
    #[arg(long, default_value = "2")]
    log_base: LogBase,
}

impl PartitionArgs {
    fn partition(&self, n: usize, k: usize) -> kwm::Result<kwm::Partition> {
        make_partition(n, k, self.w.zip(self.p), self.log_base)
    }
}

fn required<T: Copy>(value: Option<T>, flag: &str, chain: ChainKind) -> kwm::Result<T> {
    value.ok_or_else(|| kwm::Error::InvalidArgument(format!("--{flag} is required for --chain {chain:?}")))
}

impl ChainArgs {
    fn spec(&self) -> kwm::Result<ChainSpec> {
        let c = self.chain;
        let spec = match c {
            ChainKind::Rev => {
                ChainSpec::Rev { k: required(self.k, "k", c)?, n: required(self.n, "n", c)?, mode: self.mode }
            }
            ChainKind::Cc => ChainSpec::Cc { k: required(self.k, "k", c)?, colors: required(self.colors, "N", c)? },
            ChainKind::Ucc => ChainSpec::Ucc { k: required(self.k, "k", c)?, colors: required(self.colors, "N", c)? },
            ChainKind::Complete => ChainSpec::Complete { colors: required(self.colors, "N", c)? },
            ChainKind::Grev => {
                let (k, n) = (required(self.k, "k", c)?, required(self.n, "n", c)?);
                ChainSpec::Grev { k, n, partition: self.partition.partition(n, k)?, mode: self.mode }
            }
            ChainKind::Tgrev => {
                let (k, n) = (required(self.k, "k", c)?, required(self.n, "n", c)?);
                ChainSpec::Tgrev { partition: self.partition.partition(n, k)? }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Write an exact kernel as a JSON header plus (row, col, prob) lines.
    KernelDump {
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Spectral gap of a reversible kernel.
    Gap {
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Multi-start search for small log-Sobolev ratios.
    LscSearch {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value_t = 200)]
        restarts: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
    },
    /// Residual of the conditional-entropy chain rule on random functions.
    ChainRuleCheck {
        #[arg(long)]
        k: usize,
        #[arg(long = "N")]
        colors: u32,
        #[arg(long, default_value_t = 100)]
        functions: usize,
    },
    /// Exact congestion of the swap-to-recolor path map.
    Congestion {
        #[arg(long)]
        k: usize,
        #[arg(long = "N")]
        colors: u32,
    },
    /// Dirichlet-form comparison on random functions.
    CompareCheck {
        #[arg(long)]
        k: usize,
        #[arg(long = "N")]
        colors: u32,
        #[arg(long, default_value_t = 100)]
        functions: usize,
    },
    /// Exact mixing time and TV series.
    MixExact {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        #[arg(long, default_value_t = 100_000)]
        max_t: usize,
        /// Single start state; default is the worst case over all states.
        #[arg(long)]
        start: Option<usize>,
    },
    /// Empirical TV series from simulated walks.
    MixMc {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value_t = 0)]
        start: usize,
        #[arg(long, default_value_t = 20)]
        t_max: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// Exact k-wise independence distance of t-gate circuits.
    KwiseExact {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value = "parameter-uniform")]
        mode: GateMeasure,
        #[arg(long)]
        start: Option<usize>,
    },
    /// Chi-square test of a projected statistic of random-circuit outputs.
    KwiseTest {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        gates: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// hamming-weight, xor-profile or low-bits.
        #[arg(long, default_value = "xor-profile")]
        statistic: Statistic,
        #[arg(long, default_value_t = 64)]
        bins: usize,
        #[arg(long, default_value = "parameter-uniform")]
        mode: GateMeasure,
        /// circuit or uniform.
        #[arg(long, default_value = "circuit")]
        source: KwiseSource,
    },
    /// Fraction of distinct tuples that are generic.
    GenericFrac {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        partition: PartitionArgs,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        /// Enumerate every tuple instead of sampling.
        #[arg(long)]
        exact: bool,
    },
    /// Check the product decomposition of the generic product chain.
    TgrevVerify {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        partition: PartitionArgs,
    },
    /// Run a JSON array of argument arrays, one experiment each.
    Batch { file: PathBuf },
}

/// Result of one experiment: CSV text and a JSON value.
pub struct Output {
    pub csv: String,
    pub json: serde_json::Value,
}

enum Failure {
    Usage(String),
    Core(kwm::Error),
}

impl From<kwm::Error> for Failure {
    fn from(e: kwm::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Core(e.into())
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Core(kwm::Error::InvalidArgument(_)) => 2,
            Failure::Core(kwm::Error::CapExceeded { .. }) => 3,
            Failure::Core(kwm::Error::Invariant(_)) => 4,
            Failure::Core(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    version: &'static str,
    argv: &'a [String],
    config: &'a Cli,
    state_cap: u64,
    threads: usize,
    wall_time_s: f64,
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn execute(cli: &Cli, argv: &[String]) -> Result<(), Failure> {
    let cap = StateCap::from_env()?;
    let started = Instant::now();
    let output = if let Command::Batch { file } = &cli.command {
        return run_batch(file);
    } else {
        commands::run(&cli.command, cli.seed, cap)?
    };
    let elapsed = started.elapsed().as_secs_f64();
    let body = match cli.format {
        Format::Csv => output.csv,
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&output.json)?;
            s.push('\n');
            s
        }
    };
    match &cli.out {
        Some(path) => {
            std::fs::write(path, body)?;
            let meta = Sidecar {
                version: env!("CARGO_PKG_VERSION"),
                argv,
                config: cli,
                state_cap: cap.0,
                threads: rayon::current_num_threads(),
                wall_time_s: elapsed,
            };
            let mut text = serde_json::to_string_pretty(&meta)?;
            text.push('\n');
            std::fs::write(sidecar_path(path), text)?;
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn run_batch(file: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(file)?;
    let runs: Vec<Vec<String>> = serde_json::from_str(&text)?;
    for (i, argv) in runs.iter().enumerate() {
        let cli = Cli::try_parse_from(std::iter::once("kwm".to_string()).chain(argv.iter().cloned()))
            .map_err(|e| Failure::Usage(format!("batch entry {i}: {e}")))?;
        if matches!(cli.command, Command::Batch { .. }) {
            return Err(Failure::Usage(format!("batch entry {i}: nested batches are not allowed")));
        }
        execute(&cli, argv).map_err(|f| match f {
            Failure::Usage(m) => Failure::Usage(format!("batch entry {i}: {m}")),
            other => other,
        })?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(&cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
