use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod parse;

/// Bergman kernels, Green functions, capacities and indicatrix volumes on
/// model domains, with the experiments built on them.
///
/// Domains are JSON objects such as {"variant":"ellipsoid","p":[0.5,1]},
/// {"variant":"annulus","r":0.2}, {"variant":"ball","n":2},
/// {"variant":"polydisk","n":2} or {"variant":"symmetrized_bidisk"},
/// given inline or as @path. Points are comma-separated coordinates, each
/// either `re` or `re:im`; `sqrt` stands for sqrt(r) on an annulus.
///
/// Curves are written as CSV (scan tables use the header curve,b,F; other
/// reports curve,x,value,error) and everything else as JSON. When a CSV
/// report goes to --out, the full JSON report is written next to it with a
/// .json extension.
///
/// Exit status: 0 on success, 1 for invalid input, 2 for numerical failure
/// or a failed verdict. RAYON_NUM_THREADS sets the worker thread count.
#[derive(Debug, Parser)]
#[command(name = "suita", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    global: GlobalOpts,
}

#[derive(Debug, Args, Clone)]
pub struct GlobalOpts {
    /// Absolute tolerance for series and root finding.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Monte Carlo samples per level.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Seed for sample streams.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Grid size (b-grid for scans, envelope panels for indicatrix volumes).
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args, Clone)]
pub struct DomainArgs {
    /// Domain as inline JSON or @path.
    #[arg(long, conflicts_with = "annulus")]
    pub domain: Option<String>,
    /// Shorthand for the annulus { r < |z| < 1 }.
    #[arg(long)]
    pub annulus: Option<f64>,
    /// Base point.
    #[arg(long, allow_hyphen_values = true)]
    pub w: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Diagonal Bergman kernel K(w).
    Kernel(DomainArgs),
    /// Green function of the disk or an annulus: capacity, level curves and sublevel volumes.
    Green {
        #[command(flatten)]
        domain: DomainArgs,
        /// Levels t < 0 for sublevel volumes and level-curve integrals.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        t: Vec<f64>,
    },
    /// Kobayashi indicatrix volume of { sum |z_j|^(2 p_j) < 1 } at (b, 0, ..., 0).
    Indicatrix {
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long)]
        b: f64,
    },
    /// The ratio F = (K lambda(I))^(1/n).
    SuitaF {
        /// Symmetrized bidisk at the origin.
        #[arg(long)]
        g2: bool,
        #[arg(long, value_enum)]
        family: Option<FamilyKind>,
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        b: Option<f64>,
        /// Search for the maximum over b instead of evaluating at one point.
        #[arg(long)]
        maximize: bool,
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Tabulates F over a b-grid for several family members.
    Scan {
        #[arg(long, value_enum)]
        family: FamilyKind,
        /// Exponent(s) m, comma-separated for the power family.
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<f64>,
        /// Dimensions for the ell1 family, a list or a range like 2..6.
        #[arg(long)]
        n: Option<String>,
    },
    /// Sampled experiments with verdicts.
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentChoice,
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        t: Vec<f64>,
    },
    /// Runs the acceptance suite and prints a pass/fail table.
    VerifyAll {
        /// Skip the Monte Carlo criteria.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    /// { |z_1| + |z_2|^(2m) + ... + |z_n|^(2m) < 1 }
    Ell1,
    /// { |z_1|^(2m) + |z_2|^2 < 1 }
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentChoice {
    Monotonicity,
    LowerBound,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<bergman_suita::Error>() {
        Some(e) if e.is_numerical() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let g = &cli.global;
    let result = match cli.command {
        Command::Kernel(d) => commands::kernel(g, &d),
        Command::Green { domain, t } => commands::green(g, &domain, &t),
        Command::Indicatrix { p, b } => commands::indicatrix(g, &p, b),
        Command::SuitaF {
            g2,
            family,
            m,
            n,
            b,
            maximize,
            domain,
        } => commands::suita_f(g, g2, family, m, n, b, maximize, &domain),
        Command::Scan { family, m, n } => commands::scan(g, family, &m, n.as_deref()),
        Command::Experiment { kind, domain, t } => commands::experiment(g, kind, &domain, &t),
        Command::VerifyAll { quick } => commands::verify_all(g, quick),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
