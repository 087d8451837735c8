mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use confluence::{SumDenominator, SumRule};

/// Asymptotic two-front confluence model and its numerical checks.
#[derive(Parser, Debug)]
#[command(name = "confluence", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Kernel tables.
    Kernels {
        #[command(subcommand)]
        action: KernelsAction,
    },
    /// Front trajectory on a uniform time grid.
    Fronts(FrontsArgs),
    /// Order function or temperature on a space-time grid.
    Field {
        #[command(subcommand)]
        which: FieldWhich,
    },
    /// Weak residuals over an ε ladder.
    Verify(VerifyArgs),
    /// Finite-difference reference solve.
    Pde(PdeArgs),
    /// Reference solve compared with the front model.
    Compare(PdeArgs),
    /// Predicted against measured temperature dip at confluence.
    Jump(PdeArgs),
}

#[derive(Subcommand, Debug)]
enum KernelsAction {
    Dump {
        #[arg(long, default_value_t = 0.0)]
        eta_min: f64,
        #[arg(long, default_value_t = 30.0)]
        eta_max: f64,
        #[arg(long, default_value_t = 400)]
        nodes: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = RuleArg::Derived)]
    sum_rule: RuleArg,
    #[arg(long, value_enum, default_value_t = DenArg::BOmega)]
    denominator: DenArg,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FrontsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 1001)]
    nt: usize,
}

#[derive(Subcommand, Debug)]
enum FieldWhich {
    U(FieldArgs),
    Theta(FieldArgs),
}

#[derive(Args, Debug)]
struct FieldArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 201)]
    nx: usize,
    #[arg(long, default_value_t = 11)]
    nt: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025,0.0125")]
    ladder: Vec<f64>,
    #[arg(long, default_value_t = 16)]
    times: usize,
}

#[derive(Args, Debug)]
struct PdeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Grid points; defaults to the coarsest with Δx ≤ ε/8.
    #[arg(long)]
    nx: Option<usize>,
    /// Time step; defaults to min(Δx², εΔx).
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum RuleArg {
    Derived,
    DerivedWithStretch,
    Undivided,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum DenArg {
    BOmega,
    BzOmega,
}

impl Common {
    fn rule(&self) -> SumRule {
        let den = match self.denominator {
            DenArg::BOmega => SumDenominator::BOmegaPlusCOmega,
            DenArg::BzOmega => SumDenominator::BzOmegaPlusCOmega,
        };
        match self.sum_rule {
            RuleArg::Derived => SumRule::Derived,
            RuleArg::DerivedWithStretch => SumRule::DerivedWithStretch(den),
            RuleArg::Undivided => SumRule::Undivided(den),
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("CONFLUENCE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            // only fails if a pool already exists, which cannot happen this early
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    match commands::run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
