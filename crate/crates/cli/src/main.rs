//! `besovcap`: moduli, Besov seminorms, rearrangements, capacities and
//! limit sweeps from the command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical fault,
//! 4 verification failure.

mod config;
mod run;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{read_config_file, resolve, ConfigError};
use run::Failure;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "besovcap", version, about = "Besov seminorms and capacities on uniform grids")]
struct Cli {
    /// norm | modulus | besov | rearrange | capacity | sweep-to-one | sweep-to-zero | verify
    command: Option<String>,
    /// File of `key = value` settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Set description file (`box ...` / `ball ...` lines).
    #[arg(long)]
    set: Option<String>,
    /// Grid function file, or `fa:a=<a>`, `osc:nu=<ν>`, `log:n=<n>`.
    #[arg(long = "fn")]
    function: Option<String>,
    /// w1p | besov
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    p: Option<String>,
    /// `inf` selects the sup seminorm for `besov`.
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// Comma-separated list.
    #[arg(long)]
    alphas: Option<String>,
    #[arg(long)]
    spacing: Option<String>,
    #[arg(long = "tau-grid")]
    tau_grid: Option<String>,
    #[arg(long = "eps-grid")]
    eps_grid: Option<String>,
    #[arg(long = "gamma-grid")]
    gamma_grid: Option<String>,
    /// Output file; standard output if absent.
    #[arg(long)]
    out: Option<String>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
}

impl Cli {
    fn flags(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("command", &self.command),
            ("set", &self.set),
            ("fn", &self.function),
            ("space", &self.space),
            ("p", &self.p),
            ("q", &self.q),
            ("alpha", &self.alpha),
            ("alphas", &self.alphas),
            ("spacing", &self.spacing),
            ("tau-grid", &self.tau_grid),
            ("eps-grid", &self.eps_grid),
            ("gamma-grid", &self.gamma_grid),
            ("out", &self.out),
            ("format", &self.format),
        ]
    }
}

fn settings(cli: &Cli) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = match &cli.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    for (k, v) in cli.flags() {
        if let Some(v) = v {
            map.insert(k.to_string(), v.clone());
        }
    }
    Ok(map)
}

fn limit_threads() {
    let Ok(v) = std::env::var("BESOVCAP_THREADS") else { return };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => eprintln!("warning: ignoring BESOVCAP_THREADS = `{v}`"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    limit_threads();
    let cfg = match settings(&cli).and_then(|m| resolve(&m)) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run::run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("config error: bad input: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical fault: {e}");
            ExitCode::from(EXIT_NUMERICAL)
        }
        Err(Failure::Output(e)) => {
            eprintln!("numerical fault: cannot write output: {e}");
            ExitCode::from(EXIT_NUMERICAL)
        }
        Err(Failure::Verification(n)) => {
            eprintln!("verification failed: {n} violated checks");
            ExitCode::from(EXIT_VERIFY)
        }
    }
}
