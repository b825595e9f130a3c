use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ellipcert_cli::config::{parse_config, parse_start, RunConfig};
use ellipcert_cli::run::{run, Command, Example};

#[derive(Parser)]
#[command(name = "ellipcert", version, about = "Constants, hypothesis checks and fixed-point search for elliptic systems with functional boundary conditions")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory for CSV artifacts (default: current directory).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Override the grid spacing of the configuration.
    #[arg(long, global = true)]
    h: Option<f64>,
    /// Worker threads for scans.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(clap::Args)]
struct ConfigArg {
    /// Configuration file.
    config: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Green-operator constants and operator assumption checks.
    Constants(ConfigArg),
    /// Principal eigenpair of each operator.
    Spectrum(ConfigArg),
    /// Check the hypotheses of the existence test.
    CheckExistence(ConfigArg),
    /// Check the hypotheses of the non-existence test.
    CheckNonexistence(ConfigArg),
    /// Damped Picard iteration.
    Solve {
        config: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        damping: Option<f64>,
        /// zero, eigen, constant:<v> or random:<seed>.
        #[arg(long)]
        start: Option<String>,
    },
    /// Both tests over a (lambda, eta) grid; writes scan.csv.
    Scan(ConfigArg),
    /// Empirical pointwise bounds and integral estimates of the Green function.
    ValidateGreen(ConfigArg),
    /// Recompute the constants of a bundled example.
    Reproduce {
        #[arg(value_enum)]
        example: ExampleArg,
        /// Print the bundled configuration and exit.
        #[arg(long)]
        print_config: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleArg {
    Example41,
    Example42,
}

fn load(path: &PathBuf) -> Result<RunConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn real_main() -> Result<i32, String> {
    let cli = Cli::parse();
    let (cmd, mut cfg) = match &cli.command {
        Cmd::Constants(a) => (Command::Constants, load(&a.config)?),
        Cmd::Spectrum(a) => (Command::Spectrum, load(&a.config)?),
        Cmd::CheckExistence(a) => (Command::CheckExistence, load(&a.config)?),
        Cmd::CheckNonexistence(a) => (Command::CheckNonexistence, load(&a.config)?),
        Cmd::Scan(a) => (Command::Scan, load(&a.config)?),
        Cmd::ValidateGreen(a) => (Command::ValidateGreen, load(&a.config)?),
        Cmd::Solve {
            config,
            tol,
            max_iter,
            damping,
            start,
        } => {
            let mut cfg = load(config)?;
            if let Some(v) = tol {
                cfg.solve.tol = *v;
            }
            if let Some(v) = max_iter {
                cfg.solve.max_iter = *v;
            }
            if let Some(v) = damping {
                cfg.solve.damping = *v;
            }
            if let Some(s) = start {
                cfg.solve.start = parse_start(s)?;
            }
            (Command::Solve, cfg)
        }
        Cmd::Reproduce { example, print_config } => {
            let ex = match example {
                ExampleArg::Example41 => Example::Example41,
                ExampleArg::Example42 => Example::Example42,
            };
            if *print_config {
                print!("{}", ex.config_text());
                return Ok(0);
            }
            (Command::Reproduce(ex), ex.config())
        }
    };
    if let Some(h) = cli.h {
        cfg.domain.h = h;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t.max(1);
    }
    let out = run(cmd, &cfg).map_err(|e| e.to_string())?;
    match &cli.out {
        Some(p) => fs::write(p, &out.report).map_err(|e| format!("{}: {e}", p.display()))?,
        None => print!("{}", out.report),
    }
    if !out.artifacts.is_empty() {
        let dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        for (name, body) in &out.artifacts {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| format!("{}: {e}", p.display()))?;
        }
    }
    Ok(out.exit_code)
}
