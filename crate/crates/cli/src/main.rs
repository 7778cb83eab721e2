use clap::builder::BoolishValueParser;
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use isokin_cli::config::{parse_config, RunConfig};
use isokin_cli::error::{CliError, Result};
use isokin_cli::pipeline::{dry_run_echo, record_config, resolve_out, run_batch, run_single, Command, Summary};
use isokin_cli::sweep::run_sweep;

/// Numerical laboratory for 1-D isentropic Euler with γ = 3.
#[derive(Parser)]
#[command(name = "isokin", version)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, env = "ISOKIN_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true, env = "ISOKIN_OUT")]
    out: Option<PathBuf>,
    /// Print the resolved config and exit without simulating.
    #[arg(long, global = true, env = "ISOKIN_DRY_RUN", value_parser = BoolishValueParser::new())]
    dry_run: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "ISOKIN_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Simulate and run every configured diagnostic.
    Simulate,
    /// Compare the run with the exact Riemann solution.
    Riemann {
        /// Allowed L¹ distance at the final time.
        #[arg(long, default_value_t = 2e-2, env = "ISOKIN_RIEMANN_TOL")]
        tol: f64,
    },
    /// Strong traces along curves.
    Trace(RecordArgs),
    /// Rankine–Hugoniot / continuity dichotomy along curves.
    Rh(RecordArgs),
    /// De Giorgi iteration monitors.
    Degiorgi(RecordArgs),
    /// Semicontinuous envelopes at sampled points.
    Semicont(RecordArgs),
    /// Generalized characteristics.
    Characteristic(RecordArgs),
    /// One run per value of the `[sweep]` axis.
    Sweep,
}

#[derive(Args)]
struct RecordArgs {
    /// Reuse a saved run instead of simulating.
    #[arg(long, env = "ISOKIN_RECORD")]
    record: Option<PathBuf>,
}

fn load_config(cli: &Cli, record: Option<&Path>) -> Result<RunConfig> {
    match (&cli.config, record) {
        (Some(path), _) => parse_config(path),
        (None, Some(dir)) => record_config(dir),
        (None, None) => Err(CliError::Usage("no configuration: pass --config PATH or set ISOKIN_CONFIG".into())),
    }
}

fn report(summary: &Summary, out: &Path) {
    for c in &summary.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        match &c.error {
            Some(e) => println!("{verdict} {}: {e}", c.name),
            None => println!("{verdict} {}", c.name),
        }
    }
    for m in &summary.members {
        match &m.error {
            Some(e) => println!("{:?} {} ({}): {e}", m.status, m.label, m.dir),
            None => println!("{:?} {} ({})", m.status, m.label, m.dir),
        }
    }
    println!("{:?}: {}", summary.status, out.display());
}

fn execute(cli: Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let (command, record) = match &cli.command {
        Sub::Simulate => (Command::Simulate, None),
        Sub::Riemann { tol } => (Command::Riemann { tol: *tol }, None),
        Sub::Trace(a) => (Command::Only(&["trace"]), a.record.clone()),
        Sub::Rh(a) => (Command::Only(&["rh"]), a.record.clone()),
        Sub::Degiorgi(a) => (Command::Only(&["degiorgi", "degiorgi_family"]), a.record.clone()),
        Sub::Semicont(a) => (Command::Only(&["semicont"]), a.record.clone()),
        Sub::Characteristic(a) => (Command::Only(&["characteristic"]), a.record.clone()),
        Sub::Sweep => (Command::Simulate, None),
    };
    let cfg = load_config(&cli, record.as_deref())?;
    let out = resolve_out(cli.out.as_deref(), &cfg);
    if let Command::Only(kinds) = command {
        if !cfg.diagnostics.iter().any(|d| kinds.contains(&d.kind())) {
            return Err(CliError::Usage(format!("the config requests no {} diagnostics", kinds.join("/"))));
        }
    }
    if cli.dry_run {
        print!("{}", dry_run_echo(&cfg, &out)?);
        return Ok(0);
    }
    let summary = match (&cli.command, record) {
        (Sub::Sweep, _) => run_sweep(&cfg, &out)?,
        (_, Some(rec)) => run_single(&cfg, cfg.seed, &out, command, Some(&rec))?,
        _ if cfg.sweep.is_some() => return Err(CliError::Usage("the config has a [sweep] table: use the sweep command".into())),
        _ if cfg.batch > 1 => run_batch(&cfg, &out, command)?,
        _ => run_single(&cfg, cfg.seed, &out, command, None)?,
    };
    report(&summary, &out);
    Ok(summary.status.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
