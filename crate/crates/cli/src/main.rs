use clap::{Parser, Subcommand};
use exitgrid_cli::config::{parse_list, KEYS};
use exitgrid_cli::{execute, CliError, CliResult, Experiment, ExperimentConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "exitgrid", version, about = "First-exit discretization of the Wiener process: tables, figures and limit checks")]
#[command(after_help = keys_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// `key = value` file applied before the flags below
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Comma-separated thresholds
    #[arg(long, global = true, value_name = "LIST")]
    eta: Option<String>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// 50000 paths on 200001 grid points instead of 20000 on 100001
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Also write an SVG plot next to each plottable CSV
    #[arg(long, global = true)]
    svg: bool,
    /// Worker threads (results do not depend on it)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Any config key, e.g. `--set t_eval=0.1,0.5`
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Tabulate the absorbed density p(t, x) in both representations
    Density,
    /// Tabulate survival, CDF, density and quantiles of the exit time
    Tau,
    /// Renewal-convolution convergence ladder and Monte Carlo cross-check
    Limit,
    /// Simulate paths and dump error samples, moments and renewal counts
    Simulate,
    /// Kernel estimates of the normalized error density
    Fig1,
    /// Wasserstein distances to the triangular and normal laws over eta
    Fig2,
    /// Variance of the normalized error over time
    Fig3,
}

fn keys_help() -> String {
    let mut s = String::from("Config keys (file or --set):\n");
    for (k, d) in KEYS {
        s.push_str(&format!("  {k:<10} {d}\n"));
    }
    s.push_str("  workers    worker threads\n\nExit codes: 0 success, 2 config error, 3 numerical tolerance failure");
    s
}

fn build(cli: &Cli) -> CliResult<ExperimentConfig> {
    let experiment = match cli.command {
        Command::Density => Experiment::Density,
        Command::Tau => Experiment::Tau,
        Command::Limit => Experiment::Limit,
        Command::Simulate => Experiment::Simulate,
        Command::Fig1 => Experiment::Fig1,
        Command::Fig2 => Experiment::Fig2,
        Command::Fig3 => Experiment::Fig3,
    };
    let mut cfg = ExperimentConfig::defaults(experiment, cli.paper_scale);
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Config(format!("expected KEY=VALUE, got `{kv}`")))?;
        cfg.set(k, v)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(p) = cli.paths {
        cfg.paths = p;
    }
    if let Some(e) = &cli.eta {
        cfg.etas = parse_list("eta", e)?;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if cli.svg {
        cfg.svg = true;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build(&cli).and_then(|cfg| execute(&cfg));
    match result {
        Ok((rep, files)) => {
            for f in &files {
                println!("wrote {}", f.display());
            }
            for c in &rep.checks {
                println!("{} {}: {:.6e} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.threshold);
            }
            if rep.all_passed() {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: one or more tolerance checks failed");
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
