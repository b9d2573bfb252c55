use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use invsq::config::{Check, ExperimentConfig, ExperimentKind};
use invsq::error::{Error, Result};
use invsq::experiment::{run_experiment, run_sweep, sweep_configs, Manifest};
use invsq::operator::{constants_report, ModelParams};

#[derive(Parser)]
#[command(name = "invsq", version, about = "Spectral NLS simulator with inverse-square potential, and checks of its estimates")]
struct Cli {
    /// Flat key/value config file (see docs/config.md)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides output.dir of the config
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Print nothing but errors
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the NLS and write trajectory.csv
    Simulate,
    /// Scattering experiment: dyadic Cauchy increments, u+ and subdivision
    Scatter,
    /// Run one estimate check
    Verify {
        #[arg(long, value_parser = parse_check)]
        check: Check,
    },
    /// Two-sided heat-kernel envelope on the query grid
    Heatkernel,
    /// Print the derived constants as JSON
    Constants(ConstantsArgs),
    /// Round-trip and Parseval residuals of the discrete Hankel transform
    DhtSelftest(SelftestArgs),
    /// Run a Cartesian product of config variations concurrently
    Sweep(SweepArgs),
    #[command(hide = true)]
    SelftestSpecfun,
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    n_modes: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// key=v1,v2,... (repeatable)
    #[arg(long = "vary", value_parser = parse_vary)]
    vary: Vec<(String, Vec<String>)>,
    /// Concurrent runs
    #[arg(long, default_value_t = 4)]
    threads: usize,
}

fn parse_check(s: &str) -> std::result::Result<Check, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_vary(s: &str) -> std::result::Result<(String, Vec<String>), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=v1,v2,..., got '{s}'"))?;
    Ok((k.trim().to_string(), v.split(',').map(|x| x.trim().to_string()).collect()))
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    match &cli.config {
        Some(p) => ExperimentConfig::from_path(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn out_dir(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    cli.out_dir.clone().or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("invsq-out"))
}

fn report(m: &Manifest, dir: &Path) {
    println!("{} [{}] -> {}", m.experiment, m.status, dir.display());
    for (k, v) in &m.scalars {
        match v {
            Some(v) => println!("  {k} = {v:e}"),
            None => println!("  {k} = n/a"),
        }
    }
    for (k, v) in &m.flags {
        println!("  {k}: {}", if *v { "yes" } else { "NO" });
    }
    for w in &m.warnings {
        println!("  warning: {w}");
    }
}

fn with_kind(mut cfg: ExperimentConfig, kind: ExperimentKind) -> Result<ExperimentConfig> {
    cfg.kind = kind;
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<()> {
    let kind = match &cli.command {
        Command::Simulate => ExperimentKind::Simulate,
        Command::Scatter => ExperimentKind::Scatter,
        Command::Verify { check } => ExperimentKind::Verify(*check),
        Command::Heatkernel => ExperimentKind::Heatkernel,
        Command::Constants(args) => return constants(cli, args),
        Command::DhtSelftest(args) => return dht_selftest(cli, args),
        Command::Sweep(args) => return sweep(cli, args),
        Command::SelftestSpecfun => {
            let r = invsq::specfun::selftest()?;
            println!("{}", serde_json::to_string_pretty(&r).expect("plain struct"));
            return Ok(());
        }
    };
    let cfg = with_kind(load(cli)?, kind)?;
    let dir = out_dir(cli, &cfg);
    let m = run_experiment(&cfg, &dir)?;
    if !cli.quiet {
        report(&m, &dir);
    }
    Ok(())
}

fn constants(cli: &Cli, args: &ConstantsArgs) -> Result<()> {
    let base = load(cli)?;
    let p0 = base.solver.params;
    let params = ModelParams::new(args.n.unwrap_or(p0.n), args.a.unwrap_or(p0.a), args.p.unwrap_or(p0.p))
        .map_err(|e| Error::Config(e.to_string()))?;
    let r = constants_report(&params, base.solver.lwp_margin);
    println!("{}", serde_json::to_string_pretty(&r).expect("plain struct"));
    if cli.out_dir.is_some() || base.out_dir.is_some() {
        let mut cfg = with_kind(base, ExperimentKind::Constants)?;
        cfg.solver.params = params;
        let dir = out_dir(cli, &cfg);
        run_experiment(&cfg, &dir)?;
    }
    Ok(())
}

fn dht_selftest(cli: &Cli, args: &SelftestArgs) -> Result<()> {
    let mut cfg = with_kind(load(cli)?, ExperimentKind::DhtSelftest)?;
    if let Some(nu) = args.nu {
        cfg.solver.grid.nu_override = Some(nu);
    }
    if let Some(n) = args.n_modes {
        cfg.solver.grid.n_modes = n;
    }
    if let Some(r) = args.radius {
        cfg.solver.grid.radius = r;
    }
    cfg.validate()?;
    let dir = out_dir(cli, &cfg);
    let m = run_experiment(&cfg, &dir)?;
    if !cli.quiet {
        report(&m, &dir);
    }
    Ok(())
}

fn sweep(cli: &Cli, args: &SweepArgs) -> Result<()> {
    let base = load(cli)?;
    let dir = out_dir(cli, &base);
    let configs = sweep_configs(&base, &args.vary)?;
    let rows = run_sweep(&configs, &dir, args.threads)?;
    if !cli.quiet {
        for r in &rows {
            println!("run-{:03} [{}] {}{}", r.index, r.status, r.overrides, if r.error.is_empty() { String::new() } else { format!(": {}", r.error) });
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("invsq: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
