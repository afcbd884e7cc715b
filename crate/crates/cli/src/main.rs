mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use commands::Outcome;
use output::{Report, Sink, Timing};

#[derive(Parser)]
#[command(name = "funnel", version, about = "Funnel estimates for scalar conservation laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Finite-volume solution and its bounds check.
    Solve(Common),
    /// Forward or backward funnel of a set under a bounds envelope.
    Funnel(Common),
    /// Domain-of-dependence estimate of u(t, x).
    Dod(Common),
    /// L1 contraction on a backward funnel, single pair or random suite.
    Contract(Common),
    /// Numerical support against the forward funnel of spt u0.
    Support(Common),
    /// Effect of a perturbation placed outside the estimate.
    Perturb(Common),
    /// Confinement condition and controlled funnels.
    #[command(subcommand)]
    Confine(ConfineCommand),
    /// Set geometry checks.
    #[command(subcommand)]
    Geom(GeomCommand),
}

#[derive(Subcommand)]
enum ConfineCommand {
    Check(Common),
    Simulate(Common),
    Sweep(Common),
}

#[derive(Subcommand)]
enum GeomCommand {
    /// Outer Minkowski content by extrapolation.
    Content(Common),
    /// Symmetric-difference bound for tubular sets.
    Tubular(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; flags below override its keys.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory for report.json, series.csv and rasters/.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Override any key, e.g. `--set scheme.cfl=0.3` or `--set grid={"dim":1,...}`.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = config::parse_assignment)]
    set: Vec<(String, String)>,
    /// Flux preset name.
    #[arg(long)]
    flux: Option<String>,
    /// Initial data: a .fnlr raster or a preset name.
    #[arg(long)]
    u0: Option<String>,
    #[arg(long)]
    cells: Option<usize>,
    /// Final time.
    #[arg(long = "T", value_name = "T")]
    t_end: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    /// Funnel step (the solver step for `solve`).
    #[arg(long)]
    dt: Option<f64>,
    /// State samples per velocity set.
    #[arg(long)]
    nsamp: Option<usize>,
    /// forward or backward.
    #[arg(long)]
    direction: Option<String>,
    /// Seed of a random suite.
    #[arg(long)]
    seed: Option<u64>,
    /// Scenario JSON for the confine commands.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

type Runner = fn(Value, &mut Sink) -> Result<Outcome>;

impl Common {
    fn overrides(&self, command: &str) -> Vec<(String, String)> {
        let confine = command.starts_with("confine");
        let mut out = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        push("flux", self.flux.clone());
        push("u0", self.u0.clone());
        push("grid.cells", self.cells.map(|v| v.to_string()));
        push(if confine { "scenario.T" } else { "T" }, self.t_end.map(|v| v.to_string()));
        push("scheme.cfl", self.cfl.map(|v| v.to_string()));
        push(if command == "solve" { "scheme.dt" } else { "funnel.dt" }, self.dt.map(|v| v.to_string()));
        push("funnel.nsamp", self.nsamp.map(|v| v.to_string()));
        push("direction", self.direction.clone());
        push("random.seed", self.seed.map(|v| v.to_string()));
        push("scenario", self.scenario.as_ref().map(|p| p.display().to_string()));
        out.extend(self.set.iter().cloned());
        out
    }
}

fn run(command: &str, common: &Common, data_keys: &[&str], runner: Runner) -> Result<bool> {
    let clock = Instant::now();
    let started = output::unix_now();
    let mut value = config::load(common.config.as_deref(), &common.overrides(command))?;
    config::expand_presets(&mut value, data_keys)?;
    let mut sink = Sink::new(&common.out)?;
    let outcome = runner(value, &mut sink)?;
    let report = Report {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        inputs: outcome.inputs,
        verdict: outcome.verdict,
        results: outcome.results,
        warnings: outcome.warnings,
        artifacts: Vec::new(),
        timing: Timing { started_unix_s: started, runtime_s: clock.elapsed().as_secs_f64() },
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let out = sink.root().join(output::REPORT_FILE);
    let report = sink.finish(report)?;
    let v = &report.verdict;
    println!("{command}: {} ({}) -> {}", if v.pass { "PASS" } else { "FAIL" }, v.check, out.display());
    Ok(v.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(c) => run("solve", c, &["u0"], commands::solve_cmd),
        Command::Funnel(c) => run("funnel", c, &[], commands::funnel_cmd),
        Command::Dod(c) => run("dod", c, &["u0"], commands::dod_cmd),
        Command::Contract(c) => run("contract", c, &["u0", "ubar0"], commands::contract_cmd),
        Command::Support(c) => run("support", c, &["u0"], commands::support_cmd),
        Command::Perturb(c) => run("perturb", c, &["u0", "w"], commands::perturb_cmd),
        Command::Confine(ConfineCommand::Check(c)) => run("confine check", c, &[], commands::confine_check_cmd),
        Command::Confine(ConfineCommand::Simulate(c)) => {
            run("confine simulate", c, &[], commands::confine_simulate_cmd)
        }
        Command::Confine(ConfineCommand::Sweep(c)) => run("confine sweep", c, &[], commands::confine_sweep_cmd),
        Command::Geom(GeomCommand::Content(c)) => run("geom content", c, &[], commands::geom_content_cmd),
        Command::Geom(GeomCommand::Tubular(c)) => run("geom tubular", c, &[], commands::geom_tubular_cmd),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
