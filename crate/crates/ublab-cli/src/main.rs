//! Batch front-end for the congestion-control lab.
//!
//! `run` executes a (scenario x controller x seed) grid and writes one
//! directory of CSV/SVG artifacts per cell plus an aggregate summary.
//! `sweep` repeats a run for each value of one config key. `validate`
//! parses a config file and reports nothing but errors.
//!
//! Exit codes: 0 success, 2 configuration error, 1 runtime (I/O) error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ublab::controller::ControllerKind;
use ublab::harness::config::RunConfig;
use ublab::harness::export::{self, SummaryRow};
use ublab::harness::metrics;
use ublab::harness::scenario::{run_grid, Cell, ScenarioKind};
use ublab::{Error, Result};

#[derive(Parser)]
#[command(name = "ublab", version, about = "Deterministic congestion-control experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run scenarios and export traces, charts, and a summary.
    Run(RunArgs),
    /// Rerun a grid once per value of one config key.
    Sweep(SweepArgs),
    /// Parse a config file and exit; prints nothing on success.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario name, a comma list, or 'all'.
    #[arg(long)]
    scenario: String,
    /// Controller name, a comma list, or 'all'.
    #[arg(long, default_value = "ub")]
    controller: String,
    /// Seeds to run, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "42")]
    seed: Vec<u64>,
    /// Optional config file layered over the scenario preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for run artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Extra 'key = value' overrides, applied last; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Config key to sweep, e.g. controller.gamma.
    #[arg(long)]
    param: String,
    /// Values the key takes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Run(args) => cmd_run(&args),
        Cmd::Sweep(args) => cmd_sweep(&args),
        Cmd::Validate(args) => cmd_validate(&args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        let code = match e {
            Error::Config(_) | Error::Argument(_) => 2,
            Error::Io { .. } => 1,
        };
        std::process::exit(code);
    }
}

fn scenarios_of(arg: &str) -> Result<Vec<ScenarioKind>> {
    if arg == "all" {
        return Ok(ScenarioKind::ALL.to_vec());
    }
    arg.split(',').map(|s| ScenarioKind::parse(s.trim())).collect()
}

fn controllers_of(arg: &str) -> Result<Vec<ControllerKind>> {
    if arg == "all" {
        return Ok(ControllerKind::ALL.to_vec());
    }
    arg.split(',')
        .map(|s| {
            ControllerKind::parse(s.trim()).ok_or_else(|| {
                Error::Config(format!(
                    "unknown controller '{s}' (expected ub, vegas, westwood, or all)"
                ))
            })
        })
        .collect()
}

/// Scenario preset, then the config file, then --set pairs; last wins.
fn layered_config(scenario: ScenarioKind, args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = scenario.preset();
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    for pair in &args.set {
        let Some((key, value)) = pair.split_once('=') else {
            return Err(Error::Config(format!("--set expects KEY=VALUE, got '{pair}'")));
        };
        cfg.set(key.trim(), value.trim())?;
    }
    Ok(cfg)
}

/// Run one scenario's (controller x seed) grid and export each cell under
/// `out`. Returns the summary rows in grid order.
fn run_scenario_grid(
    scenario: ScenarioKind,
    controllers: &[ControllerKind],
    seeds: &[u64],
    cfg: &RunConfig,
    out: &std::path::Path,
) -> Result<Vec<SummaryRow>> {
    cfg.validate()?;
    let cells: Vec<Cell> = controllers
        .iter()
        .flat_map(|&controller| {
            seeds.iter().map(move |&seed| Cell { scenario, controller, seed })
        })
        .collect();
    let reports = run_grid(&cells, cfg);
    let mut rows = Vec::with_capacity(cells.len());
    for (cell, report) in cells.iter().zip(&reports) {
        metrics::check_report(report)
            .unwrap_or_else(|msg| panic!("conservation violated in {}: {msg}", report.scenario));
        let dir = out.join(format!(
            "{}_{}_seed{}",
            scenario.name(),
            cell.controller.name(),
            cell.seed
        ));
        export::write_run_dir(&dir, report)?;
        rows.push(export::summary_row(report, cfg.stability_band)?);
    }
    Ok(rows)
}

fn print_rows(rows: &[SummaryRow]) {
    println!("{}", export::SUMMARY_HEADER);
    for r in rows {
        println!(
            "{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.controller.name(),
            r.seed,
            r.goodput_bps,
            r.efficiency_mbits_total,
            r.stability_index,
            r.drops,
            r.retransmits,
            r.consumed_bits
        );
    }
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let scenarios = scenarios_of(&args.scenario)?;
    let controllers = controllers_of(&args.controller)?;
    if args.seed.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let mut rows = Vec::new();
    for &scenario in &scenarios {
        let cfg = layered_config(scenario, args)?;
        rows.extend(run_scenario_grid(scenario, &controllers, &args.seed, &cfg, &args.out)?);
    }
    export::write_summary(&args.out.join("summary.csv"), &rows)?;
    print_rows(&rows);
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let scenarios = scenarios_of(&args.run.scenario)?;
    let controllers = controllers_of(&args.run.controller)?;
    for value in &args.values {
        let sub_out = args.run.out.join(format!("{}={}", args.param, value));
        let mut rows = Vec::new();
        for &scenario in &scenarios {
            let mut cfg = layered_config(scenario, &args.run)?;
            cfg.set(&args.param, value)?;
            rows.extend(run_scenario_grid(
                scenario,
                &controllers,
                &args.run.seed,
                &cfg,
                &sub_out,
            )?);
        }
        export::write_summary(&sub_out.join("summary.csv"), &rows)?;
        println!("# {} = {}", args.param, value);
        print_rows(&rows);
    }
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<()> {
    let mut cfg = RunConfig::default();
    cfg.apply_file(&args.config)?;
    cfg.validate()
}
