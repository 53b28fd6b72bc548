//! The `evac` command line: planning, replanning, export, statistics and conversion.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use evac_core::fire::{build_cache, FireScenario};
use evac_core::io::convert::convert_csv;
use evac_core::io::fire_file::{read_fire, read_update};
use evac_core::io::geojson::export_geojson;
use evac_core::io::plan_file::{read_plan, write_plan};
use evac_core::io::report::{render_table, RunReport};
use evac_core::io::{canonical_json, read_json, read_network, write_text, FileError};
use evac_core::planner::{plan_initial, plan_update, EvacuationPlan, PlanOutcome, PlannerConfig, UpdateRequest};
use evac_core::roadnet::{contract, load_network, DynamicNetwork, DEFAULT_DT_SECONDS};
use evac_core::ten::build_ten_with;
use evac_core::wten::{build_window, WindowSpec};
use evac_core::Error;
use log::info;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "evac", version, about = "Wildfire-aware evacuation planning on road networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan an evacuation from scratch.
    Plan(PlanArgs),
    /// Replan from an instance onward under a revised fire prediction.
    Update(UpdateArgs),
    /// Export per-road flows and the fire footprint for an instance range.
    Export(ExportArgs),
    /// Print run reports as a table.
    Stats(StatsArgs),
    /// Convert node and edge CSV exports into a network document.
    Convert(ConvertArgs),
    /// Print the edge list of the time-expanded network.
    Dump(DumpArgs),
}

#[derive(Debug, clap::Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub fire: PathBuf,
    /// Merge radius for nearby nodes, in meters.
    #[arg(long, default_value_t = 0.0)]
    pub tolerance: f64,
    #[arg(long)]
    pub tmax: u32,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Let people wait at every node, not only at sources and sinks.
    #[arg(long)]
    pub holdover_all: bool,
}

#[derive(Debug, clap::Args)]
pub struct UpdateArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long)]
    pub fire_update: PathBuf,
    #[arg(long)]
    pub t_reopt: u32,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the previous plan's limit.
    #[arg(long)]
    pub tmax: Option<u32>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub holdover_all: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Geojson,
}

#[derive(Debug, clap::Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long, value_enum, default_value_t = ExportFormat::Geojson)]
    pub format: ExportFormat,
    #[arg(long, default_value_t = 0)]
    pub t_from: u32,
    /// Defaults to the plan horizon.
    #[arg(long)]
    pub t_to: Option<u32>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct StatsArgs {
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub nodes: PathBuf,
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DT_SECONDS)]
    pub dt: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DumpKind {
    Ten,
    Wten,
}

#[derive(Debug, clap::Args)]
pub struct DumpArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long, value_enum, default_value_t = DumpKind::Ten)]
    pub kind: DumpKind,
    #[arg(long)]
    pub horizon: u32,
    /// Fire scenario for `--kind wten`; no fire if omitted.
    #[arg(long)]
    pub fire: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub tolerance: f64,
    #[arg(long)]
    pub holdover_all: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_infeasible() {
        EXIT_INFEASIBLE
    } else {
        EXIT_INPUT
    }
}

/// Runs one command; text meant for the user is returned rather than printed.
pub fn run(cli: Cli) -> Result<String, Error> {
    match cli.command {
        Command::Plan(a) => cmd_plan(&a),
        Command::Update(a) => cmd_update(&a),
        Command::Export(a) => cmd_export(&a),
        Command::Stats(a) => cmd_stats(&a),
        Command::Convert(a) => cmd_convert(&a),
        Command::Dump(a) => cmd_dump(&a),
    }
}

fn load_contracted(path: &Path, tolerance: f64) -> Result<DynamicNetwork, Error> {
    let net = read_network(path)?;
    if tolerance != 0.0 {
        let merged = contract(&net, tolerance)?;
        info!("contracted {} nodes to {}", net.node_count(), merged.node_count());
        return Ok(merged);
    }
    Ok(net)
}

fn summary(plan: &EvacuationPlan) -> String {
    format!(
        "T_sol={} evacuated={}/{} stranded={} complete={}\n",
        plan.horizon, plan.evacuated, plan.total_supply, plan.stranded, plan.complete
    )
}

fn finish(command: &str, net: &DynamicNetwork, outcome: &PlanOutcome, out: &Path, report: Option<&Path>) -> Result<String, Error> {
    write_plan(out, &outcome.plan)?;
    if let Some(path) = report {
        let r = RunReport::new(command, net.node_count(), net.arc_count(), &outcome.plan, &outcome.stats);
        write_text(path, &canonical_json(&r))?;
    }
    Ok(summary(&outcome.plan))
}

pub fn cmd_plan(a: &PlanArgs) -> Result<String, Error> {
    let started = Instant::now();
    let net = load_contracted(&a.network, a.tolerance)?;
    let scenario = read_fire(&a.fire, net.origin())?;
    let cfg = PlannerConfig { holdover_all: a.holdover_all };
    let mut outcome = plan_initial(&net, &scenario, a.tmax, &cfg)?;
    outcome.plan.tolerance_m = a.tolerance;
    outcome.stats.timings.total = started.elapsed();
    finish("plan", &net, &outcome, &a.out, a.report.as_deref())
}

pub fn cmd_update(a: &UpdateArgs) -> Result<String, Error> {
    let started = Instant::now();
    let prev = read_plan(&a.plan)?;
    let net = load_contracted(&a.network, prev.tolerance_m)?;
    let (t_fire, new_scenario) = read_update(&a.fire_update, net.origin())?;
    let req = UpdateRequest { t_reopt: a.t_reopt, t_fire, new_scenario };
    let cfg = PlannerConfig { holdover_all: a.holdover_all };
    let mut outcome = plan_update(&net, &prev, &req, a.tmax.unwrap_or(prev.t_max), &cfg)?;
    outcome.stats.timings.total = started.elapsed();
    finish("update", &net, &outcome, &a.out, a.report.as_deref())
}

pub fn cmd_export(a: &ExportArgs) -> Result<String, Error> {
    let plan = read_plan(&a.plan)?;
    let net = load_contracted(&a.network, plan.tolerance_m)?;
    let t_to = a.t_to.unwrap_or(plan.horizon);
    let doc = match a.format {
        ExportFormat::Geojson => export_geojson(&net, &plan, a.t_from, t_to)?,
    };
    write_text(&a.out, &canonical_json(&doc))?;
    let used = doc["features"]
        .as_array()
        .map(|f| f.iter().filter(|x| x["properties"]["used"] == true).count())
        .unwrap_or(0);
    Ok(format!("instances {}..={t_to}: {used} roads with flow\n", a.t_from))
}

pub fn cmd_stats(a: &StatsArgs) -> Result<String, Error> {
    let mut reports = Vec::with_capacity(a.reports.len());
    for path in &a.reports {
        let r: RunReport = read_json(path)?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        reports.push((name, r));
    }
    Ok(render_table(&reports))
}

pub fn cmd_convert(a: &ConvertArgs) -> Result<String, Error> {
    let doc = convert_csv(&a.nodes, &a.edges, a.dt)?;
    let net = load_network(&doc).map_err(|e| FileError::invalid(&a.edges, e.to_string()))?;
    write_text(&a.out, &canonical_json(&doc))?;
    Ok(format!("{} nodes, {} arcs\n", net.node_count(), net.arc_count()))
}

pub fn cmd_dump(a: &DumpArgs) -> Result<String, Error> {
    let net = load_contracted(&a.network, a.tolerance)?;
    let text = match a.kind {
        DumpKind::Ten => build_ten_with(&net, a.horizon, a.holdover_all).dump(),
        DumpKind::Wten => {
            let scenario = match &a.fire {
                Some(path) => read_fire(path, net.origin())?,
                None => FireScenario::none(),
            };
            let cache = build_cache(&net, &scenario, a.horizon)?;
            let spec = WindowSpec { holdover_all: a.holdover_all, ..WindowSpec::initial(&net, a.horizon) };
            build_window(&net, &cache, &spec).map_err(evac_core::planner::PlanError::from)?.dump()
        }
    };
    match &a.out {
        Some(path) => {
            write_text(path, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}
