mod args;
mod tables;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};

use bair::algorithms::{default_m, default_t_max, Phase1Stop, StrikeRule, UniformMode};
use bair::harness::{
    emit_document, run_cell, run_shared_phase1_cell, AlgoKind, BudgetMatching, CellSummary,
    ExperimentCell, Format, Grid, N1Choice, RunHeader,
};
use bair::lowerbound::{hard_instance_pair, indistinguishability_probe, PairParams};
use bair::user::{RhoPolicy, UserParams};
use bair::validation::{run_suite, Suite};

use args::{
    BudgetArg, CellFlags, Cli, Command, InspectArgs, LowerboundArgs, OutputFlags, Phase1StopArg,
    SimulateArgs, StrikesArg, SuiteArg, TableArgs, UniModeArg, ValidateArgs,
};

pub const BUILD_ID: &str = env!("BAIR_BUILD_ID");

/// Exit status 1 for bad input, 2 for anything that goes wrong afterwards.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(msg) => eprintln!("configuration error: {msg}"),
                Failure::Runtime(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(config_err("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(runtime_err)?;
    }
    let progress = Progress { quiet: cli.quiet };
    match cli.command {
        Command::Simulate(a) => simulate(a, progress),
        Command::Table(a) => table(a, progress),
        Command::Validate(a) => validate(a, progress),
        Command::Lowerbound(a) => lowerbound(a, progress),
        Command::Inspect(a) => inspect(a),
    }
}

#[derive(Clone, Copy)]
pub struct Progress {
    quiet: bool,
}

impl Progress {
    pub fn note(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

pub fn parse_rho(s: &str) -> Result<RhoPolicy, Failure> {
    let s = s.trim();
    match s.to_ascii_lowercase().as_str() {
        "linear" | "linear_acceptance" => return Ok(RhoPolicy::LinearAcceptance),
        _ => {}
    }
    s.strip_prefix("constant:")
        .and_then(|v| v.trim().parse::<f64>().ok())
        .map(|value| RhoPolicy::Constant { value })
        .ok_or_else(|| {
            config_err(format!(
                "invalid --rho '{s}' (expected linear or constant:<value>)"
            ))
        })
}

fn parse_algos(s: &str) -> Result<Vec<AlgoKind>, Failure> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.parse::<AlgoKind>().map_err(config_err))
        .collect()
}

fn load_grid(path: &Path) -> Result<Grid, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

/// Applies every flag except the delta and K lists.
pub fn apply_scalar_flags(cell: &mut ExperimentCell, f: &CellFlags) -> Result<(), Failure> {
    if let Some(v) = f.gap {
        cell.gap = v;
    }
    if let Some(v) = f.alpha {
        cell.alpha = v;
    }
    if let Some(v) = &f.rho {
        cell.rho = parse_rho(v)?;
    }
    if let Some(v) = f.noise_p {
        cell.noise_p = v;
    }
    if let Some(v) = f.reps {
        cell.reps = v;
    }
    if let Some(v) = f.seed {
        cell.seed = v;
    }
    if let Some(v) = &f.algos {
        cell.algos = parse_algos(v)?;
    }
    if let Some(v) = &f.n1 {
        cell.n1 = Some(v.parse::<N1Choice>().map_err(config_err)?);
    }
    if let Some(v) = f.m {
        cell.m = Some(v);
    }
    if let Some(v) = f.runs_per_instance {
        cell.runs_per_instance = v;
    }
    if let Some(v) = f.budget_matching {
        cell.budget_matching = match v {
            BudgetArg::PerInstance => BudgetMatching::PerInstance,
            BudgetArg::PerCell => BudgetMatching::PerCell,
        };
    }
    if let Some(v) = f.uni_mode {
        cell.uni_mode = match v {
            UniModeArg::Random => UniformMode::Random,
            UniModeArg::RoundRobin => UniformMode::RoundRobin,
        };
    }
    if let Some(v) = f.phase1_stop {
        cell.phase1_stop = match v {
            Phase1StopArg::Acceptances => Phase1Stop::Acceptances,
            Phase1StopArg::Steps => Phase1Stop::Steps,
        };
    }
    if let Some(v) = f.strikes {
        cell.strikes = match v {
            StrikesArg::Consecutive => StrikeRule::Consecutive,
            StrikesArg::Cumulative => StrikeRule::Cumulative,
        };
    }
    if f.coupled {
        cell.coupled = true;
    }
    Ok(())
}

/// Cells from the config file (or one default cell), with flags applied and
/// every cell validated.
pub fn resolve_cells(
    config: Option<&Path>,
    flags: &CellFlags,
) -> Result<Vec<ExperimentCell>, Failure> {
    let base = match config {
        Some(p) => load_grid(p)?.cells,
        None => vec![ExperimentCell::new(
            0.1,
            2,
            0.5,
            AlgoKind::ALL.to_vec(),
            1000,
            0,
        )],
    };
    let mut cells = Vec::new();
    for cell in base {
        let deltas = flags.delta.clone().unwrap_or_else(|| vec![cell.delta]);
        let ks = flags.k.clone().unwrap_or_else(|| vec![cell.k]);
        for &delta in &deltas {
            for &k in &ks {
                let mut c = cell.clone();
                c.delta = delta;
                c.k = k;
                apply_scalar_flags(&mut c, flags)?;
                cells.push(c);
            }
        }
    }
    finish_cells(cells)
}

pub fn finish_cells(cells: Vec<ExperimentCell>) -> Result<Vec<ExperimentCell>, Failure> {
    if cells.is_empty() {
        return Err(config_err("the grid has no cells"));
    }
    for (i, c) in cells.iter().enumerate() {
        c.validate()
            .map_err(|e| config_err(format!("cell {i}: {e}")))?;
    }
    Ok(cells)
}

pub fn run_cells(
    cells: &[ExperimentCell],
    shared: bool,
    progress: Progress,
) -> Result<Vec<CellSummary>, Failure> {
    let n = cells.len();
    cells
        .iter()
        .enumerate()
        .map(|(i, cell)| {
            let start = Instant::now();
            let s = if shared {
                run_shared_phase1_cell(cell)
            } else {
                run_cell(cell)
            }
            .map_err(runtime_err)?;
            progress.note(&format!(
                "[{}/{n}] delta={} K={} reps={} done in {:.1}s",
                i + 1,
                cell.delta,
                cell.k,
                cell.reps,
                start.elapsed().as_secs_f64()
            ));
            Ok(s)
        })
        .collect()
}

fn header(cells: &[ExperimentCell], extra: Value) -> RunHeader {
    let mut config = json!({ "cells": cells });
    if let (Value::Object(map), Value::Object(more)) = (&mut config, extra) {
        map.extend(more);
    }
    RunHeader {
        seed: cells.first().map(|c| c.seed).unwrap_or(0),
        build: BUILD_ID.to_string(),
        config,
    }
}

pub fn write_output(out: &OutputFlags, text: &str) -> Result<(), Failure> {
    match &out.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| runtime_err(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn data_format(s: Option<&str>, default: Format) -> Result<Format, Failure> {
    s.map(|v| v.parse::<Format>().map_err(config_err))
        .unwrap_or(Ok(default))
}

fn simulate(a: SimulateArgs, progress: Progress) -> Result<(), Failure> {
    let format = data_format(a.output.format.as_deref(), Format::Csv)?;
    let cells = resolve_cells(a.config.as_deref(), &a.cell)?;
    let summaries = run_cells(&cells, a.shared_phase1, progress)?;
    let head = header(
        &cells,
        json!({ "command": "simulate", "shared_phase1": a.shared_phase1 }),
    );
    let text = emit_document(&summaries, format, Some(&head)).map_err(runtime_err)?;
    write_output(&a.output, &text)
}

fn table(a: TableArgs, progress: Progress) -> Result<(), Failure> {
    let format = a
        .output
        .format
        .as_deref()
        .unwrap_or("text")
        .to_ascii_lowercase();
    let data = if format == "text" {
        None
    } else {
        Some(data_format(Some(&format), Format::Csv)?)
    };
    let cells = tables::preset_cells(a.preset, &a.cell)?;
    let shared = a.preset == args::Preset::Table4;
    let summaries = run_cells(&cells, shared, progress)?;
    let head = header(
        &cells,
        json!({ "command": "table", "preset": format!("{:?}", a.preset).to_lowercase() }),
    );
    let text = match data {
        Some(f) => emit_document(&summaries, f, Some(&head)).map_err(runtime_err)?,
        None => tables::render(a.preset, &cells, &summaries, &head),
    };
    write_output(&a.output, &text)
}

fn validate(a: ValidateArgs, progress: Progress) -> Result<(), Failure> {
    let suite = match a.suite {
        SuiteArg::Unit => Suite::Unit,
        SuiteArg::Properties => Suite::Properties,
        SuiteArg::Statistical => Suite::Statistical,
    };
    let start = Instant::now();
    let checks = run_suite(suite, a.seed).map_err(runtime_err)?;
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    progress.note(&format!(
        "{} checks, {} failed, {:.1}s",
        checks.len(),
        failed.len(),
        start.elapsed().as_secs_f64()
    ));
    if failed.is_empty() {
        Ok(())
    } else {
        Err(runtime_err(format!("failed checks: {}", failed.join("; "))))
    }
}

fn lowerbound(a: LowerboundArgs, progress: Progress) -> Result<(), Failure> {
    let rho = parse_rho(&a.rho)?;
    let algo: AlgoKind = a.algo.parse().map_err(config_err)?;
    let user = UserParams::new(a.alpha, rho, 0.0).map_err(config_err)?;
    let (rho0, rho1) = rho.bounds();
    let params = PairParams {
        k: a.k,
        delta: a.delta,
        alpha: a.alpha,
        c: a.c,
        rho0,
        rho1,
        gap: a.gap,
    };
    let pair = hard_instance_pair(params).map_err(config_err)?;
    if a.reps < 100 {
        return Err(config_err(format!(
            "probe needs at least 100 replications, got {}",
            a.reps
        )));
    }
    let start = Instant::now();
    let stats =
        indistinguishability_probe(&pair, user, algo, a.reps, a.seed).map_err(runtime_err)?;
    progress.note(&format!(
        "{} probe runs in {:.1}s",
        a.reps,
        start.elapsed().as_secs_f64()
    ));
    let doc = json!({
        "meta": {
            "seed": a.seed,
            "build": BUILD_ID,
            "config": { "params": params, "rho": rho, "algo": algo, "reps": a.reps },
        },
        "pair": pair,
        "probe": stats,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(runtime_err)? + "\n";
    write_output(
        &OutputFlags {
            out: a.out,
            format: None,
        },
        &text,
    )
}

fn derived(cell: &ExperimentCell) -> Result<Value, Failure> {
    let (rho0, rho1) = cell.rho.bounds();
    let n1 = cell
        .n1
        .unwrap_or_default()
        .resolve(cell.k, cell.delta, cell.alpha, rho0)
        .map_err(config_err)?;
    let m = match cell.m {
        Some(m) => m,
        None => default_m(cell.k, cell.delta, cell.noise_p).map_err(config_err)?,
    };
    let t_max = default_t_max(cell.k, cell.delta, rho0).map_err(config_err)?;
    Ok(json!({
        "n1": n1,
        "m": m,
        "rho0": rho0,
        "rho1": rho1,
        "ts_t_max": t_max,
        "labels": cell.algos.iter().map(|&a| cell.algo_label(a)).collect::<Vec<_>>(),
    }))
}

fn inspect(a: InspectArgs) -> Result<(), Failure> {
    let cells = resolve_cells(a.config.as_deref(), &a.cell)?;
    let rows = cells
        .iter()
        .map(|c| Ok(json!({ "cell": c, "derived": derived(c)? })))
        .collect::<Result<Vec<_>, Failure>>()?;
    let doc = json!({ "build": BUILD_ID, "cells": rows });
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).map_err(runtime_err)?
    );
    Ok(())
}
