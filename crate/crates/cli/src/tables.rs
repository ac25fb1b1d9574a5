//! Preset grids for the standard comparison tables and their text layout.

use std::fmt::Write as _;

use bair::harness::{AlgoKind, AlgoSummary, CellSummary, ExperimentCell, N1Choice, RunHeader};

use crate::args::{CellFlags, Preset};
use crate::{apply_scalar_flags, finish_cells, Failure};

const ALL_K: [usize; 4] = [2, 5, 20, 100];
const N1_COLUMNS: [N1Choice; 4] = [
    N1Choice::Default,
    N1Choice::SqrtK,
    N1Choice::LogK,
    N1Choice::K,
];

struct PresetSpec {
    deltas: &'static [f64],
    ks: &'static [usize],
    alpha: f64,
    noise_p: f64,
    algos: &'static [AlgoKind],
    n1s: &'static [Option<N1Choice>],
}

fn spec(preset: Preset) -> PresetSpec {
    const NO_N1: &[Option<N1Choice>] = &[None];
    match preset {
        Preset::Table2 => PresetSpec {
            deltas: &[0.1, 0.05, 0.02, 0.01, 0.005],
            ks: &ALL_K,
            alpha: 1.0,
            noise_p: 0.0,
            algos: &AlgoKind::ALL,
            n1s: NO_N1,
        },
        Preset::Table3 => PresetSpec {
            deltas: &[0.1, 0.05],
            ks: &ALL_K,
            alpha: 1.0,
            noise_p: 0.1,
            algos: &AlgoKind::ALL,
            n1s: NO_N1,
        },
        Preset::Table4 => PresetSpec {
            deltas: &[0.02, 0.01],
            ks: &ALL_K,
            alpha: 1.0,
            noise_p: 0.0,
            algos: &AlgoKind::ALL,
            n1s: NO_N1,
        },
        Preset::Table7 => PresetSpec {
            deltas: &[0.1, 0.01],
            ks: &[20, 100],
            alpha: 0.8,
            noise_p: 0.0,
            algos: &[AlgoKind::Bair],
            n1s: &[
                Some(N1_COLUMNS[0]),
                Some(N1_COLUMNS[1]),
                Some(N1_COLUMNS[2]),
                Some(N1_COLUMNS[3]),
            ],
        },
    }
}

/// The preset's grid, 1000 instances per cell, with the flags applied on top.
/// `--delta` and `--k` replace the preset's lists.
pub fn preset_cells(preset: Preset, flags: &CellFlags) -> Result<Vec<ExperimentCell>, Failure> {
    let s = spec(preset);
    let deltas = flags.delta.clone().unwrap_or_else(|| s.deltas.to_vec());
    let ks = flags.k.clone().unwrap_or_else(|| s.ks.to_vec());
    let mut cells = Vec::new();
    for &delta in &deltas {
        for &k in &ks {
            for &n1 in s.n1s {
                let mut c = ExperimentCell::new(delta, k, 0.5, s.algos.to_vec(), 1000, 0);
                c.alpha = s.alpha;
                c.noise_p = s.noise_p;
                c.n1 = n1;
                apply_scalar_flags(&mut c, flags)?;
                cells.push(c);
            }
        }
    }
    finish_cells(cells)
}

fn find(s: &CellSummary, algo: AlgoKind) -> Option<&AlgoSummary> {
    let name = algo.name();
    s.algos
        .iter()
        .find(|a| a.algo == name || a.algo.starts_with(&format!("{name}[")))
}

fn cell_text(v: Option<String>, width: usize) -> String {
    format!("{:>width$}", v.unwrap_or_else(|| "-".into()))
}

const ORDER: [AlgoKind; 4] = [AlgoKind::Bair, AlgoKind::Uni, AlgoKind::Exp3, AlgoKind::Ts];

fn title(preset: Preset) -> &'static str {
    match preset {
        Preset::Table2 => "BAIR against three baselines (alpha = 1)",
        Preset::Table3 => "Click noise p = 0.1, m = ceil(2 ln(K/delta))",
        Preset::Table4 => "Baselines after a shared Phase 1 (Phase-2 stopping time)",
        Preset::Table7 => "BAIR under different Phase-1 budgets N1 (alpha = 0.8)",
    }
}

/// Fixed-width table: one row per (delta, K).
pub fn render(
    preset: Preset,
    cells: &[ExperimentCell],
    summaries: &[CellSummary],
    head: &RunHeader,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# seed: {}", head.seed);
    let _ = writeln!(out, "# build: {}", head.build);
    let _ = writeln!(out, "# config: {}", head.config);
    let _ = writeln!(out, "{}", title(preset));
    if preset == Preset::Table7 {
        render_n1(&mut out, cells, summaries);
    } else {
        render_comparison(&mut out, summaries);
    }
    out
}

fn render_comparison(out: &mut String, summaries: &[CellSummary]) {
    let _ = writeln!(
        out,
        "{:>7} {:>4} | {:>8} {:>8} | {:>6} {:>6} {:>6} {:>6} | {:>6} {:>6} {:>6} {:>6}",
        "", "", "stop", "", "rej%", "", "", "", "succ", "", "", ""
    );
    let _ = writeln!(
        out,
        "{:>7} {:>4} | {:>8} {:>8} | {:>6} {:>6} {:>6} {:>6} | {:>6} {:>6} {:>6} {:>6}",
        "delta", "K", "BAIR", "T&S", "BAIR", "UNI", "EXP3", "T&S", "BAIR", "UNI", "EXP3", "T&S"
    );
    for s in summaries {
        let stop = |a| cell_text(find(s, a).map(|x| format!("{:.0}", x.mean_stop_time)), 8);
        let rej = |a| {
            cell_text(
                find(s, a).map(|x| format!("{:.1}", 100.0 * x.mean_rejection_rate)),
                6,
            )
        };
        let succ = |a| cell_text(find(s, a).map(|x| format!("{:.3}", x.success_rate)), 6);
        let _ = writeln!(
            out,
            "{:>7} {:>4} | {} {} | {} | {}",
            s.delta,
            s.k,
            stop(AlgoKind::Bair),
            stop(AlgoKind::Ts),
            ORDER.map(rej).join(" "),
            ORDER.map(succ).join(" "),
        );
    }
}

fn render_n1(out: &mut String, cells: &[ExperimentCell], summaries: &[CellSummary]) {
    let labels: Vec<String> = N1_COLUMNS.iter().map(|c| c.label()).collect();
    let _ = writeln!(
        out,
        "{:>7} {:>4} | {:>8} {:>8} {:>8} {:>8} | {:>7} {:>7} {:>7} {:>7}",
        "delta",
        "K",
        labels[0],
        labels[1],
        labels[2],
        labels[3],
        labels[0],
        labels[1],
        labels[2],
        labels[3]
    );
    let mut i = 0;
    while i < cells.len() {
        let key = (cells[i].delta, cells[i].k);
        let mut j = i;
        let mut stops = vec![None; 4];
        let mut succs = vec![None; 4];
        while j < cells.len() && (cells[j].delta, cells[j].k) == key {
            let col = N1_COLUMNS.iter().position(|c| {
                Some(*c) == cells[j].n1 || (cells[j].n1.is_none() && *c == N1Choice::Default)
            });
            if let (Some(col), Some(a)) = (col, find(&summaries[j], AlgoKind::Bair)) {
                stops[col] = Some(format!("{:.0}", a.mean_stop_time));
                succs[col] = Some(format!("{:.3}", a.success_rate));
            }
            j += 1;
        }
        let stops: Vec<String> = stops.into_iter().map(|v| cell_text(v, 8)).collect();
        let succs: Vec<String> = succs.into_iter().map(|v| cell_text(v, 7)).collect();
        let _ = writeln!(
            out,
            "{:>7} {:>4} | {} | {}",
            key.0,
            key.1,
            stops.join(" "),
            succs.join(" ")
        );
        i = j;
    }
}
