//! Terminal tables and CSV output.

use std::fs;
use std::path::{Path, PathBuf};

use comfy_table::presets::ASCII_BORDERS_ONLY_CONDENSED;
use comfy_table::{Cell, CellAlignment, Table};
use jointva_core::config::RunConfig;
use jointva_core::term_structure::ForwardCurve;

pub struct TextTable {
    table: Table,
}

impl TextTable {
    pub fn new(header: &[&str]) -> Self {
        let mut table = Table::new();
        table.load_preset(ASCII_BORDERS_ONLY_CONDENSED).set_header(header.iter().copied());
        TextTable { table }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        // Numbers right-aligned, labels left.
        self.table.add_row(cells.into_iter().map(|s| {
            let align = if s.parse::<f64>().is_ok() { CellAlignment::Right } else { CellAlignment::Left };
            Cell::new(s).set_alignment(align)
        }));
    }
}

impl std::fmt::Display for TextTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.table)
    }
}

fn curve_label(cfg: &RunConfig) -> String {
    match cfg.forward_curve() {
        Ok(ForwardCurve::Flat(r)) => format!("flat {r}"),
        Ok(_) => format!("piecewise linear, {} knots", cfg.market.forward_curve.len()),
        Err(e) => format!("invalid ({e})"),
    }
}

/// Report header: every setting a reader needs to reproduce the run.
pub fn header(cfg: &RunConfig, command: &str, method: &str) -> String {
    let c = &cfg.contract;
    let n = &cfg.numerics;
    format!(
        "jointva {command}\n  method {method}  seed {}  samples {}  quad_tol {:e}\n  curve {}  T {}  I {}  delta {}  alpha {}  r {}  beta {}  C {}\n",
        n.seed,
        n.samples,
        n.quad_tol,
        curve_label(cfg),
        c.maturity,
        c.notional,
        c.guarantee_rate,
        c.death_multiplier,
        c.damping,
        cfg.surrender.beta,
        cfg.surrender.baseline,
    )
}

pub fn ensure_dir(dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create output directory {}: {e}", dir.display()))
}

/// Writes a header row and records as a UTF-8, LF-terminated CSV.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, String> {
    let io = |e: csv::Error| format!("{}: {e}", path.display());
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(path.to_path_buf())
}

pub fn num(x: f64) -> String {
    format!("{x:.6}")
}

pub fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

/// Grid coordinate for display: at most six decimals, trailing zeros dropped.
pub fn coord(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}
