//! CSV, `.dat` and JSON artifacts.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use dphase_core::diagnostics::{SecondOrderNorms, SeriesRow};
use dphase_core::galerkin::{evaluate_lattice, uniform_axis, EigenBasis, StepRecord};
use dphase_core::SpectralState;

use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";
pub const TIMESERIES: &str = "timeseries.csv";
pub const HIGHER_INTEGRABILITY: &str = "higher_integrability.csv";
pub const SECOND_ORDER: &str = "second_order.csv";
pub const STEPS: &str = "steps.csv";
pub const SWEEP_SUMMARY: &str = "sweep_summary.csv";
pub const PROPERTY_SUMMARY: &str = "property_summary.csv";

pub const TIMESERIES_COLUMNS: [&str; 8] = [
    "t",
    "l2_sq",
    "flux_energy_eps",
    "flux_energy_0",
    "grad_l2_sq",
    "energy_residual",
    "ut_sq_accum",
    "linf",
];

/// 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Comma-separated table with a header line.
#[derive(Clone, Debug, Default)]
pub struct Table {
    buf: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            buf: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.buf, "{}", cells.join(","));
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.buf)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    write_text(path, &(text + "\n"))
}

pub fn write_timeseries(dir: &Path, rows: &[SeriesRow]) -> Result<()> {
    let mut t = Table::new(&TIMESERIES_COLUMNS);
    for r in rows {
        t.row(&[
            num(r.t),
            num(r.l2_sq),
            num(r.flux_energy_eps),
            num(r.flux_energy_0),
            num(r.grad_l2_sq),
            num(r.energy_residual),
            num(r.ut_sq_accum),
            num(r.linf),
        ]);
    }
    t.write(&dir.join(TIMESERIES))
}

pub fn write_higher_integrability(dir: &Path, rows: &[(f64, f64)]) -> Result<()> {
    let mut t = Table::new(&["sigma", "value"]);
    for (s, v) in rows {
        t.row(&[num(*s), num(*v)]);
    }
    t.write(&dir.join(HIGHER_INTEGRABILITY))
}

/// One row per `(i, j)`, 1-based, holding `‖D_i(√F_ε D_j u)‖₂`.
pub fn write_second_order(dir: &Path, norms: Option<&SecondOrderNorms>) -> Result<()> {
    let mut t = Table::new(&["i", "j", "norm"]);
    if let Some(n) = norms {
        for i in 0..n.squared.len() {
            for j in 0..n.squared[i].len() {
                t.row(&[(i + 1).to_string(), (j + 1).to_string(), num(n.norm(i, j))]);
            }
        }
    }
    t.write(&dir.join(SECOND_ORDER))
}

pub fn write_steps(dir: &Path, steps: &[StepRecord]) -> Result<()> {
    let mut t = Table::new(&[
        "t",
        "tau",
        "newton_iterations",
        "residual",
        "residual_bound",
        "dissipation_lhs",
        "dissipation_rhs",
        "proximal_lhs",
        "proximal_rhs",
        "ut_sq",
        "flux_energy",
    ]);
    for s in steps {
        t.row(&[
            num(s.t),
            num(s.tau),
            s.newton_iterations.to_string(),
            num(s.residual),
            num(s.residual_bound),
            num(s.dissipation_lhs),
            num(s.dissipation_rhs),
            num(s.proximal_lhs),
            num(s.proximal_rhs),
            num(s.ut_sq),
            num(s.flux_energy),
        ]);
    }
    t.write(&dir.join(STEPS))
}

pub fn snapshot_name(t: f64) -> String {
    format!("snapshot_t{t}.csv")
}

/// `u` and `|∇u|` on a uniform lattice of `n` points per axis.
pub fn write_snapshot(
    dir: &Path,
    name: &str,
    basis: &EigenBasis,
    state: &SpectralState,
    n: usize,
) -> Result<()> {
    let axis = uniform_axis(n);
    let lat = evaluate_lattice(basis, &state.coeffs, &axis)?;
    let dim = basis.dim();
    let mut header: Vec<String> = (1..=dim).map(|d| format!("x{d}")).collect();
    header.push("u".into());
    header.push("grad_norm".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new(&header);
    let cols = if dim == 1 { 1 } else { axis.len() };
    for a in 0..axis.len() {
        for b in 0..cols {
            let g: f64 = lat
                .grad
                .iter()
                .map(|m| m[(a, b)] * m[(a, b)])
                .sum::<f64>()
                .sqrt();
            let mut cells = vec![num(axis[a])];
            if dim == 2 {
                cells.push(num(axis[b]));
            }
            cells.push(num(lat.u[(a, b)]));
            cells.push(num(g));
            t.row(&cells);
        }
    }
    t.write(&dir.join(name))
}

/// Two-column whitespace-separated plot data.
pub fn write_dat(path: &Path, xlabel: &str, ylabel: &str, points: &[(f64, f64)]) -> Result<()> {
    let mut s = format!("# {xlabel} {ylabel}\n");
    for (x, y) in points {
        let _ = writeln!(s, "{} {}", num(*x), num(*y));
    }
    write_text(path, &s)
}

/// Parses a CSV written by [`Table`] into its header and string cells.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Missing(path.to_path_buf()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_exactly() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02e23] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }
}
