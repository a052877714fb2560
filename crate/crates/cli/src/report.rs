//! Human-readable digest of a run or sweep directory.

use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::error::{CliError, Result};
use crate::output::{self, read_csv, write_dat};

fn io(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::io(path, e)
}

fn as_f64(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn text(v: &Value) -> &str {
    v.as_str().unwrap_or("")
}

/// Reads `manifest.json` from `dir`.
pub fn read_manifest(dir: &Path) -> Result<Value> {
    let path = dir.join(output::MANIFEST);
    if !path.is_file() {
        return Err(CliError::Missing(path));
    }
    let raw = std::fs::read_to_string(&path).map_err(io(&path))?;
    serde_json::from_str(&raw).map_err(|e| CliError::Json { path, source: e })
}

/// `(parameter, d_k)` rows of one Cauchy study in a sweep summary.
pub fn cauchy_rows(rows: &[Vec<String>], study: &str) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| r.len() == 6 && r[0] == study && r[3] == "d_k")
        .map(|r| {
            (
                r[2].parse().unwrap_or(f64::NAN),
                r[4].parse().unwrap_or(f64::NAN),
            )
        })
        .collect()
}

/// Prints the digest to `w` and writes `plots/*.dat` under `dir`.
pub fn report(dir: &Path, w: &mut dyn Write) -> Result<()> {
    let m = read_manifest(dir)?;
    let stdout = Path::new("<stdout>");
    let mut line = |s: String| writeln!(w, "{s}").map_err(io(stdout));

    line(format!(
        "scenario {}  kind {}  verdict {}  version {}",
        text(&m["scenario"]),
        text(&m["kind"]),
        text(&m["verdict"]),
        text(&m["software_version"])
    ))?;
    if let Some(f) = m["failure"].as_str() {
        line(format!("failure: {f}"))?;
    }
    if let Some(e) = m["final_l2_error"].as_f64() {
        line(format!("final L2 error {e:.6e}"))?;
    }

    line(String::new())?;
    line(format!(
        "{:<16} {:<7} {:>13}  check",
        "anchor", "verdict", "margin"
    ))?;
    for a in m["assertions"].as_array().into_iter().flatten() {
        let verdict = if a["passed"].as_bool().unwrap_or(false) {
            "pass"
        } else {
            "FAIL"
        };
        line(format!(
            "{:<16} {:<7} {:>13.4e}  {}",
            text(&a["anchor"]),
            verdict,
            as_f64(&a["margin"]),
            text(&a["check"])
        ))?;
    }
    let monitors = m["monitors"].as_array().cloned().unwrap_or_default();
    if !monitors.is_empty() {
        line(String::new())?;
        line(format!(
            "{:<16} {:>13}  monitored quantity",
            "anchor", "value"
        ))?;
        for r in &monitors {
            line(format!(
                "{:<16} {:>13.4e}  {}",
                text(&r["anchor"]),
                as_f64(&r["value"]),
                text(&r["quantity"])
            ))?;
        }
    }
    let members = m["members"].as_array().cloned().unwrap_or_default();
    if !members.is_empty() {
        line(String::new())?;
        line(format!(
            "{:<12} {:<10} {:>13}  verdict",
            "member", "parameter", "value"
        ))?;
        for r in &members {
            line(format!(
                "{:<12} {:<10} {:>13.4e}  {}",
                text(&r["name"]),
                text(&r["parameter"]),
                as_f64(&r["value"]),
                text(&r["verdict"])
            ))?;
        }
    }

    let plots = dir.join("plots");
    let ts = dir.join(output::TIMESERIES);
    if ts.is_file() {
        let (header, rows) = read_csv(&ts)?;
        for (c, name) in header.iter().enumerate().skip(1) {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .map(|r| {
                    (
                        r[0].parse().unwrap_or(f64::NAN),
                        r[c].parse().unwrap_or(f64::NAN),
                    )
                })
                .collect();
            write_dat(&plots.join(format!("{name}.dat")), "t", name, &pts)?;
        }
    }
    let hi = dir.join(output::HIGHER_INTEGRABILITY);
    if hi.is_file() {
        let (_, rows) = read_csv(&hi)?;
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| {
                (
                    r[0].parse().unwrap_or(f64::NAN),
                    r[1].parse().unwrap_or(f64::NAN),
                )
            })
            .collect();
        write_dat(
            &plots.join("higher_integrability.dat"),
            "sigma",
            "modular",
            &pts,
        )?;
    }
    let summary = dir.join(output::SWEEP_SUMMARY);
    if summary.is_file() {
        let (_, rows) = read_csv(&summary)?;
        for (study, label) in [("eps_cauchy", "eps"), ("m_cauchy", "m_per_dim")] {
            let d = cauchy_rows(&rows, study);
            if d.is_empty() {
                continue;
            }
            line(String::new())?;
            line(format!("{study} decay"))?;
            line(format!(
                "{:>3} {:>13} {:>13} {:>9}",
                "k", label, "d_k", "ratio"
            ))?;
            for (k, (p, v)) in d.iter().enumerate() {
                let ratio = if k == 0 {
                    String::from("-")
                } else {
                    format!("{:.3}", v / d[k - 1].1)
                };
                line(format!("{k:>3} {p:>13.4e} {v:>13.4e} {ratio:>9}"))?;
            }
            write_dat(&plots.join(format!("{study}.dat")), label, "d_k", &d)?;
        }
    }
    Ok(())
}
