//! Seeded random bounded-data scenarios.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use dphase_core::diagnostics::{
    apriori_energy_bound, linf_bound_check, solve_with_system, AssertionRow, TrajectoryView,
};
use dphase_core::galerkin::{Forcing, SolverConfig};
use dphase_core::{par, ExponentData, FieldSpec};

use crate::config::{PropertyConfig, RunConfig};
use crate::error::{Result, Verdict};
use crate::output::{self, num, Table};
use crate::run::MemberSummary;
use crate::sweep::{Studies, SUMMARY_COLUMNS};

/// Bound on `|p − q|` used when drawing exponents, below the admissible gap.
const GAP_DRAW: f64 = 0.45;
/// Largest wavenumber per axis of the drawn sine modes.
const MAX_WAVENUMBER: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub data: ExponentData,
    pub initial: FieldSpec,
    pub forcing: Forcing,
}

fn sine_sum(rng: &mut ChaCha8Rng, dim: usize, terms: usize, amp: f64) -> FieldSpec {
    FieldSpec::Sum {
        terms: (0..terms)
            .map(|_| {
                let ks: Vec<usize> = (0..dim)
                    .map(|_| rng.random_range(1..=MAX_WAVENUMBER))
                    .collect();
                FieldSpec::sine_mode(&ks, rng.random_range(-amp..amp))
            })
            .collect(),
    }
}

fn axis_slope(rng: &mut ChaCha8Rng, dim: usize, range: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-range..range)).collect()
}

/// Draws `n` admissible scenarios with exponents crossing or not at random.
pub fn draw_scenarios(base: &RunConfig, prop: &PropertyConfig) -> Vec<Scenario> {
    let dim = base.data.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(base.seed);
    (0..prop.scenarios)
        .map(|_| {
            let p0 = rng.random_range(1.6..2.4);
            let sp = axis_slope(&mut rng, dim, 0.1);
            let gap = rng.random_range(-0.25..0.25);
            let budget = (GAP_DRAW - f64::abs(gap)) / dim as f64;
            let sq: Vec<f64> = sp
                .iter()
                .map(|s| s + rng.random_range(-budget..budget))
                .collect();
            let a = rng.random_range(0.2..0.8);
            let b = rng.random_range(0.2..0.8);
            let data = ExponentData {
                p: FieldSpec::Affine {
                    offset: p0,
                    slope: sp,
                    rate: 0.0,
                },
                q: FieldSpec::Affine {
                    offset: p0 + gap,
                    slope: sq,
                    rate: 0.0,
                },
                a: FieldSpec::constant(a),
                b: FieldSpec::constant(b),
                alpha: 0.5 * (a + b),
                horizon: prop.horizon,
                ..base.data.clone()
            };
            let terms = rng.random_range(1..=3usize);
            let initial = sine_sum(&mut rng, dim, terms, 0.5);
            let forcing = match rng.random_range(0..3u8) {
                0 => Forcing::None,
                1 => Forcing::field(FieldSpec::constant(rng.random_range(-1.0..1.0))),
                _ => Forcing::field(sine_sum(&mut rng, dim, 1, 1.0)),
            };
            Scenario {
                data,
                initial,
                forcing,
            }
        })
        .collect()
}

struct Checked {
    linf_margin: f64,
    linf_holds: bool,
    apriori_ratio: f64,
    apriori_holds: bool,
}

fn check(
    solver: &SolverConfig,
    s: &Scenario,
    lattice: usize,
    slack: f64,
) -> dphase_core::Result<Checked> {
    let (sys, tr) = solve_with_system(solver, &s.data, &s.initial, &s.forcing)?;
    let view = TrajectoryView::new(&sys, &tr)?;
    let linf = linf_bound_check(&view, &s.initial, lattice, slack)?;
    let ap = apriori_energy_bound(&view);
    Ok(Checked {
        linf_margin: linf.min_margin(),
        linf_holds: linf.holds(),
        apriori_ratio: ap.ratio,
        apriori_holds: ap.holds,
    })
}

/// Solves every drawn scenario and asserts the L∞ envelope and the a-priori bound.
pub fn property_studies(cfg: &RunConfig, dir: &Path, out: &mut Studies) -> Result<()> {
    let Some(prop) = &cfg.property else {
        return Ok(());
    };
    let scenarios = draw_scenarios(cfg, prop);
    output::write_json(&dir.join("property_scenarios.json"), &scenarios)?;
    let solver = SolverConfig {
        m_per_dim: prop.m_per_dim,
        tau: prop.tau,
        ..cfg.solver.clone()
    };
    let lattice = cfg.diagnostics.linf_lattice;
    let results = par::map_slice(&scenarios, |s| check(&solver, s, lattice, prop.linf_slack));

    let mut table = Table::new(&SUMMARY_COLUMNS);
    let (mut linf_bad, mut apriori_bad, mut solved) = (0usize, 0usize, 0usize);
    for (k, r) in results.iter().enumerate() {
        match r {
            Ok(c) => {
                solved += 1;
                linf_bad += usize::from(!c.linf_holds);
                apriori_bad += usize::from(!c.apriori_holds);
                let mark = |ok: bool| if ok { "pass" } else { "fail" }.to_string();
                table.row(&[
                    "property".into(),
                    k.to_string(),
                    num(k as f64),
                    "linf_min_margin".into(),
                    num(c.linf_margin),
                    mark(c.linf_holds),
                ]);
                table.row(&[
                    "property".into(),
                    k.to_string(),
                    num(k as f64),
                    "apriori_ratio".into(),
                    num(c.apriori_ratio),
                    mark(c.apriori_holds),
                ]);
            }
            Err(e) => {
                table.row(&[
                    "property".into(),
                    k.to_string(),
                    num(k as f64),
                    "solve_failed".into(),
                    num(f64::NAN),
                    "fail".into(),
                ]);
                out.members.push(MemberSummary {
                    name: format!("property_{k}"),
                    study: "property".into(),
                    parameter: "scenario".into(),
                    value: k as f64,
                    verdict: Verdict::SolverFailure,
                    failure: Some(e.to_string()),
                });
            }
        }
    }
    table.write(&dir.join(output::PROPERTY_SUMMARY))?;
    out.assertions.push(AssertionRow::at_most(
        "est:bdd",
        &format!("L-infinity envelope violations over {solved} random scenarios"),
        linf_bad as f64,
        0.0,
        0.0,
    ));
    out.assertions.push(AssertionRow::at_most(
        "secderiboun",
        &format!("a-priori bound violations over {solved} random scenarios"),
        apriori_bad as f64,
        0.0,
        0.0,
    ));
    Ok(())
}
