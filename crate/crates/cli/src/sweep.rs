//! Sweep members and the studies built on them.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dphase_core::diagnostics::{
    checkpoint_subset, continuation_from_members, decreasing_within, refinement_from_members,
    scaled, second_order_flux_norm, solve_with_system, stability_from_views, AssertionRow,
    MonitorRow, TrajectoryView,
};
use dphase_core::galerkin::Forcing;
use dphase_core::{par, FieldSpec};

use crate::config::{RunConfig, StabilityConfig, SweepConfig};
use crate::error::{Result, Verdict};
use crate::output::{self, num, Table};
use crate::property;
use crate::run::{run_single, MemberSummary, RunManifest, SingleRun, Solved};

pub const SUMMARY_COLUMNS: [&str; 6] = [
    "study",
    "index",
    "parameter",
    "quantity",
    "value",
    "verdict",
];

/// Accepted energy-residual ratio when `τ` halves.
pub const HALVING_WINDOW: (f64, f64) = (1.5, 3.0);
/// Accepted deviation of the observed `τ`-order from 1.
pub const ORDER_TOLERANCE: f64 = 0.3;

/// Everything the studies add to a manifest.
#[derive(Debug, Default)]
pub struct Studies {
    pub assertions: Vec<AssertionRow>,
    pub monitors: Vec<MonitorRow>,
    pub members: Vec<MemberSummary>,
}

impl Studies {
    pub fn merge_into(self, m: &mut RunManifest) {
        m.assertions.extend(self.assertions);
        m.monitors.extend(self.monitors);
        m.members.extend(self.members);
    }
}

fn mark(ok: bool) -> String {
    if ok { "pass" } else { "fail" }.into()
}

fn summary_row(
    t: &mut Table,
    study: &str,
    index: usize,
    parameter: f64,
    quantity: &str,
    value: f64,
    verdict: String,
) {
    t.row(&[
        study.into(),
        index.to_string(),
        num(parameter),
        quantity.into(),
        num(value),
        verdict,
    ]);
}

/// `max/min` over nonnegative values; 1 when all vanish.
pub fn envelope_ratio(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if values.is_empty() || max == 0.0 {
        1.0
    } else if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Least-squares slope of `ln e` against `ln τ`.
pub fn observed_order(taus: &[f64], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

struct MemberSpec {
    name: String,
    study: &'static str,
    parameter: &'static str,
    value: f64,
    cfg: RunConfig,
}

fn member_specs(cfg: &RunConfig, sweep: &SweepConfig) -> Vec<MemberSpec> {
    let base = RunConfig {
        sweep: None,
        property: None,
        ..cfg.clone()
    };
    let mut specs = Vec::new();
    for (k, &e) in sweep.eps.iter().enumerate() {
        let mut c = base.clone();
        c.solver.eps = e;
        specs.push(MemberSpec {
            name: format!("eps_{k}"),
            study: "eps",
            parameter: "eps",
            value: e,
            cfg: c,
        });
    }
    for (k, &m) in sweep.m.iter().enumerate() {
        let mut c = base.clone();
        c.solver.m_per_dim = m;
        specs.push(MemberSpec {
            name: format!("m_{k}"),
            study: "m",
            parameter: "m_per_dim",
            value: m as f64,
            cfg: c,
        });
    }
    for (k, &tau) in sweep.tau.iter().enumerate() {
        let mut c = base.clone();
        c.solver.tau = tau;
        specs.push(MemberSpec {
            name: format!("tau_{k}"),
            study: "tau",
            parameter: "tau",
            value: tau,
            cfg: c,
        });
    }
    specs
}

fn member_rows(t: &mut Table, spec: &MemberSpec, index: usize, run: &SingleRun) {
    let m = &run.manifest;
    let v = m.verdict;
    summary_row(
        t,
        spec.study,
        index,
        spec.value,
        "exit_code",
        v.exit_code() as f64,
        mark(v == Verdict::Passed),
    );
    let Some(s) = &run.solved else { return };
    let r = &s.report;
    let e_ok = m
        .assertions
        .iter()
        .filter(|a| a.anchor == "eq:energy")
        .all(|a| a.passed);
    summary_row(
        t,
        spec.study,
        index,
        spec.value,
        "energy_residual_max",
        r.energy.max_relative(),
        mark(e_ok),
    );
    summary_row(
        t,
        spec.study,
        index,
        spec.value,
        "apriori_ratio",
        r.apriori.ratio,
        mark(r.apriori.holds),
    );
    summary_row(
        t,
        spec.study,
        index,
        spec.value,
        "time_derivative_lhs",
        r.time_derivative.lhs,
        mark(r.time_derivative.finite),
    );
    for (sigma, value) in &r.higher_integrability {
        summary_row(
            t,
            spec.study,
            index,
            spec.value,
            &format!("higher_integrability_{sigma}"),
            *value,
            "monitor".into(),
        );
    }
    if let Some(so) = &r.second_order {
        summary_row(
            t,
            spec.study,
            index,
            spec.value,
            "second_order_max",
            so.max_norm(),
            "monitor".into(),
        );
    }
    if let Some(err) = m.final_l2_error {
        summary_row(
            t,
            spec.study,
            index,
            spec.value,
            "final_l2_error",
            err,
            "monitor".into(),
        );
    }
}

/// Runs every configured study into `dir` and writes the summary tables.
pub fn studies(
    cfg: &RunConfig,
    validation: &serde_json::Value,
    workers: usize,
    dir: &Path,
    base: Option<&Solved>,
) -> Result<Studies> {
    let mut out = Studies::default();
    if let Some(sw) = &cfg.sweep {
        let mut table = Table::new(&SUMMARY_COLUMNS);
        sweep_studies(
            cfg, sw, validation, workers, dir, base, &mut table, &mut out,
        )?;
        table.write(&dir.join(output::SWEEP_SUMMARY))?;
    }
    if cfg.property.is_some() {
        property::property_studies(cfg, dir, &mut out)?;
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn sweep_studies(
    cfg: &RunConfig,
    sw: &SweepConfig,
    validation: &serde_json::Value,
    workers: usize,
    dir: &Path,
    base: Option<&Solved>,
    table: &mut Table,
    out: &mut Studies,
) -> Result<()> {
    let specs = member_specs(cfg, sw);
    let members_dir = dir.join("members");
    let runs = par::map_slice(&specs, |s| {
        run_single(&s.cfg, validation, workers, &members_dir.join(&s.name))
    })
    .into_iter()
    .collect::<Result<Vec<SingleRun>>>()?;
    let mut index = std::collections::BTreeMap::<&str, usize>::new();
    for (spec, run) in specs.iter().zip(&runs) {
        let k = index.entry(spec.study).or_default();
        member_rows(table, spec, *k, run);
        *k += 1;
        out.members.push(MemberSummary {
            name: spec.name.clone(),
            study: spec.study.into(),
            parameter: spec.parameter.into(),
            value: spec.value,
            verdict: run.verdict(),
            failure: run.manifest.failure.clone(),
        });
    }
    let solved = |study: &str| -> Option<Vec<&Solved>> {
        specs
            .iter()
            .zip(&runs)
            .filter(|(s, _)| s.study == study)
            .map(|(_, r)| r.solved.as_ref())
            .collect()
    };
    let eps_members = solved("eps").unwrap_or_default();
    let m_members = solved("m").unwrap_or_default();

    if sw.eps.len() >= 2 {
        match solved("eps") {
            Some(ms) => continuation(sw, &ms, table, out)?,
            None => summary_row(
                table,
                "eps_cauchy",
                0,
                0.0,
                "skipped",
                f64::NAN,
                "fail".into(),
            ),
        }
    }
    if sw.m.len() >= 2 {
        match solved("m") {
            Some(ms) => refinement(&ms, table, out)?,
            None => summary_row(
                table,
                "m_cauchy",
                0,
                0.0,
                "skipped",
                f64::NAN,
                "fail".into(),
            ),
        }
    }
    let pooled: Vec<&Solved> = eps_members.iter().chain(&m_members).copied().collect();
    if pooled.len() >= 2 {
        envelopes(cfg, sw, &eps_members, &pooled, table, out);
    }
    if let (Some(tol), Some(h)) = (sw.h_stability, cfg.diagnostics.second_order_h) {
        let targets: Vec<&Solved> = if eps_members.is_empty() {
            base.into_iter().collect()
        } else {
            eps_members.clone()
        };
        h_stability(cfg, &targets, h, tol, table, out)?;
    }
    if sw.tau.len() >= 2 {
        let tau_runs: Vec<&SingleRun> = specs
            .iter()
            .zip(&runs)
            .filter(|(s, _)| s.study == "tau")
            .map(|(_, r)| r)
            .collect();
        tau_study(sw, &tau_runs, table, out);
    }
    if let Some(st) = &sw.stability {
        let owned;
        let base = match base {
            Some(b) => Some(b),
            None => {
                let plain = RunConfig {
                    sweep: None,
                    property: None,
                    ..cfg.clone()
                };
                owned = run_single(&plain, validation, workers, &members_dir.join("base"))?;
                out.members.push(MemberSummary {
                    name: "base".into(),
                    study: "stability".into(),
                    parameter: "delta".into(),
                    value: 0.0,
                    verdict: owned.verdict(),
                    failure: owned.manifest.failure.clone(),
                });
                owned.solved.as_ref()
            }
        };
        if let Some(b) = base {
            stability(cfg, st, b, table, out)?;
        }
    }
    Ok(())
}

fn continuation(
    sw: &SweepConfig,
    ms: &[&Solved],
    table: &mut Table,
    out: &mut Studies,
) -> Result<()> {
    let pairs: Vec<_> = ms.iter().map(|s| (&s.system, &s.trajectory)).collect();
    let ceiling = sw.cauchy_ceiling.unwrap_or(f64::INFINITY);
    let rep = continuation_from_members(&pairs, ceiling)?;
    let ok = rep.monotone || rep.identically_zero;
    for (k, (d, g)) in rep.distances.iter().zip(&rep.pairings).enumerate() {
        summary_row(table, "eps_cauchy", k, rep.eps[k], "d_k", *d, mark(ok));
        summary_row(
            table,
            "eps_cauchy",
            k,
            rep.eps[k + 1],
            "pairing_k",
            *g,
            mark(*g >= 0.0 || rep.pairings_nonnegative),
        );
    }
    let first = rep.distances.first().copied().unwrap_or(0.0);
    let last = rep.distances.last().copied().unwrap_or(0.0);
    out.assertions.push(AssertionRow::new(
        "eps-cauchy",
        "eps-Cauchy distances d_k decreasing within 10%",
        last,
        first,
        ok,
    ));
    if let Some(c) = sw.cauchy_ceiling {
        out.assertions.push(AssertionRow::at_most(
            "eps-cauchy",
            "final eps-Cauchy distance below ceiling",
            last,
            c,
            0.0,
        ));
    }
    let min_pairing = rep.pairings.iter().cloned().fold(f64::INFINITY, f64::min);
    out.assertions.push(AssertionRow::new(
        "eq:mon-strict",
        "G_eps pairing of consecutive eps members nonnegative",
        -min_pairing,
        0.0,
        rep.pairings_nonnegative,
    ));
    out.monitors.push(MonitorRow::new(
        "eps-cauchy",
        "degenerate surrogate eps",
        rep.eps.last().copied().unwrap_or(f64::NAN),
    ));
    Ok(())
}

fn refinement(ms: &[&Solved], table: &mut Table, out: &mut Studies) -> Result<()> {
    let pairs: Vec<_> = ms.iter().map(|s| (&s.system, &s.trajectory)).collect();
    let rep = refinement_from_members(&pairs)?;
    for (k, d) in rep.distances.iter().enumerate() {
        summary_row(
            table,
            "m_cauchy",
            k,
            rep.m_per_dim[k] as f64,
            "d_k",
            *d,
            mark(rep.monotone),
        );
    }
    out.assertions.push(AssertionRow::new(
        "m-cauchy",
        "m-refinement gradient Cauchy distances decreasing",
        rep.distances.last().copied().unwrap_or(0.0),
        rep.distances.first().copied().unwrap_or(0.0),
        rep.monotone,
    ));
    Ok(())
}

fn envelopes(
    cfg: &RunConfig,
    sw: &SweepConfig,
    eps_members: &[&Solved],
    pooled: &[&Solved],
    table: &mut Table,
    out: &mut Studies,
) {
    let ceiling = sw.envelope_ratio_ceiling;
    for (i, sigma) in cfg.diagnostics.sigmas.iter().enumerate() {
        let values: Vec<f64> = pooled
            .iter()
            .map(|s| s.report.higher_integrability[i].1)
            .collect();
        let ratio = envelope_ratio(&values);
        summary_row(
            table,
            "envelope",
            i,
            *sigma,
            "higher_integrability_ratio",
            ratio,
            mark(ratio <= ceiling),
        );
        out.assertions.push(AssertionRow::at_most(
            "eq:strong-est",
            &format!("higher integrability max/min across sweep, varsigma={sigma}"),
            ratio,
            ceiling,
            0.0,
        ));
    }
    let so: Option<Vec<f64>> = pooled
        .iter()
        .map(|s| s.report.second_order.as_ref().map(|n| n.max_norm()))
        .collect();
    if let Some(values) = so {
        let ratio = envelope_ratio(&values);
        summary_row(
            table,
            "envelope",
            0,
            0.0,
            "second_order_ratio",
            ratio,
            mark(ratio <= ceiling),
        );
        out.assertions.push(AssertionRow::at_most(
            "flux-regularity",
            "second-order flux norm max/min across sweep",
            ratio,
            ceiling,
            0.0,
        ));
    }
    if eps_members.len() >= 2 {
        let td: Vec<f64> = eps_members
            .iter()
            .map(|s| s.report.time_derivative.lhs)
            .collect();
        let ratio = envelope_ratio(&td);
        summary_row(
            table,
            "envelope",
            0,
            0.0,
            "time_derivative_ratio",
            ratio,
            mark(ratio <= ceiling),
        );
        out.assertions.push(AssertionRow::at_most(
            "timederiest",
            "time-derivative LHS max/min across eps sweep",
            ratio,
            ceiling,
            0.0,
        ));
        let ap: Vec<f64> = eps_members.iter().map(|s| s.report.apriori.lhs).collect();
        let ratio = envelope_ratio(&ap);
        summary_row(
            table,
            "envelope",
            0,
            0.0,
            "apriori_lhs_ratio",
            ratio,
            mark(ratio <= ceiling),
        );
        out.assertions.push(AssertionRow::at_most(
            "secderiboun",
            "a-priori LHS max/min across eps sweep",
            ratio,
            ceiling,
            0.0,
        ));
        let ic: Vec<f64> = eps_members
            .iter()
            .filter_map(|s| s.report.interpolation.map(|i| i.implied_constant.abs()))
            .collect();
        if !ic.is_empty() {
            out.monitors.push(MonitorRow::new(
                "eq:principal-3",
                "max |interpolation implied constant| across eps sweep",
                ic.iter().cloned().fold(0.0, f64::max),
            ));
        }
    }
}

/// Largest relative deviation between the norms at `h` and `2h`.
fn h_stability(
    cfg: &RunConfig,
    targets: &[&Solved],
    h: f64,
    tol: f64,
    table: &mut Table,
    out: &mut Studies,
) -> Result<()> {
    let coarse_h = 2.0 * h;
    let mut worst: f64 = 0.0;
    for (k, s) in targets.iter().enumerate() {
        let Some(fine) = &s.report.second_order else {
            continue;
        };
        let states = checkpoint_subset(&s.trajectory.states, cfg.diagnostics.second_order_stride);
        let coarse = second_order_flux_norm(
            s.system.basis(),
            &states,
            s.system.data(),
            s.system.eps(),
            coarse_h,
        )?;
        let scale = fine.max_norm().max(coarse.max_norm());
        let mut dev: f64 = 0.0;
        for i in 0..fine.squared.len() {
            for j in 0..fine.squared[i].len() {
                let (a, b) = (fine.norm(i, j), coarse.norm(i, j));
                let m = a.max(b);
                if m > 1e-12 * scale {
                    dev = dev.max((a - b).abs() / m);
                }
            }
        }
        summary_row(
            table,
            "h_stability",
            k,
            s.system.eps(),
            "relative_deviation",
            dev,
            mark(dev <= tol),
        );
        worst = worst.max(dev);
    }
    out.assertions.push(AssertionRow::at_most(
        "flux-regularity",
        &format!("second-order norms stable between h={coarse_h} and h={h}"),
        worst,
        tol,
        0.0,
    ));
    Ok(())
}

fn tau_study(sw: &SweepConfig, runs: &[&SingleRun], table: &mut Table, out: &mut Studies) {
    let residuals: Option<Vec<f64>> = runs
        .iter()
        .map(|r| r.solved.as_ref().map(|s| s.report.energy.max_relative()))
        .collect();
    let Some(residuals) = residuals else {
        summary_row(
            table,
            "tau_order",
            0,
            0.0,
            "skipped",
            f64::NAN,
            "fail".into(),
        );
        return;
    };
    for k in 0..residuals.len() - 1 {
        let ratio = residuals[k] / residuals[k + 1];
        let ok = (HALVING_WINDOW.0..=HALVING_WINDOW.1).contains(&ratio);
        summary_row(
            table,
            "tau_order",
            k,
            sw.tau[k + 1],
            "energy_residual_ratio",
            ratio,
            mark(ok),
        );
        out.assertions.push(AssertionRow::new(
            "eq:energy",
            &format!("energy residual ratio when tau halves to {}", sw.tau[k + 1]),
            ratio,
            HALVING_WINDOW.1,
            ok,
        ));
    }
    let errors: Option<Vec<f64>> = runs.iter().map(|r| r.manifest.final_l2_error).collect();
    if let Some(errors) = errors {
        let order = observed_order(&sw.tau, &errors);
        let dev = (order - 1.0).abs();
        summary_row(
            table,
            "tau_order",
            0,
            sw.tau[0],
            "observed_order",
            order,
            mark(dev <= ORDER_TOLERANCE),
        );
        out.assertions.push(AssertionRow::at_most(
            "mms",
            "|observed tau-order - 1|",
            dev,
            ORDER_TOLERANCE,
            0.0,
        ));
    }
}

/// `f + d`, or `None` when `f` cannot absorb an additive field.
fn perturb_forcing(f: &Forcing, d: &FieldSpec) -> Option<Forcing> {
    match f {
        Forcing::None => Some(Forcing::field(d.clone())),
        Forcing::Field { field } => Some(Forcing::field(FieldSpec::Sum {
            terms: vec![field.clone(), d.clone()],
        })),
        Forcing::Manufactured { .. } => None,
    }
}

struct Pair {
    label: &'static str,
    delta: f64,
    v0: FieldSpec,
    g: Forcing,
}

fn stability_pairs(cfg: &RunConfig, st: &StabilityConfig) -> Vec<Pair> {
    let add = |d: FieldSpec| FieldSpec::Sum {
        terms: vec![cfg.initial.clone(), d],
    };
    let mut pairs: Vec<Pair> = st
        .deltas
        .iter()
        .map(|&d| Pair {
            label: "delta",
            delta: d,
            v0: add(scaled(&st.direction, d)),
            g: st
                .forcing_direction
                .as_ref()
                .and_then(|fd| perturb_forcing(&cfg.forcing, &scaled(fd, d)))
                .unwrap_or_else(|| cfg.forcing.clone()),
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = cfg.data.dim;
    for _ in 0..st.random_pairs {
        let ks: Vec<usize> = (0..dim).map(|_| rng.random_range(1..=3usize)).collect();
        let c: f64 = rng.random_range(-0.2..0.2);
        let fc: f64 = rng.random_range(-0.2..0.2);
        let perturb_f = rng.random_bool(0.5);
        let g = if perturb_f {
            perturb_forcing(&cfg.forcing, &FieldSpec::constant(fc))
                .unwrap_or_else(|| cfg.forcing.clone())
        } else {
            cfg.forcing.clone()
        };
        pairs.push(Pair {
            label: "random",
            delta: c.abs(),
            v0: add(FieldSpec::sine_mode(&ks, c)),
            g,
        });
    }
    pairs
}

fn stability(
    cfg: &RunConfig,
    st: &StabilityConfig,
    base: &Solved,
    table: &mut Table,
    out: &mut Studies,
) -> Result<()> {
    let pairs = stability_pairs(cfg, st);
    let solves = par::map_slice(&pairs, |p| {
        solve_with_system(&cfg.solver, &cfg.data, &p.v0, &p.g)
    });
    let bv = TrajectoryView::new(&base.system, &base.trajectory)?;
    let mut violations = 0usize;
    let mut max_ratio: f64 = 0.0;
    let mut min_pairing = f64::INFINITY;
    let mut modular_scale: f64 = 0.0;
    let mut delta_modulars = Vec::new();
    let mut failed = 0usize;
    for (k, (p, s)) in pairs.iter().zip(solves).enumerate() {
        let (sv, tv) = match s {
            Ok(x) => x,
            Err(e) => {
                failed += 1;
                out.members.push(MemberSummary {
                    name: format!("pair_{k}"),
                    study: "stability".into(),
                    parameter: p.label.into(),
                    value: p.delta,
                    verdict: Verdict::SolverFailure,
                    failure: Some(e.to_string()),
                });
                summary_row(
                    table,
                    "stability",
                    k,
                    p.delta,
                    "solve_failed",
                    f64::NAN,
                    "fail".into(),
                );
                continue;
            }
        };
        let vv = TrajectoryView::new(&sv, &tv)?;
        let r = stability_from_views(&bv, &vv)?;
        violations += r.violations;
        max_ratio = max_ratio.max(r.max_ratio());
        min_pairing = min_pairing.min(r.pairing);
        modular_scale = modular_scale.max(r.gradient_modular);
        if p.label == "delta" {
            delta_modulars.push(r.gradient_modular);
        }
        let q = |name: &str| format!("{}_{name}", p.label);
        summary_row(
            table,
            "stability",
            k,
            p.delta,
            &q("max_ratio"),
            r.max_ratio(),
            mark(r.holds()),
        );
        summary_row(
            table,
            "stability",
            k,
            p.delta,
            &q("gradient_modular"),
            r.gradient_modular,
            "monitor".into(),
        );
        summary_row(
            table,
            "stability",
            k,
            p.delta,
            &q("pairing"),
            r.pairing,
            mark(r.pairing >= 0.0),
        );
    }
    out.assertions.push(AssertionRow::at_most(
        "eq:stab-2",
        &format!(
            "Groenwall bound violations over {} pairs",
            pairs.len() - failed
        ),
        violations as f64,
        0.0,
        0.0,
    ));
    out.monitors.push(MonitorRow::new(
        "eq:stab-2",
        "max |u-v|^2 / bound over pairs",
        max_ratio,
    ));
    if delta_modulars.len() >= 2 {
        let ok = decreasing_within(&delta_modulars, 0.0, 0.0);
        out.assertions.push(AssertionRow::new(
            "eq:stab",
            "gradient modular decreasing along shrinking perturbations",
            *delta_modulars.last().expect("nonempty"),
            delta_modulars[0],
            ok,
        ));
    }
    if min_pairing.is_finite() {
        let slack = 1e-10 * (1.0 + modular_scale);
        out.assertions.push(AssertionRow::at_most(
            "eq:mon-strict",
            "G_eps pairing of perturbed pairs nonnegative",
            -min_pairing,
            0.0,
            slack,
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_of_exact_power_law() {
        let taus = [4e-3, 2e-3, 1e-3];
        let errors: Vec<f64> = taus.iter().map(|t: &f64| 3.0 * t.powf(1.5)).collect();
        assert!((observed_order(&taus, &errors) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn envelope_edge_cases() {
        assert_eq!(envelope_ratio(&[]), 1.0);
        assert_eq!(envelope_ratio(&[0.0, 0.0]), 1.0);
        assert_eq!(envelope_ratio(&[0.0, 1.0]), f64::INFINITY);
        assert_eq!(envelope_ratio(&[2.0, 1.0, 4.0]), 4.0);
    }
}
