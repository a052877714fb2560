//! Per-trajectory monitors, inequality checks and multi-solve studies.

pub mod bounds;
pub mod context;
pub mod second_order;
pub mod studies;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galerkin::{GalerkinSystem, SpectralState, Trajectory};

pub use bounds::{
    apriori_energy_bound, energy_identity_residual, forcing_l2_sq, gradbound_check,
    higher_integrability, higher_integrability_on, interpolation_ratio, linf_series,
    time_derivative_bound, weighted_hessian_energy, EnergyResidual, GradBoundReport,
    InterpolationReport, RatioReport, TimeDerivativeReport, APRIORI_CONSTANT, GRADBOUND_C2,
};
pub use context::{Checkpoint, CheckpointScalars, TrajectoryView};
pub use second_order::{second_order_flux_norm, SecondOrderNorms, DEFAULT_H};
pub use studies::{
    continuation_from_members, decreasing_within, embed_coefficients, eps_continuation_study,
    gradient_distance, linf_bound_check, m_refinement_study, pairing_between, perturbation_study,
    refinement_from_members, scaled, solve_with_system, stability_experiment, stability_from_views,
    ContinuationReport, LinfReport, PerturbationStudy, RefinementReport, StabilityReport,
    MONOTONE_TOLERANCE, STABILITY_SLACK,
};

/// Which optional monitors to evaluate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsOptions {
    /// Relative energy-identity residual accepted per checkpoint.
    pub energy_tolerance: f64,
    /// Points per axis of the L∞ lattice.
    pub linf_lattice: usize,
    pub sigmas: Vec<f64>,
    /// Gauss order per axis of the integrability modulars; the solver nodes when `None`.
    pub integrability_order: Option<usize>,
    /// `β` of the interpolation monitor; skipped when `None`.
    pub interpolation_beta: Option<f64>,
    /// Lattice spacing of the second-order norms; skipped when `None`.
    pub second_order_h: Option<f64>,
    /// Use every `second_order_stride`-th checkpoint (the last one always included).
    pub second_order_stride: usize,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        DiagnosticsOptions {
            energy_tolerance: 1e-2,
            linf_lattice: 33,
            sigmas: vec![0.1, 0.3, 0.5],
            integrability_order: Some(64),
            interpolation_beta: Some(1.0),
            second_order_h: Some(DEFAULT_H),
            second_order_stride: 10,
        }
    }
}

impl DiagnosticsOptions {
    pub fn check(&self) -> Result<()> {
        if !(self.energy_tolerance > 0.0) {
            return Err(Error::Config("energy_tolerance must be positive".into()));
        }
        if self.linf_lattice < 2 {
            return Err(Error::Config("linf_lattice must be at least 2".into()));
        }
        if self.second_order_stride == 0 {
            return Err(Error::Config("second_order_stride must be positive".into()));
        }
        Ok(())
    }
}

/// One checkpoint of the monitored time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesRow {
    pub t: f64,
    pub l2_sq: f64,
    pub flux_energy_eps: f64,
    pub flux_energy_0: f64,
    pub grad_l2_sq: f64,
    pub energy_residual: f64,
    pub ut_sq_accum: f64,
    pub linf: f64,
}

/// An inequality with an explicit constant, asserted pass/fail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssertionRow {
    pub anchor: String,
    pub check: String,
    pub passed: bool,
    /// `rhs − lhs`; nonnegative when the check holds.
    pub margin: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl AssertionRow {
    pub fn new(anchor: &str, check: &str, lhs: f64, rhs: f64, passed: bool) -> Self {
        AssertionRow {
            anchor: anchor.into(),
            check: check.into(),
            passed,
            margin: rhs - lhs,
            lhs,
            rhs,
        }
    }

    /// `lhs ≤ rhs + slack`, failing on non-finite input.
    pub fn at_most(anchor: &str, check: &str, lhs: f64, rhs: f64, slack: f64) -> Self {
        let ok = lhs.is_finite() && rhs.is_finite() && lhs <= rhs + slack;
        Self::new(anchor, check, lhs, rhs, ok)
    }
}

/// A quantity whose constant is unquantified; reported, not asserted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorRow {
    pub anchor: String,
    pub quantity: String,
    pub value: f64,
}

impl MonitorRow {
    pub fn new(anchor: &str, quantity: impl Into<String>, value: f64) -> Self {
        MonitorRow {
            anchor: anchor.into(),
            quantity: quantity.into(),
            value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub series: Vec<SeriesRow>,
    pub energy: EnergyResidual,
    pub apriori: RatioReport,
    pub gradbound: GradBoundReport,
    pub time_derivative: TimeDerivativeReport,
    /// `(ς, ∫|∇u|^{s̲+r♯−ς})`
    pub higher_integrability: Vec<(f64, f64)>,
    pub interpolation: Option<InterpolationReport>,
    pub second_order: Option<SecondOrderNorms>,
    pub assertions: Vec<AssertionRow>,
    pub monitors: Vec<MonitorRow>,
}

impl DiagnosticsReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssertionRow> {
        self.assertions.iter().filter(|a| !a.passed)
    }

    /// Every stored number is finite.
    pub fn all_finite(&self) -> bool {
        let rows = self.series.iter().all(|r| {
            [
                r.t,
                r.l2_sq,
                r.flux_energy_eps,
                r.flux_energy_0,
                r.grad_l2_sq,
                r.energy_residual,
                r.ut_sq_accum,
                r.linf,
            ]
            .iter()
            .all(|v| v.is_finite())
        });
        rows && self.higher_integrability.iter().all(|(_, v)| v.is_finite())
            && self.second_order.as_ref().map_or(true, |s| s.all_finite())
    }
}

/// Every `stride`-th state, always ending with the last one.
pub fn checkpoint_subset(states: &[SpectralState], stride: usize) -> Vec<SpectralState> {
    let mut picked: Vec<_> = states.iter().step_by(stride.max(1)).cloned().collect();
    if let Some(last) = states.last() {
        if picked.last().map(|s| s.t) != Some(last.t) {
            picked.push(last.clone());
        }
    }
    picked
}

/// Evaluates every single-trajectory monitor and assertion.
pub fn run_diagnostics(
    system: &GalerkinSystem,
    trajectory: &Trajectory,
    opts: &DiagnosticsOptions,
) -> Result<DiagnosticsReport> {
    opts.check()?;
    let view = TrajectoryView::new(system, trajectory)?;
    let energy = energy_identity_residual(&view);
    let linf = linf_series(&view, opts.linf_lattice)?;
    let series: Vec<SeriesRow> = view
        .scalars
        .iter()
        .enumerate()
        .map(|(k, s)| SeriesRow {
            t: view.times()[k],
            l2_sq: s.l2_sq,
            flux_energy_eps: s.flux_energy_eps,
            flux_energy_0: s.flux_energy_0,
            grad_l2_sq: s.grad_l2_sq,
            energy_residual: energy.relative[k],
            ut_sq_accum: trajectory.ut_sq_accum[k],
            linf: linf[k],
        })
        .collect();

    let apriori = apriori_energy_bound(&view);
    let gradbound = gradbound_check(&view);
    let time_derivative = time_derivative_bound(&view);
    let higher = match opts.integrability_order {
        Some(order) => higher_integrability_on(&view, &opts.sigmas, order)?,
        None => higher_integrability(&view, &opts.sigmas)?,
    };
    let interpolation = match opts.interpolation_beta {
        Some(beta) => Some(interpolation_ratio(
            &view,
            opts.sigmas.first().copied().unwrap_or(0.5),
            beta,
        )?),
        None => None,
    };
    let second_order = match opts.second_order_h {
        Some(h) => {
            let picked = checkpoint_subset(&trajectory.states, opts.second_order_stride);
            Some(second_order_flux_norm(
                system.basis(),
                &picked,
                system.data(),
                system.eps(),
                h,
            )?)
        }
        None => None,
    };

    let mut assertions = vec![
        AssertionRow::at_most(
            "eq:energy",
            "energy equality relative residual",
            energy.max_relative(),
            opts.energy_tolerance,
            0.0,
        ),
        AssertionRow::at_most(
            "secderiboun",
            "sup|u|^2 + int F_eps|grad u|^2 <= C1 e^T (|f|^2 + |u0|^2)",
            apriori.lhs,
            apriori.constant * apriori.rhs,
            1e-12 * (1.0 + apriori.rhs),
        ),
    ];
    let worst = gradbound
        .lhs
        .iter()
        .zip(&gradbound.rhs)
        .max_by(|a, b| (a.0 - a.1).total_cmp(&(b.0 - b.1)))
        .map_or((0.0, 0.0), |(l, r)| (*l, *r));
    assertions.push(AssertionRow::new(
        "gradbound",
        "int F_0|grad u|^2 <= 2 int F_eps|grad u|^2 + C3 per checkpoint",
        worst.0,
        worst.1,
        gradbound.holds,
    ));
    let steps = &trajectory.steps;
    let count =
        |f: fn(&crate::galerkin::StepRecord) -> bool| steps.iter().filter(|s| !f(s)).count() as f64;
    assertions.push(AssertionRow::at_most(
        "eq:energy",
        "discrete dissipation per step (violations)",
        count(|s| s.dissipation_holds()),
        0.0,
        0.0,
    ));
    assertions.push(AssertionRow::at_most(
        "eq:energy",
        "proximal energy decrease per step (violations)",
        count(|s| s.proximal_holds()),
        0.0,
        0.0,
    ));
    assertions.push(AssertionRow::at_most(
        "eq:energy",
        "Newton residual within orthogonality bound (violations)",
        count(|s| s.orthogonality_holds()),
        0.0,
        0.0,
    ));
    assertions.push(AssertionRow::new(
        "timederiest",
        "time-derivative quantities finite (non-finite count)",
        if time_derivative.finite { 0.0 } else { 1.0 },
        0.0,
        time_derivative.finite,
    ));
    let accum_monotone = trajectory.ut_sq_accum.windows(2).all(|w| w[1] >= w[0]);
    assertions.push(AssertionRow::new(
        "timederiest",
        "u_t accumulation nondecreasing",
        0.0,
        0.0,
        accum_monotone,
    ));

    let mut monitors = vec![
        MonitorRow::new("secderiboun", "a-priori ratio", apriori.ratio),
        MonitorRow::new(
            "timederiest",
            "time-derivative ratio",
            time_derivative.ratio,
        ),
        MonitorRow::new(
            "eq:energy",
            "max absolute energy residual",
            energy.max_absolute(),
        ),
    ];
    for (s, v) in &higher {
        monitors.push(MonitorRow::new(
            "eq:ineq-high",
            format!("higher integrability varsigma={s}"),
            *v,
        ));
    }
    if let Some(i) = &interpolation {
        monitors.push(MonitorRow::new(
            "eq:principal-3",
            "interpolation implied constant",
            i.implied_constant,
        ));
    }
    if let Some(so) = &second_order {
        monitors.push(MonitorRow::new(
            "eq:strong-est",
            "max second-order flux norm",
            so.max_norm(),
        ));
    }

    let report = DiagnosticsReport {
        series,
        energy,
        apriori,
        gradbound,
        time_derivative,
        higher_integrability: higher,
        interpolation,
        second_order,
        assertions,
        monitors,
    };
    if !report.all_finite() {
        let mut r = report;
        r.assertions.push(AssertionRow::new(
            "eq:strong-esti",
            "all report entries finite",
            0.0,
            0.0,
            false,
        ));
        return Ok(r);
    }
    Ok(report)
}
