//! Energy identity, a-priori estimates and integrability monitors on one trajectory.

use serde::Serialize;

use crate::diagnostics::context::TrajectoryView;
use crate::error::{Error, Result};
use crate::exponent_model::r_sharp;
use crate::flux;
use crate::galerkin::basis::{evaluate_lattice_hessian, BasisTables};
use crate::par;
use crate::quadrature::SpaceRule;

/// Constant of the a-priori energy bound `sup‖u‖² + ∫∫F_ε|∇u|² ≤ C₁ e^T (‖f‖² + ‖u₀‖²)`.
///
/// Integrating `d/dt‖u‖² + 2∫F_ε|∇u|² ≤ ‖f‖² + ‖u‖²` bounds `sup‖u‖²` by `e^T X` and
/// `∫∫F_ε|∇u|²` by `e^T X / 2`, so the sum carries `3/2`.
pub const APRIORI_CONSTANT: f64 = 1.5;

/// Multiplier of `∫F_ε|∇u|²` in the degenerate-energy bound.
pub const GRADBOUND_C2: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyResidual {
    pub times: Vec<f64>,
    pub absolute: Vec<f64>,
    pub relative: Vec<f64>,
}

impl EnergyResidual {
    pub fn max_relative(&self) -> f64 {
        self.relative.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_absolute(&self) -> f64 {
        self.absolute.iter().cloned().fold(0.0, f64::max)
    }
}

/// `|½‖u(t)‖² + ∫₀ᵗ∫F_ε|∇u|² − ½‖u₀‖² − ∫₀ᵗ∫uf|` per checkpoint, trapezoid in time.
pub fn energy_identity_residual(view: &TrajectoryView<'_>) -> EnergyResidual {
    let s = &view.scalars;
    let flux_run = view.running_integral(&s.iter().map(|c| c.flux_energy_eps).collect::<Vec<_>>());
    let force_run = view.running_integral(&s.iter().map(|c| c.forcing_pairing).collect::<Vec<_>>());
    let half0 = 0.5 * s[0].l2_sq;
    let mut absolute = Vec::with_capacity(s.len());
    let mut relative = Vec::with_capacity(s.len());
    for k in 0..s.len() {
        let terms = [0.5 * s[k].l2_sq, flux_run[k], half0, force_run[k].abs()];
        let r = (terms[0] + flux_run[k] - half0 - force_run[k]).abs();
        let scale = terms.iter().cloned().fold(0.0, f64::max);
        absolute.push(r);
        relative.push(if scale > 0.0 { r / scale } else { 0.0 });
    }
    EnergyResidual {
        times: view.times().to_vec(),
        absolute,
        relative,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub lhs: f64,
    /// The bound before multiplication by the constant.
    pub rhs: f64,
    pub constant: f64,
    /// `lhs / (constant · rhs)`, zero when both vanish.
    pub ratio: f64,
    pub holds: bool,
}

impl RatioReport {
    fn new(lhs: f64, rhs: f64, constant: f64, slack: f64) -> Self {
        let bound = constant * rhs;
        let ratio = if bound > 0.0 {
            lhs / bound
        } else if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        RatioReport {
            lhs,
            rhs,
            constant,
            ratio,
            holds: lhs.is_finite() && lhs <= bound + slack,
        }
    }

    pub fn margin(&self) -> f64 {
        self.constant * self.rhs - self.lhs
    }
}

/// `‖f‖²_{2,Q_T}` by trapezoid over checkpoints.
pub fn forcing_l2_sq(view: &TrajectoryView<'_>) -> f64 {
    view.time_integral(|k| view.scalars[k].forcing_l2_sq)
}

/// `sup_t ‖u‖² + ∫_{Q_T} F_ε|∇u|² ≤ C₁ e^T (‖f‖²_{2,Q_T} + ‖u₀‖²)`.
pub fn apriori_energy_bound(view: &TrajectoryView<'_>) -> RatioReport {
    let s = &view.scalars;
    let sup = s.iter().map(|c| c.l2_sq).fold(0.0, f64::max);
    let lhs = sup + view.time_integral(|k| s[k].flux_energy_eps);
    let rhs = view.horizon().exp() * (forcing_l2_sq(view) + s[0].l2_sq);
    RatioReport::new(lhs, rhs, APRIORI_CONSTANT, 1e-12 * (1.0 + rhs))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradBoundReport {
    pub times: Vec<f64>,
    /// `∫ F₀|∇u|²`
    pub lhs: Vec<f64>,
    /// `C₂ ∫ F_ε|∇u|² + C₃`
    pub rhs: Vec<f64>,
    pub c3: Vec<f64>,
    pub holds: bool,
}

impl GradBoundReport {
    pub fn min_margin(&self) -> f64 {
        self.lhs
            .iter()
            .zip(&self.rhs)
            .map(|(l, r)| r - l)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `∫F₀|∇u|² ≤ 2∫F_ε|∇u|² + ∫(a(2ε²)^{p/2} + b(2ε²)^{q/2})` at every checkpoint.
pub fn gradbound_check(view: &TrajectoryView<'_>) -> GradBoundReport {
    let s = &view.scalars;
    let lhs: Vec<f64> = s.iter().map(|c| c.flux_energy_0).collect();
    let c3: Vec<f64> = s.iter().map(|c| c.small_gradient_constant).collect();
    let rhs: Vec<f64> = s
        .iter()
        .map(|c| GRADBOUND_C2 * c.flux_energy_eps + c.small_gradient_constant)
        .collect();
    let holds = lhs
        .iter()
        .zip(&rhs)
        .all(|(l, r)| *l <= r + 1e-12 * (1.0 + r.abs()));
    GradBoundReport {
        times: view.times().to_vec(),
        lhs,
        rhs,
        c3,
        holds,
    }
}

/// `∫_{Q_T} |∇u|^{s̲ + r♯ − ς}` for each `ς ∈ (0, r♯)`.
pub fn higher_integrability(view: &TrajectoryView<'_>, sigmas: &[f64]) -> Result<Vec<(f64, f64)>> {
    let rs = r_sharp(view.dim());
    if let Some(s) = sigmas.iter().find(|&&s| !(s > 0.0 && s < rs)) {
        return Err(Error::Domain(format!("varsigma {s} outside (0, {rs})")));
    }
    let dim = view.dim();
    Ok(sigmas
        .iter()
        .map(|&sigma| {
            let v = view.space_time_integral(|k, i| {
                let c = view.coefficients(k, i);
                let e = c.p.min(c.q) + rs - sigma;
                flux::half_power(flux::norm_sq(&view.grad(k, i)[..dim]), e)
            });
            (sigma, v)
        })
        .collect())
}

/// [`higher_integrability`] on a tensor Gauss rule of the given order instead of the solver nodes.
pub fn higher_integrability_on(
    view: &TrajectoryView<'_>,
    sigmas: &[f64],
    order: usize,
) -> Result<Vec<(f64, f64)>> {
    let rs = r_sharp(view.dim());
    if let Some(s) = sigmas.iter().find(|&&s| !(s > 0.0 && s < rs)) {
        return Err(Error::Domain(format!("varsigma {s} outside (0, {rs})")));
    }
    let dim = view.dim();
    let rule = SpaceRule::gauss(dim, order)?;
    let tables = BasisTables::new(view.system.basis(), &rule)?;
    let data = view.system.data();
    let n = rule.len();
    let mut per = vec![vec![0.0; view.checkpoints.len()]; sigmas.len()];
    for (k, cp) in view.checkpoints.iter().enumerate() {
        let g = tables.gradients(&cp.coeffs);
        let lower = par::map_indexed(n, |i| {
            let c = data.at(rule.point(i), cp.t);
            let n2: f64 = (0..dim).map(|d| g[d * n + i] * g[d * n + i]).sum();
            (n2, c.p.min(c.q))
        });
        for (s, &sigma) in sigmas.iter().enumerate() {
            per[s][k] = par::weighted_sum(rule.weights(), |i| {
                flux::half_power(lower[i].0, lower[i].1 + rs - sigma)
            });
        }
    }
    Ok(sigmas
        .iter()
        .zip(per)
        .map(|(&sigma, v)| (sigma, view.time_integral(|k| v[k])))
        .collect())
}

/// `∫_{Q_T} F_ε(∇u) |D²u|²` at the quadrature nodes.
pub fn weighted_hessian_energy(view: &TrajectoryView<'_>) -> Result<f64> {
    let basis = view.system.basis();
    let axis = view.system.rule().axis().to_vec();
    let dim = view.dim();
    let eps = view.eps();
    let per = (0..view.checkpoints.len())
        .map(|k| {
            let h = evaluate_lattice_hessian(basis, &view.trajectory.states[k].coeffs, &axis)?;
            let order = axis.len();
            Ok(view.space_integral(|i| {
                let (a, b) = if dim == 1 {
                    (i, 0)
                } else {
                    (i / order, i % order)
                };
                let hsq = if dim == 1 {
                    h[0][(a, 0)].powi(2)
                } else {
                    h[0][(a, b)].powi(2) + 2.0 * h[1][(a, b)].powi(2) + h[2][(a, b)].powi(2)
                };
                let g = view.grad(k, i);
                let beta = flux::beta_eps(&g[..dim], eps);
                flux::flux_coefficient_beta(beta, view.coefficients(k, i)) * hsq
            }))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(view.time_integral(|k| per[k]))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterpolationReport {
    pub varsigma: f64,
    pub beta: f64,
    /// `α ∫|∇u|^{s̲+r♯−ς}`
    pub lhs: f64,
    /// `∫ F_ε |D²u|²`
    pub second_order: f64,
    /// `lhs − β · second_order`, the additive constant the inequality needs.
    pub implied_constant: f64,
}

/// Implied constant of `α∫|∇u|^{s̲+r♯−ς} ≤ β∫F_ε|D²u|² + C`.
pub fn interpolation_ratio(
    view: &TrajectoryView<'_>,
    varsigma: f64,
    beta: f64,
) -> Result<InterpolationReport> {
    let hi = higher_integrability(view, &[varsigma])?;
    let lhs = view.system.data().alpha * hi[0].1;
    let second_order = weighted_hessian_energy(view)?;
    Ok(InterpolationReport {
        varsigma,
        beta,
        lhs,
        second_order,
        implied_constant: lhs - beta * second_order,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeDerivativeReport {
    /// `Σ τ‖u_t‖²`
    pub ut_sq: f64,
    /// `sup_t ∫(aβ_ε^{p/2} + bβ_ε^{q/2})`
    pub sup_energy: f64,
    pub lhs: f64,
    /// `1 + ∫F₀((x,0),∇u₀)|∇u₀|² + ‖f‖²_{2,Q_T}`
    pub rhs: f64,
    pub ratio: f64,
    pub finite: bool,
}

/// Time-derivative estimate with the unquantified constant set to one; the ratio is monitored.
pub fn time_derivative_bound(view: &TrajectoryView<'_>) -> TimeDerivativeReport {
    let s = &view.scalars;
    let ut_sq = *view.trajectory.ut_sq_accum.last().unwrap_or(&0.0);
    let sup_energy = s.iter().map(|c| c.beta_energy).fold(0.0, f64::max);
    let lhs = ut_sq + sup_energy;
    let rhs = 1.0 + s[0].flux_energy_0 + forcing_l2_sq(view);
    TimeDerivativeReport {
        ut_sq,
        sup_energy,
        lhs,
        rhs,
        ratio: lhs / rhs,
        finite: lhs.is_finite() && rhs.is_finite(),
    }
}

/// Largest `|u|` on a uniform lattice of `n` points per axis at each checkpoint.
pub fn linf_series(view: &TrajectoryView<'_>, n: usize) -> Result<Vec<f64>> {
    let axis = crate::galerkin::uniform_axis(n);
    let basis = view.system.basis();
    par::map_slice(&view.trajectory.states, |s| {
        crate::galerkin::evaluate_lattice(basis, &s.coeffs, &axis).map(|l| l.max_abs())
    })
    .into_iter()
    .collect()
}
