//! Multi-solve studies: stability, L∞ envelope, ε-continuation and m-refinement.

use serde::Serialize;

use crate::diagnostics::context::TrajectoryView;
use crate::error::{Error, Result};
use crate::exponent_model::ExponentData;
use crate::field::{FieldSpec, MAX_DIM};
use crate::flux;
use crate::galerkin::{
    self, evaluate_lattice, uniform_axis, Forcing, GalerkinSystem, SolverConfig, Trajectory,
};
use crate::par;

/// Relative slack of the stability bound.
pub const STABILITY_SLACK: f64 = 1e-6;

/// Allowed growth between consecutive members of a decreasing sequence.
pub const MONOTONE_TOLERANCE: f64 = 0.1;

/// Solves and returns both the system and the trajectory.
pub fn solve_with_system(
    cfg: &SolverConfig,
    data: &ExponentData,
    u0: &FieldSpec,
    forcing: &Forcing,
) -> Result<(GalerkinSystem, Trajectory)> {
    let system = galerkin::build_system(cfg, data, forcing)?;
    let init = galerkin::project_initial(&system, u0)?;
    let traj = galerkin::solve_system(&system, cfg, init).map_err(|f| f.cause)?;
    Ok((system, traj))
}

fn check_same_grid(a: &TrajectoryView<'_>, b: &TrajectoryView<'_>) -> Result<()> {
    if a.system.basis() != b.system.basis()
        || a.system.rule().order() != b.system.rule().order()
        || a.times().len() != b.times().len()
        || a.times()
            .iter()
            .zip(b.times())
            .any(|(s, t)| (s - t).abs() > 1e-12)
    {
        return Err(Error::Config("trajectories live on different grids".into()));
    }
    Ok(())
}

/// `∫_{Q_T} |∇(u − v)|^{s̲}` for two views on a common grid, using the first view's data.
pub fn gradient_distance(a: &TrajectoryView<'_>, b: &TrajectoryView<'_>) -> Result<f64> {
    check_same_grid(a, b)?;
    let dim = a.dim();
    Ok(a.space_time_integral(|k, i| {
        let ga = a.grad(k, i);
        let gb = b.grad(k, i);
        let mut d = [0.0; MAX_DIM];
        for c in 0..dim {
            d[c] = ga[c] - gb[c];
        }
        let co = a.coefficients(k, i);
        flux::half_power(flux::norm_sq(&d[..dim]), co.p.min(co.q))
    }))
}

/// `𝓖_ε(∇u, ∇v)` over `Q_T`.
pub fn pairing_between(a: &TrajectoryView<'_>, b: &TrajectoryView<'_>, eps: f64) -> Result<f64> {
    check_same_grid(a, b)?;
    let dim = a.dim();
    Ok(a.space_time_integral(|k, i| {
        let ga = a.grad(k, i);
        let gb = b.grad(k, i);
        let c = a.coefficients(k, i);
        let fa = flux::flux_vector(&ga[..dim], eps, c);
        let fb = flux::flux_vector(&gb[..dim], eps, c);
        (0..dim).map(|d| (fa[d] - fb[d]) * (ga[d] - gb[d])).sum()
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub times: Vec<f64>,
    /// `‖(u − v)(t)‖²`
    pub w_sq: Vec<f64>,
    /// `e^T (‖u₀ − v₀‖² + ‖f − g‖²_{2,Q_T})`
    pub bound: f64,
    pub slack: f64,
    pub violations: usize,
    /// `∫_{Q_T} |∇(u − v)|^{s̲}`
    pub gradient_modular: f64,
    /// `𝓖_ε(∇u, ∇v)`
    pub pairing: f64,
}

impl StabilityReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }

    pub fn max_ratio(&self) -> f64 {
        self.w_sq
            .iter()
            .map(|w| {
                if self.bound > 0.0 {
                    w / self.bound
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Grönwall bound for two trajectories on identical grids.
pub fn stability_from_views(
    u: &TrajectoryView<'_>,
    v: &TrajectoryView<'_>,
) -> Result<StabilityReport> {
    check_same_grid(u, v)?;
    let n = u.nodes();
    let w_sq: Vec<f64> = u
        .checkpoints
        .iter()
        .zip(&v.checkpoints)
        .map(|(a, b)| (&a.coeffs - &b.coeffs).norm_squared())
        .collect();
    let df_sq = u.time_integral(|k| {
        let fa = &u.checkpoints[k].level.source;
        let fb = &v.checkpoints[k].level.source;
        u.space_integral(|i| (fa[i] - fb[i]).powi(2))
    });
    let _ = n;
    let bound = u.horizon().exp() * (w_sq[0] + df_sq);
    let scale = bound
        .max(u.scalars.iter().map(|s| s.l2_sq).fold(0.0, f64::max))
        .max(v.scalars.iter().map(|s| s.l2_sq).fold(0.0, f64::max))
        .max(f64::MIN_POSITIVE);
    let slack = STABILITY_SLACK * scale;
    let violations = w_sq.iter().filter(|&&w| w > bound + slack).count();
    Ok(StabilityReport {
        times: u.times().to_vec(),
        w_sq,
        bound,
        slack,
        violations,
        gradient_modular: gradient_distance(u, v)?,
        pairing: pairing_between(u, v, u.eps())?,
    })
}

/// Solves `(u₀, f)` and `(v₀, g)` with one configuration and compares them.
pub fn stability_experiment(
    cfg: &SolverConfig,
    data: &ExponentData,
    first: (&FieldSpec, &Forcing),
    second: (&FieldSpec, &Forcing),
) -> Result<StabilityReport> {
    let (members, solves) = par::join(
        || solve_with_system(cfg, data, first.0, first.1),
        || solve_with_system(cfg, data, second.0, second.1),
    );
    let (su, tu) = members?;
    let (sv, tv) = solves?;
    let vu = TrajectoryView::new(&su, &tu)?;
    let vv = TrajectoryView::new(&sv, &tv)?;
    stability_from_views(&vu, &vv)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationStudy {
    pub deltas: Vec<f64>,
    pub reports: Vec<StabilityReport>,
    /// `∫_{Q_T}|∇(u − v_δ)|^{s̲}` per δ.
    pub gradient_modulars: Vec<f64>,
    pub monotone: bool,
}

/// Stability along `v₀ = u₀ + δ·direction` for a decreasing list of `δ`.
pub fn perturbation_study(
    cfg: &SolverConfig,
    data: &ExponentData,
    u0: &FieldSpec,
    forcing: &Forcing,
    direction: &FieldSpec,
    deltas: &[f64],
) -> Result<PerturbationStudy> {
    let (su, tu) = solve_with_system(cfg, data, u0, forcing)?;
    let vu = TrajectoryView::new(&su, &tu)?;
    let members = par::map_slice(deltas, |&d| {
        let v0 = FieldSpec::Sum {
            terms: vec![u0.clone(), scaled(direction, d)],
        };
        solve_with_system(cfg, data, &v0, forcing)
    });
    let mut reports = Vec::with_capacity(deltas.len());
    for m in members {
        let (sv, tv) = m?;
        let vv = TrajectoryView::new(&sv, &tv)?;
        reports.push(stability_from_views(&vu, &vv)?);
    }
    let gradient_modulars: Vec<f64> = reports.iter().map(|r| r.gradient_modular).collect();
    let monotone = decreasing_within(&gradient_modulars, 0.0, 0.0);
    Ok(PerturbationStudy {
        deltas: deltas.to_vec(),
        reports,
        gradient_modulars,
        monotone,
    })
}

/// `c · f` as a field descriptor.
pub fn scaled(f: &FieldSpec, c: f64) -> FieldSpec {
    match f {
        FieldSpec::Constant { value } => FieldSpec::Constant { value: c * value },
        FieldSpec::Affine {
            offset,
            slope,
            rate,
        } => FieldSpec::Affine {
            offset: c * offset,
            slope: slope.iter().map(|s| c * s).collect(),
            rate: c * rate,
        },
        FieldSpec::Sinusoidal {
            offset,
            amplitude,
            wavenumbers,
            phases,
            decay,
        } => FieldSpec::Sinusoidal {
            offset: c * offset,
            amplitude: c * amplitude,
            wavenumbers: wavenumbers.clone(),
            phases: phases.clone(),
            decay: *decay,
        },
        FieldSpec::Bump {
            center,
            radius,
            height,
            offset,
        } => FieldSpec::Bump {
            center: center.clone(),
            radius: *radius,
            height: c * height,
            offset: c * offset,
        },
        FieldSpec::Sum { terms } => FieldSpec::Sum {
            terms: terms.iter().map(|t| scaled(t, c)).collect(),
        },
    }
}

/// `x_{k+1} ≤ (1 + tol) x_k` for all `k` and `x_last < x_first`, unless every entry is below `floor`.
pub fn decreasing_within(values: &[f64], tol: f64, floor: f64) -> bool {
    if values.iter().all(|v| v.abs() <= floor) {
        return true;
    }
    let steps = values
        .windows(2)
        .all(|w| w[1] <= (1.0 + tol) * w[0] || w[1] <= floor);
    let overall = values.len() < 2 || values[values.len() - 1] < values[0];
    steps && overall
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinfReport {
    pub times: Vec<f64>,
    /// Lattice maximum of `|u(·, t)|`.
    pub lattice_max: Vec<f64>,
    /// `‖u₀‖_∞ + ∫₀ᵗ ‖f(·,s)‖_∞ ds`
    pub envelope: Vec<f64>,
    pub slack: f64,
    pub violations: usize,
}

impl LinfReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }

    pub fn min_margin(&self) -> f64 {
        self.lattice_max
            .iter()
            .zip(&self.envelope)
            .map(|(m, e)| e - m)
            .fold(f64::INFINITY, f64::min)
    }
}

fn field_lattice_max(f: &(dyn Fn(&[f64]) -> f64 + Sync), dim: usize, axis: &[f64]) -> f64 {
    let pts: Vec<Vec<f64>> = if dim == 1 {
        axis.iter().map(|&x| vec![x]).collect()
    } else {
        axis.iter()
            .flat_map(|&x| axis.iter().map(move |&y| vec![x, y]))
            .collect()
    };
    par::map_slice(&pts, |p| f(p).abs())
        .into_iter()
        .fold(0.0, f64::max)
}

/// `max_lattice |u(·,t)| ≤ ‖u₀‖_∞ + ∫₀ᵗ‖f‖_∞ + slack` at each checkpoint.
pub fn linf_bound_check(
    view: &TrajectoryView<'_>,
    u0: &FieldSpec,
    lattice: usize,
    slack: f64,
) -> Result<LinfReport> {
    let dim = view.dim();
    let axis = uniform_axis(lattice);
    let basis = view.system.basis();
    let lattice_max = par::map_slice(&view.trajectory.states, |s| {
        evaluate_lattice(basis, &s.coeffs, &axis).map(|l| l.max_abs())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let u0_sup = field_lattice_max(&|x| u0.eval(x, 0.0), dim, &axis);
    let data = view.system.data();
    let eps = view.eps();
    let forcing = view.system.forcing();
    let f_sup = view
        .times()
        .iter()
        .map(|&t| {
            if forcing.is_zero() {
                0.0
            } else {
                field_lattice_max(
                    &|x| forcing.value(x, t, data, eps).unwrap_or(f64::INFINITY),
                    dim,
                    &axis,
                )
            }
        })
        .collect::<Vec<_>>();
    let f_int = view.running_integral(&f_sup);
    let envelope: Vec<f64> = f_int.iter().map(|v| u0_sup + v).collect();
    let violations = lattice_max
        .iter()
        .zip(&envelope)
        .filter(|(m, e)| **m > **e + slack)
        .count();
    Ok(LinfReport {
        times: view.times().to_vec(),
        lattice_max,
        envelope,
        slack,
        violations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuationReport {
    pub eps: Vec<f64>,
    /// `d_k = ∫_{Q_T}|∇(u_{ε_k} − u_{ε_{k+1}})|^{s̲}`
    pub distances: Vec<f64>,
    /// `𝓖_{ε_{k+1}}(∇u_{ε_k}, ∇u_{ε_{k+1}})`
    pub pairings: Vec<f64>,
    pub ceiling: f64,
    pub monotone: bool,
    pub below_ceiling: bool,
    pub identically_zero: bool,
    pub pairings_nonnegative: bool,
    /// Final-time `‖u‖²` of each member; the last is the degenerate-problem surrogate.
    pub final_l2_sq: Vec<f64>,
}

impl ContinuationReport {
    pub fn passed(&self) -> bool {
        self.monotone && self.below_ceiling && self.pairings_nonnegative
    }
}

/// Solves along a decreasing `ε` sequence and measures consecutive gradient distances.
pub fn eps_continuation_study(
    cfg: &SolverConfig,
    data: &ExponentData,
    u0: &FieldSpec,
    forcing: &Forcing,
    eps_seq: &[f64],
    ceiling: f64,
) -> Result<ContinuationReport> {
    if eps_seq.is_empty() || eps_seq.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config(
            "eps sequence must be nonempty and decreasing".into(),
        ));
    }
    let members = par::map_slice(eps_seq, |&eps| {
        let c = SolverConfig { eps, ..cfg.clone() };
        solve_with_system(&c, data, u0, forcing)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let refs: Vec<_> = members.iter().map(|(s, t)| (s, t)).collect();
    continuation_from_members(&refs, ceiling)
}

/// Continuation report from already solved members ordered by decreasing `ε`.
pub fn continuation_from_members(
    members: &[(&GalerkinSystem, &Trajectory)],
    ceiling: f64,
) -> Result<ContinuationReport> {
    let eps_seq: Vec<f64> = members.iter().map(|(s, _)| s.eps()).collect();
    if eps_seq.is_empty() || eps_seq.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config(
            "eps sequence must be nonempty and decreasing".into(),
        ));
    }
    let views = members
        .iter()
        .map(|&(s, t)| TrajectoryView::new(s, t))
        .collect::<Result<Vec<_>>>()?;
    let mut distances = Vec::new();
    let mut pairings = Vec::new();
    for k in 0..views.len().saturating_sub(1) {
        distances.push(gradient_distance(&views[k], &views[k + 1])?);
        pairings.push(pairing_between(&views[k], &views[k + 1], eps_seq[k + 1])?);
    }
    let scale = views[0]
        .scalars
        .iter()
        .map(|s| s.grad_l2_sq)
        .fold(0.0, f64::max);
    let identically_zero = distances.iter().all(|&d| d == 0.0);
    Ok(ContinuationReport {
        eps: eps_seq,
        monotone: decreasing_within(&distances, MONOTONE_TOLERANCE, 0.0),
        below_ceiling: distances.last().map_or(true, |&d| d <= ceiling),
        identically_zero,
        pairings_nonnegative: pairings.iter().all(|&g| g >= -1e-10 * (1.0 + scale)),
        distances,
        pairings,
        ceiling,
        final_l2_sq: views
            .iter()
            .map(|v| v.scalars.last().map_or(0.0, |s| s.l2_sq))
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementReport {
    pub m_per_dim: Vec<usize>,
    /// `∫_{Q_T}|∇(u^{(m_k)} − u^{(m_{k+1})})|^{s̲}` on the finer member's grid.
    pub distances: Vec<f64>,
    pub floor: f64,
    pub monotone: bool,
}

/// Embeds coarse coefficients into a finer basis by matching multi-indices.
pub fn embed_coefficients(
    coarse: &crate::galerkin::EigenBasis,
    fine: &crate::galerkin::EigenBasis,
    c: &[f64],
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; fine.len()];
    for (j, &v) in c.iter().enumerate() {
        let idx = fine
            .index_of(coarse.mode(j))
            .ok_or_else(|| Error::Config("coarse mode missing from fine basis".into()))?;
        out[idx] = v;
    }
    Ok(out)
}

/// Gradient Cauchy distances as `m_per_dim` runs through `m_values`.
pub fn m_refinement_study(
    cfg: &SolverConfig,
    data: &ExponentData,
    u0: &FieldSpec,
    forcing: &Forcing,
    m_values: &[usize],
) -> Result<RefinementReport> {
    if m_values.len() < 2 || m_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "m sequence must be increasing with at least two members".into(),
        ));
    }
    let members = par::map_slice(m_values, |&m| {
        let c = SolverConfig {
            m_per_dim: m,
            ..cfg.clone()
        };
        solve_with_system(&c, data, u0, forcing)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let refs: Vec<_> = members.iter().map(|(s, t)| (s, t)).collect();
    refinement_from_members(&refs)
}

/// Refinement report from already solved members ordered by increasing `m_per_dim`.
pub fn refinement_from_members(
    members: &[(&GalerkinSystem, &Trajectory)],
) -> Result<RefinementReport> {
    let m_values: Vec<usize> = members.iter().map(|(s, _)| s.basis().m_per_dim()).collect();
    if m_values.len() < 2 || m_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "m sequence must be increasing with at least two members".into(),
        ));
    }
    let mut distances = Vec::new();
    for k in 0..members.len() - 1 {
        let (sc, tc) = members[k];
        let (sf, tf) = members[k + 1];
        let fine = TrajectoryView::new(sf, tf)?;
        let mut embedded = tf.clone();
        embedded.states = tc
            .states
            .iter()
            .map(|s| {
                Ok(crate::galerkin::SpectralState {
                    t: s.t,
                    coeffs: embed_coefficients(sc.basis(), sf.basis(), &s.coeffs)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let coarse = TrajectoryView::new(sf, &embedded)?;
        distances.push(gradient_distance(&fine, &coarse)?);
    }
    let (s0, t0) = members[0];
    let scale = t0
        .states
        .iter()
        .map(|s| s.grad_l2_sq(s0.basis()))
        .fold(0.0, f64::max);
    let floor = 1e-12 * (1.0 + scale) * s0.data().horizon;
    Ok(RefinementReport {
        m_per_dim: m_values,
        monotone: decreasing_within(&distances, MONOTONE_TOLERANCE, floor),
        distances,
        floor,
    })
}
