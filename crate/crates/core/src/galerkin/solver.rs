//! Implicit Euler time stepping with a damped Newton inner solve.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent_model::ExponentData;
use crate::field::{FieldSpec, Vec2};
use crate::galerkin::basis::EigenBasis;
use crate::galerkin::system::{Forcing, GalerkinSystem, TimeLevel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub m_per_dim: usize,
    pub eps: f64,
    pub tau: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub damping_halvings: usize,
    pub tau_retry_cap: usize,
    /// Gauss order per dimension; `None` selects `2·m_per_dim + 4`.
    pub quadrature_order: Option<usize>,
    /// Record a checkpoint every this many steps.
    pub output_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            m_per_dim: 8,
            eps: 1e-2,
            tau: 1e-3,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            damping_halvings: 20,
            tau_retry_cap: 4,
            quadrature_order: None,
            output_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.m_per_dim == 0 {
            return bad("m_per_dim must be at least 1".into());
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!(
                "eps must lie in (0,1) for solving, got {}",
                self.eps
            ));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.newton_tol > 0.0) {
            return bad("newton_tol must be positive".into());
        }
        if self.newton_max_iter == 0 {
            return bad("newton_max_iter must be positive".into());
        }
        if self.output_every == 0 {
            return bad("output_every must be positive".into());
        }
        Ok(())
    }

    /// Number of uniform steps covering `[0, horizon]` and the resulting step size.
    pub fn step_count(&self, horizon: f64) -> (usize, f64) {
        let n = ((horizon / self.tau) - 1e-9).ceil().max(1.0) as usize;
        (n, horizon / n as f64)
    }
}

/// Galerkin coefficients at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralState {
    pub t: f64,
    pub coeffs: Vec<f64>,
}

impl SpectralState {
    pub fn zero(m: usize) -> Self {
        SpectralState {
            t: 0.0,
            coeffs: vec![0.0; m],
        }
    }

    /// `‖u‖₂²` by orthonormality.
    pub fn l2_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// `‖∇u‖₂² = Σ λ_j u_j²`.
    pub fn grad_l2_sq(&self, basis: &EigenBasis) -> f64 {
        self.coeffs
            .iter()
            .zip(basis.eigenvalues())
            .map(|(c, l)| l * c * c)
            .sum()
    }
}

/// `(u(x), ∇u(x))` for each point; points must lie in `[0,1]^N`.
pub fn evaluate(
    basis: &EigenBasis,
    state: &SpectralState,
    points: &[Vec<f64>],
) -> Result<Vec<(f64, Vec2)>> {
    points
        .iter()
        .map(|x| basis.evaluate(&state.coeffs, x))
        .collect()
}

/// Per-step bookkeeping of an accepted implicit step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub tau: f64,
    pub newton_iterations: usize,
    /// `‖R(U')‖` at acceptance.
    pub residual: f64,
    /// `newton_tol · (1 + ‖U‖)`
    pub residual_bound: f64,
    /// `(‖U'‖² − ‖U‖²)/(2τ) + ∫ F_ε|∇u'|²`
    pub dissipation_lhs: f64,
    /// `∫ f u'`
    pub dissipation_rhs: f64,
    /// `½‖U'−U‖²/τ + E(U')`
    pub proximal_lhs: f64,
    /// `E(U) + ∫ f (u' − u)`
    pub proximal_rhs: f64,
    /// Slack from the inexact Newton solve.
    pub slack: f64,
    /// `‖U' − U‖² / τ`, the step's share of `∫‖u_t‖²`
    pub ut_sq: f64,
    pub flux_energy: f64,
}

impl StepRecord {
    pub fn dissipation_holds(&self) -> bool {
        self.dissipation_lhs <= self.dissipation_rhs + self.slack
    }

    pub fn proximal_holds(&self) -> bool {
        self.proximal_lhs <= self.proximal_rhs + self.slack
    }

    pub fn orthogonality_holds(&self) -> bool {
        self.residual <= self.residual_bound
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub basis: EigenBasis,
    pub config: SolverConfig,
    /// Checkpoints including `t = 0`.
    pub states: Vec<SpectralState>,
    /// `∫₀ᵗ ‖u_t‖²` at each checkpoint.
    pub ut_sq_accum: Vec<f64>,
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn initial(&self) -> &SpectralState {
        &self.states[0]
    }

    pub fn last(&self) -> &SpectralState {
        self.states
            .last()
            .expect("trajectory has the initial state")
    }

    pub fn eps(&self) -> f64 {
        self.config.eps
    }

    pub fn per_step_checks_hold(&self) -> bool {
        self.steps
            .iter()
            .all(|s| s.dissipation_holds() && s.proximal_holds() && s.orthogonality_holds())
    }
}

/// A solve that stopped early, with everything computed before the failure.
#[derive(Debug)]
pub struct SolveFailure {
    pub partial: Trajectory,
    pub cause: Error,
}

impl std::fmt::Display for SolveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "solve stopped at t = {}: {}",
            self.partial.last().t,
            self.cause
        )
    }
}

impl std::error::Error for SolveFailure {}

struct Inner<'a> {
    system: &'a GalerkinSystem,
    cfg: &'a SolverConfig,
}

impl Inner<'_> {
    fn residual(
        &self,
        u_new: &DVector<f64>,
        u: &DVector<f64>,
        level: &TimeLevel,
        tau: f64,
    ) -> DVector<f64> {
        let a = self.system.assemble(u_new, level);
        u_new - u + (a.stiffness - &level.load) * tau
    }

    /// Damped Newton on `R(U') = U' − U − τ rhs(U', t+τ)`.
    fn newton(
        &self,
        u: &DVector<f64>,
        level: &TimeLevel,
        tau: f64,
    ) -> Result<(DVector<f64>, usize, f64)> {
        let m = u.len();
        let bound = self.cfg.newton_tol * (1.0 + u.norm());
        let mut x = u.clone();
        let mut r = self.residual(&x, u, level, tau);
        let mut rn = r.norm();
        let mut trace = vec![rn];
        for it in 0..=self.cfg.newton_max_iter {
            if rn <= bound {
                return Ok((x, it, rn));
            }
            if it == self.cfg.newton_max_iter {
                break;
            }
            let k = self.system.jacobian(&x, level);
            let mat = DMatrix::<f64>::identity(m, m) + k * tau;
            let chol = Cholesky::new(mat).ok_or_else(|| Error::StepFailure {
                t: level.t,
                reason: "Newton matrix not positive definite".into(),
                trace: trace.clone(),
            })?;
            let dx = chol.solve(&(-&r));
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..=self.cfg.damping_halvings {
                let trial = &x + &dx * lambda;
                let rt = self.residual(&trial, u, level, tau);
                let rtn = rt.norm();
                if rtn < rn || rtn <= bound {
                    x = trial;
                    r = rt;
                    rn = rtn;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            trace.push(rn);
            if !accepted {
                return Err(Error::StepFailure {
                    t: level.t,
                    reason: "damping exhausted without residual decrease".into(),
                    trace,
                });
            }
        }
        Err(Error::StepFailure {
            t: level.t,
            reason: format!(
                "no convergence in {} Newton iterations",
                self.cfg.newton_max_iter
            ),
            trace,
        })
    }

    fn step(&self, state: &SpectralState, tau: f64) -> Result<(SpectralState, StepRecord)> {
        let t_new = state.t + tau;
        let level = self.system.time_level(t_new)?;
        let u = DVector::from_column_slice(&state.coeffs);
        let (x, iterations, residual) = self.newton(&u, &level, tau)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepFailure {
                t: t_new,
                reason: "non-finite coefficients".into(),
                trace: vec![residual],
            });
        }
        let a_new = self.system.assemble(&x, &level);
        let a_old = self.system.assemble(&u, &level);
        let du = &x - &u;
        let fu_new = level.load.dot(&x);
        let fu_old = level.load.dot(&u);
        let r = self.residual(&x, &u, &level, tau);
        let scale =
            1.0 + x.norm_squared() + u.norm_squared() + a_new.energy.abs() + a_old.energy.abs();
        let slack = (r.dot(&x).abs() + r.dot(&du).abs()) / tau + 1e-12 * scale / tau.min(1.0);
        let record = StepRecord {
            t: t_new,
            tau,
            newton_iterations: iterations,
            residual,
            residual_bound: self.cfg.newton_tol * (1.0 + u.norm()),
            dissipation_lhs: (x.norm_squared() - u.norm_squared()) / (2.0 * tau)
                + a_new.flux_energy,
            dissipation_rhs: fu_new,
            proximal_lhs: 0.5 * du.norm_squared() / tau + a_new.energy,
            proximal_rhs: a_old.energy + fu_new - fu_old,
            slack,
            ut_sq: du.norm_squared() / tau,
            flux_energy: a_new.flux_energy,
        };
        Ok((
            SpectralState {
                t: t_new,
                coeffs: x.iter().copied().collect(),
            },
            record,
        ))
    }

    /// One macro step, subdividing on failure up to the retry cap.
    fn advance(
        &self,
        state: &SpectralState,
        tau: f64,
        depth: usize,
        records: &mut Vec<StepRecord>,
    ) -> Result<SpectralState> {
        match self.step(state, tau) {
            Ok((next, rec)) => {
                records.push(rec);
                Ok(next)
            }
            Err(e) if depth < self.cfg.tau_retry_cap => {
                let mark = records.len();
                let half = 0.5 * tau;
                let attempt = self
                    .advance(state, half, depth + 1, records)
                    .and_then(|mid| self.advance(&mid, half, depth + 1, records));
                match attempt {
                    Ok(mut next) => {
                        next.t = state.t + tau;
                        Ok(next)
                    }
                    Err(_) => {
                        records.truncate(mark);
                        Err(e)
                    }
                }
            }
            Err(e) => Err(e),
        }
    }
}

/// One implicit Euler step of size `tau` from `state`.
pub fn step_implicit(
    system: &GalerkinSystem,
    cfg: &SolverConfig,
    state: &SpectralState,
    tau: f64,
) -> Result<(SpectralState, StepRecord)> {
    if !(tau > 0.0) {
        return Err(Error::Config(format!("tau must be positive, got {tau}")));
    }
    Inner { system, cfg }.step(state, tau)
}

/// Galerkin projection `u_j(0) = (u₀, φ_j)`.
pub fn project_initial(system: &GalerkinSystem, u0: &FieldSpec) -> Result<SpectralState> {
    Ok(SpectralState {
        t: 0.0,
        coeffs: system.project(u0)?,
    })
}

/// Builds the Galerkin system for `cfg` after validating `data`.
pub fn build_system(
    cfg: &SolverConfig,
    data: &ExponentData,
    forcing: &Forcing,
) -> Result<GalerkinSystem> {
    cfg.check()?;
    data.validate()?;
    let basis = EigenBasis::new(data.dim, cfg.m_per_dim)?;
    GalerkinSystem::new(
        basis,
        cfg.quadrature_order,
        data.clone(),
        cfg.eps,
        forcing.clone(),
    )
}

/// Integrates the Galerkin system on `[0, T]`.
pub fn solve(
    cfg: &SolverConfig,
    data: &ExponentData,
    u0: &FieldSpec,
    forcing: &Forcing,
) -> std::result::Result<Trajectory, Box<SolveFailure>> {
    let empty = |cause: Error| {
        Box::new(SolveFailure {
            partial: Trajectory {
                basis: EigenBasis::new(data.dim.clamp(1, 2), cfg.m_per_dim.max(1))
                    .expect("valid fallback basis"),
                config: cfg.clone(),
                states: vec![SpectralState::zero(0)],
                ut_sq_accum: vec![0.0],
                steps: Vec::new(),
            },
            cause,
        })
    };
    let system = build_system(cfg, data, forcing).map_err(empty)?;
    let init = project_initial(&system, u0).map_err(empty)?;
    solve_system(&system, cfg, init)
}

/// Integrates an already-built system from a given initial state.
pub fn solve_system(
    system: &GalerkinSystem,
    cfg: &SolverConfig,
    init: SpectralState,
) -> std::result::Result<Trajectory, Box<SolveFailure>> {
    let horizon = system.data().horizon;
    let (n_steps, tau) = cfg.step_count(horizon);
    let inner = Inner { system, cfg };
    let mut traj = Trajectory {
        basis: system.basis().clone(),
        config: cfg.clone(),
        states: vec![init.clone()],
        ut_sq_accum: vec![0.0],
        steps: Vec::with_capacity(n_steps),
    };
    let mut state = init;
    let mut accum = 0.0;
    for k in 1..=n_steps {
        let before = traj.steps.len();
        match inner.advance(&state, tau, 0, &mut traj.steps) {
            Ok(mut next) => {
                next.t = k as f64 * tau;
                accum += traj.steps[before..].iter().map(|s| s.ut_sq).sum::<f64>();
                state = next;
                if k % cfg.output_every == 0 || k == n_steps {
                    traj.states.push(state.clone());
                    traj.ut_sq_accum.push(accum);
                }
            }
            Err(cause) => {
                return Err(Box::new(SolveFailure {
                    partial: traj,
                    cause,
                }));
            }
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heat() -> (SolverConfig, ExponentData) {
        let cfg = SolverConfig {
            m_per_dim: 4,
            eps: 0.1,
            tau: 1e-3,
            ..Default::default()
        };
        (
            cfg,
            ExponentData::constant(2, 0.01, 2.0, 2.0, 0.5, 0.5, 1.0),
        )
    }

    #[test]
    fn zero_stays_zero() {
        let (cfg, data) = heat();
        let t = solve(&cfg, &data, &FieldSpec::zero(), &Forcing::None).unwrap();
        assert!(t.last().coeffs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn heat_step_matches_closed_form() {
        let (cfg, data) = heat();
        let sys = build_system(&cfg, &data, &Forcing::None).unwrap();
        let u0 = project_initial(&sys, &FieldSpec::sine_mode(&[1, 1], 1.0)).unwrap();
        let (u1, rec) = step_implicit(&sys, &cfg, &u0, 1e-3).unwrap();
        for j in 0..sys.basis().len() {
            let exact = u0.coeffs[j] / (1.0 + sys.basis().eigenvalue(j) * 1e-3);
            assert!((u1.coeffs[j] - exact).abs() < 1e-9);
        }
        assert!(rec.dissipation_holds() && rec.proximal_holds() && rec.orthogonality_holds());
    }

    #[test]
    fn ut_accumulation_is_nondecreasing() {
        let (cfg, data) = heat();
        let t = solve(
            &cfg,
            &data,
            &FieldSpec::sine_mode(&[1, 1], 1.0),
            &Forcing::None,
        )
        .unwrap();
        assert_eq!(t.states.len(), 11);
        assert!(t.ut_sq_accum.windows(2).all(|w| w[1] >= w[0]));
        assert!(t.per_step_checks_hold());
    }

    #[test]
    fn invalid_data_fails_with_validation() {
        let (cfg, _) = heat();
        let data = ExponentData::constant(2, 0.01, 2.0, 2.6, 0.5, 0.5, 1.0);
        let err = solve(&cfg, &data, &FieldSpec::zero(), &Forcing::None).unwrap_err();
        assert!(matches!(
            err.cause,
            Error::Validation {
                condition: "eq:gap-z",
                ..
            }
        ));
    }
}
