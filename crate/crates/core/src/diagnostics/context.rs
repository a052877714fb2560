//! Node-wise evaluation of a trajectory at its checkpoints.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::field::{Vec2, MAX_DIM};
use crate::flux::{self, PointCoefficients};
use crate::galerkin::{GalerkinSystem, TimeLevel, Trajectory};
use crate::par;
use crate::quadrature::{QuadratureGrid, TimeRule};
use crate::varexp::SampledField;

/// A checkpoint evaluated at the spatial quadrature nodes.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub t: f64,
    pub coeffs: DVector<f64>,
    pub values: DVector<f64>,
    /// Stacked gradient components, `d·nodes + n`.
    pub grads: DVector<f64>,
    pub level: TimeLevel,
}

/// Integrals of a checkpoint over the spatial domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckpointScalars {
    pub l2_sq: f64,
    pub grad_l2_sq: f64,
    /// `∫ F_ε(∇u)|∇u|²`
    pub flux_energy_eps: f64,
    /// `∫ (a|∇u|^p + b|∇u|^q)`
    pub flux_energy_0: f64,
    /// `∫ (a β_ε^{p/2} + b β_ε^{q/2})`
    pub beta_energy: f64,
    /// `∫ f u`
    pub forcing_pairing: f64,
    /// `∫ f²`
    pub forcing_l2_sq: f64,
    /// `∫ (a(2ε²)^{p/2} + b(2ε²)^{q/2})`
    pub small_gradient_constant: f64,
}

/// A trajectory together with its system, evaluated at every checkpoint.
#[derive(Debug)]
pub struct TrajectoryView<'a> {
    pub system: &'a GalerkinSystem,
    pub trajectory: &'a Trajectory,
    pub checkpoints: Vec<Checkpoint>,
    pub scalars: Vec<CheckpointScalars>,
    time_rule: TimeRule,
}

impl<'a> TrajectoryView<'a> {
    pub fn new(system: &'a GalerkinSystem, trajectory: &'a Trajectory) -> Result<Self> {
        if system.basis() != &trajectory.basis {
            return Err(Error::Config(
                "trajectory and system use different bases".into(),
            ));
        }
        let times = trajectory.times();
        let time_rule = if times.len() >= 2 {
            TimeRule::trapezoid(&times)?
        } else {
            TimeRule::instant(times[0])
        };
        let mut checkpoints = Vec::with_capacity(times.len());
        for state in &trajectory.states {
            let coeffs = DVector::from_column_slice(&state.coeffs);
            let level = system.time_level(state.t)?;
            checkpoints.push(Checkpoint {
                t: state.t,
                values: system.tables().values(&coeffs),
                grads: system.tables().gradients(&coeffs),
                coeffs,
                level,
            });
        }
        let mut view = TrajectoryView {
            system,
            trajectory,
            checkpoints,
            scalars: Vec::new(),
            time_rule,
        };
        view.scalars = (0..view.checkpoints.len())
            .map(|k| view.compute_scalars(k))
            .collect();
        Ok(view)
    }

    pub fn eps(&self) -> f64 {
        self.system.eps()
    }

    pub fn dim(&self) -> usize {
        self.system.basis().dim()
    }

    pub fn nodes(&self) -> usize {
        self.system.rule().len()
    }

    pub fn times(&self) -> &[f64] {
        self.time_rule.nodes()
    }

    pub fn time_rule(&self) -> &TimeRule {
        &self.time_rule
    }

    pub fn horizon(&self) -> f64 {
        *self.times().last().unwrap_or(&0.0)
    }

    /// Gradient of checkpoint `k` at spatial node `i`.
    pub fn grad(&self, k: usize, i: usize) -> Vec2 {
        let n = self.nodes();
        let mut g = [0.0; MAX_DIM];
        for d in 0..self.dim() {
            g[d] = self.checkpoints[k].grads[d * n + i];
        }
        g
    }

    pub fn coefficients(&self, k: usize, i: usize) -> &PointCoefficients {
        &self.checkpoints[k].level.coeffs[i]
    }

    /// Trapezoid integral over the checkpoints of `f(k)`.
    pub fn time_integral(&self, f: impl Fn(usize) -> f64) -> f64 {
        let w = self.time_rule.weights();
        (0..w.len()).map(|k| w[k] * f(k)).sum()
    }

    /// Running trapezoid integrals `∫₀^{t_k}` for every checkpoint.
    pub fn running_integral(&self, values: &[f64]) -> Vec<f64> {
        let t = self.times();
        let mut out = vec![0.0; values.len()];
        for k in 1..values.len() {
            out[k] = out[k - 1] + 0.5 * (t[k] - t[k - 1]) * (values[k] + values[k - 1]);
        }
        out
    }

    /// Spatial quadrature of `f(i)` over the nodes.
    pub fn space_integral(&self, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
        par::weighted_sum(self.system.rule().weights(), f)
    }

    /// `∫_{Q_T} f(k, i)` by Gauss in space and trapezoid over checkpoints.
    pub fn space_time_integral(&self, f: impl Fn(usize, usize) -> f64 + Sync + Send) -> f64 {
        let per = (0..self.checkpoints.len())
            .map(|k| self.space_integral(|i| f(k, i)))
            .collect::<Vec<_>>();
        self.time_integral(|k| per[k])
    }

    /// The Gauss × trapezoid grid on `Q_T`.
    pub fn space_time_grid(&self) -> QuadratureGrid {
        QuadratureGrid::new(self.system.rule().clone(), self.time_rule.clone())
    }

    /// Gradient of the trajectory as a vector field on [`Self::space_time_grid`].
    pub fn gradient_field<'g>(&self, grid: &'g QuadratureGrid) -> Result<SampledField<'g>> {
        let n = self.nodes();
        let dim = self.dim();
        let mut vals = Vec::with_capacity(grid.len() * dim);
        for k in 0..self.checkpoints.len() {
            for i in 0..n {
                let g = self.grad(k, i);
                vals.extend_from_slice(&g[..dim]);
            }
        }
        SampledField::new(grid, dim, vals)
    }

    fn compute_scalars(&self, k: usize) -> CheckpointScalars {
        let cp = &self.checkpoints[k];
        let eps = self.eps();
        let dim = self.dim();
        let state = &self.trajectory.states[k];
        let b2 = 2.0 * eps * eps;
        let per_node = par::map_indexed(self.nodes(), |i| {
            let g = self.grad(k, i);
            let xi = &g[..dim];
            let c = self.coefficients(k, i);
            let n2 = flux::norm_sq(xi);
            let beta = eps * eps + n2;
            let fe = flux::flux_coefficient_beta(beta, c) * n2;
            let f0 = c.a * flux::half_power(n2, c.p) + c.b * flux::half_power(n2, c.q);
            let be = c.a * flux::half_power(beta, c.p) + c.b * flux::half_power(beta, c.q);
            let f = cp.level.source[i];
            let sg = c.a * flux::half_power(b2, c.p) + c.b * flux::half_power(b2, c.q);
            [fe, f0, be, f * f, sg]
        });
        let w = self.system.rule().weights();
        let pick = |j: usize| par::weighted_sum(w, |i| per_node[i][j]);
        CheckpointScalars {
            l2_sq: state.l2_sq(),
            grad_l2_sq: state.grad_l2_sq(self.system.basis()),
            flux_energy_eps: pick(0),
            flux_energy_0: pick(1),
            beta_energy: pick(2),
            forcing_pairing: cp.level.load.dot(&cp.coeffs),
            forcing_l2_sq: pick(3),
            small_gradient_constant: pick(4),
        }
    }
}
