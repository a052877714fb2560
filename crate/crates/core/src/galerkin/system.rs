//! Quadrature assembly of the Galerkin ODE system and its Jacobian.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent_model::ExponentData;
use crate::field::FieldSpec;
use crate::flux::{self, PointCoefficients};
use crate::galerkin::basis::{BasisTables, EigenBasis};
use crate::par;
use crate::quadrature::{QuadratureGrid, SpaceRule};

/// Source term of the equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Forcing {
    /// `f ≡ 0`
    None,
    /// `f` given by a parametric field.
    Field { field: FieldSpec },
    /// `f = ∂_t u − div(F_ε(∇u)∇u)` for the prescribed exact solution `u`.
    Manufactured { exact: FieldSpec },
}

impl Default for Forcing {
    fn default() -> Self {
        Forcing::None
    }
}

impl Forcing {
    pub fn field(f: FieldSpec) -> Self {
        Forcing::Field { field: f }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Forcing::None)
    }

    pub fn check(&self, dim: usize) -> Result<()> {
        match self {
            Forcing::None => Ok(()),
            Forcing::Field { field } => field.check(dim),
            Forcing::Manufactured { exact } => exact.check(dim),
        }
    }

    /// `f(x, t)` for the given data and regularization.
    pub fn value(&self, x: &[f64], t: f64, data: &ExponentData, eps: f64) -> Result<f64> {
        match self {
            Forcing::None => Ok(0.0),
            Forcing::Field { field } => Ok(field.eval(x, t)),
            Forcing::Manufactured { exact } => {
                let u = exact.jet(x, t);
                let coeffs = data.jets(x, t);
                Ok(u.dt - flux::flux_divergence(&u, &coeffs, eps, x.len())?)
            }
        }
    }
}

/// Node-wise data frozen at one time level.
#[derive(Clone, Debug)]
pub struct TimeLevel {
    pub t: f64,
    pub coeffs: Vec<PointCoefficients>,
    /// `(∫ f φ_j)_j`
    pub load: DVector<f64>,
    /// `f` at the spatial nodes.
    pub source: Vec<f64>,
}

/// Flux-dependent quantities at one coefficient vector.
#[derive(Clone, Debug)]
pub struct FluxAssembly {
    /// `(∫ F_ε(∇u)∇u·∇φ_j)_j`
    pub stiffness: DVector<f64>,
    /// `∫ F_ε(∇u)|∇u|²`
    pub flux_energy: f64,
    /// `∫ ((a/p)β^{p/2} + (b/q)β^{q/2})`
    pub energy: f64,
}

/// Spectral Galerkin semidiscretization of the regularized problem.
#[derive(Clone, Debug)]
pub struct GalerkinSystem {
    basis: EigenBasis,
    rule: SpaceRule,
    tables: BasisTables,
    data: ExponentData,
    eps: f64,
    forcing: Forcing,
}

impl GalerkinSystem {
    pub fn new(
        basis: EigenBasis,
        quadrature_order: Option<usize>,
        data: ExponentData,
        eps: f64,
        forcing: Forcing,
    ) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Config(format!(
                "solving needs eps in (0,1), got {eps}"
            )));
        }
        if data.dim != basis.dim() {
            return Err(Error::Config(format!(
                "data dimension {} differs from basis dimension {}",
                data.dim,
                basis.dim()
            )));
        }
        forcing.check(basis.dim())?;
        let order = quadrature_order.unwrap_or_else(|| basis.default_quadrature_order());
        let rule = SpaceRule::gauss(basis.dim(), order)?;
        let tables = BasisTables::new(&basis, &rule)?;
        Ok(GalerkinSystem {
            basis,
            rule,
            tables,
            data,
            eps,
            forcing,
        })
    }

    pub fn basis(&self) -> &EigenBasis {
        &self.basis
    }

    pub fn rule(&self) -> &SpaceRule {
        &self.rule
    }

    pub fn tables(&self) -> &BasisTables {
        &self.tables
    }

    pub fn data(&self) -> &ExponentData {
        &self.data
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    /// Spatial grid frozen at time `t`.
    pub fn grid_at(&self, t: f64) -> QuadratureGrid {
        QuadratureGrid::spatial(self.rule.clone(), t)
    }

    pub fn time_level(&self, t: f64) -> Result<TimeLevel> {
        let rule = &self.rule;
        let coeffs = par::map_indexed(rule.len(), |n| self.data.at(rule.point(n), t));
        let (load, source) = if self.forcing.is_zero() {
            (DVector::zeros(self.basis.len()), vec![0.0; rule.len()])
        } else {
            let vals = par::map_indexed(rule.len(), |n| {
                self.forcing.value(rule.point(n), t, &self.data, self.eps)
            });
            let source = vals.into_iter().collect::<Result<Vec<f64>>>()?;
            if let Some(n) = source.iter().position(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "forcing not finite at node {n}, t = {t}"
                )));
            }
            let w = rule.weights();
            let load = match &self.forcing {
                Forcing::Manufactured { exact } => self.weak_manufactured_load(exact, t),
                _ => {
                    let weighted = DVector::from_iterator(
                        rule.len(),
                        source.iter().zip(w).map(|(f, w)| f * w),
                    );
                    self.tables.load(&weighted)
                }
            };
            (load, source)
        };
        Ok(TimeLevel {
            t,
            coeffs,
            load,
            source,
        })
    }

    /// `∫ ∂_t u φ_j + ∫ F_ε(∇u)∇u·∇φ_j`, equal to `∫ f φ_j` after integrating by parts
    /// against the Dirichlet basis; avoids quadrature of the pointwise divergence.
    fn weak_manufactured_load(&self, exact: &FieldSpec, t: f64) -> DVector<f64> {
        let rule = &self.rule;
        let n = rule.len();
        let dim = self.basis.dim();
        let w = rule.weights();
        let jets = par::map_indexed(n, |i| {
            let x = rule.point(i);
            let jet = exact.jet(x, t);
            (
                jet.dt,
                flux::flux_vector(&jet.grad[..dim], self.eps, &self.data.at(x, t)),
            )
        });
        let dt = DVector::from_fn(n, |i, _| w[i] * jets[i].0);
        let mut v = DVector::zeros(dim * n);
        for d in 0..dim {
            for i in 0..n {
                v[d * n + i] = w[i] * jets[i].1[d];
            }
        }
        self.tables.load(&dt) + self.tables.divergence_load(&v)
    }

    /// Flux stiffness vector, flux energy and stored energy at `u`.
    pub fn assemble(&self, u: &DVector<f64>, level: &TimeLevel) -> FluxAssembly {
        let n = self.rule.len();
        let dim = self.basis.dim();
        let g = self.tables.gradients(u);
        let w = self.rule.weights();
        let eps = self.eps;
        let per_node = par::map_indexed(n, |i| {
            let mut xi = [0.0; crate::field::MAX_DIM];
            for d in 0..dim {
                xi[d] = g[d * n + i];
            }
            let xi = &xi[..dim];
            let c = &level.coeffs[i];
            let beta = flux::beta_eps(xi, eps);
            let f = flux::flux_coefficient_beta(beta, c);
            let energy =
                c.a / c.p * flux::half_power(beta, c.p) + c.b / c.q * flux::half_power(beta, c.q);
            (f, f * flux::norm_sq(xi), energy)
        });
        let mut weighted = DVector::zeros(dim * n);
        for d in 0..dim {
            for i in 0..n {
                weighted[d * n + i] = w[i] * per_node[i].0 * g[d * n + i];
            }
        }
        let flux_energy = par::weighted_sum(w, |i| per_node[i].1);
        let energy = par::weighted_sum(w, |i| per_node[i].2);
        FluxAssembly {
            stiffness: self.tables.divergence_load(&weighted),
            flux_energy,
            energy,
        }
    }

    /// `K_{jk} = ∫ ∇φ_j · J_ε(∇u) ∇φ_k`.
    pub fn jacobian(&self, u: &DVector<f64>, level: &TimeLevel) -> DMatrix<f64> {
        let n = self.rule.len();
        let dim = self.basis.dim();
        let m = self.basis.len();
        let g = self.tables.gradients(u);
        let w = self.rule.weights();
        let eps = self.eps;
        let jac = par::map_indexed(n, |i| {
            let mut xi = [0.0; crate::field::MAX_DIM];
            for d in 0..dim {
                xi[d] = g[d * n + i];
            }
            let xi = &xi[..dim];
            flux::flux_jacobian_unchecked(xi, flux::beta_eps(xi, eps), &level.coeffs[i])
        });
        let grads = &self.tables.grads;
        let mut c = DMatrix::zeros(dim * n, m);
        for col in 0..m {
            for d in 0..dim {
                for i in 0..n {
                    let mut s = 0.0;
                    for e in 0..dim {
                        s += jac[i][d][e] * grads[(e * n + i, col)];
                    }
                    c[(d * n + i, col)] = w[i] * s;
                }
            }
        }
        let mut k = &self.tables.grads_t * c;
        // symmetrize against roundoff
        for i in 0..m {
            for j in 0..i {
                let v = 0.5 * (k[(i, j)] + k[(j, i)]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    /// `(u_j)' = −∫ F_ε(∇u)∇u·∇φ_j + ∫ f φ_j`.
    pub fn ode_rhs(&self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        if u.len() != self.basis.len() {
            return Err(Error::Domain("coefficient count mismatch".into()));
        }
        let level = self.time_level(t)?;
        let u = DVector::from_column_slice(u);
        let a = self.assemble(&u, &level);
        Ok((level.load - a.stiffness).iter().copied().collect())
    }

    /// `(u₀, φ_j)` by quadrature.
    pub fn project(&self, u0: &FieldSpec) -> Result<Vec<f64>> {
        u0.check(self.basis.dim())?;
        let rule = &self.rule;
        let vals = par::map_indexed(rule.len(), |n| u0.eval(rule.point(n), 0.0));
        if let Some(n) = vals.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "initial datum not finite at node {n}"
            )));
        }
        let w = rule.weights();
        let weighted = DVector::from_iterator(rule.len(), vals.iter().zip(w).map(|(v, w)| v * w));
        Ok(self.tables.load(&weighted).iter().copied().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heat_system(eps: f64) -> GalerkinSystem {
        let data = ExponentData::constant(2, 0.1, 2.0, 2.0, 0.5, 0.5, 1.0);
        GalerkinSystem::new(
            EigenBasis::new(2, 8).unwrap(),
            None,
            data,
            eps,
            Forcing::None,
        )
        .unwrap()
    }

    #[test]
    fn zero_state_zero_rhs() {
        let s = heat_system(0.1);
        let r = s.ode_rhs(&vec![0.0; 64], 0.0).unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn heat_rhs_diagonalizes() {
        let s = heat_system(0.3);
        for j in [0, 3, 9] {
            let mut e = vec![0.0; 64];
            e[j] = 1.0;
            let r = s.ode_rhs(&e, 0.0).unwrap();
            for (k, v) in r.iter().enumerate().take(16) {
                let exact = if k == j {
                    -s.basis().eigenvalue(j)
                } else {
                    0.0
                };
                assert!((v - exact).abs() < 1e-8, "j={j} k={k} v={v}");
            }
        }
    }

    #[test]
    fn jacobian_is_identity_stiffness_in_heat_case() {
        let s = heat_system(0.1);
        let level = s.time_level(0.0).unwrap();
        let u = DVector::from_fn(64, |j, _| 1.0 / (j + 1) as f64);
        let k = s.jacobian(&u, &level);
        for i in 0..16 {
            for j in 0..16 {
                let exact = if i == j { s.basis().eigenvalue(i) } else { 0.0 };
                assert!((k[(i, j)] - exact).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn jacobian_matches_difference_quotient() {
        let data = ExponentData::constant(2, 0.1, 1.8, 2.2, 0.5, 0.5, 0.9);
        let s = GalerkinSystem::new(
            EigenBasis::new(2, 3).unwrap(),
            None,
            data,
            0.05,
            Forcing::None,
        )
        .unwrap();
        let level = s.time_level(0.0).unwrap();
        let u = DVector::from_fn(9, |j, _| 0.3 / (j + 1) as f64);
        let k = s.jacobian(&u, &level);
        let h = 1e-6;
        for col in 0..9 {
            let mut up = u.clone();
            let mut um = u.clone();
            up[col] += h;
            um[col] -= h;
            let d =
                (s.assemble(&up, &level).stiffness - s.assemble(&um, &level).stiffness) / (2.0 * h);
            for row in 0..9 {
                assert!((d[row] - k[(row, col)]).abs() < 1e-5 * (1.0 + k[(row, col)].abs()));
            }
        }
    }

    #[test]
    fn projection_of_eigenfunction() {
        let s = heat_system(0.1);
        let c = s.project(&FieldSpec::sine_mode(&[1, 1], 1.0)).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-10);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-10));
        let z = s.project(&FieldSpec::zero()).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }
}
