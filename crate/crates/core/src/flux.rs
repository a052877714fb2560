//! Pointwise algebra of the regularized double-phase flux.
//!
//! With `β_ε(ξ) = ε² + |ξ|²` the flux coefficient is
//! `F_ε^{(s₁,s₂)} = a β_ε^{(p+s₁−2)/2} + b β_ε^{(q+s₂−2)/2}` and the flux
//! vector is `F_ε^{(0,0)} ξ`, the ξ-gradient of the convex energy density
//! `(a/p) β_ε^{p/2} + (b/q) β_ε^{q/2}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Jet, Mat2, Vec2, MAX_DIM};

/// Coefficients and exponents frozen at one point `z` of the cylinder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCoefficients {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub q: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxParams {
    pub eps: f64,
    pub s1: f64,
    pub s2: f64,
}

impl FluxParams {
    pub fn plain(eps: f64) -> Result<Self> {
        Self::shifted(eps, 0.0, 0.0)
    }

    pub fn shifted(eps: f64, s1: f64, s2: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::Domain(format!("eps must lie in [0,1), got {eps}")));
        }
        if s1 < 0.0 || s2 < 0.0 {
            return Err(Error::Domain(format!(
                "shift exponents must be nonnegative, got ({s1}, {s2})"
            )));
        }
        Ok(FluxParams { eps, s1, s2 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxEval {
    pub density: f64,
    pub vector: Vec2,
    pub energy: f64,
}

pub fn norm_sq(xi: &[f64]) -> f64 {
    xi.iter().map(|v| v * v).sum()
}

pub fn beta_eps(xi: &[f64], eps: f64) -> f64 {
    eps * eps + norm_sq(xi)
}

/// `β^{e/2}` through `exp((e/2) ln β)`, with the limits at `β = 0`.
#[inline]
pub fn half_power(beta: f64, e: f64) -> f64 {
    if beta > 0.0 {
        (0.5 * e * beta.ln()).exp()
    } else if e > 0.0 {
        0.0
    } else if e == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

/// `γ_ε^{(p)}(ξ) = β_ε^{(p−2)/2}`.
pub fn gamma_eps(xi: &[f64], p: f64, eps: f64) -> f64 {
    half_power(beta_eps(xi, eps), p - 2.0)
}

/// `F_ε^{(s₁,s₂)}(z, ξ)`; refuses the singular point `β = 0` with a negative exponent.
pub fn flux_density(xi: &[f64], params: &FluxParams, c: &PointCoefficients) -> Result<f64> {
    let beta = beta_eps(xi, params.eps);
    let ep = c.p + params.s1 - 2.0;
    let eq = c.q + params.s2 - 2.0;
    if beta == 0.0 && (ep < 0.0 || eq < 0.0) {
        return Err(Error::Singularity(format!(
            "F at xi = 0 with eps = 0 and exponents ({ep}, {eq})"
        )));
    }
    Ok(c.a * half_power(beta, ep) + c.b * half_power(beta, eq))
}

/// `F_ε^{(0,0)}` evaluated from `β` directly; infinite at a singular point.
#[inline]
pub(crate) fn flux_coefficient_beta(beta: f64, c: &PointCoefficients) -> f64 {
    c.a * half_power(beta, c.p - 2.0) + c.b * half_power(beta, c.q - 2.0)
}

/// The flux vector `F_ε^{(0,0)}(z, ξ) ξ`, extended by zero at `ε = 0, ξ = 0`.
pub fn flux_vector(xi: &[f64], eps: f64, c: &PointCoefficients) -> Vec2 {
    let beta = beta_eps(xi, eps);
    let mut out = [0.0; MAX_DIM];
    if beta == 0.0 {
        return out;
    }
    let f = flux_coefficient_beta(beta, c);
    for (o, x) in out.iter_mut().zip(xi) {
        *o = f * x;
    }
    out
}

/// `(a/p) β_ε^{p/2} + (b/q) β_ε^{q/2}`.
pub fn energy_density(xi: &[f64], eps: f64, c: &PointCoefficients) -> f64 {
    let beta = beta_eps(xi, eps);
    c.a / c.p * half_power(beta, c.p) + c.b / c.q * half_power(beta, c.q)
}

pub fn evaluate(xi: &[f64], params: &FluxParams, c: &PointCoefficients) -> Result<FluxEval> {
    Ok(FluxEval {
        density: flux_density(xi, params, c)?,
        vector: flux_vector(xi, params.eps, c),
        energy: energy_density(xi, params.eps, c),
    })
}

/// `∂(F_ε ξ)/∂ξ = F I + 2 F'(β) ξ ξᵀ`, the Hessian of the energy density.
pub fn flux_jacobian(xi: &[f64], eps: f64, c: &PointCoefficients) -> Result<Mat2> {
    if !(eps > 0.0) {
        return Err(Error::Unsupported(
            "flux Jacobian requires eps > 0".to_string(),
        ));
    }
    Ok(flux_jacobian_unchecked(xi, eps * eps + norm_sq(xi), c))
}

#[inline]
pub(crate) fn flux_jacobian_unchecked(xi: &[f64], beta: f64, c: &PointCoefficients) -> Mat2 {
    let f = flux_coefficient_beta(beta, c);
    let df = 0.5 * c.a * (c.p - 2.0) * half_power(beta, c.p - 4.0)
        + 0.5 * c.b * (c.q - 2.0) * half_power(beta, c.q - 4.0);
    let mut j = [[0.0; MAX_DIM]; MAX_DIM];
    for i in 0..xi.len() {
        for k in 0..xi.len() {
            j[i][k] = 2.0 * df * xi[i] * xi[k];
        }
        j[i][i] += f;
    }
    j
}

/// `S_p(ξ,η) = (γ(ξ)ξ − γ(η)η)·(ξ−η)`; a vanishing argument contributes a zero flux.
pub fn monotonicity_gap(xi: &[f64], eta: &[f64], p: f64, eps: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("S_p needs p > 1, got {p}")));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("eps must lie in [0,1), got {eps}")));
    }
    let scaled = |v: &[f64]| -> Vec2 {
        let beta = beta_eps(v, eps);
        let mut out = [0.0; MAX_DIM];
        if beta > 0.0 {
            let g = half_power(beta, p - 2.0);
            for (o, x) in out.iter_mut().zip(v) {
                *o = g * x;
            }
        }
        out
    };
    let fx = scaled(xi);
    let fe = scaled(eta);
    Ok((0..xi.len())
        .map(|i| (fx[i] - fe[i]) * (xi[i] - eta[i]))
        .sum())
}

/// Constant `C_p` with `(s+t)^{p−2} ≤ C_p (s^{p−2} + t^{p−2})` for `s, t ≥ 0`, `p ≥ 2`.
pub fn power_sum_constant(p: f64) -> f64 {
    let k = p - 2.0;
    if k <= 1.0 {
        1.0
    } else {
        2f64.powf(k - 1.0)
    }
}

/// Pieces of the `β_ε^μ` sandwich: `(|ξ|^{2μ}, β^μ, case bound, 2^μ(1+|ξ|^{2μ}))`.
pub fn interchange_chain(xi: &[f64], mu: f64, eps: f64) -> [f64; 4] {
    let n2 = norm_sq(xi);
    let lower = n2.powf(mu);
    let mid = beta_eps(xi, eps).powf(mu);
    let case = if n2.sqrt() >= eps {
        (2.0 * n2).powf(mu)
    } else {
        (2.0 * eps * eps).powf(mu)
    };
    [lower, mid, case, 2f64.powf(mu) * (1.0 + lower)]
}

/// Pointwise constant of the small-gradient branch: `a(2ε²)^{(p+s₁)/2} + b(2ε²)^{(q+s₂)/2}`.
pub fn small_gradient_constant(params: &FluxParams, c: &PointCoefficients) -> f64 {
    let b2 = 2.0 * params.eps * params.eps;
    c.a * half_power(b2, c.p + params.s1) + c.b * half_power(b2, c.q + params.s2)
}

/// Chain `F₀|ξ|² ≤ F_ε β_ε ≤ branch ≤ C + 2 F_ε |ξ|²` as its four members.
pub fn null_eps_chain(xi: &[f64], params: &FluxParams, c: &PointCoefficients) -> Result<[f64; 4]> {
    let n2 = norm_sq(xi);
    let degenerate = c.a * half_power(n2, c.p + params.s1) + c.b * half_power(n2, c.q + params.s2);
    let f = flux_density(xi, params, c)?;
    let mid = f * beta_eps(xi, params.eps);
    let constant = small_gradient_constant(params, c);
    let branch = if n2.sqrt() <= params.eps {
        constant
    } else {
        2.0 * f * n2
    };
    Ok([degenerate, mid, branch, constant + 2.0 * f * n2])
}

/// `C(μ) = max(sup_{s≥1} s^{−μ} ln s, sup_{s<1} s^{μ} |ln s|)`, found by golden-section search.
pub fn log_growth_constant(mu: f64) -> f64 {
    // Both suprema reduce to max_{u>0} u e^{−μu} after u = ±ln s.
    let g = |u: f64| u * (-mu * u).exp();
    let (mut lo, mut hi) = (0.0, 60.0 / mu);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if g(m1) < g(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    g(0.5 * (lo + hi))
}

/// Divergence of `x ↦ F_ε(x, ∇u(x)) ∇u(x)` from the jets of `u` and of `(a, b, p, q)`.
pub fn flux_divergence(u: &Jet, coeffs: &[Jet; 4], eps: f64, dim: usize) -> Result<f64> {
    let [a, b, p, q] = coeffs;
    let c = PointCoefficients {
        a: a.value,
        b: b.value,
        p: p.value,
        q: q.value,
    };
    let xi = &u.grad[..dim];
    let jac = flux_jacobian(xi, eps, &c)?;
    let beta = beta_eps(xi, eps);
    let lnb = 0.5 * beta.ln();
    let gp = half_power(beta, c.p - 2.0);
    let gq = half_power(beta, c.q - 2.0);
    let mut div = 0.0;
    for i in 0..dim {
        for k in 0..dim {
            div += jac[i][k] * u.hess[k][i];
        }
        let dfdx = a.grad[i] * gp
            + c.a * gp * lnb * p.grad[i]
            + b.grad[i] * gq
            + c.b * gq * lnb * q.grad[i];
        div += dfdx * xi[i];
    }
    Ok(div)
}
