//! Interior finite-difference norms of `D_i(√F_ε D_j u)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent_model::ExponentData;
use crate::flux;
use crate::galerkin::{evaluate_lattice, EigenBasis, SpectralState};
use crate::par;

/// Default lattice spacing.
pub const DEFAULT_H: f64 = 1.0 / 256.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SecondOrderNorms {
    pub h: f64,
    /// `squared[i][j] = ‖D_i(√F_ε D_j u)‖²_{2,Q_T}` over `[2h, 1−2h]^N × (0,T)`.
    pub squared: Vec<Vec<f64>>,
    /// Set when roundoff in the difference quotients may dominate.
    pub conditioning_warning: bool,
}

impl SecondOrderNorms {
    pub fn norm(&self, i: usize, j: usize) -> f64 {
        self.squared[i][j].sqrt()
    }

    pub fn max_norm(&self) -> f64 {
        self.squared
            .iter()
            .flatten()
            .cloned()
            .fold(0.0, f64::max)
            .sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.squared.iter().flatten().all(|v| v.is_finite())
    }
}

/// Central differences of the spectrally evaluated composite field, trapezoid over `states`.
pub fn second_order_flux_norm(
    basis: &EigenBasis,
    states: &[SpectralState],
    data: &ExponentData,
    eps: f64,
    h: f64,
) -> Result<SecondOrderNorms> {
    let n = (1.0 / h).round() as usize;
    if n < 5 || ((n as f64) * h - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "lattice spacing {h} must be 1/n with n ≥ 5"
        )));
    }
    if states.is_empty() {
        return Err(Error::Domain("no states to integrate".into()));
    }
    let dim = basis.dim();
    let axis: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
    let per_state = par::map_slice(states, |s| -> Result<Vec<f64>> {
        let lat = evaluate_lattice(basis, &s.coeffs, &axis)?;
        let cols = if dim == 1 { 1 } else { n + 1 };
        // composite g_j = √F_ε D_j u at every lattice point
        let mut g = vec![vec![0.0; (n + 1) * cols]; dim];
        for a in 0..=n {
            for b in 0..cols {
                let x: Vec<f64> = if dim == 1 {
                    vec![axis[a]]
                } else {
                    vec![axis[a], axis[b]]
                };
                let xi: Vec<f64> = (0..dim).map(|d| lat.grad[d][(a, b)]).collect();
                let c = data.at(&x, s.t);
                let f = flux::flux_coefficient_beta(flux::beta_eps(&xi, eps), &c).sqrt();
                for d in 0..dim {
                    g[d][a * cols + b] = f * xi[d];
                }
            }
        }
        let mut out = vec![0.0; dim * dim];
        let w = h.powi(dim as i32);
        let range = 2..=(n - 2);
        for (i, out_i) in out.chunks_mut(dim).enumerate() {
            for (j, o) in out_i.iter_mut().enumerate() {
                let gj = &g[j];
                let mut acc = Vec::new();
                for a in range.clone() {
                    let brange = if dim == 1 { 0..=0 } else { 2..=(n - 2) };
                    for b in brange {
                        let d = if i == 0 {
                            (gj[(a + 1) * cols + b] - gj[(a - 1) * cols + b]) / (2.0 * h)
                        } else {
                            (gj[a * cols + b + 1] - gj[a * cols + b - 1]) / (2.0 * h)
                        };
                        acc.push(d * d);
                    }
                }
                *o = w * par::pairwise_sum(&acc);
            }
        }
        Ok(out)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut squared = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            let vals: Vec<f64> = per_state.iter().map(|v| v[i * dim + j]).collect();
            squared[i][j] = if states.len() == 1 {
                vals[0]
            } else {
                (1..states.len())
                    .map(|k| 0.5 * (states[k].t - states[k - 1].t) * (vals[k] + vals[k - 1]))
                    .sum()
            };
        }
    }
    Ok(SecondOrderNorms {
        h,
        squared,
        conditioning_warning: h < 1e-4,
    })
}
