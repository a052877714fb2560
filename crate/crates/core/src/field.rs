//! Parametric scalar fields on `[0,1]^N × [0,T]`.
//!
//! Exponents, coefficients, initial data and sources are all drawn from the
//! same small set of families so that a run is fully determined by its
//! configuration file.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 2;

/// A spatial vector; components beyond the active dimension are zero.
pub type Vec2 = [f64; MAX_DIM];

/// A spatial matrix; rows and columns beyond the active dimension are zero.
pub type Mat2 = [[f64; MAX_DIM]; MAX_DIM];

/// Anything that can be evaluated pointwise on the space-time cylinder.
pub trait ScalarField: Sync {
    fn value(&self, x: &[f64], t: f64) -> f64;
}

impl<F> ScalarField for F
where
    F: Fn(&[f64], f64) -> f64 + Sync,
{
    fn value(&self, x: &[f64], t: f64) -> f64 {
        self(x, t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FieldSpec {
    /// `value`
    Constant { value: f64 },
    /// `offset + slope · x + rate · t`
    Affine {
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        slope: Vec<f64>,
        #[serde(default)]
        rate: f64,
    },
    /// `offset + amplitude · Π sin(kᵢ π xᵢ + φᵢ) · exp(decay · t)`
    Sinusoidal {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        wavenumbers: Vec<f64>,
        #[serde(default)]
        phases: Vec<f64>,
        #[serde(default)]
        decay: f64,
    },
    /// Compactly supported C^∞ bump `offset + height · exp(1 − 1/(1 − |x−c|²/R²))`.
    Bump {
        center: Vec<f64>,
        radius: f64,
        height: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Pointwise sum of the listed fields.
    Sum { terms: Vec<FieldSpec> },
}

impl FieldSpec {
    pub fn constant(value: f64) -> Self {
        FieldSpec::Constant { value }
    }

    pub fn zero() -> Self {
        FieldSpec::Constant { value: 0.0 }
    }

    /// The normalized Dirichlet eigenfunction `2^{N/2} Π sin(kᵢπxᵢ)`, scaled.
    pub fn sine_mode(wavenumbers: &[usize], amplitude: f64) -> Self {
        let n = wavenumbers.len() as i32;
        FieldSpec::Sinusoidal {
            offset: 0.0,
            amplitude: amplitude * 2f64.powf(n as f64 / 2.0),
            wavenumbers: wavenumbers.iter().map(|&k| k as f64).collect(),
            phases: Vec::new(),
            decay: 0.0,
        }
    }

    /// Checks that the descriptor is usable in `dim` space dimensions.
    pub fn check(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match self {
            FieldSpec::Constant { value } => {
                if !value.is_finite() {
                    return bad(format!("constant field value {value} is not finite"));
                }
            }
            FieldSpec::Affine { slope, .. } => {
                if slope.len() > dim {
                    return bad(format!(
                        "affine slope has {} entries for dimension {dim}",
                        slope.len()
                    ));
                }
            }
            FieldSpec::Sinusoidal {
                wavenumbers,
                phases,
                ..
            } => {
                if wavenumbers.len() != dim {
                    return bad(format!(
                        "sinusoidal field needs {dim} wavenumbers, got {}",
                        wavenumbers.len()
                    ));
                }
                if !phases.is_empty() && phases.len() != dim {
                    return bad(format!(
                        "sinusoidal field needs 0 or {dim} phases, got {}",
                        phases.len()
                    ));
                }
            }
            FieldSpec::Bump { center, radius, .. } => {
                if center.len() != dim {
                    return bad(format!(
                        "bump center has {} coordinates for dimension {dim}",
                        center.len()
                    ));
                }
                if !(*radius > 0.0) {
                    return bad(format!("bump radius must be positive, got {radius}"));
                }
            }
            FieldSpec::Sum { terms } => {
                for t in terms {
                    t.check(dim)?;
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        self.jet(x, t).value
    }

    pub fn grad(&self, x: &[f64], t: f64) -> Vec2 {
        self.jet(x, t).grad
    }

    /// Value, spatial gradient, spatial Hessian and time derivative at `(x,t)`.
    pub fn jet(&self, x: &[f64], t: f64) -> Jet {
        let dim = x.len();
        match self {
            FieldSpec::Constant { value } => Jet::constant(*value),
            FieldSpec::Affine {
                offset,
                slope,
                rate,
            } => {
                let mut j = Jet::constant(*offset + rate * t);
                for (i, s) in slope.iter().enumerate().take(dim) {
                    j.value += s * x[i];
                    j.grad[i] = *s;
                }
                j.dt = *rate;
                j
            }
            FieldSpec::Sinusoidal {
                offset,
                amplitude,
                wavenumbers,
                phases,
                decay,
            } => {
                let time = (decay * t).exp();
                let mut s = [0.0; MAX_DIM];
                let mut c = [0.0; MAX_DIM];
                let mut k = [0.0; MAX_DIM];
                for i in 0..dim {
                    k[i] = wavenumbers[i] * PI;
                    let arg = k[i] * x[i] + phases.get(i).copied().unwrap_or(0.0);
                    s[i] = arg.sin();
                    c[i] = arg.cos();
                }
                let prod_except = |skip: &[usize]| -> f64 {
                    (0..dim)
                        .filter(|i| !skip.contains(i))
                        .map(|i| s[i])
                        .product()
                };
                let amp = amplitude * time;
                let core: f64 = (0..dim).map(|i| s[i]).product();
                let mut j = Jet::constant(offset + amp * core);
                for i in 0..dim {
                    j.grad[i] = amp * k[i] * c[i] * prod_except(&[i]);
                    for l in 0..dim {
                        j.hess[i][l] = if i == l {
                            -amp * k[i] * k[i] * core
                        } else {
                            amp * k[i] * c[i] * k[l] * c[l] * prod_except(&[i, l])
                        };
                    }
                }
                j.dt = decay * amp * core;
                j
            }
            FieldSpec::Bump {
                center,
                radius,
                height,
                offset,
            } => {
                let r2 = radius * radius;
                let mut d = [0.0; MAX_DIM];
                let mut rho = 0.0;
                for i in 0..dim {
                    d[i] = x[i] - center[i];
                    rho += d[i] * d[i] / r2;
                }
                let mut j = Jet::constant(*offset);
                if rho < 1.0 {
                    let om = 1.0 - rho;
                    let g = (1.0 - 1.0 / om).exp();
                    let g1 = -g / (om * om);
                    let g2 = g * (1.0 / om.powi(4) - 2.0 / om.powi(3));
                    j.value += height * g;
                    for i in 0..dim {
                        let di = 2.0 * d[i] / r2;
                        j.grad[i] = height * g1 * di;
                        for l in 0..dim {
                            let dl = 2.0 * d[l] / r2;
                            let dil = if i == l { 2.0 / r2 } else { 0.0 };
                            j.hess[i][l] = height * (g2 * di * dl + g1 * dil);
                        }
                    }
                }
                j
            }
            FieldSpec::Sum { terms } => {
                let mut acc = Jet::constant(0.0);
                for term in terms {
                    let tj = term.jet(x, t);
                    acc.value += tj.value;
                    acc.dt += tj.dt;
                    for i in 0..MAX_DIM {
                        acc.grad[i] += tj.grad[i];
                        for l in 0..MAX_DIM {
                            acc.hess[i][l] += tj.hess[i][l];
                        }
                    }
                }
                acc
            }
        }
    }
}

impl ScalarField for FieldSpec {
    fn value(&self, x: &[f64], t: f64) -> f64 {
        self.eval(x, t)
    }
}

/// Second-order Taylor data of a field at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec2,
    pub hess: Mat2,
    pub dt: f64,
}

impl Jet {
    fn constant(value: f64) -> Self {
        Jet {
            value,
            grad: [0.0; MAX_DIM],
            hess: [[0.0; MAX_DIM]; MAX_DIM],
            dt: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &FieldSpec, x: [f64; 2], t: f64) {
        let h = 1e-5;
        let j = f.jet(&x, t);
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let g = (f.eval(&xp, t) - f.eval(&xm, t)) / (2.0 * h);
            assert!((g - j.grad[i]).abs() < 1e-6 * (1.0 + g.abs()), "grad {i}");
            let gp = f.grad(&xp, t);
            let gm = f.grad(&xm, t);
            for l in 0..2 {
                let hl = (gp[l] - gm[l]) / (2.0 * h);
                assert!(
                    (hl - j.hess[l][i]).abs() < 1e-5 * (1.0 + hl.abs()),
                    "hess {l}{i}"
                );
            }
        }
        let d = (f.eval(&x, t + h) - f.eval(&x, t - h)) / (2.0 * h);
        assert!((d - j.dt).abs() < 1e-6 * (1.0 + d.abs()));
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let fields = [
            FieldSpec::Affine {
                offset: 1.9,
                slope: vec![0.2, -0.1],
                rate: 0.3,
            },
            FieldSpec::Sinusoidal {
                offset: 0.5,
                amplitude: 1.3,
                wavenumbers: vec![1.0, 2.0],
                phases: vec![0.2, 0.0],
                decay: -1.0,
            },
            FieldSpec::Bump {
                center: vec![0.5, 0.4],
                radius: 0.3,
                height: 2.0,
                offset: 0.1,
            },
            FieldSpec::Sum {
                terms: vec![FieldSpec::sine_mode(&[1, 1], 1.0), FieldSpec::constant(3.0)],
            },
        ];
        for f in &fields {
            fd_check(f, [0.41, 0.37], 0.2);
        }
    }

    #[test]
    fn sine_mode_is_normalized_eigenfunction() {
        let f = FieldSpec::sine_mode(&[1, 1], 1.0);
        assert!((f.eval(&[0.5, 0.5], 0.0) - 2.0).abs() < 1e-15);
        assert_eq!(f.eval(&[0.0, 0.3], 0.0).abs() < 1e-15, true);
    }

    #[test]
    fn shape_checks() {
        assert!(FieldSpec::sine_mode(&[1], 1.0).check(2).is_err());
        assert!(FieldSpec::Bump {
            center: vec![0.5, 0.5],
            radius: 0.0,
            height: 1.0,
            offset: 0.0
        }
        .check(2)
        .is_err());
        assert!(FieldSpec::constant(f64::NAN).check(1).is_err());
    }

    #[test]
    fn parses_from_toml_like_json() {
        let f: FieldSpec =
            serde_json::from_str(r#"{"family":"affine","offset":1.9,"slope":[0.2,0.0]}"#).unwrap();
        assert_eq!(f.eval(&[1.0, 0.0], 0.0), 2.1);
    }
}
