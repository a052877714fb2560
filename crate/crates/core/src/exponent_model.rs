//! Problem data: exponents `p, q`, coefficients `a, b`, the coercivity floor
//! and the horizon, together with the structural checks they must pass.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Jet, MAX_DIM};
use crate::flux::PointCoefficients;
use crate::quadrature::QuadratureGrid;

/// Margin applied to every strict inequality to avoid float-boundary ambiguity.
pub const STRICT_MARGIN: f64 = 1e-9;

fn default_probe() -> ProbeResolution {
    ProbeResolution {
        space: 65,
        time: 33,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResolution {
    pub space: usize,
    pub time: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentData {
    pub dim: usize,
    pub horizon: f64,
    pub p: FieldSpec,
    pub q: FieldSpec,
    pub a: FieldSpec,
    pub b: FieldSpec,
    pub alpha: f64,
    #[serde(default = "default_probe")]
    pub lipschitz_probe_resolution: ProbeResolution,
}

/// `2N/(N+2)`, the lower bound on both exponents.
pub fn exponent_floor(dim: usize) -> f64 {
    2.0 * dim as f64 / (dim as f64 + 2.0)
}

/// `r♯ = 4/(N+2)`.
pub fn r_sharp(dim: usize) -> f64 {
    4.0 / (dim as f64 + 2.0)
}

/// `r_* = 2/(N+2)`.
pub fn r_star(dim: usize) -> f64 {
    2.0 / (dim as f64 + 2.0)
}

impl ExponentData {
    /// Data with constant exponents and coefficients.
    pub fn constant(dim: usize, horizon: f64, p: f64, q: f64, a: f64, b: f64, alpha: f64) -> Self {
        ExponentData {
            dim,
            horizon,
            p: FieldSpec::constant(p),
            q: FieldSpec::constant(q),
            a: FieldSpec::constant(a),
            b: FieldSpec::constant(b),
            alpha,
            lipschitz_probe_resolution: default_probe(),
        }
    }

    pub fn at(&self, x: &[f64], t: f64) -> PointCoefficients {
        PointCoefficients {
            a: self.a.eval(x, t),
            b: self.b.eval(x, t),
            p: self.p.eval(x, t),
            q: self.q.eval(x, t),
        }
    }

    /// Coefficient jets `(a, b, p, q)` for manufactured-solution forcing.
    pub fn jets(&self, x: &[f64], t: f64) -> [Jet; 4] {
        [
            self.a.jet(x, t),
            self.b.jet(x, t),
            self.p.jet(x, t),
            self.q.jet(x, t),
        ]
    }

    /// Coefficients at every node of `grid`.
    pub fn sample(&self, grid: &QuadratureGrid) -> Vec<PointCoefficients> {
        crate::par::map_indexed(grid.len(), |i| {
            let (x, t) = grid.node(i);
            self.at(x, t)
        })
    }

    fn check_shape(&self) -> Result<()> {
        if !(1..=MAX_DIM).contains(&self.dim) {
            return Err(Error::Config(format!(
                "dim must be 1 or 2, got {}",
                self.dim
            )));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::Config(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::Config(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        let res = self.lipschitz_probe_resolution;
        if res.space < 2 || res.time < 2 {
            return Err(Error::Config(
                "probe resolution needs at least 2 nodes per axis".into(),
            ));
        }
        for (name, f) in [
            ("p", &self.p),
            ("q", &self.q),
            ("a", &self.a),
            ("b", &self.b),
        ] {
            f.check(self.dim)
                .map_err(|e| Error::Config(format!("field `{name}`: {e}")))?;
        }
        Ok(())
    }

    /// Evaluates every assumption on the probe lattice without failing on violations.
    pub fn assess(&self) -> Result<ValidationReport> {
        self.check_shape()?;
        let lattice = ProbeLattice::new(self);
        let samples: Vec<PointCoefficients> = crate::par::map_indexed(lattice.len(), |i| {
            let (x, t) = lattice.node(i);
            self.at(&x[..self.dim], t)
        });
        for (i, c) in samples.iter().enumerate() {
            if ![c.a, c.b, c.p, c.q].iter().all(|v| v.is_finite()) {
                let (x, t) = lattice.node(i);
                return Err(Error::Config(format!(
                    "field not evaluable at x = {:?}, t = {t}",
                    &x[..self.dim]
                )));
            }
        }

        let floor = exponent_floor(self.dim) + STRICT_MARGIN;
        let gap_cap = r_star(self.dim) - STRICT_MARGIN;

        let worst = |score: &dyn Fn(&PointCoefficients) -> f64| -> (usize, f64) {
            samples.iter().enumerate().map(|(i, c)| (i, score(c))).fold(
                (0, f64::INFINITY),
                |acc, (i, s)| if s < acc.1 { (i, s) } else { acc },
            )
        };

        let mut conditions = Vec::new();
        let (i, m) = worst(&|c| c.p.min(c.q) - floor);
        conditions.push(lattice.condition(
            "assum1",
            format!("p, q > 2N/(N+2) = {:.6}", exponent_floor(self.dim)),
            i,
            m,
            samples[i].p.min(samples[i].q),
        ));
        let alpha = self.alpha;
        let (i, m) = worst(&|c| c.a.min(c.b).min(c.a + c.b - alpha));
        conditions.push(lattice.condition(
            "eq:a-b",
            format!("a, b >= 0 and a + b >= alpha = {alpha}"),
            i,
            m,
            samples[i].a + samples[i].b,
        ));
        let (i, m) = worst(&|c| gap_cap - (c.p - c.q).abs());
        conditions.push(lattice.condition(
            "eq:gap-z",
            format!("|p - q| < r_* = {:.6}", r_star(self.dim)),
            i,
            m,
            (samples[i].p - samples[i].q).abs(),
        ));

        let lip = |get: &dyn Fn(&PointCoefficients) -> f64| lattice.lipschitz(&samples, get);
        let lipschitz_pq = lip(&|c| c.p).max(lip(&|c| c.q));
        let lipschitz_ab = lip(&|c| c.a).max(lip(&|c| c.b));
        let s_lower_min = samples
            .iter()
            .map(|c| c.p.min(c.q))
            .fold(f64::INFINITY, f64::min);
        let s_upper_max = samples
            .iter()
            .map(|c| c.p.max(c.q))
            .fold(f64::NEG_INFINITY, f64::max);

        Ok(ValidationReport {
            passed: conditions.iter().all(|c| c.passed),
            conditions,
            lipschitz_pq,
            lipschitz_ab,
            s_lower_min,
            s_upper_max,
            a_max: samples
                .iter()
                .map(|c| c.a)
                .fold(f64::NEG_INFINITY, f64::max),
            b_max: samples
                .iter()
                .map(|c| c.b)
                .fold(f64::NEG_INFINITY, f64::max),
            probe_nodes: lattice.len(),
        })
    }

    /// Like [`assess`](Self::assess), but a violated assumption is an error naming it.
    pub fn validate(&self) -> Result<ValidationReport> {
        let report = self.assess()?;
        if let Some(c) = report.conditions.iter().find(|c| !c.passed) {
            return Err(Error::Validation {
                condition: c.name,
                detail: format!(
                    "{} fails at x = {:?}, t = {} (value {}, margin {:.3e})",
                    c.statement,
                    &c.worst_node[..self.dim],
                    c.worst_node[self.dim],
                    c.worst_value,
                    c.margin
                ),
            });
        }
        Ok(report)
    }

    pub fn derive(&self) -> Result<DerivedExponents> {
        self.validate()?;
        Ok(DerivedExponents { data: self.clone() })
    }
}

struct ProbeLattice {
    dim: usize,
    ns: usize,
    nt: usize,
    horizon: f64,
}

impl ProbeLattice {
    fn new(data: &ExponentData) -> Self {
        ProbeLattice {
            dim: data.dim,
            ns: data.lipschitz_probe_resolution.space,
            nt: data.lipschitz_probe_resolution.time,
            horizon: data.horizon,
        }
    }

    fn space_len(&self) -> usize {
        self.ns.pow(self.dim as u32)
    }

    fn len(&self) -> usize {
        self.space_len() * self.nt
    }

    fn hs(&self) -> f64 {
        1.0 / (self.ns - 1) as f64
    }

    fn ht(&self) -> f64 {
        self.horizon / (self.nt - 1) as f64
    }

    fn index(&self, ix: [usize; MAX_DIM], it: usize) -> usize {
        let mut s = 0;
        for d in 0..self.dim {
            s = s * self.ns + ix[d];
        }
        it * self.space_len() + s
    }

    fn node(&self, i: usize) -> ([f64; MAX_DIM], f64) {
        let sl = self.space_len();
        let it = i / sl;
        let mut s = i % sl;
        let mut x = [0.0; MAX_DIM];
        for d in (0..self.dim).rev() {
            x[d] = (s % self.ns) as f64 * self.hs();
            s /= self.ns;
        }
        (x, it as f64 * self.ht())
    }

    fn condition(
        &self,
        name: &'static str,
        statement: String,
        i: usize,
        margin: f64,
        value: f64,
    ) -> ConditionReport {
        let (x, t) = self.node(i);
        let mut worst_node = x[..self.dim].to_vec();
        worst_node.push(t);
        ConditionReport {
            name,
            statement,
            passed: margin >= 0.0,
            margin,
            worst_node,
            worst_value: value,
        }
    }

    /// Largest forward-difference quotient along any lattice axis.
    fn lipschitz(
        &self,
        samples: &[PointCoefficients],
        get: &dyn Fn(&PointCoefficients) -> f64,
    ) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.len() {
            let (x, t) = self.node(i);
            let mut ix = [0usize; MAX_DIM];
            for d in 0..self.dim {
                ix[d] = (x[d] / self.hs()).round() as usize;
            }
            let it = (t / self.ht()).round() as usize;
            let v = get(&samples[i]);
            for d in 0..self.dim {
                if ix[d] + 1 < self.ns {
                    let mut jx = ix;
                    jx[d] += 1;
                    let w = get(&samples[self.index(jx, it)]);
                    best = best.max((w - v).abs() / self.hs());
                }
            }
            if it + 1 < self.nt {
                let w = get(&samples[self.index(ix, it + 1)]);
                best = best.max((w - v).abs() / self.ht());
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub name: &'static str,
    pub statement: String,
    pub passed: bool,
    /// Signed distance to violation at the worst probe node (negative = violated).
    pub margin: f64,
    /// Spatial coordinates followed by time.
    pub worst_node: Vec<f64>,
    pub worst_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub conditions: Vec<ConditionReport>,
    pub lipschitz_pq: f64,
    pub lipschitz_ab: f64,
    pub s_lower_min: f64,
    pub s_upper_max: f64,
    pub a_max: f64,
    pub b_max: f64,
    pub probe_nodes: usize,
}

/// Secondary exponent fields built from validated data.
#[derive(Clone, Debug)]
pub struct DerivedExponents {
    data: ExponentData,
}

impl DerivedExponents {
    pub fn data(&self) -> &ExponentData {
        &self.data
    }

    pub fn r_sharp(&self) -> f64 {
        r_sharp(self.data.dim)
    }

    pub fn r_star(&self) -> f64 {
        r_star(self.data.dim)
    }

    pub fn s_lower(&self, x: &[f64], t: f64) -> f64 {
        self.data.p.eval(x, t).min(self.data.q.eval(x, t))
    }

    pub fn s_upper(&self, x: &[f64], t: f64) -> f64 {
        self.data.p.eval(x, t).max(self.data.q.eval(x, t))
    }

    /// `max{2, s̄}`.
    pub fn r_max2(&self, x: &[f64], t: f64) -> f64 {
        self.s_upper(x, t).max(2.0)
    }

    pub fn r1(&self, x: &[f64], t: f64) -> f64 {
        self.s_lower(x, t) + self.r_sharp() - self.data.p.eval(x, t)
    }

    pub fn r2(&self, x: &[f64], t: f64) -> f64 {
        self.s_lower(x, t) + self.r_sharp() - self.data.q.eval(x, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data2(p: f64, q: f64, a: f64, b: f64, alpha: f64) -> ExponentData {
        let mut d = ExponentData::constant(2, 1.0, p, q, a, b, alpha);
        d.lipschitz_probe_resolution = ProbeResolution { space: 9, time: 5 };
        d
    }

    #[test]
    fn balanced_double_phase_passes() {
        let r = data2(1.8, 2.2, 0.5, 0.5, 0.9).validate().unwrap();
        assert!(r.passed);
        assert_eq!(r.conditions.len(), 3);
        assert_eq!(r.lipschitz_pq, 0.0);
    }

    #[test]
    fn gap_violation_is_named() {
        let err = data2(2.0, 2.6, 0.5, 0.5, 0.9).validate().unwrap_err();
        match err {
            Error::Validation { condition, .. } => assert_eq!(condition, "eq:gap-z"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn p_laplacian_special_case_passes() {
        assert!(data2(2.0, 2.0, 1.0, 0.0, 1.0).validate().is_ok());
    }

    #[test]
    fn coercivity_and_floor_violations() {
        let e = data2(1.8, 2.0, 0.4, 0.4, 0.9).validate().unwrap_err();
        assert!(matches!(
            e,
            Error::Validation {
                condition: "eq:a-b",
                ..
            }
        ));
        let e = data2(1.0, 1.2, 0.5, 0.5, 0.9).validate().unwrap_err();
        assert!(matches!(
            e,
            Error::Validation {
                condition: "assum1",
                ..
            }
        ));
        let e = data2(1.8, 2.0, -0.1, 1.5, 0.9).validate().unwrap_err();
        assert!(matches!(
            e,
            Error::Validation {
                condition: "eq:a-b",
                ..
            }
        ));
    }

    #[test]
    fn strict_margin_rejects_boundary_gap() {
        // |p - q| equal to r_* exactly is not strictly below it.
        assert!(data2(2.0, 2.5, 0.5, 0.5, 0.9).validate().is_err());
        assert!(data2(2.0, 2.5 - 1e-6, 0.5, 0.5, 0.9).validate().is_ok());
    }

    #[test]
    fn lipschitz_estimate_of_affine_field() {
        let mut d = data2(2.0, 2.0, 0.5, 0.5, 0.9);
        d.p = FieldSpec::Affine {
            offset: 2.0,
            slope: vec![0.2, 0.0],
            rate: 0.0,
        };
        let r = d.validate().unwrap();
        assert!((r.lipschitz_pq - 0.2).abs() < 1e-12);
    }

    #[test]
    fn non_finite_field_is_config_error() {
        let mut d = data2(2.0, 2.0, 0.5, 0.5, 0.9);
        d.a = FieldSpec::constant(f64::INFINITY);
        assert!(matches!(d.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn derived_constants_for_plane() {
        let d = data2(1.8, 2.2, 0.5, 0.5, 0.9).derive().unwrap();
        assert_eq!(d.r_sharp(), 1.0);
        assert_eq!(d.r_star(), 0.5);
    }

    #[test]
    fn equal_exponents_collapse() {
        let d = data2(1.9, 1.9, 0.5, 0.5, 0.9).derive().unwrap();
        let x = [0.3, 0.6];
        assert_eq!(d.s_lower(&x, 0.2), 1.9);
        assert_eq!(d.s_upper(&x, 0.2), 1.9);
        assert_eq!(d.r1(&x, 0.2), d.r_sharp());
        assert_eq!(d.r2(&x, 0.2), d.r_sharp());
        assert_eq!(d.r_max2(&x, 0.2), 2.0);
    }

    #[test]
    fn affine_exponent_derived_fields() {
        let mut d = data2(2.0, 2.0, 0.5, 0.5, 0.9);
        d.p = FieldSpec::Affine {
            offset: 2.0,
            slope: vec![0.2, 0.0],
            rate: 0.0,
        };
        let der = d.derive().unwrap();
        for &x1 in &[0.0, 0.25, 0.5, 1.0] {
            let x = [x1, 0.7];
            // independent scalar evaluation of the definitions
            let p = 2.0 + 0.2 * x1;
            let q = 2.0;
            let sl = if p < q { p } else { q };
            assert_eq!(der.s_lower(&x, 0.0), 2.0);
            assert!((der.r1(&x, 0.0) - (sl + 1.0 - p)).abs() < 1e-15);
            assert!((der.r1(&x, 0.0) - (1.0 - 0.2 * x1)).abs() < 1e-15);
        }
    }
}
