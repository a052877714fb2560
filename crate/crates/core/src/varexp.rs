//! Variable-exponent Lebesgue and Musielak–Orlicz quantities on quadrature grids.

use crate::error::{Error, Result};
use crate::exponent_model::ExponentData;
use crate::field::{FieldSpec, MAX_DIM};
use crate::flux::{self, PointCoefficients};
use crate::par;
use crate::quadrature::{QuadratureGrid, SpaceRule};

/// Default relative bracket width for Luxemburg bisection.
pub const DEFAULT_REL_TOL: f64 = 1e-12;

/// Absolute slack floor (times the natural scale) for discrete inequality checks.
pub const SLACK_FLOOR: f64 = 1e-8;

const MAX_BRACKET_EXPANSIONS: usize = 60;

/// Scalar or vector values at the nodes of a quadrature grid.
#[derive(Clone, Debug)]
pub struct SampledField<'g> {
    grid: &'g QuadratureGrid,
    components: usize,
    values: Vec<f64>,
}

impl<'g> SampledField<'g> {
    pub fn new(grid: &'g QuadratureGrid, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 || components > MAX_DIM {
            return Err(Error::Domain(format!(
                "sampled field must have 1..={MAX_DIM} components"
            )));
        }
        if values.len() != grid.len() * components {
            return Err(Error::Domain(format!(
                "expected {} values, got {}",
                grid.len() * components,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at index {i}")));
        }
        Ok(SampledField {
            grid,
            components,
            values,
        })
    }

    pub fn scalar(grid: &'g QuadratureGrid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, 1, values)
    }

    pub fn from_fn(
        grid: &'g QuadratureGrid,
        f: impl Fn(&[f64], f64) -> f64 + Sync,
    ) -> Result<Self> {
        let values = par::map_indexed(grid.len(), |i| {
            let (x, t) = grid.node(i);
            f(x, t)
        });
        Self::scalar(grid, values)
    }

    pub fn grid(&self) -> &'g QuadratureGrid {
        self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.values[i * self.components..(i + 1) * self.components]
    }

    /// Euclidean magnitude at node `i`.
    pub fn magnitude(&self, i: usize) -> f64 {
        flux::norm_sq(self.at(i)).sqrt()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.magnitude(i)).collect()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.grid,
            self.components,
            self.values.iter().map(|v| c * v).collect(),
        )
    }

    fn same_grid(&self, other: &SampledField<'_>) -> Result<()> {
        if !std::ptr::eq(self.grid, other.grid) && self.grid.len() != other.grid.len() {
            return Err(Error::Domain("fields live on different grids".into()));
        }
        Ok(())
    }
}

fn exponents_of(r: &SampledField<'_>) -> Result<Vec<f64>> {
    if r.components() != 1 {
        return Err(Error::Domain("exponent field must be scalar".into()));
    }
    Ok(r.values().to_vec())
}

/// `Σ w |m|^r`; exponents of `+∞` act as the indicator of `|m| ≤ 1`.
fn modular_raw(weights: &[f64], mags: &[f64], exps: &[f64]) -> f64 {
    let terms = par::map_indexed(weights.len(), |i| {
        let m = mags[i];
        let r = exps[i];
        if m == 0.0 {
            0.0
        } else if r.is_infinite() {
            if m <= 1.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            weights[i] * (r * m.ln()).exp()
        }
    });
    par::pairwise_sum(&terms)
}

/// `A_{r(·)}(f) = ∫ |f|^{r}` over the grid.
pub fn modular(f: &SampledField<'_>, r: &SampledField<'_>) -> Result<f64> {
    f.same_grid(r)?;
    let exps = exponents_of(r)?;
    if let Some(i) = exps.iter().position(|&e| !(e > 1.0)) {
        return Err(Error::Domain(format!(
            "exponent {} <= 1 at node {i}",
            exps[i]
        )));
    }
    Ok(modular_raw(f.grid().weights(), &f.magnitudes(), &exps))
}

/// `inf{λ > 0 : A(f/λ) ≤ 1}` by bracketed bisection; the upper bracket end is returned.
pub fn luxemburg_norm(f: &SampledField<'_>, r: &SampledField<'_>, rel_tol: f64) -> Result<f64> {
    modular(f, r)?;
    luxemburg_raw(
        f.grid().weights(),
        &f.magnitudes(),
        &exponents_of(r)?,
        rel_tol,
    )
}

/// Luxemburg norm allowing exponents in `[1, ∞]`.
pub(crate) fn luxemburg_raw(
    weights: &[f64],
    mags: &[f64],
    exps: &[f64],
    rel_tol: f64,
) -> Result<f64> {
    if !(rel_tol > 1e-14 && rel_tol < 1e-2) {
        return Err(Error::Domain(format!(
            "rel_tol must lie in (1e-14, 1e-2), got {rel_tol}"
        )));
    }
    let mut inf_floor: f64 = 0.0;
    let mut fw = Vec::new();
    let mut fm = Vec::new();
    let mut fe = Vec::new();
    for i in 0..weights.len() {
        if mags[i] == 0.0 || weights[i] == 0.0 {
            continue;
        }
        if exps[i].is_infinite() {
            inf_floor = inf_floor.max(mags[i]);
        } else {
            fw.push(weights[i]);
            fm.push(mags[i]);
            fe.push(exps[i]);
        }
    }
    if fw.is_empty() {
        return Ok(inf_floor);
    }
    let scaled = |lambda: f64| -> f64 {
        let m: Vec<f64> = fm.iter().map(|v| v / lambda).collect();
        modular_raw(&fw, &m, &fe)
    };
    let a0 = scaled(1.0);
    if !a0.is_finite() {
        return Err(Error::Numeric("modular is not finite".into()));
    }
    let rmin = fe.iter().cloned().fold(f64::INFINITY, f64::min);
    let rmax = fe.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = if a0 >= 1.0 {
        (a0.powf(1.0 / rmax), a0.powf(1.0 / rmin))
    } else {
        (a0.powf(1.0 / rmin), a0.powf(1.0 / rmax))
    };
    let mut expansions = 0;
    while scaled(lo) < 1.0 {
        lo *= 0.5;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS || lo == 0.0 {
            return Err(Error::Numeric("Luxemburg lower bracket not found".into()));
        }
    }
    expansions = 0;
    while scaled(hi) > 1.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS || !hi.is_finite() {
            return Err(Error::Numeric("Luxemburg upper bracket not found".into()));
        }
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if scaled(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi.max(inf_floor))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SandwichReport {
    pub modular: f64,
    pub norm: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    /// `A − min{‖f‖^{r⁻}, ‖f‖^{r⁺}}`
    pub lower_slack: f64,
    /// `max{‖f‖^{r⁻}, ‖f‖^{r⁺}} − A`
    pub upper_slack: f64,
    pub holds: bool,
}

/// Checks `min{‖f‖^{r⁻},‖f‖^{r⁺}} ≤ A(f) ≤ max{‖f‖^{r⁻},‖f‖^{r⁺}}`.
pub fn check_modular_norm_sandwich(
    f: &SampledField<'_>,
    r: &SampledField<'_>,
) -> Result<SandwichReport> {
    let a = modular(f, r)?;
    let norm = luxemburg_norm(f, r, DEFAULT_REL_TOL)?;
    let exps = exponents_of(r)?;
    let r_minus = exps.iter().cloned().fold(f64::INFINITY, f64::min);
    let r_plus = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (x, y) = (norm.powf(r_minus), norm.powf(r_plus));
    let lower_slack = a - x.min(y);
    let upper_slack = x.max(y) - a;
    let tol = SLACK_FLOOR * a.max(1.0);
    Ok(SandwichReport {
        modular: a,
        norm,
        r_minus,
        r_plus,
        lower_slack,
        upper_slack,
        holds: lower_slack >= -tol && upper_slack >= -tol,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderReport {
    pub pairing: f64,
    pub norm_f: f64,
    pub norm_g_conjugate: f64,
    /// `(1/r⁻ + 1/(r')⁻) ‖f‖ ‖g‖`
    pub sharp_bound: f64,
    /// `2 ‖f‖ ‖g‖`
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Checks `∫|fg| ≤ 2 ‖f‖_{r(·)} ‖g‖_{r'(·)}`.
pub fn holder_pairing_check(
    f: &SampledField<'_>,
    g: &SampledField<'_>,
    r: &SampledField<'_>,
) -> Result<HolderReport> {
    f.same_grid(g)?;
    f.same_grid(r)?;
    let exps = exponents_of(r)?;
    let conj: Vec<f64> = exps.iter().map(|&e| e / (e - 1.0)).collect();
    let rc = SampledField::scalar(r.grid(), conj.clone())?;
    let w = f.grid().weights();
    let fm = f.magnitudes();
    let gm = g.magnitudes();
    let pairing = par::weighted_sum(w, |i| fm[i] * gm[i]);
    let norm_f = luxemburg_norm(f, r, DEFAULT_REL_TOL)?;
    let norm_g = luxemburg_norm(g, &rc, DEFAULT_REL_TOL)?;
    let r_minus = exps.iter().cloned().fold(f64::INFINITY, f64::min);
    let rc_minus = conj.iter().cloned().fold(f64::INFINITY, f64::min);
    let bound = 2.0 * norm_f * norm_g;
    let slack = bound - pairing;
    Ok(HolderReport {
        pairing,
        norm_f,
        norm_g_conjugate: norm_g,
        sharp_bound: (1.0 / r_minus + 1.0 / rc_minus) * norm_f * norm_g,
        bound,
        slack,
        holds: slack >= -SLACK_FLOOR * bound.max(1.0),
    })
}

/// Exponents `(s, r, σ) = (max{2, min{p,q}}, max{2,p}, max{2,q})` of `𝓗` at `t = 0`.
fn musielak_exponents(c: &PointCoefficients) -> (f64, f64, f64) {
    (c.p.min(c.q).max(2.0), c.p.max(2.0), c.q.max(2.0))
}

/// `ρ_𝓗(u) = ∫ (|u|^s + a₀|u|^r + b₀|u|^σ) dx` with the data frozen at `t = 0`.
pub fn musielak_modular(u: &SampledField<'_>, data: &ExponentData) -> Result<f64> {
    let grid = u.grid();
    let terms = par::map_indexed(grid.len(), |i| {
        let (x, _) = grid.node(i);
        let c = data.at(x, 0.0);
        let m = u.magnitude(i);
        let (s, r, sigma) = musielak_exponents(&c);
        m.powf(s) + c.a * m.powf(r) + c.b * m.powf(sigma)
    });
    let w = grid.weights();
    Ok(par::weighted_sum(w, |i| terms[i]))
}

/// Membership certificate of initial data in `W^{1,𝓗}_0`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct InitialDataCertificate {
    pub rho_u: f64,
    pub rho_grad: f64,
    /// `‖∇u₀‖² + ∫ F((x,0), ∇u₀) |∇u₀|²`
    pub energy_k: f64,
    pub boundary_max: f64,
    pub finite: bool,
}

pub fn certify_initial_data(
    u0: &FieldSpec,
    data: &ExponentData,
    rule: &SpaceRule,
) -> Result<InitialDataCertificate> {
    let grid = QuadratureGrid::spatial(rule.clone(), 0.0);
    let dim = rule.dim();
    let vals: Vec<f64> = (0..grid.len())
        .map(|i| u0.eval(grid.node(i).0, 0.0))
        .collect();
    let mut grads = Vec::with_capacity(grid.len() * dim);
    for i in 0..grid.len() {
        let g = u0.grad(grid.node(i).0, 0.0);
        grads.extend_from_slice(&g[..dim]);
    }
    let uf = SampledField::scalar(&grid, vals)?;
    let gf = SampledField::new(&grid, dim, grads)?;
    let rho_u = musielak_modular(&uf, data)?;
    let rho_grad = musielak_modular(&gf, data)?;
    let energy_k = par::weighted_sum(grid.weights(), |i| {
        let (x, _) = grid.node(i);
        let c = data.at(x, 0.0);
        let xi = gf.at(i);
        let n2 = flux::norm_sq(xi);
        n2 + c.a * flux::half_power(n2, c.p) + c.b * flux::half_power(n2, c.q)
    });
    let boundary_max = boundary_probe_max(u0, dim, 0.0);
    Ok(InitialDataCertificate {
        rho_u,
        rho_grad,
        energy_k,
        boundary_max,
        finite: rho_u.is_finite() && rho_grad.is_finite() && energy_k.is_finite(),
    })
}

/// Largest `|f|` over probes on the boundary of the unit box at time `t`.
pub fn boundary_probe_max(f: &FieldSpec, dim: usize, t: f64) -> f64 {
    let n = 33;
    let mut best: f64 = 0.0;
    for k in 0..n {
        let s = k as f64 / (n - 1) as f64;
        if dim == 1 {
            best = best
                .max(f.eval(&[0.0], t).abs())
                .max(f.eval(&[1.0], t).abs());
        } else {
            for pt in [[0.0, s], [1.0, s], [s, 0.0], [s, 1.0]] {
                best = best.max(f.eval(&pt, t).abs());
            }
        }
    }
    best
}

fn vector_field_check(f: &SampledField<'_>) -> Result<()> {
    if f.components() != f.grid().dim() {
        return Err(Error::Domain(format!(
            "gradient field has {} components in dimension {}",
            f.components(),
            f.grid().dim()
        )));
    }
    Ok(())
}

/// `𝓝(∇w) = ∫ (a|∇w|^p + b|∇w|^q)`.
pub fn composite_n(grad_w: &SampledField<'_>, data: &ExponentData) -> Result<f64> {
    vector_field_check(grad_w)?;
    let coeffs = data.sample(grad_w.grid());
    Ok(composite_n_with(grad_w, &coeffs))
}

pub(crate) fn composite_n_with(grad_w: &SampledField<'_>, coeffs: &[PointCoefficients]) -> f64 {
    par::weighted_sum(grad_w.grid().weights(), |i| {
        let n2 = flux::norm_sq(grad_w.at(i));
        let c = &coeffs[i];
        c.a * flux::half_power(n2, c.p) + c.b * flux::half_power(n2, c.q)
    })
}

/// `𝓖_ε(∇u,∇v) = ∫ (F_ε(∇u)∇u − F_ε(∇v)∇v)·∇(u−v)`.
pub fn pairing_g_eps(
    grad_u: &SampledField<'_>,
    grad_v: &SampledField<'_>,
    eps: f64,
    data: &ExponentData,
) -> Result<f64> {
    vector_field_check(grad_u)?;
    vector_field_check(grad_v)?;
    grad_u.same_grid(grad_v)?;
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("eps must lie in [0,1), got {eps}")));
    }
    let coeffs = data.sample(grad_u.grid());
    Ok(pairing_g_eps_with(grad_u, grad_v, eps, &coeffs))
}

pub(crate) fn pairing_g_eps_with(
    grad_u: &SampledField<'_>,
    grad_v: &SampledField<'_>,
    eps: f64,
    coeffs: &[PointCoefficients],
) -> f64 {
    par::weighted_sum(grad_u.grid().weights(), |i| {
        let xi = grad_u.at(i);
        let eta = grad_v.at(i);
        let fu = flux::flux_vector(xi, eps, &coeffs[i]);
        let fv = flux::flux_vector(eta, eps, &coeffs[i]);
        (0..xi.len())
            .map(|k| (fu[k] - fv[k]) * (xi[k] - eta[k]))
            .sum()
    })
}

pub fn difference<'g>(u: &SampledField<'g>, v: &SampledField<'g>) -> Result<SampledField<'g>> {
    u.same_grid(v)?;
    SampledField::new(
        u.grid(),
        u.components(),
        u.values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| a - b)
            .collect(),
    )
}

/// `∫ |∇w|^{s̲(z)}`.
pub fn lower_exponent_modular(grad_w: &SampledField<'_>, data: &ExponentData) -> Result<f64> {
    vector_field_check(grad_w)?;
    let coeffs = data.sample(grad_w.grid());
    Ok(lower_exponent_modular_with(grad_w, &coeffs))
}

pub(crate) fn lower_exponent_modular_with(
    grad_w: &SampledField<'_>,
    coeffs: &[PointCoefficients],
) -> f64 {
    par::weighted_sum(grad_w.grid().weights(), |i| {
        let c = &coeffs[i];
        flux::half_power(flux::norm_sq(grad_w.at(i)), c.p.min(c.q))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct EmbeddingReport {
    /// `α ∫ |∇u|^{s̲}`
    pub lhs: f64,
    pub n_value: f64,
    pub c_a: f64,
    pub c_b: f64,
    pub a_plus: f64,
    pub b_plus: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Embedding bound `α∫|∇u|^{s̲} ≤ 4(C_a+C_b)(A⁺+B⁺)(𝓝^{s̲⁻/s̄⁺} + 𝓝^{s̄⁺/s̲⁻})`.
pub fn embedding_check(grad_u: &SampledField<'_>, data: &ExponentData) -> Result<EmbeddingReport> {
    vector_field_check(grad_u)?;
    let grid = grad_u.grid();
    let coeffs = data.sample(grid);
    let w = grid.weights();
    let lhs = data.alpha * lower_exponent_modular_with(grad_u, &coeffs);
    let n_value = composite_n_with(grad_u, &coeffs);
    let pow0 = |base: f64, e: f64| if e == 0.0 { 1.0 } else { base.powf(e) };
    let mut a_plus: f64 = 0.0;
    let mut b_plus: f64 = 0.0;
    let mut s_lo = f64::INFINITY;
    let mut s_hi = f64::NEG_INFINITY;
    let mut exp_a = Vec::with_capacity(coeffs.len());
    let mut exp_b = Vec::with_capacity(coeffs.len());
    for c in &coeffs {
        let sl = c.p.min(c.q);
        a_plus = a_plus.max(pow0(c.a, 1.0 - sl / c.p));
        b_plus = b_plus.max(pow0(c.b, 1.0 - sl / c.q));
        s_lo = s_lo.min(sl);
        s_hi = s_hi.max(c.p.max(c.q));
        // conjugate of p/s̲ is p/(p − s̲), infinite where p = s̲
        exp_a.push(if c.p > sl {
            c.p / (c.p - sl)
        } else {
            f64::INFINITY
        });
        exp_b.push(if c.q > sl {
            c.q / (c.q - sl)
        } else {
            f64::INFINITY
        });
    }
    let ones = vec![1.0; coeffs.len()];
    let c_a = luxemburg_raw(w, &ones, &exp_a, DEFAULT_REL_TOL)?;
    let c_b = luxemburg_raw(w, &ones, &exp_b, DEFAULT_REL_TOL)?;
    let rhs = 4.0
        * (c_a + c_b)
        * (a_plus + b_plus)
        * (n_value.powf(s_lo / s_hi) + n_value.powf(s_hi / s_lo));
    Ok(EmbeddingReport {
        lhs,
        n_value,
        c_a,
        c_b,
        a_plus,
        b_plus,
        rhs,
        holds: lhs <= rhs + SLACK_FLOOR * rhs.max(1.0),
    })
}

/// Lower constant for `S_p ≥ c |ξ−η|² (ε²+|ξ|²+|η|²)^{(p−2)/2}`, `p ∈ (1,2)`.
pub fn subquadratic_monotonicity_constant(p: f64) -> f64 {
    p - 1.0
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct MonotoneDifferenceReport {
    /// `𝓝(∇u − ∇v)`
    pub lhs: f64,
    pub g_value: f64,
    pub constant: f64,
    /// `C (𝓖^{s̄⁺/2} + 𝓖^{s̲⁻/2} + 𝓖)`
    pub rhs: f64,
    pub holds: bool,
}

/// `𝓝(∇u−∇v) ≤ C(𝓖^{s̄⁺/2} + 𝓖^{s̲⁻/2} + 𝓖)` with `C` assembled from Hölder norms.
pub fn monotone_difference_check(
    grad_u: &SampledField<'_>,
    grad_v: &SampledField<'_>,
    eps: f64,
    data: &ExponentData,
) -> Result<MonotoneDifferenceReport> {
    vector_field_check(grad_u)?;
    grad_u.same_grid(grad_v)?;
    let grid = grad_u.grid();
    let coeffs = data.sample(grid);
    let w = grid.weights();
    let diff = difference(grad_u, grad_v)?;
    let lhs = composite_n_with(&diff, &coeffs);
    let g_value = pairing_g_eps_with(grad_u, grad_v, eps, &coeffs).max(0.0);
    let s_lo = coeffs
        .iter()
        .map(|c| c.p.min(c.q))
        .fold(f64::INFINITY, f64::min);
    let s_hi = coeffs
        .iter()
        .map(|c| c.p.max(c.q))
        .fold(f64::NEG_INFINITY, f64::max);

    // superquadratic part: a|w|^p ≤ 2 C_p a S_p on {p ≥ 2}
    let mut cp_max: f64 = 0.0;
    // subquadratic part: Hölder split a|w|^p = f · g on {p < 2}
    let mut sub_constant = 0.0;
    for phase in 0..2 {
        let expo = |c: &PointCoefficients| if phase == 0 { c.p } else { c.q };
        let coef = |c: &PointCoefficients| if phase == 0 { c.a } else { c.b };
        let mut f_mags = vec![0.0; coeffs.len()];
        let mut f_exps = vec![2.0; coeffs.len()];
        let mut e_lo = f64::INFINITY;
        let mut e_hi = f64::NEG_INFINITY;
        let mut c_min = f64::INFINITY;
        for (i, c) in coeffs.iter().enumerate() {
            let p = expo(c);
            if p >= 2.0 {
                if coef(c) > 0.0 {
                    cp_max = cp_max.max(flux::power_sum_constant(p));
                }
                continue;
            }
            let r = eps * eps + flux::norm_sq(grad_u.at(i)) + flux::norm_sq(grad_v.at(i));
            // a^{1−p/2} R^{p/2} with R = (ε²+|∇u|²+|∇v|²)^{(2−p)/2}
            f_mags[i] = coef(c).powf(1.0 - 0.5 * p) * flux::half_power(r, (2.0 - p) * 0.5 * p);
            f_exps[i] = 2.0 / (2.0 - p);
            e_lo = e_lo.min(0.5 * p);
            e_hi = e_hi.max(0.5 * p);
            c_min = c_min.min(subquadratic_monotonicity_constant(p));
        }
        if e_lo.is_finite() && f_mags.iter().any(|&m| m > 0.0) {
            let f_norm = luxemburg_raw(w, &f_mags, &f_exps, DEFAULT_REL_TOL)?;
            // ‖g‖_{2/p} ≤ max over exponents of (𝓖/c)^{p/2} ≤ c^{-p/2}(𝓖^{s̲⁻/2} + 𝓖^{s̄⁺/2})
            let scale = c_min.powf(-e_lo).max(c_min.powf(-e_hi));
            sub_constant += 2.0 * f_norm * scale;
        }
    }
    let constant = (2.0 * 2.0 * cp_max)
        .max(sub_constant)
        .max(f64::MIN_POSITIVE);
    let rhs = constant * (g_value.powf(0.5 * s_hi) + g_value.powf(0.5 * s_lo) + g_value);
    Ok(MonotoneDifferenceReport {
        lhs,
        g_value,
        constant,
        rhs,
        holds: lhs <= rhs + SLACK_FLOOR * rhs.max(1.0) * 1e-2 + 1e-14,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(order: usize) -> QuadratureGrid {
        QuadratureGrid::spatial(SpaceRule::gauss(2, order).unwrap(), 0.0)
    }

    fn constant(grid: &QuadratureGrid, v: f64) -> SampledField<'_> {
        SampledField::from_fn(grid, |_, _| v).unwrap()
    }

    #[test]
    fn constant_modulars() {
        let g = unit_grid(6);
        let r = constant(&g, 2.7);
        assert!((modular(&constant(&g, 1.0), &r).unwrap() - 1.0).abs() < 1e-14);
        let r3 = constant(&g, 3.0);
        assert!((modular(&constant(&g, 2.0), &r3).unwrap() - 8.0).abs() < 1e-13);
    }

    #[test]
    fn modular_rejects_small_exponent() {
        let g = unit_grid(3);
        assert!(matches!(
            modular(&constant(&g, 1.0), &constant(&g, 1.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn constant_exponent_norm_closed_form() {
        let g = unit_grid(5);
        let n = luxemburg_norm(&constant(&g, 3.0), &constant(&g, 2.0), 1e-13).unwrap();
        assert!((n - 3.0).abs() < 1e-10);
        let z = luxemburg_norm(&constant(&g, 0.0), &constant(&g, 2.0), 1e-13).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn rel_tol_range_enforced() {
        let g = unit_grid(3);
        let f = constant(&g, 1.0);
        let r = constant(&g, 2.0);
        assert!(luxemburg_norm(&f, &r, 1e-15).is_err());
        assert!(luxemburg_norm(&f, &r, 0.1).is_err());
    }

    #[test]
    fn sandwich_collapses_for_constant_exponent() {
        let g = unit_grid(8);
        let f = SampledField::from_fn(&g, |x, _| 1.0 + x[0] * x[1]).unwrap();
        let rep = check_modular_norm_sandwich(&f, &constant(&g, 2.0)).unwrap();
        assert!(rep.holds);
        assert!((rep.modular - rep.norm.powi(2)).abs() < 1e-10);
        let rep = check_modular_norm_sandwich(&constant(&g, 1.0), &constant(&g, 2.5)).unwrap();
        assert!((rep.modular - 1.0).abs() < 1e-14 && (rep.norm - 1.0).abs() < 1e-11);
    }

    #[test]
    fn holder_trivial_cases() {
        let g = unit_grid(6);
        let f = SampledField::from_fn(&g, |x, _| x[0] - 0.3).unwrap();
        let r = constant(&g, 2.0);
        let rep = holder_pairing_check(&f, &constant(&g, 0.0), &r).unwrap();
        assert_eq!(rep.pairing, 0.0);
        assert!(rep.holds);
        let rep = holder_pairing_check(&f, &f, &r).unwrap();
        assert!((rep.pairing - rep.norm_f.powi(2)).abs() < 1e-10);
        assert!(rep.holds);
    }

    #[test]
    fn musielak_trivial_cases() {
        let g = unit_grid(6);
        let data = ExponentData::constant(2, 1.0, 1.8, 2.2, 0.5, 0.5, 0.9);
        assert_eq!(musielak_modular(&constant(&g, 0.0), &data).unwrap(), 0.0);
        let v = musielak_modular(&constant(&g, 1.0), &data).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn composite_and_pairing_trivial_cases() {
        let space = SpaceRule::gauss(2, 4).unwrap();
        let grid = QuadratureGrid::new(space, crate::quadrature::TimeRule::gauss(0.3, 3));
        let data = ExponentData::constant(2, 0.3, 2.0, 2.0, 1.0, 0.0, 1.0);
        let zero = SampledField::new(&grid, 2, vec![0.0; grid.len() * 2]).unwrap();
        assert_eq!(composite_n(&zero, &data).unwrap(), 0.0);
        let e1: Vec<f64> = (0..grid.len()).flat_map(|_| [1.0, 0.0]).collect();
        let e1 = SampledField::new(&grid, 2, e1).unwrap();
        assert!((composite_n(&e1, &data).unwrap() - 0.3).abs() < 1e-14);
        assert_eq!(pairing_g_eps(&e1, &e1, 0.1, &data).unwrap(), 0.0);
        let g = pairing_g_eps(&e1, &zero, 0.3, &data).unwrap();
        assert!((g - 0.3).abs() < 1e-14);
    }

    #[test]
    fn embedding_handles_equal_exponents() {
        let g = unit_grid(6);
        let data = ExponentData::constant(2, 1.0, 2.0, 2.0, 0.5, 0.5, 1.0);
        let vals: Vec<f64> = (0..g.len())
            .flat_map(|i| {
                let x = g.node(i).0;
                [x[0], -x[1]]
            })
            .collect();
        let grad = SampledField::new(&g, 2, vals).unwrap();
        let rep = embedding_check(&grad, &data).unwrap();
        assert_eq!(rep.c_a, 1.0);
        assert_eq!(rep.a_plus, 1.0);
        assert!(rep.holds);
    }
}
