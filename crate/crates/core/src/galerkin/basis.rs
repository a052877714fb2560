//! Dirichlet-Laplacian eigenbasis of the unit box and its evaluation tables.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::field::{Vec2, MAX_DIM};
use crate::quadrature::SpaceRule;

/// Modes `k ∈ {1..m}^N` with `φ_k = 2^{N/2} Π sin(kᵢπxᵢ)` and `λ_k = π² Σ kᵢ²`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenBasis {
    dim: usize,
    m_per_dim: usize,
    modes: Vec<[usize; MAX_DIM]>,
    eigenvalues: Vec<f64>,
}

impl EigenBasis {
    /// Modes sorted by eigenvalue, ties broken lexicographically.
    pub fn new(dim: usize, m_per_dim: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::Config(format!("unsupported dimension {dim}")));
        }
        if m_per_dim == 0 {
            return Err(Error::Config("m_per_dim must be at least 1".into()));
        }
        let mut modes: Vec<[usize; MAX_DIM]> = match dim {
            1 => (1..=m_per_dim).map(|k| [k, 0]).collect(),
            _ => (1..=m_per_dim)
                .flat_map(|i| (1..=m_per_dim).map(move |j| [i, j]))
                .collect(),
        };
        let lam = |k: &[usize; MAX_DIM]| -> usize { k.iter().map(|v| v * v).sum() };
        modes.sort_by(|a, b| lam(a).cmp(&lam(b)).then(a.cmp(b)));
        let eigenvalues = modes.iter().map(|k| PI * PI * lam(k) as f64).collect();
        Ok(EigenBasis {
            dim,
            m_per_dim,
            modes,
            eigenvalues,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn m_per_dim(&self) -> usize {
        self.m_per_dim
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Multi-index of mode `j`; unused trailing entries are zero.
    pub fn mode(&self, j: usize) -> &[usize] {
        &self.modes[j][..self.dim]
    }

    pub fn eigenvalue(&self, j: usize) -> f64 {
        self.eigenvalues[j]
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Position of a multi-index in the sorted ordering.
    pub fn index_of(&self, k: &[usize]) -> Option<usize> {
        self.modes.iter().position(|m| &m[..self.dim] == k)
    }

    /// Unit coefficient vector of mode `k`.
    pub fn unit(&self, k: &[usize]) -> Option<Vec<f64>> {
        let j = self.index_of(k)?;
        let mut v = vec![0.0; self.len()];
        v[j] = 1.0;
        Some(v)
    }

    /// Highest single-axis wavenumber.
    pub fn max_wavenumber(&self) -> usize {
        self.m_per_dim
    }

    /// Default Gauss order per dimension for assembling with this basis.
    pub fn default_quadrature_order(&self) -> usize {
        2 * self.max_wavenumber() + 4
    }

    /// `(φ_j(x), ∇φ_j(x))`.
    pub fn eval_mode(&self, j: usize, x: &[f64]) -> (f64, Vec2) {
        let k = &self.modes[j];
        let mut s = [1.0; MAX_DIM];
        let mut c = [0.0; MAX_DIM];
        for i in 0..self.dim {
            let w = k[i] as f64 * PI;
            s[i] = SQRT_2 * (w * x[i]).sin();
            c[i] = SQRT_2 * w * (w * x[i]).cos();
        }
        let value: f64 = s[..self.dim].iter().product();
        let mut grad = [0.0; MAX_DIM];
        for i in 0..self.dim {
            grad[i] = (0..self.dim)
                .map(|l| if l == i { c[l] } else { s[l] })
                .product();
        }
        (value, grad)
    }

    /// Value and gradient of `Σ_j u_j φ_j` at `x ∈ [0,1]^N`.
    pub fn evaluate(&self, coeffs: &[f64], x: &[f64]) -> Result<(f64, Vec2)> {
        if x.len() != self.dim {
            return Err(Error::Domain(format!(
                "point has {} coordinates in dimension {}",
                x.len(),
                self.dim
            )));
        }
        if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("coordinate {v} outside [0,1]")));
        }
        if coeffs.len() != self.len() {
            return Err(Error::Domain(format!(
                "expected {} coefficients, got {}",
                self.len(),
                coeffs.len()
            )));
        }
        let (sin_t, cos_t) = axis_tables(self.m_per_dim, x);
        let mut u = 0.0;
        let mut g = [0.0; MAX_DIM];
        for (j, &cj) in coeffs.iter().enumerate() {
            if cj == 0.0 {
                continue;
            }
            let k = &self.modes[j];
            let s: Vec<f64> = (0..self.dim).map(|i| sin_t[i][k[i] - 1]).collect();
            let c: Vec<f64> = (0..self.dim).map(|i| cos_t[i][k[i] - 1]).collect();
            u += cj * s.iter().product::<f64>();
            for i in 0..self.dim {
                let gi: f64 = (0..self.dim)
                    .map(|l| if l == i { c[l] } else { s[l] })
                    .product();
                g[i] += cj * gi;
            }
        }
        Ok((u, g))
    }

    /// Coefficients arranged as an `m_per_dim × m_per_dim` matrix indexed by wavenumbers (N = 2),
    /// or an `m_per_dim × 1` column (N = 1).
    pub fn coefficient_grid(&self, coeffs: &[f64]) -> DMatrix<f64> {
        let m = self.m_per_dim;
        let cols = if self.dim == 1 { 1 } else { m };
        let mut c = DMatrix::zeros(m, cols);
        for (j, &v) in coeffs.iter().enumerate() {
            let k = &self.modes[j];
            let col = if self.dim == 1 { 0 } else { k[1] - 1 };
            c[(k[0] - 1, col)] = v;
        }
        c
    }
}

/// Per-axis tables `√2 sin(kπx)` and `√2 kπ cos(kπx)` for `k = 1..m`.
fn axis_tables(m: usize, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut s = Vec::with_capacity(x.len());
    let mut c = Vec::with_capacity(x.len());
    for &xi in x {
        let (si, ci): (Vec<f64>, Vec<f64>) = (1..=m)
            .map(|k| {
                let w = k as f64 * PI;
                (SQRT_2 * (w * xi).sin(), SQRT_2 * w * (w * xi).cos())
            })
            .unzip();
        s.push(si);
        c.push(ci);
    }
    (s, c)
}

/// 1D tables on a list of coordinates: rows are points, columns wavenumbers `1..m`.
pub(crate) fn line_tables(m: usize, xs: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let s = DMatrix::from_fn(xs.len(), m, |i, k| {
        SQRT_2 * ((k + 1) as f64 * PI * xs[i]).sin()
    });
    let c = DMatrix::from_fn(xs.len(), m, |i, k| {
        let w = (k + 1) as f64 * PI;
        SQRT_2 * w * (w * xs[i]).cos()
    });
    (s, c)
}

/// Values and gradients of every basis function at the nodes of a space rule.
#[derive(Clone, Debug)]
pub struct BasisTables {
    nodes: usize,
    dim: usize,
    /// `nodes × m`
    pub(crate) phi: DMatrix<f64>,
    /// `m × nodes`
    pub(crate) phi_t: DMatrix<f64>,
    /// `(dim·nodes) × m`, row `d·nodes + n` holds `∂_d φ_j(x_n)`.
    pub(crate) grads: DMatrix<f64>,
    /// `m × (dim·nodes)`
    pub(crate) grads_t: DMatrix<f64>,
}

impl BasisTables {
    pub fn new(basis: &EigenBasis, rule: &SpaceRule) -> Result<Self> {
        if rule.dim() != basis.dim() {
            return Err(Error::Config(format!(
                "quadrature dimension {} differs from basis dimension {}",
                rule.dim(),
                basis.dim()
            )));
        }
        let n = rule.len();
        let m = basis.len();
        let dim = basis.dim();
        let mut phi = DMatrix::zeros(n, m);
        let mut grads = DMatrix::zeros(dim * n, m);
        for node in 0..n {
            let x = rule.point(node);
            for j in 0..m {
                let (v, g) = basis.eval_mode(j, x);
                phi[(node, j)] = v;
                for d in 0..dim {
                    grads[(d * n + node, j)] = g[d];
                }
            }
        }
        Ok(BasisTables {
            nodes: n,
            dim,
            phi_t: phi.transpose(),
            phi,
            grads_t: grads.transpose(),
            grads,
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `u` at every node.
    pub fn values(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        &self.phi * coeffs
    }

    /// Stacked gradient components at every node.
    pub fn gradients(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        &self.grads * coeffs
    }

    /// `(∫ g φ_j)_j` from weighted nodal values `w_n g_n`.
    pub fn load(&self, weighted: &DVector<f64>) -> DVector<f64> {
        &self.phi_t * weighted
    }

    /// `(∫ G · ∇φ_j)_j` from stacked weighted nodal vectors.
    pub fn divergence_load(&self, weighted: &DVector<f64>) -> DVector<f64> {
        &self.grads_t * weighted
    }
}

/// A spectral field and its gradient on a tensor lattice.
#[derive(Clone, Debug)]
pub struct LatticeField {
    /// Coordinates along each axis.
    pub axes: Vec<Vec<f64>>,
    /// `u[(i, j)]` at `(axes[0][i], axes[1][j])`; a single column when N = 1.
    pub u: DMatrix<f64>,
    pub grad: Vec<DMatrix<f64>>,
}

impl LatticeField {
    pub fn max_abs(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Separable evaluation of `Σ u_j φ_j` on the lattice `axis × axis` (or `axis` for N = 1).
pub fn evaluate_lattice(basis: &EigenBasis, coeffs: &[f64], axis: &[f64]) -> Result<LatticeField> {
    if let Some(v) = axis.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Domain(format!("coordinate {v} outside [0,1]")));
    }
    if coeffs.len() != basis.len() {
        return Err(Error::Domain("coefficient count mismatch".into()));
    }
    let (s, c) = line_tables(basis.m_per_dim(), axis);
    let grid = basis.coefficient_grid(coeffs);
    if basis.dim() == 1 {
        let u = &s * &grid;
        let g = &c * &grid;
        return Ok(LatticeField {
            axes: vec![axis.to_vec()],
            u,
            grad: vec![g],
        });
    }
    let cs = &grid * s.transpose();
    let cc = &grid * c.transpose();
    let u = &s * &cs;
    let gx = &c * &cs;
    let gy = &s * &cc;
    Ok(LatticeField {
        axes: vec![axis.to_vec(), axis.to_vec()],
        u,
        grad: vec![gx, gy],
    })
}

/// Second derivatives `∂_{ij} u` on the lattice, ordered `(0,0), (0,1), (1,1)` for N = 2.
pub fn evaluate_lattice_hessian(
    basis: &EigenBasis,
    coeffs: &[f64],
    axis: &[f64],
) -> Result<Vec<DMatrix<f64>>> {
    if coeffs.len() != basis.len() {
        return Err(Error::Domain("coefficient count mismatch".into()));
    }
    let m = basis.m_per_dim();
    let (s, c) = line_tables(m, axis);
    let mut ss = s.clone();
    for k in 0..m {
        let w = (k + 1) as f64 * PI;
        ss.column_mut(k).scale_mut(-w * w);
    }
    let grid = basis.coefficient_grid(coeffs);
    if basis.dim() == 1 {
        return Ok(vec![&ss * &grid]);
    }
    let cs = &grid * s.transpose();
    let cc = &grid * c.transpose();
    let css = &grid * ss.transpose();
    Ok(vec![&ss * &cs, &c * &cc, &s * &css])
}

/// `n` equispaced coordinates covering `[0,1]` including both ends.
pub fn uniform_axis(n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5];
    }
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::SpaceRule;

    #[test]
    fn eigenvalues_and_ordering() {
        let b = EigenBasis::new(2, 4).unwrap();
        assert_eq!(b.len(), 16);
        assert_eq!(b.mode(0), &[1, 1]);
        assert!((b.eigenvalue(0) - 2.0 * PI * PI).abs() < 1e-12);
        assert_eq!(b.mode(1), &[1, 2]);
        assert_eq!(b.mode(2), &[2, 1]);
        assert!(b.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        let b1 = EigenBasis::new(1, 5).unwrap();
        assert!((b1.eigenvalue(2) - 9.0 * PI * PI).abs() < 1e-12);
        assert!(EigenBasis::new(3, 2).is_err());
    }

    #[test]
    fn gram_and_stiffness_under_solver_quadrature() {
        let b = EigenBasis::new(2, 8).unwrap();
        let rule = SpaceRule::gauss(2, b.default_quadrature_order()).unwrap();
        let t = BasisTables::new(&b, &rule).unwrap();
        let w = DMatrix::from_diagonal(&DVector::from_column_slice(rule.weights()));
        let phi = t.phi.columns(0, 16);
        let gram = phi.transpose() * &w * phi;
        let eye = DMatrix::<f64>::identity(16, 16);
        assert!((gram - eye).amax() < 1e-10);
        let n = rule.len();
        let mut stiff = DMatrix::zeros(16, 16);
        for d in 0..2 {
            let gd = t.grads.view((d * n, 0), (n, 16));
            stiff += gd.transpose() * &w * gd;
        }
        for i in 0..16 {
            for j in 0..16 {
                let exact = if i == j { b.eigenvalue(i) } else { 0.0 };
                assert!((stiff[(i, j)] - exact).abs() < 1e-8 * b.eigenvalue(15));
            }
        }
    }

    #[test]
    fn center_and_boundary_values() {
        let b = EigenBasis::new(2, 3).unwrap();
        let e = b.unit(&[1, 1]).unwrap();
        let (u, g) = b.evaluate(&e, &[0.5, 0.5]).unwrap();
        assert!((u - 2.0).abs() < 1e-14);
        assert!(g[0].abs() < 1e-14 && g[1].abs() < 1e-14);
        let coeffs: Vec<f64> = (0..b.len()).map(|j| 1.0 / (j + 1) as f64).collect();
        let (u, _) = b.evaluate(&coeffs, &[0.0, 0.37]).unwrap();
        assert!(u.abs() < 1e-15);
        assert!(matches!(
            b.evaluate(&coeffs, &[1.2, 0.3]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn lattice_hessian_matches_differences() {
        let b = EigenBasis::new(2, 4).unwrap();
        let coeffs: Vec<f64> = (0..b.len()).map(|j| 1.0 / (1.0 + j as f64)).collect();
        let x = [0.31, 0.62];
        let h = evaluate_lattice_hessian(&b, &coeffs, &x).unwrap();
        let d = 1e-5;
        let g = |p: [f64; 2]| b.evaluate(&coeffs, &p).unwrap().1;
        let uxx = (g([x[0] + d, x[1]])[0] - g([x[0] - d, x[1]])[0]) / (2.0 * d);
        let uxy = (g([x[0], x[1] + d])[0] - g([x[0], x[1] - d])[0]) / (2.0 * d);
        let uyy = (g([x[0], x[1] + d])[1] - g([x[0], x[1] - d])[1]) / (2.0 * d);
        assert!((h[0][(0, 1)] - uxx).abs() < 1e-5 * (1.0 + uxx.abs()));
        assert!((h[1][(0, 1)] - uxy).abs() < 1e-5 * (1.0 + uxy.abs()));
        assert!((h[2][(0, 1)] - uyy).abs() < 1e-5 * (1.0 + uyy.abs()));
    }

    #[test]
    fn lattice_agrees_with_pointwise() {
        let b = EigenBasis::new(2, 5).unwrap();
        let coeffs: Vec<f64> = (0..b.len())
            .map(|j| ((j * 7 % 5) as f64 - 2.0) / (j + 1) as f64)
            .collect();
        let axis = uniform_axis(9);
        let lat = evaluate_lattice(&b, &coeffs, &axis).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let (u, g) = b.evaluate(&coeffs, &[axis[i], axis[j]]).unwrap();
                assert!((lat.u[(i, j)] - u).abs() < 1e-12);
                assert!((lat.grad[0][(i, j)] - g[0]).abs() < 1e-11);
                assert!((lat.grad[1][(i, j)] - g[1]).abs() < 1e-11);
            }
        }
    }
}
