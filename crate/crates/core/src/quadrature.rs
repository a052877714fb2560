//! Gauss–Legendre tensor rules on the unit box and time rules on `(0,T)`.

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor-product Gauss–Legendre rule on `(0,1)^N`.
#[derive(Clone, Debug)]
pub struct SpaceRule {
    dim: usize,
    order: usize,
    axis: Vec<f64>,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl SpaceRule {
    pub fn gauss(dim: usize, order: usize) -> Result<Self> {
        if !(1..=crate::field::MAX_DIM).contains(&dim) {
            return Err(Error::Config(format!("unsupported dimension {dim}")));
        }
        if order == 0 {
            return Err(Error::Config("quadrature order must be positive".into()));
        }
        let (x, w) = gauss_legendre(order);
        let x01: Vec<f64> = x.iter().map(|v| 0.5 * (v + 1.0)).collect();
        let w01: Vec<f64> = w.iter().map(|v| 0.5 * v).collect();
        let count = order.pow(dim as u32);
        let mut points = Vec::with_capacity(count * dim);
        let mut weights = Vec::with_capacity(count);
        match dim {
            1 => {
                points.extend_from_slice(&x01);
                weights.extend_from_slice(&w01);
            }
            _ => {
                for i in 0..order {
                    for j in 0..order {
                        points.push(x01[i]);
                        points.push(x01[j]);
                        weights.push(w01[i] * w01[j]);
                    }
                }
            }
        }
        Ok(SpaceRule {
            dim,
            order,
            axis: x01,
            points,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// One-dimensional nodes; N = 2 points are `(axis[i], axis[j])` at index `i·order + j`.
    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Nodes and weights of a rule on `(0,T)`.
#[derive(Clone, Debug)]
pub struct TimeRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TimeRule {
    /// A single instant with unit weight, turning a space-time grid into a purely spatial one.
    pub fn instant(t: f64) -> Self {
        TimeRule {
            nodes: vec![t],
            weights: vec![1.0],
        }
    }

    /// Composite trapezoid rule on the given increasing checkpoints.
    pub fn trapezoid(times: &[f64]) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::Config(
                "trapezoid rule needs at least two checkpoints".into(),
            ));
        }
        let mut weights = vec![0.0; times.len()];
        for k in 0..times.len() - 1 {
            let h = times[k + 1] - times[k];
            if !(h > 0.0) {
                return Err(Error::Config("checkpoints must be increasing".into()));
            }
            weights[k] += 0.5 * h;
            weights[k + 1] += 0.5 * h;
        }
        Ok(TimeRule {
            nodes: times.to_vec(),
            weights,
        })
    }

    pub fn gauss(horizon: f64, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        TimeRule {
            nodes: x.iter().map(|v| 0.5 * horizon * (v + 1.0)).collect(),
            weights: w.iter().map(|v| 0.5 * horizon * v).collect(),
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// A space rule crossed with a time rule; node index is `time_index * n_space + space_index`.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    space: SpaceRule,
    time: TimeRule,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(space: SpaceRule, time: TimeRule) -> Self {
        let mut weights = Vec::with_capacity(space.len() * time.len());
        for wt in time.weights() {
            for ws in space.weights() {
                weights.push(wt * ws);
            }
        }
        QuadratureGrid {
            space,
            time,
            weights,
        }
    }

    /// Purely spatial grid frozen at time `t`.
    pub fn spatial(space: SpaceRule, t: f64) -> Self {
        Self::new(space, TimeRule::instant(t))
    }

    pub fn space(&self) -> &SpaceRule {
        &self.space
    }

    pub fn time(&self) -> &TimeRule {
        &self.time
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Spatial point and time of node `i`.
    pub fn node(&self, i: usize) -> (&[f64], f64) {
        let ns = self.space.len();
        (self.space.point(i % ns), self.time.nodes()[i / ns])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        for n in 1..40 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg} q={q}");
            }
        }
    }

    #[test]
    fn weights_sum_to_measure() {
        for dim in 1..=2 {
            let r = SpaceRule::gauss(dim, 21).unwrap();
            let s: f64 = r.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(r.weights().iter().all(|&w| w > 0.0));
        }
        let t = TimeRule::trapezoid(&[0.0, 0.1, 0.3, 0.35]).unwrap();
        assert!((t.weights().iter().sum::<f64>() - 0.35).abs() < 1e-15);
        let g = TimeRule::gauss(0.7, 5);
        assert!((g.weights().iter().sum::<f64>() - 0.7).abs() < 1e-14);
        let grid = QuadratureGrid::new(SpaceRule::gauss(2, 4).unwrap(), g);
        assert!((grid.weights().iter().sum::<f64>() - 0.7).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SpaceRule::gauss(3, 4).is_err());
        assert!(SpaceRule::gauss(2, 0).is_err());
        assert!(TimeRule::trapezoid(&[0.0]).is_err());
        assert!(TimeRule::trapezoid(&[0.0, 0.0]).is_err());
    }
}
