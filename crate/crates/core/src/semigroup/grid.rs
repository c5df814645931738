use serde::{Deserialize, Serialize};

use super::SemigroupError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridScheme {
    /// Cell midpoints of a uniform partition.
    Uniform,
    /// Geometric progression of nodes.
    Geometric,
    /// Interior nodes of a uniform partition, zero boundary values.
    DirichletInterior,
    /// A finite type set, one node per type.
    Finite,
}

/// Discretisation of the trait space: sorted nodes and quadrature weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    scheme: GridScheme,
    /// End points of the discretised interval.
    bounds: (f64, f64),
}

impl Grid {
    /// Midpoints of `n` equal cells of `[a, b]`, weight `(b - a) / n` each.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self, SemigroupError> {
        check(n, a, b)?;
        let w = (b - a) / n as f64;
        Ok(Self {
            nodes: (0..n).map(|i| a + (i as f64 + 0.5) * w).collect(),
            weights: vec![w; n],
            scheme: GridScheme::Uniform,
            bounds: (a, b),
        })
    }

    /// `x_i = a rho^i`, `i = 0..n`, with `x_{n-1} = b`; weight of a node is
    /// the length of its dual cell in log-midpoint sense.
    pub fn geometric(a: f64, b: f64, n: usize) -> Result<Self, SemigroupError> {
        check(n.max(2), a, b)?;
        if a <= 0.0 {
            return Err(SemigroupError::Grid("geometric grid needs a positive lower end".into()));
        }
        let rho = (b / a).powf(1.0 / (n - 1) as f64);
        let nodes: Vec<f64> = (0..n).map(|i| a * rho.powi(i as i32)).collect();
        let s = rho.sqrt();
        let weights = nodes.iter().map(|x| x * (s - 1.0 / s)).collect();
        Ok(Self { nodes, weights, scheme: GridScheme::Geometric, bounds: (a, b) })
    }

    /// `n` interior nodes `a + i h`, `h = (b - a) / (n + 1)`.
    pub fn dirichlet_interior(a: f64, b: f64, n: usize) -> Result<Self, SemigroupError> {
        check(n, a, b)?;
        let h = (b - a) / (n + 1) as f64;
        Ok(Self {
            nodes: (1..=n).map(|i| a + i as f64 * h).collect(),
            weights: vec![h; n],
            scheme: GridScheme::DirichletInterior,
            bounds: (a, b),
        })
    }

    /// Nodes `0, 1, ..., n - 1` with unit weights.
    pub fn finite(n: usize) -> Self {
        Self {
            nodes: (0..n).map(|i| i as f64).collect(),
            weights: vec![1.0; n],
            scheme: GridScheme::Finite,
            bounds: (0.0, n.saturating_sub(1) as f64),
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node values of `f`.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    /// Linear interpolation weights `(i, w_i), (i + 1, w_{i+1})` for `x`.
    /// Outside the node range values are extended by a constant, except on
    /// Dirichlet grids where they fall linearly to zero at the end points.
    pub fn interpolation(&self, x: f64) -> [(usize, f64); 2] {
        let n = self.nodes.len();
        let dirichlet = self.scheme == GridScheme::DirichletInterior;
        if x <= self.nodes[0] {
            let w = if dirichlet { ((x - self.bounds.0) / (self.nodes[0] - self.bounds.0)).max(0.0) } else { 1.0 };
            return [(0, w), (0, 0.0)];
        }
        if x >= self.nodes[n - 1] {
            let w = if dirichlet {
                ((self.bounds.1 - x) / (self.bounds.1 - self.nodes[n - 1])).max(0.0)
            } else {
                1.0
            };
            return [(n - 1, w), (n - 1, 0.0)];
        }
        let i = self.nodes.partition_point(|v| *v <= x) - 1;
        let (a, b) = (self.nodes[i], self.nodes[i + 1]);
        let t = (x - a) / (b - a);
        [(i, 1.0 - t), (i + 1, t)]
    }

    /// Value at `x` of the piecewise-linear interpolant of node values `v`.
    pub fn interpolate(&self, v: &[f64], x: f64) -> f64 {
        let [(i, a), (j, b)] = self.interpolation(x);
        a * v[i] + b * v[j]
    }

    /// Index of the node nearest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let [(i, a), (j, _)] = self.interpolation(x);
        if a >= 0.5 {
            i
        } else {
            j
        }
    }
}

fn check(n: usize, a: f64, b: f64) -> Result<(), SemigroupError> {
    if n == 0 {
        return Err(SemigroupError::Grid("grid needs at least one node".into()));
    }
    if !(a < b && a.is_finite() && b.is_finite()) {
        return Err(SemigroupError::Grid(format!("invalid interval [{a}, {b}]")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_weights_sum_to_length() {
        let g = Grid::uniform(0.0, 1.0, 1000).unwrap();
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn geometric_grid_ends() {
        let g = Grid::geometric(1e-3, 1e3, 2000).unwrap();
        assert!((g.nodes()[0] - 1e-3).abs() < 1e-15);
        assert!((g.nodes()[1999] / 1e3 - 1.0).abs() < 1e-12);
        assert!(g.weights().iter().all(|w| *w > 0.0));
    }

    #[test]
    fn interpolation_is_exact_for_lines() {
        let g = Grid::geometric(0.1, 10.0, 50).unwrap();
        let v = g.sample(|x| 3.0 * x - 1.0);
        for x in [0.13, 0.5, 2.2, 9.9] {
            assert!((g.interpolate(&v, x) - (3.0 * x - 1.0)).abs() < 1e-12);
        }
        assert_eq!(g.nearest(0.1), 0);
    }

    #[test]
    fn dirichlet_interpolation_vanishes_at_the_ends() {
        let g = Grid::dirichlet_interior(0.0, 1.0, 9).unwrap();
        let v = vec![1.0; 9];
        assert_eq!(g.interpolate(&v, 0.0), 0.0);
        assert!((g.interpolate(&v, 0.05) - 0.5).abs() < 1e-12);
        assert!((g.interpolate(&v, 0.95) - 0.5).abs() < 1e-12);
        assert_eq!(g.interpolate(&v, 1.0), 0.0);
    }
}
