use nalgebra::{DMatrix, DVector};

use super::{Grid, GridScheme, SemigroupError};
use crate::models::{BranchingDiffusion, GrowthFragmentation, HouseOfCards, ModelFamily};

/// Tolerated negative off-diagonal mass in a discretised generator.
pub const NEGATIVITY_TOL: f64 = 1e-12;

/// Number of quadrature points for the fragmentation law.
const SPLIT_QUADRATURE: usize = 32;

/// Discretised first-moment generator: `(L f)_i ~ (A f)(x_i)`.
#[derive(Debug, Clone)]
pub struct Generator {
    matrix: DMatrix<f64>,
    /// Largest fraction of fragment mass falling below the grid.
    leakage: f64,
}

impl Generator {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self, SemigroupError> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(SemigroupError::Shape(format!("generator is {}x{}", n, matrix.ncols())));
        }
        for j in 0..n {
            for i in 0..n {
                let v = matrix[(i, j)];
                if !v.is_finite() {
                    return Err(SemigroupError::Assembly(format!("non-finite generator entry at ({i},{j})")));
                }
                if i != j && v < -NEGATIVITY_TOL {
                    return Err(SemigroupError::Assembly(format!(
                        "negative off-diagonal generator entry {v} at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { matrix, leakage: 0.0 })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Uniformisation constant `c = max_i (-L_ii)`.
    pub fn uniformization_rate(&self) -> f64 {
        (0..self.len()).map(|i| -self.matrix[(i, i)]).fold(0.0, f64::max)
    }

    /// `e^{tL}` by uniformisation: with `P = I + L / c >= 0`,
    /// `e^{tL} = e^{-ct} sum_k (ct)^k P^k / k!`. The series is evaluated at
    /// `t / 2^s` with `ct / 2^s <= 1/2` (all terms nonnegative, truncated once
    /// a term is below `1e-17` of the partial sum) and squared `s` times.
    pub fn exp_uniformization(&self, t: f64) -> DMatrix<f64> {
        let n = self.len();
        let c = self.uniformization_rate().max(1e-300);
        let mut s = 0;
        while c * t / 2f64.powi(s) > 0.5 {
            s += 1;
        }
        let tau = t / 2f64.powi(s);
        let mut p = &self.matrix / c;
        for i in 0..n {
            p[(i, i)] += 1.0;
        }
        p.apply(|v| *v = v.max(0.0));
        let ct = c * tau;
        let mut term = DMatrix::identity(n, n);
        let mut sum = term.clone();
        for k in 1..200 {
            term = (&p * &term) * (ct / k as f64);
            sum += &term;
            if term.max() <= 1e-17 * sum.max() {
                break;
            }
        }
        sum *= (-ct).exp();
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    /// `e^{tL}` by Pade scaling and squaring.
    pub fn exp_pade(&self, t: f64) -> DMatrix<f64> {
        (&self.matrix * t).exp()
    }

    /// `e^{tL} f` without forming the matrix exponential, by uniformisation
    /// on the vector over pieces of length `<= 30 / c`.
    pub fn exp_action(&self, t: f64, f: &[f64]) -> Vec<f64> {
        let n = self.len();
        let c = self.uniformization_rate().max(1e-300);
        let pieces = (c * t / 30.0).ceil().max(1.0) as usize;
        let tau = t / pieces as f64;
        let ct = c * tau;
        let mut p = &self.matrix / c;
        for i in 0..n {
            p[(i, i)] += 1.0;
        }
        p.apply(|v| *v = v.max(0.0));
        let mut y = DVector::from_column_slice(f);
        let weight0 = (-ct).exp();
        for _ in 0..pieces {
            let mut term = y.clone();
            let mut acc = &term * weight0;
            let mut w = weight0;
            let mut k = 0usize;
            let mut quiet = 0;
            loop {
                k += 1;
                term = &p * &term;
                w *= ct / k as f64;
                let contrib = &term * w;
                let small = contrib.amax() <= 1e-17 * acc.amax().max(f64::MIN_POSITIVE);
                acc += contrib;
                quiet = if small && k as f64 > ct { quiet + 1 } else { 0 };
                if quiet >= 2 || k > 100_000 {
                    break;
                }
            }
            y = acc;
        }
        y.as_slice().to_vec()
    }
}

/// Discretised first-moment generator of a continuous-time family.
pub fn generator(family: &ModelFamily, grid: &Grid) -> Result<Generator, SemigroupError> {
    match family {
        ModelFamily::MultitypeGw(_) => {
            Err(SemigroupError::Unsupported("discrete-time models have no generator".into()))
        }
        ModelFamily::HouseOfCards(m) => house_of_cards(m, grid),
        ModelFamily::GrowthFragmentation(m) => growth_fragmentation(m, grid),
        ModelFamily::BranchingDiffusion(m) => branching_diffusion(m, grid),
    }
}

fn expect_scheme(grid: &Grid, scheme: GridScheme, kind: &str) -> Result<(), SemigroupError> {
    if grid.scheme() != scheme {
        return Err(SemigroupError::Grid(format!("{kind} needs a {scheme:?} grid, got {:?}", grid.scheme())));
    }
    Ok(())
}

/// `L = imm 1 w^T + diag(r (m - 1))`.
fn house_of_cards(m: &HouseOfCards, grid: &Grid) -> Result<Generator, SemigroupError> {
    expect_scheme(grid, GridScheme::Uniform, "house-of-cards")?;
    let n = grid.len();
    let imm = m.spec().immigration;
    let w = grid.weights();
    let mut l = DMatrix::from_fn(n, n, |_, j| imm * w[j]);
    for (i, &x) in grid.nodes().iter().enumerate() {
        l[(i, i)] -= m.alpha(x);
    }
    Generator::from_matrix(l)
}

/// Upwind transport on a geometric grid (reflecting top node) plus
/// fragmentation integrated by Gauss-Legendre over the split law, fragments
/// located by linear interpolation and extended by a constant below the grid.
fn growth_fragmentation(m: &GrowthFragmentation, grid: &Grid) -> Result<Generator, SemigroupError> {
    expect_scheme(grid, GridScheme::Geometric, "growth-fragmentation")?;
    let n = grid.len();
    let x = grid.nodes();
    let spec = m.spec();
    let (theta, tw) = spec.split.quadrature(SPLIT_QUADRATURE);
    let mut l = DMatrix::zeros(n, n);
    let mut leakage: f64 = 0.0;
    for i in 0..n {
        if i + 1 < n {
            let g = spec.growth.eval(x[i]) / (x[i + 1] - x[i]);
            l[(i, i + 1)] += g;
            l[(i, i)] -= g;
        }
        let b = spec.rate.eval(x[i]);
        if b == 0.0 {
            continue;
        }
        l[(i, i)] -= b;
        let mut below = 0.0;
        for (t, w) in theta.iter().zip(&tw) {
            for y in [t * x[i], x[i] - t * x[i]] {
                if y < x[0] {
                    below += 0.5 * w;
                }
                for (j, a) in grid.interpolation(y) {
                    l[(i, j)] += b * w * a;
                }
            }
        }
        leakage = leakage.max(below);
    }
    let mut g = Generator::from_matrix(l)?;
    g.leakage = leakage;
    Ok(g)
}

/// `sigma^2 / 2` times the three-point Laplacian, upwind drift, zero values
/// outside the interior nodes, plus the local growth `r (m - 1)`.
fn branching_diffusion(m: &BranchingDiffusion, grid: &Grid) -> Result<Generator, SemigroupError> {
    expect_scheme(grid, GridScheme::DirichletInterior, "branching-diffusion")?;
    let n = grid.len();
    let spec = m.spec();
    let h = grid.weights()[0];
    let mut l = DMatrix::zeros(n, n);
    for (i, &x) in grid.nodes().iter().enumerate() {
        let s = spec.sigma.eval(x);
        let diff = 0.5 * s * s / (h * h);
        let b = spec.drift.eval(x);
        let (up, down) = if b >= 0.0 { (diff + b / h, diff) } else { (diff, diff - b / h) };
        if i + 1 < n {
            l[(i, i + 1)] += up;
        }
        if i > 0 {
            l[(i, i - 1)] += down;
        }
        l[(i, i)] += -up - down + m.local_growth(x);
    }
    Generator::from_matrix(l)
}
