use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::generator::{generator, Generator};
use super::{Grid, GridScheme, SemigroupError};
use crate::numerics::log_star;
use crate::models::{ModelFamily, ModelSpec};

/// Entries of an assembled operator may dip this far below zero through
/// roundoff (scaled by the largest entry) before assembly fails.
pub const ENTRY_TOL: f64 = 1e-12;

/// Time step of an operator: `r` generations or `t` time units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Step {
    Generations(u32),
    Time(f64),
}

impl Step {
    /// Length of the step in its natural unit.
    pub fn length(&self) -> f64 {
        match *self {
            Step::Generations(r) => r as f64,
            Step::Time(t) => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpMethod {
    /// Uniformisation for grids up to 600 nodes, Pade above.
    #[default]
    Auto,
    Uniformization,
    ScalingSquaring,
}

/// How the operator matrix was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Assembly {
    /// Power of a mean matrix.
    MeanMatrix,
    Uniformization,
    ScalingSquaring,
}

/// Dense nonnegative `K ~ S_r` (or `S_t`) on a grid; `(K f)_i ~ S f(x_i)`.
#[derive(Debug, Clone)]
pub struct MatrixOperator {
    matrix: DMatrix<f64>,
    grid: Grid,
    step: Step,
    assembly: Assembly,
    leakage: f64,
}

impl MatrixOperator {
    /// Wraps a nonnegative square matrix acting on `grid`.
    pub fn new(matrix: DMatrix<f64>, grid: Grid, step: Step, assembly: Assembly) -> Result<Self, SemigroupError> {
        let n = grid.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(SemigroupError::Shape(format!(
                "operator is {}x{} on a grid of {n} nodes",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let mut matrix = matrix;
        let scale = matrix.amax();
        for j in 0..n {
            for i in 0..n {
                let v = matrix[(i, j)];
                if !v.is_finite() {
                    return Err(SemigroupError::Assembly(format!("non-finite entry at ({i},{j})")));
                }
                if v < 0.0 {
                    if v < -ENTRY_TOL * scale.max(1.0) {
                        return Err(SemigroupError::Assembly(format!("negative entry {v} at ({i},{j})")));
                    }
                    matrix[(i, j)] = 0.0;
                }
            }
        }
        Ok(Self { matrix, grid, step, assembly, leakage: 0.0 })
    }

    /// Kernel of a finite-type mean matrix `M_ij = E[#type j children of i]`.
    pub fn from_mean_matrix(m: &[Vec<f64>], generations: u32) -> Result<Self, SemigroupError> {
        let n = m.len();
        if m.iter().any(|row| row.len() != n) {
            return Err(SemigroupError::Shape("mean matrix is not square".into()));
        }
        let base = DMatrix::from_fn(n, n, |i, j| m[i][j]);
        let mut k = DMatrix::identity(n, n);
        for _ in 0..generations {
            k = &k * &base;
        }
        Self::new(k, Grid::finite(n), Step::Generations(generations), Assembly::MeanMatrix)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn step(&self) -> Step {
        self.step
    }

    pub fn assembly(&self) -> Assembly {
        self.assembly
    }

    /// Fraction of fragment mass lost below the grid (growth-fragmentation).
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `K f`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(f)).as_slice().to_vec()
    }

    /// `K^n f`.
    pub fn apply_power(&self, f: &[f64], n: usize) -> Vec<f64> {
        let mut v = DVector::from_column_slice(f);
        for _ in 0..n {
            v = &self.matrix * v;
        }
        v.as_slice().to_vec()
    }

    /// `mu K` for node masses `mu`: `(mu K)_j = sum_i mu_i K_ij`.
    pub fn apply_left(&self, mu: &[f64]) -> Vec<f64> {
        self.matrix.tr_mul(&DVector::from_column_slice(mu)).as_slice().to_vec()
    }

    /// Measured stability constant `C = max_i (K V*)_i / V*_i`.
    pub fn stability_constant(&self, vstar: &[f64]) -> f64 {
        self.apply(vstar).iter().zip(vstar).map(|(a, v)| a / v).fold(0.0, f64::max)
    }
}

/// Default grid for a model: the type set, `N` midpoints of `[0, 1]`,
/// `N` geometric nodes on `[1e-3, 1e3]`, or `N` interior nodes of the domain.
pub fn default_grid(spec: &ModelSpec, n: usize) -> Result<Grid, SemigroupError> {
    match &spec.family {
        ModelFamily::MultitypeGw(m) => Ok(Grid::finite(m.n_types())),
        ModelFamily::HouseOfCards(_) => Grid::uniform(0.0, 1.0, n),
        ModelFamily::GrowthFragmentation(_) => Grid::geometric(1e-3, 1e3, n),
        ModelFamily::BranchingDiffusion(m) => Grid::dirichlet_interior(m.spec().lo, m.spec().hi, n),
    }
}

/// Default weight `V*`: constant one, except growth-fragmentation where
/// `V = 1 + x^p` and `V* = V log*(V)`.
pub fn default_vstar(spec: &ModelSpec, grid: &Grid, p: f64) -> Vec<f64> {
    match spec.family {
        ModelFamily::GrowthFragmentation(_) => grid.sample(|x| {
            let v = 1.0 + x.powf(p);
            v * log_star(v)
        }),
        _ => vec![1.0; grid.len()],
    }
}

/// Builds the operator of `spec` on `grid` for one step.
pub fn assemble(spec: &ModelSpec, grid: &Grid, step: Step, method: ExpMethod) -> Result<MatrixOperator, SemigroupError> {
    match (&spec.family, step) {
        (ModelFamily::MultitypeGw(m), Step::Generations(r)) => {
            if grid.scheme() != GridScheme::Finite || grid.len() != m.n_types() {
                return Err(SemigroupError::Grid(format!(
                    "a {}-type model needs the finite grid of its types",
                    m.n_types()
                )));
            }
            MatrixOperator::from_mean_matrix(m.mean_matrix(), r)
        }
        (ModelFamily::MultitypeGw(_), Step::Time(_)) => {
            Err(SemigroupError::Unsupported("discrete-time model needs a generation step".into()))
        }
        (_, Step::Generations(_)) => {
            Err(SemigroupError::Unsupported("continuous-time model needs a time step".into()))
        }
        (family, Step::Time(t)) => {
            if !(t > 0.0 && t.is_finite()) {
                return Err(SemigroupError::Shape(format!("time step must be positive, got {t}")));
            }
            let g = generator(family, grid)?;
            exponentiate(&g, grid.clone(), t, method)
        }
    }
}

/// `e^{tL}` of a discretised generator as an operator.
pub fn exponentiate(g: &Generator, grid: Grid, t: f64, method: ExpMethod) -> Result<MatrixOperator, SemigroupError> {
    let method = match method {
        ExpMethod::Auto if g.len() <= 600 => ExpMethod::Uniformization,
        ExpMethod::Auto => ExpMethod::ScalingSquaring,
        m => m,
    };
    let (k, assembly) = match method {
        ExpMethod::ScalingSquaring => (g.exp_pade(t), Assembly::ScalingSquaring),
        _ => (g.exp_uniformization(t), Assembly::Uniformization),
    };
    let mut op = MatrixOperator::new(k, grid, Step::Time(t), assembly)?;
    op.leakage = g.leakage();
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{HouseOfCards, MultitypeGw, ScalarFn};

    #[test]
    fn finite_types_are_their_own_grid() {
        let m = MultitypeGw::from_integer_matrix(&[vec![1, 2], vec![1, 0]]).unwrap();
        let spec = ModelSpec::new(ModelFamily::MultitypeGw(m));
        let grid = default_grid(&spec, 0).unwrap();
        let op = assemble(&spec, &grid, Step::Generations(1), ExpMethod::Auto).unwrap();
        assert_eq!(op.matrix().as_slice(), &[1.0, 1.0, 2.0, 0.0]);
        let op3 = assemble(&spec, &grid, Step::Generations(3), ExpMethod::Auto).unwrap();
        assert_eq!(op3.apply(&[1.0, 0.0]), vec![5.0, 3.0]);
    }

    #[test]
    fn house_of_cards_operator_is_nonnegative() {
        let m = HouseOfCards::with_alpha(ScalarFn::Affine { intercept: 1.0, slope: -1.0 }).unwrap();
        let spec = ModelSpec::new(ModelFamily::HouseOfCards(m));
        let grid = default_grid(&spec, 150).unwrap();
        for method in [ExpMethod::Uniformization, ExpMethod::ScalingSquaring] {
            let op = assemble(&spec, &grid, Step::Time(2.0), method).unwrap();
            assert!(op.matrix().min() >= 0.0);
            assert!(op.apply(&vec![1.0; 150]).iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn wrong_step_kind_is_rejected() {
        let m = HouseOfCards::with_alpha(ScalarFn::constant(1.0)).unwrap();
        let spec = ModelSpec::new(ModelFamily::HouseOfCards(m));
        let grid = default_grid(&spec, 10).unwrap();
        assert!(assemble(&spec, &grid, Step::Generations(1), ExpMethod::Auto).is_err());
        assert!(assemble(&spec, &Grid::finite(10), Step::Time(1.0), ExpMethod::Auto).is_err());
    }
}
