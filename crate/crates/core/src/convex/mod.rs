//! Barrier interior-point solver for the convex subproblems of the SCA loops.
//!
//! Variables are a flat real vector assembled from blocks: Hermitian PSD
//! matrices (stored through the isometry of [`hermitian`]) and real vectors
//! with optional box bounds. The objective and inequalities are [`Func`]s.
//! Newton systems are solved as block-diagonal plus low-rank, which keeps
//! problems with a few hundred relaxed schedule entries cheap.

mod barrier;
mod functions;
pub mod hermitian;
mod kkt;
mod phase1;

use nalgebra::{DMatrix, DVector};

use crate::scalar::CMatrix;

pub use barrier::solve;
pub use functions::{Affine, Func, SparseVec};
pub use phase1::phase1_feasible;

/// Termination path of a convex solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    MaxIter,
    Infeasible,
    NumericalFailure,
}

/// A block of the variable vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    /// Hermitian `dim x dim` matrix constrained to the PSD cone.
    Hermitian { dim: usize },
    /// Real vector. Coordinates are grouped in runs of `group` entries that
    /// share dense Hessian blocks; `group = 0` means the whole vector.
    /// Infinite bounds are ignored.
    Vector { len: usize, group: usize, lower: Option<Vec<f64>>, upper: Option<Vec<f64>> },
}

impl Block {
    pub fn len(&self) -> usize {
        match self {
            Block::Hermitian { dim } => hermitian::iso_len(*dim),
            Block::Vector { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Named inequality `func(x) <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub func: Func,
}

/// Convex program `min f(x)` s.t. `g_i(x) <= 0`, `A x = b`, PSD blocks, box bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexProblem {
    blocks: Vec<Block>,
    offsets: Vec<usize>,
    dim: usize,
    pub objective: Func,
    pub inequalities: Vec<Constraint>,
    pub equalities: Option<(DMatrix<f64>, DVector<f64>)>,
    pub start: Option<Vec<f64>>,
}

impl Default for ConvexProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl ConvexProblem {
    pub fn new() -> Self {
        Self {
            blocks: Vec::new(),
            offsets: Vec::new(),
            dim: 0,
            objective: Func::Affine(Affine::default()),
            inequalities: Vec::new(),
            equalities: None,
            start: None,
        }
    }

    fn push_block(&mut self, block: Block) -> usize {
        let offset = self.dim;
        self.dim += block.len();
        self.offsets.push(offset);
        self.blocks.push(block);
        offset
    }

    /// Adds a Hermitian PSD block and returns its first coordinate.
    pub fn add_hermitian(&mut self, dim: usize) -> usize {
        self.push_block(Block::Hermitian { dim })
    }

    /// Adds a real vector block and returns its first coordinate.
    pub fn add_vector(&mut self, len: usize, group: usize, lower: Option<Vec<f64>>, upper: Option<Vec<f64>>) -> usize {
        self.push_block(Block::Vector { len, group, lower, upper })
    }

    pub fn add_inequality(&mut self, name: impl Into<String>, func: Func) {
        self.inequalities.push(Constraint { name: name.into(), func });
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Total number of real coordinates.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Extracts the Hermitian matrix stored in block `b`.
    pub fn hermitian_block(&self, x: &[f64], b: usize) -> Option<CMatrix<f64>> {
        match self.blocks.get(b)? {
            Block::Hermitian { dim } => Some(hermitian::from_iso(&x[self.offsets[b]..self.offsets[b] + dim * dim], *dim)),
            _ => None,
        }
    }

    /// Finite bounds as `(coordinate, value, is_lower)`.
    pub(crate) fn bounds(&self) -> Vec<(usize, f64, bool)> {
        let mut out = Vec::new();
        for (b, block) in self.blocks.iter().enumerate() {
            if let Block::Vector { len, lower, upper, .. } = block {
                for i in 0..*len {
                    if let Some(l) = lower.as_ref().map(|l| l[i]).filter(|l| l.is_finite()) {
                        out.push((self.offsets[b] + i, l, true));
                    }
                    if let Some(u) = upper.as_ref().map(|u| u[i]).filter(|u| u.is_finite()) {
                        out.push((self.offsets[b] + i, u, false));
                    }
                }
            }
        }
        out
    }

    /// Barrier parameter `m`: the duality gap at a central point is `m / t`.
    pub fn barrier_degree(&self) -> f64 {
        let psd: usize = self
            .blocks
            .iter()
            .map(|b| match b {
                Block::Hermitian { dim } => *dim,
                _ => 0,
            })
            .sum();
        (self.inequalities.len() + self.bounds().len() + psd) as f64
    }

    /// Checks that every index is in range and equality shapes agree.
    pub fn validate(&self) -> crate::Result<()> {
        let bad = |msg: String| Err(crate::Error::Dimension(msg));
        let funcs = std::iter::once(&self.objective).chain(self.inequalities.iter().map(|c| &c.func));
        if let Some(i) = funcs.filter_map(|f| f.max_index()).max() {
            if i >= self.dim {
                return bad(format!("coordinate {i} referenced but problem has {} variables", self.dim));
            }
        }
        for (b, block) in self.blocks.iter().enumerate() {
            if let Block::Vector { len, lower, upper, .. } = block {
                if lower.as_ref().is_some_and(|l| l.len() != *len) || upper.as_ref().is_some_and(|u| u.len() != *len) {
                    return bad(format!("bounds of block {b} do not match its length {len}"));
                }
            }
        }
        if let Some((a, rhs)) = &self.equalities {
            if a.ncols() != self.dim || a.nrows() != rhs.len() {
                return bad(format!("equality system is {}x{} with {} right-hand sides", a.nrows(), a.ncols(), rhs.len()));
            }
        }
        if let Some(s) = &self.start {
            if s.len() != self.dim {
                return bad(format!("start has {} entries, expected {}", s.len(), self.dim));
            }
        }
        Ok(())
    }

    /// Smallest margin over every inequality, bound and PSD block at `x`
    /// (positive means strictly feasible), recomputed from scratch.
    pub fn margin(&self, x: &[f64]) -> f64 {
        let mut m = f64::INFINITY;
        for c in &self.inequalities {
            m = m.min(-c.func.value(x));
        }
        for (i, v, lower) in self.bounds() {
            m = m.min(if lower { x[i] - v } else { v - x[i] });
        }
        for b in 0..self.blocks.len() {
            if let Some(w) = self.hermitian_block(x, b) {
                let eig = nalgebra::SymmetricEigen::new(w).eigenvalues;
                m = m.min(eig.min());
            }
        }
        if m.is_nan() {
            f64::NEG_INFINITY
        } else {
            m
        }
    }

    /// Largest absolute residual of the equality constraints.
    pub fn equality_residual(&self, x: &[f64]) -> f64 {
        match &self.equalities {
            None => 0.0,
            Some((a, b)) => (a * DVector::from_column_slice(x) - b).amax(),
        }
    }

    /// Per-constraint values `g_i(x)`, for independent re-checks.
    pub fn constraint_values(&self, x: &[f64]) -> Vec<(String, f64)> {
        self.inequalities.iter().map(|c| (c.name.clone(), c.func.value(x))).collect()
    }
}

/// Solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveParams {
    /// Target duality gap.
    pub tol: f64,
    pub mu_factor: f64,
    pub max_newton: usize,
    pub max_outer: usize,
    /// Armijo fraction and backtracking factor.
    pub ls_alpha: f64,
    pub ls_beta: f64,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self { tol: 1e-7, mu_factor: 10.0, max_newton: 50, max_outer: 30, ls_alpha: 0.3, ls_beta: 0.8 }
    }
}

/// One outer barrier iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    /// Barrier weight on the objective.
    pub t: f64,
    pub newton_steps: usize,
    pub objective: f64,
    /// Duality-gap bound `m / t`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub status: Status,
    /// Duality-gap bound at termination.
    pub kkt_residual: f64,
    pub trace: Vec<TraceEntry>,
}
