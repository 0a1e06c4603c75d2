//! Newton system `H dx = r` with `H = blockdiag(B_p) + V V^T`.
//!
//! Curvature factors whose support lies inside a single partition are added
//! to that partition's dense block; all others become columns of `V`. Large
//! systems are solved by block Cholesky plus the Woodbury identity, small or
//! low-rank-heavy ones by a dense Cholesky.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::functions::SparseVec;
use super::{Block, ConvexProblem};

/// Partition of the coordinates into dense Hessian blocks.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    /// `(partition, local index)` per coordinate.
    part_of: Vec<(usize, usize)>,
    /// Global coordinates of each partition.
    parts: Vec<Vec<usize>>,
}

impl Layout {
    pub fn new(problem: &ConvexProblem) -> Self {
        let mut part_of = vec![(0, 0); problem.dim()];
        let mut parts: Vec<Vec<usize>> = Vec::new();
        for (block, &offset) in problem.blocks().iter().zip(problem.offsets()) {
            let len = block.len();
            let group = match block {
                Block::Hermitian { .. } => len,
                Block::Vector { group, .. } => {
                    if *group == 0 {
                        len
                    } else {
                        *group
                    }
                }
            };
            let mut start = 0;
            while start < len {
                let end = (start + group).min(len);
                let p = parts.len();
                parts.push((offset + start..offset + end).collect());
                for (local, i) in (offset + start..offset + end).enumerate() {
                    part_of[i] = (p, local);
                }
                start = end;
            }
        }
        Self { part_of, parts }
    }

    pub fn part_of(&self, i: usize) -> (usize, usize) {
        self.part_of[i]
    }

    pub fn dim(&self) -> usize {
        self.part_of.len()
    }
}

pub(crate) struct NewtonSystem<'a> {
    layout: &'a Layout,
    blocks: Vec<DMatrix<f64>>,
    lowrank: Vec<Vec<f64>>,
}

enum Factored {
    Dense(Cholesky<f64, nalgebra::Dyn>),
    Woodbury {
        blocks: Vec<Cholesky<f64, nalgebra::Dyn>>,
        /// `B^{-1} V`, column per low-rank factor.
        binv_v: Vec<DVector<f64>>,
        capacitance: Cholesky<f64, nalgebra::Dyn>,
    },
}

/// Cholesky with growing diagonal jitter when the matrix is numerically
/// semidefinite.
fn robust_cholesky(mut m: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let scale = m.diagonal().iter().fold(0.0f64, |a, d| a.max(d.abs())).max(1e-300);
    let mut jitter = 1e-14 * scale;
    for _ in 0..8 {
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(m.clone()) {
            return Some(c);
        }
        jitter *= 100.0;
    }
    None
}

impl<'a> NewtonSystem<'a> {
    pub fn new(layout: &'a Layout) -> Self {
        let blocks = layout.parts.iter().map(|p| DMatrix::zeros(p.len(), p.len())).collect();
        Self { layout, blocks, lowrank: Vec::new() }
    }

    pub fn add_diag(&mut self, i: usize, v: f64) {
        let (p, l) = self.layout.part_of(i);
        self.blocks[p][(l, l)] += v;
    }

    /// Adds `weight * u u^T`.
    pub fn add_factor(&mut self, u: &SparseVec, weight: f64) {
        if u.is_empty() || weight == 0.0 {
            return;
        }
        let p0 = self.layout.part_of(u.idx[0]).0;
        if u.idx.iter().all(|&i| self.layout.part_of(i).0 == p0) {
            let block = &mut self.blocks[p0];
            for (i, a) in u.idx.iter().zip(&u.val) {
                let li = self.layout.part_of(*i).1;
                for (j, b) in u.idx.iter().zip(&u.val) {
                    block[(li, self.layout.part_of(*j).1)] += weight * a * b;
                }
            }
        } else {
            let mut col = vec![0.0; self.layout.dim()];
            u.scatter(weight.sqrt(), &mut col);
            self.lowrank.push(col);
        }
    }

    /// Adds a dense matrix onto the block whose first coordinate is `first`.
    pub fn add_block(&mut self, first: usize, m: &DMatrix<f64>) {
        let (p, l) = self.layout.part_of(first);
        let mut view = self.blocks[p].view_mut((l, l), (m.nrows(), m.ncols()));
        view += m;
    }

    /// `H x`.
    pub fn mul(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(x.len());
        for (p, idx) in self.layout.parts.iter().enumerate() {
            let xl = DVector::from_iterator(idx.len(), idx.iter().map(|&i| x[i]));
            let yl = &self.blocks[p] * xl;
            for (k, &i) in idx.iter().enumerate() {
                y[i] += yl[k];
            }
        }
        for col in &self.lowrank {
            let c: f64 = col.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            y.iter_mut().zip(col).for_each(|(yi, ci)| *yi += c * ci);
        }
        y
    }

    fn dense(&self) -> DMatrix<f64> {
        let n = self.layout.dim();
        let mut h = DMatrix::zeros(n, n);
        for (p, idx) in self.layout.parts.iter().enumerate() {
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    h[(i, j)] += self.blocks[p][(a, b)];
                }
            }
        }
        for col in &self.lowrank {
            let v = DVector::from_column_slice(col);
            h.ger(1.0, &v, &v, 1.0);
        }
        h
    }

    fn block_solve(&self, chol: &[Cholesky<f64, nalgebra::Dyn>], r: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(r.len());
        for (p, idx) in self.layout.parts.iter().enumerate() {
            let rl = DVector::from_iterator(idx.len(), idx.iter().map(|&i| r[i]));
            let xl = chol[p].solve(&rl);
            for (k, &i) in idx.iter().enumerate() {
                x[i] = xl[k];
            }
        }
        x
    }

    fn factor(&self) -> Option<Factored> {
        let n = self.layout.dim();
        let r = self.lowrank.len();
        if n <= 160 || 3 * r >= n {
            return robust_cholesky(self.dense()).map(Factored::Dense);
        }
        let blocks = self.blocks.iter().map(|b| robust_cholesky(b.clone())).collect::<Option<Vec<_>>>()?;
        let v: Vec<DVector<f64>> = self.lowrank.iter().map(|c| DVector::from_column_slice(c)).collect();
        let binv_v: Vec<DVector<f64>> = v.iter().map(|c| self.block_solve(&blocks, c)).collect();
        let mut cap = DMatrix::identity(r, r);
        for a in 0..r {
            for b in 0..r {
                cap[(a, b)] += v[a].dot(&binv_v[b]);
            }
        }
        let cap = (&cap + cap.transpose()) * 0.5;
        let capacitance = robust_cholesky(cap)?;
        Some(Factored::Woodbury { blocks, binv_v, capacitance })
    }

    fn apply(&self, f: &Factored, rhs: &DVector<f64>) -> DVector<f64> {
        match f {
            Factored::Dense(c) => c.solve(rhs),
            Factored::Woodbury { blocks, binv_v, capacitance } => {
                let y = self.block_solve(blocks, rhs);
                let vt_y = DVector::from_iterator(self.lowrank.len(), self.lowrank.iter().map(|c| {
                    c.iter().zip(y.iter()).map(|(a, b)| a * b).sum::<f64>()
                }));
                let z = capacitance.solve(&vt_y);
                let mut x = y;
                for (k, col) in binv_v.iter().enumerate() {
                    x.axpy(-z[k], col, 1.0);
                }
                x
            }
        }
    }

    /// Factors `H` once and solves for every right-hand side with two steps of
    /// iterative refinement.
    pub fn solve_many(&self, rhs: &[DVector<f64>]) -> Option<Vec<DVector<f64>>> {
        let f = self.factor()?;
        let mut out = Vec::with_capacity(rhs.len());
        for r in rhs {
            let mut x = self.apply(&f, r);
            for _ in 0..2 {
                let res = r - self.mul(&x);
                x += self.apply(&f, &res);
            }
            if x.iter().any(|v| !v.is_finite()) {
                return None;
            }
            out.push(x);
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn woodbury_matches_dense() {
        let mut problem = ConvexProblem::new();
        problem.add_vector(200, 4, None, None);
        problem.add_vector(30, 0, None, None);
        let layout = Layout::new(&problem);
        let mut sys = NewtonSystem::new(&layout);
        let mut rng = crate::channel::seeded_rng(4, 0);
        for i in 0..230 {
            sys.add_diag(i, 0.5 + rng.random::<f64>());
        }
        for g in 0..50 {
            let u = SparseVec::from_dense(4 * g, &[rng.random(), rng.random(), rng.random(), rng.random()]);
            sys.add_factor(&u, 2.0);
        }
        for _ in 0..5 {
            let vals: Vec<f64> = (0..230).map(|_| rng.random::<f64>() - 0.5).collect();
            sys.add_factor(&SparseVec::from_dense(0, &vals), 3.0);
        }
        assert_eq!(sys.lowrank.len(), 5);
        let rhs = DVector::from_fn(230, |i, _| (i as f64).sin());
        let x = sys.solve_many(std::slice::from_ref(&rhs)).unwrap().remove(0);
        let dense = sys.dense().cholesky().unwrap().solve(&rhs);
        assert!((x - dense).norm() < 1e-9 * rhs.norm());
    }
}
