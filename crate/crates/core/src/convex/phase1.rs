//! Phase-1 search for a strictly feasible point.
//!
//! With a margin variable `s`, every inequality becomes `g(x) - s <= 0`,
//! every bound is shifted by `s`, and each PSD block `X` is written as
//! `Y - s I` with `Y` PSD. Minimizing `s` over that problem (with `s >= -1`)
//! yields a strictly feasible `x` as soon as `s < 0`.

use nalgebra::{DMatrix, DVector};

use super::barrier::Barrier;
use super::functions::{Affine, Func, SparseVec};
use super::{Block, ConvexProblem, SolveParams};
use crate::error::{Error, Result};

/// Phase 1 stops early once every constraint holds with this margin.
const COMFORTABLE_MARGIN: f64 = 0.1;

pub(crate) fn is_interior(problem: &ConvexProblem, x: &[f64]) -> bool {
    let scale = problem.equalities.as_ref().map_or(1.0, |(_, b)| b.amax().max(1.0));
    problem.margin(x) > 0.0
        && problem.equality_residual(x) <= 1e-9 * scale
        && problem.objective.value(x) < f64::INFINITY
}

fn default_point(problem: &ConvexProblem) -> Vec<f64> {
    let mut x = vec![0.0; problem.dim()];
    for (block, &o) in problem.blocks().iter().zip(problem.offsets()) {
        match block {
            Block::Hermitian { dim } => x[o..o + dim].iter_mut().for_each(|v| *v = 1.0),
            Block::Vector { len, lower, upper, .. } => {
                for i in 0..*len {
                    let l = lower.as_ref().map_or(f64::NEG_INFINITY, |l| l[i]);
                    let u = upper.as_ref().map_or(f64::INFINITY, |u| u[i]);
                    x[o + i] = match (l.is_finite(), u.is_finite()) {
                        (true, true) => 0.5 * (l + u),
                        (true, false) => l + 1.0,
                        (false, true) => u - 1.0,
                        (false, false) => 0.0,
                    };
                }
            }
        }
    }
    x
}

/// Coordinates that carry the diagonal of a Hermitian block.
fn hermitian_diagonal(problem: &ConvexProblem) -> Vec<bool> {
    let mut diag = vec![false; problem.dim()];
    for (block, &o) in problem.blocks().iter().zip(problem.offsets()) {
        if let Block::Hermitian { dim } = block {
            diag[o..o + dim].iter_mut().for_each(|v| *v = true);
        }
    }
    diag
}

/// Rewrites `a^T x + c` in terms of `(y, s)` with `x = y - s * iso(I)`.
fn lift(f: &Affine, diag: &[bool], s: usize, extra_s: f64) -> Affine {
    let mut a = f.a.clone();
    let shift: f64 = f.a.idx.iter().zip(&f.a.val).filter(|(i, _)| diag[**i]).map(|(_, v)| *v).sum();
    a.push(s, -shift + extra_s);
    Affine::new(a, f.c)
}

fn lift_func(f: &Func, diag: &[bool], s: usize, extra_s: f64) -> Func {
    match f {
        Func::Affine(a) => Func::Affine(lift(a, diag, s, extra_s)),
        Func::NegLogSum { terms, linear } => Func::NegLogSum {
            terms: terms.iter().map(|(w, t)| (*w, lift(t, diag, s, 0.0))).collect(),
            linear: lift(linear, diag, s, extra_s),
        },
        Func::QuadSum { terms, linear } => Func::QuadSum {
            terms: terms.iter().map(|t| lift(t, diag, s, 0.0)).collect(),
            linear: lift(linear, diag, s, extra_s),
        },
    }
}

/// Projects `x` onto `A x = b` in the least-squares sense.
fn project_equalities(problem: &ConvexProblem, x: &mut [f64]) -> Result<()> {
    if let Some((a, b)) = &problem.equalities {
        if a.nrows() == 0 {
            return Ok(());
        }
        let res = b - a * DVector::from_column_slice(x);
        let dx = a
            .clone()
            .svd(true, true)
            .solve(&res, 1e-12)
            .map_err(|e| Error::Domain(format!("equality projection failed: {e}")))?;
        x.iter_mut().zip(dx.iter()).for_each(|(v, d)| *v += d);
    }
    Ok(())
}

/// Returns a point satisfying every inequality strictly and the equalities
/// to `1e-9`, or [`Error::Infeasible`] when the strict interior is empty.
pub fn phase1_feasible(problem: &ConvexProblem) -> Result<Vec<f64>> {
    problem.validate()?;
    let mut x0 = problem.start.clone().unwrap_or_else(|| default_point(problem));
    project_equalities(problem, &mut x0)?;
    if is_interior(problem, &x0) {
        return Ok(x0);
    }

    let n = problem.dim();
    let diag = hermitian_diagonal(problem);
    let mut q = ConvexProblem::new();
    for block in problem.blocks() {
        match block {
            Block::Hermitian { dim } => q.add_hermitian(*dim),
            Block::Vector { len, group, .. } => q.add_vector(*len, *group, None, None),
        };
    }
    let s = q.add_vector(1, 0, Some(vec![-1.0]), None);
    q.objective = Func::Affine(Affine::new(SparseVec::unit(s, 1.0), 0.0));

    let mut worst = f64::NEG_INFINITY;
    for c in &problem.inequalities {
        let g = c.func.value(&x0);
        if !g.is_finite() {
            return Err(Error::Infeasible(format!("constraint {} is undefined at the phase-1 seed", c.name)));
        }
        worst = worst.max(g);
        q.add_inequality(c.name.clone(), lift_func(&c.func, &diag, s, -1.0));
    }
    for (i, v, lower) in problem.bounds() {
        // lower: v - x - s <= 0, upper: x - v - s <= 0
        let sign = if lower { -1.0 } else { 1.0 };
        let f = Affine::new(SparseVec::unit(i, sign), -sign * v);
        worst = worst.max(f.eval(&x0));
        q.add_inequality(format!("bound x{i}"), Func::Affine(lift(&f, &diag, s, -1.0)));
    }
    for b in 0..problem.blocks().len() {
        if let Some(w) = problem.hermitian_block(&x0, b) {
            worst = worst.max(-nalgebra::SymmetricEigen::new(w).eigenvalues.min());
        }
    }
    if let Some((a, rhs)) = &problem.equalities {
        let shift: DVector<f64> = DVector::from_iterator(
            a.nrows(),
            a.row_iter().map(|r| -r.iter().zip(&diag).filter(|(_, d)| **d).map(|(v, _)| *v).sum::<f64>()),
        );
        let mut aq = DMatrix::zeros(a.nrows(), n + 1);
        aq.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        aq.set_column(n, &shift);
        q.equalities = Some((aq, rhs.clone()));
    }

    let s0 = worst.max(-1.0) + 1.0;
    let mut start = x0.clone();
    start.iter_mut().zip(&diag).filter(|(_, d)| **d).for_each(|(v, _)| *v += s0);
    start.push(s0);

    let mut barrier = Barrier::new(&q);
    barrier.early_stop = Some((s, -COMFORTABLE_MARGIN));
    let params = SolveParams { tol: 1e-9, ..SolveParams::default() };
    let result = barrier.run(start, &params);
    let s_star = result.x[s];
    let mut x: Vec<f64> = result.x[..n].to_vec();
    x.iter_mut().zip(&diag).filter(|(_, d)| **d).for_each(|(v, _)| *v -= s_star);
    if s_star < 0.0 && is_interior(problem, &x) {
        Ok(x)
    } else {
        Err(Error::Infeasible(format!("phase 1 ended with margin {:.3e}", -s_star)))
    }
}
