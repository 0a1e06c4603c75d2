//! Log-barrier method with damped Newton centering.

use nalgebra::{DMatrix, DVector};

use super::functions::Func;
use super::hermitian::LogDet;
use super::kkt::{Layout, NewtonSystem};
use super::{phase1, Block, ConvexProblem, SolveParams, SolveResult, Status, TraceEntry};

/// Centering stops once half the squared Newton decrement drops below this.
const CENTERING_TOL: f64 = 1e-9;

pub(crate) struct Barrier<'a> {
    problem: &'a ConvexProblem,
    bounds: Vec<(usize, f64, bool)>,
    hermitian: Vec<(usize, usize)>,
    layout: Layout,
    /// Stop as soon as `x[i] <= v` (phase-1 shortcut).
    pub early_stop: Option<(usize, f64)>,
}

impl<'a> Barrier<'a> {
    pub fn new(problem: &'a ConvexProblem) -> Self {
        let hermitian = problem
            .blocks()
            .iter()
            .zip(problem.offsets())
            .filter_map(|(b, &o)| match b {
                Block::Hermitian { dim } => Some((o, *dim)),
                _ => None,
            })
            .collect();
        Self { problem, bounds: problem.bounds(), hermitian, layout: Layout::new(problem), early_stop: None }
    }

    fn logdet(&self, x: &[f64], offset: usize, dim: usize) -> Option<LogDet> {
        LogDet::new(&super::hermitian::from_iso(&x[offset..offset + dim * dim], dim))
    }

    /// `t f(x) + phi(x)`, `+inf` outside the strict interior.
    fn value(&self, x: &[f64], t: f64) -> f64 {
        let mut v = t * self.problem.objective.value(x);
        for c in &self.problem.inequalities {
            let g = c.func.value(x);
            if !(g < 0.0) {
                return f64::INFINITY;
            }
            v -= (-g).ln();
        }
        for &(i, b, lower) in &self.bounds {
            let d = if lower { x[i] - b } else { b - x[i] };
            if !(d > 0.0) {
                return f64::INFINITY;
            }
            v -= d.ln();
        }
        for &(o, d) in &self.hermitian {
            match self.logdet(x, o, d) {
                Some(ld) => v += ld.value,
                None => return f64::INFINITY,
            }
        }
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    /// Gradient and Hessian of `t f + phi`.
    fn derivatives(&self, x: &[f64], t: f64) -> Option<(DVector<f64>, NewtonSystem<'_>)> {
        let n = x.len();
        let mut grad = vec![0.0; n];
        let mut sys = NewtonSystem::new(&self.layout);
        let obj = &self.problem.objective;
        obj.gradient(x).scatter(t, &mut grad);
        for u in obj.curvature(x) {
            sys.add_factor(&u, t);
        }
        for c in &self.problem.inequalities {
            let d = -c.func.value(x);
            if !(d > 0.0) {
                return None;
            }
            let g = c.func.gradient(x);
            g.scatter(1.0 / d, &mut grad);
            sys.add_factor(&g, 1.0 / (d * d));
            for u in c.func.curvature(x) {
                sys.add_factor(&u, 1.0 / d);
            }
        }
        for &(i, b, lower) in &self.bounds {
            let d = if lower { x[i] - b } else { b - x[i] };
            grad[i] += if lower { -1.0 / d } else { 1.0 / d };
            sys.add_diag(i, 1.0 / (d * d));
        }
        for &(o, d) in &self.hermitian {
            let ld = self.logdet(x, o, d)?;
            for (k, g) in ld.gradient().into_iter().enumerate() {
                grad[o + k] += g;
            }
            sys.add_block(o, &ld.hessian());
        }
        let grad = DVector::from_vec(grad);
        if grad.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some((grad, sys))
    }

    /// Newton direction, honoring the equality constraints.
    fn direction(&self, grad: &DVector<f64>, sys: &NewtonSystem<'_>) -> Option<DVector<f64>> {
        match &self.problem.equalities {
            Some((a, _)) if a.nrows() > 0 => {
                let mut rhs = vec![-grad];
                rhs.extend(a.row_iter().map(|r| r.transpose()));
                let sol = sys.solve_many(&rhs)?;
                let hg = &sol[0];
                let y = DMatrix::from_columns(&sol[1..]);
                let nu = (a * &y).lu().solve(&(a * hg))?;
                Some(hg - y * nu)
            }
            _ => sys.solve_many(&[-grad]).map(|mut v| v.remove(0)),
        }
    }

    /// Largest step keeping bounds and affine inequalities strictly feasible.
    fn max_linear_step(&self, x: &[f64], dx: &DVector<f64>) -> f64 {
        let mut s = f64::INFINITY;
        for &(i, b, lower) in &self.bounds {
            let (gap, rate) = if lower { (x[i] - b, -dx[i]) } else { (b - x[i], dx[i]) };
            if rate > 0.0 {
                s = s.min(gap / rate);
            }
        }
        for c in &self.problem.inequalities {
            if let Func::Affine(f) = &c.func {
                let rate = f.a.dot(dx.as_slice());
                if rate > 0.0 {
                    s = s.min(-f.eval(x) / rate);
                }
            }
        }
        s
    }

    /// Minimizes `t f + phi` from `x`; returns Newton steps taken and whether
    /// the line search stalled away from the center.
    fn center(&self, x: &mut Vec<f64>, t: f64, params: &SolveParams) -> Result<(usize, bool), Status> {
        let mut value = self.value(x, t);
        for step in 0..params.max_newton {
            if let Some((i, v)) = self.early_stop {
                if x[i] <= v {
                    return Ok((step, false));
                }
            }
            let (grad, sys) = self.derivatives(x, t).ok_or(Status::NumericalFailure)?;
            let dx = self.direction(&grad, &sys).ok_or(Status::NumericalFailure)?;
            let slope = grad.dot(&dx);
            let decrement = -slope;
            if !decrement.is_finite() {
                return Err(Status::NumericalFailure);
            }
            if decrement / 2.0 <= CENTERING_TOL {
                return Ok((step, false));
            }
            let mut s = (0.99 * self.max_linear_step(x, &dx)).min(1.0);
            let mut trial = x.clone();
            loop {
                for (k, v) in trial.iter_mut().enumerate() {
                    *v = x[k] + s * dx[k];
                }
                let tv = self.value(&trial, t);
                if tv <= value + params.ls_alpha * s * slope {
                    value = tv;
                    break;
                }
                s *= params.ls_beta;
                if s < 1e-14 {
                    // No progress is possible at this precision; a small
                    // decrement means the point is centered for practical purposes.
                    let centered = decrement <= 1e-6 * value.abs().max(1.0);
                    return Ok((step, !centered));
                }
            }
            std::mem::swap(x, &mut trial);
        }
        Ok((params.max_newton, false))
    }

    fn initial_t(&self, x: &[f64], m: f64) -> f64 {
        let f0 = self.problem.objective.value(x);
        let mut gf = vec![0.0; x.len()];
        self.problem.objective.gradient(x).scatter(1.0, &mut gf);
        let gf = DVector::from_vec(gf);
        let default = m / f0.abs().max(1.0);
        let Some((g_total, _)) = self.derivatives(x, 0.0) else { return default };
        let nf = gf.norm_squared();
        if nf == 0.0 {
            return default;
        }
        let t = -gf.dot(&g_total) / nf;
        if t.is_finite() && t > 0.0 {
            t.clamp(default * 1e-3, default * 1e3)
        } else {
            default
        }
    }

    pub fn run(&self, mut x: Vec<f64>, params: &SolveParams) -> SolveResult {
        let m = self.problem.barrier_degree();
        let mut trace = Vec::new();
        let finish = |x: Vec<f64>, status: Status, gap: f64, trace: Vec<TraceEntry>| SolveResult {
            objective_value: self.problem.objective.value(&x),
            x,
            status,
            kkt_residual: gap,
            trace,
        };
        if m == 0.0 {
            let status = match self.center(&mut x, 1.0, params) {
                Ok((_, false)) => Status::Optimal,
                Ok((_, true)) | Err(_) => Status::NumericalFailure,
            };
            return finish(x, status, 0.0, trace);
        }
        let mut t = self.initial_t(&x, m);
        for _ in 0..params.max_outer {
            let (steps, stalled) = match self.center(&mut x, t, params) {
                Ok(r) => r,
                Err(status) => return finish(x, status, m / t, trace),
            };
            let objective = self.problem.objective.value(&x);
            trace.push(TraceEntry { t, newton_steps: steps, objective, gap: m / t });
            if let Some((i, v)) = self.early_stop {
                if x[i] <= v {
                    return finish(x, Status::Optimal, m / t, trace);
                }
            }
            if m / t < params.tol {
                return finish(x, Status::Optimal, m / t, trace);
            }
            if stalled {
                return finish(x, Status::NumericalFailure, m / t, trace);
            }
            t *= params.mu_factor;
        }
        finish(x, Status::MaxIter, m / t * params.mu_factor, trace)
    }
}

/// Solves a convex problem with the barrier method.
///
/// A strictly feasible `problem.start` is used as is; otherwise a phase-1
/// search supplies the starting point.
pub fn solve(problem: &ConvexProblem, params: &SolveParams) -> SolveResult {
    let infeasible = |x: Vec<f64>| SolveResult {
        objective_value: problem.objective.value(&x),
        x,
        status: Status::Infeasible,
        kkt_residual: f64::INFINITY,
        trace: Vec::new(),
    };
    if problem.validate().is_err() {
        return SolveResult {
            x: vec![0.0; problem.dim()],
            objective_value: f64::NAN,
            status: Status::NumericalFailure,
            kkt_residual: f64::INFINITY,
            trace: Vec::new(),
        };
    }
    let start = match &problem.start {
        Some(s) if phase1::is_interior(problem, s) => s.clone(),
        _ => match phase1::phase1_feasible(problem) {
            Ok(x) => x,
            Err(_) => return infeasible(problem.start.clone().unwrap_or_else(|| vec![0.0; problem.dim()])),
        },
    };
    Barrier::new(problem).run(start, params)
}
