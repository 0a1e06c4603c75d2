//! Smooth convex function families understood by the solver.
//!
//! Each function exposes its value, a sparse gradient and a list of PSD
//! curvature factors `u_i` with `Hessian = sum_i u_i u_i^T`. Expressing every
//! Hessian as a sum of outer products lets the Newton system keep its sparse
//! block plus low-rank structure.

/// Sparse real vector; duplicate indices are summed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVec {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl SparseVec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_dense(offset: usize, values: &[f64]) -> Self {
        Self { idx: (offset..offset + values.len()).collect(), val: values.to_vec() }
    }

    pub fn unit(i: usize, value: f64) -> Self {
        Self { idx: vec![i], val: vec![value] }
    }

    pub fn push(&mut self, i: usize, v: f64) {
        self.idx.push(i);
        self.val.push(v);
    }

    pub fn extend_scaled(&mut self, other: &SparseVec, scale: f64) {
        self.idx.extend_from_slice(&other.idx);
        self.val.extend(other.val.iter().map(|v| v * scale));
    }

    pub fn scaled(&self, scale: f64) -> Self {
        Self { idx: self.idx.clone(), val: self.val.iter().map(|v| v * scale).collect() }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.idx.iter().zip(&self.val).map(|(i, v)| v * x[*i]).sum()
    }

    /// `out += scale * self`.
    pub fn scatter(&self, scale: f64, out: &mut [f64]) {
        for (i, v) in self.idx.iter().zip(&self.val) {
            out[*i] += scale * v;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }
}

/// Affine scalar map `a^T x + c`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Affine {
    pub a: SparseVec,
    pub c: f64,
}

impl Affine {
    pub fn new(a: SparseVec, c: f64) -> Self {
        Self { a, c }
    }

    pub fn constant(c: f64) -> Self {
        Self { a: SparseVec::new(), c }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.a.dot(x) + self.c
    }
}

/// The convex function families used by the subproblems.
#[derive(Debug, Clone, PartialEq)]
pub enum Func {
    /// `a^T x + c`.
    Affine(Affine),
    /// `sum_i -w_i ln(a_i^T x + c_i) + linear(x)` with `w_i >= 0`.
    NegLogSum { terms: Vec<(f64, Affine)>, linear: Affine },
    /// `sum_i (a_i^T x + c_i)^2 + linear(x)`.
    QuadSum { terms: Vec<Affine>, linear: Affine },
}

impl Func {
    pub fn is_affine(&self) -> bool {
        matches!(self, Func::Affine(_))
    }

    /// Function value; `+inf` outside the domain of a logarithm.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Func::Affine(f) => f.eval(x),
            Func::NegLogSum { terms, linear } => {
                let mut acc = linear.eval(x);
                for (w, t) in terms {
                    let arg = t.eval(x);
                    if !(arg > 0.0) {
                        return f64::INFINITY;
                    }
                    acc -= w * arg.ln();
                }
                acc
            }
            Func::QuadSum { terms, linear } => {
                terms.iter().map(|t| t.eval(x).powi(2)).sum::<f64>() + linear.eval(x)
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> SparseVec {
        match self {
            Func::Affine(f) => f.a.clone(),
            Func::NegLogSum { terms, linear } => {
                let mut g = linear.a.clone();
                for (w, t) in terms {
                    g.extend_scaled(&t.a, -w / t.eval(x));
                }
                g
            }
            Func::QuadSum { terms, linear } => {
                let mut g = linear.a.clone();
                for t in terms {
                    g.extend_scaled(&t.a, 2.0 * t.eval(x));
                }
                g
            }
        }
    }

    /// Factors `u_i` with `Hessian = sum_i u_i u_i^T`.
    pub fn curvature(&self, x: &[f64]) -> Vec<SparseVec> {
        match self {
            Func::Affine(_) => Vec::new(),
            Func::NegLogSum { terms, .. } => {
                terms.iter().map(|(w, t)| t.a.scaled(w.sqrt() / t.eval(x))).collect()
            }
            Func::QuadSum { terms, .. } => {
                terms.iter().map(|t| t.a.scaled(std::f64::consts::SQRT_2)).collect()
            }
        }
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_index(&self) -> Option<usize> {
        let lin = |a: &Affine| a.a.idx.iter().copied().max();
        match self {
            Func::Affine(f) => lin(f),
            Func::NegLogSum { terms, linear } => {
                terms.iter().filter_map(|(_, t)| lin(t)).chain(lin(linear)).max()
            }
            Func::QuadSum { terms, linear } => terms.iter().filter_map(lin).chain(lin(linear)).max(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dense_grad(f: &Func, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        f.gradient(x).scatter(1.0, &mut g);
        g
    }

    fn dense_hess(f: &Func, x: &[f64]) -> Vec<Vec<f64>> {
        let n = x.len();
        let mut h = vec![vec![0.0; n]; n];
        for u in f.curvature(x) {
            for (i, a) in u.idx.iter().zip(&u.val) {
                for (j, b) in u.idx.iter().zip(&u.val) {
                    h[*i][*j] += a * b;
                }
            }
        }
        h
    }

    fn check(f: &Func, x: &[f64]) {
        let g = dense_grad(f, x);
        let h = dense_hess(f, x);
        let step = 1e-6;
        for i in 0..x.len() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += step;
            xm[i] -= step;
            assert_relative_eq!((f.value(&xp) - f.value(&xm)) / (2.0 * step), g[i], max_relative = 1e-6, epsilon = 1e-8);
            let (gp, gm) = (dense_grad(f, &xp), dense_grad(f, &xm));
            for j in 0..x.len() {
                assert_relative_eq!((gp[j] - gm[j]) / (2.0 * step), h[j][i], max_relative = 1e-5, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn oracles_match_finite_differences() {
        let a1 = Affine::new(SparseVec { idx: vec![0, 2, 0], val: vec![1.0, -0.5, 0.25] }, 2.0);
        let a2 = Affine::new(SparseVec::from_dense(0, &[0.3, 0.7, 0.1]), 0.5);
        let lin = Affine::new(SparseVec::unit(1, 0.4), 0.0);
        let x = [0.3, -0.2, 0.8];
        check(&Func::Affine(a1.clone()), &x);
        check(&Func::NegLogSum { terms: vec![(1.0, a1.clone()), (2.5, a2.clone())], linear: lin.clone() }, &x);
        check(&Func::QuadSum { terms: vec![a1, a2], linear: lin }, &x);
    }

    #[test]
    fn log_domain_is_enforced() {
        let f = Func::NegLogSum { terms: vec![(1.0, Affine::new(SparseVec::unit(0, 1.0), 0.0))], linear: Affine::default() };
        assert_eq!(f.value(&[-1.0]), f64::INFINITY);
        assert_relative_eq!(f.value(&[2.0]), -(2f64.ln()));
    }
}
