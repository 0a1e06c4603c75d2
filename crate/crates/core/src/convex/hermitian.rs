//! Real isometry for Hermitian matrices.
//!
//! A `d x d` Hermitian matrix maps to `d^2` reals: the `d` diagonal entries
//! followed by `(sqrt2 Re X_ij, sqrt2 Im X_ij)` for every `i < j` in row-major
//! order. Under this map `Tr(X Y) = iso(X) . iso(Y)`.

use nalgebra::{Cholesky, Complex, DMatrix};

use crate::scalar::CMatrix;

/// Number of real coordinates for a `d x d` Hermitian block.
pub fn iso_len(dim: usize) -> usize {
    dim * dim
}

/// Writes `iso(x)` into `out`, which must have `dim^2` entries.
pub fn to_iso(x: &CMatrix<f64>, out: &mut [f64]) {
    let d = x.nrows();
    let s2 = std::f64::consts::SQRT_2;
    for i in 0..d {
        out[i] = x[(i, i)].re;
    }
    let mut p = d;
    for i in 0..d {
        for j in i + 1..d {
            out[p] = s2 * x[(i, j)].re;
            out[p + 1] = s2 * x[(i, j)].im;
            p += 2;
        }
    }
}

pub fn iso(x: &CMatrix<f64>) -> Vec<f64> {
    let mut out = vec![0.0; iso_len(x.nrows())];
    to_iso(x, &mut out);
    out
}

/// Inverse of [`to_iso`].
pub fn from_iso(v: &[f64], dim: usize) -> CMatrix<f64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut x = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        x[(i, i)] = Complex::new(v[i], 0.0);
    }
    let mut p = dim;
    for i in 0..dim {
        for j in i + 1..dim {
            let z = Complex::new(v[p] * h, v[p + 1] * h);
            x[(i, j)] = z;
            x[(j, i)] = z.conj();
            p += 2;
        }
    }
    x
}

/// Coordinates of `I` (so `Tr(X) = iso(I) . iso(X)`).
pub fn identity_iso(dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; iso_len(dim)];
    v[..dim].iter_mut().for_each(|x| *x = 1.0);
    v
}

/// Basis matrix of coordinate `a` as a list of `(row, col, value)` entries.
fn basis(dim: usize, a: usize) -> Vec<(usize, usize, Complex<f64>)> {
    if a < dim {
        return vec![(a, a, Complex::new(1.0, 0.0))];
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut p = dim;
    for i in 0..dim {
        for j in i + 1..dim {
            if p == a {
                return vec![(i, j, Complex::new(h, 0.0)), (j, i, Complex::new(h, 0.0))];
            }
            if p + 1 == a {
                return vec![(i, j, Complex::new(0.0, h)), (j, i, Complex::new(0.0, -h))];
            }
            p += 2;
        }
    }
    unreachable!("coordinate {a} out of range for dimension {dim}")
}

/// Value, gradient and Hessian of `-log det X` in isometry coordinates.
pub struct LogDet {
    pub value: f64,
    pub inverse: CMatrix<f64>,
}

impl LogDet {
    /// Returns `None` when `x` is not positive definite.
    pub fn new(x: &CMatrix<f64>) -> Option<Self> {
        let chol = Cholesky::new(x.clone())?;
        let l = chol.l_dirty();
        let mut logdet = 0.0;
        for i in 0..x.nrows() {
            // Complex square roots of negative pivots come back nearly imaginary.
            let d = l[(i, i)].re;
            if !(d > 0.0) || !d.is_finite() || l[(i, i)].im.abs() > 1e-12 * d {
                return None;
            }
            logdet += 2.0 * d.ln();
        }
        Some(Self { value: -logdet, inverse: chol.inverse() })
    }

    /// Gradient `-iso(X^{-1})`.
    pub fn gradient(&self) -> Vec<f64> {
        iso(&self.inverse).into_iter().map(|v| -v).collect()
    }

    /// Hessian `H_ab = Tr(X^{-1} E_a X^{-1} E_b)`.
    pub fn hessian(&self) -> DMatrix<f64> {
        let d = self.inverse.nrows();
        let n = iso_len(d);
        let z = &self.inverse;
        let mut h = DMatrix::zeros(n, n);
        let mut y = DMatrix::<Complex<f64>>::zeros(d, d);
        let mut col = vec![0.0; n];
        for a in 0..n {
            y.fill(Complex::new(0.0, 0.0));
            // X^{-1} E_a X^{-1} = sum c z_p z_q^H over the entries of E_a.
            for (p, q, c) in basis(d, a) {
                for r in 0..d {
                    let zr = z[(r, p)] * c;
                    for s in 0..d {
                        y[(r, s)] += zr * z[(q, s)];
                    }
                }
            }
            to_iso(&y, &mut col);
            h.column_mut(a).copy_from_slice(&col);
        }
        h
    }
}
