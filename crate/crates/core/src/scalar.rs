//! Scalar abstraction shared by every numeric module.
//!
//! All channel, evaluation and solver code is written against [`Real`], which
//! is implemented for `f32` and `f64`. The optimizers are tuned for `f64`;
//! `f32` is useful for fast evaluation of rates and power budgets.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::{Complex, DMatrix, DVector, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real field used throughout the crate.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over `T`.
pub type Cx<T> = Complex<T>;
/// Dense complex column vector.
pub type CVector<T> = DVector<Complex<T>>;
/// Dense complex matrix.
pub type CMatrix<T> = DMatrix<Complex<T>>;

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Lossy conversion back to `f64` for reporting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Positive infinity in `T`.
#[inline]
pub fn infinity<T: Real>() -> T {
    lit(f64::INFINITY)
}

/// `log2(x)`.
#[inline]
pub fn log2<T: Real>(x: T) -> T {
    x.ln() / T::ln_2()
}

/// Unit-modulus complex number `e^{j theta}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// `|z|^2`.
#[inline]
pub fn abs2<T: Real>(z: Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}

/// `a^H b` for complex vectors.
pub fn inner<T: Real>(a: &CVector<T>, b: &CVector<T>) -> Complex<T> {
    a.iter()
        .zip(b.iter())
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

/// Squared Euclidean norm of a complex vector.
pub fn norm2<T: Real>(a: &CVector<T>) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + abs2(*z))
}

/// Outer product `a a^H`.
pub fn outer<T: Real>(a: &CVector<T>) -> CMatrix<T> {
    a * a.adjoint()
}
