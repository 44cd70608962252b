//! Scalar abstraction shared by every numerical module.
//!
//! All physics code is written against [`Real`] so the same routines run in
//! `f32` (quick exploratory sweeps) and `f64` (production runs, acceptance).

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, Signed, ToPrimitive};

/// Real floating-point scalar used throughout the crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Signed
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal; infallible for every implementor.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type Cplx<T> = Complex<T>;

#[inline]
pub(crate) fn cplx<T: Real>(re: T, im: T) -> Cplx<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn real<T: Real>(re: T) -> Cplx<T> {
    Complex::new(re, T::zero())
}

#[inline]
pub(crate) fn is_finite_c<T: Real>(z: &Cplx<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// `-i`, the prefactor of the Schrödinger generator.
#[inline]
pub(crate) fn minus_i<T: Real>() -> Cplx<T> {
    Complex::new(T::zero(), -T::one())
}

/// Euclidean norm of a complex vector, computed with scaling to avoid overflow.
pub fn vec_norm<T: Real>(v: &[Cplx<T>]) -> T {
    let scale = v.iter().map(|z| z.re.abs().max(z.im.abs())).fold(T::zero(), T::max);
    if scale == T::zero() {
        return T::zero();
    }
    let sum: T = v
        .iter()
        .map(|z| {
            let (a, b) = (z.re / scale, z.im / scale);
            a * a + b * b
        })
        .sum();
    scale * sum.sqrt()
}

/// `⟨a|b⟩` with the first argument conjugated.
pub fn inner<T: Real>(a: &[Cplx<T>], b: &[Cplx<T>]) -> Cplx<T> {
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

/// `ln(n!)` as a sum of logarithms; exact enough for the factorial ratios
/// entering Bethe-state normalizations (n up to a few hundred).
pub fn ln_factorial<T: Real>(n: usize) -> T {
    (2..=n).map(|k| T::from_usize_exact(k).ln()).sum()
}
