//! Scalar abstraction shared by every module.

use nalgebra as na;
use num_complex::Complex;

/// Real floating type the solvers are generic over (`f32` or `f64`).
///
/// `rustfft::FftNum` drags in `num_traits::Signed`, so plain `x.abs()` is
/// ambiguous on a bare `T`; use [`Real::mag`] instead.
pub trait Real:
    na::RealField + Copy + num_traits::FromPrimitive + rustfft::FftNum + std::fmt::Display
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("f64 conversion")
    }
    #[inline]
    fn of_usize(n: usize) -> Self {
        <Self as num_traits::FromPrimitive>::from_usize(n).expect("usize conversion")
    }
    #[inline]
    fn mag(self) -> Self {
        na::ComplexField::abs(self)
    }
    #[inline]
    fn to_f64(self) -> f64 {
        na::try_convert::<Self, f64>(self).unwrap_or(f64::NAN)
    }
    /// Machine epsilon.
    #[inline]
    fn eps() -> Self {
        Self::default_epsilon()
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Cx<T> = Complex<T>;
pub type CMat<T> = na::DMatrix<Complex<T>>;
pub type CVec<T> = na::DVector<Complex<T>>;
pub type RMat<T> = na::DMatrix<T>;

#[inline]
pub fn cx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// |z| without the `Float` bound that `Complex::norm` needs.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    na::ComplexField::modulus(z)
}

#[inline]
pub fn cexp<T: Real>(z: Complex<T>) -> Complex<T> {
    let m = z.re.exp();
    Complex::new(m * z.im.cos(), m * z.im.sin())
}

/// Euclidean norm of a complex vector slice.
pub fn vnorm<T: Real>(v: &[Complex<T>]) -> T {
    let mut s = T::zero();
    for z in v {
        s += z.norm_sqr();
    }
    s.sqrt()
}

/// Relative 2-norm distance `||a-b|| / ||b||` (absolute when `b` vanishes).
pub fn rel_err<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    assert_eq!(a.len(), b.len(), "length mismatch");
    let mut d = T::zero();
    let mut n = T::zero();
    for (x, y) in a.iter().zip(b) {
        d += (x - y).norm_sqr();
        n += y.norm_sqr();
    }
    if n > T::zero() {
        (d / n).sqrt()
    } else {
        d.sqrt()
    }
}

/// Max-abs entry of a matrix.
pub fn max_abs<T: Real>(a: &CMat<T>) -> T {
    a.iter().fold(T::zero(), |m, z| {
        let v = cabs(*z);
        if v > m {
            v
        } else {
            m
        }
    })
}

pub fn real_to_c<T: Real>(a: &RMat<T>) -> CMat<T> {
    a.map(re)
}

/// True when every imaginary part is exactly zero.
pub fn is_real<T: Real>(a: &CMat<T>) -> bool {
    a.iter().all(|z| z.im == T::zero())
}
