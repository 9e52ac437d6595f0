//! Scalar abstraction shared by every module.

use nalgebra as na;
use num_traits as nt;
use std::fmt;

/// Real floating point type the whole library is generic over.
pub trait Real:
    na::RealField
    + Copy
    + nt::FloatConst
    + nt::FromPrimitive
    + nt::ToPrimitive
    + fmt::Display
    + rustfft::FftNum
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("integer not representable")
    }

    fn from_i64_lossy(n: i64) -> Self {
        Self::from_i64(n).expect("integer not representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Vector<T> = na::DVector<T>;
pub type Matrix<T> = na::DMatrix<T>;

/// Largest absolute entry of a vector, zero for empty input.
pub fn sup_norm<T: Real>(v: &Vector<T>) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

pub fn sup_norm_mat<T: Real>(m: &Matrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}
