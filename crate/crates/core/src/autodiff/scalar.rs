use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic carrier shared by plain `f64` evaluation and tape variables.
///
/// Everything an ansatz does after the network outputs (window products,
/// buffer coefficient solves, residuals) is written once against this trait
/// and instantiated either with `f64` (evaluation) or [`crate::autodiff::Var`]
/// (training, where parameter gradients are needed).
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(&self) -> f64;

    /// A constant living in the same context as `self`.
    fn lift(&self, c: f64) -> Self;

    fn tanh(self) -> Self;
    fn exp(self) -> Self;
    fn erf(self) -> Self;
    fn sigmoid(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn sqrt(self) -> Self;
    /// `|x|`; the derivative at exactly zero is taken as `0`.
    fn abs(self) -> Self;

    fn square(self) -> Self {
        self * self
    }
}

pub(crate) const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

pub(crate) fn sigmoid_f64(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Scalar for f64 {
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn lift(&self, c: f64) -> Self {
        c
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn erf(self) -> Self {
        libm::erf(self)
    }
    #[inline]
    fn sigmoid(self) -> Self {
        sigmoid_f64(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
}
