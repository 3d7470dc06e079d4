use std::ops::{Add, Div, Mul, Neg, Sub};

use super::scalar::{Scalar, FRAC_2_SQRT_PI};
use super::AdError;

/// Second-order truncated Taylor number along one direction.
///
/// `v` is the value, `d1` the first and `d2` the second directional
/// derivative. Products follow `(ab)'' = a''b + 2a'b' + ab''`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2<T = f64> {
    pub v: T,
    pub d1: T,
    pub d2: T,
}

impl<T: Scalar> Jet2<T> {
    pub fn new(v: T, d1: T, d2: T) -> Self {
        Self { v, d1, d2 }
    }

    /// Apply a scalar function given its value and first two derivatives at `self.v`.
    #[inline]
    pub fn chain(self, f0: T, f1: T, f2: T) -> Self {
        Self {
            v: f0,
            d1: f1 * self.d1,
            d2: f2 * self.d1 * self.d1 + f1 * self.d2,
        }
    }

    /// Product with a parameter-independent jet (e.g. a window function).
    #[inline]
    pub fn scale(self, w: Jet2<f64>) -> Self {
        Self {
            v: self.v * w.v,
            d1: self.d1 * w.v + self.v * w.d1,
            d2: self.d2 * w.v + self.d1 * (2.0 * w.d1) + self.v * w.d2,
        }
    }

    /// `self + w` with a parameter-independent jet.
    #[inline]
    pub fn add_const(self, w: Jet2<f64>) -> Self {
        Self {
            v: self.v + w.v,
            d1: self.d1 + w.d1,
            d2: self.d2 + w.d2,
        }
    }

    /// A scalar (constant along the direction) times a constant jet.
    #[inline]
    pub fn from_scalar_times(s: T, w: Jet2<f64>) -> Self {
        Self {
            v: s * w.v,
            d1: s * w.d1,
            d2: s * w.d2,
        }
    }

    pub fn value(&self) -> f64 {
        self.v.value()
    }

    pub fn values(&self) -> Jet2<f64> {
        Jet2 {
            v: self.v.value(),
            d1: self.d1.value(),
            d2: self.d2.value(),
        }
    }

    pub fn tanh(self) -> Self {
        let t = self.v.tanh();
        let s = -(t * t) + 1.0;
        self.chain(t, s, t * s * -2.0)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn erf(self) -> Self {
        let x = self.v;
        let g = (-(x * x)).exp() * FRAC_2_SQRT_PI;
        self.chain(x.erf(), g, x * g * -2.0)
    }

    pub fn sigmoid(self) -> Self {
        let s = self.v.sigmoid();
        let s1 = s * (-s + 1.0);
        self.chain(s, s1, s1 * (s * -2.0 + 1.0))
    }

    pub fn powi(self, n: i32) -> Self {
        let x = self.v;
        let zero = x.lift(0.0);
        let f1 = if n == 0 { zero } else { x.powi(n - 1) * n as f64 };
        let f2 = if n == 0 || n == 1 {
            zero
        } else {
            x.powi(n - 2) * (n * (n - 1)) as f64
        };
        self.chain(x.powi(n), f1, f2)
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, s.lift(0.5) / s, s.lift(-0.25) / (s * s * s))
    }

    pub fn square(self) -> Self {
        self * self
    }

    /// `|x|`. Fails at exactly zero when the jet carries a nonzero
    /// derivative, since the kink has no second derivative there.
    pub fn abs(self) -> Result<Self, AdError> {
        let x = self.v.value();
        if x == 0.0 {
            if self.d1.value() != 0.0 || self.d2.value() != 0.0 {
                return Err(AdError::AbsKink);
            }
            return Ok(self);
        }
        Ok(if x > 0.0 { self } else { -self })
    }

    pub fn checked_div(self, rhs: Self) -> Result<Self, AdError> {
        if rhs.v.value() == 0.0 {
            return Err(AdError::DivisionByZero {
                numerator: self.v.value(),
            });
        }
        Ok(self / rhs)
    }
}

impl Jet2<f64> {
    pub const ZERO: Jet2<f64> = Jet2 {
        v: 0.0,
        d1: 0.0,
        d2: 0.0,
    };

    pub fn constant(c: f64) -> Self {
        Self {
            v: c,
            d1: 0.0,
            d2: 0.0,
        }
    }

    /// The active coordinate: derivative 1 along the direction.
    pub fn variable(x: f64) -> Self {
        Self {
            v: x,
            d1: 1.0,
            d2: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.v == 0.0 && self.d1 == 0.0 && self.d2 == 0.0
    }

    /// `atan2(y, x)` with both arguments carried as jets.
    pub fn atan2(y: Self, x: Self) -> Self {
        let r2 = x.v * x.v + y.v * y.v;
        let num = x.v * y.d1 - y.v * x.d1;
        let num_d = x.v * y.d2 - y.v * x.d2;
        let r2_d = 2.0 * (x.v * x.d1 + y.v * y.d1);
        Self {
            v: y.v.atan2(x.v),
            d1: num / r2,
            d2: (num_d * r2 - num * r2_d) / (r2 * r2),
        }
    }
}

impl<T: Scalar> Add for Jet2<T> {
    type Output = Self;
    #[inline]
    fn add(self, r: Self) -> Self {
        Self {
            v: self.v + r.v,
            d1: self.d1 + r.d1,
            d2: self.d2 + r.d2,
        }
    }
}

impl<T: Scalar> Sub for Jet2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, r: Self) -> Self {
        Self {
            v: self.v - r.v,
            d1: self.d1 - r.d1,
            d2: self.d2 - r.d2,
        }
    }
}

impl<T: Scalar> Mul for Jet2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, r: Self) -> Self {
        Self {
            v: self.v * r.v,
            d1: self.d1 * r.v + self.v * r.d1,
            d2: self.d2 * r.v + (self.d1 * r.d1) * 2.0 + self.v * r.d2,
        }
    }
}

impl<T: Scalar> Div for Jet2<T> {
    type Output = Self;
    #[inline]
    fn div(self, r: Self) -> Self {
        // q = a / b;  q' = (a' - q b') / b;  q'' = (a'' - 2 q' b' - q b'') / b
        let v = self.v / r.v;
        let d1 = (self.d1 - v * r.d1) / r.v;
        let d2 = (self.d2 - d1 * r.d1 * 2.0 - v * r.d2) / r.v;
        Self { v, d1, d2 }
    }
}

impl<T: Scalar> Neg for Jet2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self {
            v: -self.v,
            d1: -self.d1,
            d2: -self.d2,
        }
    }
}

impl<T: Scalar> Add<f64> for Jet2<T> {
    type Output = Self;
    #[inline]
    fn add(self, r: f64) -> Self {
        Self {
            v: self.v + r,
            ..self
        }
    }
}

impl<T: Scalar> Sub<f64> for Jet2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, r: f64) -> Self {
        Self {
            v: self.v - r,
            ..self
        }
    }
}

impl<T: Scalar> Mul<f64> for Jet2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, r: f64) -> Self {
        Self {
            v: self.v * r,
            d1: self.d1 * r,
            d2: self.d2 * r,
        }
    }
}

impl<T: Scalar> Div<f64> for Jet2<T> {
    type Output = Self;
    #[inline]
    fn div(self, r: f64) -> Self {
        self * (1.0 / r)
    }
}

/// Value, first and second derivative of `f` at `x0` along coordinate `axis`.
///
/// `f` receives one jet per coordinate; the active coordinate is seeded with
/// derivative one and every other coordinate is constant.
pub fn jet2_eval<F>(f: F, x0: &[f64], axis: usize) -> Result<Jet2<f64>, AdError>
where
    F: FnOnce(&[Jet2<f64>]) -> Result<Jet2<f64>, AdError>,
{
    if axis >= x0.len() {
        return Err(AdError::Axis {
            axis,
            dim: x0.len(),
        });
    }
    let args: Vec<Jet2<f64>> = x0
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if i == axis {
                Jet2::variable(x)
            } else {
                Jet2::constant(x)
            }
        })
        .collect();
    let out = f(&args)?;
    if !(out.v.is_finite() && out.d1.is_finite() && out.d2.is_finite()) {
        return Err(AdError::NonFinite { value: out.v });
    }
    Ok(out)
}
