//! Compactly supported polynomial window functions.
//!
//! A window family is the minimal-degree polynomial `W(t)` on `t in [0, 1]`
//! satisfying a Hermite constraint table. The families are built at runtime
//! for any vanishing order `k`:
//!
//! | kind      | at `t = 0`                          | at `t = 1`                |
//! |-----------|-------------------------------------|---------------------------|
//! | interior  | `W = 1`, `W^(n) = 0` for `n = 1..=k` | `W = W' = 0`              |
//! | dirichlet | `W = 1`, `W' = 0`                   | `W^(n) = 0`, `n = 0..=k`  |
//! | neumann   | `W = 0`, `W' = 1`                   | `W^(n) = 0`, `n = 0..=k`  |

mod polynomial;

use serde::{Deserialize, Serialize};

pub use polynomial::Polynomial;

use crate::autodiff::Jet2;
use crate::linalg::{self, LinalgError, Matrix};
use polynomial::falling;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WindowError {
    #[error("window constraint system: {0}")]
    Construction(#[from] LinalgError),
    #[error("invalid window: {0}")]
    Invalid(String),
    #[error("window evaluated with a derivative exactly at its edge x = {x}")]
    Kink { x: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Interior,
    Dirichlet,
    Neumann,
}

/// One-sided limit selector for points sitting exactly on a window center or edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Limit from `x < p`.
    Below,
    /// Limit from `x > p`.
    Above,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Below => -1.0,
            Side::Above => 1.0,
        }
    }
}

/// `(derivative order, position, required value)` rows of a family.
fn constraints(kind: WindowKind, k: usize) -> Vec<(usize, f64, f64)> {
    let mut rows = Vec::new();
    match kind {
        WindowKind::Interior => {
            rows.push((0, 0.0, 1.0));
            rows.extend((1..=k).map(|n| (n, 0.0, 0.0)));
            rows.push((0, 1.0, 0.0));
            rows.push((1, 1.0, 0.0));
        }
        WindowKind::Dirichlet | WindowKind::Neumann => {
            let (w0, w1) = if kind == WindowKind::Dirichlet {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            };
            rows.push((0, 0.0, w0));
            rows.push((1, 0.0, w1));
            rows.extend((0..=k).map(|n| (n, 1.0, 0.0)));
        }
    }
    rows
}

/// Minimal-degree polynomial satisfying the constraint table of `kind` at order `k`.
pub fn make_window(kind: WindowKind, k: usize) -> Result<Polynomial, WindowError> {
    if k == 0 {
        return Err(WindowError::Invalid("vanishing order k must be at least 1".into()));
    }
    let rows = constraints(kind, k);
    let n = rows.len();
    let mut a = Matrix::zeros(n, n);
    let mut b = vec![0.0; n];
    for (i, &(order, t, val)) in rows.iter().enumerate() {
        for j in order..n {
            a[(i, j)] = falling(j, order) * t.powi((j - order) as i32);
        }
        b[i] = val;
    }
    Ok(Polynomial::new(linalg::solve(&a, &b)?))
}

/// Placement of a window on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub kind: WindowKind,
    pub order: usize,
    pub center: f64,
    pub half_width: f64,
    /// Sign of the outward normal at the node; only used by Neumann windows.
    pub normal_sign: f64,
}

impl WindowSpec {
    pub fn validate(&self) -> Result<(), WindowError> {
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(WindowError::Invalid(format!(
                "half width must be positive, got {}",
                self.half_width
            )));
        }
        if self.order == 0 {
            return Err(WindowError::Invalid("vanishing order k must be at least 1".into()));
        }
        if self.kind == WindowKind::Neumann && self.normal_sign.abs() != 1.0 {
            return Err(WindowError::Invalid(format!(
                "normal sign must be +1 or -1, got {}",
                self.normal_sign
            )));
        }
        Ok(())
    }
}

/// A window spec bundled with its polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub spec: WindowSpec,
    pub poly: Polynomial,
}

impl Window {
    pub fn new(spec: WindowSpec) -> Result<Self, WindowError> {
        spec.validate()?;
        let poly = make_window(spec.kind, spec.order)?;
        Ok(Self { spec, poly })
    }

    pub fn interior(k: usize, center: f64, half_width: f64) -> Result<Self, WindowError> {
        Self::new(WindowSpec {
            kind: WindowKind::Interior,
            order: k,
            center,
            half_width,
            normal_sign: 1.0,
        })
    }

    pub fn dirichlet(k: usize, center: f64, half_width: f64) -> Result<Self, WindowError> {
        Self::new(WindowSpec {
            kind: WindowKind::Dirichlet,
            order: k,
            center,
            half_width,
            normal_sign: 1.0,
        })
    }

    pub fn neumann(k: usize, center: f64, half_width: f64, normal_sign: f64) -> Result<Self, WindowError> {
        Self::new(WindowSpec {
            kind: WindowKind::Neumann,
            order: k,
            center,
            half_width,
            normal_sign,
        })
    }

    pub fn eval(&self, x: Jet2<f64>) -> Result<Jet2<f64>, WindowError> {
        eval_window(&self.spec, &self.poly, x)
    }

    pub fn eval_from(&self, x: Jet2<f64>, side: Side) -> Jet2<f64> {
        eval_window_from(&self.spec, &self.poly, x, side)
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.spec.center).abs() < self.spec.half_width
    }
}

/// Core evaluation with the sign of `x - center` (`sigma`) and whether the
/// point counts as inside the support already decided.
fn eval_signed(spec: &WindowSpec, poly: &Polynomial, x: Jet2<f64>, sigma: f64, inside: bool) -> Jet2<f64> {
    if !inside {
        return Jet2::ZERO;
    }
    let h = spec.half_width;
    // tau = sigma * (x - c) / h
    let tau = Jet2::new(
        sigma * (x.v - spec.center) / h,
        sigma * x.d1 / h,
        sigma * x.d2 / h,
    );
    let [p0, p1, p2] = poly.eval2(tau.v);
    let w = tau.chain(p0, p1, p2);
    match spec.kind {
        WindowKind::Neumann => w * (-spec.normal_sign * h),
        _ => w,
    }
}

/// Evaluate a window at a jet point.
///
/// Interior and Dirichlet windows give `W(|x - c| / h)`; Neumann windows give
/// `-sign(n) * h * W(|x - c| / h)`, so their slope at the node equals
/// `sign(x - c) * (-sign(n))`. Points with `|x - c| >= h` return exact zeros.
///
/// At the center the limit from the side opposite the normal is used (for
/// interior/Dirichlet both sides agree). Exactly at the edge, where the
/// second derivative may jump, a jet with a nonzero direction is rejected;
/// use [`eval_window_from`] to pick a side.
pub fn eval_window(spec: &WindowSpec, poly: &Polynomial, x: Jet2<f64>) -> Result<Jet2<f64>, WindowError> {
    let s = x.v - spec.center;
    let dist = s.abs();
    if dist == spec.half_width && x.d1 != 0.0 && poly.derivative_at(2, 1.0) != 0.0 {
        return Err(WindowError::Kink { x: x.v });
    }
    let sigma = if s > 0.0 {
        1.0
    } else if s < 0.0 {
        -1.0
    } else if spec.kind == WindowKind::Neumann {
        -spec.normal_sign
    } else {
        1.0
    };
    Ok(eval_signed(spec, poly, x, sigma, dist < spec.half_width))
}

/// One-sided evaluation: the limit of [`eval_window`] as the point is
/// approached from `side`.
pub fn eval_window_from(spec: &WindowSpec, poly: &Polynomial, x: Jet2<f64>, side: Side) -> Jet2<f64> {
    let s = x.v - spec.center;
    let sigma = if s != 0.0 { s.signum() } else { side.sign() };
    let dist = s.abs();
    let inside = if dist < spec.half_width {
        true
    } else if dist == spec.half_width {
        // on the edge: inside only when approached from the center side
        side.sign() == -s.signum()
    } else {
        false
    };
    eval_signed(spec, poly, x, sigma, inside)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        let n = a.len().max(b.len());
        (0..n).all(|i| (a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0)).abs() <= tol)
    }

    #[test]
    fn interior_k1_closed_form() {
        let p = make_window(WindowKind::Interior, 1).unwrap();
        assert!(close(&p.coeffs, &[1.0, 0.0, -3.0, 2.0], 1e-12));
        assert_eq!(p.eval(0.5), 0.5);
    }

    #[test]
    fn dirichlet_k3_closed_form() {
        let p = make_window(WindowKind::Dirichlet, 3).unwrap();
        assert!(close(&p.coeffs, &[1.0, 0.0, -10.0, 20.0, -15.0, 4.0], 1e-12));
    }

    #[test]
    fn neumann_k2_closed_form() {
        let p = make_window(WindowKind::Neumann, 2).unwrap();
        assert!(close(&p.coeffs, &[0.0, 1.0, -3.0, 3.0, -1.0], 1e-12));
    }

    #[test]
    fn zero_order_rejected() {
        assert!(make_window(WindowKind::Interior, 0).is_err());
        assert!(Window::interior(1, 0.0, 0.0).is_err());
        assert!(Window::neumann(1, 0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn interior_window_center_and_edge() {
        let w = Window::interior(1, 0.25, 0.25).unwrap();
        let near = w.eval(Jet2::variable(0.25 + 1e-9)).unwrap();
        assert!((near.v - 1.0).abs() < 1e-12 && near.d1.abs() < 1e-6);
        let c = w.eval(Jet2::variable(0.25)).unwrap();
        assert_eq!((c.v, c.d1), (1.0, 0.0));
        assert!((c.d2 + 6.0 / 0.0625).abs() < 1e-9);
        let e = w.eval_from(Jet2::variable(0.5), Side::Below);
        assert!(e.v.abs() < 1e-15 && e.d1.abs() < 1e-12);
        assert!(matches!(w.eval(Jet2::variable(0.5)), Err(WindowError::Kink { .. })));
        assert_eq!(w.eval(Jet2::constant(0.5)).unwrap(), Jet2::ZERO);
    }

    #[test]
    fn outside_support_is_exact_zero() {
        let w = Window::dirichlet(2, 0.0, 0.3).unwrap();
        assert_eq!(w.eval(Jet2::variable(0.31)).unwrap(), Jet2::ZERO);
        assert_eq!(w.eval(Jet2::variable(-2.0)).unwrap(), Jet2::ZERO);
    }

    #[test]
    fn neumann_slope_follows_normal() {
        // left boundary, outward normal -1: slope +1 moving into the domain
        let w = Window::neumann(1, 0.0, 0.5, -1.0).unwrap();
        let j = w.eval(Jet2::variable(0.0)).unwrap();
        assert_eq!((j.v, j.d1), (0.0, 1.0));
        // right boundary, outward normal +1: slope in x is also +1
        let w = Window::neumann(1, 1.0, 0.5, 1.0).unwrap();
        let j = w.eval(Jet2::variable(1.0)).unwrap();
        assert_eq!((j.v, j.d1), (0.0, 1.0));
    }

    #[test]
    fn chain_rule_matches_finite_difference() {
        let w = Window::neumann(2, 0.3, 0.4, 1.0).unwrap();
        let x0 = 0.1;
        let h = 1e-5;
        let f = |x: f64| w.eval(Jet2::constant(x)).unwrap().v;
        let j = w.eval(Jet2::variable(x0)).unwrap();
        assert!((j.d1 - (f(x0 + h) - f(x0 - h)) / (2.0 * h)).abs() < 1e-8);
        assert!((j.d2 - (f(x0 + h) - 2.0 * f(x0) + f(x0 - h)) / (h * h)).abs() < 1e-4);
    }
}
