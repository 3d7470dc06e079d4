//! Closed-form solutions of the 1D benchmark problems.

use serde::{Deserialize, Serialize};

use super::{BcKind, Problem1D, ProblemError, ProblemId, Source};
use crate::autodiff::Jet2;
use crate::linalg::{self, Matrix};
use crate::window::Side;

/// Piecewise quadratic `a0 + a1 x + a2 x^2` on the pieces between `breaks`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseQuadratic {
    pub breaks: Vec<f64>,
    pub pieces: Vec<[f64; 3]>,
}

impl PiecewiseQuadratic {
    fn piece(&self, x: f64, side: Option<Side>) -> usize {
        self.breaks
            .iter()
            .filter(|&&b| x > b || (x == b && side != Some(Side::Below)))
            .count()
    }

    fn eval_piece(&self, m: usize, x: f64) -> Jet2<f64> {
        let [a0, a1, a2] = self.pieces[m];
        Jet2::new(a0 + x * (a1 + x * a2), a1 + 2.0 * a2 * x, 2.0 * a2)
    }

    /// `(u, u', u'')`; a point on a break uses the piece to its right.
    pub fn eval(&self, x: f64) -> Jet2<f64> {
        self.eval_piece(self.piece(x, None), x)
    }

    pub fn eval_from(&self, x: f64, side: Side) -> Jet2<f64> {
        self.eval_piece(self.piece(x, Some(side)), x)
    }
}

/// Problem 1 from its 4x4 coefficient system, with pieces
/// `-x^2/(2 k_i) + c x / k_i + c'`.
pub fn analytic_p1(kappa1: f64, kappa2: f64, x_itf: f64) -> Result<PiecewiseQuadratic, ProblemError> {
    let (k1, k2, xi) = (kappa1, kappa2, x_itf);
    let a = Matrix::from_rows(&[
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0 / k2, 1.0],
        vec![xi / k1, 1.0, -xi / k2, -1.0],
        vec![xi, 0.0, -xi, 0.0],
    ]);
    let b = [0.0, 1.0 / (2.0 * k2), xi * xi / (2.0 * k1) - xi * xi / (2.0 * k2), 0.0];
    let c = linalg::solve(&a, &b)?;
    Ok(PiecewiseQuadratic {
        breaks: vec![xi],
        pieces: vec![
            [c[1], c[0] / k1, -0.5 / k1],
            [c[3], c[2] / k2, -0.5 / k2],
        ],
    })
}

/// Three-interface closed form for diffusivities `k`, unit source, zero ends.
pub fn analytic_p2(k: [f64; 4]) -> PiecewiseQuadratic {
    let [k1, k2, k3, k4] = k;
    let big_k = k1 * k2 * k3 + k1 * k2 * k4 + k1 * k3 * k4 + k2 * k3 * k4;
    let c1 = 7.0 / 8.0 * k1 * k2 * k3 + 5.0 / 8.0 * k1 * k2 * k4 + 3.0 / 8.0 * k1 * k3 * k4
        + 1.0 / 8.0 * k2 * k3 * k4;
    let c3 = -3.0 / 16.0 * k1 * k2 * k3 - 1.0 / 8.0 * k1 * k2 * k4 - 1.0 / 16.0 * k1 * k3 * k4
        + 3.0 / 16.0 * k2 * k2 * k3
        + 1.0 / 8.0 * k2 * k2 * k4
        + 1.0 / 16.0 * k2 * k3 * k4;
    let c5 = -5.0 / 16.0 * k1 * k2 * k3 - 3.0 / 16.0 * k1 * k2 * k4
        + 1.0 / 8.0 * k1 * k3 * k3
        + 3.0 / 16.0 * k2 * k3 * k3
        + 3.0 / 16.0 * k2 * k3 * k4;
    let c7 = -3.0 / 8.0 * k1 * k2 * k3 - 1.0 / 8.0 * k1 * k2 * k4
        + 1.0 / 8.0 * k1 * k3 * k4
        + 3.0 / 8.0 * k2 * k3 * k4;
    let offsets = [0.0, c3, c5, c7];
    PiecewiseQuadratic {
        breaks: vec![0.25, 0.5, 0.75],
        pieces: (0..4)
            .map(|m| {
                let kk = big_k * k[m];
                [offsets[m] / kk, c1 / kk, -0.5 / k[m]]
            })
            .collect(),
    }
}

/// Exact solution for any layered problem with a constant source, obtained
/// from the `2M` boundary and interface conditions (prescribed jumps included).
pub fn uniform_source_solution(p: &Problem1D) -> Result<PiecewiseQuadratic, ProblemError> {
    p.validate()?;
    let f = match p.source {
        Source::Constant { value } => value,
        _ => return Err(ProblemError::Invalid("uniform_source_solution needs a constant source".into())),
    };
    let m = p.n_subdomains();
    let n = 2 * m;
    // unknowns per piece: (A_m, B_m) in u = -f x^2 / (2 k_m) + A_m x + B_m
    let mut a = Matrix::zeros(n, n);
    let mut b = vec![0.0; n];
    let quad = |k: f64| -0.5 * f / k;
    let mut row = 0;
    let end = |a: &mut Matrix, b: &mut [f64], row: usize, piece: usize, x: f64, kind: BcKind, value: f64| {
        let q = quad(p.kappa[piece]);
        match kind {
            BcKind::Dirichlet => {
                a[(row, 2 * piece)] = x;
                a[(row, 2 * piece + 1)] = 1.0;
                b[row] = value - q * x * x;
            }
            BcKind::Neumann => {
                a[(row, 2 * piece)] = 1.0;
                b[row] = value - 2.0 * q * x;
            }
        }
    };
    end(&mut a, &mut b, row, 0, p.lo, p.left.kind, p.left.value);
    row += 1;
    end(&mut a, &mut b, row, m - 1, p.hi, p.right.kind, p.right.value);
    row += 1;
    for (i, &x) in p.interfaces.iter().enumerate() {
        let (kl, kr) = (p.kappa[i], p.kappa[i + 1]);
        let (ql, qr) = (quad(kl), quad(kr));
        // u_r - u_l = jump
        a[(row, 2 * i)] = -x;
        a[(row, 2 * i + 1)] = -1.0;
        a[(row, 2 * i + 2)] = x;
        a[(row, 2 * i + 3)] = 1.0;
        b[row] = p.jumps[i].value - (qr - ql) * x * x;
        row += 1;
        // k_r u_r' - k_l u_l' = flux jump
        a[(row, 2 * i)] = -kl;
        a[(row, 2 * i + 2)] = kr;
        b[row] = p.jumps[i].flux - 2.0 * x * (kr * qr - kl * ql);
        row += 1;
    }
    let c = linalg::solve(&a, &b)?;
    Ok(PiecewiseQuadratic {
        breaks: p.interfaces.clone(),
        pieces: (0..m).map(|j| [c[2 * j + 1], c[2 * j], quad(p.kappa[j])]).collect(),
    })
}

/// Single-interface problem with a constant source on the left and a
/// Gaussian source on the right.
///
/// Left: `-f0 x^2 / (2 k1) + c1 x / k1 + c2`; right: `-F(x) + c3 x / k2 + c4`
/// with `F'' = f / k2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticP3 {
    pub kappa: [f64; 2],
    pub x_itf: f64,
    pub f0: f64,
    pub a: f64,
    pub xc: f64,
    pub w: f64,
    pub c: [f64; 4],
}

const SQRT_PI: f64 = 1.772_453_850_905_516;

impl AnalyticP3 {
    pub fn new(p: &Problem1D) -> Result<Self, ProblemError> {
        p.validate()?;
        let (f0, a, xc, w) = match p.source {
            Source::SplitGaussian { f0, a, xc, w } => (f0, a, xc, w),
            _ => return Err(ProblemError::Invalid("expected a split Gaussian source".into())),
        };
        if p.interfaces.len() != 1
            || p.left.kind != BcKind::Neumann
            || p.right.kind != BcKind::Dirichlet
            || p.has_jumps()
        {
            return Err(ProblemError::Invalid(
                "expected one interface, Neumann left end, Dirichlet right end, no jumps".into(),
            ));
        }
        let mut s = Self {
            kappa: [p.kappa[0], p.kappa[1]],
            x_itf: p.interfaces[0],
            f0,
            a,
            xc,
            w,
            c: [0.0; 4],
        };
        let (k1, k2, xi) = (s.kappa[0], s.kappa[1], s.x_itf);
        let (g0, g1) = (p.left.value, p.right.value);
        let m = Matrix::from_rows(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0 / k2, 1.0],
            vec![xi / k1, 1.0, -xi / k2, -1.0],
            vec![1.0, 0.0, -1.0, 0.0],
        ]);
        let rhs = [
            k1 * g0,
            g1 + s.big_f(1.0),
            f0 * xi * xi / (2.0 * k1) - s.big_f(xi),
            f0 * xi - k2 * s.big_f_x(xi),
        ];
        let c = linalg::solve(&m, &rhs)?;
        s.c = [c[0], c[1], c[2], c[3]];
        Ok(s)
    }

    /// Twice-integrated right-side source divided by `k2`.
    pub fn big_f(&self, x: f64) -> f64 {
        let (a, w, k2) = (self.a, self.w, self.kappa[1]);
        let s = (x - self.xc) / w;
        a * w * SQRT_PI / (2.0 * k2) * (x - self.xc) * libm::erf(s) + a * w * w / (2.0 * k2) * (-s * s).exp()
    }

    pub fn big_f_x(&self, x: f64) -> f64 {
        let (a, w, k2) = (self.a, self.w, self.kappa[1]);
        a * w * SQRT_PI / (2.0 * k2) * libm::erf((x - self.xc) / w)
    }

    fn big_f_xx(&self, x: f64) -> f64 {
        let s = (x - self.xc) / self.w;
        self.a * (-s * s).exp() / self.kappa[1]
    }

    fn eval_piece(&self, right: bool, x: f64) -> Jet2<f64> {
        let [c1, c2, c3, c4] = self.c;
        let (k1, k2) = (self.kappa[0], self.kappa[1]);
        if right {
            Jet2::new(
                -self.big_f(x) + c3 * x / k2 + c4,
                -self.big_f_x(x) + c3 / k2,
                -self.big_f_xx(x),
            )
        } else {
            Jet2::new(
                -self.f0 * x * x / (2.0 * k1) + c1 * x / k1 + c2,
                -self.f0 * x / k1 + c1 / k1,
                -self.f0 / k1,
            )
        }
    }

    pub fn eval(&self, x: f64) -> Jet2<f64> {
        self.eval_piece(x >= self.x_itf, x)
    }

    pub fn eval_from(&self, x: f64, side: Side) -> Jet2<f64> {
        let right = x > self.x_itf || (x == self.x_itf && side == Side::Above);
        self.eval_piece(right, x)
    }
}

/// Closed-form solution of a 1D benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Oracle1D {
    Piecewise(PiecewiseQuadratic),
    SplitGaussian(AnalyticP3),
}

/// Residuals of an oracle against its own problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub pde: f64,
    pub boundary: f64,
    pub value_jump: f64,
    pub flux_jump: f64,
}

impl Oracle1D {
    pub fn eval(&self, x: f64) -> Jet2<f64> {
        match self {
            Oracle1D::Piecewise(p) => p.eval(x),
            Oracle1D::SplitGaussian(p) => p.eval(x),
        }
    }

    pub fn eval_from(&self, x: f64, side: Side) -> Jet2<f64> {
        match self {
            Oracle1D::Piecewise(p) => p.eval_from(x, side),
            Oracle1D::SplitGaussian(p) => p.eval_from(x, side),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).v
    }

    /// Max residuals: PDE at 101 interior points per subdomain, boundary
    /// conditions, and interface value/flux jumps (prescribed jumps removed).
    pub fn check(&self, p: &Problem1D) -> OracleCheck {
        let mut pde: f64 = 0.0;
        for m in 0..p.n_subdomains() {
            let (a, b) = p.bounds(m);
            for i in 0..101 {
                let x = a + (b - a) * (i as f64 + 0.5) / 101.0;
                let u = self.eval(x);
                let r = -p.kappa[m] * u.d2 - p.source.eval(&[x], m);
                pde = pde.max(r.abs());
            }
        }
        let end = |x: f64, side: Side, bc: &super::EndCondition| {
            let u = self.eval_from(x, side);
            match bc.kind {
                BcKind::Dirichlet => (u.v - bc.value).abs(),
                BcKind::Neumann => (u.d1 - bc.value).abs(),
            }
        };
        let boundary = end(p.lo, Side::Above, &p.left).max(end(p.hi, Side::Below, &p.right));
        let mut value_jump: f64 = 0.0;
        let mut flux_jump: f64 = 0.0;
        for (i, &x) in p.interfaces.iter().enumerate() {
            let l = self.eval_from(x, Side::Below);
            let r = self.eval_from(x, Side::Above);
            value_jump = value_jump.max((r.v - l.v - p.jumps[i].value).abs());
            flux_jump = flux_jump.max((p.kappa[i + 1] * r.d1 - p.kappa[i] * l.d1 - p.jumps[i].flux).abs());
        }
        OracleCheck {
            pde,
            boundary,
            value_jump,
            flux_jump,
        }
    }
}

/// Residual tolerances enforced when an oracle is built.
pub const ORACLE_PDE_TOL: f64 = 1e-8;
pub const ORACLE_CONDITION_TOL: f64 = 1e-12;

/// Closed-form oracle for a 1D benchmark, self-checked on construction.
pub fn oracle_1d(id: ProblemId, p: &Problem1D) -> Result<Oracle1D, ProblemError> {
    let o = match id {
        ProblemId::P1 => {
            if p.interfaces.len() != 1 || p.has_jumps() {
                return Err(ProblemError::Invalid("problem 1 has exactly one continuous interface".into()));
            }
            Oracle1D::Piecewise(analytic_p1(p.kappa[0], p.kappa[1], p.interfaces[0])?)
        }
        ProblemId::P2 => {
            if p.interfaces != [0.25, 0.5, 0.75] || p.has_jumps() {
                return Err(ProblemError::Invalid("problem 2 has interfaces at 0.25, 0.5, 0.75".into()));
            }
            Oracle1D::Piecewise(analytic_p2([p.kappa[0], p.kappa[1], p.kappa[2], p.kappa[3]]))
        }
        ProblemId::P3 => Oracle1D::SplitGaussian(AnalyticP3::new(p)?),
        ProblemId::P4 => return Err(ProblemError::Invalid("problem 4 has no closed form".into())),
    };
    let c = o.check(p);
    if c.pde > ORACLE_PDE_TOL
        || c.boundary > ORACLE_CONDITION_TOL
        || c.value_jump > ORACLE_CONDITION_TOL
        || c.flux_jump > ORACLE_CONDITION_TOL
    {
        return Err(ProblemError::Invalid(format!("oracle fails its self-check: {c:?}")));
    }
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{problem1, problem2, problem3};

    #[test]
    fn p1_midpoint_value() {
        let o = oracle_1d(ProblemId::P1, &problem1()).unwrap();
        assert!((o.value(0.5) - 5.0 / 22.0).abs() < 1e-14);
        assert!(o.value(0.0).abs() < 1e-15 && o.value(1.0).abs() < 1e-15);
    }

    #[test]
    fn p2_equal_kappa_is_single_material() {
        let k = 0.7;
        let o = analytic_p2([k; 4]);
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert!((o.eval(x).v - x * (1.0 - x) / (2.0 * k)).abs() < 1e-14);
        }
    }

    #[test]
    fn p3_big_f_at_center() {
        let o = AnalyticP3::new(&problem3()).unwrap();
        assert!((o.big_f(0.75) - 0.005).abs() < 1e-15);
        let u = o.eval(0.0);
        assert!(u.d1.abs() < 1e-15);
        assert!(o.eval(1.0).v.abs() < 1e-15);
    }

    #[test]
    fn self_checks_pass() {
        oracle_1d(ProblemId::P1, &problem1()).unwrap();
        oracle_1d(ProblemId::P2, &problem2([0.1, 1.0, 0.1, 1.0])).unwrap();
        oracle_1d(ProblemId::P3, &problem3()).unwrap();
    }
}
