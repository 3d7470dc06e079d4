//! Benchmark interface problems, analytic solutions, and a finite-difference
//! reference for the two-dimensional case.

pub mod analytic;
pub mod reference;

use serde::{Deserialize, Serialize};

use crate::geometry::{Point, Segment};
pub use analytic::{analytic_p1, analytic_p2, oracle_1d, uniform_source_solution, AnalyticP3, Oracle1D, OracleCheck, PiecewiseQuadratic};
pub use reference::{reference_p4, solve_reference, GridField, MeshField, MeshLayout, ReferenceOptions};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProblemError {
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("reference norm is zero")]
    ZeroReference,
    #[error("sample sets differ in length ({pred} vs {reference})")]
    Length { pred: usize, reference: usize },
    #[error("iterative solver stalled after {iterations} iterations (relative residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("linear solve: {0}")]
    Linalg(#[from] crate::linalg::LinalgError),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemId {
    P1,
    P2,
    P3,
    P4,
}

impl std::fmt::Display for ProblemId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProblemId::P1 => "p1",
            ProblemId::P2 => "p2",
            ProblemId::P3 => "p3",
            ProblemId::P4 => "p4",
        })
    }
}

impl std::str::FromStr for ProblemId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Ok(ProblemId::P1),
            "p2" => Ok(ProblemId::P2),
            "p3" => Ok(ProblemId::P3),
            "p4" => Ok(ProblemId::P4),
            _ => Err(format!("unknown problem '{s}' (expected p1, p2, p3, p4)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Dirichlet,
    Neumann,
}

/// Boundary condition at an end of a 1D domain.
///
/// For Neumann ends `value` is the prescribed `du/dx` (not the outward
/// normal derivative).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndCondition {
    pub kind: BcKind,
    pub value: f64,
}

impl EndCondition {
    pub fn dirichlet(value: f64) -> Self {
        Self {
            kind: BcKind::Dirichlet,
            value,
        }
    }

    pub fn neumann(slope: f64) -> Self {
        Self {
            kind: BcKind::Neumann,
            value: slope,
        }
    }
}

/// Prescribed interface jumps, taken as (right side) minus (left side):
/// `u(x+) - u(x-) = value` and `k u'(x+) - k u'(x-) = flux`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct InterfaceJump {
    pub value: f64,
    pub flux: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Source {
    Constant {
        value: f64,
    },
    /// `f0` on the first subdomain, `a exp(-(x - xc)^2 / w^2)` on the others.
    SplitGaussian {
        f0: f64,
        a: f64,
        xc: f64,
        w: f64,
    },
    /// Sum of isotropic Gaussians in 2D.
    GaussianSum {
        amplitudes: Vec<f64>,
        centers: Vec<Point>,
        radii: Vec<f64>,
    },
}

impl Source {
    /// Source value at `p` (1D problems use `p[0]`) in subdomain `sub`.
    pub fn eval(&self, p: &[f64], sub: usize) -> f64 {
        match self {
            Source::Constant { value } => *value,
            Source::SplitGaussian { f0, a, xc, w } => {
                if sub == 0 {
                    *f0
                } else {
                    let s = (p[0] - xc) / w;
                    a * (-s * s).exp()
                }
            }
            Source::GaussianSum {
                amplitudes,
                centers,
                radii,
            } => amplitudes
                .iter()
                .zip(centers)
                .zip(radii)
                .map(|((a, c), r)| {
                    let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
                    a * (-d2 / (r * r)).exp()
                })
                .sum(),
        }
    }
}

/// Layered 1D problem on `[lo, hi]` with piecewise-constant diffusivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem1D {
    pub lo: f64,
    pub hi: f64,
    pub interfaces: Vec<f64>,
    pub kappa: Vec<f64>,
    pub left: EndCondition,
    pub right: EndCondition,
    pub jumps: Vec<InterfaceJump>,
    pub source: Source,
}

impl Problem1D {
    pub fn validate(&self) -> Result<(), ProblemError> {
        if !(self.lo < self.hi) {
            return Err(ProblemError::Invalid("domain must satisfy lo < hi".into()));
        }
        if self.kappa.len() != self.interfaces.len() + 1 {
            return Err(ProblemError::Invalid(format!(
                "{} interfaces need {} diffusivities, got {}",
                self.interfaces.len(),
                self.interfaces.len() + 1,
                self.kappa.len()
            )));
        }
        if self.jumps.len() != self.interfaces.len() {
            return Err(ProblemError::Invalid("one jump descriptor per interface required".into()));
        }
        if let Some(k) = self.kappa.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
            return Err(ProblemError::Invalid(format!("diffusivity must be positive, got {k}")));
        }
        let mut prev = self.lo;
        for &x in &self.interfaces {
            if !(x > prev) {
                return Err(ProblemError::Invalid(format!(
                    "interfaces must be strictly increasing inside the domain, got {:?}",
                    self.interfaces
                )));
            }
            prev = x;
        }
        if !(self.hi > prev) {
            return Err(ProblemError::Invalid("last interface must lie before the right end".into()));
        }
        if self.left.kind == BcKind::Neumann && self.right.kind == BcKind::Neumann {
            return Err(ProblemError::Invalid("pure Neumann problem has no unique solution".into()));
        }
        Ok(())
    }

    pub fn n_subdomains(&self) -> usize {
        self.kappa.len()
    }

    /// Subdomain containing `x`; a point on an interface belongs to the right.
    pub fn subdomain(&self, x: f64) -> usize {
        self.interfaces.iter().filter(|&&xi| x >= xi).count()
    }

    /// `(start, end)` of subdomain `m`.
    pub fn bounds(&self, m: usize) -> (f64, f64) {
        let a = if m == 0 { self.lo } else { self.interfaces[m - 1] };
        let b = if m == self.interfaces.len() {
            self.hi
        } else {
            self.interfaces[m]
        };
        (a, b)
    }

    pub fn kappa_at(&self, x: f64) -> f64 {
        self.kappa[self.subdomain(x)]
    }

    pub fn has_jumps(&self) -> bool {
        self.jumps.iter().any(|j| j.value != 0.0 || j.flux != 0.0)
    }
}

/// Boundary piece of a 2D domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub name: String,
    pub segment: Segment,
    pub kind: BcKind,
    /// Subdomain the edge belongs to.
    pub subdomain: usize,
    pub outward_normal: Point,
    /// Prescribed value (Dirichlet) or normal derivative (Neumann).
    pub value: f64,
}

/// Rectangle `[0, width] x [0, height]` split by the straight line from
/// `(x_bottom, 0)` to `(x_top, height)`.
///
/// Subdomain 0 is the part above/left of the line, subdomain 1 the rest;
/// points on the line belong to subdomain 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem2D {
    pub width: f64,
    pub height: f64,
    pub x_bottom: f64,
    pub x_top: f64,
    pub kappa: [f64; 2],
    /// Condition type on the outer boundary of each subdomain.
    pub boundary_kinds: [BcKind; 2],
    pub source: Source,
}

impl Problem2D {
    pub fn validate(&self) -> Result<(), ProblemError> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(ProblemError::Invalid("domain extents must be positive".into()));
        }
        if !(0.0 < self.x_bottom && self.x_bottom < self.width && 0.0 < self.x_top && self.x_top < self.width) {
            return Err(ProblemError::Invalid("interface end points must lie inside the edges".into()));
        }
        if self.kappa.iter().any(|k| !(*k > 0.0)) {
            return Err(ProblemError::Invalid("diffusivity must be positive".into()));
        }
        Ok(())
    }

    /// Horizontal offset of `p` to the left of the interface line; positive
    /// in subdomain 0, zero on the line (exactly so at its end points).
    pub fn level(&self, p: Point) -> f64 {
        (self.x_top - self.x_bottom) * (p[1] / self.height) - (p[0] - self.x_bottom)
    }

    pub fn subdomain(&self, p: Point) -> usize {
        if self.level(p) > 0.0 {
            0
        } else {
            1
        }
    }

    pub fn kappa_at(&self, p: Point) -> f64 {
        self.kappa[self.subdomain(p)]
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p[0]) && (0.0..=self.height).contains(&p[1])
    }

    pub fn interface(&self) -> Segment {
        Segment::new([self.x_bottom, 0.0], [self.x_top, self.height])
    }

    /// Unit normal of the interface pointing out of subdomain 0.
    pub fn interface_normal(&self) -> Point {
        self.interface().right_normal()
    }

    /// Signed distance to the interface line, positive in subdomain 1.
    pub fn signed_distance(&self, p: Point) -> f64 {
        let s = self.interface();
        let n = self.interface_normal();
        (p[0] - s.a[0]) * n[0] + (p[1] - s.a[1]) * n[1]
    }

    /// Outer boundary split at the interface end points, homogeneous data.
    pub fn boundary_edges(&self) -> Vec<BoundaryEdge> {
        let (w, h) = (self.width, self.height);
        let (xb, xt) = (self.x_bottom, self.x_top);
        let edge = |name: &str, a: Point, b: Point, sub: usize, n: Point| BoundaryEdge {
            name: name.to_string(),
            segment: Segment::new(a, b),
            kind: self.boundary_kinds[sub],
            subdomain: sub,
            outward_normal: n,
            value: 0.0,
        };
        vec![
            edge("left", [0.0, 0.0], [0.0, h], 0, [-1.0, 0.0]),
            edge("bottom_left", [0.0, 0.0], [xb, 0.0], 0, [0.0, -1.0]),
            edge("top_left", [0.0, h], [xt, h], 0, [0.0, 1.0]),
            edge("bottom_right", [xb, 0.0], [w, 0.0], 1, [0.0, -1.0]),
            edge("right", [w, 0.0], [w, h], 1, [1.0, 0.0]),
            edge("top_right", [xt, h], [w, h], 1, [0.0, 1.0]),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dimension")]
pub enum ProblemSpec {
    #[serde(rename = "1d")]
    OneD(Problem1D),
    #[serde(rename = "2d")]
    TwoD(Problem2D),
}

impl ProblemSpec {
    pub fn dimension(&self) -> usize {
        match self {
            ProblemSpec::OneD(_) => 1,
            ProblemSpec::TwoD(_) => 2,
        }
    }

    pub fn n_subdomains(&self) -> usize {
        match self {
            ProblemSpec::OneD(p) => p.n_subdomains(),
            ProblemSpec::TwoD(_) => 2,
        }
    }

    pub fn subdomain(&self, p: &[f64]) -> usize {
        match self {
            ProblemSpec::OneD(q) => q.subdomain(p[0]),
            ProblemSpec::TwoD(q) => q.subdomain([p[0], p[1]]),
        }
    }

    pub fn kappa(&self, sub: usize) -> f64 {
        match self {
            ProblemSpec::OneD(q) => q.kappa[sub],
            ProblemSpec::TwoD(q) => q.kappa[sub],
        }
    }

    pub fn source(&self) -> &Source {
        match self {
            ProblemSpec::OneD(q) => &q.source,
            ProblemSpec::TwoD(q) => &q.source,
        }
    }

    pub fn f(&self, p: &[f64]) -> f64 {
        self.source().eval(p, self.subdomain(p))
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        match self {
            ProblemSpec::OneD(q) => q.validate(),
            ProblemSpec::TwoD(q) => q.validate(),
        }
    }

    pub fn as_1d(&self) -> Option<&Problem1D> {
        match self {
            ProblemSpec::OneD(q) => Some(q),
            _ => None,
        }
    }

    pub fn as_2d(&self) -> Option<&Problem2D> {
        match self {
            ProblemSpec::TwoD(q) => Some(q),
            _ => None,
        }
    }
}

/// Diffusivities used for the three-interface problem unless configured otherwise.
pub const P2_DEFAULT_KAPPA: [f64; 4] = [0.1, 1.0, 0.1, 1.0];

/// Single interface at 0.5, diffusivities 0.1 | 1, unit source, zero Dirichlet ends.
pub fn problem1() -> Problem1D {
    Problem1D {
        lo: 0.0,
        hi: 1.0,
        interfaces: vec![0.5],
        kappa: vec![0.1, 1.0],
        left: EndCondition::dirichlet(0.0),
        right: EndCondition::dirichlet(0.0),
        jumps: vec![InterfaceJump::default()],
        source: Source::Constant { value: 1.0 },
    }
}

/// Interfaces at 0.25, 0.5, 0.75, unit source, zero Dirichlet ends.
pub fn problem2(kappa: [f64; 4]) -> Problem1D {
    Problem1D {
        lo: 0.0,
        hi: 1.0,
        interfaces: vec![0.25, 0.5, 0.75],
        kappa: kappa.to_vec(),
        left: EndCondition::dirichlet(0.0),
        right: EndCondition::dirichlet(0.0),
        jumps: vec![InterfaceJump::default(); 3],
        source: Source::Constant { value: 1.0 },
    }
}

/// Single interface at 0.5 with a constant source on the left and a Gaussian
/// bump on the right; zero slope at 0 and zero value at 1.
pub fn problem3() -> Problem1D {
    Problem1D {
        lo: 0.0,
        hi: 1.0,
        interfaces: vec![0.5],
        kappa: vec![0.1, 1.0],
        left: EndCondition::neumann(0.0),
        right: EndCondition::dirichlet(0.0),
        jumps: vec![InterfaceJump::default()],
        source: Source::SplitGaussian {
            f0: -0.05,
            a: 1.0,
            xc: 0.75,
            w: 0.1,
        },
    }
}

/// `[0,2] x [0,1]` split by the line from `(0.8, 0)` to `(1.2, 1)`; zero
/// Neumann data on the left part of the boundary, zero Dirichlet data on the
/// right part, three Gaussian sources.
pub fn problem4() -> Problem2D {
    Problem2D {
        width: 2.0,
        height: 1.0,
        x_bottom: 0.8,
        x_top: 1.2,
        kappa: [0.1, 1.0],
        boundary_kinds: [BcKind::Neumann, BcKind::Dirichlet],
        source: Source::GaussianSum {
            amplitudes: vec![10.0, 20.0, 15.0],
            centers: vec![[0.3, 0.6], [1.0, 0.2], [1.6, 0.7]],
            radii: vec![0.08, 0.2, 0.1],
        },
    }
}

pub fn problem_spec(id: ProblemId, p2_kappa: Option<[f64; 4]>) -> ProblemSpec {
    match id {
        ProblemId::P1 => ProblemSpec::OneD(problem1()),
        ProblemId::P2 => ProblemSpec::OneD(problem2(p2_kappa.unwrap_or(P2_DEFAULT_KAPPA))),
        ProblemId::P3 => ProblemSpec::OneD(problem3()),
        ProblemId::P4 => ProblemSpec::TwoD(problem4()),
    }
}

/// `||pred - reference|| / ||reference||` over matching samples.
pub fn relative_l2(pred: &[f64], reference: &[f64]) -> Result<f64, ProblemError> {
    if pred.len() != reference.len() {
        return Err(ProblemError::Length {
            pred: pred.len(),
            reference: reference.len(),
        });
    }
    let num: f64 = pred.iter().zip(reference).map(|(p, r)| (p - r) * (p - r)).sum();
    let den: f64 = reference.iter().map(|r| r * r).sum();
    if den == 0.0 {
        return Err(ProblemError::ZeroReference);
    }
    Ok((num / den).sqrt())
}

/// `n` uniformly spaced points covering `[lo, hi]` including both ends.
pub fn uniform_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Test samples: 1001 points on the line, 101 x 101 on the rectangle.
pub fn test_points(spec: &ProblemSpec) -> Vec<Vec<f64>> {
    match spec {
        ProblemSpec::OneD(p) => uniform_points(p.lo, p.hi, 1001)
            .into_iter()
            .map(|x| vec![x])
            .collect(),
        ProblemSpec::TwoD(p) => {
            let xs = uniform_points(0.0, p.width, 101);
            let ys = uniform_points(0.0, p.height, 101);
            ys.iter()
                .flat_map(|&y| xs.iter().map(move |&x| vec![x, y]))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_l2_cases() {
        let r = [1.0, -2.0, 3.0];
        assert_eq!(relative_l2(&r, &r).unwrap(), 0.0);
        let p: Vec<f64> = r.iter().map(|v| 2.0 * v).collect();
        assert!((relative_l2(&p, &r).unwrap() - 1.0).abs() < 1e-15);
        let e = [0.1, 0.0, -0.2];
        let p: Vec<f64> = r.iter().zip(&e).map(|(a, b)| a + b).collect();
        let expect = (0.05f64 / 14.0).sqrt();
        assert!((relative_l2(&p, &r).unwrap() - expect).abs() < 1e-15);
        assert_eq!(relative_l2(&[1.0], &[0.0]), Err(ProblemError::ZeroReference));
    }

    #[test]
    fn half_open_membership() {
        let p = problem1();
        assert_eq!(p.subdomain(0.5), 1);
        assert_eq!(p.subdomain(0.4999), 0);
        let q = problem4();
        assert_eq!(q.subdomain([0.8, 0.0]), 1);
        assert_eq!(q.subdomain([0.0, 1.0]), 0);
        assert_eq!(q.kappa_at([1.9, 0.1]), 1.0);
    }

    #[test]
    fn source_peaks() {
        let q = problem4();
        for (c, a) in [([0.3, 0.6], 10.0), ([1.0, 0.2], 20.0), ([1.6, 0.7], 15.0)] {
            // own Gaussian is exactly the amplitude; the others add far tails only
            let f = q.source.eval(&c, 0);
            assert!(f - a >= 0.0 && f - a < 1e-5, "{f} vs {a}");
        }
    }

    #[test]
    fn interface_normal_points_into_right_part() {
        let q = problem4();
        let n = q.interface_normal();
        let l = 1.16f64.sqrt();
        assert!((n[0] - 1.0 / l).abs() < 1e-15 && (n[1] + 0.4 / l).abs() < 1e-15);
        assert!(q.signed_distance([1.9, 0.1]) > 0.0);
        assert!(q.signed_distance([0.1, 0.9]) < 0.0);
    }

    #[test]
    fn invalid_problems_rejected() {
        let mut p = problem1();
        p.kappa = vec![0.1];
        assert!(p.validate().is_err());
        let mut p = problem1();
        p.kappa[0] = -1.0;
        assert!(p.validate().is_err());
        let mut p = problem1();
        p.left = EndCondition::neumann(0.0);
        p.right = EndCondition::neumann(0.0);
        assert!(p.validate().is_err());
    }
}
