//! Points, segments, directional probes, and Gauss–Legendre sampling.

use serde::{Deserialize, Serialize};

use crate::autodiff::Jet2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("degenerate segment from {a:?} to {b:?}")]
    Degenerate { a: [f64; 2], b: [f64; 2] },
    #[error("Gauss-Legendre node count {n} outside 1..=16")]
    NodeCount { n: usize },
    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("{0}")]
    Other(String),
}

pub type Point = [f64; 2];

/// A curve through a point, described by the jets of each coordinate.
///
/// Straight axis probes have `d1 = e_axis`, `d2 = 0`. Curved probes (for
/// example the azimuthal direction about a corner) carry a nonzero `d2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub point: Point,
    pub d1: Point,
    pub d2: Point,
}

impl Probe {
    pub fn axis(point: Point, axis: usize) -> Self {
        let mut d1 = [0.0; 2];
        d1[axis] = 1.0;
        Self {
            point,
            d1,
            d2: [0.0; 2],
        }
    }

    pub fn line(point: Point, dir: Point) -> Self {
        Self {
            point,
            d1: dir,
            d2: [0.0; 2],
        }
    }

    /// Value-only probe.
    pub fn fixed(point: Point) -> Self {
        Self {
            point,
            d1: [0.0; 2],
            d2: [0.0; 2],
        }
    }

    pub fn x(&self) -> Jet2<f64> {
        Jet2::new(self.point[0], self.d1[0], self.d2[0])
    }

    pub fn y(&self) -> Jet2<f64> {
        Jet2::new(self.point[1], self.d1[1], self.d2[1])
    }

    pub fn coords(&self) -> [Jet2<f64>; 2] {
        [self.x(), self.y()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        (self.b[0] - self.a[0]).hypot(self.b[1] - self.a[1])
    }

    pub fn at(&self, t: f64) -> Point {
        [
            self.a[0] + t * (self.b[0] - self.a[0]),
            self.a[1] + t * (self.b[1] - self.a[1]),
        ]
    }

    pub fn tangent(&self) -> Point {
        let l = self.length();
        [(self.b[0] - self.a[0]) / l, (self.b[1] - self.a[1]) / l]
    }

    /// Unit normal obtained by rotating the tangent clockwise (right-hand side
    /// when walking from `a` to `b`).
    pub fn right_normal(&self) -> Point {
        let t = self.tangent();
        [t[1], -t[0]]
    }

    /// Parameter in `[0, 1]` of the orthogonal projection of `p`.
    pub fn project(&self, p: Point) -> f64 {
        let d = [self.b[0] - self.a[0], self.b[1] - self.a[1]];
        ((p[0] - self.a[0]) * d[0] + (p[1] - self.a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])
    }

    pub fn distance(&self, p: Point) -> f64 {
        let t = self.project(p).clamp(0.0, 1.0);
        let q = self.at(t);
        (p[0] - q[0]).hypot(p[1] - q[1])
    }
}

/// Nodes of the `n`-point Gauss–Legendre rule on `[-1, 1]`, ascending.
pub fn gauss_legendre_nodes(n: usize) -> Result<Vec<f64>, GeometryError> {
    if !(1..=16).contains(&n) {
        return Err(GeometryError::NodeCount { n });
    }
    let mut nodes = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-type initial guess for the i-th largest root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(nodes)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre nodes mapped affinely onto `segment`.
pub fn gauss_legendre_samples(segment: &Segment, n: usize) -> Result<Vec<Point>, GeometryError> {
    if !(segment.length() > 0.0) {
        return Err(GeometryError::Degenerate {
            a: segment.a,
            b: segment.b,
        });
    }
    Ok(gauss_legendre_nodes(n)?
        .into_iter()
        .map(|t| segment.at(0.5 * (t + 1.0)))
        .collect())
}
