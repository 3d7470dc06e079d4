use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::problems::{BcKind, InterfaceJump, Problem1D, Problem2D, ProblemSpec};

/// A boundary sample for the penalty losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub point: Vec<f64>,
    pub kind: BcKind,
    /// Prescribed value (Dirichlet) or outward normal derivative (Neumann).
    pub value: f64,
    pub normal: Vec<f64>,
}

/// An interface sample; `normal` points from the lower to the upper
/// subdomain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfacePoint {
    pub point: Vec<f64>,
    pub normal: Vec<f64>,
    pub jump: InterfaceJump,
}

/// Point counts used to build a [`CollocationSet`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollocationConfig {
    /// Interior points on the line.
    pub interior: usize,
    /// Interior grid `[nx, ny]` on the rectangle.
    pub grid: [usize; 2],
    /// Penalty samples per boundary edge (2D).
    pub boundary_per_edge: usize,
    /// Penalty samples on the interface (2D).
    pub interface: usize,
}

impl Default for CollocationConfig {
    fn default() -> Self {
        Self {
            interior: 40,
            grid: [40, 20],
            boundary_per_edge: 20,
            interface: 40,
        }
    }
}

/// Interior, boundary and interface samples.
///
/// Interior points sit on a cell-centred grid, so none lies on the boundary,
/// an interface, or a corner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollocationSet {
    pub interior: Vec<Vec<f64>>,
    pub boundary: Vec<BoundaryPoint>,
    pub interface: Vec<InterfacePoint>,
}

fn centred(n: usize, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
}

impl CollocationSet {
    pub fn build(spec: &ProblemSpec, cfg: &CollocationConfig) -> Result<Self, TrainError> {
        match spec {
            ProblemSpec::OneD(p) => Self::one_d(p, cfg.interior),
            ProblemSpec::TwoD(p) => Self::two_d(p, cfg.grid, cfg.boundary_per_edge, cfg.interface),
        }
    }

    /// `k` interior points `lo + (i + 1/2) h`; one penalty sample per end and
    /// per interface.
    pub fn one_d(p: &Problem1D, k: usize) -> Result<Self, TrainError> {
        if k == 0 {
            return Err(TrainError::Collocation("need at least one interior point".into()));
        }
        let interior: Vec<Vec<f64>> = centred(k, p.lo, p.hi).map(|x| vec![x]).collect();
        if let Some(x) = interior.iter().find(|x| p.interfaces.contains(&x[0])) {
            return Err(TrainError::Collocation(format!(
                "interior point {} lies on an interface; change the point count",
                x[0]
            )));
        }
        let end = |x: f64, c: crate::problems::EndCondition, n: f64| BoundaryPoint {
            point: vec![x],
            kind: c.kind,
            value: match c.kind {
                BcKind::Dirichlet => c.value,
                BcKind::Neumann => n * c.value,
            },
            normal: vec![n],
        };
        let boundary = vec![end(p.lo, p.left, -1.0), end(p.hi, p.right, 1.0)];
        let interface = p
            .interfaces
            .iter()
            .zip(&p.jumps)
            .map(|(&x, &jump)| InterfacePoint {
                point: vec![x],
                normal: vec![1.0],
                jump,
            })
            .collect();
        Ok(Self {
            interior,
            boundary,
            interface,
        })
    }

    /// Cell-centred `nx x ny` grid, `per_edge` samples on each boundary edge
    /// and `n_interface` on the interface (all cell-centred along the curve).
    pub fn two_d(p: &Problem2D, grid: [usize; 2], per_edge: usize, n_interface: usize) -> Result<Self, TrainError> {
        let [nx, ny] = grid;
        if nx == 0 || ny == 0 {
            return Err(TrainError::Collocation("grid needs at least one cell per axis".into()));
        }
        let mut interior = Vec::with_capacity(nx * ny);
        for y in centred(ny, 0.0, p.height) {
            for x in centred(nx, 0.0, p.width) {
                if p.level([x, y]).abs() < 1e-12 {
                    return Err(TrainError::Collocation(format!(
                        "interior point ({x}, {y}) lies on the interface; change the grid"
                    )));
                }
                interior.push(vec![x, y]);
            }
        }
        let mut boundary = Vec::new();
        for e in p.boundary_edges() {
            for t in centred(per_edge, 0.0, 1.0) {
                boundary.push(BoundaryPoint {
                    point: e.segment.at(t).to_vec(),
                    kind: e.kind,
                    value: e.value,
                    normal: e.outward_normal.to_vec(),
                });
            }
        }
        let seg = p.interface();
        let n = p.interface_normal();
        let interface = centred(n_interface, 0.0, 1.0)
            .map(|t| InterfacePoint {
                point: seg.at(t).to_vec(),
                normal: n.to_vec(),
                jump: InterfaceJump::default(),
            })
            .collect();
        Ok(Self {
            interior,
            boundary,
            interface,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{problem1, problem3, problem4};

    #[test]
    fn one_d_points_avoid_interfaces() {
        let c = CollocationSet::one_d(&problem1(), 40).unwrap();
        assert_eq!(c.interior.len(), 40);
        assert_eq!(c.interior[0][0], 0.0125);
        assert!(CollocationSet::one_d(&problem1(), 41).is_err());
        let c = CollocationSet::one_d(&problem3(), 40).unwrap();
        assert_eq!(c.boundary[0].kind, BcKind::Neumann);
        assert_eq!(c.interface.len(), 1);
    }

    #[test]
    fn two_d_grid() {
        let c = CollocationSet::two_d(&problem4(), [40, 20], 10, 16).unwrap();
        assert_eq!(c.interior.len(), 800);
        assert_eq!(c.boundary.len(), 60);
        assert_eq!(c.interface.len(), 16);
    }
}
