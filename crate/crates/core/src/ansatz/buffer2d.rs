use serde::{Deserialize, Serialize};

use super::{AnsatzError, Backend, Dir, Evaluator, NetSlot, ParamLayout};
use crate::autodiff::Jet2;
use crate::geometry::{gauss_legendre_samples, Point};
use crate::linalg::{condition_number, Lu, Matrix};
use crate::nn::{Activation, JetInput, MlpArch};
use crate::problems::{BcKind, Problem2D};
use crate::window::Side;

pub const DEFAULT_RBF_RADIUS: f64 = 1.0 / 9.0;
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleKind {
    Dirichlet { value: f64 },
    /// Prescribed outward normal derivative.
    Neumann { value: f64 },
    Interface,
}

/// A constraint location on a subdomain boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BufferSample {
    pub point: Point,
    /// Outward normal of the owning subdomain.
    pub normal: Point,
    pub kind: SampleKind,
}

#[derive(Debug, Clone, Copy)]
struct Basis {
    center: Point,
    /// `Some(n)` for `n . (x - c) phi`, `None` for plain `phi`.
    normal: Option<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RowKind {
    Value,
    Slope,
}

#[derive(Debug, Clone)]
struct SubBuffer {
    samples: Vec<BufferSample>,
    basis: Vec<Basis>,
    /// `(sample index, row kind)` per constraint row.
    rows: Vec<(usize, RowKind)>,
    inverse: Matrix,
    condition: f64,
}

/// Gaussian `exp(-|x - c|^2 / r0^2)` along a direction.
pub fn rbf_jet(center: Point, r0: f64, x: Jet2<f64>, y: Jet2<f64>) -> Jet2<f64> {
    let dx = x - center[0];
    let dy = y - center[1];
    ((dx * dx + dy * dy) * (-1.0 / (r0 * r0))).exp()
}

fn basis_jet(b: &Basis, r0: f64, x: Jet2<f64>, y: Jet2<f64>) -> Jet2<f64> {
    let phi = rbf_jet(b.center, r0, x, y);
    match b.normal {
        None => phi,
        Some(n) => ((x - b.center[0]) * n[0] + (y - b.center[1]) * n[1]) * phi,
    }
}

/// Value and gradient of a basis function at a point.
fn basis_value_grad(b: &Basis, r0: f64, p: Point) -> (f64, Point) {
    let jx = basis_jet(b, r0, Jet2::variable(p[0]), Jet2::constant(p[1]));
    let jy = basis_jet(b, r0, Jet2::constant(p[0]), Jet2::variable(p[1]));
    (jx.v, [jx.d1, jy.d1])
}

/// `u = NN_m + g_m` with Gaussian RBF buffers solved at boundary and
/// interface samples (Gauss–Legendre nodes on every edge).
///
/// Dirichlet samples carry `c phi`, Neumann samples `c n.(x - x_k) phi`,
/// interface samples both. The interface rows split the mismatch evenly:
/// `g_0 = -g_1 = -[NN]/2` and
/// `n_0.k_0 grad g_0 = n_1.k_1 grad g_1 = -(n_0.k_0 grad NN_0 + n_1.k_1 grad NN_1)/2`.
#[derive(Debug, Clone)]
pub struct Buffer2D {
    problem: Problem2D,
    layout: ParamLayout,
    nets: Vec<NetSlot>,
    r0: f64,
    subs: Vec<SubBuffer>,
}

/// Network jets of both subdomains at one sample.
type SideJets<S> = [Vec<Jet2<S>>; 2];

impl Buffer2D {
    pub fn new(
        problem: &Problem2D,
        hidden: &[usize],
        activation: Activation,
        r0: f64,
        samples_per_edge: usize,
        interface_samples: usize,
    ) -> Result<Self, AnsatzError> {
        problem.validate().map_err(|e| AnsatzError::Config(e.to_string()))?;
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(AnsatzError::Config(format!("RBF radius must be positive, got {r0}")));
        }
        let widths: Vec<usize> = [2].into_iter().chain(hidden.iter().copied()).chain([1]).collect();
        let mut layout = ParamLayout::new();
        let nets = (0..2)
            .map(|s| Ok(layout.add_net(format!("subdomain_{s}"), MlpArch::new(widths.clone(), activation)?)))
            .collect::<Result<Vec<_>, AnsatzError>>()?;
        let itf = gauss_legendre_samples(&problem.interface(), interface_samples)?;
        let n0 = problem.interface_normal();
        let mut subs = Vec::with_capacity(2);
        for m in 0..2 {
            let mut samples = Vec::new();
            for edge in problem.boundary_edges().iter().filter(|e| e.subdomain == m) {
                let kind = match edge.kind {
                    BcKind::Dirichlet => SampleKind::Dirichlet { value: edge.value },
                    BcKind::Neumann => SampleKind::Neumann { value: edge.value },
                };
                for p in gauss_legendre_samples(&edge.segment, samples_per_edge)? {
                    samples.push(BufferSample {
                        point: p,
                        normal: edge.outward_normal,
                        kind,
                    });
                }
            }
            let normal = if m == 0 { n0 } else { [-n0[0], -n0[1]] };
            for &p in &itf {
                samples.push(BufferSample {
                    point: p,
                    normal,
                    kind: SampleKind::Interface,
                });
            }
            subs.push(Self::assemble(m, samples, r0)?);
        }
        Ok(Self {
            problem: problem.clone(),
            layout,
            nets,
            r0,
            subs,
        })
    }

    fn assemble(m: usize, samples: Vec<BufferSample>, r0: f64) -> Result<SubBuffer, AnsatzError> {
        let mut basis = Vec::new();
        let mut rows = Vec::new();
        for (i, s) in samples.iter().enumerate() {
            match s.kind {
                SampleKind::Dirichlet { .. } => {
                    basis.push(Basis {
                        center: s.point,
                        normal: None,
                    });
                    rows.push((i, RowKind::Value));
                }
                SampleKind::Neumann { .. } => {
                    basis.push(Basis {
                        center: s.point,
                        normal: Some(s.normal),
                    });
                    rows.push((i, RowKind::Slope));
                }
                SampleKind::Interface => {
                    basis.push(Basis {
                        center: s.point,
                        normal: None,
                    });
                    basis.push(Basis {
                        center: s.point,
                        normal: Some(s.normal),
                    });
                    rows.push((i, RowKind::Value));
                    rows.push((i, RowKind::Slope));
                }
            }
        }
        let n = rows.len();
        let mut a = Matrix::zeros(n, n);
        for (r, &(i, kind)) in rows.iter().enumerate() {
            let s = &samples[i];
            for (j, bf) in basis.iter().enumerate() {
                let (v, g) = basis_value_grad(bf, r0, s.point);
                a[(r, j)] = match kind {
                    RowKind::Value => v,
                    RowKind::Slope => s.normal[0] * g[0] + s.normal[1] * g[1],
                };
            }
        }
        let condition = condition_number(&a)?;
        if !(condition <= MAX_CONDITION) {
            return Err(AnsatzError::IllConditioned { subdomain: m, condition });
        }
        let inverse = Lu::factor(&a)?.inverse();
        Ok(SubBuffer {
            samples,
            basis,
            rows,
            inverse,
            condition,
        })
    }

    pub fn problem(&self) -> &Problem2D {
        &self.problem
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn rbf_radius(&self) -> f64 {
        self.r0
    }

    pub fn samples(&self, sub: usize) -> &[BufferSample] {
        &self.subs[sub].samples
    }

    /// Number of buffer coefficients of each subdomain.
    pub fn dof_counts(&self) -> Vec<usize> {
        self.subs.iter().map(|s| s.basis.len()).collect()
    }

    pub fn conditions(&self) -> Vec<f64> {
        self.subs.iter().map(|s| s.condition).collect()
    }

    pub(super) fn solve<B: Backend>(&self, b: &mut B) -> Result<Vec<Vec<B::S>>, AnsatzError> {
        let kappa = self.problem.kappa;
        let mut out = Vec::with_capacity(2);
        for (m, sub) in self.subs.iter().enumerate() {
            let mut rhs = Vec::with_capacity(sub.rows.len());
            let mut last: Option<(usize, SideJets<B::S>)> = None;
            for &(i, kind) in &sub.rows {
                let s = &sub.samples[i];
                let input = JetInput::axes(&s.point, &[0, 1]);
                let own = match &last {
                    Some((li, jets)) if *li == i => jets.clone(),
                    _ => {
                        let own = b.net(&self.nets[m], &input)?;
                        let other = if s.kind == SampleKind::Interface {
                            b.net(&self.nets[1 - m], &input)?
                        } else {
                            Vec::new()
                        };
                        let j = [own, other];
                        last = Some((i, j.clone()));
                        j
                    }
                };
                let [nn, other] = own;
                let n = s.normal;
                let r = match (s.kind, kind) {
                    (SampleKind::Dirichlet { value }, _) => b.lincomb(value, &[(-1.0, nn[0].v)]),
                    (SampleKind::Neumann { value }, _) => {
                        b.lincomb(value, &[(-n[0], nn[0].d1), (-n[1], nn[1].d1)])
                    }
                    (SampleKind::Interface, RowKind::Value) => {
                        // g_m = -(NN_m - NN_other)/2 on either side
                        b.lincomb(0.0, &[(-0.5, nn[0].v), (0.5, other[0].v)])
                    }
                    (SampleKind::Interface, RowKind::Slope) => {
                        // n_m . grad g_m = -(n_m.k_m grad NN_m + n_o.k_o grad NN_o) / (2 k_m), n_o = -n_m
                        let (km, ko) = (kappa[m], kappa[1 - m]);
                        let a = -0.5;
                        let c = 0.5 * ko / km;
                        b.lincomb(
                            0.0,
                            &[
                                (a * n[0], nn[0].d1),
                                (a * n[1], nn[1].d1),
                                (c * n[0], other[0].d1),
                                (c * n[1], other[1].d1),
                            ],
                        )
                    }
                };
                rhs.push(r);
            }
            let k = sub.basis.len();
            let coeffs = (0..k)
                .map(|i| {
                    let terms: Vec<_> = (0..k).map(|j| (sub.inverse[(i, j)], rhs[j])).collect();
                    b.lincomb(0.0, &terms)
                })
                .collect();
            out.push(coeffs);
        }
        Ok(out)
    }

    /// Buffer function of subdomain `sub` along a direction.
    pub fn buffer_jet<B: Backend>(&self, b: &mut B, coeffs: &[B::S], sub: usize, x: Jet2<f64>, y: Jet2<f64>) -> Jet2<B::S> {
        let basis = &self.subs[sub].basis;
        let mut tv = Vec::with_capacity(basis.len());
        let mut t1 = Vec::with_capacity(basis.len());
        let mut t2 = Vec::with_capacity(basis.len());
        for (bf, &c) in basis.iter().zip(coeffs) {
            let psi = basis_jet(bf, self.r0, x, y);
            tv.push((psi.v, c));
            t1.push((psi.d1, c));
            t2.push((psi.d2, c));
        }
        Jet2::new(b.lincomb(0.0, &tv), b.lincomb(0.0, &t1), b.lincomb(0.0, &t2))
    }

    pub(super) fn eval<B: Backend>(
        &self,
        b: &mut B,
        dofs: &[Vec<B::S>],
        point: &[f64],
        dirs: &[Dir],
        sub: usize,
    ) -> Result<Vec<Jet2<B::S>>, AnsatzError> {
        if dofs.len() != 2 {
            return Err(AnsatzError::StaleDofs);
        }
        let xin: Vec<Vec<Jet2<f64>>> = dirs
            .iter()
            .map(|d| vec![d.coord(point, 0), d.coord(point, 1)])
            .collect();
        let nn = b.net(&self.nets[sub], &JetInput::from_dirs(&xin))?;
        Ok(nn
            .into_iter()
            .zip(&xin)
            .map(|(n, c)| n + self.buffer_jet(b, &dofs[sub], sub, c[0], c[1]))
            .collect())
    }

    /// Residual of every enforced condition at the sample points, scaled by
    /// the magnitude of the quantities involved.
    pub fn sample_residuals(&self, eval: &mut Evaluator<'_>) -> Result<Vec<SampleResidual>, AnsatzError> {
        let kappa = self.problem.kappa;
        let mut out = Vec::new();
        for (m, sub) in self.subs.iter().enumerate() {
            for s in &sub.samples {
                let n = s.normal;
                let side = if m == 0 { Side::Below } else { Side::Above };
                let (u, g) = eval.value_grad(&s.point, Some(side))?;
                let dn = n[0] * g[0] + n[1] * g[1];
                match s.kind {
                    SampleKind::Dirichlet { value } => out.push(SampleResidual {
                        subdomain: m,
                        point: s.point,
                        condition: "dirichlet",
                        residual: u - value,
                        scale: u.abs().max(value.abs()),
                    }),
                    SampleKind::Neumann { value } => out.push(SampleResidual {
                        subdomain: m,
                        point: s.point,
                        condition: "neumann",
                        residual: dn - value,
                        scale: dn.abs().max(value.abs()),
                    }),
                    SampleKind::Interface if m == 0 => {
                        let (u1, g1) = eval.value_grad(&s.point, Some(Side::Above))?;
                        out.push(SampleResidual {
                            subdomain: m,
                            point: s.point,
                            condition: "interface_value",
                            residual: u - u1,
                            scale: u.abs().max(u1.abs()),
                        });
                        let f0 = kappa[0] * dn;
                        let f1 = kappa[1] * (n[0] * g1[0] + n[1] * g1[1]);
                        out.push(SampleResidual {
                            subdomain: m,
                            point: s.point,
                            condition: "interface_flux",
                            residual: f0 - f1,
                            scale: f0.abs().max(f1.abs()),
                        });
                    }
                    SampleKind::Interface => {}
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleResidual {
    pub subdomain: usize,
    pub point: Point,
    pub condition: &'static str,
    pub residual: f64,
    /// Largest magnitude among the compared quantities.
    pub scale: f64,
}

impl SampleResidual {
    /// `|residual| / max(1, scale)`.
    pub fn relative(&self) -> f64 {
        self.residual.abs() / self.scale.max(1.0)
    }
}
