use serde::{Deserialize, Serialize};

use super::collocation::{BoundaryPoint, CollocationSet};
use super::TrainError;
use crate::ansatz::{axes, Ansatz, Backend, Dir, F64Backend, TapeBackend, Window2DMode};
use crate::autodiff::{Jet2, Scalar, Tape};
use crate::problems::{BcKind, InterfaceJump};
use crate::window::Side;

/// Per-term weights of the penalty losses.
///
/// A weight may only be given for a condition the ansatz does not already
/// enforce; missing weights of penalized conditions default to 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoftWeights {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dirichlet: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neumann: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interface_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interface_flux: Option<f64>,
}

/// Coordinates the interior residual is written in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhysicsForm {
    /// `-kappa * sum_i u_ii - f`.
    #[default]
    Cartesian,
    /// `-kappa (r u_r + r^2 u_rr) - kappa u_aa - r^2 f` about the nearest
    /// corner (full-hard 2D windows only).
    Polar,
}

/// Weights actually applied; `None` terms are never evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub form: PhysicsForm,
    pub dirichlet: Option<f64>,
    pub neumann: Option<f64>,
    pub interface_value: Option<f64>,
    pub interface_flux: Option<f64>,
}

impl LossTerms {
    pub fn resolve(ansatz: &Ansatz, weights: &SoftWeights, form: PhysicsForm) -> Result<Self, TrainError> {
        let pick = |name: &str, given: Option<f64>, needed: bool| -> Result<Option<f64>, TrainError> {
            match (given, needed) {
                (Some(_), false) => Err(TrainError::Config(format!(
                    "weights.{name} given, but the {} ansatz enforces that condition exactly",
                    ansatz.kind()
                ))),
                (Some(w), true) if !(w.is_finite() && w >= 0.0) => Err(TrainError::Config(format!(
                    "weights.{name} must be finite and non-negative, got {w}"
                ))),
                (Some(w), true) => Ok(Some(w)),
                (None, true) => Ok(Some(1.0)),
                (None, false) => Ok(None),
            }
        };
        let bnd = ansatz.needs_soft_boundary();
        let itf = ansatz.needs_soft_interface();
        if form == PhysicsForm::Polar {
            let ok = matches!(ansatz, Ansatz::Window2D(w) if w.mode() == Window2DMode::FullHard);
            if !ok {
                return Err(TrainError::Config(
                    "the polar residual needs the full-hard 2D window ansatz".into(),
                ));
            }
        }
        Ok(Self {
            form,
            dirichlet: pick("dirichlet", weights.dirichlet, bnd)?,
            neumann: pick("neumann", weights.neumann, bnd)?,
            interface_value: pick("interface_value", weights.interface_value, itf)?,
            interface_flux: pick("interface_flux", weights.interface_flux, itf)?,
        })
    }

    pub fn any_soft(&self) -> bool {
        self.dirichlet.is_some() || self.neumann.is_some() || self.interface_value.is_some() || self.interface_flux.is_some()
    }
}

/// Unweighted loss components; soft terms are `None` when not evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub physics: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dirichlet: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neumann: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interface_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interface_flux: Option<f64>,
}

/// `-kappa * sum_i d2_i - f` from one jet per axis.
pub fn cartesian_residual<S: Scalar>(kappa: f64, f: f64, jets: &[Jet2<S>]) -> S {
    let mut lap = jets[0].d2;
    for j in &jets[1..] {
        lap = lap + j.d2;
    }
    lap * (-kappa) - f
}

/// Polar residual at radius `r` from a radial jet (`d1 = u_r`,
/// `d2 = u_rr`) and an azimuthal jet (`d2 = u_aa`).
pub fn polar_residual<S: Scalar>(kappa: f64, f: f64, r: f64, radial: Jet2<S>, azimuthal: Jet2<S>) -> S {
    (radial.d1 * r + radial.d2 * (r * r)) * (-kappa) - azimuthal.d2 * kappa - r * r * f
}

/// Radial and azimuthal directions at `p` about `corner`; the azimuthal one
/// traces the circle of radius `r`, so its second jet component is `u_aa`.
pub fn polar_dirs(p: [f64; 2], corner: [f64; 2]) -> Result<(f64, [Dir; 2]), TrainError> {
    let (dx, dy) = (p[0] - corner[0], p[1] - corner[1]);
    let r = dx.hypot(dy);
    if r < 1e-12 {
        return Err(TrainError::Collocation(format!(
            "collocation point {p:?} sits on the corner apex"
        )));
    }
    let er = [dx / r, dy / r];
    let radial = Dir::line(er);
    let azimuthal = Dir {
        d1: [-dy, dx],
        d2: [-dx, -dy],
    };
    Ok((r, [radial, azimuthal]))
}

#[derive(Debug, Clone)]
struct InteriorSample {
    point: Vec<f64>,
    kappa: f64,
    f: f64,
    /// `(r, [radial, azimuthal])` for the polar form.
    polar: Option<(f64, [Dir; 2])>,
}

#[derive(Debug, Clone)]
struct InterfaceSample {
    point: Vec<f64>,
    normal: [f64; 2],
    jump: InterfaceJump,
    kappa: [f64; 2],
}

/// The training objective: collocation data bound to an ansatz.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    ansatz: &'a Ansatz,
    terms: LossTerms,
    interior: Vec<InteriorSample>,
    boundary: Vec<BoundaryPoint>,
    interface: Vec<InterfaceSample>,
}

fn dir2(v: &[f64]) -> [f64; 2] {
    let mut d = [0.0; 2];
    d[..v.len()].copy_from_slice(v);
    d
}

impl<'a> Objective<'a> {
    pub fn new(ansatz: &'a Ansatz, set: &CollocationSet, terms: LossTerms) -> Result<Self, TrainError> {
        let problem = ansatz.problem();
        let mut interior = Vec::with_capacity(set.interior.len());
        for p in &set.interior {
            let on_interface = match &problem {
                crate::problems::ProblemSpec::OneD(q) => q.interfaces.contains(&p[0]),
                crate::problems::ProblemSpec::TwoD(q) => q.level([p[0], p[1]]).abs() < 1e-12,
            };
            if on_interface {
                return Err(TrainError::Collocation(format!(
                    "collocation point {p:?} lies on an interface"
                )));
            }
            let sub = ansatz.subdomain(p, None);
            let polar = match (terms.form, ansatz) {
                (PhysicsForm::Polar, Ansatz::Window2D(w)) => {
                    let q = [p[0], p[1]];
                    let c = w
                        .nearest_corner(q)
                        .ok_or_else(|| TrainError::Config("layout has no corner windows".into()))?;
                    Some(polar_dirs(q, c)?)
                }
                _ => None,
            };
            interior.push(InteriorSample {
                point: p.clone(),
                kappa: problem.kappa(sub),
                f: problem.source().eval(p, sub),
                polar,
            });
        }
        let interface = set
            .interface
            .iter()
            .map(|s| {
                let k = [Side::Below, Side::Above].map(|side| problem.kappa(ansatz.subdomain(&s.point, Some(side))));
                InterfaceSample {
                    point: s.point.clone(),
                    normal: dir2(&s.normal),
                    jump: s.jump,
                    kappa: k,
                }
            })
            .collect();
        Ok(Self {
            ansatz,
            terms,
            interior,
            boundary: set.boundary.clone(),
            interface,
        })
    }

    pub fn terms(&self) -> &LossTerms {
        &self.terms
    }

    pub fn ansatz(&self) -> &Ansatz {
        self.ansatz
    }

    /// Weighted total loss and its unweighted components.
    pub fn evaluate<B: Backend>(&self, b: &mut B) -> Result<(B::S, LossParts), TrainError> {
        let a = self.ansatz;
        let prep = a.prepare(b)?;
        let dim = a.dim();
        let dirs = axes(dim);
        let mut total: Vec<(f64, B::S)> = Vec::with_capacity(self.interior.len() + 8);
        let mut parts = LossParts::default();

        let mut sum = 0.0;
        for s in &self.interior {
            let r = match &s.polar {
                None => {
                    let j = a.eval(b, &prep, &s.point, &dirs, None)?;
                    cartesian_residual(s.kappa, s.f, &j)
                }
                Some((radius, pd)) => {
                    let j = a.eval(b, &prep, &s.point, pd, None)?;
                    polar_residual(s.kappa, s.f, *radius, j[0], j[1])
                }
            };
            let r2 = r.square();
            sum += r2.value();
            total.push((1.0, r2));
        }
        parts.physics = sum;

        if self.terms.dirichlet.is_some() || self.terms.neumann.is_some() {
            let (mut jd, mut jn) = (0.0, 0.0);
            for p in &self.boundary {
                let w = match p.kind {
                    BcKind::Dirichlet => self.terms.dirichlet,
                    BcKind::Neumann => self.terms.neumann,
                };
                let Some(w) = w else { continue };
                let j = a.eval(b, &prep, &p.point, &[Dir::line(dir2(&p.normal))], None)?[0];
                let r = match p.kind {
                    BcKind::Dirichlet => j.v - p.value,
                    BcKind::Neumann => j.d1 - p.value,
                };
                let r2 = r.square();
                match p.kind {
                    BcKind::Dirichlet => jd += r2.value(),
                    BcKind::Neumann => jn += r2.value(),
                }
                total.push((w, r2));
            }
            parts.dirichlet = self.terms.dirichlet.map(|_| jd);
            parts.neumann = self.terms.neumann.map(|_| jn);
        }

        if self.terms.interface_value.is_some() || self.terms.interface_flux.is_some() {
            let (mut jv, mut jf) = (0.0, 0.0);
            for s in &self.interface {
                let d = [Dir::line(s.normal)];
                let lo = a.eval(b, &prep, &s.point, &d, Some(Side::Below))?[0];
                let hi = a.eval(b, &prep, &s.point, &d, Some(Side::Above))?[0];
                if let Some(w) = self.terms.interface_value {
                    let r = (hi.v - lo.v - s.jump.value).square();
                    jv += r.value();
                    total.push((w, r));
                }
                if let Some(w) = self.terms.interface_flux {
                    let r = (hi.d1 * s.kappa[1] - lo.d1 * s.kappa[0] - s.jump.flux).square();
                    jf += r.value();
                    total.push((w, r));
                }
            }
            parts.interface_value = self.terms.interface_value.map(|_| jv);
            parts.interface_flux = self.terms.interface_flux.map(|_| jf);
        }

        Ok((b.lincomb(0.0, &total), parts))
    }

    pub fn value(&self, theta: &[f64]) -> Result<(f64, LossParts), TrainError> {
        let mut b = F64Backend::new(theta);
        self.evaluate(&mut b)
    }

    /// Loss, components and `d loss / d theta`.
    pub fn value_and_gradient(&self, theta: &[f64]) -> Result<(f64, LossParts, Vec<f64>), TrainError> {
        let tape = Tape::with_capacity(16 * self.interior.len() + 64);
        let mut b = TapeBackend::new(&tape, theta);
        let (root, parts) = self.evaluate(&mut b)?;
        let grad = b.gradient(root)?;
        Ok((root.value(), parts, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{AnsatzConfig, AnsatzKind};
    use crate::nn::InitScheme;
    use crate::problems::{oracle_1d, problem1, problem3, problem4, ProblemId, ProblemSpec};

    #[test]
    fn polar_residual_vanishes_for_r_squared() {
        let corner = [0.2, 0.1];
        for p in [[0.5, 0.3], [0.1, 0.4], [0.25, 0.1]] {
            let (r, d) = polar_dirs(p, corner).unwrap();
            // u = |x - c|^2 along each curve
            let u = |dir: &Dir| {
                let x = dir.coord(&p, 0) - corner[0];
                let y = dir.coord(&p, 1) - corner[1];
                x * x + y * y
            };
            let res = polar_residual(1.0, -4.0, r, u(&d[0]), u(&d[1]));
            assert!(res.abs() < 1e-14, "{res}");
        }
        assert!(polar_dirs(corner, corner).is_err());
    }

    #[test]
    fn polar_residual_of_zero_field() {
        let z = Jet2::constant(0.0);
        let r: f64 = 0.3;
        assert_eq!(polar_residual(2.0, 5.0, r, z, z), -r * r * 5.0);
        let c = Jet2::constant(7.0);
        assert_eq!(polar_residual(2.0, 0.0, r, c, c), 0.0);
    }

    #[test]
    fn oracle_has_zero_physics_loss() {
        let p = problem1();
        let o = oracle_1d(ProblemId::P1, &p).unwrap();
        let set = CollocationSet::one_d(&p, 40).unwrap();
        let loss: f64 = set
            .interior
            .iter()
            .map(|x| {
                let sub = p.subdomain(x[0]);
                cartesian_residual(p.kappa[sub], p.source.eval(x, sub), &[o.eval(x[0])]).powi(2)
            })
            .sum();
        assert!(loss <= 1e-16, "{loss}");
    }

    #[test]
    fn weights_rejected_for_hard_conditions() {
        let spec = ProblemSpec::OneD(problem1());
        let a = AnsatzConfig::new(AnsatzKind::Buffer).build(&spec).unwrap();
        let w = SoftWeights {
            dirichlet: Some(1.0),
            ..Default::default()
        };
        assert!(LossTerms::resolve(&a, &w, PhysicsForm::Cartesian).is_err());
        let t = LossTerms::resolve(&a, &SoftWeights::default(), PhysicsForm::Cartesian).unwrap();
        assert!(!t.any_soft());
        assert!(LossTerms::resolve(&a, &SoftWeights::default(), PhysicsForm::Polar).is_err());
        let s = AnsatzConfig::new(AnsatzKind::SoftPhi).build(&spec).unwrap();
        let t = LossTerms::resolve(&s, &w, PhysicsForm::Cartesian).unwrap();
        assert_eq!((t.dirichlet, t.interface_flux), (Some(1.0), Some(1.0)));
    }

    #[test]
    fn hard_kinds_skip_soft_terms() {
        let spec = ProblemSpec::OneD(problem3());
        let set = CollocationSet::one_d(spec.as_1d().unwrap(), 20).unwrap();
        for kind in [AnsatzKind::Window, AnsatzKind::Buffer] {
            let a = AnsatzConfig::new(kind).with_hidden(&[4]).build(&spec).unwrap();
            let terms = LossTerms::resolve(&a, &SoftWeights::default(), PhysicsForm::Cartesian).unwrap();
            let obj = Objective::new(&a, &set, terms).unwrap();
            let theta = a.layout().init(InitScheme::Glorot, 1).unwrap();
            let (_, parts) = obj.value(&theta).unwrap();
            assert_eq!(parts.dirichlet, None);
            assert_eq!(parts.interface_flux, None);
        }
    }

    #[test]
    fn tape_and_plain_losses_agree() {
        let spec = ProblemSpec::TwoD(problem4());
        let set = CollocationSet::two_d(spec.as_2d().unwrap(), [6, 4], 3, 4).unwrap();
        let a = AnsatzConfig::new(AnsatzKind::SoftMultinet).with_hidden(&[5]).build(&spec).unwrap();
        let terms = LossTerms::resolve(&a, &SoftWeights::default(), PhysicsForm::Cartesian).unwrap();
        let obj = Objective::new(&a, &set, terms).unwrap();
        let theta = a.layout().init(InitScheme::Glorot, 4).unwrap();
        let (v, p1) = obj.value(&theta).unwrap();
        let (g, p2, grad) = obj.value_and_gradient(&theta).unwrap();
        assert!((v - g).abs() <= 1e-12 * v.abs());
        assert_eq!(p1.neumann, p2.neumann);
        assert_eq!(grad.len(), theta.len());
    }
}
