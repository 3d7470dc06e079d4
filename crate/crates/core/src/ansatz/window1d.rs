use serde::{Deserialize, Serialize};

use super::{jet_sum, AnsatzError, Backend, Dir, NetSlot, ParamLayout, ScalarSlot};
use crate::autodiff::Jet2;
use crate::nn::{Activation, JetInput, MlpArch};
use crate::problems::{BcKind, EndCondition, InterfaceJump, Problem1D};
use crate::window::{Side, Window};

/// Window orders and overlap of a 1D windowing ansatz.
///
/// Each subdomain gets one interior window centred at its midpoint with
/// half-width `dx` equal to half the subdomain width. Boundary and interface
/// windows have half-width `beta * dx`; at `beta = 2` they reach exactly to
/// the neighbouring nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig1D {
    #[serde(default = "one")]
    pub interior_order: usize,
    /// `(k_d, k_n)` for boundary windows.
    #[serde(default = "ones")]
    pub boundary_orders: [usize; 2],
    /// `(k_d, k_n)` for interface windows.
    #[serde(default = "ones")]
    pub interface_orders: [usize; 2],
    #[serde(default = "two")]
    pub beta: f64,
}

fn one() -> usize {
    1
}
fn ones() -> [usize; 2] {
    [1, 1]
}
fn two() -> f64 {
    2.0
}

impl Default for WindowConfig1D {
    fn default() -> Self {
        Self {
            interior_order: 1,
            boundary_orders: [1, 1],
            interface_orders: [1, 1],
            beta: 2.0,
        }
    }
}

impl WindowConfig1D {
    pub fn validate(&self) -> Result<(), AnsatzError> {
        if !(self.beta > 0.0 && self.beta <= 2.0) {
            return Err(AnsatzError::Config(format!("beta must lie in (0, 2], got {}", self.beta)));
        }
        let orders = [self.interior_order]
            .into_iter()
            .chain(self.boundary_orders)
            .chain(self.interface_orders);
        for k in orders {
            if k == 0 {
                return Err(AnsatzError::Config("window orders must be at least 1".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct EndTerm {
    cond: EndCondition,
    wd: Window,
    wn: Window,
    theta: ScalarSlot,
    sub: usize,
}

#[derive(Debug, Clone)]
struct InterfaceTerm {
    wd: Window,
    /// Neumann windows seen from the left and right subdomain.
    wn: [Window; 2],
    theta_d: ScalarSlot,
    theta_n: ScalarSlot,
    jump: InterfaceJump,
    left: usize,
}

/// `u = sum_m W_m NN_m + boundary terms + interface terms` on a line.
#[derive(Debug, Clone)]
pub struct Window1D {
    problem: Problem1D,
    config: WindowConfig1D,
    layout: ParamLayout,
    interior: Vec<(Window, NetSlot)>,
    ends: Vec<EndTerm>,
    interfaces: Vec<InterfaceTerm>,
}

impl Window1D {
    pub fn new(
        problem: &Problem1D,
        config: &WindowConfig1D,
        hidden: &[usize],
        activation: Activation,
    ) -> Result<Self, AnsatzError> {
        problem.validate().map_err(|e| AnsatzError::Config(e.to_string()))?;
        config.validate()?;
        let m = problem.n_subdomains();
        let mut layout = ParamLayout::new();
        let widths: Vec<usize> = [1].into_iter().chain(hidden.iter().copied()).chain([1]).collect();
        let mut interior = Vec::with_capacity(m);
        let half: Vec<f64> = (0..m)
            .map(|s| {
                let (a, b) = problem.bounds(s);
                0.5 * (b - a)
            })
            .collect();
        for (s, &dx) in half.iter().enumerate() {
            let (a, b) = problem.bounds(s);
            let w = Window::interior(config.interior_order, 0.5 * (a + b), dx)?;
            let net = layout.add_net(format!("interior_{s}"), MlpArch::new(widths.clone(), activation)?);
            interior.push((w, net));
        }
        let [kd, kn] = config.boundary_orders;
        let mut ends = Vec::with_capacity(2);
        for (name, x, cond, sub, outward) in [
            ("left", problem.lo, problem.left, 0, -1.0),
            ("right", problem.hi, problem.right, m - 1, 1.0),
        ] {
            let h = config.beta * half[sub];
            ends.push(EndTerm {
                cond,
                wd: Window::dirichlet(kd, x, h)?,
                wn: Window::neumann(kn, x, h, outward)?,
                theta: layout.add_scalar(format!("boundary_{name}")),
                sub,
            });
        }
        let [kd, kn] = config.interface_orders;
        let mut interfaces = Vec::with_capacity(m - 1);
        for (i, &x) in problem.interfaces.iter().enumerate() {
            let h = config.beta * half[i].min(half[i + 1]);
            let jump = problem.jumps.get(i).copied().unwrap_or_default();
            interfaces.push(InterfaceTerm {
                wd: Window::dirichlet(kd, x, h)?,
                wn: [Window::neumann(kn, x, h, 1.0)?, Window::neumann(kn, x, h, -1.0)?],
                theta_d: layout.add_scalar(format!("interface_{i}_value")),
                theta_n: layout.add_scalar(format!("interface_{i}_flux")),
                jump,
                left: i,
            });
        }
        Ok(Self {
            problem: problem.clone(),
            config: config.clone(),
            layout,
            interior,
            ends,
            interfaces,
        })
    }

    pub fn problem(&self) -> &Problem1D {
        &self.problem
    }

    pub fn config(&self) -> &WindowConfig1D {
        &self.config
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    /// Interior window and network of each subdomain.
    pub fn interior_terms(&self) -> &[(Window, NetSlot)] {
        &self.interior
    }

    /// Sum of the boundary and interface terms only (no networks).
    pub fn boundary_interface_part<B: Backend>(
        &self,
        b: &mut B,
        x: f64,
        dirs: &[Dir],
        sub: usize,
        side: Option<Side>,
    ) -> Result<Vec<Jet2<B::S>>, AnsatzError> {
        let side = self.window_side(x, sub, side);
        let mut out = Vec::with_capacity(dirs.len());
        for dir in dirs {
            let xj = dir.coord(&[x], 0);
            let mut terms = Vec::new();
            for end in self.ends.iter().filter(|e| e.sub == sub) {
                let wd = end.wd.eval_from(xj, side);
                let wn = end.wn.eval_from(xj, side);
                let theta = b.scalar(&end.theta);
                let t = match end.cond.kind {
                    BcKind::Dirichlet => Jet2::from_scalar_times(theta, wn).add_const(wd * end.cond.value),
                    BcKind::Neumann => Jet2::from_scalar_times(theta, wd).add_const(wn * end.cond.value),
                };
                terms.push(t);
            }
            for itf in &self.interfaces {
                let k = if sub == itf.left {
                    0
                } else if sub == itf.left + 1 {
                    1
                } else {
                    continue;
                };
                let wd = itf.wd.eval_from(xj, side);
                let wn = itf.wn[k].eval_from(xj, side) * (1.0 / self.problem.kappa[sub]);
                let td = b.scalar(&itf.theta_d);
                let tn = b.scalar(&itf.theta_n);
                let mut t = Jet2::from_scalar_times(td, wd) + Jet2::from_scalar_times(tn, wn);
                if k == 1 {
                    t = t.add_const(wd * itf.jump.value + wn * itf.jump.flux);
                }
                terms.push(t);
            }
            out.push(jet_sum(b, terms));
        }
        Ok(out)
    }

    /// Side used for one-sided window limits: the caller's choice, else the
    /// side facing into the evaluation subdomain.
    fn window_side(&self, x: f64, sub: usize, side: Option<Side>) -> Side {
        side.unwrap_or_else(|| {
            if x == self.problem.bounds(sub).0 {
                Side::Above
            } else {
                Side::Below
            }
        })
    }

    pub(super) fn eval<B: Backend>(
        &self,
        b: &mut B,
        x: f64,
        dirs: &[Dir],
        sub: usize,
        side: Option<Side>,
    ) -> Result<Vec<Jet2<B::S>>, AnsatzError> {
        let wside = self.window_side(x, sub, side);
        let (window, net) = &self.interior[sub];
        let xin: Vec<Vec<Jet2<f64>>> = dirs.iter().map(|d| vec![d.coord(&[x], 0)]).collect();
        let nn = b.net(net, &JetInput::from_dirs(&xin))?;
        let rest = self.boundary_interface_part(b, x, dirs, sub, side)?;
        Ok(nn
            .into_iter()
            .zip(rest)
            .zip(&xin)
            .map(|((n, r), xj)| n.scale(window.eval_from(xj[0], wside)) + r)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{Ansatz, Evaluator};
    use crate::nn::InitScheme;
    use crate::problems::{problem1, problem3};

    fn p1() -> (Ansatz, Vec<f64>) {
        let w = Window1D::new(&problem1(), &WindowConfig1D::default(), &[6, 6], Activation::Tanh).unwrap();
        let a = Ansatz::Window1D(w);
        let mut theta = a.layout().init(InitScheme::Glorot, 11).unwrap();
        for s in a.layout().scalars.clone() {
            theta[s.offset] = 0.3 + s.offset as f64 * 1e-3;
        }
        (a, theta)
    }

    #[test]
    fn trainable_counts() {
        let (a, _) = p1();
        assert_eq!(a.layout().nets.len(), 2);
        assert_eq!(a.layout().scalars.len(), 4);
    }

    #[test]
    fn interface_and_boundary_identities() {
        let (a, theta) = p1();
        let mut e = Evaluator::new(&a, &theta).unwrap();
        let (ul, gl) = e.value_grad(&[0.5], Some(Side::Below)).unwrap();
        let (ur, gr) = e.value_grad(&[0.5], Some(Side::Above)).unwrap();
        assert!((ul - ur).abs() <= 1e-12);
        assert!((0.1 * gl[0] - 1.0 * gr[0]).abs() <= 1e-11);
        assert!(e.value(&[0.0]).unwrap().abs() <= 1e-13);
        assert!(e.value(&[1.0]).unwrap().abs() <= 1e-13);
    }

    #[test]
    fn neumann_end_embeds_slope() {
        let w = Window1D::new(&problem3(), &WindowConfig1D::default(), &[4], Activation::Tanh).unwrap();
        let a = Ansatz::Window1D(w);
        let theta = a.layout().init(InitScheme::Glorot, 5).unwrap();
        let mut e = Evaluator::new(&a, &theta).unwrap();
        let (_, g) = e.value_grad(&[0.0], None).unwrap();
        assert!(g[0].abs() <= 1e-11);
    }

    #[test]
    fn outside_point_rejected() {
        let (a, theta) = p1();
        let mut e = Evaluator::new(&a, &theta).unwrap();
        assert!(matches!(e.value(&[1.5]), Err(AnsatzError::OutsideDomain { .. })));
    }
}
