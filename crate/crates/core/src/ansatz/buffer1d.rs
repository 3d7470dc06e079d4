use super::{AnsatzError, Backend, Dir, NetSlot, ParamLayout};
use crate::autodiff::Jet2;
use crate::linalg::{Lu, Matrix};
use crate::nn::{Activation, JetInput, MlpArch};
use crate::problems::{BcKind, Problem1D};

/// One constraint row of a subdomain's buffer polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Row {
    /// End condition of the whole domain at `x`.
    End { x: f64, kind: BcKind, value: f64 },
    /// Value split at interface `index`; this subdomain is its left side when `left`.
    Value { index: usize, left: bool },
    /// Flux split at interface `index`.
    Flux { index: usize, left: bool },
}

impl Row {
    fn position(&self, p: &Problem1D) -> f64 {
        match *self {
            Row::End { x, .. } => x,
            Row::Value { index, .. } | Row::Flux { index, .. } => p.interfaces[index],
        }
    }

    fn is_derivative(&self) -> bool {
        matches!(
            self,
            Row::Flux { .. }
                | Row::End {
                    kind: BcKind::Neumann,
                    ..
                }
        )
    }
}

#[derive(Debug, Clone)]
struct SubBuffer {
    rows: Vec<Row>,
    matrix: Matrix,
    inverse: Matrix,
}

/// `u = NN_m + g_m` on subdomain `m`, with polynomial buffers `g_m` (in the
/// global coordinate) whose coefficients cancel the networks' boundary and
/// interface mismatch.
///
/// End subdomains get quadratics (one end row, two interface rows),
/// interior subdomains cubics (four interface rows), a single subdomain a
/// line. At interface `x_ij` the split is
/// `g_i = -g_j = -[NN]/2` and `k_i g_i' = -k_j g_j' = -(k_i NN_i' - k_j NN_j')/2`.
#[derive(Debug, Clone)]
pub struct Buffer1D {
    problem: Problem1D,
    layout: ParamLayout,
    nets: Vec<NetSlot>,
    subs: Vec<SubBuffer>,
}

impl Buffer1D {
    pub fn new(problem: &Problem1D, hidden: &[usize], activation: Activation) -> Result<Self, AnsatzError> {
        problem.validate().map_err(|e| AnsatzError::Config(e.to_string()))?;
        if problem.has_jumps() {
            return Err(AnsatzError::Config(
                "the buffer ansatz supports continuous interface conditions only".into(),
            ));
        }
        let m = problem.n_subdomains();
        let widths: Vec<usize> = [1].into_iter().chain(hidden.iter().copied()).chain([1]).collect();
        let mut layout = ParamLayout::new();
        let nets = (0..m)
            .map(|s| Ok(layout.add_net(format!("subdomain_{s}"), MlpArch::new(widths.clone(), activation)?)))
            .collect::<Result<Vec<_>, AnsatzError>>()?;
        let mut subs = Vec::with_capacity(m);
        for s in 0..m {
            let mut rows = Vec::new();
            if s == 0 {
                rows.push(Row::End {
                    x: problem.lo,
                    kind: problem.left.kind,
                    value: problem.left.value,
                });
            } else {
                rows.push(Row::Value { index: s - 1, left: false });
                rows.push(Row::Flux { index: s - 1, left: false });
            }
            if s + 1 == m {
                rows.push(Row::End {
                    x: problem.hi,
                    kind: problem.right.kind,
                    value: problem.right.value,
                });
            } else {
                rows.push(Row::Value { index: s, left: true });
                rows.push(Row::Flux { index: s, left: true });
            }
            let n = rows.len();
            let mut matrix = Matrix::zeros(n, n);
            for (i, row) in rows.iter().enumerate() {
                let x = row.position(problem);
                for j in 0..n {
                    matrix[(i, j)] = if row.is_derivative() {
                        if j == 0 {
                            0.0
                        } else {
                            j as f64 * x.powi(j as i32 - 1)
                        }
                    } else {
                        x.powi(j as i32)
                    };
                }
            }
            let inverse = Lu::factor(&matrix)?.inverse();
            subs.push(SubBuffer { rows, matrix, inverse });
        }
        Ok(Self {
            problem: problem.clone(),
            layout,
            nets,
            subs,
        })
    }

    pub fn problem(&self) -> &Problem1D {
        &self.problem
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn nets(&self) -> &[NetSlot] {
        &self.nets
    }

    /// Polynomial degree of each subdomain's buffer.
    pub fn degrees(&self) -> Vec<usize> {
        self.subs.iter().map(|s| s.rows.len() - 1).collect()
    }

    /// Constraint matrix of subdomain `s` (rows in evaluation order).
    pub fn matrix(&self, s: usize) -> &Matrix {
        &self.subs[s].matrix
    }

    /// Right-hand side of every subdomain's constraint system.
    pub fn rhs<B: Backend>(&self, b: &mut B) -> Result<Vec<Vec<B::S>>, AnsatzError> {
        let p = &self.problem;
        // network value and slope at each subdomain's two ends
        let mut ends = Vec::with_capacity(self.nets.len());
        for (s, net) in self.nets.iter().enumerate() {
            let (lo, hi) = p.bounds(s);
            let at = |b: &mut B, x: f64| -> Result<Jet2<B::S>, AnsatzError> {
                Ok(b.net(net, &JetInput::axes(&[x], &[0]))?[0])
            };
            ends.push((at(b, lo)?, at(b, hi)?));
        }
        let mut out = Vec::with_capacity(self.subs.len());
        for (s, sub) in self.subs.iter().enumerate() {
            let mut rhs = Vec::with_capacity(sub.rows.len());
            for row in &sub.rows {
                let r = match *row {
                    Row::End { x, kind, value } => {
                        let nn = if x == p.lo { ends[s].0 } else { ends[s].1 };
                        match kind {
                            BcKind::Dirichlet => b.lincomb(value, &[(-1.0, nn.v)]),
                            BcKind::Neumann => b.lincomb(value, &[(-1.0, nn.d1)]),
                        }
                    }
                    Row::Value { index, left } => {
                        let (l, r) = (ends[index].1, ends[index + 1].0);
                        let sign = if left { -0.5 } else { 0.5 };
                        b.lincomb(0.0, &[(sign, l.v), (-sign, r.v)])
                    }
                    Row::Flux { index, left } => {
                        let (l, r) = (ends[index].1, ends[index + 1].0);
                        let (kl, kr) = (p.kappa[index], p.kappa[index + 1]);
                        let (sign, k) = if left { (-0.5, kl) } else { (0.5, kr) };
                        b.lincomb(0.0, &[(sign * kl / k, l.d1), (-sign * kr / k, r.d1)])
                    }
                };
                rhs.push(r);
            }
            out.push(rhs);
        }
        Ok(out)
    }

    /// Buffer coefficients `c_m = A_m^{-1} rhs_m(theta)`.
    pub(super) fn solve<B: Backend>(&self, b: &mut B) -> Result<Vec<Vec<B::S>>, AnsatzError> {
        let rhs = self.rhs(b)?;
        Ok(self
            .subs
            .iter()
            .zip(rhs)
            .map(|(sub, r)| {
                let n = sub.rows.len();
                (0..n)
                    .map(|i| {
                        let terms: Vec<_> = (0..n).map(|j| (sub.inverse[(i, j)], r[j])).collect();
                        b.lincomb(0.0, &terms)
                    })
                    .collect()
            })
            .collect())
    }

    /// Buffer polynomial of subdomain `sub` as jets along `dir`.
    pub fn buffer_jet<B: Backend>(&self, b: &mut B, coeffs: &[B::S], x: Jet2<f64>) -> Jet2<B::S> {
        let mut pv = Vec::with_capacity(coeffs.len());
        let mut p1 = Vec::with_capacity(coeffs.len());
        let mut p2 = Vec::with_capacity(coeffs.len());
        let mut pow = Jet2::constant(1.0);
        for &c in coeffs {
            pv.push((pow.v, c));
            p1.push((pow.d1, c));
            p2.push((pow.d2, c));
            pow = pow * x;
        }
        Jet2::new(b.lincomb(0.0, &pv), b.lincomb(0.0, &p1), b.lincomb(0.0, &p2))
    }

    pub(super) fn eval<B: Backend>(
        &self,
        b: &mut B,
        dofs: &[Vec<B::S>],
        x: f64,
        dirs: &[Dir],
        sub: usize,
    ) -> Result<Vec<Jet2<B::S>>, AnsatzError> {
        if dofs.len() != self.subs.len() {
            return Err(AnsatzError::StaleDofs);
        }
        let xin: Vec<Vec<Jet2<f64>>> = dirs.iter().map(|d| vec![d.coord(&[x], 0)]).collect();
        let nn = b.net(&self.nets[sub], &JetInput::from_dirs(&xin))?;
        Ok(nn
            .into_iter()
            .zip(&xin)
            .map(|(n, xj)| n + self.buffer_jet(b, &dofs[sub], xj[0]))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{Ansatz, Evaluator};
    use crate::nn::InitScheme;
    use crate::problems::{problem1, problem2, EndCondition, Source, P2_DEFAULT_KAPPA};
    use crate::window::Side;

    #[test]
    fn single_subdomain_hand_solution() {
        let p = Problem1D {
            lo: 0.0,
            hi: 1.0,
            interfaces: vec![],
            kappa: vec![1.0],
            left: EndCondition::neumann(0.0),
            right: EndCondition::dirichlet(0.0),
            jumps: vec![],
            source: Source::Constant { value: 1.0 },
        };
        let a = Buffer1D::new(&p, &[], Activation::Tanh).unwrap();
        assert_eq!(a.degrees(), vec![1]);
        let a = Ansatz::Buffer1D(a);
        // [1, 1] linear net: NN(x) = w x + b with w = 1, b = 0
        let theta = vec![1.0, 0.0];
        let mut e = Evaluator::new(&a, &theta).unwrap();
        let c = &e.buffer_dofs()[0];
        assert!(c[0].abs() < 1e-15 && (c[1] + 1.0).abs() < 1e-15);
        for x in [0.0, 0.3, 1.0] {
            assert!(e.value(&[x]).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn degrees_and_constraints_p2() {
        let a = Buffer1D::new(&problem2(P2_DEFAULT_KAPPA), &[5], Activation::Tanh).unwrap();
        assert_eq!(a.degrees(), vec![2, 3, 3, 2]);
        let a = Ansatz::Buffer1D(a);
        let theta = a.layout().init(InitScheme::Glorot, 2).unwrap();
        let mut e = Evaluator::new(&a, &theta).unwrap();
        let p = problem2(P2_DEFAULT_KAPPA);
        for (i, &x) in p.interfaces.iter().enumerate() {
            let (ul, gl) = e.value_grad(&[x], Some(Side::Below)).unwrap();
            let (ur, gr) = e.value_grad(&[x], Some(Side::Above)).unwrap();
            assert!((ul - ur).abs() < 1e-12);
            assert!((p.kappa[i] * gl[0] - p.kappa[i + 1] * gr[0]).abs() < 1e-12);
        }
        assert!(e.value(&[0.0]).unwrap().abs() < 1e-13);
        assert!(e.value(&[1.0]).unwrap().abs() < 1e-13);
    }

    #[test]
    fn zero_nets_give_zero_dofs() {
        let a = Ansatz::Buffer1D(Buffer1D::new(&problem1(), &[3], Activation::Tanh).unwrap());
        let theta = vec![0.0; a.layout().len()];
        let e = Evaluator::new(&a, &theta).unwrap();
        assert!(e.buffer_dofs().iter().flatten().all(|c| *c == 0.0));
    }
}
