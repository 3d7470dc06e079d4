use serde::{Deserialize, Serialize};

use super::{AnsatzError, Backend, Dir, NetSlot, ParamLayout};
use crate::autodiff::Jet2;
use crate::nn::{Activation, JetInput, MlpArch};
use crate::problems::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoftKind {
    /// One network with an extra, fixed per-subdomain indicator input.
    Phi,
    /// One network per subdomain.
    Multinet,
}

/// Indicator input of subdomain `m` out of `n`: evenly spaced on `[-1, 1]`.
pub fn phi_value(m: usize, n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        -1.0 + 2.0 * m as f64 / (n - 1) as f64
    }
}

/// Unconstrained baselines; all conditions come from penalty losses.
#[derive(Debug, Clone)]
pub struct SoftAnsatz {
    kind: SoftKind,
    problem: ProblemSpec,
    layout: ParamLayout,
    nets: Vec<NetSlot>,
}

impl SoftAnsatz {
    /// `activations` holds one entry (shared) or one per subdomain
    /// (multinet only).
    pub fn new(
        kind: SoftKind,
        problem: &ProblemSpec,
        hidden: &[usize],
        activations: &[Activation],
    ) -> Result<Self, AnsatzError> {
        problem.validate().map_err(|e| AnsatzError::Config(e.to_string()))?;
        let dim = problem.dimension();
        let m = problem.n_subdomains();
        let act = |s: usize| -> Result<Activation, AnsatzError> {
            match activations.len() {
                1 => Ok(activations[0]),
                n if n == m && kind == SoftKind::Multinet => Ok(activations[s]),
                n => Err(AnsatzError::Config(format!(
                    "expected 1{} activations, got {n}",
                    if kind == SoftKind::Multinet {
                        format!(" or {m}")
                    } else {
                        String::new()
                    }
                ))),
            }
        };
        let widths = |input: usize| -> Vec<usize> { [input].into_iter().chain(hidden.iter().copied()).chain([1]).collect() };
        let mut layout = ParamLayout::new();
        let nets = match kind {
            SoftKind::Phi => vec![layout.add_net("phi_net", MlpArch::new(widths(dim + 1), act(0)?)?)],
            SoftKind::Multinet => (0..m)
                .map(|s| Ok(layout.add_net(format!("subdomain_{s}"), MlpArch::new(widths(dim), act(s)?)?)))
                .collect::<Result<_, AnsatzError>>()?,
        };
        Ok(Self {
            kind,
            problem: problem.clone(),
            layout,
            nets,
        })
    }

    pub fn kind(&self) -> SoftKind {
        self.kind
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub(super) fn eval<B: Backend>(
        &self,
        b: &mut B,
        point: &[f64],
        dirs: &[Dir],
        sub: usize,
    ) -> Result<Vec<Jet2<B::S>>, AnsatzError> {
        let dim = point.len();
        let inputs: Vec<Vec<Jet2<f64>>> = dirs
            .iter()
            .map(|d| {
                let mut v: Vec<Jet2<f64>> = (0..dim).map(|i| d.coord(point, i)).collect();
                if self.kind == SoftKind::Phi {
                    v.push(Jet2::constant(phi_value(sub, self.problem.n_subdomains())));
                }
                v
            })
            .collect();
        let net = match self.kind {
            SoftKind::Phi => &self.nets[0],
            SoftKind::Multinet => &self.nets[sub],
        };
        b.net(net, &JetInput::from_dirs(&inputs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_values() {
        assert_eq!(phi_value(0, 2), -1.0);
        assert_eq!(phi_value(1, 2), 1.0);
        assert_eq!(phi_value(1, 3), 0.0);
        assert!((phi_value(1, 4) + 1.0 / 3.0).abs() < 1e-15);
    }
}
