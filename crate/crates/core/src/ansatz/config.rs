use serde::{Deserialize, Serialize};

use super::{
    Ansatz, AnsatzError, AnsatzKind, Buffer1D, Buffer2D, SoftAnsatz, SoftKind, Window1D, Window2D, WindowConfig1D,
    WindowConfig2D, DEFAULT_RBF_RADIUS,
};
use crate::nn::Activation;
use crate::problems::ProblemSpec;

fn default_hidden() -> Vec<usize> {
    vec![12, 12]
}
fn default_rbf_radius() -> f64 {
    DEFAULT_RBF_RADIUS
}
fn eight() -> usize {
    8
}

/// Everything needed to build an [`Ansatz`] for a given problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    pub kind: AnsatzKind,
    /// Hidden widths of every subdomain (or interior) network.
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
    /// Per-subdomain activations (soft multinet only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subdomain_activations: Option<Vec<Activation>>,
    /// Hidden widths of the tangential networks of 2D windows; defaults to
    /// `hidden`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tangential_hidden: Option<Vec<usize>>,
    #[serde(default)]
    pub window_1d: WindowConfig1D,
    #[serde(default)]
    pub window_2d: WindowConfig2D,
    /// Base radius of the 2D buffer RBFs.
    #[serde(default = "default_rbf_radius")]
    pub rbf_radius: f64,
    /// Gauss-Legendre samples per boundary edge of the 2D buffer.
    #[serde(default = "eight")]
    pub samples_per_edge: usize,
    /// Gauss-Legendre samples on the 2D interface.
    #[serde(default = "eight")]
    pub interface_samples: usize,
}

impl AnsatzConfig {
    pub fn new(kind: AnsatzKind) -> Self {
        Self {
            kind,
            hidden: default_hidden(),
            activation: Activation::Tanh,
            subdomain_activations: None,
            tangential_hidden: None,
            window_1d: WindowConfig1D::default(),
            window_2d: WindowConfig2D::default(),
            rbf_radius: DEFAULT_RBF_RADIUS,
            samples_per_edge: 8,
            interface_samples: 8,
        }
    }

    pub fn with_hidden(mut self, hidden: &[usize]) -> Self {
        self.hidden = hidden.to_vec();
        self
    }

    pub fn build(&self, problem: &ProblemSpec) -> Result<Ansatz, AnsatzError> {
        if self.subdomain_activations.is_some() && self.kind != AnsatzKind::SoftMultinet {
            return Err(AnsatzError::Config(
                "subdomain_activations applies to the soft_multinet kind only".into(),
            ));
        }
        let soft = |kind: SoftKind| {
            let acts = self
                .subdomain_activations
                .clone()
                .unwrap_or_else(|| vec![self.activation]);
            SoftAnsatz::new(kind, problem, &self.hidden, &acts).map(Ansatz::Soft)
        };
        match (self.kind, problem) {
            (AnsatzKind::SoftPhi, _) => soft(SoftKind::Phi),
            (AnsatzKind::SoftMultinet, _) => soft(SoftKind::Multinet),
            (AnsatzKind::Window, ProblemSpec::OneD(p)) => {
                Window1D::new(p, &self.window_1d, &self.hidden, self.activation).map(Ansatz::Window1D)
            }
            (AnsatzKind::Buffer, ProblemSpec::OneD(p)) => {
                Buffer1D::new(p, &self.hidden, self.activation).map(Ansatz::Buffer1D)
            }
            (AnsatzKind::Window, ProblemSpec::TwoD(p)) => {
                let tangential = self.tangential_hidden.as_ref().unwrap_or(&self.hidden);
                Window2D::new(p, &self.window_2d, &self.hidden, tangential, self.activation)
                    .map(|w| Ansatz::Window2D(Box::new(w)))
            }
            (AnsatzKind::Buffer, ProblemSpec::TwoD(p)) => Buffer2D::new(
                p,
                &self.hidden,
                self.activation,
                self.rbf_radius,
                self.samples_per_edge,
                self.interface_samples,
            )
            .map(|b| Ansatz::Buffer2D(Box::new(b))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{problem1, problem4};

    #[test]
    fn builds_every_kind() {
        let p1 = ProblemSpec::OneD(problem1());
        let p4 = ProblemSpec::TwoD(problem4());
        for kind in [
            AnsatzKind::Window,
            AnsatzKind::Buffer,
            AnsatzKind::SoftPhi,
            AnsatzKind::SoftMultinet,
        ] {
            for p in [&p1, &p4] {
                let a = AnsatzConfig::new(kind).with_hidden(&[4]).build(p).unwrap();
                assert_eq!(a.kind(), kind);
                assert_eq!(a.dim(), p.dimension());
            }
        }
    }

    #[test]
    fn rejects_stray_activations() {
        let mut c = AnsatzConfig::new(AnsatzKind::Buffer);
        c.subdomain_activations = Some(vec![Activation::Tanh, Activation::Silu]);
        assert!(c.build(&ProblemSpec::OneD(problem1())).is_err());
        c.kind = AnsatzKind::SoftMultinet;
        assert!(c.build(&ProblemSpec::OneD(problem1())).is_ok());
    }
}
