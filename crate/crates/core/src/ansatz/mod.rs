//! Solution ansatzes: hard-constrained windowing and buffer constructions
//! in 1D and 2D, plus the soft-constrained baselines.
//!
//! Every ansatz is evaluated through a [`Backend`], so the same code yields
//! plain values (for metrics and plots) and tape records (for gradients).
//! Buffer ansatzes must be [`Ansatz::prepare`]d for the current parameters
//! before evaluation; window and soft ansatzes prepare trivially.

mod backend;
mod buffer1d;
mod buffer2d;
mod config;
mod soft;
mod window1d;
mod window2d;

use serde::{Deserialize, Serialize};

pub use backend::{fingerprint, Backend, F64Backend, NetSlot, ParamLayout, ScalarSlot, TapeBackend};
pub use buffer1d::Buffer1D;
pub use buffer2d::{rbf_jet, Buffer2D, BufferSample, SampleKind, SampleResidual, DEFAULT_RBF_RADIUS};
pub use config::AnsatzConfig;
pub use soft::{phi_value, SoftAnsatz, SoftKind};
pub use window1d::{Window1D, WindowConfig1D};
pub use window2d::{
    CornerWedge, CornerWindow, EdgeRef, EdgeWindow, FullHardLayout, ReferenceMap, Window2D, Window2DMode, WindowConfig2D,
};

use crate::autodiff::{AdError, Jet2};
use crate::geometry::GeometryError;
use crate::linalg::LinalgError;
use crate::nn::NnError;
use crate::problems::ProblemSpec;
use crate::window::{Side, WindowError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnsatzError {
    #[error("ansatz configuration: {0}")]
    Config(String),
    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("buffer coefficients were solved for different parameters; call prepare first")]
    StaleDofs,
    #[error("buffer constraint matrix of subdomain {subdomain} has condition number {condition:e} (> 1e12); increase the RBF radius or use fewer samples")]
    IllConditioned { subdomain: usize, condition: f64 },
    #[error("derivative requested at the corner apex {point:?}")]
    CornerApex { point: Vec<f64> },
    #[error("uncovered boundary: {0}")]
    Coverage(String),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Ad(#[from] AdError),
}

/// A direction of differentiation: the curve `t -> x + t d1 + t^2/2 d2`.
///
/// Only the first `dim` components are read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dir {
    pub d1: [f64; 2],
    pub d2: [f64; 2],
}

impl Dir {
    pub fn axis(a: usize) -> Self {
        let mut d1 = [0.0; 2];
        d1[a] = 1.0;
        Self { d1, d2: [0.0; 2] }
    }

    pub fn line(d: [f64; 2]) -> Self {
        Self { d1: d, d2: [0.0; 2] }
    }

    /// Coordinate `i` of the point as a jet along this direction.
    pub fn coord(&self, point: &[f64], i: usize) -> Jet2<f64> {
        Jet2::new(point[i], self.d1[i], self.d2[i])
    }
}

/// The unit axis directions `0..dim`.
pub fn axes(dim: usize) -> Vec<Dir> {
    (0..dim).map(Dir::axis).collect()
}

/// Quantities solved from the current parameters before evaluation
/// (buffer coefficients); empty for the other ansatzes.
#[derive(Debug, Clone)]
pub struct Prepared<S> {
    pub fingerprint: u64,
    /// Buffer coefficients, one vector per subdomain.
    pub dofs: Vec<Vec<S>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzKind {
    Window,
    Buffer,
    SoftPhi,
    SoftMultinet,
}

impl AnsatzKind {
    pub fn is_hard(self) -> bool {
        matches!(self, AnsatzKind::Window | AnsatzKind::Buffer)
    }
}

impl std::fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AnsatzKind::Window => "window",
            AnsatzKind::Buffer => "buffer",
            AnsatzKind::SoftPhi => "soft_phi",
            AnsatzKind::SoftMultinet => "soft_multinet",
        })
    }
}

impl std::str::FromStr for AnsatzKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "window" => Ok(AnsatzKind::Window),
            "buffer" => Ok(AnsatzKind::Buffer),
            "soft_phi" => Ok(AnsatzKind::SoftPhi),
            "soft_multinet" => Ok(AnsatzKind::SoftMultinet),
            _ => Err(format!("unknown ansatz kind `{s}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Ansatz {
    Window1D(Window1D),
    Buffer1D(Buffer1D),
    Window2D(Box<Window2D>),
    Buffer2D(Box<Buffer2D>),
    Soft(SoftAnsatz),
}

impl Ansatz {
    pub fn kind(&self) -> AnsatzKind {
        match self {
            Ansatz::Window1D(_) | Ansatz::Window2D(_) => AnsatzKind::Window,
            Ansatz::Buffer1D(_) | Ansatz::Buffer2D(_) => AnsatzKind::Buffer,
            Ansatz::Soft(s) => match s.kind() {
                SoftKind::Phi => AnsatzKind::SoftPhi,
                SoftKind::Multinet => AnsatzKind::SoftMultinet,
            },
        }
    }

    pub fn layout(&self) -> &ParamLayout {
        match self {
            Ansatz::Window1D(a) => a.layout(),
            Ansatz::Buffer1D(a) => a.layout(),
            Ansatz::Window2D(a) => a.layout(),
            Ansatz::Buffer2D(a) => a.layout(),
            Ansatz::Soft(a) => a.layout(),
        }
    }

    pub fn problem(&self) -> ProblemSpec {
        match self {
            Ansatz::Window1D(a) => ProblemSpec::OneD(a.problem().clone()),
            Ansatz::Buffer1D(a) => ProblemSpec::OneD(a.problem().clone()),
            Ansatz::Window2D(a) => ProblemSpec::TwoD(a.problem().clone()),
            Ansatz::Buffer2D(a) => ProblemSpec::TwoD(a.problem().clone()),
            Ansatz::Soft(a) => a.problem().clone(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Ansatz::Window1D(_) | Ansatz::Buffer1D(_) => 1,
            Ansatz::Window2D(_) | Ansatz::Buffer2D(_) => 2,
            Ansatz::Soft(a) => a.problem().dimension(),
        }
    }

    /// Boundary conditions the training loss must still penalize.
    pub fn needs_soft_boundary(&self) -> bool {
        match self {
            Ansatz::Window2D(a) => a.mode() == Window2DMode::InterfaceOnlyHard,
            Ansatz::Soft(_) => true,
            _ => false,
        }
    }

    /// Interface conditions the training loss must still penalize.
    pub fn needs_soft_interface(&self) -> bool {
        matches!(self, Ansatz::Soft(_))
    }

    /// Subdomain used for evaluation at `point`; `side` selects the lower
    /// (`Below`) or upper (`Above`) subdomain when the point lies on an
    /// interface.
    pub fn subdomain(&self, point: &[f64], side: Option<Side>) -> usize {
        subdomain_with_side(&self.problem_ref(), point, side)
    }

    fn problem_ref(&self) -> ProblemRef<'_> {
        match self {
            Ansatz::Window1D(a) => ProblemRef::OneD(a.problem()),
            Ansatz::Buffer1D(a) => ProblemRef::OneD(a.problem()),
            Ansatz::Window2D(a) => ProblemRef::TwoD(a.problem()),
            Ansatz::Buffer2D(a) => ProblemRef::TwoD(a.problem()),
            Ansatz::Soft(a) => match a.problem() {
                ProblemSpec::OneD(p) => ProblemRef::OneD(p),
                ProblemSpec::TwoD(p) => ProblemRef::TwoD(p),
            },
        }
    }

    pub fn prepare<B: Backend>(&self, b: &mut B) -> Result<Prepared<B::S>, AnsatzError> {
        let dofs = match self {
            Ansatz::Buffer1D(a) => a.solve(b)?,
            Ansatz::Buffer2D(a) => a.solve(b)?,
            _ => Vec::new(),
        };
        Ok(Prepared {
            fingerprint: b.fingerprint(),
            dofs,
        })
    }

    /// Solution jets at `point` along each of `dirs`.
    pub fn eval<B: Backend>(
        &self,
        b: &mut B,
        prep: &Prepared<B::S>,
        point: &[f64],
        dirs: &[Dir],
        side: Option<Side>,
    ) -> Result<Vec<Jet2<B::S>>, AnsatzError> {
        if cfg!(debug_assertions) && prep.fingerprint != b.fingerprint() {
            return Err(AnsatzError::StaleDofs);
        }
        self.check_domain(point)?;
        let sub = self.subdomain(point, side);
        match self {
            Ansatz::Window1D(a) => a.eval(b, point[0], dirs, sub, side),
            Ansatz::Buffer1D(a) => a.eval(b, &prep.dofs, point[0], dirs, sub),
            Ansatz::Window2D(a) => a.eval(b, point, dirs, sub),
            Ansatz::Buffer2D(a) => a.eval(b, &prep.dofs, point, dirs, sub),
            Ansatz::Soft(a) => a.eval(b, point, dirs, sub),
        }
    }

    fn check_domain(&self, point: &[f64]) -> Result<(), AnsatzError> {
        let inside = match self.problem_ref() {
            ProblemRef::OneD(p) => point.len() == 1 && p.lo <= point[0] && point[0] <= p.hi,
            ProblemRef::TwoD(p) => point.len() == 2 && p.contains([point[0], point[1]]),
        };
        if inside {
            Ok(())
        } else {
            Err(AnsatzError::OutsideDomain {
                point: point.to_vec(),
            })
        }
    }
}

enum ProblemRef<'a> {
    OneD(&'a crate::problems::Problem1D),
    TwoD(&'a crate::problems::Problem2D),
}

fn subdomain_with_side(problem: &ProblemRef<'_>, point: &[f64], side: Option<Side>) -> usize {
    match problem {
        ProblemRef::OneD(p) => {
            let x = point[0];
            match (side, p.interfaces.iter().position(|&c| c == x)) {
                (Some(Side::Below), Some(i)) => i,
                (Some(Side::Above), Some(i)) => i + 1,
                _ => p.subdomain(x),
            }
        }
        ProblemRef::TwoD(p) => {
            let q = [point[0], point[1]];
            match side {
                Some(s) if p.level(q) == 0.0 || p.signed_distance(q).abs() < 1e-14 => match s {
                    Side::Below => 0,
                    Side::Above => 1,
                },
                _ => p.subdomain(q),
            }
        }
    }
}

/// Plain-value evaluation with buffer coefficients solved once.
pub struct Evaluator<'a> {
    ansatz: &'a Ansatz,
    backend: F64Backend<'a>,
    prep: Prepared<f64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(ansatz: &'a Ansatz, theta: &'a [f64]) -> Result<Self, AnsatzError> {
        if theta.len() != ansatz.layout().len() {
            return Err(AnsatzError::Config(format!(
                "parameter vector has {} entries, ansatz expects {}",
                theta.len(),
                ansatz.layout().len()
            )));
        }
        let mut backend = F64Backend::new(theta);
        let prep = ansatz.prepare(&mut backend)?;
        Ok(Self { ansatz, backend, prep })
    }

    pub fn eval(&mut self, point: &[f64], dirs: &[Dir], side: Option<Side>) -> Result<Vec<Jet2<f64>>, AnsatzError> {
        self.ansatz.eval(&mut self.backend, &self.prep, point, dirs, side)
    }

    pub fn value(&mut self, point: &[f64]) -> Result<f64, AnsatzError> {
        let dir = Dir {
            d1: [0.0; 2],
            d2: [0.0; 2],
        };
        Ok(self.eval(point, &[dir], None)?[0].v)
    }

    /// Value and gradient (one entry per axis).
    pub fn value_grad(&mut self, point: &[f64], side: Option<Side>) -> Result<(f64, Vec<f64>), AnsatzError> {
        let j = self.eval(point, &axes(point.len()), side)?;
        Ok((j[0].v, j.iter().map(|j| j.d1).collect()))
    }

    pub fn buffer_dofs(&self) -> &[Vec<f64>] {
        &self.prep.dofs
    }
}

/// Sum of jets, starting from an exact zero.
pub(crate) fn jet_sum<B: Backend>(b: &mut B, terms: Vec<Jet2<B::S>>) -> Jet2<B::S> {
    let mut it = terms.into_iter();
    match it.next() {
        Some(first) => it.fold(first, |a, t| a + t),
        None => b.zero_jet(),
    }
}
