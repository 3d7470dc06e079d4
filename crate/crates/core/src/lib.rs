//! Hard-constrained physics-informed networks for elliptic interface problems.

pub mod ansatz;
pub mod autodiff;
pub mod linalg;
pub mod nn;
pub mod geometry;
pub mod problems;
pub mod training;
pub mod window;

pub use ansatz::{Ansatz, AnsatzConfig, AnsatzKind, Evaluator};
pub use nn::{Activation, InitScheme};
pub use problems::{problem_spec, ProblemId, ProblemSpec};
pub use training::{
    constraint_report, predict, train, Checkpoint, ConstraintReport, ReferenceSolution, TrainConfig, TrainError,
    TrainReport,
};
