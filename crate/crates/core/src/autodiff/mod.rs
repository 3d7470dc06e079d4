//! Forward-mode second-order jets and a reverse-mode scalar tape.
//!
//! Spatial derivatives (up to second order along one direction at a time)
//! are carried by [`Jet2`]. Parameter gradients come from the [`Tape`].
//! The two compose: a `Jet2<Var>` is a jet whose components are recorded on
//! a tape, so residuals built from jets can be differentiated in reverse.

mod jet;
mod scalar;
mod tape;

pub use jet::{jet2_eval, Jet2};
pub use scalar::Scalar;
pub use tape::{grad_params, Adjoints, Tape, Var};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AdError {
    #[error("division by zero (numerator {numerator})")]
    DivisionByZero { numerator: f64 },
    #[error("|x| requested with a derivative exactly at its kink")]
    AbsKink,
    #[error("non-finite result {value}")]
    NonFinite { value: f64 },
    #[error("NaN in forward sweep at tape node {node}")]
    NaN { node: usize },
    #[error("axis {axis} out of range for dimension {dim}")]
    Axis { axis: usize, dim: usize },
    #[error("parameter slot {slot} out of range ({n_slots} slots)")]
    UnknownSlot { slot: usize, n_slots: usize },
}
