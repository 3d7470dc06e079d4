//! Fully connected networks with jet propagation, initialization, and Adam.

mod activation;
mod adam;
mod init;
mod mlp;

pub use activation::Activation;
pub use adam::AdamState;
pub use init::{init_mlp, rng_from_seed, InitScheme, DEFAULT_GLOROT_SCALE};
pub use mlp::{mlp_forward, JetInput, JetTrace, Mlp, MlpArch, NetJet};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("network configuration: {0}")]
    Config(String),
    #[error("non-finite gradient entry at index {index}")]
    NonFiniteGradient { index: usize },
}
