//! From-scratch feedforward networks with manual backpropagation, plus the
//! two Koopman-autoencoder trainers: joint single-level descent and the
//! bi-level scheme that refreshes the linear dynamics by EDMD every epoch.

mod network;
mod train;

pub use network::{
    collapse_linear, linear_chain_collapse, linear_chain_grads, Activation, BatchTrace, Network,
    NetworkSpec,
};
pub use train::{
    ae1_decoder_widths, ae1_encoder_width, compute_loss, train_bilevel, train_single_level,
    Ae1Hyper, Ae2Hyper, KoopmanNets, LossBreakdown, Optimizer, TrainedModel, TrainingConfig,
};

use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum AeError {
    /// Input length does not match the network's input width.
    DimensionMismatch { expected: usize, got: usize },
    /// `collapse_linear` met a nonlinear layer.
    NonlinearLayer,
    BadSpec(&'static str),
    /// Loss exceeded 1e3 x its initial value.
    TrainingDiverged,
    /// Window extends past the end of the dataset.
    WindowTooShort,
    Koopman(crate::koopman::KoopmanError),
}

impl fmt::Display for AeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AeError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            AeError::NonlinearLayer => write!(f, "network contains a nonlinear layer"),
            AeError::BadSpec(msg) => write!(f, "bad network spec: {msg}"),
            AeError::TrainingDiverged => write!(f, "training diverged"),
            AeError::WindowTooShort => write!(f, "window shorter than the prediction horizon"),
            AeError::Koopman(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for AeError {}

impl From<crate::koopman::KoopmanError> for AeError {
    fn from(e: crate::koopman::KoopmanError) -> Self {
        AeError::Koopman(e)
    }
}
