//! Porcupine neural networks: two-layer relu networks whose incoming weight
//! vectors are confined to a finite set of lines through the origin.
//!
//! Modules:
//! - [`lines`]: line sets, neuron maps, weight decomposition
//! - [`kernel`]: the kernel ψ and ψ-transformed Gram blocks
//! - [`risk`]: closed-form population risks and Monte Carlo oracles
//! - [`landscape`]: region classification, gradients, stationarity
//! - [`schur`]: Schur-complement approximation bounds
//! - [`minimax`]: angular nets and minimax bounds
//! - [`trainer`]: projected SGD and the training experiments

pub mod error;
pub mod kernel;
pub mod landscape;
pub mod lines;
pub mod linalg;
pub mod mc;
pub mod minimax;
pub mod risk;
pub mod rng;
pub mod schur;
pub mod trainer;

pub use error::{PnnError, Result};
pub use kernel::{psi, psi_apply, KernelBundle};
pub use lines::{
    build_line_set, canonicalize_vector, cross_gram, decompose_weights, random_line_set, LineConfig,
    LineSet, LineSign, NeuronLineMap, PnnWeights, RegionSignature,
};
pub use landscape::{Gradient, RegionClassification, RegionLabel};
pub use mc::McEstimate;
pub use minimax::AngularNet;
pub use risk::RiskBreakdown;
pub use schur::{SchurReport, SweepMode, SweepRow};
pub use trainer::{Dataset, ExperimentConfig, Outcome, TrainConfig, TrainResult};
