//! Index-modulation link simulator for frequency-diverse-array MIMO with
//! Walsh code, frequency-offset, permutation and spatial indices.
//!
//! The simulation kernels are generic over [`Real`] (`f32` or `f64`); the
//! analytical chain works in `f64`.

pub mod analysis;
pub mod channel;
pub mod combinatorics;
pub mod config;
pub mod constellation;
pub mod detectors;
pub mod error;
pub mod linalg;
pub mod message;
pub mod quadrature;
pub mod scalar;
pub mod sim;
pub mod special;
pub mod spreading;

pub use config::{BitBudget, NoiseSplit, PhaseMode, SystemConfig};
pub use error::{Error, Result};
pub use message::TxMessage;
pub use scalar::Real;

pub type Constellation64 = constellation::Constellation<f64>;
pub type Constellation32 = constellation::Constellation<f32>;
pub type ChannelState64 = channel::ChannelState<f64>;
pub type ChannelState32 = channel::ChannelState<f32>;
pub type BranchOutputs64 = channel::BranchOutputs<f64>;
pub type CompositeOutput64 = channel::CompositeOutput<f64>;
pub type DblcDetector64 = detectors::DblcDetector<f64>;
pub type DblcDetector32 = detectors::DblcDetector<f32>;
pub type MlDetector64 = detectors::MlDetector<f64>;
pub type MlDetector32 = detectors::MlDetector<f32>;
