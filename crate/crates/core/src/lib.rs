//! Joint pilot and payload power allocation for uplink cell-free massive MIMO
//! serving URLLC devices under finite blocklength.
//!
//! The crate is organised bottom-up:
//!
//! * [`scenario`] builds the factory geometry and large-scale fading.
//! * [`channel`] holds MMSE estimation statistics and small-scale draws.
//! * [`fbl`] contains the finite-blocklength rate mathematics and the
//!   closed-form lower-bound SINRs for MRC and FZF decoding.
//! * [`approx`] provides the local log/monomial bounds used per SCA step.
//! * [`gp`] is a self-contained generalized geometric-program solver.
//! * [`optimizer`] runs the SCA iterations and the benchmark schemes.
//! * [`montecarlo`] simulates the decoders to validate the bounds.
//! * [`experiment`] reproduces the numerical studies and emits CSV.

pub mod approx;
pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod fbl;
pub mod gp;
mod math;
pub mod montecarlo;
pub mod optimizer;
pub mod rng;
pub mod scenario;
pub mod selftest;

pub use channel::{ChannelRealization, EstimationStats};
pub use config::{PerDevice, SystemConfig};
pub use error::{Error, Result};
pub use fbl::FblParams;
pub use optimizer::{Decoder, IterationTrace, PowerAllocation};
pub use scenario::LargeScaleModel;
