//! Link-level simulation of ratio-shift-keyed molecular communication.
//!
//! A point transmitter releases several molecule types whose count ratios
//! carry the data; an absorbing spherical receiver counts arrivals per
//! symbol interval. The crate covers the diffusion channel, ratio-of-Gaussian
//! statistics, three detectors, analytic and Monte Carlo BER, and the usual
//! single-molecule baselines.

pub mod analysis;
pub mod baselines;
pub mod channel;
pub mod cli;
pub mod error;
pub mod mlsd;
pub mod modem;
pub mod quad;
pub mod ratio_stats;
pub mod rng;
pub mod simulate;
pub mod special;

pub use channel::{ArrivalMoments, ChannelParams, Cir};
pub use error::{Error, Result};
pub use modem::{BranchMetric, Coding, DetectorKind, MrskConfig, RatioSymbol};
