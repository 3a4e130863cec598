//! Numerical laboratory for bidirectional GAN estimation.
//!
//! The crate builds the exact piecewise-linear generator/encoder pair that
//! bijects two samples of different dimensions, realizes it as a ReLU
//! network, computes Dudley (bounded-Lipschitz) and Wasserstein-1 distances
//! between discrete measures exactly, and evaluates the covering-number and
//! chaining bounds that control the estimation error.
//!
//! Module map:
//!
//! * [`relu_net`] - dense feedforward ReLU networks, clipping layer, reverse-mode gradients.
//! * [`cpwl`] - continuous piecewise-linear transport between samples and its network realization.
//! * [`ipm`] - discrete measures and exact integral probability metrics.
//! * [`bounds`] - covering numbers, refined Dudley integral, rate curves and the error budget.
//! * [`trainer`] - the empirical minimax objective, alternating training and error decomposition.
//! * [`data`] / [`experiment`] - samplers, rate experiment harness and log-log rate fit.
//! * [`lp`] / [`transport`] - the dense simplex and transportation solvers behind [`ipm`].

pub mod bounds;
pub mod cpwl;
pub mod data;
pub mod error;
pub mod experiment;
pub mod ipm;
pub mod lp;
pub mod relu_net;
pub mod trainer;
pub mod transport;

pub use bounds::{EntropyModel, ErrorBudget};
pub use cpwl::{ArchitecturePlan, CpwlPath, SamplePairing};
pub use data::DataSpec;
pub use error::{Error, Result};
pub use experiment::RatePoint;
pub use ipm::{DiscreteMeasure, IpmResult, LipschitzSpec};
pub use relu_net::ReluNetwork;
pub use trainer::{TrainState, TrainingConfig};
