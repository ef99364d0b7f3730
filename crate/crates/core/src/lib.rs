//! Max-type tests for instability in out-of-sample forecast performance.
//!
//! Forecast losses are cut into blocks of length `n_T`. Adjacent block
//! means are compared, the largest standardized gap is taken, and the
//! maximum is calibrated against an extreme-value limit with CDF
//! `exp(-e^{-v} / sqrt(pi))`.
//!
//! The pipeline is
//! [`dgp::simulate`] → [`forecasting::estimate_ols`] →
//! [`forecasting::compute_losses`] → [`teststats::run_test`],
//! and [`harness`] wraps it in a Monte Carlo loop.
//!
//! Statistics are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

// `!(x > 0)` deliberately rejects NaN; rotations index two columns at once
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dgp;
pub mod error;
pub mod forecasting;
pub mod harness;
pub mod sample;
pub mod scalar;
pub mod teststats;
pub mod variance;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type LossSeries64 = sample::LossSeries<f64>;
pub type LossSeries32 = sample::LossSeries<f32>;
pub type BlockSummaries64 = teststats::BlockSummaries<f64>;
pub type TestReport64 = teststats::TestReport<f64>;
pub type VarianceEstimate64 = variance::VarianceEstimate<f64>;
pub type LossFunction64 = forecasting::LossFunction<f64>;
pub type SimulatedPath64 = dgp::SimulatedPath<f64>;
