//! Joint ranging and clock synchronization from two-way round-trip-time
//! (RTT) records.
//!
//! A master measures RTTs to a slave that answers after a fixed number of its
//! own clock cycles. The records carry a sawtooth whose slope, phase and
//! offset encode the frequency difference, the relative clock phase and the
//! range. This crate provides
//!
//! * [`model`]: the forward sawtooth measurement model and noisy record generation,
//! * [`edge_sim`]: an edge-exact simulation of the exchange used to check the model,
//! * [`estimators`]: the ULS, PCP and robust WLS estimators,
//! * [`montecarlo`]: RMSE sweeps over noise, record length, outliers and `f_d`,
//! * [`analysis_io`]: residual whiteness checks, range calibration, file formats and the CLI.
//!
//! Model and estimator code is generic over [`Real`] (`f32` or `f64`); the
//! `*F64`/`*F32` aliases below name the common instantiations.

// Validation is written as `!(x > 0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis_io;
pub mod edge_sim;
pub mod error;
pub mod estimators;
pub mod model;
pub mod montecarlo;
pub mod scalar;

pub use error::{Error, Result};
pub use estimators::{Estimate, Method, SearchGrids, WeightVector};
pub use model::{ClockTruth, KnownParams, LinkTruth, NoiseSpec, RttSeries, SampleSchedule};
pub use scalar::{Real, SPEED_OF_LIGHT};

pub type ClockTruthF64 = model::ClockTruth<f64>;
pub type LinkTruthF64 = model::LinkTruth<f64>;
pub type SampleScheduleF64 = model::SampleSchedule<f64>;
pub type NoiseSpecF64 = model::NoiseSpec<f64>;
pub type KnownParamsF64 = model::KnownParams<f64>;
pub type RttSeriesF64 = model::RttSeries<f64>;
pub type EstimateF64 = estimators::Estimate<f64>;
pub type SearchGridsF64 = estimators::SearchGrids<f64>;
pub type WeightVectorF64 = estimators::WeightVector<f64>;
pub type OscillatorF64 = edge_sim::Oscillator<f64>;

pub type ClockTruthF32 = model::ClockTruth<f32>;
pub type LinkTruthF32 = model::LinkTruth<f32>;
pub type RttSeriesF32 = model::RttSeries<f32>;
pub type EstimateF32 = estimators::Estimate<f32>;
pub type SearchGridsF32 = estimators::SearchGrids<f32>;
