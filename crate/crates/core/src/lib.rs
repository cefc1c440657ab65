#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Sparse coding and dictionary learning from nonlinear measurements.
//!
//! Clipping, quantization, sign measurements, masking and linear sensing are
//! all handled through one cost: half the squared distance from a signal to
//! the set of signals consistent with the observation. The set is a box (or
//! an affine subspace), so projections and gradients are closed form.

pub mod cli;
pub mod dictlearn;
pub mod error;
pub mod linops;
pub mod measurements;
pub mod parallel;
pub mod pipeline;
pub mod solvers;

pub use error::{Error, Result};
pub use linops::{dct_dictionary, Dictionary, Signal, SparseCode};
pub use measurements::{apply_measurement, MeasurementModel, Observation};
pub use parallel::Execution;
