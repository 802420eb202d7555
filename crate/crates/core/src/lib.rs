// SPDX-License-Identifier: Apache-2.0

//! PDE discovery by adjoint-gradient descent over a library of candidate terms.

#![allow(clippy::needless_range_loop)]

pub mod adjoint;
pub mod baseline;
pub mod datagen;
pub mod error;
pub mod fdkernel;
pub mod forward;
pub mod grid;
pub mod hyper;
pub mod library;
pub mod metrics;
pub mod optimize;
pub mod preprocess;

pub use error::{Error, Result};
pub use grid::{Boundary, Dataset, Field, Grid};
pub use hyper::{Hyperparameters, ThresholdMode};
pub use library::{CoefficientVector, TermKey, TermLibrary};
pub use optimize::{discover, DiscoveryReport, Flag};
