// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced by the discovery library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("axis {axis} has {nodes} nodes but the stencil needs at least {needed}")]
    GridTooSmall {
        axis: usize,
        nodes: usize,
        needed: usize,
    },

    #[error("unsupported derivative order {0} (supported: 0..=6)")]
    UnsupportedDerivative(u32),

    #[error("forward and adjoint traces are misaligned ({forward} vs {adjoint} substeps)")]
    MisalignedTraces { forward: usize, adjoint: usize },

    #[error("data generation blew up with dt = {dt:e}")]
    UnstableGeneration { dt: f64 },

    #[error("need at least {needed} snapshots, have {got}")]
    TooFewSnapshots { needed: usize, got: usize },

    #[error("stability cap asks for {needed} internal steps, limit is {limit}")]
    TooManySteps { needed: usize, limit: usize },

    #[error("every interval blew up in epoch {epoch} ({intervals} intervals)")]
    Diverged { epoch: usize, intervals: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
