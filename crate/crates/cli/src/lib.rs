// SPDX-License-Identifier: Apache-2.0

//! Front end for the `pded` binary: argument parsing, file formats, commands.

pub mod commands;
pub mod config;
pub mod format;
pub mod pde;

use std::fmt;

pub use commands::{run, Cli};

/// Bad flags or inputs that never reached the numerics.
#[derive(Debug, Clone)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

/// Process exit code for an error chain.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<pded_core::Error>() {
            use pded_core::Error as E;
            return match e {
                E::Diverged { .. } | E::UnstableGeneration { .. } | E::TooManySteps { .. } => {
                    EXIT_DIVERGED
                }
                E::UnsupportedDerivative(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            };
        }
    }
    EXIT_DATA
}
