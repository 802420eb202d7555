// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures for the benchmarks.

use pded_core::datagen::{generate, Generated, Overrides, ProblemName, ProblemSpec};

/// Heat1D data with `nx` nodes and `nt` intervals.
pub fn heat(nx: usize, nt: usize) -> Generated {
    let ov = Overrides {
        dims: Some(vec![nx]),
        n_t: Some(nt),
        ..Default::default()
    };
    generate(&ProblemSpec::with(ProblemName::Heat1D, ov)).expect("heat generation")
}
