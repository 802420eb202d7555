// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};

/// When hard thresholding may run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdMode {
    /// Once `epoch > n_thr` or the coefficient change drops below `gamma_thr`,
    /// threshold every epoch from then on.
    #[default]
    During,
    /// Train without thresholding; threshold once the coefficients have settled
    /// below `gamma`, then finish.
    FinalOnly,
}

/// Which stored state the backward sweep and the gradient quadrature pair
/// with the multiplier `λ_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdjointPairing {
    /// `f_{k+1}`: the state at the same step as the multiplier.
    #[default]
    Synchronous,
    /// `f_k`: the state the forward step started from. The gradient is then
    /// exact for the discretized cost.
    Lagged,
}

/// Optimizer and solver knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    /// Learning-rate scale.
    pub beta: f64,
    /// Ridge factor.
    pub eps0: f64,
    /// Hard threshold.
    pub sigma_thr: f64,
    /// Epochs before thresholding kicks in.
    pub n_thr: usize,
    /// Final convergence tolerance on the max-abs coefficient change.
    pub gamma: f64,
    /// Coefficient change that triggers thresholding early.
    pub gamma_thr: f64,
    pub max_epochs: usize,
    /// Internal Euler steps per data interval.
    pub substeps: usize,
    pub cfl_safety: f64,
    /// Average gradients over all intervals before updating.
    pub averaging: bool,
    /// With averaging, put the ridge term inside each interval's gradient
    /// instead of adding it once after the average.
    pub ridge_per_interval: bool,
    pub threshold_mode: ThresholdMode,
    /// Halved-dt retries for an interval whose forward solve blows up.
    pub max_retries: usize,
    /// Zero the multipliers on edge nodes after every backward step (ZeroPad grids only).
    pub clamp_adjoint_boundary: bool,
    pub adjoint_pairing: AdjointPairing,
    /// Upper bound on internal Euler steps per interval; a stability cap that
    /// asks for more counts as a blow-up.
    pub max_internal_steps: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            beta: 1e-3,
            eps0: 1e-12,
            sigma_thr: 1e-3,
            n_thr: 100,
            gamma: 1e-9,
            gamma_thr: 1e-6,
            max_epochs: 1000,
            substeps: 1,
            cfl_safety: 0.1,
            averaging: false,
            ridge_per_interval: false,
            threshold_mode: ThresholdMode::During,
            max_retries: 3,
            clamp_adjoint_boundary: false,
            adjoint_pairing: AdjointPairing::Synchronous,
            max_internal_steps: 20_000,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("eps0", self.eps0),
            ("sigma_thr", self.sigma_thr),
            ("gamma", self.gamma),
            ("gamma_thr", self.gamma_thr),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if !(self.cfl_safety.is_finite() && self.cfl_safety > 0.0) {
            return Err(Error::InvalidArgument("cfl_safety must be positive".into()));
        }
        if self.substeps == 0 || self.max_epochs == 0 || self.n_thr == 0 || self.max_internal_steps == 0 {
            return Err(Error::InvalidArgument(
                "substeps, max_epochs, n_thr and max_internal_steps must be positive".into(),
            ));
        }
        Ok(())
    }
}
