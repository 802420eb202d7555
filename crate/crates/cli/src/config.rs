// SPDX-License-Identifier: Apache-2.0

//! Hyperparameter resolution: flags, then a `key = value` config file, then defaults.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use pded_core::hyper::AdjointPairing;
use pded_core::{Hyperparameters, ThresholdMode};

use crate::format::parse_key_values;
use crate::UsageError;

#[derive(Debug, Clone, Default, Args)]
pub struct HpArgs {
    /// Plain `key = value` file; flags win over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub eps0: Option<f64>,
    #[arg(long)]
    pub sigma_thr: Option<f64>,
    #[arg(long)]
    pub n_thr: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub gamma_thr: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub substeps: Option<usize>,
    #[arg(long)]
    pub cfl_safety: Option<f64>,
    /// Average interval gradients before each update.
    #[arg(long)]
    pub averaging: bool,
    #[arg(long)]
    pub ridge_per_interval: bool,
    /// `during` or `final-only`.
    #[arg(long)]
    pub threshold_mode: Option<String>,
    #[arg(long)]
    pub max_retries: Option<usize>,
    #[arg(long)]
    pub clamp_adjoint_boundary: bool,
    /// `synchronous` or `lagged`.
    #[arg(long)]
    pub adjoint_pairing: Option<String>,
    #[arg(long)]
    pub max_internal_steps: Option<usize>,
}

pub fn parse_threshold_mode(s: &str) -> Result<ThresholdMode> {
    match s.to_ascii_lowercase().replace('_', "-").as_str() {
        "during" => Ok(ThresholdMode::During),
        "final-only" | "final" => Ok(ThresholdMode::FinalOnly),
        _ => bail!("unknown threshold mode `{s}` (during, final-only)"),
    }
}

pub fn threshold_mode_name(m: ThresholdMode) -> &'static str {
    match m {
        ThresholdMode::During => "during",
        ThresholdMode::FinalOnly => "final-only",
    }
}

pub fn parse_pairing(s: &str) -> Result<AdjointPairing> {
    match s.to_ascii_lowercase().as_str() {
        "synchronous" | "sync" => Ok(AdjointPairing::Synchronous),
        "lagged" => Ok(AdjointPairing::Lagged),
        _ => bail!("unknown adjoint pairing `{s}` (synchronous, lagged)"),
    }
}

pub fn pairing_name(p: AdjointPairing) -> &'static str {
    match p {
        AdjointPairing::Synchronous => "synchronous",
        AdjointPairing::Lagged => "lagged",
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse::<T>()
        .map_err(|_| anyhow!("config key `{key}`: cannot parse `{v}`"))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => bail!("config key `{key}`: expected a boolean, got `{v}`"),
    }
}

/// Applies config-file entries on top of `hp`. Unknown keys are errors.
pub fn apply_config(hp: &mut Hyperparameters, kv: &BTreeMap<String, String>) -> Result<()> {
    for (k, v) in kv {
        match k.replace('-', "_").as_str() {
            "beta" => hp.beta = parse(k, v)?,
            "eps0" => hp.eps0 = parse(k, v)?,
            "sigma_thr" => hp.sigma_thr = parse(k, v)?,
            "n_thr" => hp.n_thr = parse(k, v)?,
            "gamma" => hp.gamma = parse(k, v)?,
            "gamma_thr" => hp.gamma_thr = parse(k, v)?,
            "max_epochs" => hp.max_epochs = parse(k, v)?,
            "substeps" => hp.substeps = parse(k, v)?,
            "cfl_safety" => hp.cfl_safety = parse(k, v)?,
            "averaging" => hp.averaging = parse_bool(k, v)?,
            "ridge_per_interval" => hp.ridge_per_interval = parse_bool(k, v)?,
            "threshold_mode" => hp.threshold_mode = parse_threshold_mode(v)?,
            "max_retries" => hp.max_retries = parse(k, v)?,
            "clamp_adjoint_boundary" => hp.clamp_adjoint_boundary = parse_bool(k, v)?,
            "adjoint_pairing" => hp.adjoint_pairing = parse_pairing(v)?,
            "max_internal_steps" => hp.max_internal_steps = parse(k, v)?,
            _ => bail!("unknown config key `{k}`"),
        }
    }
    Ok(())
}

impl HpArgs {
    pub fn resolve(&self) -> Result<Hyperparameters> {
        let mut hp = Hyperparameters::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let kv = parse_key_values(&text).map_err(|e| UsageError(e.to_string()))?;
            apply_config(&mut hp, &kv).map_err(|e| UsageError(e.to_string()))?;
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { hp.$f = v; } )* };
        }
        take!(beta, eps0, sigma_thr, n_thr, gamma, gamma_thr, max_epochs, substeps, cfl_safety,
              max_retries, max_internal_steps);
        if self.averaging {
            hp.averaging = true;
        }
        if self.ridge_per_interval {
            hp.ridge_per_interval = true;
        }
        if self.clamp_adjoint_boundary {
            hp.clamp_adjoint_boundary = true;
        }
        if let Some(m) = &self.threshold_mode {
            hp.threshold_mode = parse_threshold_mode(m).map_err(|e| UsageError(e.to_string()))?;
        }
        if let Some(p) = &self.adjoint_pairing {
            hp.adjoint_pairing = parse_pairing(p).map_err(|e| UsageError(e.to_string()))?;
        }
        hp.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(hp)
    }
}

/// Every effective hyperparameter, in config-file syntax.
pub fn hp_key_values(hp: &Hyperparameters) -> Vec<(String, String)> {
    vec![
        ("beta".into(), format!("{:e}", hp.beta)),
        ("eps0".into(), format!("{:e}", hp.eps0)),
        ("sigma_thr".into(), format!("{:e}", hp.sigma_thr)),
        ("n_thr".into(), hp.n_thr.to_string()),
        ("gamma".into(), format!("{:e}", hp.gamma)),
        ("gamma_thr".into(), format!("{:e}", hp.gamma_thr)),
        ("max_epochs".into(), hp.max_epochs.to_string()),
        ("substeps".into(), hp.substeps.to_string()),
        ("cfl_safety".into(), format!("{:e}", hp.cfl_safety)),
        ("averaging".into(), hp.averaging.to_string()),
        ("ridge_per_interval".into(), hp.ridge_per_interval.to_string()),
        ("threshold_mode".into(), threshold_mode_name(hp.threshold_mode).into()),
        ("max_retries".into(), hp.max_retries.to_string()),
        ("clamp_adjoint_boundary".into(), hp.clamp_adjoint_boundary.to_string()),
        ("adjoint_pairing".into(), pairing_name(hp.adjoint_pairing).into()),
        ("max_internal_steps".into(), hp.max_internal_steps.to_string()),
    ]
}
