// SPDX-License-Identifier: Apache-2.0

//! Gradient-descent discovery loop with scaled learning rates and hard thresholding.

use std::collections::BTreeSet;

use log::{debug, warn};
use rayon::prelude::*;

use crate::adjoint::{data_gradient, solve_adjoint_interval};
use crate::error::{Error, Result};
use crate::forward::{check_shapes, integrate, step_plan, Plan};
use crate::grid::{Dataset, Grid};
use crate::hyper::{Hyperparameters, ThresholdMode};
use crate::library::{coefficient_l1_error, CoefficientVector, TermKey, TermLibrary};
use crate::metrics::stagnation_flag;

/// Slots permanently pinned at zero.
pub type FrozenSet = BTreeSet<usize>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flag {
    Converged,
    HitMaxEpochs,
    /// Intervals whose gradient was dropped after exhausting retries, summed over epochs.
    IntervalBlowups(usize),
    ResidualStagnation,
}

impl std::fmt::Display for Flag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Flag::Converged => write!(f, "converged"),
            Flag::HitMaxEpochs => write!(f, "hit_max_epochs"),
            Flag::IntervalBlowups(n) => write!(f, "interval_blowups={n}"),
            Flag::ResidualStagnation => write!(f, "residual_stagnation"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiscoveryReport {
    pub library: TermLibrary,
    pub final_alpha: CoefficientVector,
    pub active_terms: Vec<TermKey>,
    pub frozen: FrozenSet,
    pub epochs_run: usize,
    /// One row per epoch, taken after that epoch's thresholding.
    pub per_epoch_alpha: Vec<Vec<f64>>,
    pub per_epoch_l2_residual: Vec<f64>,
    /// Coefficients just before the first thresholding pass, if one ran.
    pub pre_threshold_alpha: Option<CoefficientVector>,
    pub flags: Vec<Flag>,
}

impl DiscoveryReport {
    pub fn converged(&self) -> bool {
        self.flags.contains(&Flag::Converged)
    }

    pub fn has_flag(&self, f: Flag) -> bool {
        self.flags.contains(&f)
    }

    pub fn flags_string(&self) -> String {
        self.flags
            .iter()
            .map(Flag::to_string)
            .collect::<Vec<_>>()
            .join(";")
    }

    /// Per-epoch trajectories: `epoch,term_0,…,term_K,l2_residual`.
    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from("epoch");
        for k in 0..self.library.len() {
            out.push_str(&format!(",term_{k}"));
        }
        out.push_str(",l2_residual\n");
        for (e, (row, r)) in self
            .per_epoch_alpha
            .iter()
            .zip(&self.per_epoch_l2_residual)
            .enumerate()
        {
            out.push_str(&(e + 1).to_string());
            for v in row {
                out.push_str(&format!(",{v:e}"));
            }
            out.push_str(&format!(",{r:e}\n"));
        }
        out
    }
}

/// `β · min(Δx)^(|d| - d_max)`.
pub fn learning_rate(term: &TermKey, library: &TermLibrary, hp: &Hyperparameters, grid: &Grid) -> f64 {
    let exp = term.deriv_order() as i32 - library.d_max() as i32;
    hp.beta * grid.min_spacing().powi(exp)
}

/// One descent step. Frozen slots stay exactly zero.
pub fn update_step(
    alpha: &CoefficientVector,
    grad: &CoefficientVector,
    hp: &Hyperparameters,
    grid: &Grid,
    library: &TermLibrary,
    frozen: &FrozenSet,
) -> Result<CoefficientVector> {
    if alpha.len() != library.len() || grad.len() != library.len() {
        return Err(Error::LengthMismatch {
            expected: library.len(),
            got: if alpha.len() != library.len() {
                alpha.len()
            } else {
                grad.len()
            },
        });
    }
    update_raw(alpha, grad.values(), hp, grid, library, frozen)
}

fn update_raw(
    alpha: &CoefficientVector,
    grad: &[f64],
    hp: &Hyperparameters,
    grid: &Grid,
    library: &TermLibrary,
    frozen: &FrozenSet,
) -> Result<CoefficientVector> {
    if let Some(k) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("gradient slot {k}")));
    }
    let next = library
        .terms()
        .iter()
        .enumerate()
        .map(|(k, t)| {
            if frozen.contains(&k) {
                0.0
            } else {
                alpha[k] - learning_rate(t, library, hp, grid) * grad[k]
            }
        })
        .collect();
    CoefficientVector::new(next)
}

/// Zeroes and freezes every slot with `|α| < sigma_thr`; returns the cumulative frozen set.
pub fn apply_threshold(
    alpha: &CoefficientVector,
    sigma_thr: f64,
    frozen: &FrozenSet,
) -> (CoefficientVector, FrozenSet) {
    let mut frozen = frozen.clone();
    let values = alpha
        .values()
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            if frozen.contains(&k) || a.abs() < sigma_thr {
                frozen.insert(k);
                0.0
            } else {
                a
            }
        })
        .collect();
    (CoefficientVector(values), frozen)
}

struct IntervalOutcome {
    grad: Option<Vec<f64>>,
    sq_err: f64,
    sq_ref: f64,
}

fn run_interval(
    data: &Dataset,
    j: usize,
    library: &TermLibrary,
    alpha: &CoefficientVector,
    hp: &Hyperparameters,
) -> Result<IntervalOutcome> {
    let f0 = &data.snapshots()[j];
    let fstar = &data.snapshots()[j + 1];
    let interval = data.times()[j + 1] - data.times()[j];
    let plan = Plan::new(library, alpha);
    let (n0, _) = step_plan(
        interval,
        hp.substeps,
        library,
        alpha,
        data.grid().min_spacing(),
        hp.cfl_safety,
    );
    let sq_ref: f64 = fstar.data().iter().map(|v| v * v).sum();
    let mut sq_err = f64::INFINITY;
    for r in 0..=hp.max_retries {
        let n = n0.saturating_mul(1 << r);
        if n > hp.max_internal_steps {
            break;
        }
        let fw = integrate(f0, n, interval / n as f64, &plan);
        if fw.blown_up {
            continue;
        }
        sq_err = fw
            .end()
            .data()
            .iter()
            .zip(fstar.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let adj = solve_adjoint_interval(&fw, fstar, library, alpha, hp)?;
        if adj.blown_up {
            continue;
        }
        let g = data_gradient(&fw, &adj, library)?;
        return Ok(IntervalOutcome {
            grad: Some(g),
            sq_err,
            sq_ref,
        });
    }
    Ok(IntervalOutcome {
        grad: None,
        sq_err,
        sq_ref,
    })
}

fn max_abs_change(a: &CoefficientVector, b: &CoefficientVector) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn relative(sq_err: f64, sq_ref: f64) -> f64 {
    if sq_ref > 0.0 {
        (sq_err / sq_ref).sqrt()
    } else {
        sq_err.sqrt()
    }
}

/// Runs the discovery loop on `data`.
///
/// Without averaging the coefficients are updated after every interval; with
/// averaging the interval gradients are computed in parallel, averaged, and
/// applied once per epoch.
pub fn discover(
    data: &Dataset,
    library: &TermLibrary,
    hp: &Hyperparameters,
    initial_alpha: Option<&CoefficientVector>,
) -> Result<DiscoveryReport> {
    hp.validate()?;
    if data.len() < 2 {
        return Err(Error::TooFewSnapshots {
            needed: 2,
            got: data.len(),
        });
    }
    let mut alpha = match initial_alpha {
        Some(a) => CoefficientVector::for_library(a.values().to_vec(), library)?,
        None => CoefficientVector::zeros(library.len()),
    };
    check_shapes(&data.snapshots()[0], library, &alpha)?;

    let grid = data.grid().as_ref();
    let n_int = data.n_intervals();
    let mut frozen = FrozenSet::new();
    let mut thresholding = false;
    let mut passes = 0usize;
    let mut total_blowups = 0usize;
    let mut per_epoch_alpha = Vec::new();
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut pre_threshold = None;

    for epoch in 1..=hp.max_epochs {
        let prev = alpha.clone();
        let mut sq_err = 0.0;
        let mut sq_ref = 0.0;
        let mut blowups = 0usize;

        if hp.averaging {
            let outcomes = (0..n_int)
                .into_par_iter()
                .map(|j| run_interval(data, j, library, &alpha, hp))
                .collect::<Result<Vec<_>>>()?;
            let mut sum = vec![0.0; library.len()];
            for o in &outcomes {
                sq_err += o.sq_err;
                sq_ref += o.sq_ref;
                match &o.grad {
                    Some(g) => {
                        for (s, (gk, a)) in sum.iter_mut().zip(g.iter().zip(alpha.values())) {
                            *s += gk;
                            if hp.ridge_per_interval {
                                *s += 2.0 * hp.eps0 * a;
                            }
                        }
                    }
                    None => blowups += 1,
                }
            }
            if blowups == n_int {
                return Err(Error::Diverged {
                    epoch,
                    intervals: n_int,
                });
            }
            let mut g: Vec<f64> = sum.iter().map(|s| s / n_int as f64).collect();
            if !hp.ridge_per_interval {
                for (gk, a) in g.iter_mut().zip(alpha.values()) {
                    *gk += 2.0 * hp.eps0 * a;
                }
            }
            alpha = update_raw(&alpha, &g, hp, grid, library, &frozen)?;
        } else {
            for j in 0..n_int {
                let o = run_interval(data, j, library, &alpha, hp)?;
                sq_err += o.sq_err;
                sq_ref += o.sq_ref;
                match o.grad {
                    Some(mut g) => {
                        for (gk, a) in g.iter_mut().zip(alpha.values()) {
                            *gk += 2.0 * hp.eps0 * a;
                        }
                        alpha = update_raw(&alpha, &g, hp, grid, library, &frozen)?;
                    }
                    None => blowups += 1,
                }
            }
            if blowups == n_int {
                return Err(Error::Diverged {
                    epoch,
                    intervals: n_int,
                });
            }
        }
        if blowups > 0 {
            warn!("epoch {epoch}: {blowups} of {n_int} intervals blew up; their gradients were dropped");
        }
        total_blowups += blowups;

        let delta = max_abs_change(&alpha, &prev);
        let run_threshold = match hp.threshold_mode {
            ThresholdMode::During => {
                if !thresholding && (epoch > hp.n_thr || delta < hp.gamma_thr) {
                    thresholding = true;
                }
                thresholding
            }
            ThresholdMode::FinalOnly => delta < hp.gamma,
        };
        let mut frozen_changed = false;
        if run_threshold {
            if passes == 0 {
                pre_threshold = Some(alpha.clone());
            }
            let (a, f) = apply_threshold(&alpha, hp.sigma_thr, &frozen);
            frozen_changed = f != frozen;
            alpha = a;
            frozen = f;
            passes += 1;
        }

        let resid = relative(sq_err, sq_ref);
        debug!("epoch {epoch}: delta {delta:e}, residual {resid:e}, frozen {}", frozen.len());
        per_epoch_alpha.push(alpha.values().to_vec());
        residuals.push(resid);

        if delta < hp.gamma && !frozen_changed && passes > 0 {
            converged = true;
            break;
        }
    }

    let mut flags = Vec::new();
    flags.push(if converged {
        Flag::Converged
    } else {
        Flag::HitMaxEpochs
    });
    if total_blowups > 0 {
        flags.push(Flag::IntervalBlowups(total_blowups));
    }
    if stagnation_flag(&residuals, 50, 0.99, 1e-8) {
        flags.push(Flag::ResidualStagnation);
    }
    let active_terms = library
        .terms()
        .iter()
        .zip(alpha.values())
        .filter(|(_, &a)| a != 0.0)
        .map(|(t, _)| t.clone())
        .collect();
    Ok(DiscoveryReport {
        library: library.clone(),
        final_alpha: alpha,
        active_terms,
        frozen,
        epochs_run: per_epoch_alpha.len(),
        per_epoch_alpha,
        pre_threshold_alpha: pre_threshold,
        per_epoch_l2_residual: residuals,
        flags,
    })
}

/// Data behind convergence plots.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSummary {
    /// Per-epoch L1 coefficient error, when a truth vector was supplied.
    pub l1_error: Option<Vec<f64>>,
    pub l2_residual: Vec<f64>,
    pub l1_monotone: Option<bool>,
    pub residual_monotone: bool,
}

fn non_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

pub fn convergence_metrics(
    report: &DiscoveryReport,
    truth: Option<&CoefficientVector>,
) -> Result<ConvergenceSummary> {
    let l1_error = match truth {
        Some(t) => Some(
            report
                .per_epoch_alpha
                .iter()
                .map(|row| coefficient_l1_error(&CoefficientVector(row.clone()), t))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    Ok(ConvergenceSummary {
        l1_monotone: l1_error.as_deref().map(non_increasing),
        residual_monotone: non_increasing(&report.per_epoch_l2_residual),
        l1_error,
        l2_residual: report.per_epoch_l2_residual.clone(),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::grid::{Boundary, Field};
    use crate::library::build_library;

    fn lib9() -> TermLibrary {
        let s: Vec<Vec<u32>> = (1..=3).map(|k| vec![k]).collect();
        build_library(1, 1, &s, &s).unwrap()
    }

    fn grid(dx: f64) -> Grid {
        Grid::line(10, dx, 0.0, Boundary::ZeroPad).unwrap()
    }

    #[test]
    fn learning_rate_examples() {
        let lib = lib9();
        let hp = Hyperparameters {
            beta: 1.0,
            ..Default::default()
        };
        let g = grid(0.1);
        let t3 = TermKey::new(0, vec![3], vec![1]);
        let t2 = TermKey::new(0, vec![2], vec![1]);
        assert_eq!(learning_rate(&t3, &lib, &hp, &g), 1.0);
        assert!((learning_rate(&t2, &lib, &hp, &g) - 10.0).abs() < 1e-12);
        let hp = Hyperparameters {
            beta: 0.02,
            ..Default::default()
        };
        let t1 = TermKey::new(0, vec![1], vec![1]);
        assert!((learning_rate(&t1, &lib, &hp, &grid(0.01)) - 200.0).abs() < 1e-9);
    }

    #[test]
    fn update_step_examples() {
        let lib = TermLibrary::new(vec![TermKey::new(0, vec![1], vec![1])], 1, 1).unwrap();
        let hp = Hyperparameters {
            beta: 1.0,
            ..Default::default()
        };
        let g = grid(0.1);
        let zero = CoefficientVector::zeros(1);
        let grad = CoefficientVector::new(vec![-0.5]).unwrap();
        let a = update_step(&zero, &grad, &hp, &g, &lib, &FrozenSet::new()).unwrap();
        assert_eq!(a.values(), &[0.5]);
        let a = update_step(&a, &zero, &hp, &g, &lib, &FrozenSet::new()).unwrap();
        assert_eq!(a.values(), &[0.5]);
        let frozen: FrozenSet = [0].into_iter().collect();
        let a = update_step(&zero, &grad, &hp, &g, &lib, &frozen).unwrap();
        assert_eq!(a.values(), &[0.0]);
    }

    #[test]
    fn update_rejects_non_finite_gradient() {
        let lib = TermLibrary::new(vec![TermKey::new(0, vec![1], vec![1])], 1, 1).unwrap();
        let r = update_raw(
            &CoefficientVector::zeros(1),
            &[f64::NAN],
            &Hyperparameters::default(),
            &grid(0.1),
            &lib,
            &FrozenSet::new(),
        );
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn threshold_examples() {
        let a = CoefficientVector::new(vec![1.0, 5e-4]).unwrap();
        let (b, f) = apply_threshold(&a, 1e-3, &FrozenSet::new());
        assert_eq!(b.values(), &[1.0, 0.0]);
        assert_eq!(f, [1].into_iter().collect());
        let (c, f0) = apply_threshold(&a, 0.0, &FrozenSet::new());
        assert_eq!(c, a);
        assert!(f0.is_empty());
        let (d, fa) = apply_threshold(&a, 10.0, &FrozenSet::new());
        assert_eq!(d.values(), &[0.0, 0.0]);
        assert_eq!(fa.len(), 2);
    }

    fn constant_data(value: f64, steps: usize) -> Dataset {
        let g = Arc::new(Grid::line(16, 1.0 / 16.0, 0.0, Boundary::ZeroPad).unwrap());
        let f = Field::new(g.clone(), 1, vec![value; 16]).unwrap();
        let times = (0..=steps).map(|k| k as f64 * 1e-3).collect();
        Dataset::new(g, times, vec![f; steps + 1]).unwrap()
    }

    #[test]
    fn zero_truth_converges_immediately() {
        let data = constant_data(0.0, 3);
        let rep = discover(&data, &lib9(), &Hyperparameters::default(), None).unwrap();
        assert!(rep.converged());
        // The first epoch freezes every slot, the second confirms nothing moved.
        assert_eq!(rep.epochs_run, 2);
        assert!(rep.active_terms.is_empty());
        assert!(rep.per_epoch_l2_residual.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn ridge_decays_geometrically_on_exact_data() {
        // f = 0 keeps the integral part at zero, so only the ridge term acts.
        let data = constant_data(0.0, 1);
        let lib = TermLibrary::new(vec![TermKey::new(0, vec![1], vec![1])], 1, 1).unwrap();
        let hp = Hyperparameters {
            beta: 0.1,
            eps0: 0.5,
            max_epochs: 5,
            n_thr: 1000,
            gamma_thr: 0.0,
            gamma: 0.0,
            ..Default::default()
        };
        let a0 = CoefficientVector::new(vec![1.0]).unwrap();
        let rep = discover(&data, &lib, &hp, Some(&a0)).unwrap();
        let mut expect = 1.0;
        for row in &rep.per_epoch_alpha {
            expect *= 1.0 - 0.1 * 2.0 * 0.5;
            assert!((row[0] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let data = constant_data(0.0, 2);
        let rep = discover(&data, &lib9(), &Hyperparameters::default(), None).unwrap();
        let csv = rep.trajectory_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "epoch,term_0,term_1,term_2,term_3,term_4,term_5,term_6,term_7,term_8,l2_residual"
        );
        assert_eq!(lines.count(), rep.epochs_run);
    }
}
