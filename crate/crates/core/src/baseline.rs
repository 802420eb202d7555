// SPDX-License-Identifier: Apache-2.0

//! Dictionary regression baseline: finite-difference features and STRidge.

use log::debug;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fdkernel::{check_derivative, derivative_unchecked, monomial_unchecked, stencil};
use crate::grid::{Boundary, Dataset};
use crate::library::{CoefficientVector, TermKey, TermLibrary};

/// Least-squares problem `theta · α ≈ target` for one equation.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    pub eq: usize,
    pub theta: DMatrix<f64>,
    pub target: DVector<f64>,
    pub term_keys: Vec<TermKey>,
    /// Library slot of each column.
    pub slots: Vec<usize>,
    /// Rows removed for stencil margins or non-finite entries.
    pub dropped_rows: usize,
}

/// Three-point time-derivative weights at snapshot `j` (central inside,
/// one-sided at the ends), for possibly uneven spacing.
fn time_weights(t: &[f64], j: usize) -> ([usize; 3], [f64; 3]) {
    let n = t.len();
    if j == 0 {
        let (h1, h2) = (t[1] - t[0], t[2] - t[1]);
        (
            [0, 1, 2],
            [
                -(2.0 * h1 + h2) / (h1 * (h1 + h2)),
                (h1 + h2) / (h1 * h2),
                -h1 / (h2 * (h1 + h2)),
            ],
        )
    } else if j == n - 1 {
        let (h1, h2) = (t[n - 2] - t[n - 3], t[n - 1] - t[n - 2]);
        (
            [n - 3, n - 2, n - 1],
            [
                h2 / (h1 * (h1 + h2)),
                -(h1 + h2) / (h1 * h2),
                (2.0 * h2 + h1) / (h2 * (h1 + h2)),
            ],
        )
    } else {
        let (h1, h2) = (t[j] - t[j - 1], t[j + 1] - t[j]);
        (
            [j - 1, j, j + 1],
            [
                -h2 / (h1 * (h1 + h2)),
                (h2 - h1) / (h1 * h2),
                h1 / (h2 * (h1 + h2)),
            ],
        )
    }
}

/// Features at data resolution, one problem per equation.
pub fn build_dictionary(data: &Dataset, library: &TermLibrary) -> Result<Vec<RegressionProblem>> {
    if data.len() < 3 {
        return Err(Error::TooFewSnapshots {
            needed: 3,
            got: data.len(),
        });
    }
    let grid = data.grid();
    if library.n_eqs() != data.n_components() || library.n_dims() != grid.ndim() {
        return Err(Error::DimensionMismatch(
            "library does not match the data set".into(),
        ));
    }
    for t in library.terms() {
        check_derivative(grid, &t.deriv)?;
    }

    // Nodes whose stencils stay inside the grid on every axis.
    let mut margin = vec![0usize; grid.ndim()];
    if grid.boundary() == Boundary::ZeroPad {
        for t in library.terms() {
            for (j, &d) in t.deriv.iter().enumerate() {
                let reach = stencil(d)?.width() / 2;
                margin[j] = margin[j].max(reach);
            }
        }
    }
    let nodes: Vec<usize> = (0..grid.len())
        .filter(|&flat| {
            grid.unravel(flat)
                .iter()
                .zip(grid.dims())
                .zip(&margin)
                .all(|((&k, &n), &m)| k >= m && k + m < n)
        })
        .collect();
    let nt = data.len();
    let m = grid.len();

    let mut out = Vec::with_capacity(library.n_eqs());
    for eq in 0..library.n_eqs() {
        let slots: Vec<usize> = (0..library.len())
            .filter(|&k| library.terms()[k].eq == eq)
            .collect();
        let columns: Vec<Vec<f64>> = slots
            .par_iter()
            .map(|&k| {
                let t = &library.terms()[k];
                let mut col = Vec::with_capacity(nt * nodes.len());
                for snap in data.snapshots() {
                    let full = derivative_unchecked(&monomial_unchecked(snap, &t.power), grid, &t.deriv);
                    col.extend(nodes.iter().map(|&n| full[n]));
                }
                col
            })
            .collect();
        let mut target = Vec::with_capacity(nt * nodes.len());
        for j in 0..nt {
            let (idx, w) = time_weights(data.times(), j);
            for &n in &nodes {
                let dfdt: f64 = (0..3)
                    .map(|r| w[r] * data.snapshots()[idx[r]].component(eq)[n])
                    .sum();
                target.push(-dfdt);
            }
        }
        let rows = target.len();
        let keep: Vec<usize> = (0..rows)
            .filter(|&r| target[r].is_finite() && columns.iter().all(|c| c[r].is_finite()))
            .collect();
        let theta = DMatrix::from_fn(keep.len(), slots.len(), |r, c| columns[c][keep[r]]);
        let target = DVector::from_iterator(keep.len(), keep.iter().map(|&r| target[r]));
        out.push(RegressionProblem {
            eq,
            theta,
            target,
            term_keys: slots.iter().map(|&k| library.terms()[k].clone()).collect(),
            slots,
            dropped_rows: nt * m - keep.len(),
        });
    }
    Ok(out)
}

/// STRidge settings.
#[derive(Debug, Clone, PartialEq)]
pub struct StridgeOptions {
    pub ridge_lambda: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for StridgeOptions {
    fn default() -> Self {
        Self {
            ridge_lambda: 1e-5,
            tol: 1e-3,
            max_iters: 25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StridgeResult {
    /// One value per column of the problem.
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    /// Columns dropped because the reduced system was singular.
    pub singular_dropped: Vec<usize>,
}

/// Columns of `a` (restricted to `active`) that are numerically independent,
/// by modified Gram–Schmidt in the given order.
fn independent(a: &DMatrix<f64>, active: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut keep = Vec::new();
    let mut drop = Vec::new();
    for &c in active {
        let orig = a.column(c).into_owned();
        let norm0 = orig.norm();
        let mut v = orig;
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        let norm = v.norm();
        if norm0 == 0.0 || norm <= 1e-10 * norm0 {
            drop.push(c);
        } else {
            basis.push(v / norm);
            keep.push(c);
        }
    }
    (keep, drop)
}

fn solve_normal(a: &DMatrix<f64>, y: &DVector<f64>, cols: &[usize], lambda: f64) -> Option<DVector<f64>> {
    let sub = a.select_columns(cols);
    let mut gram = sub.transpose() * &sub;
    for k in 0..cols.len() {
        gram[(k, k)] += lambda;
    }
    let rhs = sub.transpose() * y;
    gram.cholesky().map(|ch| ch.solve(&rhs))
}

/// Solves on `active`, first pruning dependent columns when the system is
/// unregularized or the factorization fails. `None` when nothing survives.
fn solve_guarded(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    active: &mut Vec<usize>,
    lambda: f64,
    dropped: &mut Vec<usize>,
) -> Result<Option<DVector<f64>>> {
    if lambda > 0.0 {
        if let Some(w) = solve_normal(a, y, active, lambda) {
            return Ok(Some(w));
        }
    }
    let (keep, drop) = independent(a, active);
    dropped.extend(drop);
    *active = keep;
    if active.is_empty() {
        return Ok(None);
    }
    solve_normal(a, y, active, lambda)
        .map(Some)
        .ok_or_else(|| Error::InvalidArgument("regression system is singular".into()))
}

/// Sequentially thresholded ridge regression.
pub fn stridge(problem: &RegressionProblem, opts: &StridgeOptions) -> Result<StridgeResult> {
    if !(0.0..).contains(&opts.tol) || !(0.0..).contains(&opts.ridge_lambda) {
        return Err(Error::InvalidArgument(
            "tolerance and ridge factor must be non-negative".into(),
        ));
    }
    let n = problem.theta.ncols();
    let scale: Vec<f64> = (0..n)
        .map(|c| problem.theta.column(c).amax())
        .collect();
    let mut a = problem.theta.clone();
    for (c, &s) in scale.iter().enumerate() {
        if s > 0.0 {
            a.column_mut(c).scale_mut(1.0 / s);
        }
    }
    let y = &problem.target;
    let mut active: Vec<usize> = (0..n).filter(|&c| scale[c] > 0.0).collect();
    let mut singular_dropped = Vec::new();
    let mut coef = vec![0.0; n];
    let mut truncated = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iters.max(1) {
        iterations += 1;
        if active.is_empty() {
            break;
        }
        let w = match solve_guarded(&a, y, &mut active, opts.ridge_lambda, &mut singular_dropped)? {
            Some(w) => w,
            None => break,
        };
        coef.iter_mut().for_each(|v| *v = 0.0);
        for (i, &c) in active.iter().enumerate() {
            coef[c] = w[i] / scale[c];
        }
        let next: Vec<usize> = active
            .iter()
            .copied()
            .filter(|&c| coef[c].abs() >= opts.tol)
            .collect();
        if next.len() == active.len() {
            break;
        }
        truncated = true;
        for &c in &active {
            if !next.contains(&c) {
                coef[c] = 0.0;
            }
        }
        active = next;
    }

    if truncated && !active.is_empty() {
        coef.iter_mut().for_each(|v| *v = 0.0);
        if let Some(w) = solve_guarded(&a, y, &mut active, 0.0, &mut singular_dropped)? {
            for (i, &c) in active.iter().enumerate() {
                coef[c] = w[i] / scale[c];
            }
        }
    }
    if !singular_dropped.is_empty() {
        debug!("stridge dropped dependent columns {singular_dropped:?}");
    }
    Ok(StridgeResult {
        coefficients: coef,
        iterations,
        singular_dropped,
    })
}

/// Baseline run over every equation of a data set.
#[derive(Debug, Clone)]
pub struct BaselineReport {
    pub alpha: CoefficientVector,
    pub iterations: usize,
    pub singular: bool,
    pub dropped_rows: usize,
}

pub fn baseline_discover(
    data: &Dataset,
    library: &TermLibrary,
    opts: &StridgeOptions,
) -> Result<BaselineReport> {
    let problems = build_dictionary(data, library)?;
    let mut alpha = vec![0.0; library.len()];
    let mut iterations = 0;
    let mut singular = false;
    let mut dropped_rows = 0;
    for p in &problems {
        let r = stridge(p, opts)?;
        for (&slot, &v) in p.slots.iter().zip(&r.coefficients) {
            alpha[slot] = v;
        }
        iterations = iterations.max(r.iterations);
        singular |= !r.singular_dropped.is_empty();
        dropped_rows += p.dropped_rows;
    }
    Ok(BaselineReport {
        alpha: CoefficientVector::for_library(alpha, library)?,
        iterations,
        singular,
        dropped_rows,
    })
}
