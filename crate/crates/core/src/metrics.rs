// SPDX-License-Identifier: Apache-2.0

//! Recovery quality: support agreement, model-vs-data residual, stagnation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{check_shapes, solve_interval};
use crate::grid::Dataset;
use crate::hyper::Hyperparameters;
use crate::library::{CoefficientVector, TermLibrary};

/// Support counts of an estimate against the truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SupportCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

pub fn support_counts(
    est: &CoefficientVector,
    truth: &CoefficientVector,
    zero_tol: f64,
) -> Result<SupportCounts> {
    if est.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            got: est.len(),
        });
    }
    let mut c = SupportCounts::default();
    for (e, t) in est.values().iter().zip(truth.values()) {
        match (e.abs() > zero_tol, t.abs() > zero_tol) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(c)
}

/// `TP / (TP + FN + FP)`; 1 when all three counts vanish.
pub fn tpr(est: &CoefficientVector, truth: &CoefficientVector, zero_tol: f64) -> Result<f64> {
    let c = support_counts(est, truth, zero_tol)?;
    Ok(tpr_from_counts(c))
}

pub fn tpr_from_counts(c: SupportCounts) -> f64 {
    let denom = c.tp + c.fp + c.fn_;
    if denom == 0 {
        1.0
    } else {
        c.tp as f64 / denom as f64
    }
}

/// Relative L2 misfit between model and data at every interval end, each
/// interval started from the data. `+∞` if any solve blows up.
pub fn l2_residual(
    data: &Dataset,
    library: &TermLibrary,
    alpha: &CoefficientVector,
    hp: &Hyperparameters,
) -> Result<f64> {
    if data.len() < 2 {
        return Err(Error::TooFewSnapshots {
            needed: 2,
            got: data.len(),
        });
    }
    check_shapes(&data.snapshots()[0], library, alpha)?;
    let parts = (0..data.n_intervals())
        .into_par_iter()
        .map(|j| {
            let fstar = &data.snapshots()[j + 1];
            let den: f64 = fstar.data().iter().map(|v| v * v).sum();
            let tr = match solve_interval(
                &data.snapshots()[j],
                data.times()[j],
                data.times()[j + 1],
                library,
                alpha,
                hp,
            ) {
                Err(Error::TooManySteps { .. }) => return Ok((f64::INFINITY, den)),
                r => r?,
            };
            if tr.blown_up {
                return Ok((f64::INFINITY, den));
            }
            let num: f64 = tr
                .end()
                .data()
                .iter()
                .zip(fstar.data())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            Ok((num, den))
        })
        .collect::<Result<Vec<_>>>()?;
    let num: f64 = parts.iter().map(|p| p.0).sum();
    let den: f64 = parts.iter().map(|p| p.1).sum();
    if num.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    })
}

/// True when the last residual is above `floor` and improved by less than
/// `factor` relative to the one `window - 1` epochs earlier.
pub fn stagnation_flag(residuals: &[f64], window: usize, factor: f64, floor: f64) -> bool {
    if window < 2 || residuals.len() < window {
        return false;
    }
    let last = residuals[residuals.len() - 1];
    let first = residuals[residuals.len() - window];
    last > floor && last > factor * first
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(v: &[f64]) -> CoefficientVector {
        CoefficientVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn tpr_table() {
        let truth = cv(&[1.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(tpr(&truth, &truth, 1e-3).unwrap(), 1.0);
        let est = cv(&[1.0, 1.0, 1.0, 0.5, 0.0]);
        assert_eq!(tpr(&est, &truth, 1e-3).unwrap(), 0.75);
        let truth4 = cv(&[1.0, 1.0, 1.0, 1.0, 0.0]);
        let est4 = cv(&[1.0, 1.0, 1.0, 1.0, 2.0]);
        assert_eq!(tpr(&est4, &truth4, 1e-3).unwrap(), 0.8);
        let z = cv(&[0.0, 0.0]);
        assert_eq!(tpr(&z, &z, 1e-3).unwrap(), 1.0);
        assert!(tpr(&z, &truth, 1e-3).is_err());
    }

    #[test]
    fn zero_tol_decides_support() {
        let truth = cv(&[1.0, 0.0]);
        let est = cv(&[1.0, 5e-4]);
        assert_eq!(tpr(&est, &truth, 1e-3).unwrap(), 1.0);
        assert_eq!(tpr(&est, &truth, 1e-4).unwrap(), 0.5);
    }

    #[test]
    fn stagnation_examples() {
        let geo: Vec<f64> = (0..60).map(|k| 0.5f64.powi(k)).collect();
        assert!(!stagnation_flag(&geo, 50, 0.99, 0.0));
        let flat = vec![1e-5; 60];
        assert!(stagnation_flag(&flat, 50, 0.99, 1e-8));
        let tiny = vec![1e-9; 60];
        assert!(!stagnation_flag(&tiny, 50, 0.99, 1e-8));
        assert!(!stagnation_flag(&flat[..10], 50, 0.99, 1e-8));
    }
}
