// SPDX-License-Identifier: Apache-2.0

//! Noise injection, truncated-SVD denoising and temporal subsampling.

use log::warn;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::{Dataset, Field};

/// Multiplies every value by `1 + ε`, `ε ~ N(0, sigma_noise²)`.
pub fn add_noise(data: &Dataset, sigma_noise: f64, seed: u64) -> Result<Dataset> {
    if !(sigma_noise >= 0.0 && sigma_noise.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise level must be non-negative, got {sigma_noise}"
        )));
    }
    if sigma_noise == 0.0 {
        return Ok(data.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let snaps = data
        .snapshots()
        .iter()
        .map(|s| {
            let mut s = s.clone();
            for v in s.data_mut() {
                let e: f64 = rng.sample(StandardNormal);
                *v *= 1.0 + sigma_noise * e;
            }
            s
        })
        .collect();
    Dataset::new(data.grid().clone(), data.times().to_vec(), snaps)
}

/// How the singular-value cutoff is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SvThreshold {
    /// Fraction of the largest singular value.
    #[default]
    Relative,
    Absolute,
}

/// Rebuilds each component's `[time × space]` matrix from the singular
/// triplets at or above the cutoff.
pub fn svd_denoise(data: &Dataset, sv_threshold: f64, mode: SvThreshold) -> Result<Dataset> {
    if !(sv_threshold >= 0.0 && sv_threshold.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "singular value threshold must be non-negative, got {sv_threshold}"
        )));
    }
    if sv_threshold == 0.0 || data.len() < 2 {
        return Ok(data.clone());
    }
    if mode == SvThreshold::Relative && sv_threshold > 1.0 {
        warn!("relative singular value threshold {sv_threshold} > 1 discards everything");
    }
    let nt = data.len();
    let m = data.grid().len();
    let nc = data.n_components();
    let mut out: Vec<Vec<f64>> = vec![vec![0.0; nc * m]; nt];
    for c in 0..nc {
        let a = DMatrix::from_fn(nt, m, |j, k| data.snapshots()[j].component(c)[k]);
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let cut = match mode {
            SvThreshold::Relative => sv_threshold * smax,
            SvThreshold::Absolute => sv_threshold,
        };
        let u = svd.u.as_ref().expect("requested U");
        let vt = svd.v_t.as_ref().expect("requested V^T");
        // Subtract the discarded modes rather than summing the kept ones, so a
        // cut that keeps everything returns the input exactly.
        let rec = if svd.singular_values.iter().all(|&s| s < cut || s == 0.0) {
            DMatrix::<f64>::zeros(nt, m)
        } else {
            let mut rec = a;
            for (r, &s) in svd.singular_values.iter().enumerate() {
                if s < cut {
                    rec -= (u.column(r) * s) * vt.row(r);
                }
            }
            rec
        };
        for (j, row) in out.iter_mut().enumerate() {
            for k in 0..m {
                row[c * m + k] = rec[(j, k)];
            }
        }
    }
    let snaps = out
        .into_iter()
        .map(|d| Field::new(data.grid().clone(), nc, d))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(data.grid().clone(), data.times().to_vec(), snaps)
}

/// Keeps snapshots `0, stride, 2*stride, …`.
pub fn subsample_time(data: &Dataset, stride: usize) -> Result<Dataset> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    let keep: Vec<usize> = (0..data.len()).step_by(stride).collect();
    if keep.len() < 2 {
        return Err(Error::TooFewSnapshots {
            needed: 2,
            got: keep.len(),
        });
    }
    Dataset::new(
        data.grid().clone(),
        keep.iter().map(|&j| data.times()[j]).collect(),
        keep.iter().map(|&j| data.snapshots()[j].clone()).collect(),
    )
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::grid::{Boundary, Grid};

    fn ramp(nt: usize, nx: usize) -> Dataset {
        let g = Arc::new(Grid::line(nx, 0.1, 0.0, Boundary::ZeroPad).unwrap());
        let times = (0..nt).map(|j| j as f64).collect();
        let data = (0..nt)
            .map(|j| (0..nx).map(|k| (j * nx + k) as f64 * 0.01).collect())
            .collect();
        Dataset::from_raw_snapshots(g, 1, times, data).unwrap()
    }

    #[test]
    fn zero_noise_is_identity_and_zero_stays_zero() {
        let d = ramp(3, 5);
        assert_eq!(add_noise(&d, 0.0, 1).unwrap(), d);
        let n = add_noise(&d, 0.1, 1).unwrap();
        assert_eq!(n.snapshots()[0].data()[0], 0.0);
        assert_ne!(n, d);
        assert_eq!(n, add_noise(&d, 0.1, 1).unwrap());
        assert_ne!(n, add_noise(&d, 0.1, 2).unwrap());
    }

    #[test]
    fn subsample_examples() {
        let d = ramp(4, 3);
        assert_eq!(subsample_time(&d, 1).unwrap(), d);
        assert_eq!(subsample_time(&d, 2).unwrap().times(), &[0.0, 2.0]);
        let d = ramp(1001, 3);
        let s = subsample_time(&d, 16).unwrap();
        assert_eq!(s.len(), 63);
        assert_eq!(*s.times().last().unwrap(), 992.0);
        assert!(subsample_time(&ramp(4, 3), 4).is_err());
    }

    #[test]
    fn rank_one_recovery() {
        let nt = 12;
        let nx = 20;
        let g = Arc::new(Grid::line(nx, 0.1, 0.0, Boundary::ZeroPad).unwrap());
        let u: Vec<f64> = (0..nt).map(|j| 1.0 + j as f64 * 0.3).collect();
        let v: Vec<f64> = (0..nx).map(|k| (k as f64 * 0.4).sin()).collect();
        let mut seed = 12345u64;
        let mut jitter = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 2e-8
        };
        let data = (0..nt)
            .map(|j| (0..nx).map(|k| u[j] * v[k] + jitter()).collect())
            .collect();
        let d = Dataset::from_raw_snapshots(g, 1, (0..nt).map(|j| j as f64).collect(), data).unwrap();
        let r = svd_denoise(&d, 1e-4, SvThreshold::Relative).unwrap();
        for (j, s) in r.snapshots().iter().enumerate() {
            for (k, &x) in s.data().iter().enumerate() {
                assert!((x - u[j] * v[k]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn permissive_threshold_reconstructs() {
        let d = ramp(5, 7);
        let r = svd_denoise(&d, 1e-300, SvThreshold::Absolute).unwrap();
        for (a, b) in r.snapshots().iter().zip(d.snapshots()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        assert_eq!(r.times(), d.times());
        assert_eq!(svd_denoise(&d, 0.0, SvThreshold::Relative).unwrap(), d);
    }

    #[test]
    fn oversized_threshold_zeroes() {
        let d = ramp(5, 7);
        let r = svd_denoise(&d, 2.0, SvThreshold::Relative).unwrap();
        assert!(r.snapshots().iter().all(|s| s.max_abs() == 0.0));
    }

    #[test]
    fn single_snapshot_is_identity() {
        let d = ramp(1, 7);
        assert_eq!(svd_denoise(&d, 0.5, SvThreshold::Relative).unwrap(), d);
    }
}
