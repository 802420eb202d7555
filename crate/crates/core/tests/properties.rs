// SPDX-License-Identifier: Apache-2.0

#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;
use std::sync::Arc;

use pded_core::fdkernel::{apply_derivative, power_derivative, MAX_ORDER};
use pded_core::library::{
    build_library, coefficient_l1_error, derivs_up_to, powers_up_to, CoefficientVector,
};
use pded_core::metrics::{stagnation_flag, support_counts, tpr, tpr_from_counts, SupportCounts};
use pded_core::optimize::{apply_threshold, FrozenSet};
use pded_core::preprocess::{add_noise, subsample_time, svd_denoise, SvThreshold};
use pded_core::{Boundary, Dataset, Field, Grid};
use proptest::prelude::*;

fn periodic_line(n: usize) -> Grid {
    let dx = 2.0 * PI / n as f64;
    Grid::line(n, dx, 0.0, Boundary::Periodic).unwrap()
}

// d^k/dx^k of sin(m x + phase)
fn sin_derivative(m: f64, phase: f64, k: u32, x: f64) -> f64 {
    m.powi(k as i32) * (m * x + phase + k as f64 * PI / 2.0).sin()
}

fn max_error(n: usize, order: u32, m: f64, phase: f64) -> f64 {
    let g = periodic_line(n);
    let xs: Vec<f64> = (0..n).map(|k| k as f64 * g.spacing()[0]).collect();
    let u: Vec<f64> = xs.iter().map(|&x| (m * x + phase).sin()).collect();
    let du = apply_derivative(&u, &g, &[order]).unwrap();
    xs.iter()
        .zip(&du)
        .map(|(&x, v)| (v - sin_derivative(m, phase, order, x)).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn second_order_convergence(order in 1..=MAX_ORDER, m in 1u32..=2, phase in 0.0..(2.0 * PI)) {
        let m = m as f64;
        let coarse = max_error(64, order, m, phase);
        let fine = max_error(128, order, m, phase);
        prop_assert!(coarse / fine >= 3.5, "order {order}: {coarse:e} -> {fine:e}");
    }

    #[test]
    fn derivative_is_linear(
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
        order in 0..=MAX_ORDER,
        u in prop::collection::vec(-1.0..1.0f64, 16),
        v in prop::collection::vec(-1.0..1.0f64, 16),
    ) {
        let g = periodic_line(16);
        let mix: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let lhs = apply_derivative(&mix, &g, &[order]).unwrap();
        let du = apply_derivative(&u, &g, &[order]).unwrap();
        let dv = apply_derivative(&v, &g, &[order]).unwrap();
        let scale = g.spacing()[0].powi(-(order as i32)) * 64.0;
        for k in 0..16 {
            prop_assert!((lhs[k] - (a * du[k] + b * dv[k])).abs() <= 1e-13 * scale.max(1.0));
        }
    }

    #[test]
    fn power_derivative_edges(vals in prop::collection::vec(0.1..2.0f64, 8), i in 0usize..2) {
        let g = Arc::new(Grid::line(4, 0.1, 0.0, Boundary::ZeroPad).unwrap());
        let f = Field::new(g, 2, vals).unwrap();
        let mut p = vec![0u32, 0];
        prop_assert!(power_derivative(&f, &p, i).unwrap().iter().all(|&v| v == 0.0));
        p[i] = 1;
        prop_assert!(power_derivative(&f, &p, i).unwrap().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn threshold_is_idempotent(
        vals in prop::collection::vec(-1.0..1.0f64, 1..20),
        sigma in 0.0..0.5f64,
    ) {
        let a = CoefficientVector::new(vals).unwrap();
        let (once, fr1) = apply_threshold(&a, sigma, &FrozenSet::new());
        let (twice, fr2) = apply_threshold(&once, sigma, &fr1);
        prop_assert_eq!(once, twice);
        prop_assert_eq!(fr1, fr2);
    }

    #[test]
    fn frozen_slots_stay_zero(
        vals in prop::collection::vec(-1.0..1.0f64, 1..20),
        later in prop::collection::vec(-10.0..10.0f64, 20),
        sigma in 0.0..0.5f64,
    ) {
        let n = vals.len();
        let (_, frozen) = apply_threshold(&CoefficientVector::new(vals).unwrap(), sigma, &FrozenSet::new());
        let next = CoefficientVector::new(later[..n].to_vec()).unwrap();
        let (out, fr) = apply_threshold(&next, sigma, &frozen);
        prop_assert!(frozen.is_subset(&fr));
        for &k in &frozen {
            prop_assert_eq!(out[k], 0.0);
        }
    }

    #[test]
    fn tpr_is_a_ratio_and_permutation_invariant(
        pairs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..16),
        tol in 0.0..0.5f64,
        rot in 0usize..16,
    ) {
        let est = CoefficientVector::new(pairs.iter().map(|p| p.0).collect()).unwrap();
        let tru = CoefficientVector::new(pairs.iter().map(|p| p.1).collect()).unwrap();
        let r = tpr(&est, &tru, tol).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        let mut rotated = pairs.clone();
        rotated.rotate_left(rot % pairs.len());
        let est2 = CoefficientVector::new(rotated.iter().map(|p| p.0).collect()).unwrap();
        let tru2 = CoefficientVector::new(rotated.iter().map(|p| p.1).collect()).unwrap();
        prop_assert_eq!(tpr(&est2, &tru2, tol).unwrap(), r);
    }

    #[test]
    fn l1_error_is_symmetric(
        pairs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..16),
    ) {
        let a = CoefficientVector::new(pairs.iter().map(|p| p.0).collect()).unwrap();
        let b = CoefficientVector::new(pairs.iter().map(|p| p.1).collect()).unwrap();
        prop_assert_eq!(coefficient_l1_error(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(coefficient_l1_error(&a, &b).unwrap(), coefficient_l1_error(&b, &a).unwrap());
    }

    #[test]
    fn library_is_deterministic(n_dims in 1usize..=2, n_eqs in 1usize..=2, dmax in 1u32..=3, pmax in 1u32..=3) {
        let build = || build_library(n_dims, n_eqs, &derivs_up_to(n_dims, dmax), &powers_up_to(n_eqs, pmax)).unwrap();
        let a = build();
        let b = build();
        prop_assert_eq!(a.terms(), b.terms());
        for (k, t) in a.terms().iter().enumerate() {
            prop_assert_eq!(a.index_of(t), Some(k));
        }
    }

    #[test]
    fn preprocess_identities(
        vals in prop::collection::vec(-2.0..2.0f64, 6 * 8),
        seed in any::<u64>(),
    ) {
        let data = small_dataset(&vals);
        prop_assert_eq!(&add_noise(&data, 0.0, seed).unwrap(), &data);
        prop_assert_eq!(&subsample_time(&data, 1).unwrap(), &data);
        let den = svd_denoise(&data, 1e-300, SvThreshold::Relative).unwrap();
        prop_assert_eq!(den.times(), data.times());
        prop_assert_eq!(den.grid(), data.grid());
        for (a, b) in den.snapshots().iter().zip(data.snapshots()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                prop_assert!((x - y).abs() <= 1e-12, "diff {:e}", (x - y).abs());
            }
        }
        let noisy = add_noise(&data, 0.1, seed).unwrap();
        prop_assert_eq!(&noisy, &add_noise(&data, 0.1, seed).unwrap());
        for (a, b) in noisy.snapshots().iter().zip(data.snapshots()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                if *y == 0.0 {
                    prop_assert_eq!(*x, 0.0);
                }
            }
        }
    }

    #[test]
    fn stagnation_is_monotone_in_factor(
        res in prop::collection::vec(1e-6..1.0f64, 60),
        f1 in 0.5..1.0f64,
        f2 in 0.5..1.0f64,
    ) {
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        // A higher factor is stricter: the residual must stay above factor * earlier.
        if stagnation_flag(&res, 50, hi, 1e-8) {
            prop_assert!(stagnation_flag(&res, 50, lo, 1e-8));
        }
    }
}

fn small_dataset(vals: &[f64]) -> Dataset {
    let g = Arc::new(Grid::line(8, 0.1, 0.0, Boundary::ZeroPad).unwrap());
    let times = (0..6).map(|j| j as f64 * 0.5).collect();
    let snaps = vals.chunks(8).map(<[f64]>::to_vec).collect();
    Dataset::from_raw_snapshots(g, 1, times, snaps).unwrap()
}

#[test]
fn tpr_table() {
    let c = |tp, fp, fn_| SupportCounts { tp, fp, fn_ };
    assert_eq!(tpr_from_counts(c(3, 1, 0)), 0.75);
    assert_eq!(tpr_from_counts(c(4, 1, 0)), 0.8);
    assert_eq!(tpr_from_counts(c(1, 0, 0)), 1.0);
    assert_eq!(tpr_from_counts(c(0, 0, 0)), 1.0);
    assert_eq!(tpr_from_counts(c(0, 2, 1)), 0.0);
    assert_eq!(tpr_from_counts(c(2, 1, 1)), 0.5);

    let est = CoefficientVector::new(vec![0.0, 0.5, 0.2, 0.0]).unwrap();
    let tru = CoefficientVector::new(vec![-1.0, 0.5, 0.0, 0.0]).unwrap();
    assert_eq!(support_counts(&est, &tru, 1e-3).unwrap(), c(1, 1, 1));
    assert!((tpr(&est, &tru, 1e-3).unwrap() - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn subsampling_arithmetic() {
    let g = Arc::new(Grid::line(4, 0.1, 0.0, Boundary::ZeroPad).unwrap());
    let times: Vec<f64> = (0..1001).map(|j| j as f64).collect();
    let snaps = vec![vec![1.0; 4]; 1001];
    let d = Dataset::from_raw_snapshots(g, 1, times, snaps).unwrap();
    let s = subsample_time(&d, 16).unwrap();
    assert_eq!(s.len(), 63);
    assert_eq!(s.times()[62], 992.0);
}

#[test]
fn rank_one_denoise() {
    let (nt, nx) = (12, 20);
    let u: Vec<f64> = (0..nt).map(|j| 1.0 + j as f64 * 0.1).collect();
    let v: Vec<f64> = (0..nx).map(|k| (k as f64 * 0.3).sin()).collect();
    let mut vals = Vec::new();
    for j in 0..nt {
        for k in 0..nx {
            let wiggle = if (j + k) % 2 == 0 { 1e-8 } else { -1e-8 };
            vals.push(u[j] * v[k] + wiggle);
        }
    }
    let g = Arc::new(Grid::line(nx, 0.1, 0.0, Boundary::ZeroPad).unwrap());
    let times = (0..nt).map(|j| j as f64).collect();
    let d = Dataset::from_raw_snapshots(g, 1, times, vals.chunks(nx).map(<[f64]>::to_vec).collect())
        .unwrap();
    let den = svd_denoise(&d, 1e-4, SvThreshold::Relative).unwrap();
    for j in 0..nt {
        for k in 0..nx {
            assert!((den.snapshots()[j].data()[k] - u[j] * v[k]).abs() <= 1e-7);
        }
    }
    let zero = svd_denoise(&d, 2.0, SvThreshold::Relative).unwrap();
    assert!(zero.snapshots().iter().all(|s| s.data().iter().all(|&x| x == 0.0)));
}
