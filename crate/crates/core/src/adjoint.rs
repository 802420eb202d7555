// SPDX-License-Identifier: Apache-2.0

//! Backward adjoint solve and the cost gradient for one data interval.
//!
//! With cost `C = ∫ (f* - f)^2 dx` at the interval end plus `ε₀‖α‖²`, the
//! multipliers satisfy
//!
//! ```text
//! ∂_t λ_i = Σ (-1)^|d| α_{i,d,p} ∂_{f_i}[f^p] ∇^(d) λ_i,    λ_i(t1) = 2 (f*_i - f_i)
//! ∂C/∂α_{i,d,p} = (-1)^|d| ∫∫ f^p ∇^(d) λ_i dx dt + 2 ε₀ α_{i,d,p}
//! ```

use crate::error::{Error, Result};
use crate::fdkernel::{derivative_unchecked, monomial_unchecked, power_derivative_unchecked};
use crate::forward::{check_shapes, Plan, SolveTrace};
use crate::grid::{Boundary, Field};
use crate::hyper::{AdjointPairing, Hyperparameters};
use crate::library::{CoefficientVector, TermLibrary};

/// Multipliers at every internal step, stored in forward time order.
#[derive(Debug, Clone)]
pub struct AdjointTrace {
    pub lambdas: Vec<Field>,
    pub blown_up: bool,
    pub pairing: AdjointPairing,
}

/// `λ(t1) = 2 (f* - f)`.
pub fn final_condition(f_end: &Field, fstar_end: &Field) -> Result<Field> {
    if !f_end.same_shape(fstar_end) {
        return Err(Error::DimensionMismatch(
            "model and data fields differ in shape".into(),
        ));
    }
    let data = f_end
        .data()
        .iter()
        .zip(fstar_end.data())
        .map(|(f, s)| 2.0 * (s - f))
        .collect();
    Field::new(f_end.grid().clone(), f_end.n_components(), data)
}

/// `∂_t λ` for the current coefficients, with `f` frozen.
pub fn adjoint_rhs(
    lambda: &Field,
    f: &Field,
    library: &TermLibrary,
    alpha: &CoefficientVector,
) -> Result<Field> {
    if !lambda.same_shape(f) {
        return Err(Error::DimensionMismatch(
            "multiplier and state fields differ in shape".into(),
        ));
    }
    check_shapes(f, library, alpha)?;
    Ok(adjoint_rhs_planned(lambda, f, &Plan::new(library, alpha)))
}

fn adjoint_rhs_planned(lambda: &Field, f: &Field, plan: &Plan) -> Field {
    let grid = f.grid();
    let m = grid.len();
    let mut out = Field::zeros(grid.clone(), f.n_components());
    let mut coef = vec![0.0; m];
    for g in &plan.groups {
        let sign = if g.deriv.iter().sum::<u32>() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        coef.iter_mut().for_each(|v| *v = 0.0);
        for (_, p, a) in &g.members {
            let dp = power_derivative_unchecked(f, p, g.eq);
            for (c, v) in coef.iter_mut().zip(&dp) {
                *c += sign * a * v;
            }
        }
        let dl = derivative_unchecked(lambda.component(g.eq), grid, &g.deriv);
        for ((o, c), v) in out.component_mut(g.eq).iter_mut().zip(&coef).zip(&dl) {
            *o += c * v;
        }
    }
    out
}

fn clamp_edges(lambda: &mut Field) {
    let grid = lambda.grid().clone();
    let m = grid.len();
    for c in 0..lambda.n_components() {
        let comp = lambda.component_mut(c);
        for (flat, v) in comp.iter_mut().enumerate().take(m) {
            if grid.is_edge(flat) {
                *v = 0.0;
            }
        }
    }
}

/// Integrates the multipliers backward over the steps of `forward`.
///
/// Step `k+1 -> k` uses the stored state `f_{k+1}`, or `f_k` under
/// [`AdjointPairing::Lagged`].
pub fn solve_adjoint_interval(
    forward: &SolveTrace,
    fstar_end: &Field,
    library: &TermLibrary,
    alpha: &CoefficientVector,
    hp: &Hyperparameters,
) -> Result<AdjointTrace> {
    if forward.blown_up {
        return Err(Error::InvalidArgument(
            "cannot solve the adjoint of a blown-up forward trace".into(),
        ));
    }
    let f_end = forward.end();
    check_shapes(f_end, library, alpha)?;
    let clamp = hp.clamp_adjoint_boundary && f_end.grid().boundary() == Boundary::ZeroPad;
    let plan = Plan::new(library, alpha);
    let dt = forward.dt_internal;
    let steps = forward.steps();
    let lag = usize::from(hp.adjoint_pairing == AdjointPairing::Synchronous);

    let mut lam = final_condition(f_end, fstar_end)?;
    if clamp {
        clamp_edges(&mut lam);
    }
    let limit = 1e6 * (1.0 + lam.max_abs());
    let mut rev = Vec::with_capacity(steps + 1);
    rev.push(lam);
    let mut blown_up = false;
    for k in (0..steps).rev() {
        let cur = rev.last().expect("non-empty");
        let r = adjoint_rhs_planned(cur, &forward.fields[k + lag], &plan);
        let mut next = cur.clone();
        for (v, dv) in next.data_mut().iter_mut().zip(r.data()) {
            *v -= dt * dv;
        }
        if clamp {
            clamp_edges(&mut next);
        }
        if next.data().iter().any(|v| !v.is_finite() || v.abs() > limit) {
            blown_up = true;
            break;
        }
        rev.push(next);
    }
    rev.reverse();
    Ok(AdjointTrace {
        lambdas: rev,
        blown_up,
        pairing: hp.adjoint_pairing,
    })
}

/// Space-time integral part of the gradient, without the ridge term.
pub fn data_gradient(
    forward: &SolveTrace,
    adj: &AdjointTrace,
    library: &TermLibrary,
) -> Result<Vec<f64>> {
    if adj.blown_up || forward.blown_up || adj.lambdas.len() != forward.fields.len() {
        return Err(Error::MisalignedTraces {
            forward: forward.fields.len(),
            adjoint: adj.lambdas.len(),
        });
    }
    let f0 = &forward.fields[0];
    if library.n_eqs() != f0.n_components() || library.n_dims() != f0.grid().ndim() {
        return Err(Error::DimensionMismatch(
            "library does not match the trace fields".into(),
        ));
    }
    let grid = f0.grid();
    let weight = forward.dt_internal * grid.cell_volume();

    let mut powers: Vec<&[u32]> = Vec::new();
    let mut dkeys: Vec<(usize, &[u32])> = Vec::new();
    let mut slots = Vec::with_capacity(library.len());
    for t in library.terms() {
        let pi = powers.iter().position(|p| *p == &t.power[..]).unwrap_or_else(|| {
            powers.push(&t.power);
            powers.len() - 1
        });
        let di = dkeys
            .iter()
            .position(|(e, d)| *e == t.eq && *d == &t.deriv[..])
            .unwrap_or_else(|| {
                dkeys.push((t.eq, &t.deriv));
                dkeys.len() - 1
            });
        let sign = if t.deriv_order() % 2 == 0 { 1.0 } else { -1.0 };
        slots.push((pi, di, sign));
    }

    let back = usize::from(adj.pairing == AdjointPairing::Lagged);
    let mut grad = vec![0.0; library.len()];
    for k in 1..forward.fields.len() {
        let f = &forward.fields[k - back];
        let lam = &adj.lambdas[k];
        let monos: Vec<Vec<f64>> = powers.iter().map(|p| monomial_unchecked(f, p)).collect();
        let dls: Vec<Vec<f64>> = dkeys
            .iter()
            .map(|(e, d)| derivative_unchecked(lam.component(*e), grid, d))
            .collect();
        for (g, &(pi, di, sign)) in grad.iter_mut().zip(&slots) {
            let s: f64 = monos[pi].iter().zip(&dls[di]).map(|(a, b)| a * b).sum();
            *g += sign * weight * s;
        }
    }
    Ok(grad)
}

/// Full gradient for one interval: the integral part plus `2 ε₀ α`.
pub fn gradient_interval(
    forward: &SolveTrace,
    adj: &AdjointTrace,
    library: &TermLibrary,
    alpha: &CoefficientVector,
    eps0: f64,
) -> Result<CoefficientVector> {
    if alpha.len() != library.len() {
        return Err(Error::LengthMismatch {
            expected: library.len(),
            got: alpha.len(),
        });
    }
    let mut g = data_gradient(forward, adj, library)?;
    for (gk, a) in g.iter_mut().zip(alpha.values()) {
        *gk += 2.0 * eps0 * a;
    }
    CoefficientVector::new(g)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::forward::solve_interval;
    use crate::grid::Grid;
    use crate::library::{build_library, TermKey};

    fn periodic(n: usize) -> Arc<Grid> {
        Arc::new(Grid::line(n, 1.0 / n as f64, 0.0, Boundary::Periodic).unwrap())
    }

    #[test]
    fn final_condition_examples() {
        let g = periodic(4);
        let f = Field::new(g.clone(), 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(final_condition(&f, &f).unwrap().data().iter().all(|&v| v == 0.0));
        let s = Field::new(g.clone(), 1, vec![1.5, 2.5, 3.5, 4.5]).unwrap();
        assert_eq!(final_condition(&f, &s).unwrap().data(), &[1.0; 4]);
        let s = Field::new(g, 1, vec![1.0, 2.25, 3.0, 4.0]).unwrap();
        assert_eq!(final_condition(&f, &s).unwrap().data(), &[0.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn heat_adjoint_rhs() {
        let g = periodic(128);
        let lam = Field::from_fn(g.clone(), 1, |_, x| (2.0 * PI * x[0]).sin()).unwrap();
        let f = Field::zeros(g, 1);
        let lib = TermLibrary::new(vec![TermKey::new(0, vec![2], vec![1])], 1, 1).unwrap();
        let r = adjoint_rhs(&lam, &f, &lib, &CoefficientVector::new(vec![-1.0]).unwrap()).unwrap();
        for (rv, lv) in r.data().iter().zip(lam.data()) {
            assert!((rv - (2.0 * PI).powi(2) * lv).abs() < 0.02);
        }
    }

    #[test]
    fn burgers_adjoint_rhs_constant_state() {
        let g = periodic(64);
        let lam = Field::from_fn(g.clone(), 1, |_, x| (2.0 * PI * x[0]).cos()).unwrap();
        let c = 1.5;
        let f = Field::new(g.clone(), 1, vec![c; 64]).unwrap();
        let lib = TermLibrary::new(vec![TermKey::new(0, vec![1], vec![2])], 1, 1).unwrap();
        let r = adjoint_rhs(&lam, &f, &lib, &CoefficientVector::new(vec![-1.0]).unwrap()).unwrap();
        let lx = crate::fdkernel::apply_derivative(lam.data(), &g, &[1]).unwrap();
        for (rv, d) in r.data().iter().zip(&lx) {
            assert!((rv - 2.0 * c * d).abs() < 1e-12);
        }
    }

    fn trace_pair(alpha: f64, mismatch: f64) -> (SolveTrace, AdjointTrace, TermLibrary) {
        let g = periodic(32);
        let f0 = Field::from_fn(g.clone(), 1, |_, x| (2.0 * PI * x[0]).sin()).unwrap();
        let lib = build_library(1, 1, &[vec![1], vec![2]], &[vec![1], vec![2]]).unwrap();
        let mut a = vec![0.0; lib.len()];
        a[2] = alpha;
        let a = CoefficientVector::new(a).unwrap();
        let hp = Hyperparameters {
            substeps: 5,
            ..Default::default()
        };
        let fw = solve_interval(&f0, 0.0, 1e-4, &lib, &a, &hp).unwrap();
        let mut target = fw.end().clone();
        target.data_mut().iter_mut().for_each(|v| *v += mismatch);
        let adj = solve_adjoint_interval(&fw, &target, &lib, &a, &hp).unwrap();
        (fw, adj, lib)
    }

    #[test]
    fn zero_alpha_keeps_lambda_constant() {
        let (_, adj, _) = trace_pair(0.0, 0.25);
        assert_eq!(adj.lambdas.len(), 6);
        let last = adj.lambdas.last().unwrap();
        assert!(last.data().iter().all(|&v| (v - 0.5).abs() < 1e-15));
        for l in &adj.lambdas {
            assert_eq!(l, last);
        }
    }

    #[test]
    fn homogeneous_final_condition_gives_ridge_only_gradient() {
        let (fw, adj, lib) = trace_pair(-1.0, 0.0);
        assert!(adj.lambdas.iter().all(|l| l.max_abs() == 0.0));
        let mut a = vec![0.0; lib.len()];
        a[2] = 1.0;
        let a = CoefficientVector::new(a).unwrap();
        let g = gradient_interval(&fw, &adj, &lib, &a, 1e-12).unwrap();
        assert_eq!(g[2], 2e-12);
        assert_eq!(g[0], 0.0);
        let g = gradient_interval(&fw, &adj, &lib, &a, 0.0).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn misaligned_traces_rejected() {
        let (fw, mut adj, lib) = trace_pair(-1.0, 0.1);
        adj.lambdas.pop();
        assert!(matches!(
            data_gradient(&fw, &adj, &lib),
            Err(Error::MisalignedTraces { .. })
        ));
    }
}
