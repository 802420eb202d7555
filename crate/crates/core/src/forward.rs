// SPDX-License-Identifier: Apache-2.0

//! Explicit Euler integration of the candidate model
//! `∂_t f_i = -Σ α_{i,d,p} ∇^(d)[f^p]` over one data interval.

use crate::error::{Error, Result};
use crate::fdkernel::{check_derivative, derivative_unchecked, monomial_unchecked};
use crate::grid::Field;
use crate::hyper::Hyperparameters;
use crate::library::{CoefficientVector, TermLibrary};

/// Fields over one interval, one per internal step including both endpoints.
#[derive(Debug, Clone)]
pub struct SolveTrace {
    pub fields: Vec<Field>,
    pub dt_internal: f64,
    pub blown_up: bool,
    /// Step at which the solution left the finite/bounded range.
    pub blowup_step: Option<usize>,
}

impl SolveTrace {
    /// Last stored field.
    pub fn end(&self) -> &Field {
        self.fields.last().expect("trace always holds the initial field")
    }

    /// Number of Euler steps actually taken.
    pub fn steps(&self) -> usize {
        self.fields.len() - 1
    }
}

/// Nonzero terms grouped by `(eq, deriv)`, in library order.
#[derive(Debug, Clone)]
pub(crate) struct Plan {
    /// Distinct power indices referenced by the groups.
    pub powers: Vec<Vec<u32>>,
    pub groups: Vec<Group>,
}

#[derive(Debug, Clone)]
pub(crate) struct Group {
    pub eq: usize,
    pub deriv: Vec<u32>,
    /// `(index into powers, power vector, α)`.
    pub members: Vec<(usize, Vec<u32>, f64)>,
}

impl Plan {
    pub fn new(library: &TermLibrary, alpha: &CoefficientVector) -> Self {
        let mut powers: Vec<Vec<u32>> = Vec::new();
        let mut groups: Vec<Group> = Vec::new();
        for (term, &a) in library.terms().iter().zip(alpha.values()) {
            if a == 0.0 {
                continue;
            }
            let pi = match powers.iter().position(|p| *p == term.power) {
                Some(k) => k,
                None => {
                    powers.push(term.power.clone());
                    powers.len() - 1
                }
            };
            match groups
                .iter_mut()
                .find(|g| g.eq == term.eq && g.deriv == term.deriv)
            {
                Some(g) => g.members.push((pi, term.power.clone(), a)),
                None => groups.push(Group {
                    eq: term.eq,
                    deriv: term.deriv.clone(),
                    members: vec![(pi, term.power.clone(), a)],
                }),
            }
        }
        Self { powers, groups }
    }
}

pub(crate) fn check_shapes(
    field: &Field,
    library: &TermLibrary,
    alpha: &CoefficientVector,
) -> Result<()> {
    if alpha.len() != library.len() {
        return Err(Error::LengthMismatch {
            expected: library.len(),
            got: alpha.len(),
        });
    }
    if library.n_eqs() != field.n_components() || library.n_dims() != field.grid().ndim() {
        return Err(Error::DimensionMismatch(format!(
            "library is for {} equations in {} dimensions, field has {} components in {}",
            library.n_eqs(),
            library.n_dims(),
            field.n_components(),
            field.grid().ndim()
        )));
    }
    for t in library.terms() {
        check_derivative(field.grid(), &t.deriv)?;
    }
    Ok(())
}

/// Time derivative implied by the model.
pub fn rhs(field: &Field, library: &TermLibrary, alpha: &CoefficientVector) -> Result<Field> {
    check_shapes(field, library, alpha)?;
    Ok(rhs_planned(field, &Plan::new(library, alpha)))
}

pub(crate) fn rhs_planned(field: &Field, plan: &Plan) -> Field {
    let grid = field.grid();
    let m = grid.len();
    let monos: Vec<Vec<f64>> = plan
        .powers
        .iter()
        .map(|p| monomial_unchecked(field, p))
        .collect();
    let mut out = Field::zeros(grid.clone(), field.n_components());
    let mut acc = vec![0.0; m];
    for g in &plan.groups {
        acc.iter_mut().for_each(|v| *v = 0.0);
        for (pi, _, a) in &g.members {
            for (s, &v) in acc.iter_mut().zip(&monos[*pi]) {
                *s += a * v;
            }
        }
        let d = derivative_unchecked(&acc, grid, &g.deriv);
        for (o, v) in out.component_mut(g.eq).iter_mut().zip(&d) {
            *o -= v;
        }
    }
    out
}

/// Largest stable-looking step for the current coefficients.
pub fn stability_dt(library: &TermLibrary, alpha: &CoefficientVector, dx_min: f64, cfl: f64) -> f64 {
    library
        .terms()
        .iter()
        .zip(alpha.values())
        .map(|(t, a)| dx_min.powi(t.deriv_order() as i32) / a.abs().max(f64::EPSILON))
        .fold(f64::INFINITY, f64::min)
        * cfl
}

/// Number of Euler steps and their size for an interval.
pub fn step_plan(
    interval: f64,
    substeps: usize,
    library: &TermLibrary,
    alpha: &CoefficientVector,
    dx_min: f64,
    cfl: f64,
) -> (usize, f64) {
    let mut n = substeps.max(1);
    let mut dt = interval / n as f64;
    let cap = stability_dt(library, alpha, dx_min, cfl);
    // Equality with the cap (up to rounding) is allowed: generated data sits exactly on it.
    if dt > cap * (1.0 + 1e-9) {
        n = (interval / cap).ceil() as usize;
        dt = interval / n as f64;
    }
    (n, dt)
}

/// Integrates from `t0` to `t1` starting at `f0`.
pub fn solve_interval(
    f0: &Field,
    t0: f64,
    t1: f64,
    library: &TermLibrary,
    alpha: &CoefficientVector,
    hp: &Hyperparameters,
) -> Result<SolveTrace> {
    if t1.partial_cmp(&t0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidArgument(format!(
            "interval end {t1} must exceed start {t0}"
        )));
    }
    check_shapes(f0, library, alpha)?;
    let (n, dt) = step_plan(
        t1 - t0,
        hp.substeps,
        library,
        alpha,
        f0.grid().min_spacing(),
        hp.cfl_safety,
    );
    if n > hp.max_internal_steps {
        return Err(Error::TooManySteps {
            needed: n,
            limit: hp.max_internal_steps,
        });
    }
    Ok(integrate(f0, n, dt, &Plan::new(library, alpha)))
}

pub(crate) fn integrate(f0: &Field, n: usize, dt: f64, plan: &Plan) -> SolveTrace {
    let limit = 1e6 * (1.0 + f0.max_abs());
    let mut fields = Vec::with_capacity(n + 1);
    fields.push(f0.clone());
    for k in 0..n {
        let cur = &fields[k];
        let r = rhs_planned(cur, plan);
        let mut next = cur.clone();
        let mut bad = false;
        for (v, dv) in next.data_mut().iter_mut().zip(r.data()) {
            *v += dt * dv;
            if !v.is_finite() || v.abs() > limit {
                bad = true;
            }
        }
        if bad {
            return SolveTrace {
                fields,
                dt_internal: dt,
                blown_up: true,
                blowup_step: Some(k + 1),
            };
        }
        fields.push(next);
    }
    SolveTrace {
        fields,
        dt_internal: dt,
        blown_up: false,
        blowup_step: None,
    }
}
