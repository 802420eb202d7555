// SPDX-License-Identifier: Apache-2.0

//! Second-order central finite differences and the monomial building blocks
//! `f^p` and `∂f^p/∂f_i`.

use crate::error::{Error, Result};
use crate::grid::{Boundary, Field, Grid};

/// Largest per-axis derivative order with a stencil.
pub const MAX_ORDER: u32 = 6;

/// Central stencil for one derivative order on a unit grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub offsets: &'static [i64],
    pub weights: &'static [f64],
}

impl Stencil {
    pub fn width(&self) -> usize {
        self.offsets.len()
    }
}

const IDENTITY: Stencil = Stencil {
    offsets: &[0],
    weights: &[1.0],
};
const D1: Stencil = Stencil {
    offsets: &[-1, 0, 1],
    weights: &[-0.5, 0.0, 0.5],
};
const D2: Stencil = Stencil {
    offsets: &[-1, 0, 1],
    weights: &[1.0, -2.0, 1.0],
};
const D3: Stencil = Stencil {
    offsets: &[-2, -1, 0, 1, 2],
    weights: &[-0.5, 1.0, 0.0, -1.0, 0.5],
};
const D4: Stencil = Stencil {
    offsets: &[-2, -1, 0, 1, 2],
    weights: &[1.0, -4.0, 6.0, -4.0, 1.0],
};
const D5: Stencil = Stencil {
    offsets: &[-3, -2, -1, 0, 1, 2, 3],
    weights: &[-0.5, 2.0, -2.5, 0.0, 2.5, -2.0, 0.5],
};
const D6: Stencil = Stencil {
    offsets: &[-3, -2, -1, 0, 1, 2, 3],
    weights: &[1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0],
};

/// Unit-spacing stencil for `order` (weights must be divided by `Δx^order`).
pub fn stencil(order: u32) -> Result<Stencil> {
    Ok(match order {
        0 => IDENTITY,
        1 => D1,
        2 => D2,
        3 => D3,
        4 => D4,
        5 => D5,
        6 => D6,
        _ => return Err(Error::UnsupportedDerivative(order)),
    })
}

/// Checks that every axis is wide enough for the requested orders.
pub fn check_derivative(grid: &Grid, d: &[u32]) -> Result<()> {
    if d.len() != grid.ndim() {
        return Err(Error::DimensionMismatch(format!(
            "derivative index {d:?} on a {}-dimensional grid",
            grid.ndim()
        )));
    }
    for (axis, &order) in d.iter().enumerate() {
        let s = stencil(order)?;
        if order > 0 && grid.dims()[axis] < s.width() {
            return Err(Error::GridTooSmall {
                axis,
                nodes: grid.dims()[axis],
                needed: s.width(),
            });
        }
    }
    Ok(())
}

/// `∇^(d) u` for a single-component array `u` laid out on `grid`.
pub fn apply_derivative(u: &[f64], grid: &Grid, d: &[u32]) -> Result<Vec<f64>> {
    if u.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: u.len(),
        });
    }
    check_derivative(grid, d)?;
    Ok(derivative_unchecked(u, grid, d))
}

/// As [`apply_derivative`] with shapes already validated.
pub(crate) fn derivative_unchecked(u: &[f64], grid: &Grid, d: &[u32]) -> Vec<f64> {
    let mut cur: Option<Vec<f64>> = None;
    for (axis, &order) in d.iter().enumerate() {
        if order == 0 {
            continue;
        }
        let src = cur.as_deref().unwrap_or(u);
        cur = Some(axis_derivative(src, grid, axis, order));
    }
    cur.unwrap_or_else(|| u.to_vec())
}

fn axis_derivative(u: &[f64], grid: &Grid, axis: usize, order: u32) -> Vec<f64> {
    let s = stencil(order).expect("order validated");
    let n = grid.dims()[axis];
    let inner = grid.stride(axis);
    let outer = grid.len() / (n * inner);
    let scale = grid.spacing()[axis].powi(order as i32);
    let weights: Vec<f64> = s.weights.iter().map(|w| w / scale).collect();
    let reach = (s.width() / 2) as i64;
    let periodic = grid.boundary() == Boundary::Periodic;

    let mut out = vec![0.0; u.len()];
    for o in 0..outer {
        let base = o * n * inner;
        for k in 0..n {
            let interior = k as i64 >= reach && (k as i64) + reach < n as i64;
            let row = base + k * inner;
            if interior {
                let start = base + (k - reach as usize) * inner;
                for s_i in 0..inner {
                    let mut acc = 0.0;
                    for (m, w) in weights.iter().enumerate() {
                        acc += w * u[start + m * inner + s_i];
                    }
                    out[row + s_i] = acc;
                }
            } else {
                for (&off, w) in s.offsets.iter().zip(&weights) {
                    let kk = k as i64 + off;
                    let kk = if periodic {
                        kk.rem_euclid(n as i64) as usize
                    } else if kk < 0 || kk >= n as i64 {
                        continue;
                    } else {
                        kk as usize
                    };
                    let src = base + kk * inner;
                    for s_i in 0..inner {
                        out[row + s_i] += w * u[src + s_i];
                    }
                }
            }
        }
    }
    out
}

/// `f^p = Π f_l^{p_l}` nodewise.
pub fn monomial_field(field: &Field, p: &[u32]) -> Result<Vec<f64>> {
    if p.len() != field.n_components() {
        return Err(Error::DimensionMismatch(format!(
            "power index {p:?} for a {}-component field",
            field.n_components()
        )));
    }
    Ok(monomial_unchecked(field, p))
}

pub(crate) fn monomial_unchecked(field: &Field, p: &[u32]) -> Vec<f64> {
    let mut out = vec![1.0; field.grid().len()];
    for (c, &pc) in p.iter().enumerate() {
        if pc == 0 {
            continue;
        }
        for (o, &v) in out.iter_mut().zip(field.component(c)) {
            *o *= v.powi(pc as i32);
        }
    }
    out
}

/// `∂(f^p)/∂f_i = p_i f_i^{p_i-1} Π_{l≠i} f_l^{p_l}`, evaluated without division.
pub fn power_derivative(field: &Field, p: &[u32], i: usize) -> Result<Vec<f64>> {
    if p.len() != field.n_components() {
        return Err(Error::DimensionMismatch(format!(
            "power index {p:?} for a {}-component field",
            field.n_components()
        )));
    }
    if i >= p.len() {
        return Err(Error::InvalidArgument(format!("component {i} out of range")));
    }
    Ok(power_derivative_unchecked(field, p, i))
}

pub(crate) fn power_derivative_unchecked(field: &Field, p: &[u32], i: usize) -> Vec<f64> {
    let m = field.grid().len();
    if p[i] == 0 {
        return vec![0.0; m];
    }
    let mut q = p.to_vec();
    q[i] -= 1;
    let mut out = monomial_unchecked(field, &q);
    let factor = p[i] as f64;
    for o in &mut out {
        *o *= factor;
    }
    out
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;

    fn line(nx: usize, dx: f64, origin: f64, b: Boundary) -> Arc<Grid> {
        Arc::new(Grid::line(nx, dx, origin, b).unwrap())
    }

    #[test]
    fn weights_sum_to_zero() {
        for d in 1..=MAX_ORDER {
            let s = stencil(d).unwrap();
            assert_eq!(s.weights.iter().sum::<f64>(), 0.0, "order {d}");
        }
        assert!(matches!(stencil(7), Err(Error::UnsupportedDerivative(7))));
    }

    // Each stencil is exact on monomials of degree <= d + 1.
    #[test]
    fn stencils_exact_on_low_monomials() {
        let g = line(21, 0.1, -1.0, Boundary::ZeroPad);
        for d in 1..=MAX_ORDER {
            for m in 0..=(d + 1) {
                let u: Vec<f64> = (0..21).map(|k| g.coord(0, k).powi(m as i32)).collect();
                let du = apply_derivative(&u, &g, &[d]).unwrap();
                for k in 4..17 {
                    let x = g.coord(0, k);
                    let exact = if m < d {
                        0.0
                    } else {
                        let falling: f64 = (0..d).map(|r| (m - r) as f64).product();
                        falling * x.powi((m - d) as i32)
                    };
                    assert!(
                        (du[k] - exact).abs() < 1e-6 * (1.0 + exact.abs()),
                        "d={d} m={m} x={x}: {} vs {exact}",
                        du[k]
                    );
                }
            }
        }
    }

    #[test]
    fn cubic_third_derivative_is_six() {
        let g = line(12, 0.25, 0.0, Boundary::ZeroPad);
        let u: Vec<f64> = (0..12).map(|k| g.coord(0, k).powi(3)).collect();
        let du = apply_derivative(&u, &g, &[3]).unwrap();
        for v in &du[2..10] {
            assert!((v - 6.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_order_is_identity() {
        let g = line(5, 1.0, 0.0, Boundary::ZeroPad);
        let u = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        assert_eq!(apply_derivative(&u, &g, &[0]).unwrap(), u);
    }

    #[test]
    fn zero_pad_and_periodic_edges() {
        let g = line(4, 1.0, 0.0, Boundary::ZeroPad);
        let u = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(apply_derivative(&u, &g, &[2]).unwrap(), vec![0.0, 0.0, 0.0, -5.0]);
        let g = line(4, 1.0, 0.0, Boundary::Periodic);
        assert_eq!(apply_derivative(&u, &g, &[2]).unwrap(), vec![4.0, 0.0, 0.0, -4.0]);
    }

    #[test]
    fn periodic_sine_second_derivative() {
        let n = 64;
        let g = line(n, 1.0 / n as f64, 0.0, Boundary::Periodic);
        let u: Vec<f64> = (0..n).map(|k| (2.0 * PI * g.coord(0, k)).sin()).collect();
        let du = apply_derivative(&u, &g, &[2]).unwrap();
        for k in 0..n {
            let exact = -(2.0 * PI).powi(2) * u[k];
            assert!((du[k] - exact).abs() < 0.05);
        }
    }

    #[test]
    fn mixed_derivative_on_product() {
        // u = x*y on a 2D grid: u_xy = 1 away from the edges.
        let g = Arc::new(
            Grid::new(vec![6, 7], vec![0.2, 0.1], vec![0.0, 0.0], Boundary::ZeroPad).unwrap(),
        );
        let f = Field::from_fn(g.clone(), 1, |_, x| x[0] * x[1]).unwrap();
        let du = apply_derivative(f.data(), &g, &[1, 1]).unwrap();
        for flat in 0..g.len() {
            let idx = g.unravel(flat);
            if idx[0] > 0 && idx[0] < 5 && idx[1] > 0 && idx[1] < 6 {
                assert!((du[flat] - 1.0).abs() < 1e-12);
            }
        }
        let uy = apply_derivative(f.data(), &g, &[0, 1]).unwrap();
        for flat in 0..g.len() {
            let idx = g.unravel(flat);
            if idx[1] > 0 && idx[1] < 6 {
                assert!((uy[flat] - g.coord(0, idx[0])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_too_small() {
        let g = line(4, 1.0, 0.0, Boundary::Periodic);
        assert!(matches!(
            apply_derivative(&[0.0; 4], &g, &[3]),
            Err(Error::GridTooSmall { axis: 0, nodes: 4, needed: 5 })
        ));
    }

    #[test]
    fn monomial_examples() {
        let g = line(3, 1.0, 0.0, Boundary::ZeroPad);
        let f = Field::new(g.clone(), 2, vec![2.0, 2.0, 2.0, 3.0, 3.0, 3.0]).unwrap();
        assert_eq!(monomial_field(&f, &[1, 1]).unwrap(), vec![6.0; 3]);
        assert_eq!(monomial_field(&f, &[1, 0]).unwrap(), vec![2.0; 3]);
        let x = Field::new(g, 1, vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(monomial_field(&x, &[2]).unwrap(), vec![0.0, 0.25, 1.0]);
    }

    #[test]
    fn power_derivative_examples() {
        let g = line(3, 1.0, 0.0, Boundary::ZeroPad);
        let f = Field::new(g.clone(), 1, vec![3.0; 3]).unwrap();
        assert_eq!(power_derivative(&f, &[1], 0).unwrap(), vec![1.0; 3]);
        assert_eq!(power_derivative(&f, &[2], 0).unwrap(), vec![6.0; 3]);
        let f2 = Field::new(g.clone(), 2, vec![2.0, 2.0, 2.0, 5.0, 5.0, 5.0]).unwrap();
        assert_eq!(power_derivative(&f2, &[2, 1], 1).unwrap(), vec![4.0; 3]);
        assert_eq!(power_derivative(&f2, &[2, 0], 1).unwrap(), vec![0.0; 3]);
        // Zero field with p=[1]: derivative is one, no 0/0.
        let z = Field::zeros(g, 1);
        assert_eq!(power_derivative(&z, &[1], 0).unwrap(), vec![1.0; 3]);
    }
}
