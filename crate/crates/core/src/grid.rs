// SPDX-License-Identifier: Apache-2.0

//! Uniform grids, N-component fields on them, and time series of fields.

use std::sync::Arc;

use crate::error::{Error, Result};

/// How stencils treat nodes outside the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Boundary {
    /// Out-of-range nodes read as zero.
    #[default]
    ZeroPad,
    /// Indices wrap around.
    Periodic,
}

impl Boundary {
    pub fn to_u8(self) -> u8 {
        match self {
            Boundary::ZeroPad => 0,
            Boundary::Periodic => 1,
        }
    }

    pub fn from_u8(b: u8) -> Option<Self> {
        match b {
            0 => Some(Boundary::ZeroPad),
            1 => Some(Boundary::Periodic),
            _ => None,
        }
    }
}

/// Uniform tensor-product grid. Node `k` on axis `j` sits at `origin[j] + k * spacing[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dims: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    boundary: Boundary,
}

impl Grid {
    pub fn new(
        dims: Vec<usize>,
        spacing: Vec<f64>,
        origin: Vec<f64>,
        boundary: Boundary,
    ) -> Result<Self> {
        let n = dims.len();
        if n == 0 {
            return Err(Error::InvalidArgument("grid needs at least one axis".into()));
        }
        if spacing.len() != n || origin.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "dims has {n} axes, spacing {}, origin {}",
                spacing.len(),
                origin.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidArgument("every axis needs at least one node".into()));
        }
        if spacing.iter().any(|&h| !(h.is_finite() && h > 0.0)) {
            return Err(Error::InvalidArgument(
                "grid spacings must be finite and strictly positive".into(),
            ));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::NonFinite("grid origin".into()));
        }
        Ok(Self {
            dims,
            spacing,
            origin,
            boundary,
        })
    }

    /// 1D grid with `nx` nodes at `origin + k*dx`.
    pub fn line(nx: usize, dx: f64, origin: f64, boundary: Boundary) -> Result<Self> {
        Self::new(vec![nx], vec![dx], vec![origin], boundary)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Volume element `Π Δx_j`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Row-major stride of axis `j`.
    pub fn stride(&self, axis: usize) -> usize {
        self.dims[axis + 1..].iter().product()
    }

    /// Coordinates of node `k` along `axis`.
    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        self.origin[axis] + k as f64 * self.spacing[axis]
    }

    /// Multi-index of a flat node index.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.ndim()];
        for j in (0..self.ndim()).rev() {
            idx[j] = flat % self.dims[j];
            flat /= self.dims[j];
        }
        idx
    }

    /// Physical coordinates of a flat node index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .into_iter()
            .enumerate()
            .map(|(j, k)| self.coord(j, k))
            .collect()
    }

    /// Flags nodes that touch the edge of the domain on any axis.
    pub fn is_edge(&self, flat: usize) -> bool {
        self.unravel(flat)
            .iter()
            .zip(&self.dims)
            .any(|(&k, &n)| k == 0 || k + 1 == n)
    }
}

/// `n_components` scalar fields on a shared grid, stored `[component][x1]..[xn]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    n_components: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, n_components: usize, data: Vec<f64>) -> Result<Self> {
        if n_components == 0 {
            return Err(Error::InvalidArgument("field needs at least one component".into()));
        }
        let expected = n_components * grid.len();
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: data.len(),
            });
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field entry {k}")));
        }
        Ok(Self {
            grid,
            n_components,
            data,
        })
    }

    /// Skips the finiteness scan. For solver internals whose callers check blow-up separately.
    pub(crate) fn from_raw(grid: Arc<Grid>, n_components: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n_components * grid.len());
        Self {
            grid,
            n_components,
            data,
        }
    }

    pub fn zeros(grid: Arc<Grid>, n_components: usize) -> Self {
        let len = n_components * grid.len();
        Self::from_raw(grid, n_components, vec![0.0; len])
    }

    /// Evaluates `f(component, point)` at every node.
    pub fn from_fn(
        grid: Arc<Grid>,
        n_components: usize,
        f: impl Fn(usize, &[f64]) -> f64,
    ) -> Result<Self> {
        let m = grid.len();
        let mut data = Vec::with_capacity(n_components * m);
        for c in 0..n_components {
            for flat in 0..m {
                data.push(f(c, &grid.point(flat)));
            }
        }
        Self::new(grid, n_components, data)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let m = self.grid.len();
        &self.data[c * m..(c + 1) * m]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let m = self.grid.len();
        &mut self.data[c * m..(c + 1) * m]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// True when both fields live on equal grids with equal component counts.
    pub fn same_shape(&self, other: &Field) -> bool {
        self.n_components == other.n_components
            && (Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid)
    }
}

/// Snapshots of a field at strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    grid: Arc<Grid>,
    times: Vec<f64>,
    snapshots: Vec<Field>,
}

impl Dataset {
    pub fn new(grid: Arc<Grid>, times: Vec<f64>, snapshots: Vec<Field>) -> Result<Self> {
        if times.len() != snapshots.len() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                got: snapshots.len(),
            });
        }
        if times.is_empty() {
            return Err(Error::TooFewSnapshots { needed: 1, got: 0 });
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("dataset times".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("times must be strictly increasing".into()));
        }
        let n = snapshots[0].n_components();
        for s in &snapshots {
            if s.n_components() != n || *s.grid().as_ref() != *grid {
                return Err(Error::DimensionMismatch(
                    "all snapshots must share the dataset grid and component count".into(),
                ));
            }
        }
        // Share one grid allocation across snapshots.
        let snapshots = snapshots
            .into_iter()
            .map(|s| {
                let nc = s.n_components();
                Field::from_raw(grid.clone(), nc, s.into_data())
            })
            .collect();
        Ok(Self {
            grid,
            times,
            snapshots,
        })
    }

    /// Builds snapshots from raw row-major buffers.
    pub fn from_raw_snapshots(
        grid: Arc<Grid>,
        n_components: usize,
        times: Vec<f64>,
        data: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let snapshots = data
            .into_iter()
            .map(|d| Field::new(grid.clone(), n_components, d))
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, times, snapshots)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshots(&self) -> &[Field] {
        &self.snapshots
    }

    pub fn n_components(&self) -> usize {
        self.snapshots[0].n_components()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of data intervals `(t_j, t_{j+1})`.
    pub fn n_intervals(&self) -> usize {
        self.times.len().saturating_sub(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2() -> Arc<Grid> {
        Arc::new(Grid::new(vec![3, 4], vec![0.5, 0.25], vec![0.0, 1.0], Boundary::ZeroPad).unwrap())
    }

    #[test]
    fn strides_are_row_major() {
        let g = grid2();
        assert_eq!(g.stride(0), 4);
        assert_eq!(g.stride(1), 1);
        assert_eq!(g.unravel(7), vec![1, 3]);
        assert_eq!(g.point(7), vec![0.5, 1.75]);
        assert!(g.is_edge(0));
        assert!(!g.is_edge(5));
        assert_eq!(g.cell_volume(), 0.125);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(vec![3], vec![0.0], vec![0.0], Boundary::ZeroPad).is_err());
        assert!(Grid::new(vec![3], vec![1.0, 1.0], vec![0.0], Boundary::ZeroPad).is_err());
        assert!(Grid::new(vec![], vec![], vec![], Boundary::ZeroPad).is_err());
    }

    #[test]
    fn field_rejects_nan_and_wrong_length() {
        let g = grid2();
        assert!(Field::new(g.clone(), 1, vec![0.0; 11]).is_err());
        let mut d = vec![0.0; 12];
        d[3] = f64::NAN;
        assert!(Field::new(g, 1, d).is_err());
    }

    #[test]
    fn dataset_requires_increasing_times() {
        let g = grid2();
        let f = Field::zeros(g.clone(), 1);
        assert!(Dataset::new(g.clone(), vec![0.0, 0.0], vec![f.clone(), f.clone()]).is_err());
        let ds = Dataset::new(g, vec![0.0, 1.0], vec![f.clone(), f]).unwrap();
        assert_eq!(ds.n_intervals(), 1);
    }
}
