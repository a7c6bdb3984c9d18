use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_CELLS: usize = 8;

/// Uniform grid of `cells` cells on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    x_min: f64,
    x_max: f64,
    cells: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, cells: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() || !(x_max > x_min) {
            return Err(Error::InvalidGrid(format!(
                "need finite x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if cells < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_CELLS} cells, got {cells}"
            )));
        }
        Ok(Self { x_min, x_max, cells })
    }

    /// Grid on the half-line `[0, x_max]`.
    pub fn half_line(x_max: f64, cells: usize) -> Result<Self> {
        Self::new(0.0, x_max, cells)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    /// Position of interface `i - 1/2`; `interface(0)` is `x_min`.
    pub fn interface(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.cells).map(move |i| self.center(i))
    }

    pub(crate) fn same_as(&self, other: &GridSpec) -> bool {
        let tol = 1e-12 * (self.x_max - self.x_min).abs().max(1.0);
        self.cells == other.cells
            && (self.x_min - other.x_min).abs() <= tol
            && (self.x_max - other.x_max).abs() <= tol
    }
}

/// Cell averages of the photon number density on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl CellField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.cells],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.cells
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonPhysical(format!("cell {i} is not finite")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at the cell centers.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.centers().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dx(&self) -> f64 {
        self.grid.dx()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn check_physical(&self) -> Result<()> {
        for (i, &v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonPhysical(format!("cell {i} is not finite")));
            }
            if v < 0.0 {
                return Err(Error::NonPhysical(format!("cell {i} is negative ({v:e})")));
            }
        }
        Ok(())
    }

    pub(crate) fn ensure_same_grid(&self, other: &CellField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )))
        }
    }
}

/// A field at an instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub field: CellField,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry() {
        let grid = GridSpec::half_line(4.0, 400).unwrap();
        assert_eq!(grid.dx(), 0.01);
        assert!((grid.center(0) - 0.005).abs() < 1e-15);
        assert_eq!(grid.interface(0), 0.0);
        assert!((grid.interface(400) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(1.0, 1.0, 10).is_err());
        assert!(GridSpec::new(0.0, 1.0, 7).is_err());
        assert!(GridSpec::new(0.0, f64::NAN, 10).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let grid = GridSpec::half_line(1.0, 8).unwrap();
        assert!(CellField::from_values(grid, vec![0.0; 7]).is_err());
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(CellField::from_values(grid, v).is_err());
        let mut v = vec![0.0; 8];
        v[2] = -1.0;
        let f = CellField::from_values(grid, v).unwrap();
        assert!(f.check_physical().is_err());
    }
}
