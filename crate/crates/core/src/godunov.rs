//! First-order Godunov finite-volume scheme on the half-line.
//!
//! The left boundary copies the first cell into the ghost, so the interface
//! flux at `x = 0` is `-n_0^2` and mass can only leave. The right ghost is
//! held at zero, which imposes zero inflow.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{CellField, GridSpec};
use crate::model::{self, flux_with};
use crate::timeloop::{self, Scheme, StepView, TimeLoop, Trajectory};

pub const DEFAULT_CFL: f64 = 0.45;
/// Floor on the maximal wave speed used for the time step.
pub const SPEED_FLOOR: f64 = 1e-12;

/// Godunov flux for `f(n) = g n - n^2`, which is concave in `n`.
#[inline]
pub fn numerical_flux(n_left: f64, n_right: f64, g: f64) -> f64 {
    if n_left <= n_right {
        flux_with(g, n_left).min(flux_with(g, n_right))
    } else {
        // maximise f over [n_right, n_left]; the sonic point is g / 2
        let sonic = (0.5 * g).max(n_right).min(n_left);
        flux_with(g, sonic)
    }
}

/// Boundary fluxes of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub dt: f64,
    /// Interface flux at the left end; never positive for non-negative states.
    pub left_outflux: f64,
    /// Flux entering through the right end, `-F̂` at the last interface.
    pub right_influx: f64,
}

/// Godunov scheme with the coefficient `g` frozen at cell centers and
/// interfaces of a fixed grid.
#[derive(Debug, Clone)]
pub struct Godunov {
    grid: GridSpec,
    g_center: Vec<f64>,
    g_iface: Vec<f64>,
    fluxes: Vec<f64>,
}

impl Godunov {
    /// Scheme for the model coefficient `2x - x^2`.
    pub fn new(grid: GridSpec) -> Self {
        Self::with_coefficient(grid, model::g)
    }

    pub fn with_coefficient(grid: GridSpec, g: impl Fn(f64) -> f64) -> Self {
        let cells = grid.cells();
        Self {
            grid,
            g_center: (0..cells).map(|i| g(grid.center(i))).collect(),
            g_iface: (0..=cells).map(|i| g(grid.interface(i))).collect(),
            fluxes: vec![0.0; cells + 1],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn g_interfaces(&self) -> &[f64] {
        &self.g_iface
    }

    /// Largest `|g - 2n|` over cell centers and both adjacent interfaces.
    pub fn max_speed(&self, values: &[f64]) -> f64 {
        let mut speed = SPEED_FLOOR;
        for (i, &n) in values.iter().enumerate() {
            let s = (self.g_center[i] - 2.0 * n)
                .abs()
                .max((self.g_iface[i] - 2.0 * n).abs())
                .max((self.g_iface[i + 1] - 2.0 * n).abs());
            speed = speed.max(s);
        }
        speed
    }

    pub fn stable_dt(&self, state: &CellField, cfl: f64) -> Result<f64> {
        check_cfl(cfl)?;
        state.check_physical()?;
        Ok(cfl * self.grid.dx() / self.max_speed(state.values()))
    }

    /// Interface fluxes `F̂_{i-1/2}` for `i = 0..=cells`.
    pub fn interface_fluxes(&mut self, values: &[f64]) -> &[f64] {
        let cells = values.len();
        self.fluxes[0] = numerical_flux(values[0], values[0], self.g_iface[0]);
        for i in 1..cells {
            self.fluxes[i] = numerical_flux(values[i - 1], values[i], self.g_iface[i]);
        }
        self.fluxes[cells] = numerical_flux(values[cells - 1], 0.0, self.g_iface[cells]);
        &self.fluxes
    }

    /// One conservative update returning the new state.
    pub fn step(&mut self, state: &CellField, dt: f64) -> Result<(CellField, StepRecord)> {
        self.ensure_grid(state)?;
        state.check_physical()?;
        let mut next = state.clone();
        let record = self.advance(state.values(), next.values_mut(), dt);
        check_step(next.values(), 0)?;
        Ok((next, record))
    }

    fn ensure_grid(&self, state: &CellField) -> Result<()> {
        if state.grid().same_as(&self.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "state on {:?}, scheme on {:?}",
                state.grid(),
                self.grid
            )))
        }
    }
}

impl Scheme for Godunov {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn stable_dt(&self, values: &[f64], cfl: f64) -> f64 {
        cfl * self.grid.dx() / self.max_speed(values)
    }

    fn advance(&mut self, current: &[f64], next: &mut [f64], dt: f64) -> StepRecord {
        let lambda = dt / self.grid.dx();
        let cells = current.len();
        self.interface_fluxes(current);
        for i in 0..cells {
            next[i] = current[i] - lambda * (self.fluxes[i + 1] - self.fluxes[i]);
        }
        StepRecord {
            dt,
            left_outflux: self.fluxes[0],
            right_influx: -self.fluxes[cells],
        }
    }
}

pub(crate) fn check_cfl(cfl: f64) -> Result<()> {
    if !(cfl > 0.0 && cfl < 1.0) {
        return Err(Error::Domain(format!("cfl must lie in (0, 1), got {cfl}")));
    }
    Ok(())
}

/// Post-hoc positivity check; a monotone update never produces negatives
/// beyond rounding.
pub(crate) fn check_step(values: &[f64], step: u64) -> Result<()> {
    let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    for (cell, &value) in values.iter().enumerate() {
        if value < -1e-12 * scale {
            return Err(Error::CflViolation { step, cell, value });
        }
    }
    Ok(())
}

/// Stable time step of the half-line scheme for `state`.
pub fn stable_dt(state: &CellField, cfl: f64) -> Result<f64> {
    Godunov::new(*state.grid()).stable_dt(state, cfl)
}

/// Stable time step capped by the time left until the next output instant.
pub fn stable_dt_capped(state: &CellField, cfl: f64, remaining: f64) -> Result<f64> {
    Ok(stable_dt(state, cfl)?.min(remaining.max(0.0)))
}

/// One step of the half-line scheme.
pub fn step(state: &CellField, dt: f64) -> Result<(CellField, StepRecord)> {
    Godunov::new(*state.grid()).step(state, dt)
}

/// Time-stepping parameters shared by both solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub cfl: f64,
    pub t_end: f64,
    /// Output instants in `[0, t_end]`; `0` and `t_end` are always emitted.
    pub snapshot_times: Vec<f64>,
    /// Keep every [`StepRecord`] in the trajectory.
    pub keep_steps: bool,
}

impl RunSettings {
    pub fn new(t_end: f64) -> Self {
        Self {
            cfl: DEFAULT_CFL,
            t_end,
            snapshot_times: Vec::new(),
            keep_steps: false,
        }
    }

    pub fn with_snapshots(mut self, times: impl IntoIterator<Item = f64>) -> Self {
        self.snapshot_times = times.into_iter().collect();
        self
    }

    pub fn every(mut self, interval: f64) -> Self {
        let count = (self.t_end / interval).floor() as usize;
        self.snapshot_times = (0..=count).map(|k| k as f64 * interval).collect();
        self
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn keep_steps(mut self) -> Self {
        self.keep_steps = true;
        self
    }
}

/// Evolves `initial` with the half-line scheme.
pub fn run(initial: &CellField, settings: &RunSettings) -> Result<Trajectory> {
    run_observed(initial, settings, |_| {})
}

/// Like [`run`], calling `observer` after every step.
pub fn run_observed(
    initial: &CellField,
    settings: &RunSettings,
    observer: impl FnMut(&StepView<'_>),
) -> Result<Trajectory> {
    let mut scheme = Godunov::new(*initial.grid());
    timeloop::drive(&mut scheme, initial, settings, observer)
}

/// Lockstep evolution of two states with a common step schedule.
pub fn run_pair(
    a: &CellField,
    b: &CellField,
    settings: &RunSettings,
    observer: impl FnMut(f64, &[f64], &[f64]),
) -> Result<u64> {
    a.ensure_same_grid(b)?;
    let mut sa = Godunov::new(*a.grid());
    let mut sb = Godunov::new(*b.grid());
    TimeLoop::pair(&mut sa, &mut sb, a, b, settings, observer)
}
