//! Viscous regularization `n_t + (ḡ(x) n - n^2)_x = ε n_xx` on an extended
//! line, used as an independent reference for the half-line solver.
//!
//! The convective part reuses the Godunov flux, so `ε → 0` reduces to the
//! hyperbolic update on the extended grid. Both far ends carry homogeneous
//! Dirichlet ghosts.

use crate::diagnostics::CompensatedSum;
use crate::error::{Error, Result};
use crate::godunov::{self, numerical_flux, RunSettings, StepRecord};
use crate::grid::{CellField, GridSpec};
use crate::model::FluxModel;
use crate::timeloop::{self, Scheme, StepView, Trajectory};

/// Default margin of the extended grid beyond `[0, 2R]`.
pub const DEFAULT_MARGIN: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscousConfig {
    pub epsilon: f64,
    pub model: FluxModel,
    pub grid: GridSpec,
    pub cfl: f64,
}

impl ViscousConfig {
    /// Extended grid `[-margin, max(2R, x_max) + margin]` sharing the cell
    /// width and the cell boundaries of `half_line`.
    pub fn around(half_line: &GridSpec, model: FluxModel, epsilon: f64, margin: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
        }
        if half_line.x_min() != 0.0 {
            return Err(Error::InvalidGrid("the reference grid must start at x = 0".into()));
        }
        let dx = half_line.dx();
        let left = (margin / dx).ceil() as usize;
        let right_edge = (2.0 * model.support_radius()).max(half_line.x_max()) + margin;
        let right = (right_edge / dx).ceil() as usize;
        let x_min = -(left as f64) * dx;
        let grid = GridSpec::new(x_min, right as f64 * dx, left + right)?;
        if !(grid.x_min() <= -1.0 && grid.x_max() >= 2.0 * model.support_radius()) {
            return Err(Error::InvalidGrid(format!(
                "extended grid {grid:?} must cover [-1, 2R]"
            )));
        }
        Ok(Self {
            epsilon,
            model,
            grid,
            cfl: godunov::DEFAULT_CFL,
        })
    }
}

/// Explicit viscous scheme on the extended grid.
#[derive(Debug, Clone)]
pub struct Viscous {
    convective: godunov::Godunov,
    epsilon: f64,
    fluxes: Vec<f64>,
    origin: Option<usize>,
    origin_outflow: CompensatedSum,
}

impl Viscous {
    pub fn new(config: &ViscousConfig) -> Self {
        let model = config.model;
        Self::with_coefficient(config.grid, config.epsilon, |x| model.extended_g(x))
    }

    pub fn with_coefficient(grid: GridSpec, epsilon: f64, g: impl Fn(f64) -> f64) -> Self {
        let origin = (-grid.x_min() / grid.dx()).round();
        let origin = (origin >= 0.0
            && origin <= grid.cells() as f64
            && (grid.interface(origin as usize)).abs() <= 1e-9 * grid.dx())
        .then_some(origin as usize);
        Self {
            convective: godunov::Godunov::with_coefficient(grid, g),
            epsilon,
            fluxes: vec![0.0; grid.cells() + 1],
            origin,
            origin_outflow: CompensatedSum::default(),
        }
    }

    /// Mass carried leftwards through `x = 0` so far, when `x = 0` is an interface.
    pub fn origin_outflow(&self) -> Option<f64> {
        self.origin.map(|_| self.origin_outflow.value())
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl Scheme for Viscous {
    fn grid(&self) -> &GridSpec {
        self.convective.grid()
    }

    fn stable_dt(&self, values: &[f64], cfl: f64) -> f64 {
        let dx = self.grid().dx();
        let speed = self.convective.max_speed(values);
        cfl * (dx / speed).min(dx * dx / (2.0 * self.epsilon))
    }

    fn advance(&mut self, current: &[f64], next: &mut [f64], dt: f64) -> StepRecord {
        let dx = self.grid().dx();
        let cells = current.len();
        let g = self.convective.g_interfaces();
        let diffusive = self.epsilon / dx;
        let at = |i: isize| {
            if i < 0 || i as usize >= cells {
                0.0
            } else {
                current[i as usize]
            }
        };
        for (i, (flux, &gi)) in self.fluxes.iter_mut().zip(g).enumerate() {
            let (l, r) = (at(i as isize - 1), at(i as isize));
            *flux = numerical_flux(l, r, gi) - diffusive * (r - l);
        }
        let lambda = dt / dx;
        for i in 0..cells {
            next[i] = current[i] - lambda * (self.fluxes[i + 1] - self.fluxes[i]);
        }
        if let Some(o) = self.origin {
            self.origin_outflow.add(-dt * self.fluxes[o]);
        }
        StepRecord {
            dt,
            left_outflux: self.fluxes[0],
            right_influx: -self.fluxes[cells],
        }
    }
}

/// `cfl · min(Δx / S, Δx^2 / (2ε))` with `S` the largest `|ḡ - 2n|`.
pub fn viscous_stable_dt(state: &CellField, config: &ViscousConfig) -> Result<f64> {
    godunov::check_cfl(config.cfl)?;
    state.check_physical()?;
    ensure_grid(state, &config.grid)?;
    Ok(Viscous::new(config).stable_dt(state.values(), config.cfl))
}

pub fn viscous_step(state: &CellField, dt: f64, config: &ViscousConfig) -> Result<CellField> {
    state.check_physical()?;
    ensure_grid(state, &config.grid)?;
    let mut scheme = Viscous::new(config);
    let mut next = state.clone();
    scheme.advance(state.values(), next.values_mut(), dt);
    godunov::check_step(next.values(), 0)?;
    Ok(next)
}

fn ensure_grid(state: &CellField, grid: &GridSpec) -> Result<()> {
    if state.grid().same_as(grid) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!("{:?} vs {:?}", state.grid(), grid)))
    }
}

/// Viscous trajectory and the mass that crossed `x = 0` leftwards.
#[derive(Debug, Clone)]
pub struct ViscousRun {
    pub trajectory: Trajectory,
    pub origin_outflow: Option<f64>,
}

pub fn run_viscous(initial: &CellField, config: &ViscousConfig, t_end: f64, snapshots: &[f64]) -> Result<ViscousRun> {
    run_viscous_observed(initial, config, t_end, snapshots, |_| {})
}

pub fn run_viscous_observed(
    initial: &CellField,
    config: &ViscousConfig,
    t_end: f64,
    snapshots: &[f64],
    observer: impl FnMut(&StepView<'_>),
) -> Result<ViscousRun> {
    let mut scheme = Viscous::new(config);
    let settings = RunSettings::new(t_end)
        .with_cfl(config.cfl)
        .with_snapshots(snapshots.iter().copied());
    let trajectory = timeloop::drive(&mut scheme, initial, &settings, observer)?;
    Ok(ViscousRun {
        trajectory,
        origin_outflow: scheme.origin_outflow(),
    })
}

/// Index of the cell of `outer` that starts where `inner` starts.
fn offset(outer: &GridSpec, inner: &GridSpec) -> Result<usize> {
    let dx = outer.dx();
    let mismatch = |why: &str| Err(Error::GridMismatch(format!("{inner:?} is not a sub-grid of {outer:?}: {why}")));
    if (inner.dx() - dx).abs() > 1e-12 * dx {
        return mismatch("cell widths differ");
    }
    let shift = (inner.x_min() - outer.x_min()) / dx;
    let index = shift.round();
    if (shift - index).abs() > 1e-9 || index < 0.0 {
        return mismatch("cell boundaries do not align");
    }
    let index = index as usize;
    if index + inner.cells() > outer.cells() {
        return mismatch("sub-grid extends past the outer grid");
    }
    Ok(index)
}

/// Copies the cells of `extended` that overlap `half_line`.
pub fn restrict(extended: &CellField, half_line: &GridSpec) -> Result<CellField> {
    let start = offset(extended.grid(), half_line)?;
    CellField::from_values(*half_line, extended.values()[start..start + half_line.cells()].to_vec())
}

/// Extends `field` by zero onto `extended`.
pub fn embed(field: &CellField, extended: &GridSpec) -> Result<CellField> {
    let start = offset(extended, field.grid())?;
    let mut values = vec![0.0; extended.cells()];
    values[start..start + field.grid().cells()].copy_from_slice(field.values());
    CellField::from_values(*extended, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{equilibrium_field, l1_distance, mass_right_of, photon_number};
    use crate::presets::{sample_initial, Preset};
    use approx::assert_abs_diff_eq;

    fn setup(cells: usize, epsilon: f64) -> (GridSpec, ViscousConfig) {
        let half = GridSpec::half_line(4.0, cells).unwrap();
        let cfg = ViscousConfig::around(&half, FluxModel::new(2.0).unwrap(), epsilon, DEFAULT_MARGIN).unwrap();
        (half, cfg)
    }

    #[test]
    fn extended_grid_shares_cells() {
        let (half, cfg) = setup(2000, 1e-2);
        assert_abs_diff_eq!(cfg.grid.x_min(), -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cfg.grid.x_max(), 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cfg.grid.dx(), half.dx(), epsilon = 1e-15);
        assert!(ViscousConfig::around(&half, cfg.model, 0.0, 2.0).is_err());
    }

    #[test]
    fn stable_dt_examples() {
        // ε = 0.01, Δx = 0.01 and a zero state: diffusive cap 0.45 · 1e-4 / 0.02
        let model = FluxModel::new(2.0).unwrap();
        let grid = GridSpec::new(-0.1, 0.1, 20).unwrap();
        let cfg = ViscousConfig { epsilon: 0.01, model, grid, cfl: 0.45 };
        let zero = CellField::zeros(grid);
        assert_abs_diff_eq!(viscous_stable_dt(&zero, &cfg).unwrap(), 0.00225, epsilon = 1e-15);

        // tiny ε: the hyperbolic bound is active
        let (_, cfg) = setup(400, 1e-12);
        let zero = CellField::zeros(cfg.grid);
        // max |ḡ| = 1, at x = 1 and on both pinned ends
        let expect = 0.45 * cfg.grid.dx();
        assert_abs_diff_eq!(viscous_stable_dt(&zero, &cfg).unwrap(), expect, epsilon = 1e-15);

        // large ε: Δx^2 / ε scaling
        let (_, cfg) = setup(400, 10.0);
        let dt = viscous_stable_dt(&zero, &cfg).unwrap();
        assert_abs_diff_eq!(dt, 0.45 * cfg.grid.dx().powi(2) / 20.0, epsilon = 1e-18);
    }

    #[test]
    fn zero_state_stays_zero() {
        let (_, cfg) = setup(200, 1e-2);
        let zero = CellField::zeros(cfg.grid);
        let run = run_viscous(&zero, &cfg, 1.0, &[]).unwrap();
        assert!(run.trajectory.last().field.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spike_spreads_symmetrically_where_g_vanishes() {
        // ḡ ≡ 0 patch; a 1e-9 spike keeps the n^2 part of the flux below rounding
        let grid = GridSpec::new(-1.0, 1.0, 8).unwrap();
        let mut scheme = Viscous::with_coefficient(grid, 0.05, |_| 0.0);
        let mut v = vec![0.0; 8];
        v[4] = 1e-9;
        let dt = scheme.stable_dt(&v, 0.45);
        let mut next = vec![0.0; 8];
        scheme.advance(&v, &mut next, dt);
        let mu = dt * 0.05 / (grid.dx() * grid.dx());
        assert_abs_diff_eq!(next[4], 1e-9 * (1.0 - 2.0 * mu), epsilon = 1e-17);
        assert_abs_diff_eq!(next[3], 1e-9 * mu, epsilon = 1e-17);
        assert_abs_diff_eq!(next[5], 1e-9 * mu, epsilon = 1e-17);
        assert!(next[..3].iter().chain(&next[6..]).all(|&x| x == 0.0));
        let mass: f64 = next.iter().sum();
        assert_abs_diff_eq!(mass, 1e-9, epsilon = 1e-17);
    }

    #[test]
    fn equilibrium_stays_close_under_small_viscosity() {
        let (half, cfg) = setup(1000, 1e-3);
        let eq = equilibrium_field(0.0, &half).unwrap();
        let init = embed(&eq, &cfg.grid).unwrap();
        let run = run_viscous(&init, &cfg, 1.0, &[]).unwrap();
        let back = restrict(&run.trajectory.last().field, &half).unwrap();
        let drift = l1_distance(&back, &eq).unwrap();
        assert!(drift <= 10.0 * (cfg.epsilon + half.dx()), "{drift}");
    }

    #[test]
    fn ledger_closes_on_extended_line() {
        let (half, cfg) = setup(400, 5e-3);
        let bx = sample_initial(&Preset::Box { a: 0.5, b: 1.5, height: 1.0 }, &half).unwrap();
        let run = run_viscous(&embed(&bx, &cfg.grid).unwrap(), &cfg, 2.0, &[]).unwrap();
        assert!(run.trajectory.ledger.residual().abs() < 1e-12);
        let outflow = run.origin_outflow.unwrap();
        assert!(outflow > 0.0);
    }

    #[test]
    fn tail_stays_small() {
        let (half, cfg) = setup(800, 1e-2);
        let bx = sample_initial(&Preset::Box { a: 0.5, b: 2.0, height: 1.0 }, &half).unwrap();
        let run = run_viscous(&embed(&bx, &cfg.grid).unwrap(), &cfg, 5.0, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        for snap in &run.trajectory.snapshots {
            let tail = mass_right_of(&snap.field, 2.0 + 0.5);
            assert!(tail <= 1e-3, "t = {}: tail {tail}", snap.t);
        }
    }

    #[test]
    fn restrict_and_embed() {
        let (half, cfg) = setup(200, 1e-2);
        let zero = CellField::zeros(cfg.grid);
        assert_eq!(restrict(&zero, &half).unwrap(), CellField::zeros(half));

        let bx = sample_initial(&Preset::Box { a: 0.5, b: 1.5, height: 1.0 }, &half).unwrap();
        let ext = embed(&bx, &cfg.grid).unwrap();
        assert_eq!(restrict(&ext, &half).unwrap(), bx);

        let run = run_viscous(&ext, &cfg, 1.0, &[]).unwrap();
        let field = &run.trajectory.last().field;
        assert!(photon_number(&restrict(field, &half).unwrap()) <= photon_number(field));

        let odd = GridSpec::new(0.0105, 4.0105, 200).unwrap();
        assert!(restrict(&zero, &odd).is_err());
        let coarse = GridSpec::half_line(4.0, 100).unwrap();
        assert!(restrict(&zero, &coarse).is_err());
    }
}
