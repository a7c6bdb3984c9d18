//! Explicit time loop shared by the hyperbolic and the viscous solver.

use crate::diagnostics::ConservationLedger;
use crate::error::{Error, Result};
use crate::godunov::{check_cfl, check_step, RunSettings, StepRecord};
use crate::grid::{CellField, GridSpec, Snapshot};

/// A conservative explicit update on a fixed grid.
pub trait Scheme {
    fn grid(&self) -> &GridSpec;

    fn stable_dt(&self, values: &[f64], cfl: f64) -> f64;

    /// Writes the state after `dt` into `next` and reports the boundary fluxes.
    fn advance(&mut self, current: &[f64], next: &mut [f64], dt: f64) -> StepRecord;
}

/// What an observer sees after each step.
#[derive(Debug)]
pub struct StepView<'a> {
    pub step: u64,
    pub t_before: f64,
    pub t_after: f64,
    pub before: &'a [f64],
    pub after: &'a [f64],
    pub record: &'a StepRecord,
    pub grid: &'a GridSpec,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    /// Ledger state at each snapshot instant.
    pub ledgers: Vec<ConservationLedger>,
    pub steps: Vec<StepRecord>,
    pub ledger: ConservationLedger,
    pub step_count: u64,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("a trajectory holds its initial snapshot")
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| (s.t - t).abs() <= 1e-12 * t.abs().max(1.0))
    }
}

/// Sorted, de-duplicated output instants including `0` and `t_end`.
pub(crate) fn output_times(settings: &RunSettings) -> Result<Vec<f64>> {
    let t_end = settings.t_end;
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::Domain(format!("t_end must be finite and >= 0, got {t_end}")));
    }
    let tol = 1e-12 * t_end.max(1.0);
    let mut times = vec![0.0, t_end];
    for &t in &settings.snapshot_times {
        if !(t >= -tol && t <= t_end + tol) {
            return Err(Error::Domain(format!("snapshot instant {t} outside [0, {t_end}]")));
        }
        times.push(t.clamp(0.0, t_end));
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= tol);
    Ok(times)
}

/// Runs `scheme` from `initial` to `settings.t_end`.
pub fn drive<S: Scheme>(
    scheme: &mut S,
    initial: &CellField,
    settings: &RunSettings,
    mut observer: impl FnMut(&StepView<'_>),
) -> Result<Trajectory> {
    check_cfl(settings.cfl)?;
    initial.check_physical()?;
    if !initial.grid().same_as(scheme.grid()) {
        return Err(Error::GridMismatch("initial state and scheme grids differ".into()));
    }
    let grid = *scheme.grid();
    let times = output_times(settings)?;

    let mut current = initial.values().to_vec();
    let mut next = current.clone();
    let mut ledger = ConservationLedger::new(photon_number_of(&current, grid.dx()));
    let mut snapshots = vec![Snapshot {
        t: 0.0,
        field: initial.clone(),
    }];
    let mut ledgers = vec![ledger];
    let mut steps = Vec::new();
    let mut t = 0.0;
    let mut step: u64 = 0;

    for &target in times.iter().skip(1) {
        while t < target {
            let stable = scheme.stable_dt(&current, settings.cfl);
            let remaining = target - t;
            let (dt, t_after) = if stable >= remaining {
                (remaining, target)
            } else {
                (stable, t + stable)
            };
            let record = scheme.advance(&current, &mut next, dt);
            step += 1;
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    last_good: Box::new(Snapshot {
                        t,
                        field: CellField::from_values(grid, current)?,
                    }),
                });
            }
            check_step(&next, step)?;
            ledger.record(&record, photon_number_of(&next, grid.dx()));
            observer(&StepView {
                step,
                t_before: t,
                t_after,
                before: &current,
                after: &next,
                record: &record,
                grid: &grid,
            });
            if settings.keep_steps {
                steps.push(record);
            }
            std::mem::swap(&mut current, &mut next);
            t = t_after;
        }
        snapshots.push(Snapshot {
            t: target,
            field: CellField::from_values(grid, current.clone())?,
        });
        ledgers.push(ledger);
    }

    Ok(Trajectory {
        snapshots,
        ledgers,
        steps,
        ledger,
        step_count: step,
    })
}

pub(crate) fn photon_number_of(values: &[f64], dx: f64) -> f64 {
    dx * values.iter().sum::<f64>()
}

pub(crate) struct TimeLoop;

impl TimeLoop {
    /// Evolves two states with one shared step schedule (the smaller of the
    /// two stable steps). `observer` receives the time and both states after
    /// each step. Returns the number of steps taken.
    pub(crate) fn pair<S: Scheme>(
        sa: &mut S,
        sb: &mut S,
        a: &CellField,
        b: &CellField,
        settings: &RunSettings,
        mut observer: impl FnMut(f64, &[f64], &[f64]),
    ) -> Result<u64> {
        check_cfl(settings.cfl)?;
        a.check_physical()?;
        b.check_physical()?;
        let t_end = output_times(settings)?.pop().unwrap_or(0.0);
        let (mut ca, mut cb) = (a.values().to_vec(), b.values().to_vec());
        let (mut na, mut nb) = (ca.clone(), cb.clone());
        let mut t = 0.0;
        let mut step = 0;
        while t < t_end {
            let stable = sa.stable_dt(&ca, settings.cfl).min(sb.stable_dt(&cb, settings.cfl));
            let (dt, t_after) = if stable >= t_end - t {
                (t_end - t, t_end)
            } else {
                (stable, t + stable)
            };
            sa.advance(&ca, &mut na, dt);
            sb.advance(&cb, &mut nb, dt);
            step += 1;
            check_step(&na, step)?;
            check_step(&nb, step)?;
            std::mem::swap(&mut ca, &mut na);
            std::mem::swap(&mut cb, &mut nb);
            t = t_after;
            observer(t, &ca, &cb);
        }
        Ok(step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_times_are_sorted_and_bounded() {
        let s = RunSettings::new(2.0).with_snapshots([1.5, 0.5, 0.5, 2.0]);
        assert_eq!(output_times(&s).unwrap(), vec![0.0, 0.5, 1.5, 2.0]);
        let bad = RunSettings::new(1.0).with_snapshots([1.5]);
        assert!(output_times(&bad).is_err());
        assert!(output_times(&RunSettings::new(-1.0)).is_err());
        let s = RunSettings::new(1.0).every(0.1);
        assert_eq!(output_times(&s).unwrap().len(), 11);
    }
}
