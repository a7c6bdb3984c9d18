//! Functionals of discrete solutions and the qualitative checks built on
//! them: conservation ledger, contraction, comparison, one-sided slopes,
//! stationary-profile fitting and entropy/weak-form residuals.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::godunov::{self, numerical_flux, RunSettings, StepRecord};
use crate::grid::{CellField, GridSpec, Snapshot};
use crate::model::{self, flux_with, EquilibriumProfile};
use crate::timeloop::StepView;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.carry += (self.sum - t) + value;
        } else {
            self.carry += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Running balance of the photon number against the boundary fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservationLedger {
    pub initial_number: f64,
    pub current_number: f64,
    condensate: CompensatedSum,
    right: CompensatedSum,
    pub steps: u64,
}

impl ConservationLedger {
    pub fn new(initial_number: f64) -> Self {
        Self {
            initial_number,
            current_number: initial_number,
            condensate: CompensatedSum::default(),
            right: CompensatedSum::default(),
            steps: 0,
        }
    }

    /// Accumulated `∫ n(t, 0)^2 dt`.
    pub fn condensate_mass(&self) -> f64 {
        self.condensate.value()
    }

    /// Accumulated flux entering through the right end.
    pub fn right_flux_accum(&self) -> f64 {
        self.right.value()
    }

    /// Books one step; `current_number` is the photon number after it.
    pub fn record(&mut self, record: &StepRecord, current_number: f64) {
        self.condensate.add(-record.dt * record.left_outflux);
        self.right.add(record.dt * record.right_influx);
        self.current_number = current_number;
        self.steps += 1;
    }

    /// Applies one step and refreshes the photon number from `field`.
    pub fn update(mut self, record: &StepRecord, field: &CellField) -> Self {
        self.record(record, photon_number(field));
        self
    }

    /// `N(T) + condensate - right inflow - N(0)`; zero up to rounding.
    pub fn residual(&self) -> f64 {
        self.current_number + self.condensate_mass() - self.right_flux_accum() - self.initial_number
    }
}

/// One row of the per-snapshot diagnostic series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub photon_number: f64,
    pub condensate_mass: f64,
    pub total_variation: f64,
    pub min_forward_slope: f64,
    pub alpha_fit: f64,
    pub l1_to_alpha_fit: f64,
    pub lower_bound: f64,
}

impl TimeSeriesRecord {
    pub fn compute(snapshot: &Snapshot, condensate_mass: f64) -> Self {
        let field = &snapshot.field;
        let fit = best_fit_alpha(field);
        Self {
            t: snapshot.t,
            photon_number: photon_number(field),
            condensate_mass,
            total_variation: total_variation(field),
            min_forward_slope: min_forward_slope(field),
            alpha_fit: fit.alpha,
            l1_to_alpha_fit: fit.distance,
            lower_bound: lower_bound_functional(field),
        }
    }
}

pub fn photon_number(field: &CellField) -> f64 {
    field.dx() * field.values().iter().sum::<f64>()
}

pub fn l1_distance(a: &CellField, b: &CellField) -> Result<f64> {
    a.ensure_same_grid(b)?;
    Ok(l1_values(a.values(), b.values(), a.dx()))
}

pub(crate) fn l1_values(a: &[f64], b: &[f64], dx: f64) -> f64 {
    dx * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Variation on the closed half-line with a zero exterior on both sides.
pub fn total_variation(field: &CellField) -> f64 {
    let v = field.values();
    let inner: f64 = v.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    inner + v[0].abs() + v[v.len() - 1].abs()
}

/// `min_i (n_{i+1} - n_i) / Δx`.
pub fn min_forward_slope(field: &CellField) -> f64 {
    min_slope_values(field.values(), field.dx())
}

pub(crate) fn min_slope_values(values: &[f64], dx: f64) -> f64 {
    values
        .windows(2)
        .map(|w| (w[1] - w[0]) / dx)
        .fold(f64::INFINITY, f64::min)
}

/// Mass held in cells lying entirely to the right of `x`.
pub fn mass_right_of(field: &CellField, x: f64) -> f64 {
    let grid = field.grid();
    let dx = grid.dx();
    field
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.interface(*i) >= x - 1e-12 * dx)
        .map(|(_, v)| v)
        .sum::<f64>()
        * dx
}

/// Exact cell averages of `n̂_α` on `grid`.
pub fn equilibrium_field(alpha: f64, grid: &GridSpec) -> Result<CellField> {
    let profile = EquilibriumProfile::new(alpha)?;
    let dx = grid.dx();
    let values = (0..grid.cells())
        .map(|i| {
            let a = grid.interface(i);
            profile.cell_average(a, a + dx)
        })
        .collect();
    CellField::from_values(*grid, values)
}

/// Result of fitting the stationary family to a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaFit {
    pub alpha: f64,
    pub distance: f64,
}

fn distance_to_profile(field: &CellField, alpha: f64) -> f64 {
    let profile = EquilibriumProfile { alpha };
    let grid = field.grid();
    let dx = grid.dx();
    field
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let a = grid.interface(i);
            (v - profile.cell_average(a, a + dx)).abs()
        })
        .sum::<f64>()
        * dx
}

/// L¹-closest member of the stationary family: a scan of `[0, 2]` with step
/// `1e-3`, refined by golden-section search to `1e-6`. Ties go to the
/// smaller `α`.
pub fn best_fit_alpha(field: &CellField) -> AlphaFit {
    const SCAN: usize = 2000;
    let mut best = AlphaFit {
        alpha: 0.0,
        distance: distance_to_profile(field, 0.0),
    };
    for k in 1..=SCAN {
        let alpha = k as f64 * 2.0 / SCAN as f64;
        let d = distance_to_profile(field, alpha);
        if d < best.distance {
            best = AlphaFit { alpha, distance: d };
        }
    }

    let step = 2.0 / SCAN as f64;
    let (mut lo, mut hi) = ((best.alpha - step).max(0.0), (best.alpha + step).min(2.0));
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (distance_to_profile(field, c), distance_to_profile(field, d));
    while hi - lo > 1e-6 {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = distance_to_profile(field, c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = distance_to_profile(field, d);
        }
    }
    let alpha = 0.5 * (lo + hi);
    let distance = distance_to_profile(field, alpha);
    if distance < best.distance || (distance == best.distance && alpha < best.alpha) {
        AlphaFit { alpha, distance }
    } else {
        best
    }
}

/// `Δx Σ min(n_i, n̂_0(x_i))` over cells with centers in `(0, 2)`.
pub fn lower_bound_functional(field: &CellField) -> f64 {
    let grid = field.grid();
    field
        .values()
        .iter()
        .enumerate()
        .filter_map(|(i, &v)| {
            let x = grid.center(i);
            (x > 0.0 && x < 2.0).then(|| v.min(model::g(x)))
        })
        .sum::<f64>()
        * grid.dx()
}

/// Largest positive part of the discrete Kruzkov entropy residual of one
/// step over interior cells, for the constant state `k`.
pub fn kruzkov_residual(before: &CellField, after: &CellField, dt: f64, k: f64) -> Result<f64> {
    before.ensure_same_grid(after)?;
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("kruzkov residual needs dt > 0, got {dt}")));
    }
    let grid = before.grid();
    let g_iface: Vec<f64> = (0..=grid.cells()).map(|i| model::g(grid.interface(i))).collect();
    Ok(kruzkov_values(before.values(), after.values(), &g_iface, grid.dx(), dt, k))
}

pub(crate) fn kruzkov_values(
    before: &[f64],
    after: &[f64],
    g_iface: &[f64],
    dx: f64,
    dt: f64,
    k: f64,
) -> f64 {
    kruzkov_cells(before, after, g_iface, dx, dt, k).fold(0.0_f64, f64::max)
}

/// Per-cell Kruzkov residuals over interior cells `1..cells - 1`.
pub(crate) fn kruzkov_cells<'a>(
    before: &'a [f64],
    after: &'a [f64],
    g_iface: &'a [f64],
    dx: f64,
    dt: f64,
    k: f64,
) -> impl Iterator<Item = f64> + 'a {
    // Q at interface i - 1/2
    let entropy_flux = move |i: usize| {
        let (l, r, g) = (before[i - 1], before[i], g_iface[i]);
        numerical_flux(l.max(k), r.max(k), g) - numerical_flux(l.min(k), r.min(k), g)
    };
    (1..before.len() - 1).map(move |i| {
        ((after[i] - k).abs() - (before[i] - k).abs()) / dt
            + (entropy_flux(i + 1) - entropy_flux(i)) / dx
            + sign(before[i] - k) * k * (g_iface[i + 1] - g_iface[i]) / dx
    })
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Smooth compactly supported test function of `(t, x)`.
pub trait TestFunction {
    fn value(&self, t: f64, x: f64) -> f64;
    fn d_dt(&self, t: f64, x: f64) -> f64;
    fn d_dx(&self, t: f64, x: f64) -> f64;
    /// `((t0, t1), (x0, x1))` outside of which the function vanishes.
    fn support(&self) -> ((f64, f64), (f64, f64));
}

/// Product of two `exp(-1 / (1 - s^2))` bumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothBump {
    pub t_center: f64,
    pub t_half_width: f64,
    pub x_center: f64,
    pub x_half_width: f64,
}

fn bump_1d(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - s * s;
    let v = (-1.0 / q).exp();
    (v, v * (-2.0 * s / (q * q)))
}

impl TestFunction for SmoothBump {
    fn value(&self, t: f64, x: f64) -> f64 {
        let (a, _) = bump_1d((t - self.t_center) / self.t_half_width);
        let (b, _) = bump_1d((x - self.x_center) / self.x_half_width);
        a * b
    }

    fn d_dt(&self, t: f64, x: f64) -> f64 {
        let (_, da) = bump_1d((t - self.t_center) / self.t_half_width);
        let (b, _) = bump_1d((x - self.x_center) / self.x_half_width);
        da / self.t_half_width * b
    }

    fn d_dx(&self, t: f64, x: f64) -> f64 {
        let (a, _) = bump_1d((t - self.t_center) / self.t_half_width);
        let (_, db) = bump_1d((x - self.x_center) / self.x_half_width);
        a * db / self.x_half_width
    }

    fn support(&self) -> ((f64, f64), (f64, f64)) {
        (
            (self.t_center - self.t_half_width, self.t_center + self.t_half_width),
            (self.x_center - self.x_half_width, self.x_center + self.x_half_width),
        )
    }
}

fn check_support(phi: &dyn TestFunction, t_end: f64, grid: &GridSpec) -> Result<()> {
    let ((t0, t1), (x0, x1)) = phi.support();
    if !(t0 > 0.0 && t1 < t_end && x0 > grid.x_min().max(0.0) && x1 < grid.x_max()) {
        return Err(Error::Support(format!(
            "support [{t0}, {t1}] x [{x0}, {x1}] is not inside (0, {t_end}) x ({}, {})",
            grid.x_min().max(0.0),
            grid.x_max()
        )));
    }
    Ok(())
}

/// `Δx Σ_i [n_i φ_t + F(x_i, n_i) φ_x]` at one instant.
fn weak_integrand(values: &[f64], grid: &GridSpec, t: f64, phi: &dyn TestFunction) -> f64 {
    let ((t0, t1), (x0, x1)) = phi.support();
    if t <= t0 || t >= t1 {
        return 0.0;
    }
    let dx = grid.dx();
    let first = (((x0 - grid.x_min()) / dx).floor().max(0.0)) as usize;
    let last = ((((x1 - grid.x_min()) / dx).ceil()) as usize).min(values.len());
    (first..last)
        .map(|i| {
            let x = grid.center(i);
            let n = values[i];
            n * phi.d_dt(t, x) + flux_with(model::g(x), n) * phi.d_dx(t, x)
        })
        .sum::<f64>()
        * dx
}

/// Discrete `|∫∫ n φ_t + F(x, n) φ_x dx dt|` by the trapezoid rule between
/// consecutive snapshots.
pub fn weak_form_residual(snapshots: &[Snapshot], phi: &dyn TestFunction) -> Result<f64> {
    let (first, last) = match (snapshots.first(), snapshots.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Ok(0.0),
    };
    let grid = *first.field.grid();
    if first.t != 0.0 {
        return Err(Error::Support("snapshots must start at t = 0".into()));
    }
    check_support(phi, last.t, &grid)?;
    let mut total = CompensatedSum::default();
    for pair in snapshots.windows(2) {
        pair[0].field.ensure_same_grid(&pair[1].field)?;
        let h = pair[1].t - pair[0].t;
        let a = weak_integrand(pair[0].field.values(), &grid, pair[0].t, phi);
        let b = weak_integrand(pair[1].field.values(), &grid, pair[1].t, phi);
        total.add(0.5 * h * (a + b));
    }
    Ok(total.value().abs())
}

/// Streaming form of [`weak_form_residual`], fed by a solver observer so
/// every step contributes.
pub struct WeakFormAccumulator<'a> {
    phi: &'a dyn TestFunction,
    total: CompensatedSum,
}

impl<'a> WeakFormAccumulator<'a> {
    pub fn new(phi: &'a dyn TestFunction, t_end: f64, grid: &GridSpec) -> Result<Self> {
        check_support(phi, t_end, grid)?;
        Ok(Self {
            phi,
            total: CompensatedSum::default(),
        })
    }

    pub fn observe(&mut self, view: &StepView<'_>) {
        let h = view.t_after - view.t_before;
        let a = weak_integrand(view.before, view.grid, view.t_before, self.phi);
        let b = weak_integrand(view.after, view.grid, view.t_after, self.phi);
        self.total.add(0.5 * h * (a + b));
    }

    pub fn residual(&self) -> f64 {
        self.total.value().abs()
    }
}

/// Outcome of a lockstep comparison run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub steps: u64,
    /// Largest `a_i - b_i` seen over all steps (negative when strictly ordered).
    pub max_excess: f64,
    /// `(step, cell, excess)` of the first breach beyond `1e-12`.
    pub first_violation: Option<(u64, usize, f64)>,
}

impl ComparisonReport {
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

pub const ORDER_TOLERANCE: f64 = 1e-12;

/// Evolves `a` and `b` on one step schedule and checks `a <= b` cellwise.
pub fn check_monotone_pair(a: &CellField, b: &CellField, settings: &RunSettings) -> Result<ComparisonReport> {
    let mut step = 0;
    let initial = order_excess(a.values(), b.values());
    let mut report = ComparisonReport {
        steps: 0,
        max_excess: initial.1,
        first_violation: (initial.1 > ORDER_TOLERANCE).then_some((0, initial.0, initial.1)),
    };
    report.steps = godunov::run_pair(a, b, settings, |_, va, vb| {
        step += 1;
        let (cell, excess) = order_excess(va, vb);
        report.max_excess = report.max_excess.max(excess);
        if excess > ORDER_TOLERANCE && report.first_violation.is_none() {
            report.first_violation = Some((step, cell, excess));
        }
    })?;
    Ok(report)
}

fn order_excess(a: &[f64], b: &[f64]) -> (usize, f64) {
    a.iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, e)| if e > best.1 { (i, e) } else { best })
}

/// Outcome of a lockstep L¹-contraction run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionReport {
    pub steps: u64,
    pub initial_distance: f64,
    pub final_distance: f64,
    /// Largest single-step increase of the L¹ distance.
    pub max_increase: f64,
    /// `(step, increase)` of the first increase beyond `1e-12`.
    pub first_violation: Option<(u64, f64)>,
}

impl ContractionReport {
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Evolves `a` and `b` on one step schedule and tracks `Δx Σ |a_i - b_i|`.
pub fn check_contraction(a: &CellField, b: &CellField, settings: &RunSettings) -> Result<ContractionReport> {
    a.ensure_same_grid(b)?;
    let dx = a.dx();
    let initial_distance = l1_values(a.values(), b.values(), dx);
    let mut previous = initial_distance;
    let mut step = 0;
    let mut max_increase = f64::NEG_INFINITY;
    let mut first_violation = None;
    let steps = godunov::run_pair(a, b, settings, |_, va, vb| {
        step += 1;
        let d = l1_values(va, vb, dx);
        let increase = d - previous;
        max_increase = max_increase.max(increase);
        if increase > ORDER_TOLERANCE && first_violation.is_none() {
            first_violation = Some((step, increase));
        }
        previous = d;
    })?;
    Ok(ContractionReport {
        steps,
        initial_distance,
        final_distance: previous,
        max_increase,
        first_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::godunov::{run_observed, Godunov};
    use crate::presets::{sample_initial, Preset};
    use crate::timeloop::Scheme;
    use approx::assert_abs_diff_eq;

    fn grid(cells: usize) -> GridSpec {
        GridSpec::half_line(4.0, cells).unwrap()
    }

    fn preset(p: Preset, cells: usize) -> CellField {
        sample_initial(&p, &grid(cells)).unwrap()
    }

    #[test]
    fn photon_number_examples() {
        assert_eq!(photon_number(&CellField::zeros(grid(100))), 0.0);
        let eq = equilibrium_field(0.0, &grid(2000)).unwrap();
        assert_abs_diff_eq!(photon_number(&eq), 4.0 / 3.0, epsilon = 1e-12);
        let bx = preset(Preset::Box { a: 0.5, b: 1.5, height: 2.0 }, 400);
        assert_abs_diff_eq!(photon_number(&bx), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn l1_examples() {
        let g = grid(2000);
        let n0 = equilibrium_field(0.0, &g).unwrap();
        let n1 = equilibrium_field(1.0, &g).unwrap();
        assert_eq!(l1_distance(&n0, &n0).unwrap(), 0.0);
        assert_abs_diff_eq!(l1_distance(&n0, &CellField::zeros(g)).unwrap(), 4.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l1_distance(&n0, &n1).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
        let other = CellField::zeros(grid(1000));
        assert!(matches!(l1_distance(&n0, &other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn total_variation_examples() {
        assert_eq!(total_variation(&CellField::zeros(grid(50))), 0.0);
        let bx = preset(Preset::Box { a: 0.5, b: 1.5, height: 2.0 }, 400);
        assert_abs_diff_eq!(total_variation(&bx), 4.0, epsilon = 1e-12);
        let eq = equilibrium_field(0.0, &grid(2000)).unwrap();
        assert_abs_diff_eq!(total_variation(&eq), 2.0, epsilon = 1e-5);
    }

    #[test]
    fn min_slope_examples() {
        let g = grid(400);
        let ramp = CellField::from_fn(g, |x| x);
        assert!(min_forward_slope(&ramp) >= 0.0);
        let eq = equilibrium_field(0.0, &grid(4000)).unwrap();
        assert_abs_diff_eq!(min_forward_slope(&eq), -2.0, epsilon = 1e-2);
        let mut v = vec![1.0; 400];
        for x in &mut v[200..] {
            *x = 0.25;
        }
        let jump = CellField::from_values(g, v).unwrap();
        assert_abs_diff_eq!(min_forward_slope(&jump), -0.75 / g.dx(), epsilon = 1e-9);
    }

    #[test]
    fn ledger_update_arithmetic() {
        let f = CellField::zeros(grid(10));
        let ledger = ConservationLedger::new(0.0);
        let rec = StepRecord { dt: 0.01, left_outflux: 0.0, right_influx: 0.0 };
        assert_eq!(ledger.update(&rec, &f).condensate_mass(), 0.0);
        let rec = StepRecord { dt: 0.01, left_outflux: -0.25, right_influx: 0.0 };
        assert_abs_diff_eq!(ledger.update(&rec, &f).condensate_mass(), 0.0025, epsilon = 1e-18);
    }

    #[test]
    fn fit_recovers_family_member() {
        let g = grid(2000);
        let fit = best_fit_alpha(&equilibrium_field(0.5, &g).unwrap());
        assert_abs_diff_eq!(fit.alpha, 0.5, epsilon = 1e-6);
        assert!(fit.distance < 1e-9);
        let fit = best_fit_alpha(&CellField::zeros(g));
        assert_eq!(fit.alpha, 2.0);
        assert_eq!(fit.distance, 0.0);
    }

    #[test]
    fn fit_ignores_exterior_mass() {
        let g = grid(2000);
        let mut v = equilibrium_field(0.0, &g).unwrap().into_values();
        // mass 0.01 on [3.0, 3.1]
        for (i, x) in v.iter_mut().enumerate() {
            let c = g.center(i);
            if c > 3.0 && c < 3.1 {
                *x += 0.1;
            }
        }
        let fit = best_fit_alpha(&CellField::from_values(g, v).unwrap());
        assert!(fit.alpha < 1e-3, "{fit:?}");
        assert_abs_diff_eq!(fit.distance, 0.01, epsilon = 1e-4);
    }

    #[test]
    fn lower_bound_examples() {
        let g = grid(2000);
        assert_eq!(lower_bound_functional(&CellField::zeros(g)), 0.0);
        let eq = equilibrium_field(0.0, &g).unwrap();
        let lb = lower_bound_functional(&eq);
        assert!(lb <= 4.0 / 3.0 && lb > 4.0 / 3.0 - 10.0 * g.dx(), "{lb}");
        let big = CellField::from_values(g, eq.values().iter().map(|v| 10.0 * v).collect()).unwrap();
        let lb_big = lower_bound_functional(&big);
        // min(10 avg, g(center)) = g(center) for every interior cell
        let centers: f64 = g.centers().filter(|&x| x < 2.0).map(model::g).sum::<f64>() * g.dx();
        assert_abs_diff_eq!(lb_big, centers, epsilon = 1e-12);
    }

    fn one_step(field: &CellField) -> (CellField, f64) {
        let mut scheme = Godunov::new(*field.grid());
        let dt = Scheme::stable_dt(&scheme, field.values(), 0.45);
        let (next, _) = scheme.step(field, dt).unwrap();
        (next, dt)
    }

    #[test]
    fn kruzkov_residual_vanishes_for_k_zero() {
        let bx = preset(Preset::Box { a: 0.5, b: 1.5, height: 1.0 }, 400);
        let (next, dt) = one_step(&bx);
        let r = kruzkov_residual(&bx, &next, dt, 0.0).unwrap();
        assert!(r < 1e-9, "{r}");
    }

    #[test]
    fn kruzkov_residual_vanishes_for_large_k() {
        // k above every state, and g(x) k dominated: |n - k| is affine in n
        let g = GridSpec::half_line(1.5, 300).unwrap();
        let bump = sample_initial(&Preset::Bump { center: 0.75, width: 0.5, height: 0.5 }, &g).unwrap();
        let (next, dt) = one_step(&bump);
        let r = kruzkov_residual(&bump, &next, dt, 5.0).unwrap();
        assert!(r < 1e-9, "{r}");
    }

    #[test]
    fn weak_residual_zero_for_zero_test_function() {
        struct Zero;
        impl TestFunction for Zero {
            fn value(&self, _: f64, _: f64) -> f64 { 0.0 }
            fn d_dt(&self, _: f64, _: f64) -> f64 { 0.0 }
            fn d_dx(&self, _: f64, _: f64) -> f64 { 0.0 }
            fn support(&self) -> ((f64, f64), (f64, f64)) { ((0.1, 0.2), (0.5, 1.0)) }
        }
        let bx = preset(Preset::Box { a: 0.5, b: 1.5, height: 1.0 }, 200);
        let traj = godunov::run(&bx, &RunSettings::new(0.5).every(0.05)).unwrap();
        assert_eq!(weak_form_residual(&traj.snapshots, &Zero).unwrap(), 0.0);
    }

    #[test]
    fn weak_residual_rejects_bad_support() {
        let phi = SmoothBump { t_center: 0.5, t_half_width: 0.6, x_center: 1.0, x_half_width: 0.5 };
        let bx = preset(Preset::Box { a: 0.5, b: 1.5, height: 1.0 }, 200);
        let traj = godunov::run(&bx, &RunSettings::new(1.0).every(0.1)).unwrap();
        assert!(matches!(weak_form_residual(&traj.snapshots, &phi), Err(Error::Support(_))));
    }

    #[test]
    fn weak_residual_small_on_equilibrium() {
        let phi = SmoothBump { t_center: 0.5, t_half_width: 0.4, x_center: 1.0, x_half_width: 0.6 };
        for cells in [400, 800] {
            let g = grid(cells);
            let eq = equilibrium_field(0.0, &g).unwrap();
            let mut acc = WeakFormAccumulator::new(&phi, 1.0, &g).unwrap();
            run_observed(&eq, &RunSettings::new(1.0), |v| acc.observe(v)).unwrap();
            assert!(acc.residual() < g.dx(), "cells {cells}: {}", acc.residual());
        }
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let phi = SmoothBump { t_center: 1.0, t_half_width: 0.5, x_center: 1.0, x_half_width: 0.7 };
        let h = 1e-6;
        for &(t, x) in &[(0.8, 0.9), (1.2, 1.4), (1.0, 0.5)] {
            let ft = (phi.value(t + h, x) - phi.value(t - h, x)) / (2.0 * h);
            let fx = (phi.value(t, x + h) - phi.value(t, x - h)) / (2.0 * h);
            assert_abs_diff_eq!(ft, phi.d_dt(t, x), epsilon = 1e-7);
            assert_abs_diff_eq!(fx, phi.d_dx(t, x), epsilon = 1e-7);
        }
    }

    #[test]
    fn identical_pair_is_trivially_ordered() {
        let bx = preset(Preset::Box { a: 0.5, b: 1.5, height: 1.0 }, 200);
        let rep = check_monotone_pair(&bx, &bx, &RunSettings::new(1.0)).unwrap();
        assert!(rep.holds());
        assert_eq!(rep.max_excess, 0.0);
    }

    #[test]
    fn nested_boxes_stay_ordered() {
        let lo = preset(Preset::Box { a: 0.5, b: 1.5, height: 1.0 }, 400);
        let hi = preset(Preset::Box { a: 0.5, b: 1.5, height: 2.0 }, 400);
        let rep = check_monotone_pair(&lo, &hi, &RunSettings::new(3.0)).unwrap();
        assert!(rep.holds(), "{rep:?}");
        assert!(rep.steps > 100);
    }

    #[test]
    fn equilibria_stay_ordered() {
        let g = grid(400);
        let n1 = equilibrium_field(1.0, &g).unwrap();
        let n0 = equilibrium_field(0.0, &g).unwrap();
        assert!(check_monotone_pair(&n1, &n0, &RunSettings::new(2.0)).unwrap().holds());
    }

    #[test]
    fn unordered_pair_reports_violation_at_step_zero() {
        let lo = preset(Preset::Box { a: 0.5, b: 1.5, height: 1.0 }, 100);
        let hi = preset(Preset::Box { a: 0.5, b: 1.5, height: 2.0 }, 100);
        let rep = check_monotone_pair(&hi, &lo, &RunSettings::new(0.1)).unwrap();
        assert_eq!(rep.first_violation.map(|v| v.0), Some(0));
    }

    #[test]
    fn contraction_on_box_and_bump() {
        let a = preset(Preset::Box { a: 0.5, b: 1.5, height: 1.0 }, 400);
        let b = preset(Preset::Bump { center: 1.2, width: 0.6, height: 1.5 }, 400);
        let rep = check_contraction(&a, &b, &RunSettings::new(2.0)).unwrap();
        assert!(rep.holds(), "{rep:?}");
        assert!(rep.final_distance <= rep.initial_distance);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn field_strategy(cells: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0..2.0_f64, cells)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn random_pairs_contract(a in field_strategy(48), b in field_strategy(48)) {
            let g = GridSpec::half_line(3.0, 48).unwrap();
            let fa = CellField::from_values(g, a).unwrap();
            let fb = CellField::from_values(g, b).unwrap();
            let rep = check_contraction(&fa, &fb, &RunSettings::new(0.5)).unwrap();
            prop_assert!(rep.holds(), "{:?}", rep);
        }

        #[test]
        fn ordered_random_pairs_stay_ordered(a in field_strategy(48), bumps in field_strategy(48)) {
            let g = GridSpec::half_line(3.0, 48).unwrap();
            let b: Vec<f64> = a.iter().zip(&bumps).map(|(x, y)| x + y).collect();
            let fa = CellField::from_values(g, a).unwrap();
            let fb = CellField::from_values(g, b).unwrap();
            let rep = check_monotone_pair(&fa, &fb, &RunSettings::new(0.5)).unwrap();
            prop_assert!(rep.holds(), "{:?}", rep);
        }

        #[test]
        fn ledger_closes_on_random_data(a in field_strategy(64)) {
            let g = GridSpec::half_line(3.0, 64).unwrap();
            let f = CellField::from_values(g, a).unwrap();
            let traj = godunov::run(&f, &RunSettings::new(1.0)).unwrap();
            let scale = traj.ledger.initial_number.max(1.0);
            prop_assert!(traj.ledger.residual().abs() <= 1e-12 * scale);
            prop_assert!(traj.ledger.right_flux_accum() == 0.0);
        }
    }
}
