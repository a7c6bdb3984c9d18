//! Scenario configuration, batch runs and CSV output.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::diagnostics::TimeSeriesRecord;
use crate::error::{Error, Result};
use crate::godunov::{self, RunSettings, DEFAULT_CFL};
use crate::grid::{CellField, GridSpec, Snapshot, MIN_CELLS};
use crate::model::FluxModel;
use crate::presets::{sample_initial, Preset, PRESET_NAMES};
use crate::verify;
use crate::viscous::{self, ViscousConfig};

pub const DEFAULT_X_MAX: f64 = 4.0;
pub const DEFAULT_CELLS: usize = 2000;
pub const DEFAULT_T_END: f64 = 10.0;
pub const DEFAULT_RADIUS: f64 = 2.0;

/// A complete run description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    #[serde(flatten)]
    pub preset: Preset,
    pub x_max: f64,
    pub cells: usize,
    pub cfl: f64,
    pub t_end: f64,
    /// Explicit output instants; `0` and `t_end` are always written.
    pub snapshots: Vec<f64>,
    /// Adds output instants at every multiple of this interval.
    pub snapshot_every: Option<f64>,
    /// Selects the viscous solver when present.
    pub epsilon: Option<f64>,
    /// Support radius of the extended coefficient used by the viscous solver.
    pub radius: f64,
    pub output_dir: PathBuf,
    pub snapshots_file: String,
    pub series_file: String,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct Fields {
    x_max: f64,
    cells: usize,
    cfl: f64,
    t_end: f64,
    snapshots: Vec<f64>,
    snapshot_every: Option<f64>,
    epsilon: Option<f64>,
    radius: f64,
    output_dir: PathBuf,
    snapshots_file: String,
    series_file: String,
    seed: u64,
}

impl Default for Fields {
    fn default() -> Self {
        Self {
            x_max: DEFAULT_X_MAX,
            cells: DEFAULT_CELLS,
            cfl: DEFAULT_CFL,
            t_end: DEFAULT_T_END,
            snapshots: Vec::new(),
            snapshot_every: None,
            epsilon: None,
            radius: DEFAULT_RADIUS,
            output_dir: PathBuf::from("."),
            snapshots_file: "snapshots.csv".into(),
            series_file: "series.csv".into(),
            seed: 0,
        }
    }
}

const FIELD_NAMES: [&str; 12] = [
    "x_max",
    "cells",
    "cfl",
    "t_end",
    "snapshots",
    "snapshot_every",
    "epsilon",
    "radius",
    "output_dir",
    "snapshots_file",
    "series_file",
    "seed",
];

fn config_error(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Parses and validates a JSON scenario document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    parse_config_with(text, &[])
}

/// Like [`parse_config`], after applying `key=value` overrides. Values that
/// parse as JSON are taken as such, anything else as a string.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<ScenarioConfig> {
    let mut doc: Value = serde_json::from_str(text).map_err(|e| config_error("$", e.to_string()))?;
    let obj = doc
        .as_object_mut()
        .ok_or_else(|| config_error("$", "expected a JSON object"))?;
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| config_error(item.as_str(), "override must have the form key=value"))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        obj.insert(key.trim().to_string(), value);
    }
    from_object(obj)
}

fn from_object(obj: &Map<String, Value>) -> Result<ScenarioConfig> {
    let listing = || format!("valid presets: {}", PRESET_NAMES.join(", "));
    let name = match obj.get("preset") {
        Some(Value::String(s)) => s.as_str(),
        Some(_) => return Err(config_error("preset", format!("expected a string; {}", listing()))),
        None => return Err(config_error("preset", format!("missing; {}", listing()))),
    };
    let params = Preset::parameters(name)
        .ok_or_else(|| config_error("preset", format!("unknown preset `{name}`; {}", listing())))?;
    for key in obj.keys() {
        if key != "preset" && !params.contains(&key.as_str()) && !FIELD_NAMES.contains(&key.as_str()) {
            return Err(config_error(key.as_str(), format!("unknown field for preset `{name}`")));
        }
    }
    let preset_obj: Map<String, Value> = obj
        .iter()
        .filter(|(k, _)| *k == "preset" || params.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let preset: Preset = serde_path_to_error::deserialize(Value::Object(preset_obj))
        .map_err(|e| config_error(path_of(e.path(), "preset"), e.inner().to_string()))?;
    preset
        .validate()
        .map_err(|e| config_error("preset", e.to_string()))?;

    let field_obj: Map<String, Value> = obj
        .iter()
        .filter(|(k, _)| FIELD_NAMES.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let f: Fields = serde_path_to_error::deserialize(Value::Object(field_obj))
        .map_err(|e| config_error(path_of(e.path(), "$"), e.inner().to_string()))?;

    let config = ScenarioConfig {
        preset,
        x_max: f.x_max,
        cells: f.cells,
        cfl: f.cfl,
        t_end: f.t_end,
        snapshots: f.snapshots,
        snapshot_every: f.snapshot_every,
        epsilon: f.epsilon,
        radius: f.radius,
        output_dir: f.output_dir,
        snapshots_file: f.snapshots_file,
        series_file: f.series_file,
        seed: f.seed,
    };
    config.validate()?;
    Ok(config)
}

fn path_of(path: &serde_path_to_error::Path, fallback: &str) -> String {
    let p = path.to_string();
    if p.is_empty() || p == "." {
        fallback.to_string()
    } else {
        p
    }
}

impl ScenarioConfig {
    pub fn new(preset: Preset, t_end: f64) -> Self {
        let f = Fields::default();
        Self {
            preset,
            x_max: f.x_max,
            cells: f.cells,
            cfl: f.cfl,
            t_end,
            snapshots: f.snapshots,
            snapshot_every: f.snapshot_every,
            epsilon: f.epsilon,
            radius: f.radius,
            output_dir: f.output_dir,
            snapshots_file: f.snapshots_file,
            series_file: f.series_file,
            seed: f.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(config_error("t_end", format!("must be finite and >= 0, got {}", self.t_end)));
        }
        if self.cells < MIN_CELLS {
            return Err(config_error("cells", format!("must be >= {MIN_CELLS}, got {}", self.cells)));
        }
        if !(self.x_max > 0.0) || !self.x_max.is_finite() {
            return Err(config_error("x_max", format!("must be finite and > 0, got {}", self.x_max)));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(config_error("cfl", format!("must lie in (0, 1), got {}", self.cfl)));
        }
        for (i, w) in self.snapshots.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(config_error(format!("snapshots[{}]", i + 1), "instants must be sorted"));
            }
        }
        if let Some(i) = self.snapshots.iter().position(|&t| !(0.0..=self.t_end).contains(&t)) {
            return Err(config_error(
                format!("snapshots[{i}]"),
                format!("{} lies outside [0, {}]", self.snapshots[i], self.t_end),
            ));
        }
        if let Some(dt) = self.snapshot_every {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(config_error("snapshot_every", format!("must be finite and > 0, got {dt}")));
            }
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) || !eps.is_finite() {
                return Err(config_error("epsilon", format!("must be finite and > 0, got {eps}")));
            }
        }
        if !(self.radius >= 2.0) || !self.radius.is_finite() {
            return Err(config_error("radius", format!("must be finite and >= 2, got {}", self.radius)));
        }
        let (_, hi) = self.preset.support();
        if hi > self.x_max {
            return Err(config_error(
                "x_max",
                format!("preset `{}` is supported up to {hi}, beyond x_max = {}", self.preset.name(), self.x_max),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::half_line(self.x_max, self.cells)
    }

    pub fn output_times(&self) -> Vec<f64> {
        let mut times = self.snapshots.clone();
        if let Some(every) = self.snapshot_every {
            let count = (self.t_end / every + 1e-9).floor() as usize;
            times.extend((1..=count).map(|k| k as f64 * every));
        }
        times.retain(|t| *t <= self.t_end);
        times
    }
}

/// Half-line snapshots and their diagnostic rows.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub snapshots: Vec<Snapshot>,
    pub series: Vec<TimeSeriesRecord>,
    /// `N(T) + condensate - right inflow - N(0)` for the solver that ran.
    pub ledger_residual: f64,
}

/// Runs the scenario in memory.
pub fn simulate(config: &ScenarioConfig) -> Result<ScenarioResult> {
    config.validate()?;
    let grid = config.grid()?;
    let init = sample_initial(&config.preset, &grid)?;
    let times = config.output_times();
    match config.epsilon {
        None => {
            let settings = RunSettings::new(config.t_end)
                .with_cfl(config.cfl)
                .with_snapshots(times);
            let traj = godunov::run(&init, &settings)?;
            let series = traj
                .snapshots
                .iter()
                .zip(&traj.ledgers)
                .map(|(s, l)| TimeSeriesRecord::compute(s, l.condensate_mass()))
                .collect();
            Ok(ScenarioResult {
                ledger_residual: traj.ledger.residual(),
                snapshots: traj.snapshots,
                series,
            })
        }
        Some(eps) => {
            let mut vc = ViscousConfig::around(&grid, FluxModel::new(config.radius)?, eps, viscous::DEFAULT_MARGIN)?;
            vc.cfl = config.cfl;
            let run = viscous::run_viscous(&viscous::embed(&init, &vc.grid)?, &vc, config.t_end, &times)?;
            let traj = run.trajectory;
            let ext = vc.grid;
            let negative_cells = (0..ext.cells()).take_while(|&i| ext.interface(i + 1) <= 1e-9 * ext.dx()).count();
            let mut snapshots = Vec::with_capacity(traj.snapshots.len());
            let mut series = Vec::with_capacity(traj.snapshots.len());
            for (s, l) in traj.snapshots.iter().zip(&traj.ledgers) {
                // mass that crossed x = 0: what sits left of it plus what left the far end
                let left_of_origin = ext.dx() * s.field.values()[..negative_cells].iter().sum::<f64>();
                let half = Snapshot {
                    t: s.t,
                    field: viscous::restrict(&s.field, &grid)?,
                };
                series.push(TimeSeriesRecord::compute(&half, l.condensate_mass() + left_of_origin));
                snapshots.push(half);
            }
            Ok(ScenarioResult {
                ledger_residual: traj.ledger.residual(),
                snapshots,
                series,
            })
        }
    }
}

/// Paths written by [`run_scenario`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioFiles {
    pub snapshots: PathBuf,
    pub series: PathBuf,
}

/// Runs the scenario and writes its CSV files under `config.output_dir`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<(ScenarioResult, ScenarioFiles)> {
    let result = simulate(config)?;
    fs::create_dir_all(&config.output_dir)?;
    let files = ScenarioFiles {
        snapshots: config.output_dir.join(&config.snapshots_file),
        series: config.output_dir.join(&config.series_file),
    };
    write_snapshots(&files.snapshots, &result.snapshots)?;
    write_series(&files.series, &result.series)?;
    Ok((result, files))
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn write_snapshots(path: &Path, snapshots: &[Snapshot]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["t", "x", "n"]).map_err(csv_error)?;
    for s in snapshots {
        let grid = s.field.grid();
        for (i, n) in s.field.values().iter().enumerate() {
            w.write_record([fmt_num(s.t), fmt_num(grid.center(i)), fmt_num(*n)])
                .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub const SERIES_COLUMNS: [&str; 8] = [
    "t",
    "N",
    "condensate_mass",
    "tv",
    "min_slope",
    "alpha_fit",
    "l1_to_fit",
    "lower_bound",
];

pub fn write_series(path: &Path, series: &[TimeSeriesRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(SERIES_COLUMNS).map_err(csv_error)?;
    for r in series {
        w.write_record(
            [
                r.t,
                r.photon_number,
                r.condensate_mass,
                r.total_variation,
                r.min_forward_slope,
                r.alpha_fit,
                r.l1_to_alpha_fit,
                r.lower_bound,
            ]
            .map(fmt_num),
        )
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub type Pool = rayon::ThreadPool;

/// Worker pool for independent runs; `jobs = 0` is treated as 1.
pub fn worker_pool(jobs: usize) -> Result<Pool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| config_error("jobs", e.to_string()))
}

/// One row of a viscosity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub l1_to_godunov: f64,
}

/// L¹ distance at `t_end` between viscous and hyperbolic runs of `config`,
/// one viscous run per entry of `epsilons`, on a pool of `jobs` workers.
pub fn sweep_viscosity(config: &ScenarioConfig, epsilons: &[f64], jobs: usize) -> Result<Vec<SweepRow>> {
    config.validate()?;
    if epsilons.is_empty() {
        return Err(config_error("eps", "needs at least one value"));
    }
    if let Some(bad) = epsilons.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(config_error("eps", format!("values must be finite and > 0, got {bad}")));
    }
    let pool = worker_pool(jobs)?;
    let grid = config.grid()?;
    let rows = pool.install(|| {
        verify::viscosity_sweep(&config.preset, &grid, config.radius, epsilons, config.t_end, config.cfl)
    })?;
    Ok(rows
        .into_iter()
        .map(|(epsilon, l1_to_godunov)| SweepRow { epsilon, l1_to_godunov })
        .collect())
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["epsilon", "l1_to_godunov"]).map_err(csv_error)?;
    for r in rows {
        w.write_record([fmt_num(r.epsilon), fmt_num(r.l1_to_godunov)])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs several independent scenarios on a pool of `jobs` workers and
/// returns their results in input order.
pub fn run_batch(configs: &[ScenarioConfig], jobs: usize) -> Result<Vec<ScenarioResult>> {
    let pool = worker_pool(jobs)?;
    pool.install(|| configs.par_iter().map(simulate).collect())
}

/// Initial state of a scenario, sampled on its grid.
pub fn initial_state(config: &ScenarioConfig) -> Result<CellField> {
    sample_initial(&config.preset, &config.grid()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn minimal_document_gets_defaults() {
        let c = parse_config(r#"{"preset":"equilibrium","alpha":0}"#).unwrap();
        assert_eq!(c.preset, Preset::Equilibrium { alpha: 0.0 });
        assert_eq!((c.cells, c.x_max, c.cfl), (2000, 4.0, 0.45));
        assert_eq!(c.epsilon, None);
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse_config(r#"{"preset":"box","a":0.5,"b":1.5,"height":1,"t_end":-1}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { field, .. } if field == "t_end"), "{e}");
        let e = parse_config(r#"{"preset":"box","a":0.5,"b":1.5,"height":1,"cells":"many"}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { field, .. } if field == "cells"), "{e}");
        let e = parse_config(r#"{"preset":"box","a":0.5,"b":1.5,"height":1,"snapshots":[2,1]}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { field, .. } if field == "snapshots[1]"), "{e}");
        let e = parse_config(r#"{"preset":"box","a":0.5,"b":1.5,"height":1,"colour":2}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { field, .. } if field == "colour"), "{e}");
    }

    #[test]
    fn unknown_preset_lists_valid_ones() {
        let e = parse_config(r#"{"preset":"gaussian"}"#).unwrap_err().to_string();
        for name in PRESET_NAMES {
            assert!(e.contains(name), "{e}");
        }
    }

    #[test]
    fn overrides_replace_fields() {
        let sets = ["t_end=2.5".to_string(), "output_dir=out/run".to_string(), "alpha=1".to_string()];
        let c = parse_config_with(r#"{"preset":"equilibrium","alpha":0}"#, &sets).unwrap();
        assert_eq!(c.t_end, 2.5);
        assert_eq!(c.output_dir, PathBuf::from("out/run"));
        assert_eq!(c.preset, Preset::Equilibrium { alpha: 1.0 });
        assert!(parse_config_with(r#"{"preset":"equilibrium","alpha":0}"#, &["t_end".into()]).is_err());
    }

    #[test]
    fn zero_data_gives_zero_series() {
        let mut c = ScenarioConfig::new(Preset::Box { a: 0.5, b: 1.5, height: 0.0 }, 1.0);
        c.cells = 100;
        c.snapshot_every = Some(0.25);
        let r = simulate(&c).unwrap();
        assert_eq!(r.series.len(), 5);
        for row in &r.series {
            assert_eq!(row.photon_number, 0.0);
            assert_eq!(row.condensate_mass, 0.0);
            assert_eq!(row.total_variation, 0.0);
            assert_eq!(row.lower_bound, 0.0);
        }
    }

    #[test]
    fn equilibrium_fit_stays_put() {
        let mut c = ScenarioConfig::new(Preset::Equilibrium { alpha: 1.0 }, 2.0);
        c.cells = 800;
        c.snapshot_every = Some(0.5);
        let r = simulate(&c).unwrap();
        for row in &r.series {
            assert!((row.alpha_fit - 1.0).abs() < 0.02, "{row:?}");
        }
    }

    #[test]
    fn viscous_scenario_tracks_origin_outflow() {
        let mut c = ScenarioConfig::new(Preset::Box { a: 0.0, b: 1.0, height: 1.0 }, 0.5);
        c.cells = 200;
        c.epsilon = Some(1e-2);
        let r = simulate(&c).unwrap();
        let last = r.series.last().unwrap();
        assert!(last.condensate_mass > 0.0);
        // what left the half-line went through x = 0 or x_max
        assert_relative_eq!(last.photon_number + last.condensate_mass, 1.0, epsilon = 1e-9);
        assert!(r.ledger_residual.abs() < 1e-12);
    }

    #[test]
    fn output_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ScenarioConfig::new(Preset::Bump { center: 1.0, width: 0.5, height: 1.0 }, 0.5);
        c.cells = 64;
        c.snapshots = vec![0.25];
        let read = |c: &ScenarioConfig| {
            let (_, files) = run_scenario(c).unwrap();
            (fs::read(files.snapshots).unwrap(), fs::read(files.series).unwrap())
        };
        c.output_dir = dir.path().join("a");
        let a = read(&c);
        c.output_dir = dir.path().join("b");
        let b = read(&c);
        assert_eq!(a, b);
        let series = String::from_utf8(a.1).unwrap();
        assert_eq!(series.lines().next().unwrap(), SERIES_COLUMNS.join(","));
        assert_eq!(series.lines().count(), 4);
        let snaps = String::from_utf8(a.0).unwrap();
        assert_eq!(snaps.lines().count(), 1 + 3 * 64);
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.0_f64.sqrt(), 1e-300, -7.25e12] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }
}
