//! WebAssembly bindings for the browser demo.
//!
//! Three operations are exposed: an incremental [`Simulation`], the analytic
//! envelopes ([`envelope`]) and a viscous-versus-hyperbolic comparison
//! ([`viscous_gap`]). Each binding wraps a plain Rust function so the logic
//! is testable natively.

use kompaneets_core::diagnostics::{best_fit_alpha, ConservationLedger};
use kompaneets_core::godunov::{self, Godunov, RunSettings};
use kompaneets_core::model::{self, FluxModel};
use kompaneets_core::scenario::{initial_state, parse_config, ScenarioConfig};
use kompaneets_core::timeloop::Scheme;
use kompaneets_core::verify;
use kompaneets_core::{diagnostics, CellField};
use wasm_bindgen::prelude::*;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// A half-line run that advances on demand.
#[wasm_bindgen]
pub struct Simulation {
    config: ScenarioConfig,
    scheme: Godunov,
    state: Vec<f64>,
    scratch: Vec<f64>,
    ledger: ConservationLedger,
    t: f64,
}

impl Simulation {
    /// Builds a run from a scenario document (only preset, grid and cfl are used).
    pub fn from_config(text: &str) -> Result<Self, String> {
        let config = parse_config(text).map_err(|e| e.to_string())?;
        let init = initial_state(&config).map_err(|e| e.to_string())?;
        let n0 = diagnostics::photon_number(&init);
        Ok(Self {
            scheme: Godunov::new(*init.grid()),
            scratch: init.values().to_vec(),
            state: init.into_values(),
            ledger: ConservationLedger::new(n0),
            t: 0.0,
            config,
        })
    }

    /// Advances by `duration`, landing on `t + duration` exactly.
    pub fn run_for(&mut self, duration: f64) -> Result<u64, String> {
        if !duration.is_finite() || duration < 0.0 {
            return Err(format!("duration must be finite and >= 0, got {duration}"));
        }
        let target = self.t + duration;
        let dx = self.scheme.grid().dx();
        let mut steps = 0;
        while self.t < target {
            let dt = Scheme::stable_dt(&self.scheme, &self.state, self.config.cfl).min(target - self.t);
            let record = self.scheme.advance(&self.state, &mut self.scratch, dt);
            std::mem::swap(&mut self.state, &mut self.scratch);
            self.ledger.record(&record, dx * self.state.iter().sum::<f64>());
            self.t = if dt == target - self.t { target } else { self.t + dt };
            steps += 1;
        }
        Ok(steps)
    }

    pub fn field(&self) -> CellField {
        CellField::from_values(*self.scheme.grid(), self.state.clone()).expect("state stays finite")
    }
}

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(config_json: &str) -> Result<Simulation, JsError> {
        Self::from_config(config_json).map_err(js)
    }

    pub fn advance(&mut self, duration: f64) -> Result<u32, JsError> {
        self.run_for(duration).map(|s| s as u32).map_err(js)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn values(&self) -> Vec<f64> {
        self.state.clone()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.scheme.grid().centers().collect()
    }

    pub fn photon_number(&self) -> f64 {
        self.ledger.current_number
    }

    pub fn condensate(&self) -> f64 {
        self.ledger.condensate_mass()
    }

    /// `α` of the closest equilibrium and its values at the cell centers.
    pub fn alpha_fit(&self) -> f64 {
        best_fit_alpha(&self.field()).alpha
    }

    pub fn equilibrium_values(&self, alpha: f64) -> Result<Vec<f64>, JsError> {
        let grid = *self.scheme.grid();
        Ok(diagnostics::equilibrium_field(alpha, &grid).map_err(js)?.into_values())
    }
}

/// Analytic envelopes at time `t` on `xs`: the super-solution, the support
/// edge and the one-sided slope bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub upper: Vec<f64>,
    pub support_edge: f64,
    pub slope_bound: f64,
}

pub fn envelope_at(t: f64, radius: f64, xs: &[f64]) -> Result<Envelope, String> {
    let c_prime = FluxModel::new(radius).map_err(|e| e.to_string())?.c_prime();
    let upper = xs
        .iter()
        .map(|&x| {
            if x > radius {
                Ok(0.0)
            } else {
                model::supersolution(t, x, radius, f64::INFINITY)
            }
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    Ok(Envelope {
        upper,
        support_edge: model::support_curve(t, radius).map_err(|e| e.to_string())?,
        slope_bound: if t > 0.0 {
            model::slope_bound(t, c_prime).map_err(|e| e.to_string())?
        } else {
            f64::NEG_INFINITY
        },
    })
}

/// `[support_edge, slope_bound, upper...]`, flattened for JavaScript.
#[wasm_bindgen]
pub fn envelope(t: f64, radius: f64, xs: Vec<f64>) -> Result<Vec<f64>, JsError> {
    let e = envelope_at(t, radius, &xs).map_err(js)?;
    let mut out = vec![e.support_edge, e.slope_bound];
    out.extend(e.upper);
    Ok(out)
}

/// L¹ distance at `t_end` between the viscous run with `epsilon` (restricted
/// to the half-line) and the hyperbolic run of the same scenario.
pub fn viscous_gap_of(config_json: &str, epsilon: f64, t_end: f64) -> Result<f64, String> {
    let config = parse_config(config_json).map_err(|e| e.to_string())?;
    let init = initial_state(&config).map_err(|e| e.to_string())?;
    let settings = RunSettings::new(t_end).with_cfl(config.cfl);
    let reference = godunov::run(&init, &settings).map_err(|e| e.to_string())?;
    verify::viscous_gap(&init, &reference.last().field, config.radius, epsilon, t_end, config.cfl)
        .map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn viscous_gap(config_json: &str, epsilon: f64, t_end: f64) -> Result<f64, JsError> {
    viscous_gap_of(config_json, epsilon, t_end).map_err(js)
}
