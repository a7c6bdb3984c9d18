//! Initial data, sampled as cell averages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellField, GridSpec};
use crate::model::EquilibriumProfile;

pub const PRESET_NAMES: [&str; 5] = [
    "equilibrium",
    "scaled_equilibrium",
    "box",
    "bump",
    "bose_einstein",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Preset {
    /// `n̂_α`.
    Equilibrium { alpha: f64 },
    /// `scale · n̂_α`.
    ScaledEquilibrium { scale: f64, alpha: f64 },
    /// `height` on `[a, b]`.
    Box { a: f64, b: f64, height: f64 },
    /// `height · (1 - s^2)^2` with `s = (x - center) / width`, zero for `|s| >= 1`.
    Bump { center: f64, width: f64, height: f64 },
    /// Bose-Einstein occupation in number-density form, `x^2 / (e^{x+μ} - 1)`,
    /// truncated at `cutoff`.
    BoseEinstein { mu: f64, cutoff: f64 },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Equilibrium { .. } => PRESET_NAMES[0],
            Preset::ScaledEquilibrium { .. } => PRESET_NAMES[1],
            Preset::Box { .. } => PRESET_NAMES[2],
            Preset::Bump { .. } => PRESET_NAMES[3],
            Preset::BoseEinstein { .. } => PRESET_NAMES[4],
        }
    }

    /// Parameter names accepted by the preset called `name`.
    pub fn parameters(name: &str) -> Option<&'static [&'static str]> {
        Some(match name {
            "equilibrium" => &["alpha"],
            "scaled_equilibrium" => &["scale", "alpha"],
            "box" => &["a", "b", "height"],
            "bump" => &["center", "width", "height"],
            "bose_einstein" => &["mu", "cutoff"],
            _ => return None,
        })
    }

    /// Closed interval outside of which the preset vanishes.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Preset::Equilibrium { alpha } | Preset::ScaledEquilibrium { alpha, .. } => (alpha, 2.0),
            Preset::Box { a, b, .. } => (a, b),
            Preset::Bump { center, width, .. } => (center - width, center + width),
            Preset::BoseEinstein { cutoff, .. } => (0.0, cutoff),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Preset(msg));
        let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        match *self {
            Preset::Equilibrium { alpha } => {
                if !(0.0..=2.0).contains(&alpha) {
                    return bad(format!("equilibrium alpha must lie in [0, 2], got {alpha}"));
                }
            }
            Preset::ScaledEquilibrium { scale, alpha } => {
                if !(0.0..=2.0).contains(&alpha) {
                    return bad(format!("equilibrium alpha must lie in [0, 2], got {alpha}"));
                }
                if !(scale >= 0.0) || !scale.is_finite() {
                    return bad(format!("scale must be finite and >= 0, got {scale}"));
                }
            }
            Preset::Box { a, b, height } => {
                if !finite(&[a, b, height]) || !(a >= 0.0 && a < b) || height < 0.0 {
                    return bad(format!("box needs 0 <= a < b and height >= 0, got a = {a}, b = {b}, height = {height}"));
                }
            }
            Preset::Bump { center, width, height } => {
                if !finite(&[center, width, height]) || !(width > 0.0) || height < 0.0 || center - width < 0.0 {
                    return bad(format!(
                        "bump needs width > 0, height >= 0 and center - width >= 0, got center = {center}, width = {width}, height = {height}"
                    ));
                }
            }
            Preset::BoseEinstein { mu, cutoff } => {
                if !(mu >= 0.0) || !mu.is_finite() || !(cutoff > 0.0) || !cutoff.is_finite() {
                    return bad(format!("bose_einstein needs mu >= 0 and cutoff > 0, got mu = {mu}, cutoff = {cutoff}"));
                }
            }
        }
        Ok(())
    }

    /// Exact (or Gauss-quadrature) integral of the preset over `[lo, hi]`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        let (s0, s1) = self.support();
        let (lo, hi) = (lo.max(s0), hi.min(s1));
        if hi <= lo {
            return 0.0;
        }
        match *self {
            Preset::Equilibrium { alpha } => EquilibriumProfile { alpha }.integral(lo, hi),
            Preset::ScaledEquilibrium { scale, alpha } => scale * EquilibriumProfile { alpha }.integral(lo, hi),
            Preset::Box { height, .. } => height * (hi - lo),
            Preset::Bump { center, width, height } => {
                let prim = |x: f64| {
                    let s = (x - center) / width;
                    width * (s - 2.0 * s.powi(3) / 3.0 + s.powi(5) / 5.0)
                };
                height * (prim(hi) - prim(lo))
            }
            Preset::BoseEinstein { mu, .. } => gauss4(lo, hi, |x| bose_einstein_density(x, mu)),
        }
    }
}

/// `x^2 / (e^{x+μ} - 1)`, continuous at `x = 0` for `μ = 0`.
pub fn bose_einstein_density(x: f64, mu: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    x * x / (x + mu).exp_m1()
}

/// Four-point Gauss-Legendre rule on `[a, b]`.
pub(crate) fn gauss4(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    const NODES: [f64; 4] = [
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_3,
        0.339_981_043_584_856_3,
        0.861_136_311_594_052_6,
    ];
    const WEIGHTS: [f64; 4] = [
        0.347_854_845_137_453_85,
        0.652_145_154_862_546_1,
        0.652_145_154_862_546_1,
        0.347_854_845_137_453_85,
    ];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    NODES
        .iter()
        .zip(WEIGHTS)
        .map(|(&node, w)| w * f(mid + half * node))
        .sum::<f64>()
        * half
}

/// Cell averages of `preset` on `grid`.
pub fn sample_initial(preset: &Preset, grid: &GridSpec) -> Result<CellField> {
    preset.validate()?;
    let (lo, hi) = preset.support();
    let tol = 1e-12 * grid.x_max().abs().max(1.0);
    if lo < grid.x_min() - tol || hi > grid.x_max() + tol {
        return Err(Error::Preset(format!(
            "{} is supported on [{lo}, {hi}], outside the grid [{}, {}]",
            preset.name(),
            grid.x_min(),
            grid.x_max()
        )));
    }
    let dx = grid.dx();
    let values = (0..grid.cells())
        .map(|i| {
            let a = grid.interface(i);
            preset.integral(a, a + dx) / dx
        })
        .collect();
    CellField::from_values(*grid, values)
}
