//! The model flux `F(x, n) = (2x - x^2) n - n^2`, its extension to the whole
//! line, the stationary family and the closed-form bounds built on top of it.

use crate::error::{domain, Result};

/// Largest photon number of any stationary profile, `N(0) = 4/3`.
pub const MAX_EQUILIBRIUM_NUMBER: f64 = 4.0 / 3.0;

/// Interior coefficient `g(x) = 2x - x^2`.
#[inline]
pub fn g(x: f64) -> f64 {
    x * (2.0 - x)
}

#[inline]
pub fn g_prime(x: f64) -> f64 {
    2.0 - 2.0 * x
}

/// Flux with coefficient `g` already evaluated: `g n - n^2`.
#[inline]
pub fn flux_with(g: f64, n: f64) -> f64 {
    n * (g - n)
}

/// Model flux on the half-line.
pub fn flux(x: f64, n: f64) -> Result<f64> {
    if !x.is_finite() || !n.is_finite() {
        return domain(format!("flux needs finite inputs, got x = {x}, n = {n}"));
    }
    if x < 0.0 {
        return domain(format!("flux is defined for x >= 0, got {x}"));
    }
    Ok(flux_with(g(x), n))
}

/// Characteristic speed `dF/dn = g(x) - 2n`.
#[inline]
pub fn wave_speed(x: f64, n: f64) -> f64 {
    g(x) - 2.0 * n
}

/// Right-hand side of the characteristic system `(dx/dt, dn/dt)`.
#[inline]
pub fn characteristic_rhs(x: f64, n: f64) -> (f64, f64) {
    (g(x) - 2.0 * n, 2.0 * x * n - 2.0 * n)
}

/// Flux on the half-line `[0, R]` together with a C¹ extension of the
/// coefficient to the whole real line.
///
/// The extension is pinned to `2R - R^2 - 1` on `[R + w, ∞)` and to `-1` on
/// `(-∞, -w']` with `w = min(blend_width, R)` and `w' = min(blend_width, 1)`.
/// The gaps are bridged by cubic Hermite pieces matching values and slopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxModel {
    support_radius: f64,
    blend_width: f64,
}

impl FluxModel {
    pub const DEFAULT_BLEND_WIDTH: f64 = 1.0;

    pub fn new(support_radius: f64) -> Result<Self> {
        Self::with_blend(support_radius, Self::DEFAULT_BLEND_WIDTH)
    }

    pub fn with_blend(support_radius: f64, blend_width: f64) -> Result<Self> {
        if !(support_radius >= 2.0) || !support_radius.is_finite() {
            return domain(format!("support radius must be finite and >= 2, got {support_radius}"));
        }
        if !(blend_width > 0.0) || !blend_width.is_finite() {
            return domain(format!("blend width must be positive, got {blend_width}"));
        }
        Ok(Self {
            support_radius,
            blend_width,
        })
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn blend_width(&self) -> f64 {
        self.blend_width
    }

    fn right_blend(&self) -> (f64, f64) {
        let r = self.support_radius;
        (r, r + self.blend_width.min(r))
    }

    fn left_blend(&self) -> (f64, f64) {
        (-self.blend_width.min(1.0), 0.0)
    }

    fn right_value(&self) -> f64 {
        let r = self.support_radius;
        2.0 * r - r * r - 1.0
    }

    /// Extended coefficient `ḡ(x)`.
    pub fn extended_g(&self, x: f64) -> f64 {
        let (l0, l1) = self.left_blend();
        let (r0, r1) = self.right_blend();
        if x <= l0 {
            -1.0
        } else if x < l1 {
            hermite(x, l0, l1, -1.0, 0.0, 0.0, g_prime(0.0)).0
        } else if x <= r0 {
            g(x)
        } else if x < r1 {
            hermite(x, r0, r1, g(r0), self.right_value(), g_prime(r0), 0.0).0
        } else {
            self.right_value()
        }
    }

    /// Derivative of [`Self::extended_g`].
    pub fn extended_g_prime(&self, x: f64) -> f64 {
        let (l0, l1) = self.left_blend();
        let (r0, r1) = self.right_blend();
        if x <= l0 {
            0.0
        } else if x < l1 {
            hermite(x, l0, l1, -1.0, 0.0, 0.0, g_prime(0.0)).1
        } else if x <= r0 {
            g_prime(x)
        } else if x < r1 {
            hermite(x, r0, r1, g(r0), self.right_value(), g_prime(r0), 0.0).1
        } else {
            0.0
        }
    }

    pub fn extended_flux(&self, x: f64, n: f64) -> f64 {
        flux_with(self.extended_g(x), n)
    }

    pub fn extended_wave_speed(&self, x: f64, n: f64) -> f64 {
        self.extended_g(x) - 2.0 * n
    }

    /// `2 sup |ḡ'|` over `[-1, 2R]`, sampled on a fine grid.
    pub fn c_prime(&self) -> f64 {
        const SAMPLES: usize = 200_000;
        let (a, b) = (-1.0, 2.0 * self.support_radius);
        let h = (b - a) / SAMPLES as f64;
        let sup = (0..=SAMPLES)
            .map(|i| self.extended_g_prime(a + i as f64 * h).abs())
            .fold(0.0, f64::max);
        2.0 * sup
    }
}

/// Cubic Hermite interpolant on `[x0, x1]`, returning value and derivative.
fn hermite(x: f64, x0: f64, x1: f64, y0: f64, y1: f64, m0: f64, m1: f64) -> (f64, f64) {
    let w = x1 - x0;
    let t = (x - x0) / w;
    let t2 = t * t;
    let t3 = t2 * t;
    let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * w * m0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * w * m1;
    let slope = (6.0 * t2 - 6.0 * t) * (y0 - y1) / w
        + (3.0 * t2 - 4.0 * t + 1.0) * m0
        + (3.0 * t2 - 2.0 * t) * m1;
    (value, slope)
}

/// Member `n̂_α` of the stationary family: `2x - x^2` on `(α, 2)`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumProfile {
    pub(crate) alpha: f64,
}

impl EquilibriumProfile {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha })
    }

    pub fn maximal() -> Self {
        Self { alpha: 0.0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn value(&self, x: f64) -> f64 {
        if x > self.alpha && x < 2.0 {
            g(x)
        } else {
            0.0
        }
    }

    pub fn number(&self) -> f64 {
        number_unchecked(self.alpha)
    }

    /// Exact integral of the profile over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let lo = a.max(self.alpha);
        let hi = b.min(2.0);
        if hi <= lo {
            return 0.0;
        }
        antiderivative(hi) - antiderivative(lo)
    }

    pub fn cell_average(&self, a: f64, b: f64) -> f64 {
        self.integral(a, b) / (b - a)
    }
}

/// Antiderivative of `2x - x^2`.
#[inline]
pub(crate) fn antiderivative(x: f64) -> f64 {
    x * x - x * x * x / 3.0
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=2.0).contains(&alpha) {
        return domain(format!("alpha must lie in [0, 2], got {alpha}"));
    }
    Ok(())
}

fn number_unchecked(alpha: f64) -> f64 {
    // factored form of 4/3 - α^2 + α^3/3; keeps the double root at α = 2 resolvable
    (alpha - 2.0).powi(2) * (alpha + 1.0) / 3.0
}

pub fn equilibrium_value(alpha: f64, x: f64) -> Result<f64> {
    Ok(EquilibriumProfile::new(alpha)?.value(x))
}

/// Photon number of `n̂_α`, `4/3 - α^2 + α^3/3`.
pub fn equilibrium_number(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(number_unchecked(alpha))
}

/// Inverse of [`equilibrium_number`] by bisection.
pub fn alpha_from_number(number: f64) -> Result<f64> {
    if !(0.0..=MAX_EQUILIBRIUM_NUMBER).contains(&number) {
        return domain(format!("photon number must lie in [0, 4/3], got {number}"));
    }
    let (mut lo, mut hi) = (0.0_f64, 2.0_f64);
    // N(alpha) is strictly decreasing; 50 halvings of [0, 2] reach 2e-15.
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if number_unchecked(mid) > number {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Explicit super-solution `½(g + sqrt(g^2 + 4 K_M(t) G(x)))` with
/// `K_M(t) = (3t + 1/M)^-2` and `G(x) = (3R - x)^2`.
///
/// `cap = f64::INFINITY` gives `K(t) = (3t)^-2`; `t = f64::INFINITY` gives
/// the limit `g₊`.
pub fn supersolution(t: f64, x: f64, radius: f64, cap: f64) -> Result<f64> {
    if t.is_nan() || x.is_nan() || radius.is_nan() || cap.is_nan() {
        return domain("supersolution inputs must not be NaN");
    }
    if !(cap > 0.0) {
        return domain(format!("cap M must be positive, got {cap}"));
    }
    if !(0.0..=radius).contains(&x) {
        return domain(format!("x = {x} lies outside [0, R = {radius}]"));
    }
    let denom = 3.0 * t + 1.0 / cap;
    if !(denom > 0.0) {
        return domain(format!(
            "K_M degenerates at t = {t} with M = {cap}; the bound is infinite"
        ));
    }
    let k = 1.0 / (denom * denom);
    let gx = g(x);
    let big_g = (3.0 * radius - x).powi(2);
    Ok(0.5 * (gx + (gx * gx + 4.0 * k * big_g).sqrt()))
}

/// Lower bound on forward difference quotients at time `t`.
///
/// Returns `-∞` when `t` is so small that the bound is unbounded in floating
/// point.
pub fn slope_bound(t: f64, c_prime: f64) -> Result<f64> {
    if !(t > 0.0) {
        return domain(format!("slope bound needs t > 0, got {t}"));
    }
    if !(c_prime >= 0.0) || !c_prime.is_finite() {
        return domain(format!("C' must be finite and non-negative, got {c_prime}"));
    }
    let root = (1.0 + c_prime * c_prime).sqrt();
    let gap = -(-t * root).exp_m1();
    if gap == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(-c_prime / 4.0 - root / (2.0 * gap))
}

/// Solution of `s' = 2s - s^2`, `s(0) = R`: the right edge of the support.
pub fn support_curve(t: f64, radius: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("support curve needs t >= 0, got {t}"));
    }
    if !(radius >= 2.0) {
        return domain(format!("support radius must be >= 2, got {radius}"));
    }
    let ratio = (2.0 - radius) / radius;
    Ok(2.0 / (1.0 + ratio * (-2.0 * t).exp()))
}
