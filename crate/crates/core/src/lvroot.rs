//! Small roots of Lotka–Volterra first integrals `x − A ln x = C` and the
//! rational-radical approximations `z₀, z₁, z₂` to the root of
//! `ln z = y e^{−y} z`.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZIndex {
    Z0,
    Z1,
    Z2,
}

impl ZIndex {
    pub fn c(self) -> f64 {
        match self {
            ZIndex::Z0 => 0.0,
            ZIndex::Z1 => (E - 2.0) / (E - 1.0),
            ZIndex::Z2 => 1.0 / E,
        }
    }

    pub fn d(self) -> f64 {
        E - 1.0 - self.c() * E
    }
}

/// `Y = y e^{−y}`, computed through logs so that it degrades gracefully to 0.
fn big_y(y: f64) -> f64 {
    (y.ln() - y).exp()
}

fn check_y(y: f64) -> Result<()> {
    if !(y >= 1.0) {
        return Err(Error::Domain(format!("z-functions need y >= 1, got {y}")));
    }
    Ok(())
}

/// Below this `Y` the excesses `z − 1` are taken from their power series,
/// which keeps the ordering `z₁ ≤ z ≤ z₂` intact under rounding.
const SERIES_Y: f64 = 1e-9;

/// `zᵢ(y) − 1`, accurate even when `zᵢ` rounds to 1.
pub fn z_excess(i: ZIndex, y: f64) -> Result<f64> {
    check_y(y)?;
    if y.is_infinite() {
        return Ok(0.0);
    }
    let yy = big_y(y);
    let (c, d) = (i.c(), i.d());
    if yy < SERIES_Y {
        // ε = qY + rYε + cYε² with q = c + d, r = 2c + d
        let (q, r) = (c + d, 2.0 * c + d);
        return Ok(q * yy + yy * yy * (r * q + (r * r * q + c * q * q) * yy));
    }
    let p = 1.0 - d * yy;
    if c == 0.0 {
        return Ok(d * yy / p);
    }
    let q = (4.0 * c * yy / (p * p)).min(1.0);
    let r = (1.0 - q).sqrt();
    Ok((2.0 * d * yy + (4.0 * c * yy / p) / (1.0 + r)) / (p * (1.0 + r)))
}

/// `zᵢ(y)`, the closed-form bracket for the root of `ln z = y e^{−y} z`.
/// Defined for `y ≥ 1`, decreasing from `e` towards 1.
pub fn z(i: ZIndex, y: f64) -> Result<f64> {
    z_excess(i, y).map(|e| 1.0 + e)
}

/// Root of a convex function decreasing on `[lo, hi]`, with `f(lo) > 0 ≥ f(hi)`.
/// Newton from the left end converges monotonically; bisection guards
/// against slow progress near a double root.
fn convex_decreasing_root(f: impl Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64) -> f64 {
    let mut t = lo;
    for _ in 0..400 {
        let (g, dg) = f(t);
        if g <= 0.0 {
            hi = t;
            if g == 0.0 {
                return t;
            }
        } else {
            lo = t;
        }
        let mut next = if dg < 0.0 { t - g / dg } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-16 * t.abs().max(1.0) || hi - lo <= 1e-16 * hi.abs().max(1.0) {
            return next;
        }
        t = next;
    }
    t
}

/// `ln x` for the root `x ∈ (0, A]` of `x − A ln x = C`.
///
/// Works in `t = ln x`, so roots far below the f64 range (for example
/// `x ≈ e^{−1000}`) are still returned accurately.
pub fn lv_small_root_ln(a: f64, c: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) || !c.is_finite() {
        return Err(Error::Domain(format!(
            "lv_small_root needs A > 0 and finite C, got A = {a}, C = {c}"
        )));
    }
    let ln_a = a.ln();
    let min = a - a * ln_a;
    let gap = c - min;
    if gap < -1e-15 * min.abs().max(1.0) {
        return Err(Error::NoRoot { a, c, min });
    }
    if gap <= 0.0 {
        return Ok(ln_a);
    }
    let lo = -c / a;
    Ok(convex_decreasing_root(
        |t| {
            let et = t.exp();
            (et - a * t - c, et - a)
        },
        lo,
        ln_a,
    ))
}

/// Root `x ∈ (0, A]` of `x − A ln x = C`.
pub fn lv_small_root(a: f64, c: f64) -> Result<f64> {
    lv_small_root_ln(a, c).map(f64::exp)
}

/// `ln z` for the exact `z(y)`, the root in `(1, e]` of `ln z = y e^{−y} z`.
pub fn z_exact_ln(y: f64) -> Result<f64> {
    check_y(y)?;
    if y.is_infinite() {
        return Ok(0.0);
    }
    let yy = big_y(y);
    if yy * E >= 1.0 {
        return Ok(1.0);
    }
    if yy < SERIES_Y {
        return Ok(yy + yy * yy * (1.0 + 1.5 * yy));
    }
    // w = ln z solves w = Y eʷ
    Ok(convex_decreasing_root(
        |w| {
            let ew = yy * w.exp();
            (ew - w, ew - 1.0)
        },
        0.0,
        1.0,
    ))
}

/// Exact `z(y)`; equal to `lv_small_root(1, y − ln y) / (y e^{−y})`.
pub fn z_exact(y: f64) -> Result<f64> {
    z_exact_excess(y).map(|e| 1.0 + e)
}

/// `z(y) − 1`.
pub fn z_exact_excess(y: f64) -> Result<f64> {
    check_y(y)?;
    let yy = if y.is_infinite() { 0.0 } else { big_y(y) };
    if yy < SERIES_Y {
        // z − 1 = w/Y − 1 = Σ n^{n−1} Yⁿ⁻¹ / n! − 1
        return Ok(yy + yy * yy * (1.5 + 8.0 / 3.0 * yy));
    }
    z_exact_ln(y).map(f64::exp_m1)
}
