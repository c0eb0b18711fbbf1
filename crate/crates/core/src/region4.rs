//! Estimates for the passage through Region 4 (`x < h(s)`, `s > λ`), which
//! together give `s_max > 0.8`.
//!
//! The trajectory leaves `s = λ` at `x₃`, is steered below the barrier
//! `x = (1 − k) h(s)` until it reaches `s = s_γ` at `x_γ ≤ η`, and from
//! there a linear comparison system bounds `1 − s_max` by `α = α₁α₂α₃`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lvroot::{z_excess, ZIndex};
use crate::model::{Case, Params};

/// Hand-off prey level used throughout.
pub const S_GAMMA: f64 = 0.7;

/// Branch split of the piecewise `m`-estimates.
pub const M_SPLIT: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region4Config {
    pub k: f64,
    pub s_gamma: f64,
    pub kappa: f64,
    pub case: Case,
}

impl Region4Config {
    pub fn for_case(case: Case) -> Self {
        match case {
            Case::A => Self {
                k: 0.75,
                s_gamma: S_GAMMA,
                kappa: 0.4,
                case,
            },
            Case::B => Self {
                k: 2.0 / 3.0,
                s_gamma: S_GAMMA,
                kappa: 0.5,
                case,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaFactors {
    pub m: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha: f64,
    pub delta: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub x_gamma: f64,
}

/// `ln` of the base `e^{λ/s_γ} (s_γ + a)/(1 − s_γ) / (a + λ)` in η.
fn eta_base_ln(p: &Params, s_gamma: f64) -> f64 {
    p.lambda() / s_gamma + (s_gamma + p.a()).ln() - (1.0 - s_gamma).ln() - (p.a() + p.lambda()).ln()
}

/// `ln η` for a given `ln x₃`.
pub fn eta_ln(p: &Params, cfg: &Region4Config, ln_x3: f64) -> f64 {
    if p.m() == 0.0 {
        return ln_x3;
    }
    p.m() / cfg.k * eta_base_ln(p, cfg.s_gamma) + ln_x3
}

/// Upper estimate of `x_γ` given the exit level `x₃` from `s = λ`.
pub fn eta(p: &Params, cfg: &Region4Config, x3: f64) -> f64 {
    if p.m() == 0.0 {
        return x3;
    }
    eta_ln(p, cfg, x3.ln()).exp()
}

/// Simplified lower estimate `c₀ + m c` of the `x_max` lower bound.
pub fn x1_tilde(p: &Params, cfg: &Region4Config) -> f64 {
    let l = p.lambda();
    let term = |z: f64| {
        if l == 0.0 {
            z
        } else {
            z - l * (1.0 - l.ln() + z.ln())
        }
    };
    let (c0, c) = if p.m() < M_SPLIT {
        (0.25, term(0.5 * (1.0 - cfg.case.a_max())))
    } else {
        (p.h(0.8), term(0.8))
    };
    c0 + p.m() * c
}

/// `ln η̄` with the z-function `zi` (the estimate proper uses `Z2`).
pub fn eta_bar_ln_with(p: &Params, cfg: &Region4Config, zi: ZIndex) -> Result<f64> {
    let xt = x1_tilde(p, cfg);
    let hl = p.h_lambda();
    if !(xt > hl) {
        return Err(Error::Domain(format!(
            "x1_tilde = {xt} must exceed h(lambda) = {hl}"
        )));
    }
    let y = xt / hl;
    let z = z_excess(zi, y)?;
    Ok(eta_ln(p, cfg, z.ln_1p() + xt.ln() - y))
}

pub fn eta_bar_ln(p: &Params, cfg: &Region4Config) -> Result<f64> {
    eta_bar_ln_with(p, cfg, ZIndex::Z2)
}

/// Upper estimate of `η` built from `x̃₁`.
pub fn eta_bar(p: &Params, cfg: &Region4Config) -> Result<f64> {
    eta_bar_ln(p, cfg).map(f64::exp)
}

/// Parameter-free majorant of `η̄` over each case's box.
pub fn eta_hat(m: f64, case: Case) -> f64 {
    let (lo, hi) = match case {
        Case::A => (
            (0.324, 0.404, 1.099, -2.631),
            (0.190, 0.681, -2.048, -1.789),
        ),
        Case::B => (
            (0.350, 0.563, 1.113, -2.295),
            (0.201, 0.832, -2.048, -1.652),
        ),
    };
    let (b0, b1, e1, e0) = if m <= M_SPLIT { lo } else { hi };
    (b0 + b1 * m) * (e1 * m + e0).exp()
}

/// `ln` of the closed-form upper estimate of `x₃` for each case.
pub fn x3_closed_form_ln(p: &Params, case: Case) -> f64 {
    let hl = p.h_lambda();
    let (coef, num) = match (case, p.m() <= M_SPLIT) {
        (Case::A, true) => (0.324, 0.25),
        (Case::A, false) => (0.383, 0.343),
        (Case::B, true) => (0.350, 0.25),
        (Case::B, false) => (0.428, 0.383),
    };
    f64::ln(coef) - num / hl
}

/// `ln B(s)`, the integrated comparison factor with `B(λ) = 1`.
pub fn barrier_b_ln(s: f64, p: &Params) -> Result<f64> {
    let (a, l) = (p.a(), p.lambda());
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!(
            "barrier B needs s in (0, 1), got {s}"
        )));
    }
    let k2 = l / a;
    let k3 = (1.0 - l) / (1.0 + a);
    Ok(k2 * ((s + a) / s).ln()
        + k2 * (l / (l + a)).ln()
        + k3 * ((1.0 - l) * (s + a) / (1.0 - s)).ln()
        - k3 * (l + a).ln())
}

pub fn barrier_b(s: f64, p: &Params) -> Result<f64> {
    barrier_b_ln(s, p).map(f64::exp)
}

/// `G*(s) = 2(k/m)s² + (ak/m − k/m + 1)s − λ`, whose sign gives the
/// monotonicity of `F^{m/k}/h`.
pub fn g_star(s: f64, p: &Params, k: f64) -> Result<f64> {
    if p.m() == 0.0 {
        return Err(Error::Domain("G* is undefined for m = 0".into()));
    }
    let r = k / p.m();
    Ok(2.0 * r * s * s + (p.a() * r - r + 1.0) * s - p.lambda())
}

/// Lower bound on `s₄` from the linear comparison system started at
/// `(x_γ, s_γ)`, valid for `0 < M ≤ s_γ` and `x_γ < M(1 − s_γ)`.
pub fn step2_smax_lower(x_gamma: f64, s_gamma: f64, big_m: f64, m: f64) -> Result<f64> {
    if !(big_m > 0.0 && big_m <= s_gamma && s_gamma < 1.0) {
        return Err(Error::Domain(format!(
            "need 0 < M <= s_gamma < 1, got M = {big_m}, s_gamma = {s_gamma}"
        )));
    }
    if !(m > 0.0) || !(x_gamma > 0.0) {
        return Err(Error::Domain(format!(
            "need m > 0 and x_gamma > 0, got m = {m}, x_gamma = {x_gamma}"
        )));
    }
    let d = s_gamma + x_gamma / (m + big_m) - 1.0;
    if !(x_gamma < big_m * (1.0 - s_gamma)) || d >= 0.0 {
        return Err(Error::Domain(format!(
            "x_gamma = {x_gamma} must be below M(1 - s_gamma) = {}",
            big_m * (1.0 - s_gamma)
        )));
    }
    let ln_one_minus = (m * (-d).ln() + big_m * x_gamma.ln() + m * (m + big_m).ln()
        - big_m * big_m.ln()
        - m * m.ln())
        / (big_m + m);
    Ok(-ln_one_minus.exp_m1())
}

/// The factors of `α` with `x_γ = η̂(m)` and `M = s_γ`.
pub fn alpha_factors(m: f64, cfg: &Region4Config) -> Result<AlphaFactors> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Domain(format!("alpha factors need m > 0, got {m}")));
    }
    let big_m = cfg.s_gamma;
    let x_gamma = eta_hat(m, cfg.case);
    let delta = 1.0 - cfg.s_gamma - x_gamma / (m + big_m);
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta = {delta} must be positive")));
    }
    let w = m + big_m;
    let alpha1 = (m / w * delta.ln()).exp();
    let alpha2 = (big_m / w * (x_gamma / big_m).ln()).exp();
    let alpha3 = (m / w * (w / m).ln()).exp();
    Ok(AlphaFactors {
        m,
        alpha1,
        alpha2,
        alpha3,
        alpha: alpha1 * alpha2 * alpha3,
        delta,
        big_m,
        x_gamma,
    })
}

/// `(ā, b̄, c̄)` with `η̂(m) = (ām + b̄)e^{−c̄m}` on the `m > 0.3` branch.
fn toppen_coefficients(case: Case) -> (f64, f64, f64) {
    match case {
        Case::A => (0.681 * (-1.789f64).exp(), 0.190 * (-1.789f64).exp(), 2.048),
        Case::B => (0.832 * (-1.652f64).exp(), 0.201 * (-1.652f64).exp(), 2.048),
    }
}

/// `∂(ln α₂)/∂m · (m + M)²/M` for `m > 0.3`; its root is where `α₂` peaks.
pub fn toppen_u(m: f64, case: Case) -> f64 {
    let (a, b, c) = toppen_coefficients(case);
    let big_m = S_GAMMA;
    let lin = a * m + b;
    (m + big_m) * (a - b * c - a * c * m) / lin + c * m - lin.ln() + big_m.ln()
}

/// Root of [`toppen_u`] on `m > 0.3`.
pub fn find_m1(case: Case) -> Result<f64> {
    let (mut lo, mut hi) = (M_SPLIT, 100.0);
    let (ulo, uhi) = (toppen_u(lo, case), toppen_u(hi, case));
    if !(ulo > 0.0 && uhi < 0.0) {
        return Err(Error::Domain(format!(
            "no sign change of u on (0.3, 100): u(0.3) = {ulo}, u(100) = {uhi}"
        )));
    }
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if toppen_u(mid, case) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Slack in the two side conditions of the monotonicity argument for `η̄`:
/// `κ x̃₁ − (a + λ)` and `(1 − κ) k ln(s₀/λ) − 1`, with `s₀` tied to the
/// `m`-branch of `x̃₁`.
pub fn lemma19_hypotheses(p: &Params, cfg: &Region4Config) -> (f64, f64) {
    let s0 = if p.m() < M_SPLIT {
        0.5 * (1.0 - cfg.case.a_max())
    } else {
        0.8
    };
    (
        cfg.kappa * x1_tilde(p, cfg) - (p.a() + p.lambda()),
        (1.0 - cfg.kappa) * cfg.k * (s0 / p.lambda()).ln() - 1.0,
    )
}
