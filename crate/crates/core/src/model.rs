//! The nondimensional Rosenzweig–MacArthur system
//!
//! ```text
//! ds/dτ = (h(s) − x) s,   dx/dτ = m (s − λ) x,   h(s) = (1 − s)(s + a)
//! ```
//!
//! together with parameter handling, region classification and the
//! logarithmic reformulation used for integration.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Which branch of the small-parameter assumption a parameter pair falls in.
///
/// `A` is `a ≤ 1/20, λ ≤ 1/20`; `B` is `a ≤ 1/10, λ ≤ 1/100`. When both hold
/// `A` is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    A,
    B,
}

impl Case {
    /// Largest `a` admitted by this branch.
    pub fn a_max(self) -> f64 {
        match self {
            Case::A => 1.0 / 20.0,
            Case::B => 1.0 / 10.0,
        }
    }

    /// Largest `λ` admitted by this branch.
    pub fn lambda_max(self) -> f64 {
        match self {
            Case::A => 1.0 / 20.0,
            Case::B => 1.0 / 100.0,
        }
    }
}

impl std::str::FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Case::A),
            "B" | "b" => Ok(Case::B),
            other => Err(Error::InvalidParams(format!(
                "unknown case '{other}', expected A or B"
            ))),
        }
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Case::A => f.write_str("A"),
            Case::B => f.write_str("B"),
        }
    }
}

/// Nondimensional parameter triple `(a, λ, m)`.
///
/// Regular parameters have all three entries strictly positive. Limit-mode
/// parameters (built with [`Params::limit`]) additionally admit zeros so the
/// closed-form bounds can be evaluated at `m → 0` or `a, λ → 0`; the
/// simulator refuses them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    a: f64,
    lambda: f64,
    m: f64,
    #[serde(skip)]
    limit_mode: bool,
    #[serde(skip)]
    h_lambda: f64,
    #[serde(skip)]
    hopf_margin: f64,
    #[serde(skip)]
    star_star: bool,
}

impl Params {
    pub fn new(a: f64, lambda: f64, m: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("lambda", lambda), ("m", m)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(Self::build(a, lambda, m, false))
    }

    /// Parameters for evaluating closed forms in a limit (`m = 0`, `a = 0`
    /// or `λ = 0` allowed).
    pub fn limit(a: f64, lambda: f64, m: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("lambda", lambda), ("m", m)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(Self::build(a, lambda, m, true))
    }

    fn build(a: f64, lambda: f64, m: f64, limit_mode: bool) -> Self {
        let star_star =
            (a <= 1.0 / 20.0 && lambda <= 1.0 / 20.0) || (a <= 1.0 / 10.0 && lambda <= 1.0 / 100.0);
        Self {
            a,
            lambda,
            m,
            limit_mode,
            h_lambda: (1.0 - lambda) * (lambda + a),
            hopf_margin: 1.0 - 2.0 * lambda - a,
            star_star,
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn is_limit_mode(&self) -> bool {
        self.limit_mode
    }

    /// `h(λ)`, the prey-isocline height above the equilibrium.
    pub fn h_lambda(&self) -> f64 {
        self.h_lambda
    }

    /// `1 − 2λ − a`; positive exactly in the cycle regime.
    pub fn hopf_margin(&self) -> f64 {
        self.hopf_margin
    }

    pub fn in_cycle_regime(&self) -> bool {
        self.hopf_margin > 0.0
    }

    pub fn star_star(&self) -> bool {
        self.star_star
    }

    pub fn case(&self) -> Option<Case> {
        if self.a <= 1.0 / 20.0 && self.lambda <= 1.0 / 20.0 {
            Some(Case::A)
        } else if self.a <= 1.0 / 10.0 && self.lambda <= 1.0 / 100.0 {
            Some(Case::B)
        } else {
            None
        }
    }

    pub fn h(&self, s: f64) -> f64 {
        (1.0 - s) * (s + self.a)
    }

    pub(crate) fn require_cycle_regime(&self) -> Result<()> {
        if self.in_cycle_regime() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "2*lambda + a must be < 1 for a limit cycle, got {}",
                2.0 * self.lambda + self.a
            )))
        }
    }
}

/// Dimensional Rosenzweig–MacArthur rates and capacities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct RMParams {
    pub r: f64,
    pub K: f64,
    pub q: f64,
    pub H: f64,
    pub p: f64,
    pub d: f64,
}

/// Maps dimensional rates to `(a, λ, m)`. The predation rate `q` only
/// rescales `x` and does not appear in the result.
pub fn nondimensionalize(rm: &RMParams) -> Result<Params> {
    for (name, v) in [
        ("r", rm.r),
        ("K", rm.K),
        ("q", rm.q),
        ("H", rm.H),
        ("p", rm.p),
        ("d", rm.d),
    ] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "{name} must be finite and > 0, got {v}"
            )));
        }
    }
    if rm.p <= rm.d {
        return Err(Error::InvalidParams(format!(
            "conversion efficiency p = {} must exceed predator death rate d = {}",
            rm.p, rm.d
        )));
    }
    let growth = rm.p - rm.d;
    Params::new(rm.H / rm.K, rm.d * rm.H / (growth * rm.K), growth / rm.r)
}

/// Parses a JSON parameter record, either `{"a", "lambda", "m"}` or the
/// dimensional `{"r", "K", "q", "H", "p", "d"}`, detected by key set.
pub fn parse_param_record(json: &str) -> Result<Params> {
    let value: Value = serde_json::from_str(json)?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::InvalidParams("parameter record must be a JSON object".into()))?;
    let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    keys.sort_unstable();
    match keys.as_slice() {
        ["a", "lambda", "m"] => {
            #[derive(Deserialize)]
            struct Nondim {
                a: f64,
                lambda: f64,
                m: f64,
            }
            let n: Nondim = serde_json::from_value(value)?;
            Params::new(n.a, n.lambda, n.m)
        }
        ["H", "K", "d", "p", "q", "r"] => {
            let rm: RMParams = serde_json::from_value(value)?;
            nondimensionalize(&rm)
        }
        _ => Err(Error::InvalidParams(format!(
            "unrecognised parameter keys {keys:?}; expected {{a, lambda, m}} or {{r, K, q, H, p, d}}"
        ))),
    }
}

/// Phase point: predator `x`, prey `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub s: f64,
}

impl State {
    pub fn new(x: f64, s: f64) -> Result<Self> {
        if !(x.is_finite() && s.is_finite() && x > 0.0 && s > 0.0) {
            return Err(Error::InvalidState(format!(
                "state must be positive, got x = {x}, s = {s}"
            )));
        }
        Ok(Self { x, s })
    }
}

/// `(ln x, ln s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogState {
    pub u: f64,
    pub v: f64,
}

impl LogState {
    pub fn from_state(st: State) -> Self {
        Self {
            u: st.x.ln(),
            v: st.s.ln(),
        }
    }

    /// Exponential image. Underflows to zero for extreme logs, which is why
    /// consumers should stay in log form where they can.
    pub fn to_state(self) -> State {
        State {
            x: self.u.exp(),
            s: self.v.exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    R1,
    R2,
    R3,
    R4,
    OnIsoclineH,
    OnIsoclineLambda,
    Equilibrium,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::R1 => "R1",
            Region::R2 => "R2",
            Region::R3 => "R3",
            Region::R4 => "R4",
            Region::OnIsoclineH => "OnIsoclineH",
            Region::OnIsoclineLambda => "OnIsoclineLambda",
            Region::Equilibrium => "Equilibrium",
        }
    }
}

pub fn h(s: f64, p: &Params) -> f64 {
    p.h(s)
}

/// Returns `(dx/dτ, ds/dτ)`.
pub fn vector_field(st: State, p: &Params) -> (f64, f64) {
    let dx = p.m * (st.s - p.lambda) * st.x;
    let ds = (p.h(st.s) - st.x) * st.s;
    (dx, ds)
}

/// Push-forward of [`vector_field`] under `(x, s) ↦ (ln x, ln s)`:
/// `du/dτ = m(eᵛ − λ)`, `dv/dτ = h(eᵛ) − eᵘ`.
pub fn log_vector_field(ls: LogState, p: &Params) -> (f64, f64) {
    let s = ls.v.exp();
    // 1 - s computed as -expm1(v) keeps relative accuracy near s = 1
    let h = -ls.v.exp_m1() * (s + p.a);
    (p.m * (s - p.lambda), h - ls.u.exp())
}

/// `ds/dx` along trajectories.
pub fn phase_slope(st: State, p: &Params) -> Result<f64> {
    let denom = p.m * st.x * (st.s - p.lambda);
    if denom == 0.0 {
        return Err(Error::SingularSlope);
    }
    Ok((p.h(st.s) - st.x) * st.s / denom)
}

/// Exact-equality classification against the two isoclines.
pub fn classify_region(st: State, p: &Params) -> Region {
    classify_signs(st.x.partial_cmp(&p.h(st.s)), st.s.partial_cmp(&p.lambda))
}

/// Classification from log coordinates, comparing `ln x` with `ln h(s)`.
/// Stays meaningful when `x` or `1 − s` are below the f64 range of `x`, `s`.
pub fn classify_log_region(ls: LogState, p: &Params) -> Region {
    let one_minus_s = -ls.v.exp_m1();
    let ord_h = if one_minus_s <= 0.0 {
        // s >= 1: h(s) <= 0 < x
        Some(std::cmp::Ordering::Greater)
    } else {
        let ln_h = one_minus_s.ln() + (ls.v.exp() + p.a).ln();
        ls.u.partial_cmp(&ln_h)
    };
    classify_signs(ord_h, ls.v.partial_cmp(&p.lambda.ln()))
}

fn classify_signs(
    x_vs_h: Option<std::cmp::Ordering>,
    s_vs_lambda: Option<std::cmp::Ordering>,
) -> Region {
    use std::cmp::Ordering::*;
    match (x_vs_h.unwrap_or(Equal), s_vs_lambda.unwrap_or(Equal)) {
        (Equal, Equal) => Region::Equilibrium,
        (Equal, _) => Region::OnIsoclineH,
        (_, Equal) => Region::OnIsoclineLambda,
        (Greater, Greater) => Region::R1,
        (Greater, Less) => Region::R2,
        (Less, Less) => Region::R3,
        (Less, Greater) => Region::R4,
    }
}

pub fn equilibrium(p: &Params) -> State {
    State {
        x: (1.0 - p.lambda) * (p.lambda + p.a),
        s: p.lambda,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, l: f64, m: f64) -> Params {
        Params::new(a, l, m).unwrap()
    }

    #[test]
    fn h_values() {
        let q = p(0.1, 0.1, 1.0);
        assert!((h(0.0, &q) - 0.1).abs() < 1e-15);
        assert_eq!(h(1.0, &q), 0.0);
        assert!((h(0.45, &q) - 0.3025).abs() < 1e-15);
        assert!(h(1.5, &q) < 0.0);
    }

    #[test]
    fn params_flags() {
        let q = p(0.05, 0.05, 1.0);
        assert!(q.star_star() && q.in_cycle_regime());
        assert_eq!(q.case(), Some(Case::A));
        assert!((q.hopf_margin() - 0.85).abs() < 1e-15);
        assert!((q.h_lambda() - 0.095).abs() < 1e-15);
        assert_eq!(p(0.1, 0.01, 1.0).case(), Some(Case::B));
        assert!(!p(0.1, 0.1, 1.0).star_star());
        assert!(!p(0.5, 0.3, 1.0).in_cycle_regime());
        assert!(Params::new(0.1, 0.1, 0.0).is_err());
        assert!(Params::new(-0.1, 0.1, 1.0).is_err());
        assert!(Params::new(f64::NAN, 0.1, 1.0).is_err());
        let lim = Params::limit(0.1, 0.1, 0.0).unwrap();
        assert!(lim.is_limit_mode() && lim.m() == 0.0);
    }

    #[test]
    fn vector_field_examples() {
        let q = p(0.1, 0.1, 1.0);
        let eq = equilibrium(&q);
        assert_eq!(vector_field(eq, &q), (0.0, 0.0));
        let (dx, ds) = vector_field(State::new(0.5, 0.5).unwrap(), &q);
        assert!((dx - 0.2).abs() < 1e-15);
        assert!((ds + 0.1).abs() < 1e-15);
        let on_h = State::new(q.h(0.7), 0.7).unwrap();
        let (dx, ds) = vector_field(on_h, &q);
        assert_eq!(ds, 0.0);
        assert!((dx - 0.6 * on_h.x).abs() < 1e-15);
    }

    #[test]
    fn log_field_at_equilibrium_and_isocline() {
        let q = p(0.05, 0.05, 2.0);
        let ls = LogState::from_state(equilibrium(&q));
        let (du, dv) = log_vector_field(ls, &q);
        assert!(du.abs() < 1e-15 && dv.abs() < 1e-15);
        let (du, _) = log_vector_field(
            LogState {
                u: -3.0,
                v: q.lambda().ln(),
            },
            &q,
        );
        assert!(du.abs() < 1e-16);
    }

    #[test]
    fn phase_slope_examples() {
        let q = p(0.1, 0.1, 1.0);
        let v = phase_slope(State::new(0.5, 0.5).unwrap(), &q).unwrap();
        assert!((v + 0.5).abs() < 1e-15);
        assert_eq!(
            phase_slope(State::new(q.h(0.3), 0.3).unwrap(), &q).unwrap(),
            0.0
        );
        assert!(matches!(
            phase_slope(State::new(0.3, 0.1).unwrap(), &q),
            Err(Error::SingularSlope)
        ));
    }

    #[test]
    fn regions() {
        let q = p(0.1, 0.1, 1.0);
        assert_eq!(classify_region(State { x: 1.0, s: 0.5 }, &q), Region::R1);
        assert_eq!(classify_region(State { x: 0.01, s: 0.05 }, &q), Region::R3);
        assert_eq!(classify_region(State { x: 0.5, s: 0.05 }, &q), Region::R2);
        assert_eq!(classify_region(State { x: 0.01, s: 0.5 }, &q), Region::R4);
        assert_eq!(classify_region(equilibrium(&q), &q), Region::Equilibrium);
        assert_eq!(
            classify_region(State { x: 0.3, s: 0.1 }, &q),
            Region::OnIsoclineLambda
        );
        // near the saddle, f64 s rounds to 1 but the log form still sees Region 4
        let ls = LogState {
            u: -200.0,
            v: -1e-80,
        };
        assert_eq!(classify_log_region(ls, &q), Region::R4);
        assert_eq!(classify_region(ls.to_state(), &q), Region::R1);
    }

    #[test]
    fn equilibrium_values() {
        let e = equilibrium(&p(0.1, 0.1, 1.0));
        assert!((e.x - 0.18).abs() < 1e-15 && e.s == 0.1);
        let e = equilibrium(&p(0.05, 0.05, 1.0));
        assert!((e.x - 0.095).abs() < 1e-15);
        assert!(Params::new(0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn nondimensional_transform() {
        let q = nondimensionalize(&RMParams {
            r: 1.0,
            K: 10.0,
            q: 3.0,
            H: 1.0,
            p: 2.0,
            d: 1.0,
        })
        .unwrap();
        assert!((q.a() - 0.1).abs() < 1e-15);
        assert!((q.m() - 1.0).abs() < 1e-15);
        assert!((q.lambda() - 0.1).abs() < 1e-15);
        let q = nondimensionalize(&RMParams {
            r: 0.7,
            K: 4.0,
            q: 1.0,
            H: 4.0,
            p: 1.5,
            d: 0.8,
        })
        .unwrap();
        assert!((q.a() - 1.0).abs() < 1e-15 && (q.m() - 1.0).abs() < 1e-15);
        assert!(nondimensionalize(&RMParams {
            r: 1.0,
            K: 1.0,
            q: 1.0,
            H: 1.0,
            p: 1.0,
            d: 1.0
        })
        .is_err());
    }

    #[test]
    fn param_records() {
        let q = parse_param_record(r#"{"a": 0.05, "lambda": 0.02, "m": 3}"#).unwrap();
        assert_eq!((q.a(), q.lambda(), q.m()), (0.05, 0.02, 3.0));
        let q = parse_param_record(r#"{"r":1,"K":10,"q":2,"H":1,"p":2,"d":1}"#).unwrap();
        assert!((q.lambda() - 0.1).abs() < 1e-15);
        assert!(parse_param_record(r#"{"a": 0.05, "m": 3}"#).is_err());
        assert!(parse_param_record("[1,2]").is_err());
        let json = serde_json::to_string(&q).unwrap();
        assert!(json.contains("\"lambda\"") && !json.contains("limit_mode"));
    }
}
