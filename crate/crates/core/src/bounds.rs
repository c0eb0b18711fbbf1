//! Closed-form bounds on the limit cycle: the maximal predator density
//! `x_max`, the minimal predator density `x_min`, the minimal prey density
//! `s_min` and the maximal prey density `s_max`, plus the small-`m`
//! (canard) approximations.
//!
//! Lower bounds on minima are tiny (often far below `1e-300`), so all
//! `x_min` and `s_min` quantities are carried as natural logarithms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lvroot::{z_excess, ZIndex};
use crate::model::Params;

/// Default anchor for the lower bound of `x_max`.
pub const DEFAULT_S0: f64 = 0.8;

/// Bound intervals for one parameter triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub a: f64,
    pub lambda: f64,
    pub m: f64,
    pub x_max_lo: f64,
    pub x_max_hi: f64,
    pub ln_x_min_lo: f64,
    pub ln_x_min_hi: f64,
    pub ln_s_min_lo: f64,
    pub ln_s_min_hi: f64,
    pub s_max_lo: f64,
    pub s_max_hi: f64,
    pub s0: f64,
    /// False when the parameters lie outside the small-parameter
    /// assumption and the intervals were evaluated on request only.
    pub proven: bool,
}

impl BoundSet {
    /// The four `(lo, hi)` pairs in the order x_max, ln x_min, ln s_min, s_max.
    pub fn intervals(&self) -> [(f64, f64); 4] {
        [
            (self.x_max_lo, self.x_max_hi),
            (self.ln_x_min_lo, self.ln_x_min_hi),
            (self.ln_s_min_lo, self.ln_s_min_hi),
            (self.s_max_lo, self.s_max_hi),
        ]
    }

    pub fn is_ordered(&self) -> bool {
        self.intervals().iter().all(|(lo, hi)| lo < hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanardEstimates {
    pub x_max_c: f64,
    pub x_min_c: f64,
    pub ln_x_min_c: f64,
    pub s_max_c: f64,
    pub ln_s_min_c: f64,
}

/// Log-space bounds along the trajectory through `(u, λ*)`: `s_u`, where it
/// reaches `x = h(s)`, and `v`, the predator level when it returns to `s = λ*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TStarBounds {
    pub ln_s_lo: f64,
    pub ln_s_hi: f64,
    pub ln_v_lo: f64,
    pub ln_v_hi: f64,
}

/// `λ (1 − ln λ + ln z)`, extended by continuity to `λ = 0`.
fn lambda_log_term(lambda: f64, z: f64) -> f64 {
    if lambda == 0.0 {
        0.0
    } else {
        lambda * (1.0 - lambda.ln() + z.ln())
    }
}

/// Upper bound on `x` where the cycle crosses `s = λ` descending.
pub fn x1_upper(p: &Params) -> f64 {
    let (a, l, m) = (p.a(), p.lambda(), p.m());
    (1.0 + m + a - m * l) * (1.0 + 2.0 * m + a - 2.0 * m * l) / (2.0 * (m + 1.0) + a - m * l)
}

/// Sharper variant of [`x1_upper`].
pub fn x1_upper_refined(p: &Params) -> f64 {
    let (a, l, m) = (p.a(), p.lambda(), p.m());
    let ll = 1.0 - l;
    (1.0 + a + 2.0 * m * ll) * (1.0 + a + m * ll) * ll / (1.0 + a + (1.0 + 2.0 * m + m * l) * ll)
}

/// `1 + a + m(1 − λ)`.
pub fn x1_upper_linear(p: &Params) -> f64 {
    1.0 + p.a() + p.m() * (1.0 - p.lambda())
}

fn x1_lower_objective(p: &Params, z: f64) -> f64 {
    p.h(z) + p.m() * (z - lambda_log_term(p.lambda(), z))
}

/// Lower bound on `x_max`: the maximum over `z ∈ [(1−a)/2, s0]` of
/// `h(z) + m(z − λ(1 − ln λ + ln z))`.
pub fn x1_lower(p: &Params, s0: f64) -> Result<f64> {
    let lo = 0.5 * (1.0 - p.a());
    if !(s0 >= lo && s0 < 1.0) {
        return Err(Error::Domain(format!(
            "s0 must lie in [(1-a)/2, 1) = [{lo}, 1), got {s0}"
        )));
    }
    // stationary points solve -2z² + (1 - a + m) z - mλ = 0; the larger is the local max
    let b = 1.0 - p.a() + p.m();
    let disc = b * b - 8.0 * p.m() * p.lambda();
    let mut best = x1_lower_objective(p, lo).max(x1_lower_objective(p, s0));
    if disc >= 0.0 {
        let z_plus = (b + disc.sqrt()) / 4.0;
        best = best.max(x1_lower_objective(p, z_plus.clamp(lo, s0)));
    }
    Ok(best)
}

/// Bounds for the trajectory entering `s < λ*` at `x = u`. See [`TStarBounds`].
pub fn tstar_bounds(u: f64, lambda_star: f64, p: &Params) -> Result<TStarBounds> {
    if !(lambda_star > 0.0 && lambda_star <= p.lambda()) {
        return Err(Error::Domain(format!(
            "lambda* must lie in (0, lambda] = (0, {}], got {lambda_star}",
            p.lambda()
        )));
    }
    let a = p.a();
    let h_star = p.h(lambda_star);
    if !(u > h_star) || !(u > a) {
        return Err(Error::Domain(format!(
            "u = {u} must exceed h(lambda*) = {h_star}"
        )));
    }
    let ml = p.m() * lambda_star;
    let ln_ls = lambda_star.ln();
    let ln_ua = (u / a).ln();
    let ln_s_lo = ln_ls - (u - a - a * ln_ua) / ml - 1.0;
    let ln_s_hi = ln_ls - (u - a - h_star * ln_ua) / ml;
    let z1 = z_excess(ZIndex::Z1, u / a)?;
    let z2 = z_excess(ZIndex::Z2, u / h_star)?;
    let ln_v_lo = z1.ln_1p() + u.ln() - u / a;
    let ln_v_hi = z2.ln_1p() + u.ln() - u / h_star;
    Ok(TStarBounds {
        ln_s_lo,
        ln_s_hi,
        ln_v_lo,
        ln_v_hi,
    })
}

fn require_star_star(p: &Params) -> Result<()> {
    if p.star_star() {
        Ok(())
    } else {
        Err(Error::NotStarStar {
            a: p.a(),
            lambda: p.lambda(),
        })
    }
}

fn statement_pair(p: &Params, s0: f64) -> Result<(TStarBounds, TStarBounds)> {
    let hi = tstar_bounds(x1_upper(p), p.lambda(), p)?;
    let lo = tstar_bounds(x1_lower(p, s0)?, p.lambda(), p)?;
    Ok((hi, lo))
}

/// `(lower, upper)` for `ln s_min`.
pub fn statement2_bounds(p: &Params, s0: f64) -> Result<(f64, f64)> {
    require_star_star(p)?;
    let (from_hi, from_lo) = statement_pair(p, s0)?;
    Ok((from_hi.ln_s_lo, from_lo.ln_s_hi))
}

/// `(lower, upper)` for `ln x_min`.
pub fn statement3_bounds(p: &Params, s0: f64) -> Result<(f64, f64)> {
    require_star_star(p)?;
    let (from_hi, from_lo) = statement_pair(p, s0)?;
    Ok((from_hi.ln_v_lo, from_lo.ln_v_hi))
}

/// All bounds with `s0 = 0.8`.
pub fn theorem_a(p: &Params, force: bool) -> Result<BoundSet> {
    theorem_a_with_s0(p, DEFAULT_S0, force)
}

/// All bounds for a chosen anchor `s0`. Outside the small-parameter
/// assumption the call fails unless `force` is set, in which case the
/// intervals are evaluated and marked unproven.
pub fn theorem_a_with_s0(p: &Params, s0: f64, force: bool) -> Result<BoundSet> {
    p.require_cycle_regime()?;
    if !force {
        require_star_star(p)?;
    }
    let x_hi = x1_upper(p);
    let x_lo = x1_lower(p, s0)?;
    let (from_hi, from_lo) = statement_pair(p, s0)?;
    Ok(BoundSet {
        a: p.a(),
        lambda: p.lambda(),
        m: p.m(),
        x_max_lo: x_lo,
        x_max_hi: x_hi,
        ln_x_min_lo: from_hi.ln_v_lo,
        ln_x_min_hi: from_lo.ln_v_hi,
        ln_s_min_lo: from_hi.ln_s_lo,
        ln_s_min_hi: from_lo.ln_s_hi,
        s_max_lo: 0.8,
        s_max_hi: 1.0,
        s0,
        proven: p.star_star(),
    })
}

/// Small-`m` approximations of the four extremes.
pub fn canard(p: &Params) -> CanardEstimates {
    let a = p.a();
    let x_max_c = (1.0 + a) * (1.0 + a) / 4.0;
    let ln_x_min_c = x_max_c.ln() - x_max_c / a;
    let x_min_c = ln_x_min_c.exp();
    // right root of h(s) = x_min_c
    let half = 0.5 * (1.0 - a);
    let s_max_c = half + (half * half + a - x_min_c).max(0.0).sqrt();
    let v = a * x_max_c.ln() - x_max_c;
    let ml = p.m() * p.lambda();
    let num = v - a * (a.ln() - 1.0);
    let ln_s_min_c = if ml == 0.0 {
        f64::NEG_INFINITY
    } else {
        num / ml
    };
    CanardEstimates {
        x_max_c,
        x_min_c,
        ln_x_min_c,
        s_max_c,
        ln_s_min_c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(a: f64, l: f64, m: f64) -> Params {
        Params::new(a, l, m).unwrap()
    }

    fn grid() -> Vec<Params> {
        let mut v = Vec::new();
        for a in [0.01, 0.02, 0.05] {
            for l in [0.01, 0.02, 0.05] {
                for m in [0.01, 0.1, 0.3, 1.0, 2.0, 5.0] {
                    v.push(p(a, l, m));
                }
            }
        }
        for m in [0.3, 1.0, 3.0] {
            v.push(p(0.1, 0.01, m));
        }
        v
    }

    #[test]
    fn x1_upper_examples() {
        assert!((x1_upper(&Params::limit(0.0, 0.0, 1.0).unwrap()) - 1.5).abs() < 1e-15);
        assert!((x1_upper(&p(0.1, 0.1, 1.0)) - 1.45).abs() < 1e-14);
        assert!((x1_upper(&p(0.05, 0.05, 1.0)) - 1.475).abs() < 1e-14);
    }

    #[test]
    fn refined_and_linear() {
        for m in [0.1, 1.0, 7.0] {
            let q = Params::limit(0.03, 0.0, m).unwrap();
            assert!((x1_upper_refined(&q) - x1_upper(&q)).abs() < 1e-14);
        }
        assert!(x1_upper_refined(&p(0.05, 0.05, 1.0)) < x1_upper(&p(0.05, 0.05, 1.0)));
        assert!(x1_upper_refined(&p(0.1, 0.1, 2.0)) < x1_upper(&p(0.1, 0.1, 2.0)));
        assert!((x1_upper_linear(&Params::limit(0.0, 0.0, 1.0).unwrap()) - 2.0).abs() < 1e-15);
        assert!((x1_upper_linear(&p(0.1, 0.1, 1.0)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn x1_lower_examples() {
        let q = Params::limit(0.1, 0.05, 0.0).unwrap();
        assert!((x1_lower(&q, 0.8).unwrap() - 0.3025).abs() < 1e-15);
        let q = p(0.05, 0.05, 1.0);
        let v = x1_lower(&q, 0.8).unwrap();
        assert!((v - 0.78137).abs() < 1e-4, "{v}");
        let mut prev = 0.0;
        for k in 0..=30 {
            let s0 = 0.6 + 0.01 * k as f64;
            let v = x1_lower(&q, s0).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        assert!(x1_lower(&q, 0.2).is_err());
        assert!(x1_lower(&q, 1.0).is_err());
    }

    #[test]
    fn x1_lower_matches_grid_oracle() {
        for q in grid()
            .into_iter()
            .chain([p(0.1, 0.1, 40.0), p(0.3, 0.2, 3.0)])
        {
            let lo = 0.5 * (1.0 - q.a());
            let oracle = (0..=10_000)
                .map(|k| x1_lower_objective(&q, lo + (0.8 - lo) * k as f64 / 10_000.0))
                .fold(f64::MIN, f64::max);
            let v = x1_lower(&q, 0.8).unwrap();
            assert!(
                v >= oracle - 1e-12 && v <= oracle + 1e-6,
                "{q:?}: {v} vs {oracle}"
            );
        }
    }

    #[test]
    fn ordering_on_grid() {
        for q in grid() {
            let lo = x1_lower(&q, 0.8).unwrap();
            assert!(lo < x1_upper_refined(&q));
            assert!(x1_upper_refined(&q) <= x1_upper(&q));
            assert!(x1_upper(&q) <= x1_upper_linear(&q));
            let b = theorem_a(&q, false).unwrap();
            assert!(b.is_ordered(), "{b:?}");
            assert!(b.ln_s_min_hi < q.lambda().ln());
        }
    }

    #[test]
    fn tstar_examples() {
        let q = p(0.05, 0.05, 1.0);
        let t = tstar_bounds(1.0, 0.05, &q).unwrap();
        assert!(t.ln_s_lo < t.ln_s_hi && t.ln_v_lo < t.ln_v_hi);
        assert!(tstar_bounds(q.h_lambda(), 0.05, &q).is_err());
        assert!(tstar_bounds(1.0, 0.06, &q).is_err());
        // u/a → 1⁺: ẑ₂ → e gives ln v_hi → ln a, while z₁(1) = (e−1)/(e−2)
        let q = p(0.05, 1e-9, 1.0);
        let u = q.h_lambda() * (1.0 + 1e-9);
        let t = tstar_bounds(u, 1e-9, &q).unwrap();
        let e = std::f64::consts::E;
        assert!((t.ln_v_hi - 0.05f64.ln()).abs() < 1e-3, "{t:?}");
        let lo_limit = 0.05f64.ln() + ((e - 1.0) / (e - 2.0)).ln() - 1.0;
        assert!((t.ln_v_lo - lo_limit).abs() < 1e-3, "{t:?}");
    }

    #[test]
    fn statements_match_tstar() {
        let q = p(0.05, 0.05, 1.0);
        let (s_lo, s_hi) = statement2_bounds(&q, 0.8).unwrap();
        let (x_lo, x_hi) = statement3_bounds(&q, 0.8).unwrap();
        assert!(s_lo < s_hi && x_lo < x_hi);
        let t = tstar_bounds(x1_upper(&q), q.lambda(), &q).unwrap();
        assert_eq!(t.ln_s_lo, s_lo);
        assert_eq!(t.ln_v_lo, x_lo);
        let (lo, _) = statement3_bounds(&p(0.05, 0.05, 5.0), 0.8).unwrap();
        let xh = x1_upper(&p(0.05, 0.05, 5.0));
        assert!(lo < -90.0 && (lo - (xh.ln() - xh / 0.05)).abs() < 1.0);
        assert!(statement2_bounds(&p(0.1, 0.1, 1.0), 0.8).is_err());
    }

    #[test]
    fn statement2_bounded_in_m() {
        let (a, l) = (0.05, 0.05);
        for k in 0..50 {
            let m = 1.0 + 99.0 * k as f64 / 49.0;
            let (lo, hi) = statement2_bounds(&p(a, l, m), 0.8).unwrap();
            assert!(lo > -80.0 && hi < l.ln() && lo.is_finite());
        }
    }

    #[test]
    fn theorem_a_gating() {
        assert!(theorem_a(&p(0.05, 0.05, 1.0), false).unwrap().proven);
        assert!(matches!(
            theorem_a(&p(0.1, 0.1, 1.0), false),
            Err(Error::NotStarStar { .. })
        ));
        let forced = theorem_a(&p(0.1, 0.1, 1.0), true).unwrap();
        assert!(!forced.proven);
        assert!(theorem_a(&p(0.1, 0.01, 0.3), false).unwrap().proven);
        assert!(theorem_a(&p(0.5, 0.3, 1.0), true).is_err());
    }

    #[test]
    fn canard_examples() {
        let c = canard(&p(0.1, 0.1, 0.01));
        assert!((c.x_max_c - 0.3025).abs() < 1e-15);
        assert!((c.x_min_c - 0.3025 * (-3.025f64).exp()).abs() < 1e-15);
        let q = p(0.1, 0.1, 0.01);
        assert!((q.h(c.s_max_c) - c.x_min_c).abs() < 1e-14);
        assert!(c.s_max_c > 0.45);
        let c = canard(&p(1e-6, 0.01, 0.01));
        assert!((c.s_max_c - 1.0).abs() < 1e-5);
        assert_eq!(
            canard(&Params::limit(0.1, 0.1, 0.0).unwrap()).ln_s_min_c,
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn canard_consistency_as_m_shrinks() {
        let mut prev = f64::INFINITY;
        for k in 0..=20 {
            let m = 10f64.powf(-2.0 * k as f64 / 20.0);
            let q = p(0.05, 0.05, m);
            let b = theorem_a(&q, false).unwrap();
            let gap = (0.5 * (b.ln_x_min_lo + b.ln_x_min_hi) - canard(&q).ln_x_min_c).abs();
            assert!(gap <= prev + 1e-12, "m = {m}: {gap} > {prev}");
            prev = gap;
        }
    }

    proptest! {
        #[test]
        fn bounds_nonempty(a in 0.001f64..0.05, l in 0.001f64..0.05, m in 0.01f64..5.0) {
            let b = theorem_a(&p(a, l, m), false).unwrap();
            prop_assert!(b.is_ordered());
            prop_assert!(b.ln_x_min_lo.is_finite() && b.ln_s_min_lo.is_finite());
        }

        #[test]
        fn upper_bound_zero_parameter_limit(m in 1e-6f64..50.0) {
            let q = Params::limit(0.0, 0.0, m).unwrap();
            prop_assert!((x1_upper(&q) - (m + 0.5)).abs() <= 1e-12);
        }
    }
}
