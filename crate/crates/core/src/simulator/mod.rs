//! Adaptive integration of the predator–prey system with isocline events,
//! transit points of one region tour, and limit-cycle extraction.
//!
//! The state is carried as `(u, w) = (ln x, logit s)`. In these variables
//!
//! ```text
//! du/dτ = m (s − λ),   dw/dτ = s + a − x / (1 − s),   s = 1 / (1 + e^{−w})
//! ```
//!
//! and both `ln s` and `ln(1 − s)` are available to full relative accuracy,
//! which matters because the cycle passes within `e^{−90}` of `s = 1` and
//! below `e^{−1000}` in `s` for small `m`.

mod dopri5;

use serde::{Deserialize, Serialize};

use crate::bounds::{theorem_a, x1_upper, BoundSet};
use crate::error::{Error, Result};
use crate::model::{classify_log_region, LogState, Params, Region, State};

use dopri5::{Attempt, Dense, Dopri5, Vec2};

/// Environment variable overriding [`SimConfig::rtol`].
pub const RTOL_ENV: &str = "CYCLEBOUND_RTOL";

/// `|g|` below which an event function counts as starting on its surface.
const ARM_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub rtol: f64,
    pub atol_log: f64,
    /// Attempted steps allowed per integration call.
    pub max_steps: usize,
    pub cycle_tol: f64,
    pub max_return_iters: usize,
    pub max_step: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol_log: 1e-12,
            max_steps: 20_000_000,
            cycle_tol: 1e-9,
            max_return_iters: 10_000,
            max_step: f64::INFINITY,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rtol", self.rtol),
            ("atol_log", self.atol_log),
            ("cycle_tol", self.cycle_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidParams(format!(
                "max_step must be positive, got {}",
                self.max_step
            )));
        }
        if self.max_steps == 0 || self.max_return_iters == 0 {
            return Err(Error::InvalidParams(
                "step and iteration budgets must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Applies `CYCLEBOUND_RTOL` if set.
    pub fn with_env_overrides(mut self) -> Result<Self> {
        if let Ok(raw) = std::env::var(RTOL_ENV) {
            self.rtol = raw
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParams(format!("{RTOL_ENV}={raw} is not a number")))?;
        }
        self.validate()?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    /// `s = λ` with `s` decreasing (Region 1 → 2); `x` is maximal.
    SEqLambdaDown,
    /// `x = h(s)` with `s` turning upward (Region 2 → 3); `s` is minimal.
    XEqHMin,
    /// `s = λ` with `s` increasing (Region 3 → 4); `x` is minimal.
    SEqLambdaUp,
    /// `x = h(s)` with `s` turning downward (Region 4 → 1); `s` is maximal.
    XEqHMax,
}

impl EventKind {
    pub fn next(self) -> Self {
        match self {
            EventKind::SEqLambdaDown => EventKind::XEqHMin,
            EventKind::XEqHMin => EventKind::SEqLambdaUp,
            EventKind::SEqLambdaUp => EventKind::XEqHMax,
            EventKind::XEqHMax => EventKind::SEqLambdaDown,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::SEqLambdaDown => "S_eq_lambda_down",
            EventKind::XEqHMin => "X_eq_h_min",
            EventKind::SEqLambdaUp => "S_eq_lambda_up",
            EventKind::XEqHMax => "X_eq_h_max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub tau: f64,
    pub point: LogState,
    pub ln_one_minus_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub tau: f64,
    pub point: LogState,
    pub ln_one_minus_s: f64,
}

impl Sample {
    pub fn region(&self, p: &Params) -> Region {
        classify_log_region(self.point, p)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Rejections caused by overflow or NaN in a trial stage.
    pub nonfinite: usize,
}

impl SolverStats {
    fn absorb(&mut self, other: &SolverStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.nonfinite += other.nonfinite;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub stats: SolverStats,
}

/// The four isocline crossings of one region tour from `P₀ = (h(s₀), s₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitPoints {
    pub x1: f64,
    pub ln_s2: f64,
    pub ln_x3: f64,
    pub s4: f64,
    pub ln_s4: f64,
    pub ln_one_minus_s4: f64,
    pub events: [Event; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleExtremes {
    pub x_max: f64,
    pub ln_x_min: f64,
    pub ln_s_min: f64,
    pub s_max: f64,
    pub ln_s_max: f64,
    pub ln_one_minus_s_max: f64,
    pub period: f64,
    pub p1_x: f64,
    pub ln_p2_s: f64,
    pub ln_p3_x: f64,
    pub p4_s: f64,
    pub converged: bool,
    /// Last `|Δ ln x|` of the return map on the section.
    pub residual: f64,
    pub iterations: usize,
    pub stats: SolverStats,
}

/// Signed log-space distances to each bound; positive means strictly inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub x_max_lo: f64,
    pub x_max_hi: f64,
    pub ln_x_min_lo: f64,
    pub ln_x_min_hi: f64,
    pub ln_s_min_lo: f64,
    pub ln_s_min_hi: f64,
    pub s_max_lo: f64,
    pub s_max_hi: f64,
}

impl Margins {
    pub fn between(b: &BoundSet, e: &CycleExtremes) -> Self {
        let lx = e.x_max.ln();
        Self {
            x_max_lo: lx - b.x_max_lo.ln(),
            x_max_hi: b.x_max_hi.ln() - lx,
            ln_x_min_lo: e.ln_x_min - b.ln_x_min_lo,
            ln_x_min_hi: b.ln_x_min_hi - e.ln_x_min,
            ln_s_min_lo: e.ln_s_min - b.ln_s_min_lo,
            ln_s_min_hi: b.ln_s_min_hi - e.ln_s_min,
            s_max_lo: e.ln_s_max - b.s_max_lo.ln(),
            s_max_hi: b.s_max_hi.ln() - e.ln_s_max,
        }
    }

    pub fn all(&self) -> [f64; 8] {
        [
            self.x_max_lo,
            self.x_max_hi,
            self.ln_x_min_lo,
            self.ln_x_min_hi,
            self.ln_s_min_lo,
            self.ln_s_min_hi,
            self.s_max_lo,
            self.s_max_hi,
        ]
    }

    pub fn min(&self) -> f64 {
        self.all().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// The six pass flags: x_max above and below, ln x_min inside, ln s_min
    /// inside, s_max above 0.8 and below 1.
    pub fn flags(&self) -> [bool; 6] {
        [
            self.x_max_lo > 0.0,
            self.x_max_hi > 0.0,
            self.ln_x_min_lo > 0.0 && self.ln_x_min_hi > 0.0,
            self.ln_s_min_lo > 0.0 && self.ln_s_min_hi > 0.0,
            self.s_max_lo > 0.0,
            self.s_max_hi > 0.0,
        ]
    }

    pub fn pass(&self) -> bool {
        self.flags().iter().all(|&f| f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub bounds: BoundSet,
    pub extremes: CycleExtremes,
    pub margins: Margins,
    pub min_margin: f64,
    pub pass: bool,
}

pub(crate) fn softplus(w: f64) -> f64 {
    w.max(0.0) + (-w.abs()).exp().ln_1p()
}

fn sigmoid(w: f64) -> f64 {
    if w >= 0.0 {
        1.0 / (1.0 + (-w).exp())
    } else {
        let e = w.exp();
        e / (1.0 + e)
    }
}

fn logit_from_ln_s(v: f64) -> f64 {
    v - (-v.exp_m1()).ln()
}

fn ln_s_of(w: f64) -> f64 {
    -softplus(-w)
}

fn ln_one_minus_s_of(w: f64) -> f64 {
    -softplus(w)
}

fn rhs(y: &Vec2, a: f64, lambda: f64, m: f64) -> Vec2 {
    let s = sigmoid(y[1]);
    [m * (s - lambda), s + a - (y[0] + softplus(y[1])).exp()]
}

/// Has the sign of `s − λ`.
fn g_lambda(y: &Vec2, logit_lambda: f64) -> f64 {
    y[1] - logit_lambda
}

/// Has the sign of `ds/dτ`: `ln h(s) − ln x`.
fn g_h(y: &Vec2, a: f64) -> f64 {
    (sigmoid(y[1]) + a).ln() - y[0] - softplus(y[1])
}

fn sample_of(tau: f64, y: &Vec2) -> Sample {
    Sample {
        tau,
        point: LogState {
            u: y[0],
            v: ln_s_of(y[1]),
        },
        ln_one_minus_s: ln_one_minus_s_of(y[1]),
    }
}

#[derive(Clone, Copy)]
struct Tracker {
    last: f64,
    armed: bool,
}

impl Tracker {
    fn new(g0: f64) -> Self {
        Self {
            last: g0,
            armed: g0.abs() > ARM_THRESHOLD,
        }
    }
}

fn locate(dense: &Dense, t1: f64, g: impl Fn(&Vec2) -> f64, positive_before: bool) -> Result<f64> {
    let (mut lo, mut hi) = (dense.t0, t1);
    let tol = (4.0 * f64::EPSILON * t1.abs()).max(1e-12);
    for _ in 0..200 {
        if hi - lo <= tol {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        let gm = g(&dense.eval(mid));
        if !gm.is_finite() {
            return Err(Error::EventLocalization { tau: mid });
        }
        if (gm > 0.0) == positive_before && gm != 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::EventLocalization {
        tau: 0.5 * (lo + hi),
    })
}

fn check_inputs(p: &Params, cfg: &SimConfig) -> Result<()> {
    if p.is_limit_mode() {
        return Err(Error::InvalidParams(
            "limit-mode parameters cannot be simulated".into(),
        ));
    }
    p.require_cycle_regime()?;
    cfg.validate()
}

fn integrate_internal(
    y0: Vec2,
    p: &Params,
    cfg: &SimConfig,
    tau_max: f64,
    mut stop: impl FnMut(&Event) -> bool,
) -> Result<Trajectory> {
    let (a, lambda, m) = (p.a(), p.lambda(), p.m());
    let logit_lambda = lambda.ln() - (-lambda).ln_1p();
    let solver = Dopri5 {
        f: move |y: &Vec2| rhs(y, a, lambda, m),
        rtol: cfg.rtol,
        atol: cfg.atol_log,
    };
    let gl = move |y: &Vec2| g_lambda(y, logit_lambda);
    let gh = move |y: &Vec2| g_h(y, a);

    let mut y = y0;
    let mut k1 = (solver.f)(&y);
    if !(y[0].is_finite() && y[1].is_finite() && k1[0].is_finite() && k1[1].is_finite()) {
        return Err(Error::InvalidState(format!(
            "non-finite start ({}, {})",
            y[0], y[1]
        )));
    }
    let mut t = 0.0;
    let mut h = solver.initial_step(&y, &k1, cfg.max_step);
    let mut trackers = [Tracker::new(gl(&y)), Tracker::new(gh(&y))];
    let mut traj = Trajectory {
        samples: vec![sample_of(t, &y)],
        events: Vec::new(),
        stats: SolverStats::default(),
    };
    let mut attempts = 0usize;
    let mut last_rejected = false;

    while t < tau_max {
        if attempts >= cfg.max_steps {
            return Err(Error::StepBudget {
                max_steps: cfg.max_steps,
                tau: t,
            });
        }
        attempts += 1;
        h = h.min(cfg.max_step).min(tau_max - t);
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { tau: t, h });
        }
        let (y1, k7, err, dense) = match solver.attempt(t, &y, &k1, h) {
            Attempt::NonFinite => {
                traj.stats.rejected += 1;
                traj.stats.nonfinite += 1;
                h *= 0.25;
                last_rejected = true;
                continue;
            }
            Attempt::Done { y1, k7, err, dense } => (y1, k7, err, dense),
        };
        let fac = if err == 0.0 {
            10.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 10.0)
        };
        if err > 1.0 {
            traj.stats.rejected += 1;
            h *= fac.min(1.0);
            last_rejected = true;
            continue;
        }
        let t1 = t + h;
        traj.stats.accepted += 1;

        let mut found: Vec<Event> = Vec::new();
        for (idx, tr) in trackers.iter_mut().enumerate() {
            let g1 = if idx == 0 { gl(&y1) } else { gh(&y1) };
            if !tr.armed {
                tr.armed = g1.abs() > ARM_THRESHOLD;
                tr.last = g1;
                continue;
            }
            let down = tr.last > 0.0 && g1 <= 0.0;
            let up = tr.last < 0.0 && g1 >= 0.0;
            if down || up {
                let tau = if idx == 0 {
                    locate(&dense, t1, gl, down)?
                } else {
                    locate(&dense, t1, gh, down)?
                };
                let ye = dense.eval(tau);
                let kind = match (idx, down) {
                    (0, true) => EventKind::SEqLambdaDown,
                    (0, false) => EventKind::SEqLambdaUp,
                    (_, true) => EventKind::XEqHMax,
                    (_, false) => EventKind::XEqHMin,
                };
                let s = sample_of(tau, &ye);
                found.push(Event {
                    kind,
                    tau,
                    point: s.point,
                    ln_one_minus_s: s.ln_one_minus_s,
                });
            }
            tr.last = g1;
        }
        found.sort_by(|x, z| x.tau.total_cmp(&z.tau));
        for ev in found {
            traj.events.push(ev);
            if stop(&ev) {
                traj.samples.push(Sample {
                    tau: ev.tau,
                    point: ev.point,
                    ln_one_minus_s: ev.ln_one_minus_s,
                });
                return Ok(traj);
            }
        }

        t = t1;
        y = y1;
        k1 = k7;
        traj.samples.push(sample_of(t, &y));
        h *= if last_rejected { fac.min(1.0) } else { fac };
        last_rejected = false;
    }
    Ok(traj)
}

/// Integrates from `start` until `tau_max` or until `stop` returns true for
/// a detected event. Starting exactly on an isocline does not count as a
/// crossing of it. Prey densities `s ≥ 1` are rejected.
pub fn integrate(
    start: State,
    p: &Params,
    cfg: &SimConfig,
    tau_max: f64,
    stop: impl FnMut(&Event) -> bool,
) -> Result<Trajectory> {
    if !(start.x > 0.0 && start.s > 0.0 && start.s < 1.0) {
        return Err(Error::InvalidState(format!(
            "start must satisfy x > 0 and 0 < s < 1, got ({}, {})",
            start.x, start.s
        )));
    }
    integrate_log(LogState::from_state(start), p, cfg, tau_max, stop)
}

/// As [`integrate`], from a log-space point with `v = ln s < 0`.
pub fn integrate_log(
    start: LogState,
    p: &Params,
    cfg: &SimConfig,
    tau_max: f64,
    stop: impl FnMut(&Event) -> bool,
) -> Result<Trajectory> {
    check_inputs(p, cfg)?;
    if !(start.v < 0.0 && start.u.is_finite()) {
        return Err(Error::InvalidState(format!(
            "need finite ln x and ln s < 0, got ({}, {})",
            start.u, start.v
        )));
    }
    integrate_internal([start.u, logit_from_ln_s(start.v)], p, cfg, tau_max, stop)
}

fn check_order(events: &[Event], first: EventKind) -> Result<()> {
    let mut expected = first;
    for ev in events {
        if ev.kind != expected {
            return Err(Error::EventOrder {
                expected: expected.as_str(),
                found: ev.kind.as_str(),
                tau: ev.tau,
            });
        }
        expected = expected.next();
    }
    Ok(())
}

/// One tour from `P₀ = (h(s₀), s₀)` through Regions 1 to 4.
pub fn transit_points(p: &Params, s0: f64, cfg: &SimConfig) -> Result<TransitPoints> {
    check_inputs(p, cfg)?;
    if !(s0 > p.lambda() && s0 < 1.0) {
        return Err(Error::Domain(format!(
            "s0 must lie in (lambda, 1), got {s0}"
        )));
    }
    let u0 = (1.0 - s0).ln() + (s0 + p.a()).ln();
    let w0 = s0.ln() - (1.0 - s0).ln();
    let mut count = 0;
    let traj = integrate_internal([u0, w0], p, cfg, f64::INFINITY, |_| {
        count += 1;
        count == 4
    })?;
    check_order(&traj.events, EventKind::SEqLambdaDown)?;
    let ev: [Event; 4] = traj.events[..4]
        .try_into()
        .map_err(|_| Error::InvalidState("fewer than four transit events".into()))?;
    Ok(TransitPoints {
        x1: ev[0].point.u.exp(),
        ln_s2: ev[1].point.v,
        ln_x3: ev[2].point.u,
        s4: ev[3].point.v.exp(),
        ln_s4: ev[3].point.v,
        ln_one_minus_s4: ev[3].ln_one_minus_s,
        events: ev,
    })
}

/// Limit cycle via the return map on `{s = λ, s decreasing}`, started at
/// `x = x̂₁`.
pub fn limit_cycle(p: &Params, cfg: &SimConfig) -> Result<CycleExtremes> {
    limit_cycle_from(p, cfg, x1_upper(p))
}

/// Limit cycle via the return map started at `(x_start, λ)` with `x_start > h(λ)`.
pub fn limit_cycle_from(p: &Params, cfg: &SimConfig, x_start: f64) -> Result<CycleExtremes> {
    check_inputs(p, cfg)?;
    if !(x_start > p.h_lambda() && x_start.is_finite()) {
        return Err(Error::InvalidState(format!(
            "section start x = {x_start} must exceed h(lambda) = {}",
            p.h_lambda()
        )));
    }
    let logit_lambda = p.lambda().ln() - (-p.lambda()).ln_1p();
    let mut u = x_start.ln();
    let mut stats = SolverStats::default();
    let mut best: Option<CycleExtremes> = None;
    for iter in 1..=cfg.max_return_iters {
        let traj = integrate_internal([u, logit_lambda], p, cfg, f64::INFINITY, |e| {
            e.kind == EventKind::SEqLambdaDown
        })?;
        stats.absorb(&traj.stats);
        check_order(&traj.events, EventKind::XEqHMin)?;
        if traj.events.len() != 4 {
            return Err(Error::InvalidState(
                "return map loop ended without reaching the section".into(),
            ));
        }
        let ev = &traj.events;
        let u_new = ev[3].point.u;
        let residual = (u_new - u).abs();
        let s_max_ln = ev[2].point.v;
        let ext = CycleExtremes {
            x_max: u_new.exp(),
            ln_x_min: ev[1].point.u,
            ln_s_min: ev[0].point.v,
            s_max: s_max_ln.exp(),
            ln_s_max: s_max_ln,
            ln_one_minus_s_max: ev[2].ln_one_minus_s,
            period: ev[3].tau,
            p1_x: u_new.exp(),
            ln_p2_s: ev[0].point.v,
            ln_p3_x: ev[1].point.u,
            p4_s: s_max_ln.exp(),
            converged: residual <= cfg.cycle_tol,
            residual,
            iterations: iter,
            stats,
        };
        best = Some(ext);
        u = u_new;
        if ext.converged {
            break;
        }
    }
    best.ok_or(Error::NonConvergence {
        iters: 0,
        defect: f64::NAN,
    })
}

/// Simulated extremes next to the analytic bounds with signed margins.
pub fn cycle_extreme_report(p: &Params, cfg: &SimConfig, force: bool) -> Result<CycleReport> {
    let bounds = theorem_a(p, force)?;
    let extremes = limit_cycle(p, cfg)?;
    let margins = Margins::between(&bounds, &extremes);
    Ok(CycleReport {
        bounds,
        extremes,
        margins,
        min_margin: margins.min(),
        pass: margins.pass(),
    })
}
