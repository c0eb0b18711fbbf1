//! Parameter sweeps comparing simulated cycles with the analytic bounds,
//! numerical spot-checks of the inequalities the bounds rest on, and
//! figure-data emission.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, theorem_a_with_s0, BoundSet, DEFAULT_S0};
use crate::error::{Error, Result};
use crate::lvroot::ZIndex;
use crate::model::{Case, Params, State};
use crate::region4::{self, Region4Config};
use crate::simulator::{self, CycleExtremes, EventKind, Margins, SimConfig, Trajectory};

pub const CSV_HEADER: &str = "a,lambda,m,proven,x_max_lo,x_max,x_max_hi,ln_x_min_lo,ln_x_min,ln_x_min_hi,ln_s_min_lo,ln_s_min,ln_s_min_hi,s_max,converged,min_margin,pass";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

fn default_s0() -> f64 {
    DEFAULT_S0
}

fn default_jobs() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub a_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub m_values: Vec<f64>,
    #[serde(default = "default_s0")]
    pub s0: f64,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    /// Evaluate bounds outside the small-parameter assumption as well.
    #[serde(default)]
    pub force: bool,
}

impl SweepSpec {
    pub fn grid(a_values: &[f64], lambda_values: &[f64], m_values: &[f64]) -> Self {
        Self {
            a_values: a_values.to_vec(),
            lambda_values: lambda_values.to_vec(),
            m_values: m_values.to_vec(),
            s0: DEFAULT_S0,
            sim: SimConfig::default(),
            jobs: 1,
            force: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.a_values.is_empty() || self.lambda_values.is_empty() || self.m_values.is_empty() {
            return Err(Error::InvalidParams(
                "sweep value lists must be non-empty".into(),
            ));
        }
        if self.jobs == 0 {
            return Err(Error::InvalidParams("jobs must be >= 1".into()));
        }
        self.sim.validate()
    }

    fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut pts = Vec::new();
        for &a in &self.a_values {
            for &l in &self.lambda_values {
                for &m in &self.m_values {
                    pts.push((a, l, m));
                }
            }
        }
        pts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub a: f64,
    pub lambda: f64,
    pub m: f64,
    pub proven: bool,
    pub bounds: Option<BoundSet>,
    pub extremes: Option<CycleExtremes>,
    pub margins: Option<Margins>,
    pub flags: [bool; 6],
    pub min_margin: f64,
    pub pass: bool,
    pub converged: bool,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(
        a: f64,
        lambda: f64,
        m: f64,
        proven: bool,
        bounds: Option<BoundSet>,
        err: Error,
    ) -> Self {
        Self {
            a,
            lambda,
            m,
            proven,
            bounds,
            extremes: None,
            margins: None,
            flags: [false; 6],
            min_margin: f64::NAN,
            pass: false,
            converged: false,
            error: Some(err.to_string()),
        }
    }

    pub fn csv_line(&self) -> String {
        let f = |v: Option<f64>| match v {
            Some(x) => format!("{x:.16e}"),
            None => "NaN".to_string(),
        };
        let b = self.bounds.as_ref();
        let e = self.extremes.as_ref();
        let mut line = String::new();
        let _ = write!(
            line,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            f(Some(self.a)),
            f(Some(self.lambda)),
            f(Some(self.m)),
            self.proven,
            f(b.map(|b| b.x_max_lo)),
            f(e.map(|e| e.x_max)),
            f(b.map(|b| b.x_max_hi)),
            f(b.map(|b| b.ln_x_min_lo)),
            f(e.map(|e| e.ln_x_min)),
            f(b.map(|b| b.ln_x_min_hi)),
            f(b.map(|b| b.ln_s_min_lo)),
            f(e.map(|e| e.ln_s_min)),
            f(b.map(|b| b.ln_s_min_hi)),
            f(e.map(|e| e.s_max)),
            self.converged,
            f(Some(self.min_margin)),
            self.pass
        );
        line
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub rows: usize,
    pub proven_rows: usize,
    pub proven_pass: usize,
    pub violations: usize,
    pub nonconverged: usize,
    pub errors: usize,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Counts over proven rows; unproven rows only enter `rows`.
    pub fn summary(&self) -> SweepSummary {
        let proven: Vec<&SweepRow> = self.rows.iter().filter(|r| r.proven).collect();
        SweepSummary {
            rows: self.rows.len(),
            proven_rows: proven.len(),
            proven_pass: proven.iter().filter(|r| r.pass).count(),
            violations: proven
                .iter()
                .filter(|r| r.margins.is_some() && !r.pass)
                .count(),
            nonconverged: proven
                .iter()
                .filter(|r| r.extremes.is_some() && !r.converged)
                .count(),
            errors: proven.iter().filter(|r| r.error.is_some()).count(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        let s = self.summary();
        if s.violations > 0 {
            EXIT_VIOLATION
        } else if s.nonconverged > 0 || s.errors > 0 {
            EXIT_NONCONVERGENCE
        } else {
            EXIT_OK
        }
    }
}

fn sweep_row(a: f64, lambda: f64, m: f64, spec: &SweepSpec) -> SweepRow {
    let p = match Params::new(a, lambda, m) {
        Ok(p) => p,
        Err(e) => return SweepRow::failed(a, lambda, m, false, None, e),
    };
    let proven = p.star_star();
    let bounds = match theorem_a_with_s0(&p, spec.s0, spec.force) {
        Ok(b) => b,
        Err(e) => return SweepRow::failed(a, lambda, m, proven, None, e),
    };
    let extremes = match simulator::limit_cycle(&p, &spec.sim) {
        Ok(x) => x,
        Err(e) => return SweepRow::failed(a, lambda, m, proven, Some(bounds), e),
    };
    let margins = Margins::between(&bounds, &extremes);
    SweepRow {
        a,
        lambda,
        m,
        proven,
        bounds: Some(bounds),
        extremes: Some(extremes),
        margins: Some(margins),
        flags: margins.flags(),
        min_margin: margins.min(),
        pass: margins.pass(),
        converged: extremes.converged,
        error: None,
    }
}

/// Runs every grid point on a pool of `spec.jobs` threads. Rows come back
/// sorted by `(a, λ, m)`; a failing point is recorded in its row.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    let pts = spec.points();
    let mut rows: Vec<SweepRow> = pool.install(|| {
        pts.par_iter()
            .map(|&(a, l, m)| sweep_row(a, l, m, spec))
            .collect()
    });
    rows.sort_by(|x, y| {
        x.a.total_cmp(&y.a)
            .then(x.lambda.total_cmp(&y.lambda))
            .then(x.m.total_cmp(&y.m))
    });
    Ok(SweepReport { rows })
}

/// `(C₀, C₀ + C₁)` from the barrier derivative behind the `x_max` upper bound.
/// Accepts limit-mode parameters so that `λ = 0` or `a = 0` can be probed.
pub fn lemma1_coefficients(p: &Params) -> (f64, f64) {
    lemma1_raw(p.a(), p.lambda(), p.m())
}

fn lemma1_raw(a: f64, l: f64, m: f64) -> (f64, f64) {
    let c = -m * l * (3.0 + 5.0 * a + a * a) - 1.0 - m - a;
    let c0 = -m * m * m * l * (l * l - 5.0 * l + 4.0)
        + m * m * l * ((2.0 * a + 6.0) * l - 8.0 - 4.0 * a)
        + c;
    let q = a + 2.0 + 2.0 * m - m * l;
    (c0, -m * l * q * q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovMargins {
    /// Smallest increment of `m(s − λ ln s) + x` between consecutive samples.
    pub min_delta_v2: f64,
    /// Largest `x − Av/(1 + Bv)` with `v = 1 − s`; negative means below the barrier.
    pub max_barrier_excess: f64,
    pub samples: usize,
}

/// Samples the Region-1 arc from `P₀ = (h(0.8), 0.8)` to the crossing of
/// `s = λ` and checks the two barrier functions along it.
pub fn lyapunov_checks(p: &Params, n_samples: usize, cfg: &SimConfig) -> Result<LyapunovMargins> {
    let s0 = DEFAULT_S0;
    let start = State { x: p.h(s0), s: s0 };
    let stop = |e: &simulator::Event| e.kind == EventKind::SEqLambdaDown;
    let probe = simulator::integrate(start, p, cfg, f64::INFINITY, stop)?;
    let tau1 = probe.events.last().map(|e| e.tau).unwrap_or(0.0);
    let fine = SimConfig {
        max_step: (tau1 / n_samples.max(1) as f64).max(1e-9),
        ..*cfg
    };
    let traj: Trajectory = simulator::integrate(start, p, &fine, f64::INFINITY, stop)?;
    let (a, l, m) = (p.a(), p.lambda(), p.m());
    let big_a = 1.0 + m + a - m * l;
    let b = 1.0 + a + 2.0 * m * (1.0 - l);
    let big_b = (1.0 + m * l) / b;
    let mut min_dv = f64::INFINITY;
    let mut max_ex = f64::NEG_INFINITY;
    let mut prev: Option<f64> = None;
    for smp in &traj.samples {
        let x = smp.point.u.exp();
        let s = smp.point.v.exp();
        let v2 = m * (s - l * smp.point.v) + x;
        if let Some(pv) = prev {
            min_dv = min_dv.min(v2 - pv);
        }
        prev = Some(v2);
        let v = smp.ln_one_minus_s.exp();
        max_ex = max_ex.max(x - big_a * v / (1.0 + big_b * v));
    }
    Ok(LyapunovMargins {
        min_delta_v2: min_dv,
        max_barrier_excess: max_ex,
        samples: traj.samples.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    /// Signed distance from the failing side; `>= 0` passes.
    pub margin: f64,
    pub argmin: String,
    pub pass: bool,
}

impl CheckResult {
    fn new(name: &str, worst: f64, margin: f64, argmin: String) -> Self {
        Self {
            name: name.to_string(),
            worst,
            margin,
            argmin,
            pass: margin >= 0.0 && margin.is_finite(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofCheckReport {
    pub case: Case,
    pub checks: Vec<CheckResult>,
}

impl ProofCheckReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Parameter box of a case, excluding the zero edge.
fn case_box(case: Case, n: usize) -> (Vec<f64>, Vec<f64>) {
    let amax = case.a_max();
    let lmax = case.lambda_max();
    (
        linspace(amax / n as f64, amax, n),
        linspace(lmax / n as f64, lmax, n),
    )
}

/// Worst (largest) value of `f` over a 3-D grid, with its location.
fn grid_max(
    xs: &[f64],
    ys: &[f64],
    zs: &[f64],
    f: impl Fn(f64, f64, f64) -> f64 + Sync,
) -> (f64, [f64; 3]) {
    xs.par_iter()
        .map(|&x| {
            let mut best = (f64::NEG_INFINITY, [x, f64::NAN, f64::NAN]);
            for &y in ys {
                for &z in zs {
                    let v = f(x, y, z);
                    if v > best.0 || v.is_nan() {
                        best = (if v.is_nan() { f64::INFINITY } else { v }, [x, y, z]);
                    }
                }
            }
            best
        })
        .reduce(
            || (f64::NEG_INFINITY, [f64::NAN; 3]),
            |p, q| if q.0 > p.0 { q } else { p },
        )
}

fn fmt_loc(names: [&str; 3], v: [f64; 3]) -> String {
    format!(
        "{}={:.6e}, {}={:.6e}, {}={:.6e}",
        names[0], v[0], names[1], v[1], names[2], v[2]
    )
}

/// Target value of the peak location of `α₂` for each case.
pub fn m1_target(case: Case) -> f64 {
    match case {
        Case::A => 4.11,
        Case::B => 3.06,
    }
}

/// Grid checks of the inequalities used by the bounds. Each check reports
/// its worst value, a margin that is `>= 0` on the proven side, and where
/// the worst value occurred.
pub fn proof_spotchecks(case: Case) -> ProofCheckReport {
    const N: usize = 200;
    let cfg = Region4Config::for_case(case);
    let mut checks = Vec::new();

    // C₀ < 0 and C₀ + C₁ ≤ 0 on a ∈ (0, 0.5], λ ∈ [0, 1), m ∈ (0, 10]
    let a_ax = linspace(0.5 / N as f64, 0.5, N);
    let l_ax: Vec<f64> = (0..N).map(|k| 0.999 * k as f64 / (N - 1) as f64).collect();
    let m_ax = linspace(10.0 / N as f64, 10.0, N);
    let (w, at) = grid_max(&a_ax, &l_ax, &m_ax, |a, l, m| lemma1_raw(a, l, m).0);
    let mut c0 = CheckResult::new("lemma1_C0", w, -w, fmt_loc(["a", "lambda", "m"], at));
    c0.pass = w < 0.0;
    checks.push(c0);
    let (w, at) = grid_max(&a_ax, &l_ax, &m_ax, |a, l, m| lemma1_raw(a, l, m).1);
    checks.push(CheckResult::new(
        "lemma1_C0plusC1",
        w,
        -w,
        fmt_loc(["a", "lambda", "m"], at),
    ));

    // G*(λ) < 0 < G*(1) on the case box
    let (ab, lb) = case_box(case, N);
    let mg = log_space(1e-3, 50.0, N);
    let (w, at) = grid_max(&ab, &lb, &mg, |a, l, m| {
        let p = Params::new(a, l, m).expect("grid params are positive");
        let lo = region4::g_star(l, &p, cfg.k).unwrap_or(f64::NAN);
        let hi = region4::g_star(1.0, &p, cfg.k).unwrap_or(f64::NAN);
        lo.max(-hi)
    });
    let mut g = CheckResult::new("gstar_endpoints", w, -w, fmt_loc(["a", "lambda", "m"], at));
    g.pass = w < 0.0;
    checks.push(g);

    // α < 0.2 on a 500-point log grid
    let mut worst = (f64::NEG_INFINITY, f64::NAN);
    for m in log_space(1e-3, 50.0, 500) {
        let al = region4::alpha_factors(m, &cfg)
            .map(|f| f.alpha)
            .unwrap_or(f64::INFINITY);
        if al > worst.0 {
            worst = (al, m);
        }
    }
    let mut c = CheckResult::new(
        "alpha_max",
        worst.0,
        0.2 - worst.0,
        format!("m={:.6e}", worst.1),
    );
    c.pass = worst.0 < 0.2;
    checks.push(c);

    // η̂ ≤ 0.05 (A) or 0.08 (B) on [0, 20]
    let cap = match case {
        Case::A => 0.05,
        Case::B => 0.08,
    };
    let mut worst = (f64::NEG_INFINITY, f64::NAN);
    for k in 0..=20_000 {
        let m = k as f64 * 1e-3;
        let v = region4::eta_hat(m, case);
        if v > worst.0 {
            worst = (v, m);
        }
    }
    checks.push(CheckResult::new(
        "eta_hat_max",
        worst.0,
        cap - worst.0,
        format!("m={:.6e}", worst.1),
    ));

    // finite-difference derivatives of η̄ in a and λ, with z₂ and z₀
    let hstep = 1e-6;
    let (ab, lb) = case_box(case, N);
    let ab: Vec<f64> = ab.into_iter().filter(|&a| a > 2.0 * hstep).collect();
    let lb: Vec<f64> = lb.into_iter().filter(|&l| l > 2.0 * hstep).collect();
    let mgrid = log_space(1e-2, 20.0, N);
    let (w, at) = grid_max(&ab, &lb, &mgrid, |a, l, m| {
        let f = |a: f64, l: f64, zi: ZIndex| {
            Params::new(a, l, m)
                .ok()
                .and_then(|p| region4::eta_bar_ln_with(&p, &cfg, zi).ok())
                .map(f64::exp)
                .unwrap_or(f64::NAN)
        };
        let mut worst = f64::NEG_INFINITY;
        for zi in [ZIndex::Z2, ZIndex::Z0] {
            let da = (f(a + hstep, l, zi) - f(a - hstep, l, zi)) / (2.0 * hstep);
            let dl = (f(a, l + hstep, zi) - f(a, l - hstep, zi)) / (2.0 * hstep);
            worst = worst.max(-da).max(-dl);
        }
        worst
    });
    checks.push(CheckResult::new(
        "lemma19_min_derivative",
        -w,
        1e-9 - w,
        fmt_loc(["a", "lambda", "m"], at),
    ));

    // location of the peak of α₂
    let (worst, margin, loc) = match region4::find_m1(case) {
        Ok(m1) => (
            m1,
            0.02 - (m1 - m1_target(case)).abs(),
            format!("target={}", m1_target(case)),
        ),
        Err(e) => (f64::NAN, f64::NAN, e.to_string()),
    };
    checks.push(CheckResult::new("m1_roots", worst, margin, loc));

    ProofCheckReport { case, checks }
}

/// Supplementary hand-off checks: the upper bound on `ln x₃` stays
/// below `(1 − k)h(λ)` and below the closed-form majorant, on a case grid.
/// Returns `(handoff_margin, closed_form_margin)` as worst log-space margins.
pub fn handoff_checks(case: Case, n: usize) -> Result<(f64, f64)> {
    let cfg = Region4Config::for_case(case);
    let (ab, lb) = case_box(case, n);
    let mut worst = (f64::INFINITY, f64::INFINITY);
    for &a in &ab {
        for &l in &lb {
            for m in log_space(1e-2, 20.0, n) {
                let p = Params::new(a, l, m)?;
                let (_, x3_hi) = bounds::statement3_bounds(&p, DEFAULT_S0)?;
                let cap = ((1.0 - cfg.k) * p.h_lambda()).ln();
                worst.0 = worst.0.min(cap - x3_hi);
                worst.1 = worst.1.min(region4::x3_closed_form_ln(&p, case) - x3_hi);
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig2, Figure::Fig3, Figure::Fig4, Figure::Fig5];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }

    fn header(self) -> &'static str {
        match self {
            Figure::Fig2 => {
                "m,proven,x_max_lower,x_max_upper,x_max_upper_refined,x_max_upper_linear,x_max_sim"
            }
            Figure::Fig3 => "m,proven,ln_s_min_lower,ln_s_min_upper,ln_s_min_sim,ln_s_min_canard",
            Figure::Fig4 => "m,proven,ln_x_min_lower,ln_x_min_upper,ln_x_min_sim,ln_x_min_canard",
            Figure::Fig5 => "m,proven,s_max_lower,s_max_upper,s_max_sim,ln_s_max_sim",
        }
    }
}

impl std::str::FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            "fig4" => Ok(Figure::Fig4),
            "fig5" => Ok(Figure::Fig5),
            other => Err(Error::InvalidParams(format!("unknown figure '{other}'"))),
        }
    }
}

/// `(a, λ)` panels shared by the figures.
pub const FIGURE_PANELS: [(f64, f64); 4] = [(0.05, 0.05), (0.1, 0.01), (0.1, 0.1), (0.02, 0.02)];

pub const FIGURE_POINTS: usize = 50;

struct FigurePoint {
    m: f64,
    p: Params,
    bounds: BoundSet,
    sim: Option<CycleExtremes>,
}

fn figure_points(a: f64, l: f64, cfg: &SimConfig) -> Result<Vec<FigurePoint>> {
    log_space(0.01, 5.0, FIGURE_POINTS)
        .into_par_iter()
        .map(|m| {
            let p = Params::new(a, l, m)?;
            let bounds = theorem_a_with_s0(&p, DEFAULT_S0, true)?;
            let sim = simulator::limit_cycle(&p, cfg).ok();
            Ok(FigurePoint { m, p, bounds, sim })
        })
        .collect()
}

fn figure_csv(fig: Figure, pts: &[FigurePoint]) -> String {
    let f = |v: Option<f64>| v.map_or("NaN".to_string(), |x| format!("{x:.16e}"));
    let mut out = format!("{}\n", fig.header());
    for pt in pts {
        let b = &pt.bounds;
        let sim = pt.sim.as_ref();
        let c = bounds::canard(&pt.p);
        let cols: Vec<String> = match fig {
            Figure::Fig2 => vec![
                f(Some(b.x_max_lo)),
                f(Some(b.x_max_hi)),
                f(Some(bounds::x1_upper_refined(&pt.p))),
                f(Some(bounds::x1_upper_linear(&pt.p))),
                f(sim.map(|e| e.x_max)),
            ],
            Figure::Fig3 => vec![
                f(Some(b.ln_s_min_lo)),
                f(Some(b.ln_s_min_hi)),
                f(sim.map(|e| e.ln_s_min)),
                f(Some(c.ln_s_min_c)),
            ],
            Figure::Fig4 => vec![
                f(Some(b.ln_x_min_lo)),
                f(Some(b.ln_x_min_hi)),
                f(sim.map(|e| e.ln_x_min)),
                f(Some(c.ln_x_min_c)),
            ],
            Figure::Fig5 => vec![
                f(Some(b.s_max_lo)),
                f(Some(b.s_max_hi)),
                f(sim.map(|e| e.s_max)),
                f(sim.map(|e| e.ln_s_max)),
            ],
        };
        let _ = writeln!(out, "{},{},{}", f(Some(pt.m)), b.proven, cols.join(","));
    }
    out
}

pub fn figure_file_name(fig: Figure, a: f64, l: f64) -> String {
    format!("{}_a{}_lambda{}.csv", fig.name(), a, l)
}

/// Writes one CSV per requested figure and panel into `out_dir`, with
/// 50 log-spaced `m` values in `[0.01, 5]`.
pub fn emit_figures(which: &[Figure], out_dir: &Path, cfg: &SimConfig) -> Result<Vec<PathBuf>> {
    emit_figures_for(which, &FIGURE_PANELS, out_dir, cfg)
}

pub fn emit_figures_for(
    which: &[Figure],
    panels: &[(f64, f64)],
    out_dir: &Path,
    cfg: &SimConfig,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for &(a, l) in panels {
        let pts = figure_points(a, l, cfg)?;
        for &fig in which {
            let path = out_dir.join(figure_file_name(fig, a, l));
            std::fs::write(&path, figure_csv(fig, &pts))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Trajectory dump with columns `tau, ln_x, ln_s, region`.
pub fn write_trajectory_csv(traj: &Trajectory, p: &Params, mut out: impl Write) -> Result<()> {
    writeln!(out, "tau,ln_x,ln_s,region")?;
    for s in &traj.samples {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{}",
            s.tau,
            s.point.u,
            s.point.v,
            s.region(p).as_str()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma1_examples() {
        let (c0, sum) = lemma1_coefficients(&Params::limit(0.0, 0.0, 1.0).unwrap());
        assert_eq!((c0, sum), (-2.0, 0.0));
        let (c0, sum) = lemma1_coefficients(&Params::new(0.05, 0.05, 1.0).unwrap());
        assert!(c0 < 0.0 && sum < 0.0);
    }

    #[test]
    fn csv_header_and_row_format() {
        let mut spec = SweepSpec::grid(&[0.05], &[0.05], &[1.0]);
        spec.jobs = 2;
        let rep = run_sweep(&spec).unwrap();
        let csv = rep.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), CSV_HEADER.split(',').count());
        assert_eq!(row[0], "5.0000000000000003e-2");
        assert_eq!(row[3], "true");
        assert_eq!(*row.last().unwrap(), "true");
        assert_eq!(rep.exit_code(), EXIT_OK);
    }

    #[test]
    fn unproven_rows_are_marked_and_excluded() {
        let mut spec = SweepSpec::grid(&[0.1], &[0.1], &[1.0]);
        let rep = run_sweep(&spec).unwrap();
        assert!(!rep.rows[0].proven && rep.rows[0].error.is_some());
        assert_eq!(rep.summary().proven_rows, 0);
        spec.force = true;
        let rep = run_sweep(&spec).unwrap();
        assert!(!rep.rows[0].proven && rep.rows[0].margins.is_some());
        assert_eq!(rep.exit_code(), EXIT_OK);
    }

    #[test]
    fn invalid_specs() {
        assert!(run_sweep(&SweepSpec::grid(&[], &[0.1], &[1.0])).is_err());
        let mut s = SweepSpec::grid(&[0.05], &[0.05], &[1.0]);
        s.jobs = 0;
        assert!(run_sweep(&s).is_err());
    }

    #[test]
    fn spec_json_defaults() {
        let s: SweepSpec =
            serde_json::from_str(r#"{"a_values":[0.05],"lambda_values":[0.05],"m_values":[1]}"#)
                .unwrap();
        assert_eq!(s.s0, 0.8);
        assert_eq!(s.jobs, 1);
        assert_eq!(s.sim, SimConfig::default());
    }

    #[test]
    fn lyapunov_region1_arc() {
        let p = Params::new(0.05, 0.05, 1.0).unwrap();
        let r = lyapunov_checks(&p, 400, &SimConfig::default()).unwrap();
        assert!(r.samples >= 400);
        assert!(r.min_delta_v2 >= -1e-12, "{r:?}");
        assert!(r.max_barrier_excess < 0.0, "{r:?}");
    }

    #[test]
    fn v2_is_stationary_on_predator_isocline() {
        // V₂′ = m(s − λ)h(s)
        let p = Params::new(0.05, 0.05, 1.0).unwrap();
        let st = State { x: 0.4, s: 0.05 };
        let (dx, ds) = crate::model::vector_field(st, &p);
        let dv2 = p.m() * ds * (1.0 - p.lambda() / st.s) + dx;
        assert!(dv2.abs() < 1e-15);
    }

    #[test]
    fn handoff_chain_case_a() {
        let (h, c) = handoff_checks(Case::A, 12).unwrap();
        assert!(h > 0.0 && c > 0.0, "{h} {c}");
    }
}
