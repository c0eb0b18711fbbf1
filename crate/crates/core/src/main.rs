use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cyclebound::harness::{self, Figure, SweepSpec};
use cyclebound::model::{parse_param_record, Case, Params, State};
use cyclebound::region4::{self, Region4Config};
use cyclebound::simulator::{self, EventKind, SimConfig};
use cyclebound::{bounds, Error, Result};

#[derive(Parser)]
#[command(
    name = "cyclebound",
    version,
    about = "Predator-prey limit-cycle bounds and simulation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct ParamArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    /// JSON file with either {a, lambda, m} or {r, K, q, H, p, d}
    #[arg(long)]
    params: Option<PathBuf>,
}

impl ParamArgs {
    fn resolve(&self) -> Result<Params> {
        if let Some(path) = &self.params {
            return parse_param_record(&std::fs::read_to_string(path)?);
        }
        match (self.a, self.lambda, self.m) {
            (Some(a), Some(l), Some(m)) => Params::new(a, l, m),
            _ => Err(Error::InvalidParams(
                "give --a, --lambda and --m, or --params FILE".into(),
            )),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Analytic bounds on the cycle extremes
    Bounds {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = bounds::DEFAULT_S0)]
        s0: f64,
        /// Evaluate outside the small-parameter assumption
        #[arg(long)]
        force: bool,
    },
    /// Integrate from P0 and dump the trajectory as CSV
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = bounds::DEFAULT_S0)]
        s0: f64,
        #[arg(long)]
        rtol: Option<f64>,
        /// Number of loops around the equilibrium
        #[arg(long, default_value_t = 1)]
        loops: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Converge to the limit cycle and compare with the bounds
    Cycle {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        rtol: Option<f64>,
        #[arg(long)]
        force: bool,
        #[arg(long)]
        json: bool,
    },
    /// Region-4 constants for one m
    Region4 {
        #[arg(long, default_value = "A")]
        case: Case,
        #[arg(long)]
        m: f64,
    },
    /// Bounds-versus-simulation sweep over a parameter grid
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Grid checks of the inequalities behind the bounds
    Proofcheck {
        #[arg(long, default_value = "A")]
        case: Case,
        #[arg(long)]
        json: bool,
    },
    /// Write figure data CSVs
    Figures {
        /// fig2, fig3, fig4, fig5 or all
        #[arg(long, default_value = "all")]
        which: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        rtol: Option<f64>,
    },
    /// Small-m estimates of the extremes
    Canard {
        #[command(flatten)]
        params: ParamArgs,
    },
}

fn sim_config(rtol: Option<f64>) -> Result<SimConfig> {
    let mut cfg = SimConfig::default().with_env_overrides()?;
    if let Some(r) = rtol {
        cfg.rtol = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

#[derive(Serialize)]
struct Region4Summary {
    case: Case,
    m: f64,
    eta_hat: f64,
    factors: region4::AlphaFactors,
    s4_lower: f64,
}

fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Bounds { params, s0, force } => {
            let p = params.resolve()?;
            print_json(&bounds::theorem_a_with_s0(&p, s0, force)?)?;
        }
        Cmd::Simulate {
            params,
            s0,
            rtol,
            loops,
            out,
        } => {
            let p = params.resolve()?;
            let cfg = sim_config(rtol)?;
            let start = State::new(p.h(s0), s0)?;
            let mut seen = 0;
            let target = 4 * loops.max(1);
            let traj = simulator::integrate(start, &p, &cfg, f64::INFINITY, |e| {
                if e.kind == EventKind::SEqLambdaDown || seen > 0 {
                    seen += 1;
                }
                seen > target
            })?;
            match out {
                Some(path) => {
                    harness::write_trajectory_csv(&traj, &p, BufWriter::new(File::create(path)?))?
                }
                None => harness::write_trajectory_csv(&traj, &p, io::stdout().lock())?,
            }
        }
        Cmd::Cycle {
            params,
            rtol,
            force,
            json,
        } => {
            let p = params.resolve()?;
            let cfg = sim_config(rtol)?;
            let rep = simulator::cycle_extreme_report(&p, &cfg, force)?;
            if json {
                print_json(&rep)?;
            } else {
                let e = &rep.extremes;
                let b = &rep.bounds;
                println!("proven    {}", b.proven);
                println!(
                    "converged {} after {} iterations",
                    e.converged, e.iterations
                );
                println!(
                    "x_max     {:.10e} < {:.10e} < {:.10e}",
                    b.x_max_lo, e.x_max, b.x_max_hi
                );
                println!(
                    "ln x_min  {:.10e} < {:.10e} < {:.10e}",
                    b.ln_x_min_lo, e.ln_x_min, b.ln_x_min_hi
                );
                println!(
                    "ln s_min  {:.10e} < {:.10e} < {:.10e}",
                    b.ln_s_min_lo, e.ln_s_min, b.ln_s_min_hi
                );
                println!(
                    "s_max     {:.10e} < {:.10e} < {:.10e}",
                    b.s_max_lo, e.s_max, b.s_max_hi
                );
                println!("period    {:.10e}", e.period);
                println!(
                    "margin    {:.6e} ({})",
                    rep.min_margin,
                    if rep.pass { "PASS" } else { "FAIL" }
                );
            }
            if !rep.extremes.converged {
                return Ok(harness::EXIT_NONCONVERGENCE);
            }
            if !rep.pass {
                return Ok(harness::EXIT_VIOLATION);
            }
        }
        Cmd::Region4 { case, m } => {
            let cfg = Region4Config::for_case(case);
            let eta_hat = region4::eta_hat(m, case);
            let factors = region4::alpha_factors(m, &cfg)?;
            let s4_lower = region4::step2_smax_lower(eta_hat, cfg.s_gamma, cfg.s_gamma, m)?;
            print_json(&Region4Summary {
                case,
                m,
                eta_hat,
                factors,
                s4_lower,
            })?;
        }
        Cmd::Sweep { spec, out, jobs } => {
            let mut spec: SweepSpec = serde_json::from_str(&std::fs::read_to_string(spec)?)?;
            if let Some(j) = jobs {
                spec.jobs = j;
            }
            spec.sim = spec.sim.with_env_overrides()?;
            let rep = harness::run_sweep(&spec)?;
            match out {
                Some(path) => rep.write_csv(&path)?,
                None => io::stdout().lock().write_all(rep.to_csv().as_bytes())?,
            }
            let s = rep.summary();
            eprintln!(
                "{} rows, {} proven, {} pass, {} violations, {} non-converged, {} errors",
                s.rows, s.proven_rows, s.proven_pass, s.violations, s.nonconverged, s.errors
            );
            return Ok(rep.exit_code());
        }
        Cmd::Proofcheck { case, json } => {
            let rep = harness::proof_spotchecks(case);
            if json {
                print_json(&rep)?;
            } else {
                for c in &rep.checks {
                    println!(
                        "{:<24} {} worst={:.6e} margin={:.6e} at {}",
                        c.name,
                        if c.pass { "PASS" } else { "FAIL" },
                        c.worst,
                        c.margin,
                        c.argmin
                    );
                }
            }
            if !rep.all_pass() {
                return Ok(harness::EXIT_VIOLATION);
            }
        }
        Cmd::Figures { which, out, rtol } => {
            let figs: Vec<Figure> = if which == "all" {
                Figure::ALL.to_vec()
            } else {
                which
                    .split(',')
                    .map(|w| w.trim().parse())
                    .collect::<Result<_>>()?
            };
            let cfg = sim_config(rtol)?;
            for path in harness::emit_figures(&figs, &out, &cfg)? {
                println!("{}", path.display());
            }
        }
        Cmd::Canard { params } => {
            let p = params.resolve()?;
            print_json(&bounds::canard(&p))?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
