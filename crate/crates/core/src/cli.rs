//! Command-line front end. Data goes to `--output` (default stdout),
//! diagnostics to stderr. Exit codes: 0 success, 1 invalid input or violated
//! hypothesis, 2 non-convergence, resource limits, or a failed verification.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cgf::phi;
use crate::diagnostics::{
    cutoffs, ldp_scan, localization_scan, scan_csv, BackendChoice, ScanOptions, CSV_HEADER,
};
use crate::error::Error;
use crate::green::{green_full_with, green_truncated_with, write_profile, GreenOptions, GreenQuery, Horizon, TargetSet};
use crate::linalg::{sub, to_f64};
use crate::model::{load_model_file, WalkModel};
use crate::montecarlo::{default_horizon, mc_green, mc_hitting, quasipotential_tilt, SamplerConfig};
use crate::quasipotential::{quasipotential, rate_finite_t, Method, QuasipotentialResult};
use crate::verify::verify_model;

#[derive(Debug, Parser)]
#[command(name = "greenldp", version, about = "Quasipotentials and Green's functions of lattice random walks")]
struct Cli {
    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write data here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ModelArg {
    /// Model file (TOML).
    #[arg(long)]
    model: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Jump generating function φ(a), Λ(a) = log φ(a) and ∇Λ(a).
    Phi {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, allow_hyphen_values = true)]
        a: Reals,
    },
    /// Finite-horizon rate T·Λ*((q' − q)/T).
    Rate {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long = "T")]
        t: f64,
        #[arg(long, allow_hyphen_values = true)]
        q: Reals,
        #[arg(long = "q-prime", allow_hyphen_values = true)]
        q_prime: Reals,
    },
    /// Quasipotential I(q, q').
    Qpot {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, allow_hyphen_values = true)]
        q: Reals,
        #[arg(long = "q-prime", allow_hyphen_values = true)]
        q_prime: Reals,
        #[arg(long, value_enum, default_value_t = MethodArg::InfT)]
        method: MethodArg,
    },
    /// Green's function G(z, nB(q', δ)), or G_R when --R is given.
    Green {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, allow_hyphen_values = true)]
        z: Option<Ints>,
        #[arg(long = "q-prime", allow_hyphen_values = true)]
        q_prime: Reals,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        n: u64,
        #[arg(long = "R")]
        r: Option<f64>,
        /// Fixed number of steps (with --R only).
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = crate::green::DEFAULT_CELL_CAP)]
        cell_cap: usize,
        /// Dump the per-time target mass as a binary profile.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Decay-rate scan of scaled Green's measures (CSV); with --R, a
    /// localization scan instead.
    Scan {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, allow_hyphen_values = true)]
        q: Option<Reals>,
        #[arg(long = "q-prime", allow_hyphen_values = true)]
        q_prime: Reals,
        #[arg(long)]
        delta: f64,
        #[arg(long = "n-grid")]
        n_grid: Option<Counts>,
        #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
        backend: BackendArg,
        #[arg(long, default_value_t = 100_000)]
        paths: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = crate::green::DEFAULT_CELL_CAP)]
        cell_cap: usize,
        /// Localization radii (scaled units).
        #[arg(long = "R")]
        r: Option<Reals>,
        /// Decay level for the localization scan.
        #[arg(long = "A")]
        a_level: Option<f64>,
        /// Scale for the localization scan.
        #[arg(long)]
        n: Option<u64>,
    },
    /// Importance-sampling estimate of a Green's measure, or of a hitting
    /// probability with --hit.
    Mc {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, allow_hyphen_values = true)]
        z: Option<Ints>,
        #[arg(long = "q-prime", allow_hyphen_values = true)]
        q_prime: Option<Reals>,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        n: u64,
        /// Hitting target z'.
        #[arg(long, allow_hyphen_values = true)]
        hit: Option<Ints>,
        /// Tilt (default: the quasipotential maximizer towards the target).
        #[arg(long, allow_hyphen_values = true)]
        a: Option<Reals>,
        #[arg(long, default_value_t = 100_000)]
        paths: u64,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Short- and long-time cutoff constants with their empirical checks.
    Cutoffs {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long = "A")]
        a_level: f64,
        #[arg(long = "T", default_value_t = 1.0)]
        t: f64,
        #[arg(long, allow_hyphen_values = true)]
        q: Option<Reals>,
        #[arg(long = "q-prime", allow_hyphen_values = true)]
        q_prime: Reals,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long = "v-radius", default_value_t = 1.0)]
        v_radius: f64,
        #[arg(long = "n-grid")]
        n_grid: Option<Counts>,
    },
    /// Rate-function identities, cross-method agreement, the communication
    /// bound and Monte Carlo consistency for one model.
    Verify {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    InfT,
    Support,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Auto,
    Exact,
    Mc,
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| format!("cannot parse {x:?} in {s:?}")))
        .collect()
}

/// Comma-separated decimals, e.g. `0.5,-1`.
#[derive(Debug, Clone)]
struct Reals(Vec<f64>);

impl std::str::FromStr for Reals {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v: Vec<f64> = parse_list(s)?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(format!("non-finite entry in {s:?}"));
        }
        Ok(Self(v))
    }
}

/// Comma-separated lattice coordinates.
#[derive(Debug, Clone)]
struct Ints(Vec<i64>);

impl std::str::FromStr for Ints {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_list(s).map(Self)
    }
}

/// Comma-separated positive integers.
#[derive(Debug, Clone)]
struct Counts(Vec<u64>);

impl std::str::FromStr for Counts {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_list(s).map(Self)
    }
}

/// Plain decimal for ordinary magnitudes, exponent form for tiny or huge ones.
struct Num(f64);

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let x = self.0;
        if x != 0.0 && x.is_finite() && !(1e-4..1e15).contains(&x.abs()) {
            write!(f, "{x:e}")
        } else {
            write!(f, "{x}")
        }
    }
}

fn fmt_vec<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Failure of a subcommand, mapped to an exit code.
enum Failure {
    Input(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_computational() {
            Failure::Compute(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

/// Runs the CLI with process stdout/stderr and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start thread pool: {e}");
            return 1;
        }
    };
    let mut buffer = Vec::new();
    let mut notes = Vec::new();
    let result = pool.install(|| dispatch(&cli.command, &mut buffer, &mut notes));
    let _ = err.write_all(&notes);
    // partial reports (e.g. failed verification lines) are still emitted
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &buffer).map_err(Failure::from),
        None => out.write_all(&buffer).map_err(Failure::from),
    };
    match result.and(written) {
        Ok(()) => 0,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Compute(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

fn load(arg: &ModelArg) -> Result<WalkModel, Failure> {
    Ok(load_model_file(&arg.model)?)
}

fn origin(model: &WalkModel) -> Vec<f64> {
    vec![0.0; model.dim()]
}

fn print_qpot(out: &mut Vec<u8>, r: &QuasipotentialResult) -> std::io::Result<()> {
    let method = match r.method {
        Method::InfOverT => "inf-t",
        Method::SupportFunction => "support",
    };
    writeln!(out, "method = {method}")?;
    writeln!(out, "value = {}", Num(r.value))?;
    writeln!(out, "t_star = {}", Num(r.t_star))?;
    writeln!(out, "a_star = {}", fmt_vec(&r.a_star))?;
    writeln!(out, "converged = {}", r.converged)
}

fn dispatch(cmd: &Command, out: &mut Vec<u8>, err: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Command::Phi { model, a } => {
            let m = load(model)?;
            let e = phi(&m, &a.0)?;
            writeln!(out, "phi = {}", Num(e.phi))?;
            writeln!(out, "lambda = {}", Num(e.lambda))?;
            writeln!(out, "grad = {}", fmt_vec(&e.grad))?;
        }
        Command::Rate { model, t, q, q_prime } => {
            let m = load(model)?;
            let r = rate_finite_t(&m, *t, &q.0, &q_prime.0)?;
            writeln!(out, "value = {}", Num(r.value))?;
        }
        Command::Qpot {
            model,
            q,
            q_prime,
            method,
        } => {
            let m = load(model)?;
            let (q, q_prime) = (&q.0, &q_prime.0);
            match method {
                MethodArg::InfT => print_qpot(out, &quasipotential(&m, q, q_prime, Method::InfOverT)?)?,
                MethodArg::Support => print_qpot(out, &quasipotential(&m, q, q_prime, Method::SupportFunction)?)?,
                MethodArg::Both => {
                    let a = quasipotential(&m, q, q_prime, Method::InfOverT)?;
                    let b = quasipotential(&m, q, q_prime, Method::SupportFunction)?;
                    print_qpot(out, &a)?;
                    print_qpot(out, &b)?;
                    writeln!(out, "difference = {}", Num((a.value - b.value).abs()))?;
                }
            }
        }
        Command::Green {
            model,
            z,
            q_prime,
            delta,
            n,
            r,
            horizon,
            tol,
            cell_cap,
            profile,
        } => {
            let m = load(model)?;
            let z = z.as_ref().map_or_else(|| vec![0; m.dim()], |z| z.0.clone());
            let target = TargetSet::new(q_prime.0.clone(), *delta, *n)?;
            let opts = GreenOptions {
                cell_cap: *cell_cap,
                keep_profile: profile.is_some(),
            };
            let res = match r {
                Some(radius) => green_truncated_with(
                    &m,
                    &GreenQuery {
                        source: z,
                        target,
                        truncation: *radius,
                        horizon: horizon.map_or(Horizon::Auto, Horizon::Fixed),
                    },
                    &opts,
                )?,
                None => {
                    if horizon.is_some() {
                        return Err(Failure::Input("--horizon requires --R".into()));
                    }
                    green_full_with(&m, &z, &target, *tol, &opts)?
                }
            };
            writeln!(out, "value = {}", Num(res.value))?;
            writeln!(out, "truncated = {}", res.truncation_flag)?;
            writeln!(out, "R = {}", res.truncation)?;
            writeln!(out, "steps = {}", res.steps)?;
            writeln!(out, "horizon_tail_bound = {}", Num(res.horizon_tail_bound))?;
            writeln!(out, "error_estimate = {}", Num(res.error_estimate))?;
            if res.stopped_at_cap {
                writeln!(err, "warning: step cap reached before the stopping rule")?;
            }
            if let (Some(path), Some(p)) = (profile, &res.visits_profile) {
                let file = std::fs::File::create(path)?;
                write_profile(std::io::BufWriter::new(file), p)?;
            }
        }
        Command::Scan {
            model,
            q,
            q_prime,
            delta,
            n_grid,
            backend,
            paths,
            seed,
            cell_cap,
            r,
            a_level,
            n,
        } => {
            let m = load(model)?;
            let q0 = q.as_ref().map_or_else(|| origin(&m), |q| q.0.clone());
            let q_prime = &q_prime.0;
            if let Some(Reals(radii)) = r {
                let a_level = a_level.ok_or_else(|| Failure::Input("localization scan needs --A".into()))?;
                let n = n.ok_or_else(|| Failure::Input("localization scan needs --n".into()))?;
                let target = TargetSet::new(q_prime.clone(), *delta, n)?;
                let rep = localization_scan(&m, &q0, &target, a_level, radii, n)?;
                writeln!(out, "{CSV_HEADER}")?;
                for row in &rep.rows {
                    writeln!(out, "{},{},{},{},{},exact,", n, row.radius, delta, -row.log_rate, a_level)?;
                }
                match rep.smallest_radius {
                    Some(radius) => writeln!(err, "smallest R with gap ≤ e^(-An): {radius}")?,
                    None => writeln!(err, "no R in the grid reaches gap ≤ e^(-An)")?,
                }
                if !rep.monotone {
                    writeln!(err, "warning: gap is not monotone in R")?;
                }
            } else {
                let grid = n_grid
                    .as_ref()
                    .map(|g| g.0.clone())
                    .ok_or_else(|| Failure::Input("scan needs --n-grid".into()))?;
                let opts = ScanOptions {
                    backend: match backend {
                        BackendArg::Auto => BackendChoice::Auto,
                        BackendArg::Exact => BackendChoice::Exact,
                        BackendArg::Mc => BackendChoice::MonteCarlo,
                    },
                    green: GreenOptions {
                        cell_cap: *cell_cap,
                        keep_profile: false,
                    },
                    mc_paths: *paths,
                    seed: *seed,
                };
                let s = ldp_scan(&m, &q0, q_prime, *delta, &grid, &opts)?;
                out.extend_from_slice(scan_csv(&s).as_bytes());
                writeln!(
                    err,
                    "slope_fit = {} ± {}, predicted = {} (open ball {})",
                    s.slope_fit, s.fit_stderr, s.predicted, s.predicted_open
                )?;
            }
        }
        Command::Mc {
            model,
            z,
            q_prime,
            delta,
            n,
            hit,
            a,
            paths,
            horizon,
            seed,
        } => {
            let m = load(model)?;
            let z = z.as_ref().map_or_else(|| vec![0; m.dim()], |z| z.0.clone());
            if let Some(Ints(zp)) = hit {
                let disp = sub(&to_f64(zp), &to_f64(&z));
                let tilt = match a {
                    Some(a) => a.0.clone(),
                    None => quasipotential_tilt(&m, &disp)?,
                };
                let target = TargetSet::point(zp);
                let cfg = SamplerConfig {
                    seed: *seed,
                    paths: *paths,
                    horizon: horizon.unwrap_or_else(|| default_horizon(&z, &target)),
                    tilt,
                };
                let r = mc_hitting(&m, &z, zp, &cfg)?;
                writeln!(out, "mean = {}", Num(r.estimate.mean))?;
                writeln!(out, "std_error = {}", Num(r.estimate.std_error))?;
                writeln!(out, "ess = {}", Num(r.estimate.ess))?;
                writeln!(out, "theta = {}", Num(r.theta))?;
                writeln!(out, "log_bound = {}", Num(r.log_bound))?;
                writeln!(out, "log_ratio = {}", Num(r.log_ratio))?;
                writeln!(out, "bound_holds = {}", r.bound_holds(3.0))?;
                if r.estimate.low_ess {
                    writeln!(err, "warning: effective sample size {} is low", r.estimate.ess)?;
                }
            } else {
                let qp = q_prime
                    .as_ref()
                    .map(|q| q.0.clone())
                    .ok_or_else(|| Failure::Input("mc needs --q-prime or --hit".into()))?;
                let target = TargetSet::new(qp, *delta, *n)?;
                let tilt = match a {
                    Some(a) => a.0.clone(),
                    None => quasipotential_tilt(&m, &sub(&target.scaled_center(), &to_f64(&z)))?,
                };
                let cfg = SamplerConfig {
                    seed: *seed,
                    paths: *paths,
                    horizon: horizon.unwrap_or_else(|| default_horizon(&z, &target)),
                    tilt,
                };
                let e = mc_green(&m, &z, &target, &cfg)?;
                writeln!(out, "mean = {}", Num(e.mean))?;
                writeln!(out, "std_error = {}", Num(e.std_error))?;
                writeln!(out, "paths = {}", e.paths_used)?;
                writeln!(out, "ess = {}", Num(e.ess))?;
                writeln!(out, "tilt = {}", fmt_vec(&cfg.tilt))?;
                if e.low_ess {
                    writeln!(err, "warning: effective sample size {} is low", e.ess)?;
                }
            }
        }
        Command::Cutoffs {
            model,
            a_level,
            t,
            q,
            q_prime,
            delta,
            v_radius,
            n_grid,
        } => {
            let m = load(model)?;
            let q = q.as_ref().map_or_else(|| origin(&m), |q| q.0.clone());
            let grid = n_grid.as_ref().map_or_else(|| vec![20, 40], |g| g.0.clone());
            let rep = cutoffs(&m, *a_level, *t, &q, &q_prime.0, *delta, *v_radius, &grid)?;
            writeln!(out, "A = {}", a_level)?;
            writeln!(out, "c = {}", rep.short.c)?;
            writeln!(out, "M_c = {}", Num(rep.short.m_c))?;
            writeln!(out, "kappa = {}", Num(rep.short.kappa))?;
            writeln!(out, "delta0 = {}", rep.long.delta0)?;
            writeln!(out, "K = {}", rep.long.k)?;
            writeln!(out, "empirical_short = {}", Num(rep.short.empirical))?;
            writeln!(out, "empirical_long = {}", Num(rep.long.empirical))?;
            if !rep.short.m_c_exact {
                writeln!(err, "note: M_c from a multistart search on the sphere")?;
            }
            if !(rep.short.holds() && rep.long.holds()) {
                return Err(Failure::Compute("empirical cutoff sums exceed e^(-0.9 A n)".into()));
            }
        }
        Command::Verify { model, samples, seed } => {
            let m = load(model)?;
            let report = verify_model(&m, *samples, *seed)?;
            for c in &report.checks {
                writeln!(
                    out,
                    "{} {} value={} tolerance={}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    Num(c.value),
                    Num(c.tolerance)
                )?;
            }
            for (name, reason) in &report.skipped {
                writeln!(out, "SKIP {name} ({reason})")?;
            }
            if !report.passed() {
                return Err(Failure::Compute("verification failed".into()));
            }
        }
    }
    Ok(())
}
