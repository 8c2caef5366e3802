//! Large-deviation experiments on scaled Green's measures: decay-rate scans
//! against the quasipotential, short- and long-time cutoff constants with
//! their empirical checks, and localization scans. Reports serialize to CSV.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use crate::cgf::{legendre, m_c};
use crate::error::{Error, Result};
use crate::green::{
    green_truncated_with, initial_radius, localization_gaps_with, scaled_measure_result, scaled_source, GreenOptions,
    GreenQuery, Horizon, TargetSet,
};
use crate::linalg::{dot, norm, scale, sub, to_f64};
use crate::model::{WalkModel, ZERO_DRIFT_TOL};
use crate::montecarlo::{default_horizon, mc_green, quasipotential_tilt, SamplerConfig};
use crate::quasipotential::quasipotential_support;

/// Points per angular axis when searching the ball boundary.
pub const SPHERE_GRID: usize = 513;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Exact,
    MonteCarlo,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::MonteCarlo => "mc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendChoice {
    /// Exact solve, falling back to Monte Carlo when the lattice exceeds the cap.
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    pub backend: BackendChoice,
    pub green: GreenOptions,
    pub mc_paths: u64,
    pub seed: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            backend: BackendChoice::Auto,
            green: GreenOptions::default(),
            mc_paths: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub n: u64,
    /// Final truncation radius of the exact solve.
    pub radius: Option<f64>,
    pub delta: f64,
    pub measure: f64,
    /// `−(1/n) log μ_n`; `+∞` when the measure is zero.
    pub log_measure: f64,
    pub backend: Backend,
    /// Standard error of `log_measure` (Monte Carlo only).
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticSeries {
    pub q0: Vec<f64>,
    pub q_prime: Vec<f64>,
    pub delta: f64,
    pub n_values: Vec<u64>,
    pub log_measures: Vec<f64>,
    pub rows: Vec<ScanRow>,
    /// Infimum of `I(q0, ·)` over the closed ball.
    pub predicted: f64,
    /// Infimum of `I(q0, ·)` over the open ball.
    pub predicted_open: f64,
    /// Intercept `α` of the least-squares fit `α + β/n`.
    pub slope_fit: f64,
    pub fit_correction: f64,
    /// Standard error of `α`; `+∞` with fewer than three fitted points.
    pub fit_stderr: f64,
    /// Scales at which the measure vanished; excluded from the fit.
    pub excluded: Vec<u64>,
}

impl DiagnosticSeries {
    pub fn relative_error(&self) -> f64 {
        (self.slope_fit - self.predicted).abs() / self.predicted.abs().max(f64::MIN_POSITIVE)
    }
}

/// Least-squares fit of `y ≈ α + β/n`; returns `(α, β, stderr(α))`.
pub fn fit_inverse_n(ns: &[u64], ys: &[f64]) -> (f64, f64, f64) {
    let m = ns.len();
    match m {
        0 => (f64::NAN, f64::NAN, f64::INFINITY),
        1 => (ys[0], 0.0, f64::INFINITY),
        _ => {
            let xs: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
            let mf = m as f64;
            let sx: f64 = xs.iter().sum();
            let sy: f64 = ys.iter().sum();
            let sxx: f64 = xs.iter().map(|x| x * x).sum();
            let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
            let det = mf * sxx - sx * sx;
            let beta = (mf * sxy - sx * sy) / det;
            let alpha = (sy - beta * sx) / mf;
            let stderr = if m > 2 {
                let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - alpha - beta * x).powi(2)).sum();
                (rss / (mf - 2.0) * sxx / det).sqrt()
            } else {
                f64::INFINITY
            };
            (alpha, beta, stderr)
        }
    }
}

fn require_drifted(model: &WalkModel, what: &str) -> Result<()> {
    if !model.is_homogeneous() {
        return Err(Error::Hypothesis(format!("{what} needs a full-lattice (homogeneous) model")));
    }
    if norm(&model.drift()) <= ZERO_DRIFT_TOL {
        return Err(Error::Hypothesis(format!(
            "{what} needs a nonzero drift: with zero drift I_T(0,0) = 0"
        )));
    }
    Ok(())
}

/// Points on the sphere `|u| = 1` in dimension `d`, on an angular grid of
/// `SPHERE_GRID` points per axis, restricted to `[lo, hi]` per angle.
fn sphere_points(d: usize, ranges: &[(f64, f64)]) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![-1.0], vec![1.0]],
        2 => {
            let (lo, hi) = ranges[0];
            (0..SPHERE_GRID)
                .map(|k| {
                    let t = lo + (hi - lo) * k as f64 / (SPHERE_GRID - 1) as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        }
        _ => {
            // nested angles; the grid is coarser per axis in high dimension
            let per = ((SPHERE_GRID as f64).powf(2.0 / (d - 1) as f64) as usize).clamp(5, SPHERE_GRID);
            let mut out = vec![vec![]];
            for &(lo, hi) in ranges {
                let mut next = Vec::new();
                for angles in &out {
                    for k in 0..per {
                        let mut a = angles.clone();
                        a.push(lo + (hi - lo) * k as f64 / (per - 1) as f64);
                        next.push(a);
                    }
                }
                out = next;
            }
            out.iter().map(|angles| spherical(angles, d)).collect()
        }
    }
}

fn spherical(angles: &[f64], d: usize) -> Vec<f64> {
    let mut x = vec![0.0; d];
    let mut s = 1.0;
    for (i, &a) in angles.iter().enumerate() {
        x[i] = s * a.cos();
        s *= a.sin();
    }
    x[d - 1] = s;
    x
}

fn full_ranges(d: usize) -> Vec<(f64, f64)> {
    use std::f64::consts::PI;
    match d {
        1 => vec![],
        _ => {
            let mut r = vec![(0.0, PI); d - 2];
            r.push((0.0, 2.0 * PI));
            r
        }
    }
}

/// Infimum of `I(q0, ·)` over the ball of radius `delta` around `center`.
///
/// `I(q0, ·)` is convex and vanishes exactly on the ray `q0 + t·m`, `t ≥ 0`,
/// so the infimum is zero when the ray meets the ball and is otherwise
/// attained on the sphere, which is searched on an angular grid refined once
/// around the best point.
pub fn ball_infimum(model: &WalkModel, q0: &[f64], center: &[f64], delta: f64, open: bool) -> Result<f64> {
    let d = model.dim();
    let m = model.drift();
    let mm = dot(&m, &m);
    let rel = sub(center, q0);
    let t = (dot(&rel, &m) / mm).max(0.0);
    let gap = norm(&sub(&rel, &scale(&m, t)));
    if (open && gap < delta) || (!open && gap <= delta) {
        return Ok(0.0);
    }
    let radius = if open { delta * (1.0 - 1e-9) } else { delta };
    let eval = |u: &Vec<f64>| -> Result<f64> {
        let target: Vec<f64> = rel.iter().zip(u).map(|(r, ui)| r + radius * ui).collect();
        Ok(quasipotential_support(model, &target)?.value)
    };
    let best = |pts: &[Vec<f64>]| -> Result<(usize, f64)> {
        let vals = pts.par_iter().map(eval).collect::<Result<Vec<f64>>>()?;
        Ok(vals
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc }))
    };
    let ranges = full_ranges(d);
    let coarse = sphere_points(d, &ranges);
    let (i, v) = best(&coarse)?;
    if d == 1 {
        return Ok(v);
    }
    // refine: one grid cell either side of the best angle on every axis
    let angles = angles_of(&coarse[i]);
    let per = if d == 2 {
        SPHERE_GRID
    } else {
        ((SPHERE_GRID as f64).powf(2.0 / (d - 1) as f64) as usize).clamp(5, SPHERE_GRID)
    };
    let local: Vec<(f64, f64)> = ranges
        .iter()
        .zip(&angles)
        .map(|(&(lo, hi), &a)| {
            let h = (hi - lo) / (per - 1) as f64;
            (a - h, a + h)
        })
        .collect();
    let fine = sphere_points(d, &local);
    let (_, w) = best(&fine)?;
    Ok(v.min(w))
}

fn angles_of(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut out = Vec::with_capacity(d - 1);
    for i in 0..d - 2 {
        let tail = norm(&x[i..]);
        out.push(if tail > 0.0 { (x[i] / tail).clamp(-1.0, 1.0).acos() } else { 0.0 });
    }
    let mut last = x[d - 1].atan2(x[d - 2]);
    if last < 0.0 {
        last += 2.0 * std::f64::consts::PI;
    }
    out.push(last);
    out
}

fn measure_at(
    model: &WalkModel,
    n: u64,
    q0: &[f64],
    target: &TargetSet,
    opts: &ScanOptions,
) -> Result<(f64, Option<f64>, Backend, Option<f64>)> {
    let exact = || scaled_measure_result(model, n, q0, target, &opts.green).map(|r| (r.value, r.truncation));
    let mc = || -> Result<(f64, f64)> {
        let z = scaled_source(n, q0);
        let disp = sub(&target.scaled_center(), &to_f64(&z));
        let cfg = SamplerConfig {
            seed: opts.seed.wrapping_add(n),
            paths: opts.mc_paths,
            horizon: default_horizon(&z, target),
            tilt: quasipotential_tilt(model, &disp)?,
        };
        let e = mc_green(model, &z, target, &cfg)?;
        Ok((e.mean, e.std_error))
    };
    match opts.backend {
        BackendChoice::Exact => exact().map(|(v, r)| (v, Some(r), Backend::Exact, None)),
        BackendChoice::MonteCarlo => mc().map(|(v, s)| (v, None, Backend::MonteCarlo, Some(s))),
        BackendChoice::Auto => match exact() {
            Ok((v, r)) => Ok((v, Some(r), Backend::Exact, None)),
            Err(Error::MemoryCap { .. }) => mc().map(|(v, s)| (v, None, Backend::MonteCarlo, Some(s))),
            Err(e) => Err(e),
        },
    }
}

/// Scaled Green's measures `μ_n(B(q', δ))` over `n_grid`, their decay rates
/// `−(1/n) log μ_n`, the fitted limit and the quasipotential prediction.
pub fn ldp_scan(
    model: &WalkModel,
    q0: &[f64],
    q_prime: &[f64],
    delta: f64,
    n_grid: &[u64],
    opts: &ScanOptions,
) -> Result<DiagnosticSeries> {
    require_drifted(model, "ldp scan")?;
    let d = model.dim();
    if q0.len() != d || q_prime.len() != d {
        return Err(Error::Invalid(format!("q0 and q' must have dimension {d}")));
    }
    if !(delta > 0.0) {
        return Err(Error::Invalid(format!("delta must be positive, got {delta}")));
    }
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] == 0 {
        return Err(Error::Invalid("n grid must be a nonempty strictly increasing list of positive integers".into()));
    }

    let rows = n_grid
        .par_iter()
        .map(|&n| -> Result<ScanRow> {
            let target = TargetSet::new(q_prime.to_vec(), delta, n)?;
            let (measure, radius, backend, se) = measure_at(model, n, q0, &target, opts)?;
            let nf = n as f64;
            let log_measure = if measure > 0.0 { -measure.ln() / nf } else { f64::INFINITY };
            let std_error = se.map(|s| if measure > 0.0 { s / (nf * measure) } else { f64::INFINITY });
            Ok(ScanRow {
                n,
                radius,
                delta,
                measure,
                log_measure,
                backend,
                std_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let (fit_n, fit_y): (Vec<u64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.log_measure.is_finite())
        .map(|r| (r.n, r.log_measure))
        .unzip();
    let excluded = rows.iter().filter(|r| !r.log_measure.is_finite()).map(|r| r.n).collect();
    let (alpha, beta, stderr) = fit_inverse_n(&fit_n, &fit_y);

    Ok(DiagnosticSeries {
        q0: q0.to_vec(),
        q_prime: q_prime.to_vec(),
        delta,
        n_values: n_grid.to_vec(),
        log_measures: rows.iter().map(|r| r.log_measure).collect(),
        predicted: ball_infimum(model, q0, q_prime, delta, false)?,
        predicted_open: ball_infimum(model, q0, q_prime, delta, true)?,
        slope_fit: alpha,
        fit_correction: beta,
        fit_stderr: stderr,
        excluded,
        rows,
    })
}

pub const CSV_HEADER: &str = "n,R,delta,log_measure,predicted,backend,std_error";

/// One row per scale: `n,R,delta,log_measure,predicted,backend,std_error`,
/// LF line endings, shortest round-trip decimals.
pub fn scan_csv(series: &DiagnosticSeries) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &series.rows {
        let radius = r.radius.map(|x| format!("{x}")).unwrap_or_default();
        let se = r.std_error.map(|x| format!("{x}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n,
            radius,
            r.delta,
            r.log_measure,
            series.predicted,
            r.backend.as_str(),
            se
        );
    }
    out
}

pub fn write_scan_csv(mut w: impl Write, series: &DiagnosticSeries) -> std::io::Result<()> {
    w.write_all(scan_csv(series).as_bytes())
}

/// `(1/n) log` of a partial Green sum at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffCheck {
    pub n: u64,
    /// Time cut: the sum runs over `t ≤ cut` (short) or `t > cut` (long).
    pub cut: u64,
    pub sum: f64,
    pub log_rate: f64,
}

fn log_rate(sum: f64, n: u64) -> f64 {
    if sum > 0.0 {
        sum.ln() / n as f64
    } else {
        f64::NEG_INFINITY
    }
}

/// Short-time cutoff: `c = 2A/|q' − q|`, `M_c = sup_{|a| ≤ c} φ(a)`,
/// `κ = A / (2 log M_c)`, and the observed `(1/n) log Σ_{t ≤ κn} P_z(Z(t) ∈ nB(q', δ))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortTimeCutoff {
    pub a_level: f64,
    pub c: f64,
    pub m_c: f64,
    /// `false` when `M_c` came from a multistart search rather than a closed form.
    pub m_c_exact: bool,
    pub kappa: f64,
    pub delta: f64,
    pub checks: Vec<CutoffCheck>,
    /// Largest `log_rate` over the checks.
    pub empirical: f64,
}

impl ShortTimeCutoff {
    /// `empirical ≤ −0.9 A`.
    pub fn holds(&self) -> bool {
        self.empirical <= -0.9 * self.a_level
    }
}

/// Long-time cutoff: `δ₀` and `K = max{(|q| + sup_V |q'| + 1)/δ₀, 2AT/I_T(0,0)}`
/// with `V` the ball of radius `v_radius` around the origin, and the observed
/// `(1/n) log Σ_{t > Kn} P_z(Z(t) ∈ nV)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LongTimeCutoff {
    pub a_level: f64,
    pub horizon: f64,
    /// `Λ*(0)`, so that `I_T(0,0) = T·Λ*(0)`.
    pub rate_at_rest: f64,
    pub delta0: f64,
    pub k: f64,
    pub v_radius: f64,
    pub checks: Vec<CutoffCheck>,
    pub empirical: f64,
}

impl LongTimeCutoff {
    pub fn holds(&self) -> bool {
        self.empirical <= -0.9 * self.a_level
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffReport {
    pub short: ShortTimeCutoff,
    pub long: LongTimeCutoff,
}

fn max_jump(model: &WalkModel) -> f64 {
    model
        .boundary()
        .map_or(0.0, |b| b.max_step())
        .max(model.interior().max_step())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Invalid(format!("{name} must be positive, got {x}")));
    }
    Ok(())
}

pub fn kappa_formula(a_level: f64, m_c: f64) -> f64 {
    a_level / (2.0 * m_c.ln())
}

pub fn k_formula(q_norm: f64, v_radius: f64, delta0: f64, a_level: f64, horizon: f64, rate_at_rest: f64) -> f64 {
    let spatial = (q_norm + v_radius + 1.0) / delta0;
    let temporal = 2.0 * a_level * horizon / (horizon * rate_at_rest);
    spatial.max(temporal)
}

pub fn cutoff_kappa(
    model: &WalkModel,
    a_level: f64,
    q: &[f64],
    q_prime: &[f64],
    delta: f64,
    n_grid: &[u64],
) -> Result<ShortTimeCutoff> {
    if !model.is_homogeneous() {
        return Err(Error::Hypothesis("short-time cutoff needs a homogeneous model".into()));
    }
    check_positive("A", a_level)?;
    check_positive("delta", delta)?;
    let dist = norm(&sub(q_prime, q));
    if dist == 0.0 {
        return Err(Error::Invalid("short-time cutoff needs q ≠ q'".into()));
    }
    if model.interior().len() == 1 {
        return Err(Error::Hypothesis("M_c ≤ 1: the jump law is degenerate (single support point)".into()));
    }
    let c = 2.0 * a_level / dist;
    let mc = m_c(model, c)?;
    let kappa = kappa_formula(a_level, mc.value);

    let checks = n_grid
        .iter()
        .map(|&n| -> Result<CutoffCheck> {
            let z = scaled_source(n, q);
            let cut = (kappa * n as f64).floor() as u64;
            let target = TargetSet::new(q_prime.to_vec(), delta, n)?;
            // no path can leave this ball within `cut` steps
            let radius = norm(&to_f64(&z)) + max_jump(model) * cut as f64 + n as f64 * (norm(q_prime) + delta) + 2.0;
            let r = green_truncated_with(
                model,
                &GreenQuery {
                    source: z,
                    target,
                    truncation: radius,
                    horizon: Horizon::Fixed(cut),
                },
                &GreenOptions::default(),
            )?;
            Ok(CutoffCheck {
                n,
                cut,
                sum: r.value,
                log_rate: log_rate(r.value, n),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let empirical = checks.iter().map(|c| c.log_rate).fold(f64::NEG_INFINITY, f64::max);
    Ok(ShortTimeCutoff {
        a_level,
        c,
        m_c: mc.value,
        m_c_exact: mc.exact,
        kappa,
        delta,
        checks,
        empirical,
    })
}

/// Grid points of the closed ball of radius `r` around the origin.
fn ball_grid(d: usize, r: f64) -> Vec<Vec<f64>> {
    let per: usize = match d {
        1 => 513,
        2 => 129,
        _ => 17,
    };
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let v: Vec<f64> = idx
            .iter()
            .map(|&i| -r + 2.0 * r * i as f64 / (per - 1) as f64)
            .collect();
        if norm(&v) <= r {
            out.push(v);
        }
        let mut k = d;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < per {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Largest `2^{-k}` such that `Λ* ≥ Λ*(0)/2` on the ball of radius `2^{-k}/T`.
pub fn delta0(model: &WalkModel, horizon: f64) -> Result<f64> {
    let rest = legendre(model, &vec![0.0; model.dim()])?.value;
    for k in 0..64 {
        let delta = 0.5f64.powi(k);
        let pts = ball_grid(model.dim(), delta / horizon);
        let values = pts
            .par_iter()
            .map(|v| legendre(model, v).map(|r| r.value))
            .collect::<Result<Vec<f64>>>()?;
        let inf = values.iter().cloned().fold(f64::INFINITY, f64::min);
        if inf >= rest / 2.0 {
            return Ok(delta);
        }
    }
    Err(Error::NotConverged("no dyadic δ₀ ≥ 2^-63 satisfies the rate criterion".into()))
}

pub fn cutoff_k(
    model: &WalkModel,
    a_level: f64,
    horizon: f64,
    q: &[f64],
    v_radius: f64,
    n_grid: &[u64],
) -> Result<LongTimeCutoff> {
    require_drifted(model, "long-time cutoff")?;
    check_positive("A", a_level)?;
    check_positive("T", horizon)?;
    check_positive("V radius", v_radius)?;
    let rest = legendre(model, &vec![0.0; model.dim()])?.value;
    if !(rest > 0.0) {
        return Err(Error::Hypothesis("I_T(0,0) = 0: the long-time cutoff does not exist".into()));
    }
    let d0 = delta0(model, horizon)?;
    let k = k_formula(norm(q), v_radius, d0, a_level, horizon, rest);

    let checks = n_grid
        .iter()
        .map(|&n| -> Result<CutoffCheck> {
            let z = scaled_source(n, q);
            let cut = (k * n as f64).floor() as u64;
            let target = TargetSet::new(vec![0.0; model.dim()], v_radius, n)?;
            let tail = long_time_tail(model, &z, &target, cut)?;
            Ok(CutoffCheck {
                n,
                cut,
                sum: tail,
                log_rate: log_rate(tail, n),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let empirical = checks.iter().map(|c| c.log_rate).fold(f64::NEG_INFINITY, f64::max);
    Ok(LongTimeCutoff {
        a_level,
        horizon,
        rate_at_rest: rest,
        delta0: d0,
        k,
        v_radius,
        checks,
        empirical,
    })
}

/// Upper estimate of `Σ_{t > cut} P_z(Z(t) ∈ B)`: the computed tail plus the
/// horizon tail bound, with the truncation radius doubled until stable.
fn long_time_tail(model: &WalkModel, z: &[i64], target: &TargetSet, cut: u64) -> Result<f64> {
    let opts = GreenOptions {
        keep_profile: true,
        ..GreenOptions::default()
    };
    let eval = |radius: f64| -> Result<f64> {
        let steps = (cut + 1).max((50.0 * radius).ceil() as u64);
        let r = green_truncated_with(
            model,
            &GreenQuery {
                source: z.to_vec(),
                target: target.clone(),
                truncation: radius,
                horizon: Horizon::Fixed(steps),
            },
            &opts,
        )?;
        Ok(r.tail_sum(cut).unwrap_or(0.0) + r.horizon_tail_bound)
    };
    let mut radius = initial_radius(z, target);
    let mut prev = eval(radius)?;
    loop {
        radius *= 2.0;
        let next = eval(radius)?;
        if (next - prev).abs() <= 1e-6 * next || (next == 0.0 && prev == 0.0) {
            return Ok(next);
        }
        prev = next;
    }
}

pub fn cutoffs(
    model: &WalkModel,
    a_level: f64,
    horizon: f64,
    q: &[f64],
    q_prime: &[f64],
    delta: f64,
    v_radius: f64,
    n_grid: &[u64],
) -> Result<CutoffReport> {
    Ok(CutoffReport {
        short: cutoff_kappa(model, a_level, q, q_prime, delta, n_grid)?,
        long: cutoff_k(model, a_level, horizon, q, v_radius, n_grid)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationRow {
    pub radius: f64,
    pub gap: f64,
    /// `(1/n) log gap`.
    pub log_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationReport {
    pub n: u64,
    pub a_level: f64,
    pub rows: Vec<LocalizationRow>,
    /// Smallest radius with `log_rate ≤ −A`.
    pub smallest_radius: Option<f64>,
    /// Smallest radius with `log_rate ≤ −0.9 A`.
    pub smallest_radius_relaxed: Option<f64>,
    /// Gap nonincreasing along the (sorted) radius grid.
    pub monotone: bool,
}

/// `(1/n) log(G(z_n, nB) − G_{nR}(z_n, nB))` over a grid of radii `R`.
pub fn localization_scan(
    model: &WalkModel,
    q0: &[f64],
    target: &TargetSet,
    a_level: f64,
    radii: &[f64],
    n: u64,
) -> Result<LocalizationReport> {
    require_drifted(model, "localization scan")?;
    check_positive("A", a_level)?;
    let mut sorted = radii.to_vec();
    sorted.sort_by(f64::total_cmp);
    let gaps = localization_gaps_with(model, n, q0, target, &sorted, &GreenOptions::default())?;
    let rows: Vec<LocalizationRow> = sorted
        .iter()
        .zip(&gaps)
        .map(|(&radius, &gap)| LocalizationRow {
            radius,
            gap,
            log_rate: log_rate(gap, n),
        })
        .collect();
    let first = |level: f64| rows.iter().find(|r| r.log_rate <= level).map(|r| r.radius);
    Ok(LocalizationReport {
        n,
        a_level,
        smallest_radius: first(-a_level),
        smallest_radius_relaxed: first(-0.9 * a_level),
        monotone: gaps.windows(2).all(|w| w[1] <= w[0]),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walk1d() -> WalkModel {
        WalkModel::homogeneous(vec![vec![1], vec![-1]], vec![0.7, 0.3]).unwrap()
    }

    #[test]
    fn fit_recovers_affine_law() {
        let ns = [10, 20, 40, 80];
        let ys: Vec<f64> = ns.iter().map(|&n| 0.5 + 2.0 / n as f64).collect();
        let (a, b, se) = fit_inverse_n(&ns, &ys);
        assert!((a - 0.5).abs() < 1e-12 && (b - 2.0).abs() < 1e-10 && se < 1e-10);
        let (a1, _, se1) = fit_inverse_n(&[7], &[0.3]);
        assert_eq!(a1, 0.3);
        assert_eq!(se1, f64::INFINITY);
    }

    #[test]
    fn ball_infimum_1d() {
        let m = walk1d();
        let v = ball_infimum(&m, &[0.0], &[-1.0], 0.25, false).unwrap();
        assert!((v - 0.75 * (7.0f64 / 3.0).ln()).abs() < 1e-10);
        assert_eq!(ball_infimum(&m, &[0.0], &[2.0], 0.25, false).unwrap(), 0.0);
    }

    #[test]
    fn ball_infimum_2d_matches_dense_grid() {
        let m = WalkModel::homogeneous(vec![vec![1, 0], vec![0, 1], vec![-1, 0], vec![0, -1]], vec![0.4, 0.3, 0.2, 0.1])
            .unwrap();
        let (c, r) = ([-1.0, 0.0], 0.25);
        let v = ball_infimum(&m, &[0.0, 0.0], &c, r, false).unwrap();
        let mut dense = f64::INFINITY;
        for i in 0..=60 {
            for j in 0..=60 {
                let p = [c[0] - r + r * i as f64 / 30.0, c[1] - r + r * j as f64 / 30.0];
                if norm(&sub(&p, &c)) <= r {
                    dense = dense.min(quasipotential_support(&m, &p).unwrap().value);
                }
            }
        }
        assert!(v <= dense + 1e-12, "{v} vs {dense}");
        assert!(dense - v < 1e-3);
        let open = ball_infimum(&m, &[0.0, 0.0], &c, r, true).unwrap();
        assert!((open - v).abs() < 1e-6);
    }

    #[test]
    fn scan_1d_small_grid() {
        let s = ldp_scan(&walk1d(), &[0.0], &[-1.0], 0.25, &[10, 20, 40], &ScanOptions::default()).unwrap();
        assert_eq!(s.rows.len(), 3);
        assert!(s.relative_error() < 0.05, "{s:?}");
        let csv = scan_csv(&s);
        assert!(csv.starts_with("n,R,delta,log_measure,predicted,backend,std_error\n"));
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(1).unwrap().ends_with(",exact,"));
    }

    #[test]
    fn single_point_scan_has_infinite_stderr() {
        let s = ldp_scan(&walk1d(), &[0.0], &[-1.0], 0.25, &[10], &ScanOptions::default()).unwrap();
        assert_eq!(s.fit_stderr, f64::INFINITY);
        assert_eq!(s.slope_fit, s.log_measures[0]);
    }

    #[test]
    fn kappa_for_the_1d_walk() {
        let r = cutoff_kappa(&walk1d(), 1.0, &[0.0], &[-1.0], 0.1, &[20, 40]).unwrap();
        assert_eq!(r.c, 2.0);
        let phi2 = 0.7 * 2f64.exp() + 0.3 * (-2f64).exp();
        assert!((r.m_c - phi2).abs() < 1e-12);
        assert!((r.kappa - 1.0 / (2.0 * phi2.ln())).abs() < 1e-12);
        assert!(r.holds());
        let doubled = cutoff_kappa(&walk1d(), 2.0, &[0.0], &[-1.0], 0.1, &[]).unwrap();
        assert_eq!(doubled.c, 4.0);
        assert!(doubled.kappa < r.kappa);
    }

    #[test]
    fn long_time_cutoff_1d() {
        let r = cutoff_k(&walk1d(), 1.0, 1.0, &[0.0], 1.0, &[20]).unwrap();
        let rest = -(2.0 * 0.21f64.sqrt()).ln();
        assert!((r.rate_at_rest - rest).abs() < 1e-12);
        // closed-form rate; its infimum on [−δ, δ] sits at the endpoint nearest the drift
        let rate = |v: f64| 0.5 * (1.0 + v) * ((1.0 + v) / 1.4).ln() + 0.5 * (1.0 - v) * ((1.0 - v) / 0.6).ln();
        let oracle = (0..).map(|k| 0.5f64.powi(k)).find(|&d| rate(d) >= rest / 2.0).unwrap();
        assert_eq!(r.delta0, oracle);
        assert!(r.k >= 2.0 / rest);
        assert!(r.holds(), "{r:?}");
    }

    #[test]
    fn zero_drift_refused() {
        let sym = WalkModel::homogeneous(vec![vec![1], vec![-1]], vec![0.5, 0.5]).unwrap();
        match cutoff_k(&sym, 1.0, 1.0, &[0.0], 1.0, &[]) {
            Err(Error::Hypothesis(msg)) => assert!(msg.contains("I_T(0,0) = 0")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn localization_scan_1d() {
        let t = TargetSet::new(vec![-1.0], 0.25, 20).unwrap();
        let r = localization_scan(&walk1d(), &[0.0], &t, 1.0, &[2.0, 3.0, 4.0], 20).unwrap();
        assert!(r.monotone);
        assert!(r.smallest_radius_relaxed.is_some(), "{r:?}");
        assert!(localization_scan(&walk1d(), &[0.0], &t, 1.0, &[1.0], 20).is_err());
    }
}
