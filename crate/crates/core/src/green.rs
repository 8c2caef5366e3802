//! Green's functions `G(z, B) = Σ_t P_z(Z(t) ∈ B)` and their truncations
//! `G_R(z, B) = Σ_t P_z(Z(t) ∈ B, τ_R > t)`, where `τ_R` is the first time the
//! walk reaches Euclidean norm `R`.
//!
//! Values are computed by iterating the sub-probability occupancy vector on
//! the lattice ball `{|y| < R}`; mass leaving the ball is absorbed. Time is
//! discrete and the sum includes `t = 0`.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{norm, to_f64};
use crate::model::{TransienceMode, WalkModel};

/// Default limit on the number of cells in the padded lattice box.
pub const DEFAULT_CELL_CAP: usize = 1 << 24;
/// Relative size of the estimated remaining mass at which `Horizon::Auto` stops.
pub const STOP_TOL: f64 = 1e-12;
/// Window (in steps) for the empirical survival-contraction estimate.
pub const CONTRACTION_WINDOW: usize = 50;
/// `Horizon::Auto` never runs more than this many steps per unit of radius.
pub const STEPS_PER_RADIUS: f64 = 50.0;

const CHUNK: usize = 4096;

/// The lattice set `nB(q', δ) = {y : |y − n q'| < n δ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    pub center: Vec<f64>,
    pub radius: f64,
    pub scale: u64,
}

impl TargetSet {
    pub fn new(center: Vec<f64>, radius: f64, scale: u64) -> Result<Self> {
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("target center must be a finite nonempty vector".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Invalid(format!("target radius must be positive, got {radius}")));
        }
        if scale == 0 {
            return Err(Error::Invalid("target scale must be a positive integer".into()));
        }
        Ok(Self { center, radius, scale })
    }

    /// The single lattice point `y` (as a radius-1/2 ball at scale 1).
    pub fn point(y: &[i64]) -> Self {
        Self {
            center: to_f64(y),
            radius: 0.5,
            scale: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn scaled_center(&self) -> Vec<f64> {
        self.center.iter().map(|c| c * self.scale as f64).collect()
    }

    pub fn scaled_radius(&self) -> f64 {
        self.radius * self.scale as f64
    }

    pub fn contains(&self, y: &[i64]) -> bool {
        let c = self.scaled_center();
        let r = self.scaled_radius();
        let d2: f64 = y.iter().zip(&c).map(|(&a, b)| (a as f64 - b).powi(2)).sum();
        d2 < r * r
    }

    /// Lattice points of the set, in lexicographic order.
    pub fn lattice_points(&self) -> Vec<Vec<i64>> {
        let c = self.scaled_center();
        let r = self.scaled_radius();
        let lo: Vec<i64> = c.iter().map(|x| (x - r).floor() as i64).collect();
        let hi: Vec<i64> = c.iter().map(|x| (x + r).ceil() as i64).collect();
        let mut out = Vec::new();
        let mut y = lo.clone();
        loop {
            if self.contains(&y) {
                out.push(y.clone());
            }
            let mut k = y.len();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if y[k] < hi[k] {
                    y[k] += 1;
                    break;
                }
                y[k] = lo[k];
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    /// Stop once the estimated remaining contribution is below [`STOP_TOL`]
    /// of the running value, or after `STEPS_PER_RADIUS · R` steps.
    Auto,
    /// Sum over `t = 0..=h` exactly.
    Fixed(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreenQuery {
    pub source: Vec<i64>,
    pub target: TargetSet,
    pub truncation: f64,
    pub horizon: Horizon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreenOptions {
    pub cell_cap: usize,
    pub keep_profile: bool,
}

impl Default for GreenOptions {
    fn default() -> Self {
        Self {
            cell_cap: DEFAULT_CELL_CAP,
            keep_profile: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreenResult {
    pub value: f64,
    /// Remaining live mass times `1/(1 − ρ)`, with `ρ` the empirical per-step
    /// survival ratio over the last [`CONTRACTION_WINDOW`] steps. Heuristic.
    pub horizon_tail_bound: f64,
    /// `true` when the value is `G_R`; `false` for the extrapolated `G`.
    pub truncation_flag: bool,
    pub truncation: f64,
    pub steps: u64,
    /// Live (not yet absorbed) mass after the last step.
    pub live_mass: f64,
    pub absorbed_mass: f64,
    /// `Horizon::Auto` hit its step cap before the stopping rule fired.
    pub stopped_at_cap: bool,
    /// `P_z(Z(t) ∈ B, τ_R > t)` for `t = 0..=steps`, when requested.
    pub visits_profile: Option<Vec<f64>>,
    /// For `green_full`, the change between the last two radii; otherwise the
    /// horizon tail bound.
    pub error_estimate: f64,
}

impl GreenResult {
    /// `Σ_{t ≤ upto}` of the per-time target mass.
    pub fn partial_sum(&self, upto: u64) -> Option<f64> {
        let p = self.visits_profile.as_ref()?;
        Some(p.iter().take(upto as usize + 1).sum())
    }

    /// `Σ_{t > after}` of the per-time target mass over the computed steps.
    pub fn tail_sum(&self, after: u64) -> Option<f64> {
        let p = self.visits_profile.as_ref()?;
        Some(p.iter().skip(after as usize + 1).sum())
    }
}

/// Padded lattice box around the ball `{|y| < R}` with per-cell kernel ids.
struct Lattice {
    dim: usize,
    side: usize,
    offset: i64,
    /// 0 outside the state space or ball, `k + 1` for kernel `k`.
    ids: Vec<u8>,
    exit: Vec<f64>,
    kernels: Vec<Vec<(isize, f64)>>,
}

fn cell_count(side: usize, dim: usize) -> Option<usize> {
    (0..dim).try_fold(1usize, |acc, _| acc.checked_mul(side))
}

impl Lattice {
    fn build(model: &WalkModel, radius: f64, cap: usize) -> Result<Self> {
        let dim = model.dim();
        let mut dists = vec![model.interior()];
        if let Some(b) = model.boundary() {
            dists.push(b);
        }
        let pad = dists
            .iter()
            .flat_map(|k| k.support().iter().flatten())
            .map(|v| v.unsigned_abs())
            .max()
            .unwrap_or(0) as i64;
        let r = radius.ceil() as i64;
        let side = (2 * (r + pad) + 1) as usize;
        let cells = cell_count(side, dim).unwrap_or(usize::MAX);
        if cells > cap {
            return Err(Error::MemoryCap {
                required: cells,
                available: cap,
            });
        }
        let offset = r + pad;
        let strides: Vec<isize> = (0..dim).map(|k| side.pow((dim - 1 - k) as u32) as isize).collect();
        let kernels: Vec<Vec<(isize, f64)>> = dists
            .iter()
            .map(|k| {
                k.support()
                    .iter()
                    .zip(k.probs())
                    .map(|(v, &p)| (v.iter().zip(&strides).map(|(&x, &s)| x as isize * s).sum(), p))
                    .collect()
            })
            .collect();

        let r2 = radius * radius;
        let ids: Vec<u8> = (0..cells)
            .into_par_iter()
            .map(|i| {
                let y = decode(i, side, dim, offset);
                let n2: f64 = y.iter().map(|&c| (c * c) as f64).sum();
                if n2 >= r2 || !model.contains(&y) {
                    0
                } else if model.on_boundary(&y) {
                    2
                } else {
                    1
                }
            })
            .collect();
        let exit: Vec<f64> = (0..cells)
            .into_par_iter()
            .map(|i| match ids[i] {
                0 => 0.0,
                k => kernels[k as usize - 1]
                    .iter()
                    .filter(|(off, _)| ids[(i as isize + off) as usize] == 0)
                    .map(|(_, p)| p)
                    .sum(),
            })
            .collect();
        Ok(Self {
            dim,
            side,
            offset,
            ids,
            exit,
            kernels,
        })
    }

    fn len(&self) -> usize {
        self.ids.len()
    }

    fn index(&self, y: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for &c in y {
            let shifted = c + self.offset;
            if shifted < 0 || shifted >= self.side as i64 {
                return None;
            }
            idx = idx * self.side + shifted as usize;
        }
        Some(idx)
    }

    fn is_live(&self, y: &[i64]) -> bool {
        y.len() == self.dim && self.index(y).is_some_and(|i| self.ids[i] != 0)
    }

    /// `new = old · P` restricted to live cells.
    fn step(&self, old: &[f64], new: &mut [f64]) {
        new.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = c * CHUNK;
            for (k, slot) in chunk.iter_mut().enumerate() {
                let j = base + k;
                *slot = if self.ids[j] == 0 {
                    0.0
                } else {
                    let mut acc = 0.0;
                    for (kid, kernel) in self.kernels.iter().enumerate() {
                        for &(off, p) in kernel {
                            let src = (j as isize - off) as usize;
                            if self.ids[src] as usize == kid + 1 {
                                acc += p * old[src];
                            }
                        }
                    }
                    acc
                };
            }
        });
    }

    /// `new = P old` (backward action) restricted to live cells.
    fn pull(&self, old: &[f64], new: &mut [f64]) {
        new.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = c * CHUNK;
            for (k, slot) in chunk.iter_mut().enumerate() {
                let j = base + k;
                *slot = match self.ids[j] {
                    0 => 0.0,
                    id => self.kernels[id as usize - 1]
                        .iter()
                        .map(|&(off, p)| p * old[(j as isize + off) as usize])
                        .sum(),
                };
            }
        });
    }

    /// [`Lattice::step`], also returning `Σ_y charge(y)·(mass jumping to the
    /// dead cell y)`.
    fn step_charging_exits(&self, old: &[f64], new: &mut [f64], charge: &[f64]) -> f64 {
        let len = self.len() as isize;
        let parts: Vec<f64> = new
            .par_chunks_mut(CHUNK)
            .enumerate()
            .map(|(c, chunk)| {
                let base = c * CHUNK;
                let mut charged = 0.0;
                for (k, slot) in chunk.iter_mut().enumerate() {
                    let j = base + k;
                    let mut acc = 0.0;
                    for (kid, kernel) in self.kernels.iter().enumerate() {
                        for &(off, p) in kernel {
                            let src = j as isize - off;
                            if (0..len).contains(&src) && self.ids[src as usize] as usize == kid + 1 {
                                acc += p * old[src as usize];
                            }
                        }
                    }
                    if self.ids[j] == 0 {
                        charged += acc * charge[j];
                        *slot = 0.0;
                    } else {
                        *slot = acc;
                    }
                }
                charged
            })
            .collect();
        ordered_sum(parts)
    }

    fn absorbed(&self, occ: &[f64]) -> f64 {
        ordered_sum(
            occ.par_chunks(CHUNK)
                .zip(self.exit.par_chunks(CHUNK))
                .map(|(a, e)| a.iter().zip(e).map(|(x, y)| x * y).sum::<f64>())
                .collect(),
        )
    }
}

fn decode(mut i: usize, side: usize, dim: usize, offset: i64) -> Vec<i64> {
    let mut y = vec![0i64; dim];
    for k in (0..dim).rev() {
        y[k] = (i % side) as i64 - offset;
        i /= side;
    }
    y
}

fn ordered_sum(parts: Vec<f64>) -> f64 {
    parts.iter().sum()
}

/// Thread-count independent sum: fixed chunks, partial sums added in order.
fn det_sum(v: &[f64]) -> f64 {
    ordered_sum(v.par_chunks(CHUNK).map(|c| c.iter().sum::<f64>()).collect())
}

/// `1/(1 − ρ)` from the recent live-mass history, `∞` while no contraction
/// is visible.
fn tail_factor(history: &[f64]) -> f64 {
    let t = history.len() - 1;
    if t == 0 {
        return f64::INFINITY;
    }
    let w = t.min(CONTRACTION_WINDOW);
    let past = history[t - w];
    if past == 0.0 {
        return 1.0;
    }
    let rho = (history[t] / past).powf(1.0 / w as f64);
    if rho < 1.0 {
        1.0 / (1.0 - rho)
    } else {
        f64::INFINITY
    }
}

fn tail_bound(live: f64, history: &[f64]) -> f64 {
    if live == 0.0 {
        0.0
    } else {
        live * tail_factor(history)
    }
}

fn target_indices(lattice: &Lattice, target: &TargetSet, radius: f64) -> Result<Vec<usize>> {
    let points = target.lattice_points();
    if points.is_empty() {
        return Err(Error::Invalid(format!(
            "target set has no lattice points at scale {}",
            target.scale
        )));
    }
    let mut idx = Vec::with_capacity(points.len());
    for y in &points {
        let n2: f64 = y.iter().map(|&c| (c * c) as f64).sum();
        if n2.sqrt() >= radius {
            return Err(Error::Invalid(format!(
                "target point {y:?} lies outside the truncation ball of radius {radius}"
            )));
        }
        // points outside the state space are never visited
        if lattice.is_live(y) {
            idx.push(lattice.index(y).expect("live point has an index"));
        }
    }
    Ok(idx)
}

fn validate_query(model: &WalkModel, q: &GreenQuery) -> Result<()> {
    let d = model.dim();
    if q.source.len() != d || q.target.dim() != d {
        return Err(Error::Invalid(format!("source and target must have dimension {d}")));
    }
    if !(q.truncation > 0.0 && q.truncation.is_finite()) {
        return Err(Error::Invalid(format!("truncation radius must be positive, got {}", q.truncation)));
    }
    if norm(&to_f64(&q.source)) >= q.truncation {
        return Err(Error::Invalid(format!(
            "source {:?} is not inside the ball of radius {}",
            q.source, q.truncation
        )));
    }
    if !model.contains(&q.source) {
        return Err(Error::Invalid(format!("source {:?} is outside the state space", q.source)));
    }
    Ok(())
}

pub fn green_truncated(model: &WalkModel, query: &GreenQuery) -> Result<GreenResult> {
    green_truncated_with(model, query, &GreenOptions::default())
}

pub fn green_truncated_with(model: &WalkModel, query: &GreenQuery, opts: &GreenOptions) -> Result<GreenResult> {
    validate_query(model, query)?;
    let lattice = Lattice::build(model, query.truncation, opts.cell_cap)?;
    let targets = target_indices(&lattice, &query.target, query.truncation)?;
    let src = lattice.index(&query.source).expect("validated source");

    let mut old = vec![0.0; lattice.len()];
    let mut new = vec![0.0; lattice.len()];
    old[src] = 1.0;

    let in_target = |occ: &[f64]| targets.iter().map(|&i| occ[i]).sum::<f64>();
    let mut value = in_target(&old);
    let mut profile = opts.keep_profile.then(|| vec![value]);
    let mut history = vec![1.0];
    let mut absorbed = 0.0;
    let cap = (STEPS_PER_RADIUS * query.truncation).ceil() as u64;
    let mut steps = 0u64;
    let mut stopped_at_cap = false;

    loop {
        match query.horizon {
            Horizon::Fixed(h) if steps >= h => break,
            Horizon::Auto => {
                let live = *history.last().unwrap();
                if live == 0.0 || (steps > 0 && tail_bound(live, &history) < STOP_TOL * value) {
                    break;
                }
                if steps >= cap {
                    stopped_at_cap = true;
                    break;
                }
            }
            _ => {}
        }
        absorbed += lattice.absorbed(&old);
        lattice.step(&old, &mut new);
        std::mem::swap(&mut old, &mut new);
        steps += 1;
        let hit = in_target(&old);
        value += hit;
        if let Some(p) = profile.as_mut() {
            p.push(hit);
        }
        history.push(det_sum(&old));
    }

    let live = *history.last().unwrap();
    let bound = tail_bound(live, &history);
    Ok(GreenResult {
        value,
        horizon_tail_bound: bound,
        truncation_flag: true,
        truncation: query.truncation,
        steps,
        live_mass: live,
        absorbed_mass: absorbed,
        stopped_at_cap,
        visits_profile: profile,
        error_estimate: bound,
    })
}

fn require_transient(model: &WalkModel) -> Result<()> {
    if model.transience() == TransienceMode::Recurrent {
        return Err(Error::Hypothesis(
            "the walk is recurrent (zero drift, d ≤ 2): its Green's function is infinite".into(),
        ));
    }
    Ok(())
}

/// Initial truncation radius for the untruncated Green's function.
pub fn initial_radius(z: &[i64], target: &TargetSet) -> f64 {
    2.0 * (norm(&to_f64(z)) + target.scale as f64 * (norm(&target.center) + target.radius) + 10.0)
}

/// `G(z, B)`: `G_R` with `R` doubled until the relative change is below `tol`.
pub fn green_full(model: &WalkModel, z: &[i64], target: &TargetSet, tol: f64) -> Result<GreenResult> {
    green_full_with(model, z, target, tol, &GreenOptions::default())
}

pub fn green_full_with(
    model: &WalkModel,
    z: &[i64],
    target: &TargetSet,
    tol: f64,
    opts: &GreenOptions,
) -> Result<GreenResult> {
    require_transient(model)?;
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    let mut radius = initial_radius(z, target);
    let mut query = GreenQuery {
        source: z.to_vec(),
        target: target.clone(),
        truncation: radius,
        horizon: Horizon::Auto,
    };
    let mut prev = green_truncated_with(model, &query, opts)?;
    loop {
        radius *= 2.0;
        query.truncation = radius;
        let next = green_truncated_with(model, &query, opts)?;
        let change = (next.value - prev.value).abs();
        if change <= tol * next.value || (next.value == 0.0 && prev.value == 0.0) {
            return Ok(GreenResult {
                truncation_flag: false,
                error_estimate: change,
                ..next
            });
        }
        prev = next;
    }
}

/// Source `round(n · q0)` for scale `n`.
pub fn scaled_source(n: u64, q0: &[f64]) -> Vec<i64> {
    q0.iter().map(|x| (x * n as f64).round() as i64).collect()
}

/// Scaled Green's measure `μ_n(B(q', δ)) = G(round(n q0), nB(q', δ))`.
pub fn scaled_measure(model: &WalkModel, n: u64, q0: &[f64], target: &TargetSet) -> Result<f64> {
    Ok(scaled_measure_result(model, n, q0, target, &GreenOptions::default())?.value)
}

pub fn scaled_measure_result(
    model: &WalkModel,
    n: u64,
    q0: &[f64],
    target: &TargetSet,
    opts: &GreenOptions,
) -> Result<GreenResult> {
    if target.scale != n {
        return Err(Error::Invalid(format!(
            "target scale {} does not match n = {n}",
            target.scale
        )));
    }
    if q0.len() != model.dim() {
        return Err(Error::Invalid(format!("q0 must have dimension {}", model.dim())));
    }
    if !model.in_reachable_cone(q0) {
        return Err(Error::Invalid(format!("q0 = {q0:?} is outside the state space")));
    }
    green_full_with(model, &scaled_source(n, q0), target, 1e-9, opts)
}

/// Expected target visits `h(x) = G_outer(x, B)` from every cell of the outer
/// ball, by the backward iteration `u ← P u` started from `1_B`. Iterates until
/// every `shell` cell has `h` settled to [`STOP_TOL`] relative.
fn visits_from_everywhere(
    model: &WalkModel,
    target: &TargetSet,
    outer: f64,
    shell: &[Vec<i64>],
    opts: &GreenOptions,
) -> Result<(Lattice, Vec<f64>)> {
    let lattice = Lattice::build(model, outer, opts.cell_cap)?;
    let targets = target_indices(&lattice, target, outer)?;
    let shell: Vec<usize> = shell.iter().filter_map(|y| lattice.index(y)).collect();
    let mut u = vec![0.0; lattice.len()];
    for &i in &targets {
        u[i] = 1.0;
    }
    let mut h = u.clone();
    let mut scratch = vec![0.0; lattice.len()];
    let mut history = vec![shell.iter().map(|&i| u[i]).sum::<f64>()];
    let cap = (STEPS_PER_RADIUS * outer).ceil() as u64;
    for _ in 0..cap {
        lattice.pull(&u, &mut scratch);
        std::mem::swap(&mut u, &mut scratch);
        h.par_iter_mut().zip(&u).for_each(|(a, b)| *a += b);
        history.push(shell.iter().map(|&i| u[i]).sum());
        let worst = shell
            .iter()
            .map(|&i| if h[i] > 0.0 { u[i] / h[i] } else { f64::INFINITY })
            .fold(0.0, f64::max);
        if worst == 0.0 || worst * tail_factor(&history) < STOP_TOL {
            break;
        }
    }
    Ok((lattice, h))
}

/// `G(z, B) − G_inner(z, B)`: runs the walk on the inner ball and charges the
/// mass leaving it at `y` with `h(y)`, the expected visits to `B` from `y`.
fn gap_after_exit(
    model: &WalkModel,
    z: &[i64],
    inner: f64,
    visits: &(Lattice, Vec<f64>),
    opts: &GreenOptions,
) -> Result<f64> {
    let (outer, h) = visits;
    let lattice = Lattice::build(model, inner, opts.cell_cap)?;
    let charge: Vec<f64> = (0..lattice.len())
        .map(|i| {
            if lattice.ids[i] != 0 {
                return 0.0;
            }
            let y = decode(i, lattice.side, lattice.dim, lattice.offset);
            outer.index(&y).map_or(0.0, |j| h[j])
        })
        .collect();
    let h_max = charge.iter().cloned().fold(0.0, f64::max);
    let src = lattice.index(z).expect("validated source");
    let mut occ = vec![0.0; lattice.len()];
    let mut next = vec![0.0; lattice.len()];
    occ[src] = 1.0;
    let mut gap = 0.0;
    let mut history = vec![1.0];
    let cap = (STEPS_PER_RADIUS * inner).ceil() as u64;
    for _ in 0..cap {
        gap += lattice.step_charging_exits(&occ, &mut next, &charge);
        std::mem::swap(&mut occ, &mut next);
        let live = det_sum(&occ);
        history.push(live);
        if live == 0.0 || (gap > 0.0 && live * tail_factor(&history) * h_max < STOP_TOL * gap) {
            break;
        }
    }
    Ok(gap)
}

/// Lattice points just outside the ball of radius `r` that one step can reach.
fn exit_shell(model: &WalkModel, r: f64) -> Vec<Vec<i64>> {
    let reach = std::iter::once(model.interior())
        .chain(model.boundary())
        .map(|k| k.max_step())
        .fold(0.0, f64::max);
    let probe = TargetSet {
        center: vec![0.0; model.dim()],
        radius: r + reach + 1.0,
        scale: 1,
    };
    probe
        .lattice_points()
        .into_iter()
        .filter(|y| {
            let n = norm(&to_f64(y));
            n >= r && n < r + reach && model.contains(y)
        })
        .collect()
}

/// `G(z_n, nV) − G_{nR}(z_n, nV)` for each `R`, computed as the target visits
/// made after first leaving the ball of radius `nR`. The walk is run on the
/// inner ball and the mass leaving it at `y` is charged with `G(y, nV)`,
/// computed once on a common outer ball, so no subtraction is performed.
///
/// The outer ball is doubled until every gap has converged to `1e-9` relative.
pub fn localization_gaps(
    model: &WalkModel,
    n: u64,
    q0: &[f64],
    target: &TargetSet,
    radii: &[f64],
) -> Result<Vec<f64>> {
    localization_gaps_with(model, n, q0, target, radii, &GreenOptions::default())
}

pub fn localization_gaps_with(
    model: &WalkModel,
    n: u64,
    q0: &[f64],
    target: &TargetSet,
    radii: &[f64],
    opts: &GreenOptions,
) -> Result<Vec<f64>> {
    require_transient(model)?;
    if target.scale != n {
        return Err(Error::Invalid(format!(
            "target scale {} does not match n = {n}",
            target.scale
        )));
    }
    let need = norm(q0).max(norm(&target.center) + target.radius);
    for &r in radii {
        if !(r > need) {
            return Err(Error::Invalid(format!(
                "localization radius {r} must exceed max(|q0|, |q'| + δ) = {need}"
            )));
        }
    }
    if radii.is_empty() {
        return Ok(Vec::new());
    }
    let z = scaled_source(n, q0);
    let inners: Vec<f64> = radii.iter().map(|r| r * n as f64).collect();
    for &inner in &inners {
        validate_query(
            model,
            &GreenQuery {
                source: z.clone(),
                target: target.clone(),
                truncation: inner,
                horizon: Horizon::Auto,
            },
        )?;
    }
    let largest = inners.iter().cloned().fold(0.0, f64::max);
    let mut outer = (2.0 * largest).max(initial_radius(&z, target));
    let shell: Vec<Vec<i64>> = inners.iter().flat_map(|&r| exit_shell(model, r)).collect();
    let gaps = |outer: f64| -> Result<Vec<f64>> {
        let visits = visits_from_everywhere(model, target, outer, &shell, opts)?;
        inners
            .iter()
            .map(|&r| gap_after_exit(model, &z, r, &visits, opts))
            .collect()
    };
    let mut prev = gaps(outer)?;
    loop {
        outer *= 2.0;
        let next = gaps(outer)?;
        let settled = next
            .iter()
            .zip(&prev)
            .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs() || (*a == 0.0 && *b == 0.0));
        if settled {
            return Ok(next);
        }
        prev = next;
    }
}

pub fn localization_gap(model: &WalkModel, n: u64, q0: &[f64], target: &TargetSet, r: f64) -> Result<f64> {
    Ok(localization_gaps(model, n, q0, target, &[r])?[0])
}

const PROFILE_MAGIC: &[u8; 4] = b"GLDP";
const PROFILE_VERSION: u32 = 1;

/// Binary dump: magic `GLDP`, `u32` version, `u64` length, then `f64` values,
/// all little-endian.
pub fn write_profile(mut w: impl Write, values: &[f64]) -> std::io::Result<()> {
    w.write_all(PROFILE_MAGIC)?;
    w.write_all(&PROFILE_VERSION.to_le_bytes())?;
    w.write_all(&(values.len() as u64).to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_profile(mut r: impl Read) -> std::io::Result<Vec<f64>> {
    use std::io::{Error as IoError, ErrorKind};
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..4] != PROFILE_MAGIC {
        return Err(IoError::new(ErrorKind::InvalidData, "bad profile magic"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != PROFILE_VERSION {
        return Err(IoError::new(ErrorKind::InvalidData, format!("unsupported profile version {version}")));
    }
    let len = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    let mut out = Vec::with_capacity(len);
    let mut buf = [0u8; 8];
    for _ in 0..len {
        r.read_exact(&mut buf)?;
        out.push(f64::from_le_bytes(buf));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walk1d() -> WalkModel {
        WalkModel::homogeneous(vec![vec![1], vec![-1]], vec![0.7, 0.3]).unwrap()
    }

    fn query(y: i64, r: f64) -> GreenQuery {
        GreenQuery {
            source: vec![0],
            target: TargetSet::point(&[y]),
            truncation: r,
            horizon: Horizon::Auto,
        }
    }

    #[test]
    fn target_lattice_points() {
        let t = TargetSet::new(vec![-1.0], 0.25, 20).unwrap();
        let pts = t.lattice_points();
        assert_eq!(pts.first().unwrap(), &vec![-24]);
        assert_eq!(pts.last().unwrap(), &vec![-16]);
        assert_eq!(pts.len(), 9);
        let disc = TargetSet::new(vec![0.0, 0.0], 1.0, 2).unwrap();
        // |y| < 2 on Z^2: 9 points
        assert_eq!(disc.lattice_points().len(), 9);
    }

    #[test]
    fn visits_to_origin() {
        let r = green_truncated(&walk1d(), &query(0, 200.0)).unwrap();
        assert!((r.value - 2.5).abs() < 1e-10, "{}", r.value);
        assert!(!r.stopped_at_cap);
    }

    #[test]
    fn geometric_decay_to_the_left() {
        let m = walk1d();
        for y in [1, 5, 12] {
            let r = green_truncated(&m, &query(-y, 200.0)).unwrap();
            let exact = 2.5 * (3.0f64 / 7.0).powi(y as i32);
            assert!((r.value / exact - 1.0).abs() < 1e-9, "{y}: {} vs {exact}", r.value);
        }
    }

    #[test]
    fn mass_is_conserved() {
        let r = green_truncated(&walk1d(), &query(3, 20.0)).unwrap();
        assert!((r.live_mass + r.absorbed_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_horizon_is_exact_and_monotone() {
        let m = walk1d();
        let mut q = query(0, 50.0);
        q.horizon = Horizon::Fixed(2);
        // t = 0 contributes 1, t = 2 contributes 2·0.7·0.3
        let r = green_truncated(&m, &q).unwrap();
        assert!((r.value - 1.42).abs() < 1e-15);
        assert_eq!(r.steps, 2);
        let mut last = 0.0;
        for h in [1, 5, 20, 80] {
            q.horizon = Horizon::Fixed(h);
            let v = green_truncated(&m, &q).unwrap().value;
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn monotone_in_radius() {
        let m = walk1d();
        let mut last = 0.0;
        for r in [3.0, 5.0, 10.0, 40.0] {
            let v = green_truncated(&m, &query(-2, r)).unwrap().value;
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn target_outside_ball_is_rejected() {
        assert!(matches!(green_truncated(&walk1d(), &query(-30, 10.0)), Err(Error::Invalid(_))));
    }

    #[test]
    fn memory_cap_is_reported() {
        let opts = GreenOptions {
            cell_cap: 100,
            keep_profile: false,
        };
        match green_truncated_with(&walk1d(), &query(0, 200.0), &opts) {
            Err(Error::MemoryCap { required, available }) => {
                assert_eq!(available, 100);
                assert!(required > 400);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn full_green_and_scaled_measure() {
        let m = walk1d();
        let g = green_full(&m, &[0], &TargetSet::point(&[0]), 1e-9).unwrap();
        assert!((g.value - 2.5).abs() < 1e-9);
        assert!(!g.truncation_flag);

        let t = TargetSet::new(vec![-1.0], 0.25, 20).unwrap();
        let mu = scaled_measure(&m, 20, &[0.0], &t).unwrap();
        let rho: f64 = 3.0 / 7.0;
        let exact: f64 = (16..=24).map(|y| 2.5 * rho.powi(y)).sum();
        assert!((mu / exact - 1.0).abs() < 1e-8, "{mu} vs {exact}");
    }

    #[test]
    fn recurrent_walk_refused() {
        let sym = WalkModel::homogeneous(vec![vec![1], vec![-1]], vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            green_full(&sym, &[0], &TargetSet::point(&[0]), 1e-9),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn profile_sums_to_value() {
        let m = walk1d();
        let opts = GreenOptions {
            keep_profile: true,
            ..Default::default()
        };
        let r = green_truncated_with(&m, &query(-1, 60.0), &opts).unwrap();
        let p = r.visits_profile.as_ref().unwrap();
        assert_eq!(p.len() as u64, r.steps + 1);
        let total: f64 = p.iter().sum();
        assert!((total - r.value).abs() < 1e-15);
        assert!((r.partial_sum(10).unwrap() + r.tail_sum(10).unwrap() - r.value).abs() < 1e-15);
    }

    #[test]
    fn profile_round_trip() {
        let values = [1.0, 0.5, 1e-300, 0.0];
        let mut buf = Vec::new();
        write_profile(&mut buf, &values).unwrap();
        assert_eq!(&buf[..4], b"GLDP");
        assert_eq!(buf.len(), 16 + 8 * values.len());
        assert_eq!(read_profile(&buf[..]).unwrap(), values);
        buf[0] = b'X';
        assert!(read_profile(&buf[..]).is_err());
    }

    #[test]
    fn localization_gap_shrinks_with_radius() {
        let m = walk1d();
        let t = TargetSet::new(vec![-1.0], 0.25, 20).unwrap();
        let gaps = localization_gaps(&m, 20, &[0.0], &t, &[1.5, 2.0, 3.0, 4.0]).unwrap();
        for w in gaps.windows(2) {
            assert!(w[1] <= w[0], "{gaps:?}");
        }
        assert!(gaps[0] > 0.0);
        assert!(localization_gap(&m, 20, &[0.0], &t, 1.1).is_err());
    }

    #[test]
    fn half_space_walk_stays_in_state_space() {
        let text = "dim = 1\nstate_space = \"halfspace\"\n[interior]\nsupport = [[1],[-1]]\nprobs = [0.6,0.4]\n[boundary]\nsupport = [[1],[0]]\nprobs = [0.5,0.5]\n";
        let m = crate::model::load_model(text).unwrap();
        let q = GreenQuery {
            source: vec![0],
            target: TargetSet::point(&[0]),
            truncation: 100.0,
            horizon: Horizon::Auto,
        };
        let r = green_truncated(&m, &q).unwrap();
        // return probability to 0: hold (1/2) or step to 1 and come back (1/2 · 2/3)
        let exact = 1.0 / (1.0 - (0.5 + 0.5 * 2.0 / 3.0));
        assert!((r.value - exact).abs() < 1e-9, "{} vs {exact}", r.value);
        assert!((r.live_mass + r.absorbed_mass - 1.0).abs() < 1e-12);
    }
}
