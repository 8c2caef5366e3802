//! Shared oracles and generators for the integration tests.
#![allow(dead_code)]

use greenldp::green::{green_truncated, GreenQuery, Horizon, TargetSet};
use greenldp::model::{communication_theta, JumpDistribution, WalkModel};
use greenldp::montecarlo::quasipotential_tilt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `G_R(z, B)` from the linear system `(I − Q) g = 1_B` on the open ball
/// `{|y| < R}`, with `Q` the walk killed on leaving the ball. Cells are
/// numbered lexicographically in the box `[−⌈R⌉, ⌈R⌉]^d`, which makes the
/// matrix banded; it is an M-matrix, so elimination needs no pivoting.
pub fn ball_green_oracle(model: &WalkModel, radius: f64, z: &[i64], in_target: impl Fn(&[i64]) -> bool) -> f64 {
    let d = model.dim();
    let r = radius.ceil() as i64;
    let side = (2 * r + 1) as usize;
    let n = side.pow(d as u32);
    let strides: Vec<i64> = (0..d).map(|k| side.pow((d - 1 - k) as u32) as i64).collect();
    let index = |y: &[i64]| -> usize { y.iter().zip(&strides).map(|(c, s)| (c + r) * s).sum::<i64>() as usize };
    let point = |mut i: usize| -> Vec<i64> {
        let mut y = vec![0; d];
        for k in 0..d {
            let s = strides[k] as usize;
            y[k] = (i / s) as i64 - r;
            i %= s;
        }
        y
    };
    let live = |y: &[i64]| {
        let n2: f64 = y.iter().map(|&c| (c * c) as f64).sum();
        n2 < radius * radius && model.contains(y)
    };
    let mut w = 0usize;
    for kernel in std::iter::once(model.interior()).chain(model.boundary()) {
        for v in kernel.support() {
            let off: i64 = v.iter().zip(&strides).map(|(a, s)| a * s).sum();
            w = w.max(off.unsigned_abs() as usize);
        }
    }
    let width = 2 * w + 1;
    let mut band = vec![0.0; n * width];
    let mut rhs = vec![0.0; n];
    let at = |i: usize, j: usize| i * width + (j + w - i);
    for i in 0..n {
        let y = point(i);
        band[at(i, i)] = 1.0;
        if !live(&y) {
            continue;
        }
        rhs[i] = if in_target(&y) { 1.0 } else { 0.0 };
        let kernel = model.step_kernel(&y).unwrap();
        for (v, p) in kernel.support().iter().zip(kernel.probs()) {
            let next: Vec<i64> = y.iter().zip(v).map(|(a, b)| a + b).collect();
            if live(&next) {
                band[at(i, index(&next))] -= p;
            }
        }
    }
    for k in 0..n {
        let pivot = band[at(k, k)];
        for i in k + 1..(k + w + 1).min(n) {
            let l = band[at(i, k)] / pivot;
            if l == 0.0 {
                continue;
            }
            for j in k..(k + w + 1).min(n) {
                band[at(i, j)] -= l * band[at(k, j)];
            }
            rhs[i] -= l * rhs[k];
        }
    }
    let mut g = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..(i + w + 1).min(n) {
            s -= band[at(i, j)] * g[j];
        }
        g[i] = s / band[at(i, i)];
    }
    g[index(z)]
}

pub fn walk1d() -> WalkModel {
    WalkModel::homogeneous(vec![vec![1], vec![-1]], vec![0.7, 0.3]).unwrap()
}

pub fn walk2d() -> WalkModel {
    WalkModel::homogeneous(
        vec![vec![1, 0], vec![0, 1], vec![-1, 0], vec![0, -1]],
        vec![0.4, 0.3, 0.2, 0.1],
    )
    .unwrap()
}

/// A random drifted walk in dimension 1 or 2 with `2..=6` support points in
/// `[−2, 2]^d` that can reach every direction (so every quasipotential is
/// finite) and has drift of length at least 0.05.
pub fn random_drifted_model(rng: &mut ChaCha8Rng, d: usize) -> WalkModel {
    let mut cells: Vec<Vec<i64>> = Vec::new();
    if d == 1 {
        cells.extend((-2..=2).filter(|&a| a != 0).map(|a| vec![a]));
    } else {
        for a in -2..=2 {
            for b in -2..=2 {
                if (a, b) != (0, 0) {
                    cells.push(vec![a, b]);
                }
            }
        }
    }
    let min_points = if d == 1 { 2 } else { 3 };
    let axes: Vec<Vec<f64>> = (0..d)
        .flat_map(|i| {
            [1.0, -1.0].map(|s| {
                let mut e = vec![0.0; d];
                e[i] = s;
                e
            })
        })
        .collect();
    loop {
        let k = rng.random_range(min_points..=6.min(cells.len()));
        cells.shuffle(rng);
        let support: Vec<Vec<i64>> = cells[..k].to_vec();
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let Ok(model) = WalkModel::homogeneous(support, probs) else { continue };
        let drift = model.drift();
        if drift.iter().map(|x| x * x).sum::<f64>().sqrt() < 0.05 {
            continue;
        }
        if communication_theta(&model, &axes).is_ok() {
            return model;
        }
    }
}

/// Random small instance: a drifted model, a target within a few steps of the
/// origin, and the exact Green's function up to a fixed horizon on a ball the
/// walk cannot leave in that time.
pub fn mc_instance(seed: u64) -> (WalkModel, TargetSet, u64, Vec<f64>, f64) {
    let mut r = rng(seed);
    let d = r.random_range(1..=2usize);
    let m = random_drifted_model(&mut r, d);
    let y: Vec<i64> = (0..d).map(|_| r.random_range(-3..=3)).collect();
    let target = TargetSet::point(&y);
    let horizon = 40;
    let reach = 2.0 * 2f64.sqrt() * horizon as f64 + 1.0;
    let exact = green_truncated(
        &m,
        &GreenQuery {
            source: vec![0; d],
            target: target.clone(),
            truncation: reach,
            horizon: Horizon::Fixed(horizon),
        },
    )
    .unwrap()
    .value;
    let disp: Vec<f64> = y.iter().map(|&c| c as f64).collect();
    let tilt = quasipotential_tilt(&m, &disp).unwrap();
    (m, target, horizon, tilt, exact)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn kernel(support: Vec<Vec<i64>>, probs: Vec<f64>) -> JumpDistribution {
    JumpDistribution::new(support, probs).unwrap()
}
