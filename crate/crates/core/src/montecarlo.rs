//! Importance-sampling estimates of Green's measures and hitting
//! probabilities under exponentially tilted kernels.
//!
//! Paths are simulated under `p̃ᵢ = pᵢ e^{a·vᵢ}/φ(a)` and reweighted by the
//! likelihood ratio `exp(−a·(Z_t − z) + t Λ(a))`. On the level set
//! `φ(a) = 1` the ratio depends on position only. Each path draws from its
//! own random stream, so estimates do not depend on the number of threads.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cgf::phi_kernel;
use crate::error::{Error, Result};
use crate::green::TargetSet;
use crate::linalg::{dot, norm, sub, to_f64};
use crate::model::{communication_theta, JumpDistribution, WalkModel};
use crate::quasipotential::quasipotential_support;
use crate::rng::substream;

/// An estimate is flagged when its effective sample size falls below this
/// fraction of the path count.
pub const LOW_ESS_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub seed: u64,
    pub paths: u64,
    pub horizon: u64,
    pub tilt: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths_used: u64,
    /// `(Σ Xᵢ)² / Σ Xᵢ²` over the per-path contributions.
    pub ess: f64,
    pub low_ess: bool,
}

impl McEstimate {
    pub fn relative_std_error(&self) -> f64 {
        if self.mean > 0.0 {
            self.std_error / self.mean
        } else {
            f64::INFINITY
        }
    }

    fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let sum: f64 = xs.iter().sum();
        let sum_sq: f64 = xs.iter().map(|x| x * x).sum();
        let mean = sum / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let ess = if sum_sq > 0.0 { sum * sum / sum_sq } else { 0.0 };
        Self {
            mean,
            std_error: (var / n).sqrt(),
            paths_used: xs.len() as u64,
            ess,
            low_ess: ess < LOW_ESS_FRACTION * n,
        }
    }
}

/// Exponentially tilted kernel `pᵢ e^{a·vᵢ}/φ(a)`.
pub fn tilted_kernel(model: &WalkModel, a: &[f64]) -> Result<JumpDistribution> {
    tilt(model.interior(), a)
}

fn tilt(kernel: &JumpDistribution, a: &[f64]) -> Result<JumpDistribution> {
    let eval = phi_kernel(kernel, a)?;
    let weights = kernel
        .support()
        .iter()
        .zip(kernel.probs())
        .map(|(v, &p)| p * (dot(a, &to_f64(v))).exp() / eval.phi)
        .collect();
    Ok(JumpDistribution::from_weights(kernel.support().to_vec(), weights))
}

/// Likelihood ratio of a path with displacement `displacement` after `t`
/// steps of a homogeneous walk: `exp(−a·Δ + t Λ(a))`.
pub fn endpoint_weight(a: &[f64], lambda: f64, displacement: &[i64], t: u64) -> f64 {
    (-dot(a, &to_f64(displacement)) + t as f64 * lambda).exp()
}

/// The same ratio as a product of per-step ratios `pᵢ / p̃ᵢ`.
pub fn incremental_weight(kernel: &JumpDistribution, tilted: &JumpDistribution, steps: &[usize]) -> f64 {
    steps
        .iter()
        .map(|&i| kernel.probs()[i] / tilted.probs()[i])
        .product()
}

/// Sampling tables for one kernel: cumulative tilted probabilities and the
/// log-likelihood ratio of each step.
struct StepTable {
    support: Vec<Vec<i64>>,
    cumulative: Vec<f64>,
    log_ratio: Vec<f64>,
}

impl StepTable {
    fn new(kernel: &JumpDistribution, a: &[f64]) -> Result<Self> {
        let tilted = tilt(kernel, a)?;
        let mut acc = 0.0;
        let cumulative = tilted
            .probs()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let log_ratio = kernel
            .probs()
            .iter()
            .zip(tilted.probs())
            .map(|(p, q)| (p / q).ln())
            .collect();
        Ok(Self {
            support: kernel.support().to_vec(),
            cumulative,
            log_ratio,
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        self.cumulative.iter().position(|&c| u < c).unwrap_or(self.cumulative.len() - 1)
    }
}

struct Sampler<'a> {
    model: &'a WalkModel,
    interior: StepTable,
    boundary: Option<StepTable>,
    a: Vec<f64>,
    lambda: f64,
    max_step: f64,
}

impl<'a> Sampler<'a> {
    fn new(model: &'a WalkModel, cfg: &SamplerConfig) -> Result<Self> {
        if cfg.paths == 0 {
            return Err(Error::Invalid("paths must be at least 1".into()));
        }
        if cfg.horizon == 0 {
            return Err(Error::Invalid("horizon must be at least 1".into()));
        }
        if cfg.tilt.len() != model.dim() {
            return Err(Error::Invalid(format!("tilt must have dimension {}", model.dim())));
        }
        let interior = StepTable::new(model.interior(), &cfg.tilt)?;
        let boundary = model.boundary().map(|b| StepTable::new(b, &cfg.tilt)).transpose()?;
        let lambda = phi_kernel(model.interior(), &cfg.tilt)?.lambda;
        let max_step = model
            .boundary()
            .map_or(0.0, |b| b.max_step())
            .max(model.interior().max_step());
        Ok(Self {
            model,
            interior,
            boundary,
            a: cfg.tilt.clone(),
            lambda,
            max_step,
        })
    }

    /// Runs one path of at most `horizon` steps, calling `visit(y, weight)`
    /// at each time (including 0) until it returns `false` or `reachable`
    /// says the path can no longer contribute.
    fn run(
        &self,
        rng: &mut ChaCha8Rng,
        z: &[i64],
        horizon: u64,
        reachable: impl Fn(&[i64], u64) -> bool,
        mut visit: impl FnMut(&[i64], f64) -> bool,
    ) {
        let mut y = z.to_vec();
        let mut log_w = 0.0;
        if !visit(&y, 1.0) {
            return;
        }
        for t in 1..=horizon {
            let table = match &self.boundary {
                Some(b) if self.model.on_boundary(&y) => b,
                _ => &self.interior,
            };
            let i = table.draw(rng);
            for (c, s) in y.iter_mut().zip(&table.support[i]) {
                *c += s;
            }
            let weight = if self.boundary.is_some() {
                log_w += table.log_ratio[i];
                log_w.exp()
            } else {
                let disp = sub(&to_f64(&y), &to_f64(z));
                (-dot(&self.a, &disp) + t as f64 * self.lambda).exp()
            };
            if !visit(&y, weight) || !reachable(&y, horizon - t) {
                return;
            }
        }
    }
}

/// Unbiased estimate of `Σ_{t ≤ horizon} P_z(Z(t) ∈ nB(q', δ))`.
pub fn mc_green(model: &WalkModel, z: &[i64], target: &TargetSet, cfg: &SamplerConfig) -> Result<McEstimate> {
    let sampler = Sampler::new(model, cfg)?;
    if z.len() != model.dim() || target.dim() != model.dim() || !model.contains(z) {
        return Err(Error::Invalid(format!("source {z:?} is not a state of the model")));
    }
    let center = target.scaled_center();
    let radius = target.scaled_radius();
    let samples: Vec<f64> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(cfg.seed, i);
            let mut total = 0.0;
            sampler.run(
                &mut rng,
                z,
                cfg.horizon,
                |y, left| norm(&sub(&to_f64(y), &center)) - radius < sampler.max_step * left as f64,
                |y, w| {
                    if target.contains(y) {
                        total += w;
                    }
                    true
                },
            );
            total
        })
        .collect();
    Ok(McEstimate::from_samples(&samples))
}

/// Hitting-probability estimate together with the communication bound
/// `P_z(hit z') ≥ e^{−θ|z' − z|}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingReport {
    pub estimate: McEstimate,
    pub theta: f64,
    pub distance: f64,
    /// `−θ |z' − z|`.
    pub log_bound: f64,
    /// `log P̂ / (−θ |z' − z|)`; at most 1 when the bound holds.
    pub log_ratio: f64,
}

impl HittingReport {
    /// `log P̂ ≥ −θ|z' − z| − k · (relative std error)`.
    pub fn bound_holds(&self, k: f64) -> bool {
        if self.distance == 0.0 {
            return true;
        }
        self.estimate.mean > 0.0
            && self.estimate.mean.ln() >= self.log_bound - k * self.estimate.relative_std_error()
    }
}

/// Probability that the walk from `z` visits `z'` (the lattice part of the
/// open unit ball around `z'`) within the horizon.
pub fn mc_hitting(model: &WalkModel, z: &[i64], z_prime: &[i64], cfg: &SamplerConfig) -> Result<HittingReport> {
    let sampler = Sampler::new(model, cfg)?;
    if z.len() != model.dim() || z_prime.len() != model.dim() || !model.contains(z) {
        return Err(Error::Invalid(format!("source {z:?} is not a state of the model")));
    }
    let diff = sub(&to_f64(z_prime), &to_f64(z));
    let distance = norm(&diff);
    let theta = if distance > 0.0 {
        communication_theta(model, &[diff])?.theta
    } else {
        0.0
    };
    let target = to_f64(z_prime);
    let samples: Vec<f64> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(cfg.seed, i);
            let mut hit = 0.0;
            sampler.run(
                &mut rng,
                z,
                cfg.horizon,
                |y, left| norm(&sub(&to_f64(y), &target)) - 1.0 < sampler.max_step * left as f64,
                |y, w| {
                    if y == z_prime {
                        hit = w;
                        false
                    } else {
                        true
                    }
                },
            );
            hit
        })
        .collect();
    let estimate = McEstimate::from_samples(&samples);
    let log_bound = -theta * distance;
    let log_ratio = if distance == 0.0 {
        0.0
    } else {
        estimate.mean.ln() / log_bound
    };
    Ok(HittingReport {
        estimate,
        theta,
        distance,
        log_bound,
        log_ratio,
    })
}

/// Level-set tilt `a*` maximizing `a·Δ` over `φ(a) ≤ 1`, for displacement
/// `Δ` from the source to the target center. Zero when `Δ` costs nothing.
pub fn quasipotential_tilt(model: &WalkModel, displacement: &[f64]) -> Result<Vec<f64>> {
    let r = quasipotential_support(model, displacement)?;
    if r.value <= 0.0 {
        return Ok(vec![0.0; model.dim()]);
    }
    Ok(r.a_star)
}

/// `max(1, ⌈20 |n q' − z|⌉)` steps.
pub fn default_horizon(z: &[i64], target: &TargetSet) -> u64 {
    let d = norm(&sub(&target.scaled_center(), &to_f64(z)));
    ((20.0 * d).ceil() as u64).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walk1d() -> WalkModel {
        WalkModel::homogeneous(vec![vec![1], vec![-1]], vec![0.7, 0.3]).unwrap()
    }

    #[test]
    fn tilt_reverses_drift() {
        let k = tilted_kernel(&walk1d(), &[(3.0f64 / 7.0).ln()]).unwrap();
        assert!((k.probs()[0] - 0.3).abs() < 1e-15);
        assert!((k.probs()[1] - 0.7).abs() < 1e-15);
        let same = tilted_kernel(&walk1d(), &[0.0]).unwrap();
        assert_eq!(same.probs(), walk1d().interior().probs());
    }

    #[test]
    fn zero_paths_rejected() {
        let cfg = SamplerConfig {
            seed: 1,
            paths: 0,
            horizon: 10,
            tilt: vec![0.0],
        };
        assert!(matches!(
            mc_green(&walk1d(), &[0], &TargetSet::point(&[0]), &cfg),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn tilted_far_target() {
        let m = walk1d();
        let target = TargetSet::point(&[-30]);
        let a = quasipotential_tilt(&m, &[-30.0]).unwrap();
        assert!((a[0] - (3.0f64 / 7.0).ln()).abs() < 1e-9);
        let cfg = SamplerConfig {
            seed: 5,
            paths: 20_000,
            horizon: 600,
            tilt: a,
        };
        let est = mc_green(&m, &[0], &target, &cfg).unwrap();
        let exact = 2.5 * (3.0f64 / 7.0).powi(30);
        assert!((est.mean - exact).abs() < 4.0 * est.std_error, "{est:?} vs {exact}");
        assert!(est.relative_std_error() < 0.2);
        assert!(!est.low_ess);
    }

    #[test]
    fn hitting_certificate() {
        let m = walk1d();
        let cfg = SamplerConfig {
            seed: 9,
            paths: 20_000,
            horizon: 400,
            tilt: vec![(3.0f64 / 7.0).ln()],
        };
        let r = mc_hitting(&m, &[0], &[-10], &cfg).unwrap();
        let exact = (3.0f64 / 7.0).powi(10);
        // every tilted path hits, with the same weight: the estimator has zero variance
        assert!((r.estimate.mean - exact).abs() <= 4.0 * r.estimate.std_error + 1e-12 * exact, "{r:?}");
        assert!((r.theta + 0.3f64.ln()).abs() < 1e-12);
        assert!(r.bound_holds(3.0));
        let same = mc_hitting(&m, &[4], &[4], &cfg).unwrap();
        assert_eq!(same.estimate.mean, 1.0);
    }

    #[test]
    fn weights_agree_two_ways() {
        let m = walk1d();
        let a = [(3.0f64 / 7.0).ln()];
        let tilted = tilted_kernel(&m, &a).unwrap();
        let steps = [0, 1, 1, 1, 0, 1];
        let inc = incremental_weight(m.interior(), &tilted, &steps);
        let end = endpoint_weight(&a, 0.0, &[-2], steps.len() as u64);
        assert!((inc / end - 1.0).abs() < 1e-12);
    }
}
