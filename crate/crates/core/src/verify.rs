//! Self-checks for a single model: rate-function identities, agreement of the
//! two quasipotential routes, the communication bound `I(q, q') ≤ θ|q' − q|`,
//! and Monte Carlo against the exact finite-horizon Green's function.
//!
//! Quasipotentials outside the reachable cone are infinite; such pairs are
//! left out of the agreement and bound checks.

use rand::Rng;

use crate::error::{Error, Result};
use crate::green::{green_truncated, GreenQuery, Horizon, TargetSet};
use crate::linalg::{norm, scale, sub, to_f64};
use crate::model::{communication_theta, WalkModel, ZERO_DRIFT_TOL};
use crate::montecarlo::{mc_green, quasipotential_tilt, SamplerConfig};
use crate::quasipotential::{identity_suite, quasipotential_inf_t, quasipotential_support, IDENTITY_TOL};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyCheck {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<VerifyCheck>,
    /// Checks that do not apply to this model, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: impl Into<String>, value: f64, tolerance: f64) -> VerifyCheck {
    VerifyCheck {
        name: name.into(),
        value,
        tolerance,
        passed: value <= tolerance,
    }
}

/// Monte Carlo paths per consistency instance.
const MC_PATHS: u64 = 20_000;

pub fn verify_model(model: &WalkModel, samples: usize, seed: u64) -> Result<VerifyReport> {
    if samples == 0 {
        return Err(Error::Invalid("samples must be at least 1".into()));
    }
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    let drifted = norm(&model.drift()) > ZERO_DRIFT_TOL;

    if model.is_homogeneous() && drifted {
        let report = identity_suite(model, samples, seed)?;
        for c in &report.checks {
            checks.push(check(format!("identity:{}", c.name), c.max_violation, IDENTITY_TOL));
        }
        checks.extend(pair_checks(model, samples.min(200), seed)?);
    } else {
        let reason = if model.is_homogeneous() {
            "zero drift: I_T(0,0) = 0"
        } else {
            "half-space model: no closed rate function"
        };
        skipped.push(("identities".to_string(), reason.to_string()));
        skipped.push(("random pairs".to_string(), reason.to_string()));
    }

    if model.is_transient() {
        checks.push(mc_check(model, seed)?);
    } else {
        skipped.push(("monte-carlo".to_string(), "recurrent walk".to_string()));
    }
    Ok(VerifyReport { checks, skipped })
}

/// On random pairs: the largest relative disagreement of the two
/// quasipotential routes, and the largest relative excess of `I(q, q')` over
/// `θ |q' − q|`.
fn pair_checks(model: &WalkModel, samples: usize, seed: u64) -> Result<[VerifyCheck; 2]> {
    let d = model.dim();
    let mut worst: f64 = 0.0;
    let mut disagreement: f64 = 0.0;
    for i in 0..samples {
        let mut rng = substream(seed ^ 0x4c49_5053, i as u64);
        let q: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let qp: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let delta = sub(&qp, &q);
        let dist = norm(&delta);
        if dist == 0.0 {
            continue;
        }
        let by_t = quasipotential_inf_t(model, &q, &qp)?.value;
        if by_t.is_finite() {
            let by_support = quasipotential_support(model, &delta)?.value;
            disagreement = disagreement.max((by_t - by_support).abs() / by_t.max(1.0));
        }
        let theta = match communication_theta(model, &[delta]) {
            Ok(c) => c.theta,
            // not in the positive span: I is infinite and θ does not exist
            Err(Error::Infeasible(_)) => continue,
            Err(e) => return Err(e),
        };
        let bound = theta * dist;
        worst = worst.max((by_t - bound).max(0.0) / bound.max(1.0));
    }
    Ok([
        check("method-agreement", disagreement, IDENTITY_TOL),
        check("communication-bound", worst, 1e-9),
    ])
}

/// Standardized deviation of the tilted estimator from the exact
/// finite-horizon value, for a target a few steps against the drift.
fn mc_check(model: &WalkModel, seed: u64) -> Result<VerifyCheck> {
    let d = model.dim();
    let drift = model.drift();
    let len = norm(&drift);
    let dir = if len > ZERO_DRIFT_TOL {
        scale(&drift, -1.0 / len)
    } else {
        let mut e = vec![0.0; d];
        e[0] = 1.0;
        e
    };
    let target_pt: Vec<i64> = scale(&dir, 3.0).iter().map(|x| x.round() as i64).collect();
    let z = vec![0i64; d];
    let target_pt = if model.contains(&target_pt) { target_pt } else { z.clone() };
    let target = TargetSet::point(&target_pt);
    let horizon = 60;
    let radius = norm(&to_f64(&target_pt)) + horizon as f64 * model.interior().max_step().max(
        model.boundary().map_or(0.0, |b| b.max_step()),
    ) + 2.0;
    let exact = green_truncated(
        model,
        &GreenQuery {
            source: z.clone(),
            target: target.clone(),
            truncation: radius,
            horizon: Horizon::Fixed(horizon),
        },
    )?
    .value;
    let tilt = if model.is_homogeneous() && len > ZERO_DRIFT_TOL {
        quasipotential_tilt(model, &to_f64(&target_pt))?
    } else {
        vec![0.0; d]
    };
    let est = mc_green(
        model,
        &z,
        &target,
        &SamplerConfig {
            seed,
            paths: MC_PATHS,
            horizon,
            tilt,
        },
    )?;
    let dev = (est.mean - exact).abs();
    let z_score = if est.std_error > 0.0 {
        dev / est.std_error
    } else if dev <= 1e-12 * exact.abs() {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(check("monte-carlo-vs-exact", z_score, 4.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verifies_the_1d_walk() {
        let m = WalkModel::homogeneous(vec![vec![1], vec![-1]], vec![0.7, 0.3]).unwrap();
        let r = verify_model(&m, 50, 7).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.checks.len(), 9);
    }

    #[test]
    fn half_space_skips_rate_checks() {
        let text = "dim = 1\nstate_space = \"halfspace\"\n[interior]\nsupport = [[1],[-1]]\nprobs = [0.6,0.4]\n[boundary]\nsupport = [[1],[0]]\nprobs = [0.5,0.5]\n";
        let m = crate::model::load_model(text).unwrap();
        let r = verify_model(&m, 10, 1).unwrap();
        assert_eq!(r.skipped.len(), 2);
        assert!(r.passed(), "{r:?}");
    }
}
