//! Jump generating function `φ(a) = E e^{a·S(1)}`, its logarithm `Λ`, and the
//! Legendre transform `Λ*(v) = sup_a (a·v − Λ(a))`, which is the Cramér rate
//! of a homogeneous walk.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, dot, hull_region, norm, to_f64, HullRegion};
use crate::model::{JumpDistribution, WalkModel};

/// Largest admissible exponent `a·v` in [`phi`].
pub const EXPONENT_LIMIT: f64 = 700.0;

const NEWTON_MAX_ITER: usize = 60;
const ARMIJO: f64 = 1e-4;
const GRAD_TOL: f64 = 1e-12;

/// `φ`, `Λ = log φ` and the first two derivatives of `Λ` at a tilt.
#[derive(Debug, Clone, PartialEq)]
pub struct CgfEval {
    pub a: Vec<f64>,
    pub phi: f64,
    pub lambda: f64,
    pub grad: Vec<f64>,
    pub hess: DMatrix<f64>,
}

/// Evaluates the interior kernel's generating function by direct summation.
pub fn phi(model: &WalkModel, a: &[f64]) -> Result<CgfEval> {
    phi_kernel(model.interior(), a)
}

pub fn phi_kernel(kernel: &JumpDistribution, a: &[f64]) -> Result<CgfEval> {
    check_tilt(kernel, a)?;
    let exps: Vec<f64> = kernel.support().iter().map(|v| dot(a, &to_f64(v))).collect();
    if let Some(&e) = exps.iter().find(|&&e| e > EXPONENT_LIMIT) {
        return Err(Error::Overflow {
            exponent: e,
            limit: EXPONENT_LIMIT,
        });
    }
    let weights: Vec<f64> = kernel.probs().iter().zip(&exps).map(|(p, e)| p * e.exp()).collect();
    let phi: f64 = weights.iter().sum();
    let (grad, hess) = moments(kernel, &weights, phi);
    Ok(CgfEval {
        a: a.to_vec(),
        phi,
        lambda: phi.ln(),
        grad,
        hess,
    })
}

fn check_tilt(kernel: &JumpDistribution, a: &[f64]) -> Result<()> {
    if a.len() != kernel.dim() {
        return Err(Error::Invalid(format!(
            "tilt has {} coordinates, model dimension is {}",
            a.len(),
            kernel.dim()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Invalid("tilt must be finite".into()));
    }
    Ok(())
}

/// Mean and covariance of the step under the tilted weights `w / total`.
fn moments(kernel: &JumpDistribution, weights: &[f64], total: f64) -> (Vec<f64>, DMatrix<f64>) {
    let d = kernel.dim();
    let mut mean = vec![0.0; d];
    let mut second = DMatrix::zeros(d, d);
    for (v, w) in kernel.support().iter().zip(weights) {
        let p = w / total;
        let vf = to_f64(v);
        for i in 0..d {
            mean[i] += p * vf[i];
            for j in 0..d {
                second[(i, j)] += p * vf[i] * vf[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..d {
            second[(i, j)] -= mean[i] * mean[j];
        }
    }
    (mean, second)
}

/// `Λ(a)` with its gradient and Hessian, via log-sum-exp so that large tilts
/// never overflow.
pub(crate) fn log_mgf(kernel: &JumpDistribution, a: &[f64]) -> (f64, Vec<f64>, DMatrix<f64>) {
    let exps: Vec<f64> = kernel
        .support()
        .iter()
        .zip(kernel.probs())
        .map(|(v, p)| dot(a, &to_f64(v)) + p.ln())
        .collect();
    let top = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = exps.iter().map(|e| (e - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    let (grad, hess) = moments(kernel, &weights, total);
    (top + total.ln(), grad, hess)
}

pub(crate) fn log_mgf_value(kernel: &JumpDistribution, a: &[f64]) -> f64 {
    let exps = kernel
        .support()
        .iter()
        .zip(kernel.probs())
        .map(|(v, p)| dot(a, &to_f64(v)) + p.ln());
    let exps: Vec<f64> = exps.collect();
    let top = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    top + exps.iter().map(|e| (e - top).exp()).sum::<f64>().ln()
}

/// Maximum of `φ` over a sphere `|a| = c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereMax {
    /// `max(1, sup_{|a|=c} φ(a))`.
    pub value: f64,
    pub argmax: Vec<f64>,
    /// True when the maximum is exact (d = 1); otherwise it is the best of a
    /// multi-start local search and hence a lower bound on the true maximum.
    pub exact: bool,
}

/// The constant `M_c = sup_{|a| ≤ c} φ̂(a)`; for a homogeneous walk this is
/// `max(1, max_{|a|=c} φ(a))` since `φ` is convex with `φ(0) = 1`.
pub fn m_c(model: &WalkModel, c: f64) -> Result<SphereMax> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Invalid(format!("c must be positive, got {c}")));
    }
    let kernel = model.interior();
    let d = model.dim();
    if d == 1 {
        let hi = phi_kernel(kernel, &[c])?.phi;
        let lo = phi_kernel(kernel, &[-c])?.phi;
        let (best, at) = if hi >= lo { (hi, c) } else { (lo, -c) };
        return Ok(SphereMax {
            value: best.max(1.0),
            argmax: vec![at],
            exact: true,
        });
    }

    // Overflow is checked once at the worst case |a|·|v|.
    if c * kernel.max_step() > EXPONENT_LIMIT {
        return Err(Error::Overflow {
            exponent: c * kernel.max_step(),
            limit: EXPONENT_LIMIT,
        });
    }

    let mut starts = Vec::with_capacity(2 * d + 8);
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[i] = s * c;
            starts.push(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x004d_5f63);
    for _ in 0..8 {
        let g: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
        let len = norm(&g).max(1e-300);
        starts.push(g.iter().map(|x| x * c / len).collect());
    }

    let mut best = (f64::NEG_INFINITY, starts[0].clone());
    for s in starts {
        let (val, at) = sphere_ascent(kernel, s, c)?;
        if val > best.0 {
            best = (val, at);
        }
    }
    Ok(SphereMax {
        value: best.0.max(1.0),
        argmax: best.1,
        exact: false,
    })
}

/// Riemannian gradient ascent of `φ` on the sphere of radius `c`.
fn sphere_ascent(kernel: &JumpDistribution, mut a: Vec<f64>, c: f64) -> Result<(f64, Vec<f64>)> {
    let mut cur = phi_kernel(kernel, &a)?;
    let mut step = 1.0;
    for _ in 0..500 {
        // gradient of φ is φ·∇Λ; project onto the tangent space
        let g: Vec<f64> = cur.grad.iter().map(|x| x * cur.phi).collect();
        let radial = dot(&g, &a) / (c * c);
        let tangent: Vec<f64> = g.iter().zip(&a).map(|(gi, ai)| gi - radial * ai).collect();
        let tn = norm(&tangent);
        if tn <= 1e-13 * cur.phi.max(1.0) {
            break;
        }
        let mut improved = false;
        while step > 1e-14 {
            let trial: Vec<f64> = a.iter().zip(&tangent).map(|(ai, ti)| ai + step * ti).collect();
            let len = norm(&trial);
            let trial: Vec<f64> = trial.iter().map(|x| x * c / len).collect();
            let next = phi_kernel(kernel, &trial)?;
            if next.phi > cur.phi {
                a = trial;
                cur = next;
                improved = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok((cur.phi, a))
}

/// Outcome of a Legendre-transform evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreResult {
    pub v: Vec<f64>,
    /// `Λ*(v)`; `+∞` outside the closed convex hull of the support.
    pub value: f64,
    pub argmax: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub region: HullRegion,
}

/// Legendre transform of the interior kernel's cumulant generating function.
pub fn legendre(model: &WalkModel, v: &[f64]) -> Result<LegendreResult> {
    legendre_kernel(model.interior(), v, None)
}

/// As [`legendre`], with an optional warm start for the Newton iteration.
pub fn legendre_kernel(kernel: &JumpDistribution, v: &[f64], warm: Option<&[f64]>) -> Result<LegendreResult> {
    if v.len() != kernel.dim() {
        return Err(Error::Invalid(format!(
            "velocity has {} coordinates, model dimension is {}",
            v.len(),
            kernel.dim()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Invalid("velocity must be finite".into()));
    }
    let points: Vec<Vec<f64>> = kernel.support().iter().map(|s| to_f64(s)).collect();
    match hull_region(&points, v) {
        HullRegion::Interior => {
            let start = warm.map(|w| w.to_vec()).unwrap_or_else(|| vec![0.0; v.len()]);
            let first = newton_legendre(kernel, v, start);
            if first.converged || warm.is_none() {
                return Ok(first);
            }
            // a warm start far from the optimum can stall; retry from the origin
            let cold = newton_legendre(kernel, v, vec![0.0; v.len()]);
            Ok(if cold.converged || cold.value > first.value { cold } else { first })
        }
        HullRegion::Boundary => Ok(capped_sup(kernel, v)),
        HullRegion::Exterior => Ok(LegendreResult {
            v: v.to_vec(),
            value: f64::INFINITY,
            argmax: vec![0.0; v.len()],
            converged: true,
            iterations: 0,
            region: HullRegion::Exterior,
        }),
    }
}

/// Damped Newton on `F(a) = Λ(a) − a·v` with Armijo backtracking.
fn newton_legendre(kernel: &JumpDistribution, v: &[f64], mut a: Vec<f64>) -> LegendreResult {
    let d = v.len();
    let objective = |a: &[f64]| log_mgf_value(kernel, a) - dot(a, v);
    let mut f = objective(&a);
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..NEWTON_MAX_ITER {
        iterations = it + 1;
        let (_, grad, hess) = log_mgf(kernel, &a);
        let g = DVector::from_iterator(d, grad.iter().zip(v).map(|(gi, vi)| gi - vi));
        if g.norm() <= GRAD_TOL * (1.0 + norm(v)) {
            converged = true;
            iterations = it;
            break;
        }
        let dir = match hess.clone().cholesky() {
            Some(ch) => -ch.solve(&g),
            None => {
                let ridge = hess + DMatrix::identity(d, d) * 1e-12;
                match ridge.cholesky() {
                    Some(ch) => -ch.solve(&g),
                    None => -g.clone(),
                }
            }
        };
        let slope = g.dot(&dir);
        if slope >= 0.0 {
            break;
        }
        if -slope < 1e-14 * (1.0 + f.abs()) {
            // decrease is below the resolution of F: take the pure Newton step
            a = a.iter().zip(dir.iter()).map(|(ai, di)| ai + di).collect();
            f = objective(&a);
            continue;
        }
        let mut s = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = a.iter().zip(dir.iter()).map(|(ai, di)| ai + s * di).collect();
            let ft = objective(&trial);
            if ft <= f + ARMIJO * s * slope {
                a = trial;
                f = ft;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            // no decrease representable: accept as converged if the gradient is tiny
            converged = g.norm() <= 1e-9 * (1.0 + norm(v));
            break;
        }
    }
    LegendreResult {
        v: v.to_vec(),
        value: -f,
        argmax: a,
        converged,
        iterations,
        region: HullRegion::Interior,
    }
}

/// Supremum over `|a| ≤ C` for doubling caps `C`, until the value stabilizes.
fn capped_sup(kernel: &JumpDistribution, v: &[f64]) -> LegendreResult {
    let d = v.len();
    let lipschitz = kernel
        .support()
        .iter()
        .map(|s| dot(&to_f64(s), &to_f64(s)))
        .fold(0.0, f64::max)
        .max(1e-12);
    let objective = |a: &[f64]| dot(a, v) - log_mgf_value(kernel, a);
    let mut a = vec![0.0; d];
    let mut prev = f64::NEG_INFINITY;
    let mut value = objective(&a);
    let mut iterations = 0;
    let mut cap = 1.0;
    while cap <= 1e6 {
        // warm start: push the previous optimum out to the new cap
        let len = norm(&a);
        if len > 0.0 {
            a = linalg::scale(&a, cap / len.max(cap / 2.0));
        }
        for _ in 0..20_000 {
            iterations += 1;
            let (_, grad, _) = log_mgf(kernel, &a);
            let mut next: Vec<f64> = a
                .iter()
                .zip(v.iter().zip(&grad))
                .map(|(ai, (vi, gi))| ai + (vi - gi) / lipschitz)
                .collect();
            let len = norm(&next);
            if len > cap {
                next = linalg::scale(&next, cap / len);
            }
            let moved = norm(&linalg::sub(&next, &a));
            a = next;
            if moved < 1e-13 * (1.0 + cap) {
                break;
            }
        }
        value = objective(&a);
        if (value - prev).abs() < 1e-8 {
            break;
        }
        prev = value;
        cap *= 2.0;
    }
    LegendreResult {
        v: v.to_vec(),
        value,
        argmax: a,
        converged: false,
        iterations,
        region: HullRegion::Boundary,
    }
}
