//! Quasipotential `I(q, q') = inf_T T·Λ*((q' − q)/T)` of a homogeneous walk.
//!
//! Two independent routes are provided and are expected to agree:
//!
//! * [`quasipotential_inf_t`] minimizes the convex function
//!   `g(T) = T·Λ*((q' − q)/T)` over the horizon `T`;
//! * [`quasipotential_support`] evaluates the support function
//!   `sup { a·q : φ(a) ≤ 1 }` of the sublevel set of the generating function.
//!
//! Both are translation invariant by construction: only `q' − q` is used.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::cgf::{legendre_kernel, log_mgf, log_mgf_value};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, scale, sub};
use crate::model::{JumpDistribution, WalkModel, ZERO_DRIFT_TOL};
use crate::rng::substream;

/// Golden-section stopping width, relative to `max(1, T)`.
const HORIZON_TOL: f64 = 1e-10;
/// Bisection stopping width on the level `a·q`, relative to `max(1, |q|)`.
const LEVEL_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: usize = 200;

/// Finite-horizon rate `I_T(q, q') = T·Λ*((q' − q)/T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFiniteT {
    pub horizon: f64,
    pub q: Vec<f64>,
    pub q_prime: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    SupportFunction,
    InfOverT,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasipotentialResult {
    pub q: Vec<f64>,
    pub q_prime: Vec<f64>,
    pub value: f64,
    /// Optimal horizon; `+∞` when the infimum is only approached as `T → ∞`.
    pub t_star: f64,
    pub a_star: Vec<f64>,
    pub method: Method,
    pub converged: bool,
    /// Set when `q = q'` and the value was returned as zero without solving.
    pub diagonal: bool,
}

fn require_homogeneous(model: &WalkModel) -> Result<()> {
    if !model.is_homogeneous() {
        return Err(Error::Hypothesis(
            "rate functions are only available for full-lattice (homogeneous) models".into(),
        ));
    }
    Ok(())
}

fn check_dims(model: &WalkModel, vs: &[&[f64]]) -> Result<()> {
    for v in vs {
        if v.len() != model.dim() || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!(
                "point {v:?} must be a finite vector of dimension {}",
                model.dim()
            )));
        }
    }
    Ok(())
}

pub fn rate_finite_t(model: &WalkModel, horizon: f64, q: &[f64], q_prime: &[f64]) -> Result<RateFiniteT> {
    require_homogeneous(model)?;
    check_dims(model, &[q, q_prime])?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Invalid(format!("horizon must be positive, got {horizon}")));
    }
    let v = scale(&sub(q_prime, q), 1.0 / horizon);
    let lr = legendre_kernel(model.interior(), &v, None)?;
    Ok(RateFiniteT {
        horizon,
        q: q.to_vec(),
        q_prime: q_prime.to_vec(),
        value: horizon * lr.value,
    })
}

/// Quasipotential by direct minimization over the horizon.
pub fn quasipotential_inf_t(model: &WalkModel, q: &[f64], q_prime: &[f64]) -> Result<QuasipotentialResult> {
    require_homogeneous(model)?;
    check_dims(model, &[q, q_prime])?;
    let delta = sub(q_prime, q);
    let (value, t_star, a_star, converged) = if q == q_prime {
        (0.0, 0.0, vec![0.0; model.dim()], true)
    } else {
        minimize_over_horizon(model.interior(), &delta)?
    };
    Ok(QuasipotentialResult {
        q: q.to_vec(),
        q_prime: q_prime.to_vec(),
        // Λ* ≥ 0; rounding can leave a tiny negative minimum along the drift
        value: value.max(0.0),
        t_star,
        a_star,
        method: Method::InfOverT,
        converged,
        diagonal: q == q_prime,
    })
}

struct HorizonObjective<'a> {
    kernel: &'a JumpDistribution,
    delta: &'a [f64],
    warm: Option<Vec<f64>>,
}

impl HorizonObjective<'_> {
    fn eval(&mut self, t: f64) -> Result<(f64, Vec<f64>)> {
        let v = scale(self.delta, 1.0 / t);
        let lr = legendre_kernel(self.kernel, &v, self.warm.as_deref())?;
        if lr.value.is_finite() && lr.converged {
            self.warm = Some(lr.argmax.clone());
        }
        Ok((t * lr.value, lr.argmax))
    }
}

fn minimize_over_horizon(kernel: &JumpDistribution, delta: &[f64]) -> Result<(f64, f64, Vec<f64>, bool)> {
    let mut g = HorizonObjective {
        kernel,
        delta,
        warm: None,
    };
    let drift = norm(&kernel.mean());
    let dist = norm(delta);
    let t0 = if drift > ZERO_DRIFT_TOL { dist / drift } else { dist };

    // move right until g is finite (small horizons may leave the hull)
    let mut t = t0;
    let mut gt = g.eval(t)?.0;
    let mut k = 0;
    while !gt.is_finite() {
        t *= 2.0;
        gt = g.eval(t)?.0;
        k += 1;
        if k > MAX_DOUBLINGS {
            return Ok((f64::INFINITY, f64::INFINITY, vec![0.0; delta.len()], true));
        }
    }

    let (lo, hi) = {
        let g_up = g.eval(2.0 * t)?.0;
        if g_up < gt {
            let (mut lo, mut mid, mut gmid) = (t, 2.0 * t, g_up);
            let mut k = 0;
            loop {
                let hi = 2.0 * mid;
                let ghi = g.eval(hi)?.0;
                if ghi >= gmid {
                    break (lo, hi);
                }
                (lo, mid, gmid) = (mid, hi, ghi);
                k += 1;
                if k > MAX_DOUBLINGS {
                    // decreasing forever: infimum approached as T → ∞ (zero drift)
                    let a_mid = g.eval(mid)?.1;
                    return Ok((gmid, f64::INFINITY, a_mid, false));
                }
            }
        } else {
            let (mut mid, mut hi, mut gmid) = (t, 2.0 * t, gt);
            loop {
                let lo = mid / 2.0;
                let (glo, _) = g.eval(lo)?;
                if !(glo < gmid) {
                    break (lo, hi);
                }
                (hi, mid, gmid) = (mid, lo, glo);
                if mid < 1e-300 {
                    break (0.0, hi);
                }
            }
        }
    };

    // golden-section search on [lo, hi]
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut gc, mut ac) = g.eval(c)?;
    let (mut gd, mut ad) = g.eval(d)?;
    let mut iterations = 0;
    while b - a > HORIZON_TOL * c.max(1.0) && iterations < 400 {
        iterations += 1;
        if gc <= gd {
            b = d;
            (d, gd, ad) = (c, gc, ac);
            c = b - ratio * (b - a);
            (gc, ac) = g.eval(c)?;
        } else {
            a = c;
            (c, gc, ac) = (d, gd, ad);
            d = a + ratio * (b - a);
            (gd, ad) = g.eval(d)?;
        }
    }
    let converged = b - a <= HORIZON_TOL * c.max(1.0);
    let (mut t_best, mut g_best, mut a_best) = if gc <= gd { (c, gc, ac) } else { (d, gd, ad) };

    // one Newton step on g'(T) = −Λ(a*), g''(T) = Δᵀ H⁻¹ Δ / T³
    let (lambda, _, hess) = log_mgf(kernel, &a_best);
    let dv = DVector::from_column_slice(delta);
    if let Some(ch) = hess.cholesky() {
        let curvature = dv.dot(&ch.solve(&dv)) / t_best.powi(3);
        if curvature > 0.0 && curvature.is_finite() {
            let t_new = t_best + lambda / curvature;
            if t_new > 0.0 {
                let (g_new, a_new) = g.eval(t_new)?;
                if g_new <= g_best {
                    (t_best, g_best, a_best) = (t_new, g_new, a_new);
                }
            }
        }
    }
    Ok((g_best, t_best, a_best, converged))
}

/// Quasipotential from the origin to `q` as the support function of
/// `{a : φ(a) ≤ 1}`.
pub fn quasipotential_support(model: &WalkModel, q: &[f64]) -> Result<QuasipotentialResult> {
    require_homogeneous(model)?;
    check_dims(model, &[q])?;
    let origin = vec![0.0; model.dim()];
    if norm(q) == 0.0 {
        return Ok(QuasipotentialResult {
            q: origin.clone(),
            q_prime: q.to_vec(),
            value: 0.0,
            t_star: 0.0,
            a_star: origin,
            method: Method::SupportFunction,
            converged: true,
            diagonal: true,
        });
    }
    if norm(&model.drift()) <= ZERO_DRIFT_TOL {
        return Err(Error::Hypothesis(
            "support-function quasipotential needs a nonzero drift".into(),
        ));
    }
    let (value, a_star, converged) = support_value(model.interior(), q)?;
    let grad = log_mgf(model.interior(), &a_star).1;
    let speed = norm(&grad);
    let t_star = if speed > 0.0 { norm(q) / speed } else { f64::INFINITY };
    Ok(QuasipotentialResult {
        q: origin,
        q_prime: q.to_vec(),
        value,
        t_star,
        a_star,
        method: Method::SupportFunction,
        converged,
        diagonal: false,
    })
}

/// Restriction of `Λ` to the affine hyperplane `{a : a·u = s}`, minimized by
/// Newton over coordinates in an orthonormal basis of `u^⊥`.
struct Slice<'a> {
    kernel: &'a JumpDistribution,
    u: Vec<f64>,
    basis: DMatrix<f64>,
    y: DVector<f64>,
}

impl<'a> Slice<'a> {
    fn new(kernel: &'a JumpDistribution, u: Vec<f64>) -> Self {
        let d = u.len();
        // complete u to an orthonormal basis via QR of [u | I]
        let mut m = DMatrix::<f64>::zeros(d, d + 1);
        for i in 0..d {
            m[(i, 0)] = u[i];
            m[(i, i + 1)] = 1.0;
        }
        let q = m.qr().q();
        let basis = q.columns(1, d - 1).into_owned();
        Self {
            kernel,
            u,
            basis,
            y: DVector::zeros(d - 1),
        }
    }

    fn point(&self, s: f64, y: &DVector<f64>) -> Vec<f64> {
        let off = &self.basis * y;
        self.u.iter().zip(off.iter()).map(|(ui, oi)| s * ui + oi).collect()
    }

    /// `min_y Λ(s·u + N y)` and the minimizing tilt; `-∞` if unbounded below.
    fn minimize(&mut self, s: f64) -> (f64, Vec<f64>) {
        let k = self.basis.ncols();
        if k == 0 {
            let a = scale(&self.u, s);
            return (log_mgf_value(self.kernel, &a), a);
        }
        let mut y = self.y.clone();
        let mut f = log_mgf_value(self.kernel, &self.point(s, &y));
        for _ in 0..100 {
            let a = self.point(s, &y);
            let (_, grad, hess) = log_mgf(self.kernel, &a);
            let g = self.basis.transpose() * DVector::from_column_slice(&grad);
            if g.norm() < 1e-13 {
                break;
            }
            let h = self.basis.transpose() * hess * &self.basis;
            let step = match h.clone().cholesky() {
                Some(ch) => -ch.solve(&g),
                None => -g.clone(),
            };
            let slope = g.dot(&step);
            if -slope < 1e-15 * (1.0 + f.abs()) {
                y += step;
                f = log_mgf_value(self.kernel, &self.point(s, &y));
                continue;
            }
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let trial = &y + &step * t;
                let ft = log_mgf_value(self.kernel, &self.point(s, &trial));
                if ft <= f + 1e-4 * t * slope {
                    y = trial;
                    f = ft;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved || f < -1e6 {
                break;
            }
        }
        if f < -1e6 {
            return (f64::NEG_INFINITY, self.point(s, &y));
        }
        self.y = y.clone();
        (f, self.point(s, &y))
    }
}

fn support_value(kernel: &JumpDistribution, q: &[f64]) -> Result<(f64, Vec<f64>, bool)> {
    let qn = norm(q);
    let u = scale(q, 1.0 / qn);
    let mut slice = Slice::new(kernel, u.clone());

    // h(s) = min {Λ(a) : a·u = s} is convex with h(0) ≤ 0; find where it turns positive
    let (mut lo, mut a_lo) = (0.0, vec![0.0; q.len()]);
    let mut hi = 1.0 / kernel.max_step().max(1.0);
    let mut doublings = 0;
    loop {
        let (h, a) = slice.minimize(hi);
        if h > 0.0 {
            break;
        }
        lo = hi;
        a_lo = a;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Hypothesis(format!(
                "sup of a·q over {{φ ≤ 1}} is unbounded for q = {q:?}: the target is not reachable"
            )));
        }
    }
    slice.minimize(lo);

    let width = LEVEL_TOL * qn.max(1.0) / qn;
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let (h, a) = slice.minimize(mid);
        if h <= 0.0 {
            lo = mid;
            a_lo = a;
        } else {
            hi = mid;
        }
    }

    // polish with safeguarded Newton on h(s) = 0, h'(s) = ∇Λ(a)·u
    let mut s = lo;
    let mut a_best = a_lo;
    for _ in 0..4 {
        let (h, a) = slice.minimize(s);
        let slope = dot(&log_mgf(kernel, &a).1, &u);
        if !(slope > 0.0) {
            break;
        }
        let next = s - h / slope;
        if !(next >= lo - width && next <= hi + width) {
            break;
        }
        let (hn, an) = slice.minimize(next);
        if hn.abs() > h.abs() {
            break;
        }
        s = next;
        a_best = an;
        if hn.abs() < 1e-15 {
            break;
        }
    }
    Ok((s * qn, a_best, true))
}

/// Dispatches to either route after translating `q` to the origin.
pub fn quasipotential(model: &WalkModel, q: &[f64], q_prime: &[f64], method: Method) -> Result<QuasipotentialResult> {
    match method {
        Method::InfOverT => quasipotential_inf_t(model, q, q_prime),
        Method::SupportFunction => {
            check_dims(model, &[q, q_prime])?;
            let mut r = quasipotential_support(model, &sub(q_prime, q))?;
            r.q = q.to_vec();
            r.q_prime = q_prime.to_vec();
            r.diagonal = q == q_prime;
            Ok(r)
        }
    }
}

/// Largest violation observed for one identity.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub max_violation: f64,
    pub samples: usize,
}

/// Result of [`identity_suite`]. Violations are measured relative to
/// `max(1, |reference|)`, so they are absolute errors for values below one.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub checks: Vec<IdentityCheck>,
    pub tolerance: f64,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.max_violation < self.tolerance)
    }

    pub fn check(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const IDENTITY_TOL: f64 = 1e-7;

pub const IDENTITY_NAMES: [&str; 6] = [
    "scaling",
    "subadditivity",
    "representation",
    "homogeneity",
    "triangle",
    "diagonal",
];

fn rel_gap(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a.is_infinite() || b.is_infinite() {
        return f64::INFINITY;
    }
    (a - b).abs() / b.abs().max(1.0)
}

fn excess(lhs: f64, rhs: f64) -> f64 {
    if rhs.is_infinite() || lhs <= rhs {
        return 0.0;
    }
    (lhs - rhs) / rhs.abs().max(1.0)
}

/// Randomized checks of the rate-function identities: scaling and
/// subadditivity of `I_T`, agreement of the two quasipotential routes, and
/// homogeneity, triangle inequality and `I(q, q) = 0` of the quasipotential.
pub fn identity_suite(model: &WalkModel, samples: usize, seed: u64) -> Result<IdentityReport> {
    require_homogeneous(model)?;
    if norm(&model.drift()) <= ZERO_DRIFT_TOL {
        return Err(Error::Hypothesis("identity suite needs a drifted model".into()));
    }
    let d = model.dim();
    let per_sample: Vec<[f64; 6]> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<[f64; 6]> {
            let mut rng = substream(seed, i as u64);
            let point = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
                (0..d).map(|_| r.random_range(-2.0..2.0)).collect()
            };
            let q = point(&mut rng);
            let q1 = point(&mut rng);
            let q2 = point(&mut rng);
            let t = rng.random_range(0.3..4.0);
            let t1 = rng.random_range(0.3..4.0);
            let theta = rng.random_range(0.1..10.0);

            let scaled_q: Vec<f64> = scale(&q, theta);
            let scaled_q1: Vec<f64> = scale(&q1, theta);
            let base = rate_finite_t(model, t, &q, &q1)?.value;
            let scaled = rate_finite_t(model, theta * t, &scaled_q, &scaled_q1)?.value;
            let scaling = rel_gap(scaled, theta * base);

            let joint = rate_finite_t(model, t + t1, &q, &q2)?.value;
            let leg2 = rate_finite_t(model, t1, &q1, &q2)?.value;
            let subadditivity = excess(joint, base + leg2);

            let via_t = quasipotential_inf_t(model, &q, &q1)?;
            let via_support = quasipotential(model, &q, &q1, Method::SupportFunction)?;
            let representation = rel_gap(via_support.value, via_t.value);

            let i_scaled = quasipotential_inf_t(model, &scaled_q, &scaled_q1)?.value;
            let homogeneity = rel_gap(i_scaled, theta * via_t.value);

            let i12 = quasipotential_inf_t(model, &q1, &q2)?.value;
            let i02 = quasipotential_inf_t(model, &q, &q2)?.value;
            let triangle = excess(i02, via_t.value + i12);

            let diagonal = quasipotential_inf_t(model, &q, &q)?.value.abs();
            Ok([scaling, subadditivity, representation, homogeneity, triangle, diagonal])
        })
        .collect::<Result<Vec<_>>>()?;

    let checks = IDENTITY_NAMES
        .iter()
        .enumerate()
        .map(|(k, &name)| IdentityCheck {
            name,
            max_violation: per_sample.iter().map(|s| s[k]).fold(0.0, f64::max),
            samples,
        })
        .collect();
    Ok(IdentityReport {
        checks,
        tolerance: IDENTITY_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walk1d() -> WalkModel {
        WalkModel::homogeneous(vec![vec![1], vec![-1]], vec![0.7, 0.3]).unwrap()
    }

    fn walk2d() -> WalkModel {
        WalkModel::homogeneous(vec![vec![1, 0], vec![0, 1], vec![-1, 0], vec![0, -1]], vec![0.4, 0.3, 0.2, 0.1])
            .unwrap()
    }

    #[test]
    fn finite_horizon_rate_examples() {
        let m = walk1d();
        assert!(rate_finite_t(&m, 2.0, &[0.0], &[0.8]).unwrap().value.abs() < 1e-14);
        let r = rate_finite_t(&m, 1.0, &[0.0], &[0.0]).unwrap();
        assert!((r.value + (2.0 * 0.21f64.sqrt()).ln()).abs() < 1e-12);
        // outside the reachable hull in one step
        assert_eq!(rate_finite_t(&m, 1.0, &[0.0], &[2.0]).unwrap().value, f64::INFINITY);
    }

    #[test]
    fn inf_t_1d_closed_form() {
        let m = walk1d();
        let r = quasipotential_inf_t(&m, &[0.0], &[-1.0]).unwrap();
        assert!((r.value - (7.0f64 / 3.0).ln()).abs() < 1e-9, "{}", r.value);
        // tilted drift at a* = log(3/7) is -0.4, so the optimal horizon is 2.5
        assert!((r.t_star - 2.5).abs() < 1e-4, "{}", r.t_star);
        assert!((r.a_star[0] - (3.0f64 / 7.0).ln()).abs() < 1e-6);
    }

    #[test]
    fn inf_t_drift_target_is_free() {
        let m = walk1d();
        let r = quasipotential_inf_t(&m, &[0.0], &[0.4]).unwrap();
        assert!(r.value.abs() < 1e-9);
        assert!((r.t_star - 1.0).abs() < 1e-3, "{}", r.t_star);
    }

    #[test]
    fn support_1d_closed_form() {
        let m = walk1d();
        let left = quasipotential_support(&m, &[-1.0]).unwrap();
        assert!((left.value - (7.0f64 / 3.0).ln()).abs() < 1e-12, "{}", left.value);
        let right = quasipotential_support(&m, &[1.0]).unwrap();
        assert!(right.value.abs() < 1e-12);
    }

    #[test]
    fn support_zero_along_drift_2d() {
        let m = walk2d();
        let r = quasipotential_support(&m, &[0.2, 0.2]).unwrap();
        assert!(r.value.abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn support_requires_drift() {
        let sym = WalkModel::homogeneous(vec![vec![1], vec![-1]], vec![0.5, 0.5]).unwrap();
        assert!(matches!(quasipotential_support(&sym, &[1.0]), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn zero_drift_infimum_is_zero() {
        let sym = WalkModel::homogeneous(vec![vec![1], vec![-1]], vec![0.5, 0.5]).unwrap();
        let r = quasipotential_inf_t(&sym, &[0.0], &[3.0]).unwrap();
        assert!(r.value.abs() < 1e-8, "{r:?}");
        assert!(!r.converged || r.t_star > 1e8, "{r:?}");
    }

    #[test]
    fn support_reports_unreachable_direction() {
        let m = WalkModel::homogeneous(vec![vec![1], vec![2]], vec![0.5, 0.5]).unwrap();
        assert!(matches!(quasipotential_support(&m, &[-1.0]), Err(Error::Hypothesis(_))));
        assert_eq!(quasipotential_inf_t(&m, &[0.0], &[-1.0]).unwrap().value, f64::INFINITY);
    }

    #[test]
    fn methods_agree_2d() {
        let m = walk2d();
        for q in [[-1.0, 0.5], [0.3, -2.0], [1.0, 1.0], [-0.7, -0.7], [2.0, 0.0]] {
            let a = quasipotential_support(&m, &q).unwrap();
            let b = quasipotential_inf_t(&m, &[0.0, 0.0], &q).unwrap();
            assert!((a.value - b.value).abs() <= 1e-7 * a.value.max(1.0), "{q:?}: {} vs {}", a.value, b.value);
        }
    }

    #[test]
    fn homogeneity_in_scale() {
        let m = walk1d();
        let base = quasipotential_inf_t(&m, &[0.0], &[-1.0]).unwrap().value;
        for theta in [0.5, 2.0, 7.0] {
            let v = quasipotential_inf_t(&m, &[0.0], &[-theta]).unwrap().value;
            assert!((v - theta * base).abs() < 1e-8 * theta.max(1.0));
        }
    }

    #[test]
    fn translation_uses_the_same_path() {
        let m = walk2d();
        let (q, qp) = ([0.25, -1.5], [1.0, 0.75]);
        let delta = sub(&qp, &q);
        let a = quasipotential_inf_t(&m, &q, &qp).unwrap();
        let b = quasipotential_inf_t(&m, &[0.0, 0.0], &delta).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn diagonal_short_circuit() {
        let r = quasipotential_inf_t(&walk2d(), &[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.diagonal);
    }

    #[test]
    fn identity_suite_1d() {
        let report = identity_suite(&walk1d(), 200, 3).unwrap();
        for c in &report.checks {
            assert!(c.max_violation < 1e-7, "{}: {}", c.name, c.max_violation);
        }
        assert!(report.passed());
    }

    #[test]
    fn identity_suite_2d() {
        let report = identity_suite(&walk2d(), 100, 11).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn halfspace_rates_refused() {
        let text = "dim = 1\nstate_space = \"halfspace\"\n[interior]\nsupport = [[1],[-1]]\nprobs = [0.4,0.6]\n[boundary]\nsupport = [[1],[0]]\nprobs = [0.5,0.5]\n";
        let m = crate::model::load_model(text).unwrap();
        assert!(rate_finite_t(&m, 1.0, &[0.0], &[0.0]).is_err());
    }
}
