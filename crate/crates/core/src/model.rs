//! Random-walk models on the integer lattice.
//!
//! A [`WalkModel`] is a homogeneous walk on `ℤ^d`, or a walk on the half
//! lattice `{z₁ ≥ 0}` that uses a separate boundary kernel on the hyperplane
//! `z₁ = 0`. Models are loaded from TOML documents:
//!
//! ```toml
//! dim = 1
//! state_space = "full"
//!
//! [interior]
//! support = [[1], [-1]]
//! probs = [0.7, 0.3]
//! ```
//!
//! A `[boundary]` table with the same layout is required for
//! `state_space = "halfspace"` and forbidden otherwise.

use std::collections::HashSet;
use std::path::Path;

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, to_f64, vertex_lp};

/// Tolerance on `|Σ pᵢ − 1|`.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Drift norms at or below this are treated as zero.
pub const ZERO_DRIFT_TOL: f64 = 1e-12;

/// Law of a single lattice step: finitely many distinct steps with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpDistribution {
    support: Vec<Vec<i64>>,
    probs: Vec<f64>,
}

impl JumpDistribution {
    pub fn new(support: Vec<Vec<i64>>, probs: Vec<f64>) -> Result<Self> {
        Self::validated(support, probs, "kernel")
    }

    fn validated(support: Vec<Vec<i64>>, probs: Vec<f64>, path: &str) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::config(format!("{path}.support"), "empty support"));
        }
        if support.len() != probs.len() {
            return Err(Error::config(
                format!("{path}.probs"),
                format!("{} probabilities for {} support vectors", probs.len(), support.len()),
            ));
        }
        let dim = support[0].len();
        if dim == 0 {
            return Err(Error::config(format!("{path}.support[0]"), "zero-length step"));
        }
        let mut seen = HashSet::new();
        for (i, v) in support.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::config(
                    format!("{path}.support[{i}]"),
                    format!("expected {dim} coordinates, found {}", v.len()),
                ));
            }
            if !seen.insert(v.clone()) {
                return Err(Error::config(format!("{path}.support[{i}]"), format!("duplicate step {v:?}")));
            }
        }
        for (i, &p) in probs.iter().enumerate() {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::config(
                    format!("{path}.probs[{i}]"),
                    format!("probability {p} is not strictly positive"),
                ));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::config(format!("{path}.probs"), format!("probability sum {}", tidy(sum))));
        }
        Ok(Self { support, probs })
    }

    pub fn support(&self) -> &[Vec<i64>] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.support[0].len()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (v, &p) in self.support.iter().zip(&self.probs) {
            for (mi, &vi) in m.iter_mut().zip(v) {
                *mi += p * vi as f64;
            }
        }
        m
    }

    /// Largest Euclidean step length.
    pub fn max_step(&self) -> f64 {
        self.support.iter().map(|v| norm(&to_f64(v))).fold(0.0, f64::max)
    }

    /// Builds a distribution from weights that are only normalized up to
    /// rounding; used for tilted kernels.
    pub(crate) fn from_weights(support: Vec<Vec<i64>>, weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        let probs = weights.into_iter().map(|w| w / total).collect();
        Self { support, probs }
    }
}

/// Rounds to 12 significant digits for error messages.
fn tidy(x: f64) -> String {
    let s = format!("{:.12e}", x);
    let v: f64 = s.parse().unwrap_or(x);
    format!("{v}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateSpace {
    FullLattice,
    HalfSpace,
}

/// How transience of the walk is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransienceMode {
    /// Nonzero drift.
    Drift,
    /// Zero drift in dimension three or more.
    Dimension,
    /// Zero drift in dimension one or two: Green's functions are infinite.
    Recurrent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkModel {
    dim: usize,
    interior: JumpDistribution,
    boundary: Option<JumpDistribution>,
    state_space: StateSpace,
    transience: TransienceMode,
}

impl WalkModel {
    pub fn new(
        interior: JumpDistribution,
        boundary: Option<JumpDistribution>,
        state_space: StateSpace,
    ) -> Result<Self> {
        let dim = interior.dim();
        match (state_space, &boundary) {
            (StateSpace::FullLattice, Some(_)) => {
                return Err(Error::config("boundary", "boundary kernel given for a full-lattice model"))
            }
            (StateSpace::HalfSpace, None) => {
                return Err(Error::config("boundary", "halfspace model requires a boundary kernel"))
            }
            (StateSpace::HalfSpace, Some(b)) => {
                if b.dim() != dim {
                    return Err(Error::config("boundary.support", "dimension differs from interior"));
                }
                if let Some(i) = b.support.iter().position(|v| v[0] < 0) {
                    return Err(Error::config(
                        format!("boundary.support[{i}]"),
                        "boundary steps must keep z1 >= 0",
                    ));
                }
                if let Some(i) = interior.support.iter().position(|v| v[0] < -1) {
                    return Err(Error::config(
                        format!("interior.support[{i}]"),
                        "interior steps of a halfspace model must have first coordinate >= -1",
                    ));
                }
            }
            (StateSpace::FullLattice, None) => {}
        }
        let transience = if norm(&interior.mean()) > ZERO_DRIFT_TOL {
            TransienceMode::Drift
        } else if dim >= 3 {
            TransienceMode::Dimension
        } else {
            TransienceMode::Recurrent
        };
        Ok(Self {
            dim,
            interior,
            boundary,
            state_space,
            transience,
        })
    }

    /// Homogeneous walk on the full lattice.
    pub fn homogeneous(support: Vec<Vec<i64>>, probs: Vec<f64>) -> Result<Self> {
        let interior = JumpDistribution::validated(support, probs, "interior")?;
        Self::new(interior, None, StateSpace::FullLattice)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn interior(&self) -> &JumpDistribution {
        &self.interior
    }

    pub fn boundary(&self) -> Option<&JumpDistribution> {
        self.boundary.as_ref()
    }

    pub fn state_space(&self) -> StateSpace {
        self.state_space
    }

    pub fn transience(&self) -> TransienceMode {
        self.transience
    }

    pub fn is_homogeneous(&self) -> bool {
        self.state_space == StateSpace::FullLattice
    }

    pub fn is_transient(&self) -> bool {
        self.transience != TransienceMode::Recurrent
    }

    /// Mean of the interior step.
    pub fn drift(&self) -> Vec<f64> {
        self.interior.mean()
    }

    pub fn contains(&self, z: &[i64]) -> bool {
        z.len() == self.dim && (self.state_space == StateSpace::FullLattice || z[0] >= 0)
    }

    /// Membership of a scaled position in the cone of limit points of `E/n`.
    pub fn in_reachable_cone(&self, q: &[f64]) -> bool {
        q.len() == self.dim && (self.state_space == StateSpace::FullLattice || q[0] >= 0.0)
    }

    pub fn on_boundary(&self, z: &[i64]) -> bool {
        self.state_space == StateSpace::HalfSpace && z[0] == 0
    }

    /// One-step law from `z`.
    pub fn step_kernel(&self, z: &[i64]) -> Result<&JumpDistribution> {
        if !self.contains(z) {
            return Err(Error::Invalid(format!("{z:?} is outside the state space")));
        }
        Ok(match &self.boundary {
            Some(b) if self.on_boundary(z) => b,
            _ => &self.interior,
        })
    }

    pub fn to_config_string(&self) -> String {
        let mut doc = Table::new();
        doc.insert("dim".into(), Value::Integer(self.dim as i64));
        let ss = match self.state_space {
            StateSpace::FullLattice => "full",
            StateSpace::HalfSpace => "halfspace",
        };
        doc.insert("state_space".into(), Value::String(ss.into()));
        doc.insert("interior".into(), Value::Table(kernel_table(&self.interior)));
        if let Some(b) = &self.boundary {
            doc.insert("boundary".into(), Value::Table(kernel_table(b)));
        }
        toml::to_string(&doc).expect("model tables always serialize")
    }
}

fn kernel_table(k: &JumpDistribution) -> Table {
    let mut t = Table::new();
    let support = k
        .support
        .iter()
        .map(|v| Value::Array(v.iter().map(|&x| Value::Integer(x)).collect()))
        .collect();
    t.insert("support".into(), Value::Array(support));
    t.insert("probs".into(), Value::Array(k.probs.iter().map(|&p| Value::Float(p)).collect()));
    t
}

/// Parses and validates a model document.
pub fn load_model(config_text: &str) -> Result<WalkModel> {
    let doc: Table = toml::from_str(config_text).map_err(|e| Error::config("<document>", e.to_string().trim().to_string()))?;
    for key in doc.keys() {
        if !matches!(key.as_str(), "dim" | "state_space" | "interior" | "boundary") {
            return Err(Error::config(key.clone(), "unknown field"));
        }
    }
    let dim = match doc.get("dim") {
        Some(Value::Integer(d)) if *d > 0 => *d as usize,
        Some(_) => return Err(Error::config("dim", "must be a positive integer")),
        None => return Err(Error::config("dim", "missing field")),
    };
    let state_space = match doc.get("state_space") {
        None => StateSpace::FullLattice,
        Some(Value::String(s)) if s == "full" => StateSpace::FullLattice,
        Some(Value::String(s)) if s == "halfspace" => StateSpace::HalfSpace,
        Some(_) => return Err(Error::config("state_space", "expected \"full\" or \"halfspace\"")),
    };
    let interior = match doc.get("interior") {
        Some(v) => parse_kernel(v, "interior", dim)?,
        None => return Err(Error::config("interior", "missing table")),
    };
    let boundary = doc.get("boundary").map(|v| parse_kernel(v, "boundary", dim)).transpose()?;
    WalkModel::new(interior, boundary, state_space)
}

pub fn load_model_file(path: impl AsRef<Path>) -> Result<WalkModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    load_model(&text)
}

fn parse_kernel(value: &Value, path: &str, dim: usize) -> Result<JumpDistribution> {
    let Value::Table(t) = value else {
        return Err(Error::config(path, "expected a table"));
    };
    for key in t.keys() {
        if key != "support" && key != "probs" {
            return Err(Error::config(format!("{path}.{key}"), "unknown field"));
        }
    }
    let Some(Value::Array(rows)) = t.get("support") else {
        return Err(Error::config(format!("{path}.support"), "missing array"));
    };
    let mut support = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let Value::Array(coords) = row else {
            return Err(Error::config(format!("{path}.support[{i}]"), "expected an integer array"));
        };
        if coords.len() != dim {
            return Err(Error::config(
                format!("{path}.support[{i}]"),
                format!("expected {dim} coordinates, found {}", coords.len()),
            ));
        }
        let mut v = Vec::with_capacity(dim);
        for (j, c) in coords.iter().enumerate() {
            match c {
                Value::Integer(x) => v.push(*x),
                _ => return Err(Error::config(format!("{path}.support[{i}][{j}]"), "expected an integer")),
            }
        }
        support.push(v);
    }
    let Some(Value::Array(ps)) = t.get("probs") else {
        return Err(Error::config(format!("{path}.probs"), "missing array"));
    };
    let mut probs = Vec::with_capacity(ps.len());
    for (i, p) in ps.iter().enumerate() {
        match p {
            Value::Float(x) => probs.push(*x),
            _ => {
                return Err(Error::config(
                    format!("{path}.probs[{i}]"),
                    "probabilities must be decimal literals",
                ))
            }
        }
    }
    JumpDistribution::validated(support, probs, path)
}

/// A step sequence realizing a displacement close to a requested direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub direction: Vec<f64>,
    /// Optimal LP cost per unit displacement in `direction`.
    pub unit_cost: f64,
    /// How many times each interior support vector is used.
    pub counts: Vec<u64>,
    pub displacement: Vec<i64>,
    /// `-log` of the probability of the step sequence.
    pub neg_log_prob: f64,
}

impl Witness {
    /// The step sequence, grouped by support index.
    pub fn steps(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize))
            .collect()
    }
}

/// Feasible constant for the communication condition, with the witness paths
/// that justify it.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunicationCertificate {
    pub theta: f64,
    pub witnesses: Vec<Witness>,
}

impl CommunicationCertificate {
    pub fn witness_holds(&self, w: &Witness) -> bool {
        let len = norm(&to_f64(&w.displacement));
        w.neg_log_prob <= self.theta * len + self.theta
    }
}

/// Cheapest way per unit distance to travel in direction `u` with the interior
/// steps: `min Σ cᵢxᵢ` over `Σ xᵢvᵢ = u`, `x ≥ 0`, `cᵢ = −log pᵢ`.
pub fn unit_cost(model: &WalkModel, u: &[f64]) -> Result<(f64, Vec<f64>)> {
    let k = &model.interior;
    let columns: Vec<Vec<f64>> = k.support.iter().map(|v| to_f64(v)).collect();
    let costs: Vec<f64> = k.probs.iter().map(|p| -p.ln()).collect();
    vertex_lp(&columns, &costs, u)
        .ok_or_else(|| Error::Infeasible(format!("direction {u:?} is not in the positive span of the steps")))
}

pub fn communication_theta(model: &WalkModel, directions: &[Vec<f64>]) -> Result<CommunicationCertificate> {
    if directions.is_empty() {
        return Err(Error::Invalid("no directions requested".into()));
    }
    let mut solved = Vec::with_capacity(directions.len());
    for d in directions {
        if d.len() != model.dim {
            return Err(Error::Invalid(format!("direction {d:?} has wrong dimension")));
        }
        let len = norm(d);
        if len == 0.0 || !len.is_finite() {
            return Err(Error::Invalid("direction must be nonzero".into()));
        }
        let u: Vec<f64> = d.iter().map(|x| x / len).collect();
        let (cost, x) = unit_cost(model, &u)?;
        solved.push((u, cost, x));
    }
    let theta = solved.iter().map(|s| s.1).fold(0.0, f64::max);
    let mut witnesses = Vec::with_capacity(solved.len());
    for (u, cost, x) in solved {
        let w = find_witness(model, &u, cost, &x, theta).ok_or_else(|| {
            Error::NotConverged(format!("no lattice witness path found for direction {u:?}"))
        })?;
        witnesses.push(w);
    }
    Ok(CommunicationCertificate { theta, witnesses })
}

/// Rounds `L·x` to integer step counts for increasing `L` until the path
/// satisfies the certificate inequality and points along `u`.
fn find_witness(model: &WalkModel, u: &[f64], cost: f64, x: &[f64], theta: f64) -> Option<Witness> {
    let k = &model.interior;
    let costs: Vec<f64> = k.probs.iter().map(|p| -p.ln()).collect();
    let active: Vec<usize> = (0..x.len()).filter(|&i| x[i] > 1e-12).collect();
    for scale in 1..=1024u64 {
        for mask in 0..(1u32 << active.len()) {
            let mut counts = vec![0u64; x.len()];
            for (bit, &i) in active.iter().enumerate() {
                let target = x[i] * scale as f64;
                counts[i] = if mask & (1 << bit) == 0 { target.floor() } else { target.ceil() } as u64;
            }
            let mut disp = vec![0i64; model.dim];
            for (i, &c) in counts.iter().enumerate() {
                for (dj, &vj) in disp.iter_mut().zip(&k.support[i]) {
                    *dj += c as i64 * vj;
                }
            }
            let df = to_f64(&disp);
            let len = norm(&df);
            if len == 0.0 || dot(&df, u) / len < 0.95 {
                continue;
            }
            let neg_log_prob: f64 = counts.iter().zip(&costs).map(|(&c, &ci)| c as f64 * ci).sum();
            if neg_log_prob <= theta * len + theta {
                return Some(Witness {
                    direction: u.to_vec(),
                    unit_cost: cost,
                    counts,
                    displacement: disp,
                    neg_log_prob,
                });
            }
        }
    }
    None
}
