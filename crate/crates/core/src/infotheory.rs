//! Entropy-based scoring of classifier outputs.
//!
//! Everything here works in nats and operates on [`ProbVector`]s produced by a
//! classifier. Small probabilities are floored at a clamp constant (default
//! [`EPS`]) before any logarithm is taken; clamping never renormalizes.
//!
//! | Function | Quantity |
//! |----------|----------|
//! | [`entropy`] | H(p) = -Σ p·ln p |
//! | [`rem_score`] | diversity: D(onehot(y) ‖ z) = -ln z_y |
//! | [`joint`] | symmetrized outer product of two predictions |
//! | [`mutual_info_term`] | 1 + I(X;Y) of that joint |
//! | [`cem_score`] | quality: mutual_info_term(z, zt) - H(z) |
//! | [`min_max_norm`] | affine rescale of a pool onto [0, 1] |
//! | [`combine`] | merge normalized diversity and quality |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default clamp constant applied before logarithms.
pub const EPS: f64 = 1e-10;

/// Tolerance on `Σ p = 1` when validating a distribution.
pub const SUM_TOLERANCE: f64 = 1e-6;

/// Range below which [`min_max_norm`] treats a pool as constant.
pub const DEGENERATE_RANGE: f64 = 1e-12;

/// A categorical distribution over `C >= 2` classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::Domain(format!(
                "a distribution needs at least 2 classes, got {}",
                probs.len()
            )));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::Domain(format!("probability {i} is {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Domain(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self(probs))
    }

    pub fn uniform(num_classes: usize) -> Result<Self> {
        Self::new(vec![1.0 / num_classes as f64; num_classes])
    }

    /// Softmax of raw logits, shifted by the maximum for stability.
    pub fn softmax(logits: &[f64]) -> Result<Self> {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        Self::new(exps.into_iter().map(|e| e / total).collect())
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Index of the most probable class; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

/// A class index interpreted as a one-hot distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OneHotLabel {
    class_index: usize,
    num_classes: usize,
}

impl OneHotLabel {
    pub fn new(class_index: usize, num_classes: usize) -> Result<Self> {
        if num_classes < 2 || class_index >= num_classes {
            return Err(Error::Domain(format!(
                "class {class_index} out of range for {num_classes} classes"
            )));
        }
        Ok(Self {
            class_index,
            num_classes,
        })
    }

    pub fn class_index(&self) -> usize {
        self.class_index
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn materialize(&self) -> ProbVector {
        let mut v = vec![0.0; self.num_classes];
        v[self.class_index] = 1.0;
        ProbVector(v)
    }
}

/// Symmetric C×C joint distribution, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointMatrix {
    size: usize,
    cells: Vec<f64>,
}

impl JointMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.size + col]
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().sum()
    }
}

/// Raw (unnormalized) diversity and quality of one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorePair {
    pub s_div_raw: f64,
    pub s_qua_raw: f64,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("clamp constant must be positive, got {eps}")))
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::Domain(format!("length mismatch: {a} vs {b}")))
    }
}

#[inline]
fn floor_at(x: f64, eps: f64) -> f64 {
    if x < eps {
        eps
    } else {
        x
    }
}

/// Replaces every entry below `eps` with `eps`. No renormalization.
pub fn clamp(p: &ProbVector, eps: f64) -> Result<ProbVector> {
    check_eps(eps)?;
    Ok(ProbVector(p.0.iter().map(|&x| floor_at(x, eps)).collect()))
}

/// Shannon entropy `-Σ p_c ln(max(p_c, eps))`.
pub fn entropy(p: &ProbVector, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(-p.0.iter().map(|&x| x * floor_at(x, eps).ln()).sum::<f64>())
}

/// Diversity score: cross-entropy of `z` against a one-hot label.
///
/// Because the label has zero entropy this equals the relative entropy between
/// the label distribution and the prediction.
pub fn rem_score(z: &ProbVector, y: OneHotLabel, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    check_lengths(z.num_classes(), y.num_classes())?;
    Ok(-floor_at(z.0[y.class_index], eps).ln())
}

/// Joint built from two predictions: `(z ⊗ zt + zt ⊗ z) / 2`, scaled to unit mass.
pub fn joint(z: &ProbVector, zt: &ProbVector) -> Result<JointMatrix> {
    check_lengths(z.num_classes(), zt.num_classes())?;
    let c = z.num_classes();
    let mut cells = vec![0.0; c * c];
    for i in 0..c {
        for j in 0..c {
            cells[i * c + j] = (z.0[i] * zt.0[j] + zt.0[i] * z.0[j]) / 2.0;
        }
    }
    let total: f64 = cells.iter().sum();
    for x in &mut cells {
        *x /= total;
    }
    Ok(JointMatrix { size: c, cells })
}

/// `1 - Σ P (ln Pi + ln Pj - ln P)` over the clamped joint of `z` and `zt`,
/// i.e. one plus the mutual information of that joint.
///
/// Anti-correlated confident predictions (`z = e_a`, `zt = e_b`, `a != b`)
/// reach `1 + ln 2`, higher than identical ones; the value is kept as is.
pub fn mutual_info_term(z: &ProbVector, zt: &ProbVector, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let p = joint(z, zt)?;
    let c = p.size;
    let cells: Vec<f64> = p.cells.iter().map(|&x| floor_at(x, eps)).collect();
    let rows: Vec<f64> = (0..c).map(|i| cells[i * c..(i + 1) * c].iter().sum()).collect();
    let cols: Vec<f64> = (0..c)
        .map(|j| (0..c).map(|i| cells[i * c + j]).sum())
        .collect();
    let mut acc = 0.0;
    for i in 0..c {
        for j in 0..c {
            let pij = cells[i * c + j];
            acc += pij * (rows[i].ln() + cols[j].ln() - pij.ln());
        }
    }
    Ok(1.0 - acc)
}

/// Quality score: `mutual_info_term(z, zt) - H(z)`, i.e. the negated
/// conditional entropy of `z` given `zt`, offset by one.
///
/// Here `H` is taken over the clamped vector, `-Σ q ln q` with
/// `q = max(z, eps)`, which differs from [`entropy`] by at most
/// `C · eps · |ln eps|` when some entries fall below `eps`.
pub fn cem_score(z: &ProbVector, zt: &ProbVector, eps: f64) -> Result<f64> {
    let mi = mutual_info_term(z, zt, eps)?;
    let h: f64 = -z
        .0
        .iter()
        .map(|&x| {
            let q = floor_at(x, eps);
            q * q.ln()
        })
        .sum::<f64>();
    Ok(mi - h)
}

/// Both raw scores for a candidate prediction `z`, its source prediction `zt`
/// and the source label `y`.
pub fn score_pair(z: &ProbVector, zt: &ProbVector, y: OneHotLabel, eps: f64) -> Result<ScorePair> {
    Ok(ScorePair {
        s_div_raw: rem_score(z, y, eps)?,
        s_qua_raw: cem_score(z, zt, eps)?,
    })
}

/// Maps each value to `(v - min) / (max - min)`. A pool whose range is at most
/// [`DEGENERATE_RANGE`] maps to all zeros.
pub fn min_max_norm(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Domain("cannot normalize an empty pool".into()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range.is_nan() || range <= DEGENERATE_RANGE {
        return Ok(vec![0.0; values.len()]);
    }
    Ok(values
        .iter()
        .map(|&v| ((v - min) / range).clamp(0.0, 1.0))
        .collect())
}

/// How normalized diversity and quality merge into a total score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub enum Scheme {
    #[default]
    Add,
    Mul,
    /// `alpha * s_div + (1 - alpha) * s_qua`; `alpha = 1` is diversity only,
    /// `alpha = 0` quality only.
    Weighted(f64),
}

impl Scheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Scheme::Weighted(alpha) if !(0.0..=1.0).contains(&alpha) => Err(Error::Config(
                format!("weighting alpha must lie in [0, 1], got {alpha}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn rem_only() -> Self {
        Scheme::Weighted(1.0)
    }

    pub fn cem_only() -> Self {
        Scheme::Weighted(0.0)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Add => write!(f, "add"),
            Scheme::Mul => write!(f, "mul"),
            Scheme::Weighted(a) => write!(f, "weighted({a})"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    /// Accepts `add`, `mul`, `weighted` (alpha 0.5), `weighted(0.3)`,
    /// `rem-only` and `cem-only`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let scheme = match s.as_str() {
            "add" => Scheme::Add,
            "mul" => Scheme::Mul,
            "weighted" => Scheme::Weighted(0.5),
            "rem-only" | "rem_only" | "rem" => Scheme::rem_only(),
            "cem-only" | "cem_only" | "cem" => Scheme::cem_only(),
            other => {
                let alpha = other
                    .strip_prefix("weighted(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|a| a.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown scheme {other:?}")))?;
                Scheme::Weighted(alpha)
            }
        };
        scheme.validate()?;
        Ok(scheme)
    }
}

pub fn combine(s_div: f64, s_qua: f64, scheme: Scheme) -> Result<f64> {
    scheme.validate()?;
    Ok(match scheme {
        Scheme::Add => s_div + s_qua,
        Scheme::Mul => s_div * s_qua,
        Scheme::Weighted(alpha) => alpha * s_div + (1.0 - alpha) * s_qua,
    })
}
