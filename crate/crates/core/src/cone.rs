//! Cones in `R^m`, the partial order they induce, and normal constants.
//!
//! Membership is decided through a single scalar *margin*: a vector belongs
//! to the cone when its margin is at least `-eps`, and to the interior when
//! the margin exceeds `eps`. Boundary points therefore count as members but
//! never as interior points.
//!
//! ```
//! use conefix::cone::{Cone, ConeVec};
//!
//! let p = Cone::second_order(3).unwrap();
//! let v = ConeVec::new(vec![1.0, 0.6, 0.8]).unwrap();
//! assert!(p.contains(&v).unwrap());
//! assert!(!p.interior_contains(&v).unwrap());
//! ```

use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_EPS: f64 = 1e-9;

/// An element of the ambient ordered space `R^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ConeVec(Vec<f64>);

impl ConeVec {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("cone vector"));
        }
        Ok(ConeVec(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        ConeVec(vec![0.0; dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn dot(&self, other: &ConeVec) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, s: f64) -> ConeVec {
        ConeVec(self.0.iter().map(|c| c * s).collect())
    }

    fn check_dim(&self, other: &ConeVec) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for ConeVec {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ConeVec::new(v)
    }
}

impl From<ConeVec> for Vec<f64> {
    fn from(v: ConeVec) -> Self {
        v.0
    }
}

impl Index<usize> for ConeVec {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Display for ConeVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c:e}")?;
        }
        write!(f, ")")
    }
}

// Arithmetic panics on dimension mismatch, like slice indexing. All vectors
// produced inside a space share its ambient dimension.
impl<'a> Add<&'a ConeVec> for &'a ConeVec {
    type Output = ConeVec;

    fn add(self, rhs: &ConeVec) -> ConeVec {
        assert_eq!(self.dim(), rhs.dim(), "cone vector dimension mismatch");
        ConeVec(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl<'a> Sub<&'a ConeVec> for &'a ConeVec {
    type Output = ConeVec;

    fn sub(self, rhs: &ConeVec) -> ConeVec {
        assert_eq!(self.dim(), rhs.dim(), "cone vector dimension mismatch");
        ConeVec(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &ConeVec {
    type Output = ConeVec;

    fn neg(self) -> ConeVec {
        ConeVec(self.0.iter().map(|c| -c).collect())
    }
}

impl Mul<&ConeVec> for f64 {
    type Output = ConeVec;

    fn mul(self, rhs: &ConeVec) -> ConeVec {
        rhs.scale(self)
    }
}

/// The shape of a closed pointed cone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConeKind {
    /// `{v : v_i >= 0}`.
    Orthant { dim: usize },
    /// Intersection of the half-spaces `<n_i, v> >= 0`.
    Polyhedral { normals: Vec<Vec<f64>> },
    /// The Lorentz cone `{v : v_0 >= |(v_1, .., v_{m-1})|_2}`.
    SecondOrder { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCone", into = "RawCone")]
pub struct Cone {
    kind: ConeKind,
    eps: f64,
}

#[derive(Serialize, Deserialize)]
struct RawCone {
    #[serde(flatten)]
    kind: ConeKind,
    #[serde(default = "default_eps")]
    eps: f64,
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

impl TryFrom<RawCone> for Cone {
    type Error = Error;

    fn try_from(raw: RawCone) -> Result<Self> {
        Cone::with_eps(raw.kind, raw.eps)
    }
}

impl From<Cone> for RawCone {
    fn from(c: Cone) -> Self {
        RawCone {
            kind: c.kind,
            eps: c.eps,
        }
    }
}

impl Cone {
    pub fn with_eps(kind: ConeKind, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidCone(format!("eps must be positive, got {eps}")));
        }
        match &kind {
            ConeKind::Orthant { dim } | ConeKind::SecondOrder { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidCone("dimension must be at least 1".into()));
                }
            }
            ConeKind::Polyhedral { normals } => {
                let Some(first) = normals.first() else {
                    return Err(Error::InvalidCone("polyhedral cone needs at least one facet normal".into()));
                };
                if first.is_empty() {
                    return Err(Error::InvalidCone("facet normals must be non-empty".into()));
                }
                for (i, n) in normals.iter().enumerate() {
                    if n.len() != first.len() {
                        return Err(Error::InvalidCone(format!(
                            "facet normal {i} has length {}, expected {}",
                            n.len(),
                            first.len()
                        )));
                    }
                    if n.iter().any(|c| !c.is_finite()) {
                        return Err(Error::InvalidCone(format!("facet normal {i} is not finite")));
                    }
                    if n.iter().all(|&c| c == 0.0) {
                        return Err(Error::InvalidCone(format!("facet normal {i} is zero")));
                    }
                }
            }
        }
        Ok(Cone { kind, eps })
    }

    pub fn new(kind: ConeKind) -> Result<Self> {
        Cone::with_eps(kind, DEFAULT_EPS)
    }

    pub fn orthant(dim: usize) -> Result<Self> {
        Cone::new(ConeKind::Orthant { dim })
    }

    pub fn second_order(dim: usize) -> Result<Self> {
        Cone::new(ConeKind::SecondOrder { dim })
    }

    pub fn polyhedral(normals: Vec<Vec<f64>>) -> Result<Self> {
        Cone::new(ConeKind::Polyhedral { normals })
    }

    pub fn kind(&self) -> &ConeKind {
        &self.kind
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn is_orthant(&self) -> bool {
        matches!(self.kind, ConeKind::Orthant { .. })
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ConeKind::Orthant { dim } | ConeKind::SecondOrder { dim } => *dim,
            ConeKind::Polyhedral { normals } => normals[0].len(),
        }
    }

    pub fn check_dim(&self, v: &ConeVec) -> Result<()> {
        if v.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.dim(),
            });
        }
        Ok(())
    }

    /// Signed distance-like margin of `v` against the cone's defining
    /// inequalities; nonnegative exactly on the (untolerated) cone.
    pub fn margin(&self, v: &ConeVec) -> Result<f64> {
        self.check_dim(v)?;
        Ok(self.margin_unchecked(v.coords()))
    }

    pub(crate) fn margin_unchecked(&self, v: &[f64]) -> f64 {
        match &self.kind {
            ConeKind::Orthant { .. } => v.iter().copied().fold(f64::INFINITY, f64::min),
            ConeKind::Polyhedral { normals } => normals
                .iter()
                .map(|n| {
                    let len = n.iter().map(|c| c * c).sum::<f64>().sqrt();
                    n.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / len
                })
                .fold(f64::INFINITY, f64::min),
            ConeKind::SecondOrder { .. } => {
                let tail = v[1..].iter().map(|c| c * c).sum::<f64>().sqrt();
                v[0] - tail
            }
        }
    }

    pub fn contains(&self, v: &ConeVec) -> Result<bool> {
        Ok(self.margin(v)? >= -self.eps)
    }

    pub fn interior_contains(&self, v: &ConeVec) -> Result<bool> {
        Ok(self.margin(v)? > self.eps)
    }

    /// `x <= y` iff `y - x` lies in the cone.
    pub fn leq(&self, x: &ConeVec, y: &ConeVec) -> Result<bool> {
        self.check_dim(x)?;
        x.check_dim(y)?;
        self.contains(&(y - x))
    }

    /// `x << y` iff `y - x` lies in the interior.
    pub fn strictly_less(&self, x: &ConeVec, y: &ConeVec) -> Result<bool> {
        self.check_dim(x)?;
        x.check_dim(y)?;
        self.interior_contains(&(y - x))
    }

    /// Draws a member of the cone. Roughly half the draws land on the
    /// boundary, where the normal-constant supremum tends to be attained.
    pub(crate) fn sample_member<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let dim = self.dim();
        match &self.kind {
            ConeKind::Orthant { .. } => (0..dim)
                .map(|_| {
                    let g: f64 = rng.sample(StandardNormal);
                    if rng.random_bool(0.3) {
                        0.0
                    } else {
                        g.abs()
                    }
                })
                .collect(),
            ConeKind::SecondOrder { .. } => {
                let tail: Vec<f64> = (1..dim).map(|_| rng.sample(StandardNormal)).collect();
                let r = tail.iter().map(|c| c * c).sum::<f64>().sqrt();
                let lift = if rng.random_bool(0.5) {
                    0.0
                } else {
                    rng.sample::<f64, _>(StandardNormal).abs()
                };
                let mut v = Vec::with_capacity(dim);
                v.push(r + lift);
                v.extend(tail);
                v
            }
            ConeKind::Polyhedral { .. } => {
                for _ in 0..1000 {
                    let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                    if self.margin_unchecked(&v) >= 0.0 {
                        return v;
                    }
                }
                vec![0.0; dim]
            }
        }
    }
}

/// Norm on the ambient space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormSpec {
    Euclidean,
    Max,
    /// `sqrt(sum_i w_i v_i^2)` with positive weights.
    Weighted { weights: Vec<f64> },
}

impl NormSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if let NormSpec::Weighted { weights } = self {
            if weights.len() != dim {
                return Err(Error::InvalidNorm(format!(
                    "expected {dim} weights, got {}",
                    weights.len()
                )));
            }
            if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                return Err(Error::InvalidNorm("weights must be positive and finite".into()));
            }
        }
        Ok(())
    }

    pub fn norm(&self, v: &ConeVec) -> f64 {
        self.norm_slice(v.coords())
    }

    pub(crate) fn norm_slice(&self, v: &[f64]) -> f64 {
        match self {
            NormSpec::Euclidean => v.iter().map(|c| c * c).sum::<f64>().sqrt(),
            NormSpec::Max => v.iter().fold(0.0, |m, c| m.max(c.abs())),
            NormSpec::Weighted { weights } => v
                .iter()
                .zip(weights)
                .map(|(c, w)| w * c * c)
                .sum::<f64>()
                .sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalConstantEstimate {
    pub value: f64,
    pub samples_used: usize,
    pub seed: u64,
    /// Set when `value` is the exact constant rather than a sampled lower bound.
    pub is_analytic: bool,
}

/// Normal constant `K` of `cone` under `norm`.
///
/// The orthant with any of the supported norms is monotone, so `K = 1`
/// exactly. Every other combination falls back to
/// [`sampled_normal_constant`], which can only underestimate `K`.
pub fn estimate_normal_constant(
    cone: &Cone,
    norm: &NormSpec,
    seed: u64,
    n_samples: usize,
) -> Result<NormalConstantEstimate> {
    norm.validate(cone.dim())?;
    if n_samples == 0 {
        return Err(Error::Unsupported("n_samples must be at least 1".into()));
    }
    if cone.is_orthant() {
        return Ok(NormalConstantEstimate {
            value: 1.0,
            samples_used: 0,
            seed,
            is_analytic: true,
        });
    }
    sampled_normal_constant(cone, norm, seed, n_samples)
}

/// Sampled supremum of `|x|` over pairs `0 <= x <= y` with `|y| = 1`.
///
/// Samples are drawn as `x, w` in the cone and `y = x + t w`, so the order
/// relation holds by construction. The pair `x = y` is always counted, so the
/// result is at least 1. A longer run with the same seed extends the same
/// sample stream, so the estimate is nondecreasing in `n_samples`.
pub fn sampled_normal_constant(
    cone: &Cone,
    norm: &NormSpec,
    seed: u64,
    n_samples: usize,
) -> Result<NormalConstantEstimate> {
    norm.validate(cone.dim())?;
    if n_samples == 0 {
        return Err(Error::Unsupported("n_samples must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sup = 1.0_f64;
    for _ in 0..n_samples {
        let x = cone.sample_member(&mut rng);
        let w = cone.sample_member(&mut rng);
        let t = (rng.random_range(-4.0..4.0_f64)).exp();
        let y: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a + t * b).collect();
        let ny = norm.norm_slice(&y);
        if ny > 0.0 {
            sup = sup.max(norm.norm_slice(&x) / ny);
        }
    }
    Ok(NormalConstantEstimate {
        value: sup,
        samples_used: n_samples,
        seed,
        is_analytic: false,
    })
}
