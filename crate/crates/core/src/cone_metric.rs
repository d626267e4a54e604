//! Cone metric spaces: a point domain with a distance valued in an ordered
//! space `(R^m, P, |.|)`.
//!
//! Two distance rules are supported. The *induced* rule on a continuous
//! domain `M ⊆ R^k` sets `d(x, y) = |x - y|_2 · λ` for a fixed nonzero
//! `λ ∈ P`; it satisfies the metric axioms by construction. The *table* rule
//! stores an `n × n` array of cone vectors for a finite domain and is checked
//! with [`verify_axioms`], which is exhaustive there.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cone::{Cone, ConeVec, NormSpec};
use crate::error::{Error, Result};

/// A point of the domain: an index into a finite domain or coordinates in a
/// continuous one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Index(usize),
    Coords(Vec<f64>),
}

impl Point {
    pub fn scalar(x: f64) -> Self {
        Point::Coords(vec![x])
    }

    pub fn as_index(&self) -> Option<usize> {
        match self {
            Point::Index(i) => Some(*i),
            Point::Coords(_) => None,
        }
    }

    pub fn as_coords(&self) -> Option<&[f64]> {
        match self {
            Point::Coords(c) => Some(c),
            Point::Index(_) => None,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Index(i) => write!(f, "#{i}"),
            Point::Coords(c) => {
                write!(f, "(")?;
                for (i, x) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x:e}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointDomain {
    /// `R^dim`; `bounds` is the sampling box, one `[lo, hi]` per coordinate.
    Continuous { dim: usize, bounds: Vec<[f64; 2]> },
    /// The indices `0..points`.
    Finite { points: usize },
}

impl PointDomain {
    pub fn interval(lo: f64, hi: f64) -> Self {
        PointDomain::Continuous {
            dim: 1,
            bounds: vec![[lo, hi]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PointDomain::Continuous { dim, bounds } => {
                if *dim == 0 {
                    return Err(Error::InvalidSpace("continuous domain needs dim >= 1".into()));
                }
                if bounds.len() != *dim {
                    return Err(Error::InvalidSpace(format!(
                        "expected {dim} bounds, got {}",
                        bounds.len()
                    )));
                }
                for [lo, hi] in bounds {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return Err(Error::InvalidSpace(format!(
                            "sampling box side [{lo}, {hi}] has no positive length"
                        )));
                    }
                }
            }
            PointDomain::Finite { points } => {
                if *points == 0 {
                    return Err(Error::InvalidSpace("finite domain needs at least one point".into()));
                }
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, PointDomain::Finite { .. })
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        match (self, p) {
            (PointDomain::Finite { points }, Point::Index(i)) => {
                if *i >= *points {
                    return Err(Error::IndexOutOfRange { index: *i, len: *points });
                }
                Ok(())
            }
            (PointDomain::Continuous { dim, .. }, Point::Coords(c)) => {
                if c.len() != *dim {
                    return Err(Error::DimensionMismatch { expected: *dim, got: c.len() });
                }
                if c.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("point"));
                }
                Ok(())
            }
            _ => Err(Error::OutsideDomain(p.clone())),
        }
    }

    /// All points of a finite domain; `None` for continuous domains.
    pub fn all_points(&self) -> Option<Vec<Point>> {
        match self {
            PointDomain::Finite { points } => Some((0..*points).map(Point::Index).collect()),
            PointDomain::Continuous { .. } => None,
        }
    }

    /// A uniform draw from the sampling box, or a uniform index.
    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> Point {
        match self {
            PointDomain::Finite { points } => Point::Index(rng.random_range(0..*points)),
            PointDomain::Continuous { bounds, .. } => Point::Coords(
                bounds.iter().map(|[lo, hi]| rng.random_range(*lo..*hi)).collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricSpec {
    /// `d(x, y) = |x - y|_2 · weights`.
    Induced { weights: ConeVec },
    /// `d(i, j) = table[i][j]`.
    Table { table: Vec<Vec<ConeVec>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "RawSpace")]
pub struct ConeMetricSpace {
    domain: PointDomain,
    cone: Cone,
    norm: NormSpec,
    metric: MetricSpec,
}

#[derive(Serialize, Deserialize)]
struct RawSpace {
    domain: PointDomain,
    cone: Cone,
    norm: NormSpec,
    metric: MetricSpec,
}

impl TryFrom<RawSpace> for ConeMetricSpace {
    type Error = Error;

    fn try_from(r: RawSpace) -> Result<Self> {
        ConeMetricSpace::new(r.domain, r.cone, r.norm, r.metric)
    }
}

impl From<ConeMetricSpace> for RawSpace {
    fn from(s: ConeMetricSpace) -> Self {
        RawSpace {
            domain: s.domain,
            cone: s.cone,
            norm: s.norm,
            metric: s.metric,
        }
    }
}

impl ConeMetricSpace {
    pub fn new(domain: PointDomain, cone: Cone, norm: NormSpec, metric: MetricSpec) -> Result<Self> {
        domain.validate()?;
        let m = cone.dim();
        norm.validate(m)?;
        match (&domain, &metric) {
            (PointDomain::Continuous { .. }, MetricSpec::Induced { weights }) => {
                cone.check_dim(weights)?;
                if weights.is_zero() {
                    return Err(Error::InvalidSpace("induced weights must not all be zero".into()));
                }
                if !cone.contains(weights)? {
                    return Err(Error::InvalidSpace(format!(
                        "induced weights {weights} do not lie in the cone"
                    )));
                }
            }
            (PointDomain::Finite { points }, MetricSpec::Table { table }) => {
                if table.len() != *points || table.iter().any(|row| row.len() != *points) {
                    return Err(Error::InvalidSpace(format!(
                        "distance table must be {points} x {points}"
                    )));
                }
                for row in table {
                    for d in row {
                        cone.check_dim(d)?;
                    }
                }
            }
            (PointDomain::Continuous { .. }, MetricSpec::Table { .. }) => {
                return Err(Error::InvalidSpace("table metrics need a finite domain".into()))
            }
            (PointDomain::Finite { .. }, MetricSpec::Induced { .. }) => {
                return Err(Error::InvalidSpace("induced metrics need a continuous domain".into()))
            }
        }
        Ok(ConeMetricSpace {
            domain,
            cone,
            norm,
            metric,
        })
    }

    /// `M = [lo, hi] ⊂ R` with `d(x, y) = |x - y| · weights` over the orthant.
    pub fn real_line(lo: f64, hi: f64, weights: Vec<f64>) -> Result<Self> {
        let cone = Cone::orthant(weights.len())?;
        ConeMetricSpace::new(
            PointDomain::interval(lo, hi),
            cone,
            NormSpec::Euclidean,
            MetricSpec::Induced {
                weights: ConeVec::new(weights)?,
            },
        )
    }

    pub fn finite(table: Vec<Vec<ConeVec>>, cone: Cone, norm: NormSpec) -> Result<Self> {
        let n = table.len();
        ConeMetricSpace::new(PointDomain::Finite { points: n }, cone, norm, MetricSpec::Table { table })
    }

    pub fn domain(&self) -> &PointDomain {
        &self.domain
    }

    pub fn cone(&self) -> &Cone {
        &self.cone
    }

    pub fn norm(&self) -> &NormSpec {
        &self.norm
    }

    pub fn metric(&self) -> &MetricSpec {
        &self.metric
    }

    pub fn ambient_dim(&self) -> usize {
        self.cone.dim()
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        self.domain.check_point(p)
    }

    pub fn distance(&self, p: &Point, q: &Point) -> Result<ConeVec> {
        self.check_point(p)?;
        self.check_point(q)?;
        Ok(match (&self.metric, p, q) {
            (MetricSpec::Table { table }, Point::Index(i), Point::Index(j)) => table[*i][*j].clone(),
            (MetricSpec::Induced { weights }, Point::Coords(a), Point::Coords(b)) => {
                let r = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                weights.scale(r)
            }
            _ => unreachable!("domain and metric variants are matched at construction"),
        })
    }

    pub fn distance_norm(&self, p: &Point, q: &Point) -> Result<f64> {
        Ok(self.norm.norm(&self.distance(p, q)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axiom {
    /// Positivity and `d(x, y) = 0` iff `x = y`.
    Cm1,
    /// Symmetry.
    Cm2,
    /// Triangle inequality in the cone order.
    Cm3,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axiom::Cm1 => "CM1",
            Axiom::Cm2 => "CM2",
            Axiom::Cm3 => "CM3",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub witness: Vec<Point>,
    pub values: Vec<ConeVec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub passed: bool,
    pub violations: Vec<AxiomViolation>,
}

/// Checks the three metric axioms on `points`: CM1 and CM2 on all pairs, CM3
/// on all ordered triples. With every point of a finite domain this is a
/// complete proof that the table is a cone metric.
pub fn verify_axioms(space: &ConeMetricSpace, points: &[Point]) -> Result<AxiomReport> {
    if points.is_empty() {
        return Err(Error::SequenceTooShort { need: 1, got: 0 });
    }
    let cone = space.cone();
    let n = points.len();
    let mut d = Vec::with_capacity(n);
    for p in points {
        let row = points
            .iter()
            .map(|q| space.distance(p, q))
            .collect::<Result<Vec<_>>>()?;
        d.push(row);
    }

    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let dij = &d[i][j];
            let same = points[i] == points[j];
            let bad = !cone.contains(dij)? || (same && !dij.is_zero()) || (!same && dij.is_zero());
            if bad {
                violations.push(AxiomViolation {
                    axiom: Axiom::Cm1,
                    witness: vec![points[i].clone(), points[j].clone()],
                    values: vec![dij.clone()],
                });
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = &d[i][j] - &d[j][i];
            if diff.coords().iter().any(|c| c.abs() > cone.eps()) {
                violations.push(AxiomViolation {
                    axiom: Axiom::Cm2,
                    witness: vec![points[i].clone(), points[j].clone()],
                    values: vec![d[i][j].clone(), d[j][i].clone()],
                });
            }
        }
    }
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let via = &d[x][z] + &d[z][y];
                if !cone.leq(&d[x][y], &via)? {
                    violations.push(AxiomViolation {
                        axiom: Axiom::Cm3,
                        witness: vec![points[x].clone(), points[y].clone(), points[z].clone()],
                        values: vec![d[x][y].clone(), via],
                    });
                }
            }
        }
    }
    Ok(AxiomReport {
        passed: violations.is_empty(),
        violations,
    })
}

/// Norm test for convergence: every term in the last `tail_window` entries
/// satisfies `|d(x_n, candidate)| <= tol`. For a normal cone this is
/// equivalent to convergence in the cone sense.
pub fn check_convergence(
    space: &ConeMetricSpace,
    seq: &[Point],
    candidate: &Point,
    tail_window: usize,
    tol: f64,
) -> Result<bool> {
    if seq.is_empty() {
        return Err(Error::SequenceTooShort { need: 1, got: 0 });
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Unsupported(format!("tolerance must be positive, got {tol}")));
    }
    let start = seq.len().saturating_sub(tail_window.max(1));
    for p in &seq[start..] {
        if space.distance_norm(p, candidate)? > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `num / den` with `0/0 = 0`; `None` when only the denominator vanishes.
pub(crate) fn step_ratio(num: f64, den: f64) -> Option<f64> {
    if den == 0.0 {
        if num == 0.0 {
            Some(0.0)
        } else {
            None
        }
    } else {
        Some(num / den)
    }
}

/// Consecutive ratios `|d(x_{n+1}, x_n)| / |d(x_n, x_{n-1})|`.
///
/// A ratio is `Some(0.0)` when both norms vanish and `None` when only the
/// denominator does.
pub fn cauchy_ratio_profile(space: &ConeMetricSpace, seq: &[Point]) -> Result<Vec<Option<f64>>> {
    if seq.len() < 3 {
        return Err(Error::SequenceTooShort { need: 3, got: seq.len() });
    }
    let steps = seq
        .windows(2)
        .map(|w| space.distance_norm(&w[1], &w[0]))
        .collect::<Result<Vec<_>>>()?;
    Ok(steps.windows(2).map(|w| step_ratio(w[1], w[0])).collect())
}
