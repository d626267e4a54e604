//! The self-map pair `(S, T)`.
//!
//! Maps come in three checkable shapes: affine maps on `R^k`, rational
//! functions of one real variable, and index tables on a finite domain. Each
//! shape supports evaluation, a commutation test, a range-inclusion test, and
//! a T-preimage solver used to build the Jungck sequence `T x_n = S x_{n-1}`.
//!
//! All three shapes are continuous on their domains (tables live on discrete
//! spaces), so the continuity hypothesis on `T` holds structurally.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone_metric::{Point, PointDomain};
use crate::error::{Error, Result};

/// Denominators smaller than this in magnitude count as poles.
pub const POLE_TOL: f64 = 1e-12;

const SCAN_CELLS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    /// `x -> A x + b`.
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    /// `x -> p(x) / q(x)`; coefficients in ascending powers.
    #[serde(rename = "rational")]
    ScalarRational { numerator: Vec<f64>, denominator: Vec<f64> },
    /// `i -> images[i]`.
    #[serde(rename = "table")]
    FiniteTable { images: Vec<usize> },
}

impl MapSpec {
    /// The one-dimensional affine map `x -> a x + b`.
    pub fn scalar_affine(a: f64, b: f64) -> Self {
        MapSpec::Affine {
            matrix: vec![vec![a]],
            offset: vec![b],
        }
    }

    pub fn affine(matrix: Vec<Vec<f64>>, offset: Vec<f64>) -> Self {
        MapSpec::Affine { matrix, offset }
    }

    pub fn rational(numerator: Vec<f64>, denominator: Vec<f64>) -> Self {
        MapSpec::ScalarRational { numerator, denominator }
    }

    pub fn table(images: Vec<usize>) -> Self {
        MapSpec::FiniteTable { images }
    }

    pub fn identity_table(n: usize) -> Self {
        MapSpec::FiniteTable {
            images: (0..n).collect(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            MapSpec::Affine { .. } => "affine",
            MapSpec::ScalarRational { .. } => "rational",
            MapSpec::FiniteTable { .. } => "table",
        }
    }

    /// Checks the map against the domain it acts on.
    pub fn validate(&self, domain: &PointDomain) -> Result<()> {
        match (self, domain) {
            (MapSpec::Affine { matrix, offset }, PointDomain::Continuous { dim, .. }) => {
                if matrix.len() != *dim || matrix.iter().any(|r| r.len() != *dim) {
                    return Err(Error::InvalidMap(format!("affine matrix must be {dim} x {dim}")));
                }
                if offset.len() != *dim {
                    return Err(Error::InvalidMap(format!("affine offset must have length {dim}")));
                }
                if matrix.iter().flatten().chain(offset).any(|c| !c.is_finite()) {
                    return Err(Error::InvalidMap("affine coefficients must be finite".into()));
                }
                Ok(())
            }
            (MapSpec::ScalarRational { numerator, denominator }, PointDomain::Continuous { dim, bounds }) => {
                if *dim != 1 {
                    return Err(Error::InvalidMap("rational maps act on one-dimensional domains".into()));
                }
                if numerator.is_empty() || denominator.is_empty() {
                    return Err(Error::InvalidMap("rational map needs coefficients".into()));
                }
                if numerator.iter().chain(denominator).any(|c| !c.is_finite()) {
                    return Err(Error::InvalidMap("rational coefficients must be finite".into()));
                }
                let [lo, hi] = bounds[0];
                let mut prev: Option<f64> = None;
                for i in 0..=SCAN_CELLS {
                    let x = grid_point(lo, hi, i);
                    let q = horner(denominator, x);
                    if q.abs() < POLE_TOL || prev.is_some_and(|p| p.signum() != q.signum()) {
                        return Err(Error::InvalidMap(format!(
                            "denominator has a root in the sampling box [{lo}, {hi}]"
                        )));
                    }
                    prev = Some(q);
                }
                Ok(())
            }
            (MapSpec::FiniteTable { images }, PointDomain::Finite { points }) => {
                if images.len() != *points {
                    return Err(Error::InvalidMap(format!(
                        "table has {} entries for {points} points",
                        images.len()
                    )));
                }
                if let Some(&bad) = images.iter().find(|&&i| i >= *points) {
                    return Err(Error::IndexOutOfRange { index: bad, len: *points });
                }
                Ok(())
            }
            _ => Err(Error::Incompatible(format!(
                "{} map does not act on this domain",
                self.kind_name()
            ))),
        }
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        match (self, p) {
            (MapSpec::Affine { matrix, offset }, Point::Coords(x)) => {
                if x.len() != offset.len() {
                    return Err(Error::DimensionMismatch {
                        expected: offset.len(),
                        got: x.len(),
                    });
                }
                let y: Vec<f64> = matrix
                    .iter()
                    .zip(offset)
                    .map(|(row, b)| row.iter().zip(x).map(|(a, xi)| a * xi).sum::<f64>() + b)
                    .collect();
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("affine image"));
                }
                Ok(Point::Coords(y))
            }
            (MapSpec::ScalarRational { numerator, denominator }, Point::Coords(x)) => {
                if x.len() != 1 {
                    return Err(Error::DimensionMismatch { expected: 1, got: x.len() });
                }
                let q = horner(denominator, x[0]);
                if q.abs() < POLE_TOL {
                    return Err(Error::PoleHit(x[0]));
                }
                let y = horner(numerator, x[0]) / q;
                if !y.is_finite() {
                    return Err(Error::NonFinite("rational image"));
                }
                Ok(Point::scalar(y))
            }
            (MapSpec::FiniteTable { images }, Point::Index(i)) => images
                .get(*i)
                .map(|&j| Point::Index(j))
                .ok_or(Error::IndexOutOfRange {
                    index: *i,
                    len: images.len(),
                }),
            _ => Err(Error::OutsideDomain(p.clone())),
        }
    }
}

fn grid_point(lo: f64, hi: f64, i: usize) -> f64 {
    if i == SCAN_CELLS {
        hi
    } else {
        lo + (hi - lo) * (i as f64) / (SCAN_CELLS as f64)
    }
}

/// Evaluates `sum_i c_i x^i`.
fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let k = rows.len();
    DMatrix::from_fn(k, k, |i, j| rows[i][j])
}

fn is_invertible(a: &DMatrix<f64>) -> bool {
    let sv = a.clone().singular_values();
    let max = sv.max();
    max > 0.0 && sv.min() > max * 1e-12
}

/// Distance between two points of the same domain: Euclidean for coordinates,
/// discrete (0 or 1) for indices.
fn point_gap(a: &Point, b: &Point) -> f64 {
    match (a, b) {
        (Point::Coords(x), Point::Coords(y)) => x
            .iter()
            .zip(y)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt(),
        _ => {
            if a == b {
                0.0
            } else {
                1.0
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    /// Decided for every point of the domain.
    Exact,
    /// Tested on seeded samples only.
    Sampled,
}

impl std::fmt::Display for CheckMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CheckMode::Exact => "exact",
            CheckMode::Sampled => "sampled",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommuteWitness {
    pub point: Point,
    pub s_of_t: Point,
    pub t_of_s: Point,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommuteReport {
    pub commutes: bool,
    pub mode: CheckMode,
    pub witness: Option<CommuteWitness>,
}

fn witness_at(s: &MapSpec, t: &MapSpec, p: Point) -> Result<CommuteWitness> {
    let s_of_t = s.apply(&t.apply(&p)?)?;
    let t_of_s = t.apply(&s.apply(&p)?)?;
    let deviation = point_gap(&s_of_t, &t_of_s);
    Ok(CommuteWitness {
        point: p,
        s_of_t,
        t_of_s,
        deviation,
    })
}

/// Decides whether `S∘T = T∘S`.
///
/// Affine pairs are decided from their coefficients and table pairs over
/// every index; both are exact. Any other pair is compared at `n_samples`
/// seeded points and only ever reported as sampled.
pub fn check_commuting(
    s: &MapSpec,
    t: &MapSpec,
    domain: &PointDomain,
    seed: u64,
    n_samples: usize,
    tol: f64,
) -> Result<CommuteReport> {
    s.validate(domain)?;
    t.validate(domain)?;
    match (s, t) {
        (
            MapSpec::Affine { matrix: a_s, offset: b_s },
            MapSpec::Affine { matrix: a_t, offset: b_t },
        ) => {
            let a_s = to_matrix(a_s);
            let a_t = to_matrix(a_t);
            let b_s = DVector::from_column_slice(b_s);
            let b_t = DVector::from_column_slice(b_t);
            let lin = &a_s * &a_t - &a_t * &a_s;
            let cst = (&a_s * &b_t + &b_s) - (&a_t * &b_s + &b_t);
            let lin_dev = lin.amax();
            let cst_dev = cst.amax();
            if lin_dev <= tol && cst_dev <= tol {
                return Ok(CommuteReport {
                    commutes: true,
                    mode: CheckMode::Exact,
                    witness: None,
                });
            }
            let k = b_s.len();
            let p = if cst_dev > tol {
                vec![0.0; k]
            } else {
                let col = (0..k)
                    .max_by(|&i, &j| lin.column(i).amax().total_cmp(&lin.column(j).amax()))
                    .unwrap_or(0);
                let mut e = vec![0.0; k];
                e[col] = 1.0;
                e
            };
            Ok(CommuteReport {
                commutes: false,
                mode: CheckMode::Exact,
                witness: Some(witness_at(s, t, Point::Coords(p))?),
            })
        }
        (MapSpec::FiniteTable { images }, MapSpec::FiniteTable { .. }) => {
            for i in 0..images.len() {
                let w = witness_at(s, t, Point::Index(i))?;
                if w.s_of_t != w.t_of_s {
                    return Ok(CommuteReport {
                        commutes: false,
                        mode: CheckMode::Exact,
                        witness: Some(w),
                    });
                }
            }
            Ok(CommuteReport {
                commutes: true,
                mode: CheckMode::Exact,
                witness: None,
            })
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst: Option<CommuteWitness> = None;
            for _ in 0..n_samples {
                let w = witness_at(s, t, domain.sample_point(&mut rng))?;
                if w.deviation > tol && worst.as_ref().is_none_or(|b| w.deviation > b.deviation) {
                    worst = Some(w);
                }
            }
            Ok(CommuteReport {
                commutes: worst.is_none(),
                mode: CheckMode::Sampled,
                witness: worst,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeReport {
    pub holds: bool,
    pub mode: CheckMode,
    /// A point `p` whose image `S p` has no T-preimage.
    pub witness: Option<Point>,
}

/// Decides `S(M) ⊆ T(M)`.
///
/// An invertible affine `T` is onto, and table images are compared as index
/// sets; both are exact. Otherwise each sampled `S p` is handed to
/// [`t_preimage`].
pub fn check_range_inclusion(
    s: &MapSpec,
    t: &MapSpec,
    domain: &PointDomain,
    seed: u64,
    n_samples: usize,
    tol: f64,
) -> Result<RangeReport> {
    s.validate(domain)?;
    t.validate(domain)?;
    match (s, t) {
        (_, MapSpec::Affine { matrix, .. }) if is_invertible(&to_matrix(matrix)) => Ok(RangeReport {
            holds: true,
            mode: CheckMode::Exact,
            witness: None,
        }),
        (MapSpec::FiniteTable { images: si }, MapSpec::FiniteTable { images: ti }) => {
            let mut in_range = vec![false; ti.len()];
            for &j in ti {
                in_range[j] = true;
            }
            let witness = si.iter().position(|&j| !in_range[j]).map(Point::Index);
            Ok(RangeReport {
                holds: witness.is_none(),
                mode: CheckMode::Exact,
                witness,
            })
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..n_samples {
                let p = domain.sample_point(&mut rng);
                match t_preimage(t, &s.apply(&p)?, domain, tol) {
                    Ok(_) => {}
                    Err(Error::NoPreimage(_)) => {
                        return Ok(RangeReport {
                            holds: false,
                            mode: CheckMode::Sampled,
                            witness: Some(p),
                        })
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok(RangeReport {
                holds: true,
                mode: CheckMode::Sampled,
                witness: None,
            })
        }
    }
}

/// A point `x` with `|T x - y| <= tol`.
///
/// Affine maps are solved directly (minimum-norm solution when `A` is
/// singular but the system is consistent). Rational maps return the leftmost
/// root of `p(x) - y q(x)` inside the sampling box. Tables return the smallest
/// preimage index.
pub fn t_preimage(t: &MapSpec, y: &Point, domain: &PointDomain, tol: f64) -> Result<Point> {
    let x = match (t, y) {
        (MapSpec::Affine { matrix, offset }, Point::Coords(yc)) => {
            if yc.len() != offset.len() {
                return Err(Error::DimensionMismatch {
                    expected: offset.len(),
                    got: yc.len(),
                });
            }
            let a = to_matrix(matrix);
            let rhs = DVector::from_iterator(yc.len(), yc.iter().zip(offset).map(|(v, b)| v - b));
            let sol = if is_invertible(&a) {
                a.lu().solve(&rhs)
            } else {
                a.svd(true, true).solve(&rhs, 1e-12).ok()
            };
            match sol {
                Some(x) => Point::Coords(x.iter().copied().collect()),
                None => return Err(Error::NoPreimage(y.clone())),
            }
        }
        (MapSpec::ScalarRational { numerator, denominator }, Point::Coords(yc)) => {
            let PointDomain::Continuous { bounds, .. } = domain else {
                return Err(Error::Incompatible("rational map on a finite domain".into()));
            };
            if yc.len() != 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: yc.len() });
            }
            let [lo, hi] = bounds[0];
            match leftmost_rational_root(numerator, denominator, yc[0], lo, hi, tol) {
                Some(x) => Point::scalar(x),
                None => return Err(Error::NoPreimage(y.clone())),
            }
        }
        (MapSpec::FiniteTable { images }, Point::Index(j)) => match images.iter().position(|i| i == j) {
            Some(i) => Point::Index(i),
            None => return Err(Error::NoPreimage(y.clone())),
        },
        _ => return Err(Error::OutsideDomain(y.clone())),
    };
    if point_gap(&t.apply(&x)?, y) > tol {
        return Err(Error::NoPreimage(y.clone()));
    }
    Ok(x)
}

fn leftmost_rational_root(num: &[f64], den: &[f64], y: f64, lo: f64, hi: f64, tol: f64) -> Option<f64> {
    let len = num.len().max(den.len());
    let mut f: Vec<f64> = (0..len)
        .map(|i| num.get(i).copied().unwrap_or(0.0) - y * den.get(i).copied().unwrap_or(0.0))
        .collect();
    while f.len() > 1 && f[f.len() - 1] == 0.0 {
        f.pop();
    }
    let residual = |x: f64| (horner(num, x) / horner(den, x) - y).abs();
    match f.len() {
        1 => return (f[0] == 0.0).then_some(lo),
        2 => {
            let x = -f[0] / f[1];
            return (lo <= x && x <= hi).then_some(x);
        }
        _ => {}
    }

    let mut bracket_root = None;
    let mut near_root = None;
    let mut prev = (lo, horner(&f, lo));
    if prev.1 == 0.0 {
        return Some(lo);
    }
    for i in 1..=SCAN_CELLS {
        let x = grid_point(lo, hi, i);
        let fx = horner(&f, x);
        if near_root.is_none() && residual(prev.0) <= tol {
            near_root = Some(prev.0);
        }
        if fx == 0.0 {
            bracket_root = Some(x);
            break;
        }
        if fx.signum() != prev.1.signum() {
            bracket_root = Some(bisect(&f, prev.0, x));
            break;
        }
        prev = (x, fx);
    }
    if near_root.is_none() && residual(hi) <= tol {
        near_root = Some(hi);
    }
    match (bracket_root, near_root) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

fn bisect(f: &[f64], mut a: f64, mut b: f64) -> f64 {
    let fa_sign = horner(f, a).signum();
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = horner(f, m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa_sign {
            a = m;
        } else {
            b = m;
        }
    }
    if horner(f, a).abs() <= horner(f, b).abs() {
        a
    } else {
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> PointDomain {
        PointDomain::interval(-10.0, 10.0)
    }

    #[test]
    fn apply_examples() {
        assert_eq!(MapSpec::scalar_affine(0.5, 0.0).apply(&Point::scalar(6.0)).unwrap(), Point::scalar(3.0));
        assert_eq!(MapSpec::table(vec![2, 0, 1]).apply(&Point::Index(0)).unwrap(), Point::Index(2));
        let quarter = MapSpec::rational(vec![0.0, 1.0], vec![4.0]);
        assert_eq!(quarter.apply(&Point::scalar(8.0)).unwrap(), Point::scalar(2.0));
    }

    #[test]
    fn apply_errors() {
        assert!(matches!(
            MapSpec::table(vec![0, 1]).apply(&Point::Index(5)),
            Err(Error::IndexOutOfRange { index: 5, len: 2 })
        ));
        let recip = MapSpec::rational(vec![1.0], vec![0.0, 1.0]);
        assert!(matches!(recip.apply(&Point::scalar(0.0)), Err(Error::PoleHit(_))));
        assert!(recip.validate(&line()).is_err());
        assert!(recip.validate(&PointDomain::interval(1.0, 2.0)).is_ok());
    }

    #[test]
    fn commuting_examples() {
        let s = MapSpec::scalar_affine(0.25, 0.0);
        let t = MapSpec::scalar_affine(0.5, 0.0);
        let r = check_commuting(&s, &t, &line(), 0, 10, 1e-12).unwrap();
        assert!(r.commutes);
        assert_eq!(r.mode, CheckMode::Exact);

        let s = MapSpec::scalar_affine(1.0, 1.0);
        let t = MapSpec::scalar_affine(2.0, 0.0);
        let r = check_commuting(&s, &t, &line(), 0, 10, 1e-12).unwrap();
        assert!(!r.commutes);
        let w = r.witness.unwrap();
        // S(T p) = 2p + 1, T(S p) = 2p + 2.
        assert_eq!(w.deviation, 1.0);

        let d = PointDomain::Finite { points: 3 };
        let r = check_commuting(&MapSpec::table(vec![2, 2, 0]), &MapSpec::identity_table(3), &d, 0, 0, 0.0).unwrap();
        assert!(r.commutes);
        let r = check_commuting(&MapSpec::table(vec![1, 0, 2]), &MapSpec::table(vec![0, 0, 0]), &d, 0, 0, 0.0).unwrap();
        assert!(!r.commutes);
        assert_eq!(r.witness.unwrap().point, Point::Index(0));
    }

    #[test]
    fn sampled_commutation_for_rational_maps() {
        let s = MapSpec::rational(vec![0.0, 1.0], vec![4.0]);
        let t = MapSpec::rational(vec![0.0, 1.0], vec![2.0]);
        let r = check_commuting(&s, &t, &line(), 5, 100, 1e-12).unwrap();
        assert!(r.commutes);
        assert_eq!(r.mode, CheckMode::Sampled);
        let shift = MapSpec::rational(vec![1.0, 1.0], vec![1.0]);
        let r = check_commuting(&shift, &t, &line(), 5, 100, 1e-12).unwrap();
        assert!(!r.commutes);
        assert!(r.witness.is_some());
    }

    #[test]
    fn incompatible_variants() {
        let d = PointDomain::Finite { points: 2 };
        assert!(matches!(
            check_commuting(&MapSpec::scalar_affine(1.0, 0.0), &MapSpec::identity_table(2), &d, 0, 1, 0.0),
            Err(Error::Incompatible(_))
        ));
    }

    #[test]
    fn range_inclusion_examples() {
        let r = check_range_inclusion(
            &MapSpec::scalar_affine(3.0, 1.0),
            &MapSpec::scalar_affine(0.5, 2.0),
            &line(),
            0,
            10,
            1e-9,
        )
        .unwrap();
        assert!(r.holds);
        assert_eq!(r.mode, CheckMode::Exact);

        let d3 = PointDomain::Finite { points: 3 };
        let r = check_range_inclusion(&MapSpec::table(vec![1, 1, 1]), &MapSpec::table(vec![0, 2, 2]), &d3, 0, 0, 0.0).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness, Some(Point::Index(0)));

        let d2 = PointDomain::Finite { points: 2 };
        let r = check_range_inclusion(&MapSpec::table(vec![0, 0]), &MapSpec::table(vec![0, 1]), &d2, 0, 0, 0.0).unwrap();
        assert!(r.holds);
    }

    #[test]
    fn sampled_range_inclusion_for_rational_t() {
        // T(x) = x^2 covers [0, 100] on [-10, 10]; S(x) = x / 2 reaches below 0.
        let t = MapSpec::rational(vec![0.0, 0.0, 1.0], vec![1.0]);
        let s = MapSpec::rational(vec![0.0, 1.0], vec![2.0]);
        let r = check_range_inclusion(&s, &t, &line(), 1, 200, 1e-9).unwrap();
        assert!(!r.holds);
        assert_eq!(r.mode, CheckMode::Sampled);
        let s_sq = MapSpec::rational(vec![0.0, 0.0, 0.25], vec![1.0]);
        assert!(check_range_inclusion(&s_sq, &t, &line(), 1, 200, 1e-9).unwrap().holds);
    }

    #[test]
    fn preimage_examples() {
        let half = MapSpec::scalar_affine(0.5, 0.0);
        assert_eq!(t_preimage(&half, &Point::scalar(3.0), &line(), 1e-12).unwrap(), Point::scalar(6.0));

        let d2 = PointDomain::Continuous {
            dim: 2,
            bounds: vec![[-1.0, 1.0]; 2],
        };
        let diag = MapSpec::affine(vec![vec![2.0, 0.0], vec![0.0, 4.0]], vec![0.0, 0.0]);
        assert_eq!(
            t_preimage(&diag, &Point::Coords(vec![2.0, 2.0]), &d2, 1e-12).unwrap(),
            Point::Coords(vec![1.0, 0.5])
        );

        let d3 = PointDomain::Finite { points: 3 };
        let t = MapSpec::table(vec![0, 0, 2]);
        assert_eq!(t_preimage(&t, &Point::Index(0), &d3, 0.0).unwrap(), Point::Index(0));
        assert!(matches!(t_preimage(&t, &Point::Index(1), &d3, 0.0), Err(Error::NoPreimage(_))));
    }

    #[test]
    fn singular_affine_preimage() {
        let d2 = PointDomain::Continuous {
            dim: 2,
            bounds: vec![[-1.0, 1.0]; 2],
        };
        let proj = MapSpec::affine(vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![0.0, 0.0]);
        let x = t_preimage(&proj, &Point::Coords(vec![0.5, 0.0]), &d2, 1e-12).unwrap();
        assert_eq!(proj.apply(&x).unwrap(), Point::Coords(vec![0.5, 0.0]));
        assert!(matches!(
            t_preimage(&proj, &Point::Coords(vec![0.5, 1.0]), &d2, 1e-9),
            Err(Error::NoPreimage(_))
        ));
    }

    #[test]
    fn rational_preimage_picks_leftmost_root() {
        let sq = MapSpec::rational(vec![0.0, 0.0, 1.0], vec![1.0]);
        let x = t_preimage(&sq, &Point::scalar(4.0), &line(), 1e-9).unwrap();
        assert!((x.as_coords().unwrap()[0] + 2.0).abs() < 1e-12);
        // Double root at 0 has no sign change.
        let x = t_preimage(&sq, &Point::scalar(0.0), &line(), 1e-9).unwrap();
        assert!(x.as_coords().unwrap()[0].abs() < 1e-4);
        assert!(matches!(t_preimage(&sq, &Point::scalar(-1.0), &line(), 1e-9), Err(Error::NoPreimage(_))));
        // Outside the box.
        let half = MapSpec::rational(vec![0.0, 1.0], vec![2.0]);
        assert!(t_preimage(&half, &Point::scalar(30.0), &line(), 1e-9).is_err());
    }
}
