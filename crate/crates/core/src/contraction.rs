//! Contraction conditions for a map pair `(S, T)` on a cone metric space.
//!
//! Every condition has the shape `d(Sx, Sy) <= rhs(x, y)` in the cone order,
//! where `rhs` is a nonnegative combination of the six distances between
//! `Sx, Sy, Tx, Ty`. The Zamfirescu-type conditions are disjunctions: a pair
//! passes if at least one branch holds.
//!
//! | condition | right-hand side |
//! |-----------|-----------------|
//! | `SinghS(a, b, c)` | `a d(Tx,Ty) + b [d(Sx,Tx) + d(Sy,Ty)] + c [d(Sx,Ty) + d(Sy,Tx)]` |
//! | `J(a)` | `a d(Tx,Ty)` |
//! | `GKC(b)` | `b [d(Sx,Tx) + d(Sy,Ty)]` |
//! | `GCC(c)` | `c [d(Sx,Ty) + d(Sy,Tx)]` |
//! | `GZ0(a, b, c)` | any of the `J(a)`, `GKC(b)`, `GCC(c)` right-hand sides |
//! | `MaxForm(h)` | `h` times any of `d(Tx,Ty)`, `[d(Sx,Tx) + d(Sy,Ty)]/2`, `[d(Sx,Ty) + d(Sy,Tx)]/2` |
//! | `GWC(δ, L)` | `δ d(Tx,Ty) + L d(Sx,Tx)` |
//! | `GWCSwapped(δ, L)` | `δ d(Tx,Ty) + L d(Sy,Tx)` |
//!
//! The `as_printed` variant of `SinghS` replaces the last term with
//! `c [d(Sx,Ty) + d(Sy,Ty)]`.
//!
//! The maximum in `MaxForm` is read as "dominated by one of the three
//! arguments", which coincides with the maximum whenever the arguments are
//! comparable and makes `MaxForm(h)` the same condition as
//! `GZ0(h, h/2, h/2)`.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::ConeVec;
use crate::cone_metric::{ConeMetricSpace, MetricSpec, Point};
use crate::error::{Error, Result};
use crate::maps::MapSpec;

/// Conversions to `GWC` clamp `δ` up to this value, since `GWC` needs `δ > 0`.
pub const GWC_DELTA_FLOOR: f64 = 1e-12;

/// Step of the parameter grid used when no exact fit is available.
pub const FIT_GRID_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinghVariant {
    /// `c [d(Sx,Ty) + d(Sy,Tx)]`.
    #[default]
    Classic,
    /// `c [d(Sx,Ty) + d(Sy,Ty)]`.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ConditionSpec {
    #[serde(rename = "singh")]
    SinghS {
        a: f64,
        b: f64,
        c: f64,
        #[serde(default)]
        variant: SinghVariant,
    },
    J { a: f64 },
    #[serde(rename = "GKC")]
    Gkc { b: f64 },
    #[serde(rename = "GCC")]
    Gcc { c: f64 },
    #[serde(rename = "GZ0")]
    Gz0 { a: f64, b: f64, c: f64 },
    #[serde(rename = "max_form")]
    MaxForm { h: f64 },
    #[serde(rename = "GWC")]
    Gwc {
        delta: f64,
        #[serde(rename = "L")]
        l: f64,
    },
    #[serde(rename = "GWC_swapped")]
    GwcSwapped {
        delta: f64,
        #[serde(rename = "L")]
        l: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConditionFamily {
    #[serde(rename = "singh")]
    SinghS,
    J,
    #[serde(rename = "GKC")]
    Gkc,
    #[serde(rename = "GCC")]
    Gcc,
    #[serde(rename = "GZ0")]
    Gz0,
    #[serde(rename = "max_form")]
    MaxForm,
    #[serde(rename = "GWC")]
    Gwc,
    #[serde(rename = "GWC_swapped")]
    GwcSwapped,
}

impl fmt::Display for ConditionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConditionFamily::SinghS => "SinghS",
            ConditionFamily::J => "J",
            ConditionFamily::Gkc => "GKC",
            ConditionFamily::Gcc => "GCC",
            ConditionFamily::Gz0 => "GZ0",
            ConditionFamily::MaxForm => "MaxForm",
            ConditionFamily::Gwc => "GWC",
            ConditionFamily::GwcSwapped => "GWCSwapped",
        })
    }
}

impl fmt::Display for ConditionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ConditionSpec::SinghS { a, b, c, variant } => {
                let v = match variant {
                    SinghVariant::Classic => "",
                    SinghVariant::AsPrinted => ", as_printed",
                };
                write!(f, "SinghS(a={a}, b={b}, c={c}{v})")
            }
            ConditionSpec::J { a } => write!(f, "J(a={a})"),
            ConditionSpec::Gkc { b } => write!(f, "GKC(b={b})"),
            ConditionSpec::Gcc { c } => write!(f, "GCC(c={c})"),
            ConditionSpec::Gz0 { a, b, c } => write!(f, "GZ0(a={a}, b={b}, c={c})"),
            ConditionSpec::MaxForm { h } => write!(f, "MaxForm(h={h})"),
            ConditionSpec::Gwc { delta, l } => write!(f, "GWC(delta={delta}, L={l})"),
            ConditionSpec::GwcSwapped { delta, l } => write!(f, "GWCSwapped(delta={delta}, L={l})"),
        }
    }
}

fn in_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..1.0).contains(&v) {
        return Err(Error::Constraint(format!("{name} must lie in [0, 1), got {v}")));
    }
    Ok(())
}

fn in_half(name: &str, v: f64) -> Result<()> {
    if !(0.0..0.5).contains(&v) {
        return Err(Error::Constraint(format!("{name} must lie in [0, 1/2), got {v}")));
    }
    Ok(())
}

fn check_gwc(delta: f64, l: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Constraint(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(l >= 0.0 && l.is_finite()) {
        return Err(Error::Constraint(format!("L must be nonnegative, got {l}")));
    }
    Ok(())
}

fn check_singh(a: f64, b: f64, c: f64) -> Result<()> {
    for (name, v) in [("a", a), ("b", b), ("c", c)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Constraint(format!("{name} must be nonnegative, got {v}")));
        }
    }
    let s = a + 2.0 * b + 2.0 * c;
    if s >= 1.0 {
        return Err(Error::Constraint(format!("a + 2b + 2c must be below 1, got {s}")));
    }
    Ok(())
}

impl ConditionSpec {
    pub fn family(&self) -> ConditionFamily {
        match self {
            ConditionSpec::SinghS { .. } => ConditionFamily::SinghS,
            ConditionSpec::J { .. } => ConditionFamily::J,
            ConditionSpec::Gkc { .. } => ConditionFamily::Gkc,
            ConditionSpec::Gcc { .. } => ConditionFamily::Gcc,
            ConditionSpec::Gz0 { .. } => ConditionFamily::Gz0,
            ConditionSpec::MaxForm { .. } => ConditionFamily::MaxForm,
            ConditionSpec::Gwc { .. } => ConditionFamily::Gwc,
            ConditionSpec::GwcSwapped { .. } => ConditionFamily::GwcSwapped,
        }
    }

    /// Parameter constraints for checking. `SinghS` with `a + 2b + 2c = 0`
    /// passes here; see [`ConditionSpec::validate_for_solver`].
    pub fn validate(&self) -> Result<()> {
        match *self {
            ConditionSpec::SinghS { a, b, c, .. } => check_singh(a, b, c),
            ConditionSpec::J { a } => in_unit("a", a),
            ConditionSpec::Gkc { b } => in_half("b", b),
            ConditionSpec::Gcc { c } => in_half("c", c),
            ConditionSpec::Gz0 { a, b, c } => {
                in_unit("a", a)?;
                in_half("b", b)?;
                in_half("c", c)
            }
            ConditionSpec::MaxForm { h } => in_unit("h", h),
            ConditionSpec::Gwc { delta, l } | ConditionSpec::GwcSwapped { delta, l } => check_gwc(delta, l),
        }
    }

    /// As [`ConditionSpec::validate`], and additionally `a + 2b + 2c > 0`.
    pub fn validate_for_solver(&self) -> Result<()> {
        self.validate()?;
        if let ConditionSpec::SinghS { a, b, c, .. } = *self {
            if a + 2.0 * b + 2.0 * c <= 0.0 {
                return Err(Error::Constraint("a + 2b + 2c must be positive".into()));
            }
        }
        Ok(())
    }

    /// Geometric factor bounding `d(Sx_{n+1}, Sx_n) / d(Sx_n, Sx_{n-1})`
    /// along the Jungck sequence.
    pub fn contraction_factor(&self) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            ConditionSpec::SinghS { a, b, c, .. } => singh_rate(a, b, c),
            ConditionSpec::J { a } => a,
            ConditionSpec::Gkc { b } => b / (1.0 - b),
            ConditionSpec::Gcc { c } => c / (1.0 - c),
            ConditionSpec::Gz0 { a, b, c } => zamfirescu_delta(a, b, c),
            ConditionSpec::MaxForm { h } => zamfirescu_delta(h, h / 2.0, h / 2.0),
            ConditionSpec::Gwc { delta, .. } | ConditionSpec::GwcSwapped { delta, .. } => delta,
        })
    }
}

/// `(a + b + c) / (1 - b - c)` without constraint checks.
pub fn singh_rate(a: f64, b: f64, c: f64) -> f64 {
    (a + b + c) / (1.0 - b - c)
}

/// `max{a, b/(1-b), c/(1-c)}` without constraint checks.
pub fn zamfirescu_delta(a: f64, b: f64, c: f64) -> f64 {
    a.max(b / (1.0 - b)).max(c / (1.0 - c))
}

/// Step-contraction rate of the Jungck sequence under `SinghS(a, b, c)`.
///
/// ```
/// let alpha = conefix::contraction::alpha_from_singh(0.2, 0.1, 0.1).unwrap();
/// assert!((alpha - 0.5).abs() < 1e-15);
/// ```
pub fn alpha_from_singh(a: f64, b: f64, c: f64) -> Result<f64> {
    check_singh(a, b, c)?;
    Ok(singh_rate(a, b, c))
}

/// The single factor absorbing all three `GZ0` branches.
pub fn delta_from_gz0(a: f64, b: f64, c: f64) -> Result<f64> {
    ConditionSpec::Gz0 { a, b, c }.validate()?;
    Ok(zamfirescu_delta(a, b, c))
}

/// `GZ0(a, b, c)` implies `MaxForm(max{a, 2b, 2c})`.
pub fn gz0_to_maxform(a: f64, b: f64, c: f64) -> Result<ConditionSpec> {
    ConditionSpec::Gz0 { a, b, c }.validate()?;
    Ok(ConditionSpec::MaxForm {
        h: a.max(2.0 * b).max(2.0 * c),
    })
}

/// `MaxForm(h)` implies `GZ0(h, h/2, h/2)`.
pub fn maxform_to_gz0(h: f64) -> Result<ConditionSpec> {
    ConditionSpec::MaxForm { h }.validate()?;
    Ok(ConditionSpec::Gz0 {
        a: h,
        b: h / 2.0,
        c: h / 2.0,
    })
}

/// The swapped weak-contraction form `GWCSwapped(δ, 2δ)` implied by
/// `GZ0(a, b, c)`. This is the form that makes `δ` a step rate.
pub fn gz0_to_swapped_gwc(a: f64, b: f64, c: f64) -> Result<ConditionSpec> {
    let delta = delta_from_gz0(a, b, c)?.max(GWC_DELTA_FLOOR);
    Ok(ConditionSpec::GwcSwapped { delta, l: 2.0 * delta })
}

/// A `GWC(δ, L)` implied by a `J`, `GKC`, `GCC` or `GZ0` condition.
///
/// `J(a) -> (a, 0)`, `GKC(b) -> (b/(1-b), 2b/(1-b))`,
/// `GCC(c) -> (c/(1-c), 2c/(1-c))`, `GZ0 -> (δ, 2δ)`. A zero `δ` is raised to
/// [`GWC_DELTA_FLOOR`].
pub fn gwc_witness_from(cond: &ConditionSpec) -> Result<ConditionSpec> {
    cond.validate()?;
    let (delta, l) = match *cond {
        ConditionSpec::J { a } => (a, 0.0),
        ConditionSpec::Gkc { b } => (b / (1.0 - b), 2.0 * b / (1.0 - b)),
        ConditionSpec::Gcc { c } => (c / (1.0 - c), 2.0 * c / (1.0 - c)),
        ConditionSpec::Gz0 { a, b, c } => {
            let d = zamfirescu_delta(a, b, c);
            (d, 2.0 * d)
        }
        other => {
            return Err(Error::Unsupported(format!(
                "no weak-contraction witness for {}",
                other.family()
            )))
        }
    };
    Ok(ConditionSpec::Gwc {
        delta: delta.max(GWC_DELTA_FLOOR),
        l,
    })
}

/// The six distances a condition can mention, at one ordered pair.
#[derive(Debug, Clone)]
pub(crate) struct PairTerms {
    pub lhs: ConeVec,
    pub tt: ConeVec,
    pub sx_tx: ConeVec,
    pub sy_ty: ConeVec,
    pub sx_ty: ConeVec,
    pub sy_tx: ConeVec,
}

impl PairTerms {
    pub fn at(space: &ConeMetricSpace, s: &MapSpec, t: &MapSpec, x: &Point, y: &Point) -> Result<Self> {
        let (sx, sy, tx, ty) = (s.apply(x)?, s.apply(y)?, t.apply(x)?, t.apply(y)?);
        Ok(PairTerms {
            lhs: space.distance(&sx, &sy)?,
            tt: space.distance(&tx, &ty)?,
            sx_tx: space.distance(&sx, &tx)?,
            sy_ty: space.distance(&sy, &ty)?,
            sx_ty: space.distance(&sx, &ty)?,
            sy_tx: space.distance(&sy, &tx)?,
        })
    }

    /// The right-hand sides of `cond`; the pair passes if `lhs` is below any.
    pub fn branches(&self, cond: &ConditionSpec) -> Vec<ConeVec> {
        let kannan = &self.sx_tx + &self.sy_ty;
        let chatterjea = &self.sx_ty + &self.sy_tx;
        match *cond {
            ConditionSpec::SinghS { a, b, c, variant } => {
                let last = match variant {
                    SinghVariant::Classic => chatterjea,
                    SinghVariant::AsPrinted => &self.sx_ty + &self.sy_ty,
                };
                vec![&(&self.tt.scale(a) + &kannan.scale(b)) + &last.scale(c)]
            }
            ConditionSpec::J { a } => vec![self.tt.scale(a)],
            ConditionSpec::Gkc { b } => vec![kannan.scale(b)],
            ConditionSpec::Gcc { c } => vec![chatterjea.scale(c)],
            ConditionSpec::Gz0 { a, b, c } => {
                vec![self.tt.scale(a), kannan.scale(b), chatterjea.scale(c)]
            }
            ConditionSpec::MaxForm { h } => self
                .patterns(ConditionFamily::MaxForm)
                .into_iter()
                .map(|p| p.scale(h))
                .collect(),
            ConditionSpec::Gwc { delta, l } => vec![&self.tt.scale(delta) + &self.sx_tx.scale(l)],
            ConditionSpec::GwcSwapped { delta, l } => vec![&self.tt.scale(delta) + &self.sy_tx.scale(l)],
        }
    }

    /// Right-hand side patterns of a one-parameter family: the condition
    /// with parameter `p` reads `lhs <= p · pattern` for some pattern.
    pub fn patterns(&self, family: ConditionFamily) -> Vec<ConeVec> {
        match family {
            ConditionFamily::J => vec![self.tt.clone()],
            ConditionFamily::Gkc => vec![&self.sx_tx + &self.sy_ty],
            ConditionFamily::Gcc => vec![&self.sx_ty + &self.sy_tx],
            ConditionFamily::MaxForm => vec![
                self.tt.clone(),
                (&self.sx_tx + &self.sy_ty).scale(0.5),
                (&self.sx_ty + &self.sy_tx).scale(0.5),
            ],
            _ => Vec::new(),
        }
    }
}

/// Which ordered pairs a check covers.
#[derive(Debug, Clone, PartialEq)]
pub enum PairSource {
    /// Every ordered pair of a finite domain.
    All,
    /// `n` seeded draws, each checked in both orders.
    Sampled { seed: u64, n: usize },
    /// The given pairs, each checked in both orders.
    Explicit(Vec<(Point, Point)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    Exhaustive,
    Sampled,
}

impl fmt::Display for Coverage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Coverage::Exhaustive => "exhaustive",
            Coverage::Sampled => "sampled",
        })
    }
}

pub(crate) fn ordered_pairs(space: &ConeMetricSpace, source: &PairSource) -> Result<(Vec<(Point, Point)>, Coverage)> {
    match source {
        PairSource::All => {
            let pts = space.domain().all_points().ok_or_else(|| {
                Error::Unsupported("all-pairs checks need a finite domain".into())
            })?;
            let pairs = pts
                .iter()
                .flat_map(|x| pts.iter().map(move |y| (x.clone(), y.clone())))
                .collect();
            Ok((pairs, Coverage::Exhaustive))
        }
        PairSource::Sampled { seed, n } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut pairs = Vec::with_capacity(2 * n);
            for _ in 0..*n {
                let x = space.domain().sample_point(&mut rng);
                let y = space.domain().sample_point(&mut rng);
                pairs.push((x.clone(), y.clone()));
                pairs.push((y, x));
            }
            Ok((pairs, Coverage::Sampled))
        }
        PairSource::Explicit(list) => {
            let mut pairs = Vec::with_capacity(2 * list.len());
            for (x, y) in list {
                space.check_point(x)?;
                space.check_point(y)?;
                pairs.push((x.clone(), y.clone()));
                pairs.push((y.clone(), x.clone()));
            }
            Ok((pairs, Coverage::Sampled))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstPair {
    pub x: Point,
    pub y: Point,
    pub lhs: ConeVec,
    pub rhs: ConeVec,
    /// Cone margin of `rhs - lhs`; negative beyond `-eps` means violated.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    pub condition: ConditionSpec,
    pub holds_on_checked: bool,
    pub coverage: Coverage,
    pub n_pairs: usize,
    /// The pair with the smallest slack; `None` only when no pair was checked.
    pub worst_pair: Option<WorstPair>,
}

impl ViolationReport {
    /// `"holds"` for an exhaustive pass, `"no violation found"` for a sampled
    /// one, `"violated"` otherwise.
    pub fn verdict(&self) -> &'static str {
        match (self.holds_on_checked, self.coverage) {
            (false, _) => "violated",
            (true, Coverage::Exhaustive) => "holds",
            (true, Coverage::Sampled) => "no violation found",
        }
    }

    /// Whether this report is a proof that the condition holds.
    pub fn certified(&self) -> bool {
        self.holds_on_checked && self.coverage == Coverage::Exhaustive
    }
}

/// Tests `cond` on every pair from `pairs`.
pub fn check_condition(
    space: &ConeMetricSpace,
    s: &MapSpec,
    t: &MapSpec,
    cond: &ConditionSpec,
    pairs: &PairSource,
) -> Result<ViolationReport> {
    cond.validate()?;
    s.validate(space.domain())?;
    t.validate(space.domain())?;
    let (pairs, coverage) = ordered_pairs(space, pairs)?;
    let cone = space.cone();
    let mut worst: Option<WorstPair> = None;
    for (x, y) in &pairs {
        let terms = PairTerms::at(space, s, t, x, y)?;
        let mut best: Option<(f64, ConeVec)> = None;
        for rhs in terms.branches(cond) {
            let slack = cone.margin(&(&rhs - &terms.lhs))?;
            if best.as_ref().is_none_or(|(b, _)| slack > *b) {
                best = Some((slack, rhs));
            }
        }
        let (slack, rhs) = best.expect("every condition has a branch");
        if worst.as_ref().is_none_or(|w| slack < w.slack) {
            worst = Some(WorstPair {
                x: x.clone(),
                y: y.clone(),
                lhs: terms.lhs.clone(),
                rhs,
                slack,
            });
        }
    }
    let holds = worst.as_ref().is_none_or(|w| w.slack >= -cone.eps());
    Ok(ViolationReport {
        condition: *cond,
        holds_on_checked: holds,
        coverage,
        n_pairs: pairs.len(),
        worst_pair: worst,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Exact supremum of coordinate ratios (orthant cones) or of scalar
    /// ratios (induced metrics).
    Ratio,
    /// Smallest passing value on a grid of step [`FIT_GRID_STEP`].
    Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitOutcome {
    Feasible(ConditionSpec),
    /// The tightest constant over the checked pairs reaches the family bound.
    Infeasible { required: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub outcome: FitOutcome,
    pub method: FitMethod,
    pub coverage: Coverage,
}

impl Fit {
    pub fn value(&self) -> Option<f64> {
        match self.outcome {
            FitOutcome::Feasible(c) => Some(match c {
                ConditionSpec::J { a } => a,
                ConditionSpec::Gkc { b } => b,
                ConditionSpec::Gcc { c } => c,
                ConditionSpec::MaxForm { h } => h,
                _ => unreachable!("only one-parameter families are fitted"),
            }),
            FitOutcome::Infeasible { .. } => None,
        }
    }
}

pub(crate) fn family_bound(family: ConditionFamily) -> Option<f64> {
    match family {
        ConditionFamily::J | ConditionFamily::MaxForm => Some(1.0),
        ConditionFamily::Gkc | ConditionFamily::Gcc => Some(0.5),
        _ => None,
    }
}

pub(crate) fn family_spec(family: ConditionFamily, p: f64) -> ConditionSpec {
    match family {
        ConditionFamily::J => ConditionSpec::J { a: p },
        ConditionFamily::Gkc => ConditionSpec::Gkc { b: p },
        ConditionFamily::Gcc => ConditionSpec::Gcc { c: p },
        ConditionFamily::MaxForm => ConditionSpec::MaxForm { h: p },
        _ => unreachable!("only one-parameter families are fitted"),
    }
}

/// Smallest `p` with `lhs <= p · pattern` coordinatewise.
fn coordinate_ratio(lhs: &ConeVec, pattern: &ConeVec) -> f64 {
    let mut need = 0.0_f64;
    for (l, r) in lhs.coords().iter().zip(pattern.coords()) {
        if *l > 0.0 {
            need = need.max(if *r > 0.0 { l / r } else { f64::INFINITY });
        }
    }
    need
}

/// Smallest `p` with `lhs <= p · pattern` when both are multiples of the
/// induced weight vector.
fn scalar_ratio(lhs: &ConeVec, pattern: &ConeVec, weights: &ConeVec) -> f64 {
    let k = (0..weights.dim())
        .max_by(|&i, &j| weights[i].abs().total_cmp(&weights[j].abs()))
        .unwrap_or(0);
    let (l, r) = (lhs[k] / weights[k], pattern[k] / weights[k]);
    if l <= 0.0 {
        0.0
    } else if r > 0.0 {
        l / r
    } else {
        f64::INFINITY
    }
}

/// Tightest constant of a one-parameter family (`J`, `GKC`, `GCC`,
/// `MaxForm`) over the checked pairs.
///
/// For orthant cones and induced metrics this is an exact supremum of
/// ratios; otherwise the smallest passing value on a grid. Over all pairs of
/// a finite domain the result is the true minimal constant; over samples it
/// is a lower bound.
pub fn fit_minimal_constants(
    space: &ConeMetricSpace,
    s: &MapSpec,
    t: &MapSpec,
    family: ConditionFamily,
    pairs: &PairSource,
) -> Result<Fit> {
    let Some(bound) = family_bound(family) else {
        return Err(Error::Unsupported(format!(
            "{family} has more than one parameter; only J, GKC, GCC and MaxForm are fitted"
        )));
    };
    s.validate(space.domain())?;
    t.validate(space.domain())?;
    let induced = match space.metric() {
        MetricSpec::Induced { weights } if !space.cone().is_orthant() => Some(weights),
        _ => None,
    };
    if space.cone().is_orthant() || induced.is_some() {
        let (pairs, coverage) = ordered_pairs(space, pairs)?;
        let mut sup = 0.0_f64;
        for (x, y) in &pairs {
            let terms = PairTerms::at(space, s, t, x, y)?;
            let need = terms
                .patterns(family)
                .iter()
                .map(|p| match induced {
                    Some(w) => scalar_ratio(&terms.lhs, p, w),
                    None => coordinate_ratio(&terms.lhs, p),
                })
                .fold(f64::INFINITY, f64::min);
            sup = sup.max(need);
        }
        let outcome = if sup < bound {
            FitOutcome::Feasible(family_spec(family, sup))
        } else {
            FitOutcome::Infeasible { required: sup }
        };
        return Ok(Fit {
            outcome,
            method: FitMethod::Ratio,
            coverage,
        });
    }

    let steps = (bound / FIT_GRID_STEP).round() as usize;
    let mut coverage = Coverage::Sampled;
    for k in 0..steps {
        let p = k as f64 * FIT_GRID_STEP;
        let report = check_condition(space, s, t, &family_spec(family, p), pairs)?;
        coverage = report.coverage;
        if report.holds_on_checked {
            return Ok(Fit {
                outcome: FitOutcome::Feasible(family_spec(family, p)),
                method: FitMethod::Grid,
                coverage,
            });
        }
    }
    Ok(Fit {
        outcome: FitOutcome::Infeasible { required: bound },
        method: FitMethod::Grid,
        coverage,
    })
}
