//! Exhaustive ground truth on finite cone metric spaces.
//!
//! Everything here works directly on the distance table and the two image
//! tables, without going through [`ConeMetricSpace::distance`] or
//! [`MapSpec::apply`], so it can serve as an independent check of the
//! general-purpose code in [`crate::contraction`]. The arithmetic is done in
//! the same order as there, which makes the two agree bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cone::{Cone, ConeVec, NormSpec};
use crate::cone_metric::{verify_axioms, ConeMetricSpace, MetricSpec, Point, PointDomain};
use crate::contraction::{
    family_bound, family_spec, ConditionFamily, ConditionSpec, Coverage, FitMethod, FitOutcome, SinghVariant,
    ViolationReport, WorstPair, FIT_GRID_STEP,
};
use crate::error::{Error, Result};
use crate::maps::MapSpec;

/// A finite cone metric space with two self-maps given as tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct FiniteInstance {
    space: ConeMetricSpace,
    s: Vec<usize>,
    t: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    space: ConeMetricSpace,
    s: MapSpec,
    t: MapSpec,
}

impl TryFrom<RawInstance> for FiniteInstance {
    type Error = Error;

    fn try_from(r: RawInstance) -> Result<Self> {
        FiniteInstance::new(r.space, r.s, r.t)
    }
}

impl From<FiniteInstance> for RawInstance {
    fn from(i: FiniteInstance) -> Self {
        RawInstance {
            space: i.space,
            s: MapSpec::table(i.s),
            t: MapSpec::table(i.t),
        }
    }
}

impl FiniteInstance {
    /// Checks that the space is finite with a table metric satisfying the
    /// metric axioms and that both maps are total tables on it.
    pub fn new(space: ConeMetricSpace, s: MapSpec, t: MapSpec) -> Result<Self> {
        let PointDomain::Finite { points } = *space.domain() else {
            return Err(Error::InvalidSpace("finite instances need a finite domain".into()));
        };
        s.validate(space.domain())?;
        t.validate(space.domain())?;
        let (MapSpec::FiniteTable { images: s }, MapSpec::FiniteTable { images: t }) = (s, t) else {
            return Err(Error::InvalidMap("finite instances need table maps".into()));
        };
        let all: Vec<Point> = (0..points).map(Point::Index).collect();
        let axioms = verify_axioms(&space, &all)?;
        if let Some(v) = axioms.violations.first() {
            return Err(Error::InvalidSpace(format!("metric axiom {:?} fails at {:?}", v.axiom, v.witness)));
        }
        Ok(FiniteInstance { space, s, t })
    }

    pub fn space(&self) -> &ConeMetricSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn s_table(&self) -> &[usize] {
        &self.s
    }

    pub fn t_table(&self) -> &[usize] {
        &self.t
    }

    pub fn s_map(&self) -> MapSpec {
        MapSpec::table(self.s.clone())
    }

    pub fn t_map(&self) -> MapSpec {
        MapSpec::table(self.t.clone())
    }

    fn table(&self) -> &[Vec<ConeVec>] {
        match self.space.metric() {
            MetricSpec::Table { table } => table,
            MetricSpec::Induced { .. } => unreachable!("finite domains carry table metrics"),
        }
    }
}

/// All `p` with `S p = p = T p`, ascending.
pub fn enumerate_common_fixed_points(inst: &FiniteInstance) -> Vec<Point> {
    (0..inst.len())
        .filter(|&p| inst.s[p] == p && inst.t[p] == p)
        .map(Point::Index)
        .collect()
}

fn add(u: &[f64], v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(a, b)| a + b).collect()
}

fn mul(k: f64, u: &[f64]) -> Vec<f64> {
    u.iter().map(|a| k * a).collect()
}

fn comb(k1: f64, u: &[f64], k2: f64, v: &[f64]) -> Vec<f64> {
    add(&mul(k1, u), &mul(k2, v))
}

/// Distances at one ordered pair, as raw coordinate slices.
struct Terms<'a> {
    lhs: &'a [f64],
    tt: &'a [f64],
    sx_tx: &'a [f64],
    sy_ty: &'a [f64],
    sx_ty: &'a [f64],
    sy_tx: &'a [f64],
}

impl<'a> Terms<'a> {
    fn at(inst: &'a FiniteInstance, x: usize, y: usize) -> Self {
        let d = |i: usize, j: usize| inst.table()[i][j].coords();
        let (sx, sy, tx, ty) = (inst.s[x], inst.s[y], inst.t[x], inst.t[y]);
        Terms {
            lhs: d(sx, sy),
            tt: d(tx, ty),
            sx_tx: d(sx, tx),
            sy_ty: d(sy, ty),
            sx_ty: d(sx, ty),
            sy_tx: d(sy, tx),
        }
    }

    fn rhs(&self, cond: &ConditionSpec) -> Vec<Vec<f64>> {
        match *cond {
            ConditionSpec::SinghS { a, b, c, variant } => {
                let last = match variant {
                    SinghVariant::Classic => add(self.sx_ty, self.sy_tx),
                    SinghVariant::AsPrinted => add(self.sx_ty, self.sy_ty),
                };
                let head = comb(a, self.tt, b, &add(self.sx_tx, self.sy_ty));
                vec![add(&head, &mul(c, &last))]
            }
            ConditionSpec::J { a } => vec![mul(a, self.tt)],
            ConditionSpec::Gkc { b } => vec![mul(b, &add(self.sx_tx, self.sy_ty))],
            ConditionSpec::Gcc { c } => vec![mul(c, &add(self.sx_ty, self.sy_tx))],
            ConditionSpec::Gz0 { a, b, c } => vec![
                mul(a, self.tt),
                mul(b, &add(self.sx_tx, self.sy_ty)),
                mul(c, &add(self.sx_ty, self.sy_tx)),
            ],
            ConditionSpec::MaxForm { h } => self
                .units(ConditionFamily::MaxForm)
                .iter()
                .map(|u| mul(h, u))
                .collect(),
            ConditionSpec::Gwc { delta, l } => vec![comb(delta, self.tt, l, self.sx_tx)],
            ConditionSpec::GwcSwapped { delta, l } => vec![comb(delta, self.tt, l, self.sy_tx)],
        }
    }

    fn units(&self, family: ConditionFamily) -> Vec<Vec<f64>> {
        let half = |u: Vec<f64>| mul(0.5, &u);
        match family {
            ConditionFamily::J => vec![self.tt.to_vec()],
            ConditionFamily::Gkc => vec![add(self.sx_tx, self.sy_ty)],
            ConditionFamily::Gcc => vec![add(self.sx_ty, self.sy_tx)],
            ConditionFamily::MaxForm => vec![
                self.tt.to_vec(),
                half(add(self.sx_tx, self.sy_ty)),
                half(add(self.sx_ty, self.sy_tx)),
            ],
            _ => Vec::new(),
        }
    }
}

/// Checks `cond` on all `n²` ordered pairs. A passing report proves the
/// condition for this instance.
pub fn exhaustive_certify(inst: &FiniteInstance, cond: &ConditionSpec) -> Result<ViolationReport> {
    cond.validate()?;
    let cone = inst.space.cone();
    let n = inst.len();
    let mut worst: Option<(f64, usize, usize, Vec<f64>)> = None;
    for x in 0..n {
        for y in 0..n {
            let terms = Terms::at(inst, x, y);
            let mut pick: Option<(f64, Vec<f64>)> = None;
            for rhs in terms.rhs(cond) {
                let gap: Vec<f64> = rhs.iter().zip(terms.lhs).map(|(r, l)| r - l).collect();
                let slack = cone.margin_unchecked(&gap);
                if pick.as_ref().is_none_or(|(best, _)| slack > *best) {
                    pick = Some((slack, rhs));
                }
            }
            let (slack, rhs) = pick.expect("every condition has a branch");
            if worst.as_ref().is_none_or(|w| slack < w.0) {
                worst = Some((slack, x, y, rhs));
            }
        }
    }
    let worst_pair = worst.map(|(slack, x, y, rhs)| WorstPair {
        x: Point::Index(x),
        y: Point::Index(y),
        lhs: inst.table()[inst.s[x]][inst.s[y]].clone(),
        rhs: ConeVec::new(rhs).expect("finite right-hand side"),
        slack,
    });
    Ok(ViolationReport {
        condition: *cond,
        holds_on_checked: worst_pair.as_ref().is_none_or(|w| w.slack >= -cone.eps()),
        coverage: Coverage::Exhaustive,
        n_pairs: n * n,
        worst_pair,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactConstant {
    pub outcome: FitOutcome,
    /// [`FitMethod::Ratio`] on orthant cones, [`FitMethod::Grid`] otherwise.
    pub method: FitMethod,
}

/// The least constant of a one-parameter family for which the instance
/// satisfies the condition.
///
/// On orthant cones each pair needs `max_i lhs_i / unit_i` (infinite where a
/// positive `lhs_i` meets a zero `unit_i`), the disjunctive `MaxForm` takes
/// the smallest over its three units, and the answer is the largest need
/// over all pairs. Other cones fall back to a grid of step
/// [`FIT_GRID_STEP`].
pub fn exact_minimal_constant(inst: &FiniteInstance, family: ConditionFamily) -> Result<ExactConstant> {
    let Some(bound) = family_bound(family) else {
        return Err(Error::Unsupported(format!("{family} is not a one-parameter family")));
    };
    let n = inst.len();
    if inst.space.cone().is_orthant() {
        let mut need = 0.0_f64;
        for x in 0..n {
            for y in 0..n {
                let terms = Terms::at(inst, x, y);
                let mut pair_need = f64::INFINITY;
                for unit in terms.units(family) {
                    let mut r = 0.0_f64;
                    for (l, u) in terms.lhs.iter().zip(&unit) {
                        if *l > 0.0 {
                            r = r.max(if *u > 0.0 { l / u } else { f64::INFINITY });
                        }
                    }
                    pair_need = pair_need.min(r);
                }
                need = need.max(pair_need);
            }
        }
        let outcome = if need < bound {
            FitOutcome::Feasible(family_spec(family, need))
        } else {
            FitOutcome::Infeasible { required: need }
        };
        return Ok(ExactConstant {
            outcome,
            method: FitMethod::Ratio,
        });
    }
    let steps = (bound / FIT_GRID_STEP).round() as usize;
    for k in 0..steps {
        let cond = family_spec(family, k as f64 * FIT_GRID_STEP);
        if exhaustive_certify(inst, &cond)?.holds_on_checked {
            return Ok(ExactConstant {
                outcome: FitOutcome::Feasible(cond),
                method: FitMethod::Grid,
            });
        }
    }
    Ok(ExactConstant {
        outcome: FitOutcome::Infeasible { required: bound },
        method: FitMethod::Grid,
    })
}

/// Cone families for [`random_finite_instance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenCone {
    Orthant,
    SecondOrder,
}

/// Dimension of the point clouds distances are induced from.
const EMBED_DIM: usize = 2;

/// A random map table together with the depth of each point, when the map
/// funnels every orbit into a single fixed root.
fn draw_map<R: Rng>(rng: &mut R, n: usize) -> (Vec<usize>, Option<Vec<u32>>) {
    if !rng.random_bool(0.5) {
        return ((0..n).map(|_| rng.random_range(0..n)).collect(), None);
    }
    // A random tree on shuffled labels; every point maps to its parent and
    // the root to itself.
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut t = vec![order[0]; n];
    let mut depth = vec![0_u32; n];
    for i in 1..n {
        let parent = order[rng.random_range(0..i)];
        t[order[i]] = parent;
        depth[order[i]] = depth[parent] + 1;
    }
    (t, Some(depth))
}

/// Planar positions: uniform in a square, or, for tree maps, each point at
/// its parent's position scaled by `1/rho` plus noise, so the map acts
/// roughly like the contraction `p -> rho p` toward the root.
fn embedding<R: Rng>(rng: &mut R, t: &[usize], depth: Option<&[u32]>) -> Vec<[f64; EMBED_DIM]> {
    let n = t.len();
    let Some(depth) = depth else {
        return (0..n)
            .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
            .collect();
    };
    let rho: f64 = rng.random_range(0.2..0.7);
    let noise: f64 = rng.random_range(0.05..0.3);
    let mut by_depth: Vec<usize> = (0..n).collect();
    by_depth.sort_by_key(|&p| depth[p]);
    let mut pos = vec![[0.0; EMBED_DIM]; n];
    for p in by_depth {
        let h = depth[p];
        if h == 0 {
            continue;
        }
        let scale = if h == 1 { 1.0 } else { noise / rho.powi(h as i32 - 1) };
        let r = scale * rng.random_range(0.5..1.0);
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let parent = pos[t[p]];
        pos[p] = [parent[0] / rho + r * phi.cos(), parent[1] / rho + r * phi.sin()];
    }
    pos
}

fn euclid(p: &[f64; EMBED_DIM], q: &[f64; EMBED_DIM]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// A random instance on `n` points with `m`-dimensional distances.
///
/// `T` is either a uniformly random table or, with equal probability, a
/// random tree map sending each point to its parent; `S = T^k` with
/// `k` in `{2, 3}`, so the pair commutes and `S(M) ⊆ T(M)`.
///
/// Distances come from random planar point clouds. Tree maps place points at
/// radius shrinking geometrically with depth, which makes the contraction
/// conditions hold with nontrivial constants. Over the orthant each
/// coordinate uses its own cloud and a positive weight, so the coordinates
/// are genuinely different metrics. Over the second-order cone a single
/// cloud is scaled by a fixed interior vector. Either way the axioms hold by
/// construction.
///
/// ```
/// use conefix::finite_oracle::{random_finite_instance, GenCone};
///
/// let a = random_finite_instance(1, 4, 2, GenCone::Orthant).unwrap();
/// let b = random_finite_instance(1, 4, 2, GenCone::Orthant).unwrap();
/// assert_eq!(a, b);
/// ```
pub fn random_finite_instance(seed: u64, n: usize, m: usize, cone: GenCone) -> Result<FiniteInstance> {
    if n == 0 || m == 0 {
        return Err(Error::Unsupported("random instances need n >= 1 and m >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (t, depth) = draw_map(&mut rng, n);
    let k = rng.random_range(2..=3);
    let s: Vec<usize> = (0..n).map(|p| (0..k).fold(p, |q, _| t[q])).collect();

    let mut table = vec![vec![vec![0.0; m]; n]; n];
    let cone_obj = match cone {
        GenCone::Orthant => {
            #[allow(clippy::needless_range_loop)]
            for k in 0..m {
                let w: f64 = rng.random_range(0.5..2.0);
                let pts = embedding(&mut rng, &t, depth.as_deref());
                for i in 0..n {
                    for j in i + 1..n {
                        let d = w * euclid(&pts[i], &pts[j]);
                        table[i][j][k] = d;
                        table[j][i][k] = d;
                    }
                }
            }
            Cone::orthant(m)?
        }
        GenCone::SecondOrder => {
            let tail: Vec<f64> = (1..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let head = tail.iter().map(|v| v * v).sum::<f64>().sqrt() + rng.random_range(0.5..1.5);
            let mut w = vec![head];
            w.extend(tail);
            let pts = embedding(&mut rng, &t, depth.as_deref());
            for i in 0..n {
                for j in i + 1..n {
                    let r = euclid(&pts[i], &pts[j]);
                    for k in 0..m {
                        table[i][j][k] = w[k] * r;
                        table[j][i][k] = w[k] * r;
                    }
                }
            }
            Cone::second_order(m)?
        }
    };
    let table = table
        .into_iter()
        .map(|row| row.into_iter().map(ConeVec::new).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let space = ConeMetricSpace::finite(table, cone_obj, NormSpec::Euclidean)?;
    FiniteInstance::new(space, MapSpec::table(s), MapSpec::table(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::{check_condition, fit_minimal_constants, PairSource};
    use crate::maps::check_commuting;

    fn scalar_instance(points: &[f64], s: Vec<usize>, t: Vec<usize>) -> FiniteInstance {
        let table = points
            .iter()
            .map(|p| points.iter().map(|q| ConeVec::new(vec![(p - q).abs()]).unwrap()).collect())
            .collect();
        let space = ConeMetricSpace::finite(table, Cone::orthant(1).unwrap(), NormSpec::Euclidean).unwrap();
        FiniteInstance::new(space, MapSpec::table(s), MapSpec::table(t)).unwrap()
    }

    #[test]
    fn common_fixed_points() {
        let pts = [0.0, 1.0, 3.0];
        let id = scalar_instance(&pts, vec![0, 1, 2], vec![0, 1, 2]);
        assert_eq!(
            enumerate_common_fixed_points(&id),
            vec![Point::Index(0), Point::Index(1), Point::Index(2)]
        );
        let one = scalar_instance(&pts, vec![0, 0, 0], vec![0, 2, 1]);
        assert_eq!(enumerate_common_fixed_points(&one), vec![Point::Index(0)]);
        let none = scalar_instance(&[0.0, 1.0], vec![1, 0], vec![0, 1]);
        assert!(enumerate_common_fixed_points(&none).is_empty());
    }

    #[test]
    fn constant_s_satisfies_every_jungck_constant() {
        let inst = scalar_instance(&[0.0, 1.0, 3.0], vec![2, 2, 2], vec![0, 2, 1]);
        for a in [0.0, 0.3, 0.99] {
            assert!(exhaustive_certify(&inst, &ConditionSpec::J { a }).unwrap().holds_on_checked);
        }
    }

    #[test]
    fn identity_pair_violates_kannan() {
        let inst = scalar_instance(&[0.0, 1.0], vec![0, 1], vec![0, 1]);
        let r = exhaustive_certify(&inst, &ConditionSpec::Gkc { b: 0.4 }).unwrap();
        assert!(!r.holds_on_checked);
        let w = r.worst_pair.unwrap();
        assert_eq!(w.lhs.coords(), &[1.0]);
        assert_eq!(w.rhs.coords(), &[0.0]);
    }

    #[test]
    fn exact_constants() {
        // Points 0, 1, 2 with S = [0, 1, 1] and T = [0, 2, 2]: every T-distance
        // is twice the S-distance.
        let inst = scalar_instance(&[0.0, 1.0, 2.0], vec![0, 1, 1], vec![0, 2, 2]);
        let c = exact_minimal_constant(&inst, ConditionFamily::J).unwrap();
        assert_eq!(c.outcome, FitOutcome::Feasible(ConditionSpec::J { a: 0.5 }));

        let konst = scalar_instance(&[0.0, 1.0, 3.0], vec![1, 1, 1], vec![0, 2, 1]);
        let c = exact_minimal_constant(&konst, ConditionFamily::J).unwrap();
        assert_eq!(c.outcome, FitOutcome::Feasible(ConditionSpec::J { a: 0.0 }));

        let id = scalar_instance(&[0.0, 1.0], vec![0, 1], vec![0, 1]);
        let c = exact_minimal_constant(&id, ConditionFamily::J).unwrap();
        assert_eq!(c.outcome, FitOutcome::Infeasible { required: 1.0 });
        assert!(exact_minimal_constant(&id, ConditionFamily::Gz0).is_err());
    }

    #[test]
    fn generated_instances() {
        let a = random_finite_instance(1, 4, 2, GenCone::Orthant).unwrap();
        assert_eq!(a, random_finite_instance(1, 4, 2, GenCone::Orthant).unwrap());
        let pts: Vec<Point> = (0..4).map(Point::Index).collect();
        assert!(verify_axioms(a.space(), &pts).unwrap().passed);
        let r = check_commuting(&a.s_map(), &a.t_map(), a.space().domain(), 0, 0, 0.0).unwrap();
        assert!(r.commutes);

        let b = random_finite_instance(7, 6, 3, GenCone::SecondOrder).unwrap();
        assert_eq!(b.len(), 6);
    }

    #[test]
    fn agrees_with_general_checker() {
        for seed in 0..40 {
            let inst = random_finite_instance(seed, 5, 2, GenCone::Orthant).unwrap();
            let (s, t) = (inst.s_map(), inst.t_map());
            for cond in [
                ConditionSpec::J { a: 0.5 },
                ConditionSpec::Gz0 { a: 0.4, b: 0.3, c: 0.2 },
                ConditionSpec::Gwc { delta: 0.5, l: 1.0 },
            ] {
                let general = check_condition(inst.space(), &s, &t, &cond, &PairSource::All).unwrap();
                assert_eq!(general, exhaustive_certify(&inst, &cond).unwrap());
            }
            for fam in [ConditionFamily::J, ConditionFamily::Gkc, ConditionFamily::MaxForm] {
                let fit = fit_minimal_constants(inst.space(), &s, &t, fam, &PairSource::All).unwrap();
                assert_eq!(fit.outcome, exact_minimal_constant(&inst, fam).unwrap().outcome);
            }
        }
    }
}
