//! The Jungck `(S, T)`-iteration and fixed-point certification.
//!
//! Given `S(M) ⊆ T(M)`, the iteration picks `x_{n+1}` with
//! `T x_{n+1} = S x_n`. Under any of the contraction conditions the
//! S-images form a Cauchy sequence whose limit is the unique common fixed
//! point, and the steps shrink geometrically:
//!
//! ```text
//! |d(Sx_{n+1}, Sx_n)| <= factor^n · K · |d(Sx_1, Sx_0)|
//! ```
//!
//! where `K` is the normal constant of the cone.

use std::fmt::Write as _;

use crate::cone::{estimate_normal_constant, ConeVec};
use crate::cone_metric::{step_ratio, ConeMetricSpace, Point};
use crate::contraction::ConditionSpec;
use crate::error::{Error, Result};
use crate::maps::{t_preimage, MapSpec};

/// Sample count for `K` when the cone has no analytic value.
pub const NORMAL_CONSTANT_SAMPLES: usize = 100_000;

/// Slack allowed on top of the contraction factor before a step ratio is
/// flagged.
pub const RATE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Stop once a step norm is at most this value. Zero is allowed and
    /// means "stop on an exactly repeated S-image".
    pub tol: f64,
    pub max_iter: usize,
    /// Residual allowed when solving `T x = y`.
    pub preimage_tol: f64,
    /// Normal constant of the cone; estimated from the cone when `None`.
    pub normal_constant: Option<f64>,
    /// Seed for the normal-constant estimate.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 200,
            preimage_tol: 1e-9,
            normal_constant: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    /// `x_0, x_1, …`; one longer than `step_dists`.
    pub x: Vec<Point>,
    /// `S x_0, S x_1, …`; `T x_{n+1} = s_images[n]`.
    pub s_images: Vec<Point>,
    /// `d(S x_{n+1}, S x_n)`.
    pub step_dists: Vec<ConeVec>,
    pub step_norms: Vec<f64>,
    /// `step_norms[n + 1] / step_norms[n]`, with `0/0 = 0` and `None` when
    /// only the denominator vanishes.
    pub ratios: Vec<Option<f64>>,
    pub converged: bool,
    /// Index of the step that met the tolerance, or `max_iter`.
    pub iterations: usize,
    /// Normal constant used for bounds and rate checks.
    pub normal_constant: f64,
    pub normal_constant_is_analytic: bool,
    /// Contraction factor of the condition the run was made under.
    pub factor: Option<f64>,
    /// First ratio index exceeding `K · factor` plus [`RATE_SLACK`].
    pub rate_violation: Option<usize>,
}

impl IterationTrace {
    /// `None` when the run had no condition; otherwise whether every step
    /// ratio stayed within the condition's factor.
    pub fn rate_consistent(&self) -> Option<bool> {
        self.factor.map(|_| self.rate_violation.is_none())
    }

    /// The latest S-image, the candidate common fixed point.
    pub fn last_image(&self) -> &Point {
        self.s_images.last().expect("a trace always holds S x_0")
    }

    /// The geometric bound on the final step.
    pub fn bound_at_stop(&self) -> Option<f64> {
        let factor = self.factor?;
        let first = *self.step_norms.first()?;
        a_priori_bound(factor, self.normal_constant, first, self.step_norms.len() - 1).ok()
    }

    /// Delimited text: a header row and one row per iteration.
    ///
    /// Columns are `n, x_n, Sx_n, step, step_norm, ratio`. Vector values are
    /// `;`-separated, and `ratio` is empty at `n = 0` and when undefined.
    /// Numbers are written in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,x,sx,step,step_norm,ratio\n");
        for (n, (d, norm)) in self.step_dists.iter().zip(&self.step_norms).enumerate() {
            let ratio = match n.checked_sub(1).map(|k| self.ratios[k]) {
                Some(Some(r)) => format!("{r:e}"),
                _ => String::new(),
            };
            let step: Vec<String> = d.coords().iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(
                out,
                "{n},{},{},{},{norm:e},{ratio}",
                point_field(&self.x[n]),
                point_field(&self.s_images[n]),
                step.join(";")
            );
        }
        out
    }
}

fn point_field(p: &Point) -> String {
    match p {
        Point::Index(i) => i.to_string(),
        Point::Coords(c) => c.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(";"),
    }
}

/// Runs the Jungck iteration from `x0`.
///
/// Each step solves `T x_{n+1} = S x_n` with [`t_preimage`] and stops once
/// `|d(S x_{n+1}, S x_n)| <= tol` or after `max_iter` steps. With a
/// condition, step ratios above `K · factor` are recorded in
/// [`IterationTrace::rate_violation`]; the run itself continues.
///
/// # Errors
///
/// [`Error::NoPreimage`] if some `S x_n` has no T-preimage, which disproves
/// `S(M) ⊆ T(M)` at that point.
///
/// ```
/// use conefix::cone_metric::{ConeMetricSpace, Point};
/// use conefix::contraction::ConditionSpec;
/// use conefix::maps::MapSpec;
/// use conefix::solver::{jungck_iterate, SolverOptions};
///
/// let space = ConeMetricSpace::real_line(-100.0, 100.0, vec![1.0]).unwrap();
/// let s = MapSpec::scalar_affine(0.25, 0.0);
/// let t = MapSpec::scalar_affine(0.5, 0.0);
/// let cond = ConditionSpec::J { a: 0.5 };
/// let trace = jungck_iterate(&space, &s, &t, Some(&cond), &Point::scalar(8.0), &SolverOptions::default()).unwrap();
/// assert!(trace.converged);
/// assert_eq!(trace.rate_consistent(), Some(true));
/// ```
pub fn jungck_iterate(
    space: &ConeMetricSpace,
    s: &MapSpec,
    t: &MapSpec,
    cond: Option<&ConditionSpec>,
    x0: &Point,
    opts: &SolverOptions,
) -> Result<IterationTrace> {
    if !(opts.tol >= 0.0 && opts.tol.is_finite()) {
        return Err(Error::Unsupported(format!("tol must be finite and nonnegative, got {}", opts.tol)));
    }
    s.validate(space.domain())?;
    t.validate(space.domain())?;
    let factor = match cond {
        Some(c) => {
            c.validate_for_solver()?;
            Some(c.contraction_factor()?)
        }
        None => None,
    };
    let (k, analytic) = match opts.normal_constant {
        Some(k) if k >= 1.0 && k.is_finite() => (k, false),
        Some(k) => return Err(Error::Unsupported(format!("normal constant must be at least 1, got {k}"))),
        None => {
            let est = estimate_normal_constant(space.cone(), space.norm(), opts.seed, NORMAL_CONSTANT_SAMPLES)?;
            (est.value, est.is_analytic)
        }
    };

    space.check_point(x0)?;
    let mut trace = IterationTrace {
        x: vec![x0.clone()],
        s_images: vec![s.apply(x0)?],
        step_dists: Vec::new(),
        step_norms: Vec::new(),
        ratios: Vec::new(),
        converged: false,
        iterations: opts.max_iter,
        normal_constant: k,
        normal_constant_is_analytic: analytic,
        factor,
        rate_violation: None,
    };

    for n in 0..opts.max_iter {
        let sx = &trace.s_images[n];
        let next = t_preimage(t, sx, space.domain(), opts.preimage_tol)?;
        let s_next = s.apply(&next)?;
        let d = space.distance(&s_next, sx)?;
        let norm = space.norm().norm(&d);
        if !norm.is_finite() {
            return Err(Error::NonFinite("step norm"));
        }
        if n > 0 {
            let r = step_ratio(norm, trace.step_norms[n - 1]);
            if let Some(f) = factor {
                let within = r.is_some_and(|r| r <= k * f + RATE_SLACK);
                if !within && trace.rate_violation.is_none() {
                    trace.rate_violation = Some(n - 1);
                }
            }
            trace.ratios.push(r);
        }
        trace.x.push(next);
        trace.s_images.push(s_next);
        trace.step_dists.push(d);
        trace.step_norms.push(norm);
        if norm <= opts.tol {
            trace.converged = true;
            trace.iterations = n;
            break;
        }
    }
    Ok(trace)
}

/// `alpha^n · K · first_step_norm`.
///
/// ```
/// assert_eq!(conefix::solver::a_priori_bound(0.5, 1.0, 2.0, 3).unwrap(), 0.25);
/// ```
pub fn a_priori_bound(alpha: f64, k: f64, first_step_norm: f64, n: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Constraint(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    if !(k >= 1.0 && k.is_finite()) {
        return Err(Error::Constraint(format!("K must be at least 1, got {k}")));
    }
    if !(first_step_norm >= 0.0 && first_step_norm.is_finite()) {
        return Err(Error::Constraint(format!(
            "first step norm must be nonnegative, got {first_step_norm}"
        )));
    }
    let n = i32::try_from(n).unwrap_or(i32::MAX);
    Ok(alpha.powi(n) * k * first_step_norm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub z: Point,
    /// `|d(Sz, z)|`.
    pub residual_s: f64,
    /// `|d(Tz, z)|`.
    pub residual_t: f64,
    pub tol: f64,
    pub accepted: bool,
    /// Contraction factor of the run that produced `z`, if any.
    pub bound_alpha: Option<f64>,
    /// [`IterationTrace::bound_at_stop`] of that run.
    pub a_priori_bound_at_stop: Option<f64>,
}

impl Certificate {
    /// Attaches the rate information of the run that produced `z`.
    pub fn with_trace(mut self, trace: &IterationTrace) -> Self {
        self.bound_alpha = trace.factor;
        self.a_priori_bound_at_stop = trace.bound_at_stop();
        self
    }
}

/// Checks `Sz = z` and `Tz = z` up to `tol` in norm.
pub fn certify_common_fixed_point(
    space: &ConeMetricSpace,
    s: &MapSpec,
    t: &MapSpec,
    z: &Point,
    tol: f64,
) -> Result<Certificate> {
    let residual_s = space.distance_norm(&s.apply(z)?, z)?;
    let residual_t = space.distance_norm(&t.apply(z)?, z)?;
    Ok(Certificate {
        z: z.clone(),
        residual_s,
        residual_t,
        tol,
        accepted: residual_s.max(residual_t) <= tol,
        bound_alpha: None,
        a_priori_bound_at_stop: None,
    })
}

/// Whether all accepted certificates name the same point up to `tol`.
/// Rejected certificates are ignored.
pub fn uniqueness_probe(space: &ConeMetricSpace, certificates: &[Certificate], tol: f64) -> Result<bool> {
    let accepted: Vec<&Certificate> = certificates.iter().filter(|c| c.accepted).collect();
    if accepted.is_empty() {
        return Err(Error::SequenceTooShort { need: 1, got: 0 });
    }
    for (i, a) in accepted.iter().enumerate() {
        for b in &accepted[i + 1..] {
            if space.distance_norm(&a.z, &b.z)? > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{Cone, NormSpec};

    fn line() -> ConeMetricSpace {
        ConeMetricSpace::real_line(-100.0, 100.0, vec![1.0]).unwrap()
    }

    fn linear_pair() -> (MapSpec, MapSpec) {
        (MapSpec::scalar_affine(0.25, 0.0), MapSpec::scalar_affine(0.5, 0.0))
    }

    fn two_points() -> ConeMetricSpace {
        let z = ConeVec::new(vec![0.0]).unwrap();
        let one = ConeVec::new(vec![1.0]).unwrap();
        ConeMetricSpace::finite(vec![vec![z.clone(), one.clone()], vec![one, z]], Cone::orthant(1).unwrap(), NormSpec::Euclidean)
            .unwrap()
    }

    #[test]
    fn linear_pair_halves_each_step() {
        let (s, t) = linear_pair();
        let trace = jungck_iterate(&line(), &s, &t, Some(&ConditionSpec::J { a: 0.5 }), &Point::scalar(8.0), &SolverOptions::default())
            .unwrap();
        assert!(trace.converged);
        assert!(trace.iterations <= 29);
        for (n, (x, sx)) in trace.x.iter().zip(&trace.s_images).enumerate() {
            let p = 2f64.powi(-(n as i32));
            assert_eq!(x.as_coords().unwrap()[0], 8.0 * p);
            assert_eq!(sx.as_coords().unwrap()[0], 2.0 * p);
        }
        assert!(trace.ratios.iter().all(|r| *r == Some(0.5)));
        assert_eq!(trace.rate_consistent(), Some(true));
        assert_eq!(trace.step_norms.len(), trace.iterations + 1);
    }

    #[test]
    fn identity_t_gives_powers_of_s() {
        let s = MapSpec::scalar_affine(1.0 / 3.0, 0.0);
        let t = MapSpec::scalar_affine(1.0, 0.0);
        let trace = jungck_iterate(&line(), &s, &t, None, &Point::scalar(1.0), &SolverOptions::default()).unwrap();
        assert!(trace.converged);
        for (n, x) in trace.x.iter().enumerate() {
            let want = 3f64.powi(-(n as i32));
            assert!((x.as_coords().unwrap()[0] - want).abs() <= 1e-15 * want.max(1e-300));
        }
        for r in &trace.ratios {
            assert!((r.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(trace.rate_consistent(), None);
    }

    #[test]
    fn fixed_start_converges_at_zero() {
        let (s, t) = linear_pair();
        let trace = jungck_iterate(&line(), &s, &t, None, &Point::scalar(0.0), &SolverOptions::default()).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.iterations, 0);
        assert_eq!(trace.step_norms, vec![0.0]);
    }

    #[test]
    fn max_iter_stops_the_run() {
        let (s, t) = linear_pair();
        let opts = SolverOptions { max_iter: 3, ..SolverOptions::default() };
        let trace = jungck_iterate(&line(), &s, &t, None, &Point::scalar(8.0), &opts).unwrap();
        assert!(!trace.converged);
        assert_eq!(trace.iterations, 3);
        assert_eq!(trace.to_csv().lines().count(), 4);
    }

    #[test]
    fn missing_preimage_is_an_error() {
        let sp = two_points();
        let s = MapSpec::table(vec![1, 1]);
        let t = MapSpec::table(vec![0, 0]);
        let err = jungck_iterate(&sp, &s, &t, None, &Point::Index(0), &SolverOptions::default()).unwrap_err();
        assert_eq!(err, Error::NoPreimage(Point::Index(1)));
    }

    #[test]
    fn rate_violation_is_flagged() {
        // S = x/4, T = x/2 has step ratio 1/2; claiming J(0.3) is wrong.
        let (s, t) = linear_pair();
        let trace = jungck_iterate(&line(), &s, &t, Some(&ConditionSpec::J { a: 0.3 }), &Point::scalar(8.0), &SolverOptions::default())
            .unwrap();
        assert_eq!(trace.rate_consistent(), Some(false));
        assert_eq!(trace.rate_violation, Some(0));
    }

    #[test]
    fn bounds() {
        assert_eq!(a_priori_bound(0.5, 1.0, 2.0, 3).unwrap(), 0.25);
        assert_eq!(a_priori_bound(0.7, 2.0, 3.0, 0).unwrap(), 6.0);
        assert_eq!(a_priori_bound(0.0, 2.0, 3.0, 4).unwrap(), 0.0);
        assert!(a_priori_bound(1.0, 1.0, 1.0, 1).is_err());
        assert!(a_priori_bound(0.5, 0.5, 1.0, 1).is_err());
        assert!(a_priori_bound(0.5, 1.0, -1.0, 1).is_err());
    }

    #[test]
    fn certificates() {
        let (s, t) = linear_pair();
        let c = certify_common_fixed_point(&line(), &s, &t, &Point::scalar(0.0), 1e-8).unwrap();
        assert!(c.accepted);
        assert_eq!((c.residual_s, c.residual_t), (0.0, 0.0));

        let c = certify_common_fixed_point(&line(), &s, &t, &Point::scalar(1e-3), 1e-8).unwrap();
        assert!(!c.accepted);
        assert!((c.residual_s - 7.5e-4).abs() < 1e-18);

        let sp = two_points();
        let tab = MapSpec::table(vec![1, 1]);
        let c = certify_common_fixed_point(&sp, &tab, &tab, &Point::Index(1), 0.0).unwrap();
        assert!(c.accepted);
    }

    #[test]
    fn uniqueness() {
        let (s, t) = linear_pair();
        let opts = SolverOptions::default();
        let certs: Vec<Certificate> = [8.0, -5.0]
            .iter()
            .map(|&x0| {
                let trace = jungck_iterate(&line(), &s, &t, None, &Point::scalar(x0), &opts).unwrap();
                certify_common_fixed_point(&line(), &s, &t, trace.last_image(), 1e-8).unwrap()
            })
            .collect();
        assert!(certs.iter().all(|c| c.accepted));
        assert!(uniqueness_probe(&line(), &certs, 2e-8).unwrap());
        assert!(uniqueness_probe(&line(), &certs[..1], 0.0).unwrap());

        let sp = two_points();
        let id = MapSpec::identity_table(2);
        let certs: Vec<Certificate> = (0..2)
            .map(|i| certify_common_fixed_point(&sp, &id, &id, &Point::Index(i), 0.0).unwrap())
            .collect();
        assert!(!uniqueness_probe(&sp, &certs, 1e-8).unwrap());
        assert!(uniqueness_probe(&sp, &[], 1e-8).is_err());
    }

    #[test]
    fn csv_layout() {
        let (s, t) = linear_pair();
        let opts = SolverOptions { max_iter: 2, ..SolverOptions::default() };
        let trace = jungck_iterate(&line(), &s, &t, None, &Point::scalar(8.0), &opts).unwrap();
        let csv = trace.to_csv();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows[0], "n,x,sx,step,step_norm,ratio");
        assert_eq!(rows[1], "0,8e0,2e0,1e0,1e0,");
        assert_eq!(rows[2], "1,4e0,1e0,5e-1,5e-1,5e-1");
    }
}
