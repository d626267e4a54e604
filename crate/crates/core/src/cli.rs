//! Scenario files and the commands behind the `conefix` binary.
//!
//! A scenario is a TOML document describing a space, a map pair, the
//! conditions to classify and the solver settings. Every command returns its
//! report as TOML text together with the process exit code, so the binary is
//! a thin argument parser over this module.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::{estimate_normal_constant, ConeVec};
use crate::cone_metric::{verify_axioms, ConeMetricSpace, Point};
use crate::contraction::{
    check_condition, fit_minimal_constants, ConditionFamily, ConditionSpec, Coverage, FitMethod, FitOutcome,
    PairSource, SinghVariant,
};
use crate::error::{Error, Result};
use crate::finite_oracle::{random_finite_instance, GenCone};
use crate::maps::{check_commuting, check_range_inclusion, CheckMode, MapSpec};
use crate::solver::{certify_common_fixed_point, jungck_iterate, uniqueness_probe, SolverOptions, NORMAL_CONSTANT_SAMPLES};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_VIOLATION: u8 = 2;
pub const EXIT_MAX_ITER: u8 = 3;
pub const EXIT_NO_PREIMAGE: u8 = 4;

/// Axiom checks on continuous domains use at most this many sampled points.
const AXIOM_SAMPLE_CAP: usize = 24;

/// At most this many axiom violations are listed in a report.
const VIOLATION_LIST_CAP: usize = 20;

fn default_samples() -> usize {
    500
}

fn default_check_tol() -> f64 {
    1e-9
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    200
}

fn default_preimage_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Seed for every sampled check and estimate.
    #[serde(default)]
    pub seed: u64,
    /// Sample count for checks on continuous domains.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Tolerance of the commuting and range-inclusion checks.
    #[serde(default = "default_check_tol")]
    pub check_tol: f64,
    /// Families whose tightest constant `classify` reports.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fit: Vec<ConditionFamily>,
    pub space: ConeMetricSpace,
    pub s: MapSpec,
    pub t: MapSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conditions: Vec<ConditionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    /// Starting points; each gets its own run and trace file.
    pub starts: Vec<Point>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_preimage_tol")]
    pub preimage_tol: f64,
    /// Residual tolerance for certificates; `tol` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify_tol: Option<f64>,
    /// Condition driving rate checks; the first of `conditions` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<ConditionSpec>,
    /// Overrides the estimated normal constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_constant: Option<f64>,
}

impl SolverSettings {
    pub fn certify_tol(&self) -> f64 {
        self.certify_tol.unwrap_or(self.tol)
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let scn: Scenario = toml::from_str(text).map_err(|e| Error::Scenario(e.message().to_string()))?;
        scn.validate()?;
        Ok(scn)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
        Scenario::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenarios serialize")
    }

    /// Checks every reference and parameter constraint.
    pub fn validate(&self) -> Result<()> {
        let domain = self.space.domain();
        self.s.validate(domain)?;
        self.t.validate(domain)?;
        for c in &self.conditions {
            c.validate()?;
        }
        if !(self.check_tol >= 0.0 && self.check_tol.is_finite()) {
            return Err(Error::Scenario(format!("check_tol must be nonnegative, got {}", self.check_tol)));
        }
        if !domain.is_finite() && self.samples == 0 {
            return Err(Error::Scenario("samples must be positive on continuous domains".into()));
        }
        if let Some(sv) = &self.solver {
            if sv.starts.is_empty() {
                return Err(Error::Scenario("solver.starts must name at least one point".into()));
            }
            for p in &sv.starts {
                self.space.check_point(p)?;
            }
            for (name, v) in [("tol", sv.tol), ("preimage_tol", sv.preimage_tol), ("certify_tol", sv.certify_tol())] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::Scenario(format!("solver.{name} must be nonnegative, got {v}")));
                }
            }
            if let Some(c) = self.solver_condition() {
                c.validate_for_solver()?;
            }
        }
        Ok(())
    }

    /// Applies the command-line overrides.
    pub fn with_overrides(mut self, seed: Option<u64>, variant: Option<SinghVariant>) -> Self {
        if let Some(seed) = seed {
            self.seed = seed;
        }
        if let Some(v) = variant {
            let set = |c: &mut ConditionSpec| {
                if let ConditionSpec::SinghS { variant, .. } = c {
                    *variant = v;
                }
            };
            self.conditions.iter_mut().for_each(set);
            if let Some(c) = self.solver.as_mut().and_then(|sv| sv.condition.as_mut()) {
                set(c);
            }
        }
        self
    }

    /// All pairs on finite domains, seeded samples otherwise.
    pub fn pair_source(&self) -> PairSource {
        if self.space.domain().is_finite() {
            PairSource::All
        } else {
            PairSource::Sampled {
                seed: self.seed,
                n: self.samples,
            }
        }
    }

    pub fn solver_condition(&self) -> Option<ConditionSpec> {
        let sv = self.solver.as_ref()?;
        sv.condition.or_else(|| self.conditions.first().copied())
    }
}

/// A command's report and the exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: String,
    pub exit_code: u8,
}

fn render<T: Serialize>(report: &T) -> String {
    toml::to_string(report).expect("reports serialize")
}

#[derive(Serialize)]
struct ClassifyReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<String>,
    seed: u64,
    condition: Vec<ConditionRecord>,
    fit: Vec<FitRecord>,
}

#[derive(Serialize)]
struct ConditionRecord {
    condition: String,
    holds_on_checked: bool,
    verdict: &'static str,
    mode: Coverage,
    pairs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    worst_x: Option<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    worst_y: Option<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lhs: Option<ConeVec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rhs: Option<ConeVec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slack: Option<f64>,
}

#[derive(Serialize)]
struct FitRecord {
    family: ConditionFamily,
    method: FitMethod,
    mode: Coverage,
    feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    required: Option<f64>,
}

/// Checks each listed condition and fits each listed family.
///
/// Exit code 2 if any condition is violated on the checked pairs, else 0.
pub fn classify(scn: &Scenario) -> Result<Outcome> {
    let src = scn.pair_source();
    let mut records = Vec::new();
    let mut violated = false;
    for cond in &scn.conditions {
        let r = check_condition(&scn.space, &scn.s, &scn.t, cond, &src)?;
        violated |= !r.holds_on_checked;
        let w = r.worst_pair.clone();
        records.push(ConditionRecord {
            condition: cond.to_string(),
            holds_on_checked: r.holds_on_checked,
            verdict: r.verdict(),
            mode: r.coverage,
            pairs: r.n_pairs,
            worst_x: w.as_ref().map(|w| w.x.clone()),
            worst_y: w.as_ref().map(|w| w.y.clone()),
            lhs: w.as_ref().map(|w| w.lhs.clone()),
            rhs: w.as_ref().map(|w| w.rhs.clone()),
            slack: w.as_ref().map(|w| w.slack),
        });
    }
    let mut fits = Vec::new();
    for &family in &scn.fit {
        let f = fit_minimal_constants(&scn.space, &scn.s, &scn.t, family, &src)?;
        let required = match f.outcome {
            FitOutcome::Infeasible { required } => Some(required),
            FitOutcome::Feasible(_) => None,
        };
        fits.push(FitRecord {
            family,
            method: f.method,
            mode: f.coverage,
            feasible: required.is_none(),
            value: f.value(),
            required,
        });
    }
    let report = ClassifyReport {
        scenario: scn.name.clone(),
        seed: scn.seed,
        condition: records,
        fit: fits,
    };
    Ok(Outcome {
        report: render(&report),
        exit_code: if violated { EXIT_VIOLATION } else { EXIT_OK },
    })
}

#[derive(Serialize)]
struct SolveReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<String>,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    condition: Option<String>,
    normal_constant: f64,
    normal_constant_analytic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    unique: Option<bool>,
    run: Vec<RunRecord>,
}

#[derive(Serialize, Default)]
struct RunRecord {
    start: Option<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<String>,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    z: Option<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certified: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a_priori_bound_at_stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate_consistent: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    /// The S-image that has no T-preimage.
    #[serde(skip_serializing_if = "Option::is_none")]
    breaking_point: Option<Point>,
}

/// Runs the Jungck iteration from every start, writing `trace-<i>.csv` into
/// `out_dir`.
///
/// Exit codes: 4 if some S-image has no T-preimage, 3 if some run hit
/// `max_iter`, 2 if a run converged to a point that fails certification, to
/// a step ratio above the condition's factor, or to a point other than the
/// rest; 0 otherwise.
pub fn solve(scn: &Scenario, out_dir: &Path) -> Result<Outcome> {
    let sv = scn
        .solver
        .as_ref()
        .ok_or_else(|| Error::Scenario("solve needs a [solver] table".into()))?;
    let cond = scn.solver_condition();
    let (k, analytic) = match sv.normal_constant {
        Some(k) => (k, false),
        None => {
            let est = estimate_normal_constant(scn.space.cone(), scn.space.norm(), scn.seed, NORMAL_CONSTANT_SAMPLES)?;
            (est.value, est.is_analytic)
        }
    };
    let opts = SolverOptions {
        tol: sv.tol,
        max_iter: sv.max_iter,
        preimage_tol: sv.preimage_tol,
        normal_constant: Some(k),
        seed: scn.seed,
    };
    fs::create_dir_all(out_dir).map_err(|e| Error::Scenario(format!("{}: {e}", out_dir.display())))?;

    let mut runs = Vec::new();
    let mut certs = Vec::new();
    let (mut broken, mut stalled, mut rejected) = (false, false, false);
    for (i, x0) in sv.starts.iter().enumerate() {
        let trace = match jungck_iterate(&scn.space, &scn.s, &scn.t, cond.as_ref(), x0, &opts) {
            Ok(trace) => trace,
            Err(e @ Error::NoPreimage(_)) => {
                broken = true;
                let Error::NoPreimage(p) = &e else { unreachable!() };
                runs.push(RunRecord {
                    start: Some(x0.clone()),
                    breaking_point: Some(p.clone()),
                    error: Some(e.to_string()),
                    ..RunRecord::default()
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let file: PathBuf = out_dir.join(format!("trace-{i}.csv"));
        fs::write(&file, trace.to_csv()).map_err(|e| Error::Scenario(format!("{}: {e}", file.display())))?;
        let mut rec = RunRecord {
            start: Some(x0.clone()),
            trace: Some(file.display().to_string()),
            converged: trace.converged,
            iterations: Some(trace.iterations),
            rate_consistent: trace.rate_consistent(),
            ..RunRecord::default()
        };
        if trace.rate_consistent() == Some(false) {
            rejected = true;
        }
        if trace.converged {
            let cert = certify_common_fixed_point(&scn.space, &scn.s, &scn.t, trace.last_image(), sv.certify_tol())?
                .with_trace(&trace);
            rejected |= !cert.accepted;
            rec.z = Some(cert.z.clone());
            rec.residual_s = Some(cert.residual_s);
            rec.residual_t = Some(cert.residual_t);
            rec.certified = Some(cert.accepted);
            rec.bound_alpha = cert.bound_alpha;
            rec.a_priori_bound_at_stop = cert.a_priori_bound_at_stop;
            certs.push(cert);
        } else {
            stalled = true;
            rec.bound_alpha = trace.factor;
            rec.a_priori_bound_at_stop = trace.bound_at_stop();
        }
        runs.push(rec);
    }
    let unique = if certs.iter().any(|c| c.accepted) {
        Some(uniqueness_probe(&scn.space, &certs, 2.0 * sv.certify_tol())?)
    } else {
        None
    };
    rejected |= unique == Some(false);
    let report = SolveReport {
        scenario: scn.name.clone(),
        seed: scn.seed,
        condition: cond.map(|c| c.to_string()),
        normal_constant: k,
        normal_constant_analytic: analytic,
        unique,
        run: runs,
    };
    let exit_code = if broken {
        EXIT_NO_PREIMAGE
    } else if stalled {
        EXIT_MAX_ITER
    } else if rejected {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    };
    Ok(Outcome {
        report: render(&report),
        exit_code,
    })
}

#[derive(Serialize)]
struct VerifyReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<String>,
    seed: u64,
    axioms: AxiomRecord,
    continuity: ContinuityRecord,
    range_inclusion: RangeRecord,
    commuting: CommuteRecord,
}

#[derive(Serialize)]
struct AxiomRecord {
    passed: bool,
    mode: Coverage,
    points: usize,
    violations: usize,
    violation: Vec<AxiomViolationRecord>,
}

#[derive(Serialize)]
struct AxiomViolationRecord {
    axiom: String,
    witness: Vec<Point>,
    values: Vec<ConeVec>,
}

#[derive(Serialize)]
struct ContinuityRecord {
    holds: bool,
    mode: &'static str,
}

#[derive(Serialize)]
struct RangeRecord {
    holds: bool,
    mode: CheckMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Point>,
}

#[derive(Serialize)]
struct CommuteRecord {
    holds: bool,
    mode: CheckMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s_of_t: Option<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_of_s: Option<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deviation: Option<f64>,
}

/// Checks the metric axioms and the three hypotheses on the map pair.
///
/// Continuity of `T` is structural: every supported map is continuous on
/// its domain. Exit code 2 if anything fails, else 0.
pub fn verify(scn: &Scenario) -> Result<Outcome> {
    let domain = scn.space.domain();
    let (points, mode) = match domain.all_points() {
        Some(all) => (all, Coverage::Exhaustive),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(scn.seed);
            let pts = (0..scn.samples.min(AXIOM_SAMPLE_CAP))
                .map(|_| domain.sample_point(&mut rng))
                .collect();
            (pts, Coverage::Sampled)
        }
    };
    let axioms = verify_axioms(&scn.space, &points)?;
    let commute = check_commuting(&scn.s, &scn.t, domain, scn.seed, scn.samples, scn.check_tol)?;
    let range = check_range_inclusion(&scn.s, &scn.t, domain, scn.seed, scn.samples, scn.check_tol)?;
    let ok = axioms.passed && commute.commutes && range.holds;
    let w = commute.witness.as_ref();
    let report = VerifyReport {
        scenario: scn.name.clone(),
        seed: scn.seed,
        axioms: AxiomRecord {
            passed: axioms.passed,
            mode,
            points: points.len(),
            violations: axioms.violations.len(),
            violation: axioms
                .violations
                .iter()
                .take(VIOLATION_LIST_CAP)
                .map(|v| AxiomViolationRecord {
                    axiom: v.axiom.to_string(),
                    witness: v.witness.clone(),
                    values: v.values.clone(),
                })
                .collect(),
        },
        continuity: ContinuityRecord {
            holds: true,
            mode: "structural",
        },
        range_inclusion: RangeRecord {
            holds: range.holds,
            mode: range.mode,
            witness: range.witness.clone(),
        },
        commuting: CommuteRecord {
            holds: commute.commutes,
            mode: commute.mode,
            witness: w.map(|w| w.point.clone()),
            s_of_t: w.map(|w| w.s_of_t.clone()),
            t_of_s: w.map(|w| w.t_of_s.clone()),
            deviation: w.map(|w| w.deviation),
        },
    };
    Ok(Outcome {
        report: render(&report),
        exit_code: if ok { EXIT_OK } else { EXIT_VIOLATION },
    })
}

/// A scenario for a random finite instance, ready for every command.
pub fn generate(seed: u64, points: usize, dim: usize, cone: GenCone) -> Result<Scenario> {
    let inst = random_finite_instance(seed, points, dim, cone)?;
    Ok(Scenario {
        name: Some(format!("random instance {seed}")),
        seed,
        samples: default_samples(),
        check_tol: default_check_tol(),
        fit: vec![
            ConditionFamily::J,
            ConditionFamily::Gkc,
            ConditionFamily::Gcc,
            ConditionFamily::MaxForm,
        ],
        space: inst.space().clone(),
        s: inst.s_map(),
        t: inst.t_map(),
        conditions: Vec::new(),
        solver: Some(SolverSettings {
            starts: (0..points).map(Point::Index).collect(),
            tol: 0.0,
            max_iter: default_max_iter(),
            preimage_tol: 0.0,
            certify_tol: None,
            condition: None,
            normal_constant: None,
        }),
    })
}

#[derive(Serialize)]
struct EstimateReport {
    value: f64,
    samples_used: usize,
    seed: u64,
    analytic: bool,
}

/// Normal constant of the scenario's cone under its norm.
pub fn estimate_k(scn: &Scenario, samples: usize) -> Result<Outcome> {
    let est = estimate_normal_constant(scn.space.cone(), scn.space.norm(), scn.seed, samples)?;
    Ok(Outcome {
        report: render(&EstimateReport {
            value: est.value,
            samples_used: est.samples_used,
            seed: est.seed,
            analytic: est.is_analytic,
        }),
        exit_code: EXIT_OK,
    })
}
