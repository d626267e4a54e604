//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use conefix::cone::{estimate_normal_constant, sampled_normal_constant, Cone, ConeVec, NormSpec};
use conefix::cone_metric::{verify_axioms, Axiom, ConeMetricSpace, Point};
use conefix::contraction::{
    alpha_from_singh, delta_from_gz0, fit_minimal_constants, gwc_witness_from, gz0_to_maxform, gz0_to_swapped_gwc,
    maxform_to_gz0, singh_rate, ConditionFamily, ConditionSpec, FitOutcome, PairSource, SinghVariant,
};
use conefix::finite_oracle::{
    enumerate_common_fixed_points, exact_minimal_constant, exhaustive_certify, random_finite_instance,
    FiniteInstance, GenCone,
};
use conefix::maps::MapSpec;
use conefix::solver::{jungck_iterate, SolverOptions};

const CORPUS: usize = 500;

struct Suite {
    failed: usize,
}

impl Suite {
    fn report(&mut self, id: &str, title: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("{} {id} {title}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn corpus() -> Vec<FiniteInstance> {
    (0..CORPUS as u64)
        .map(|seed| {
            let n = 2 + (seed % 7) as usize;
            let m = 1 + ((seed / 7) % 3) as usize;
            let cone = if seed % 5 == 4 { GenCone::SecondOrder } else { GenCone::Orthant };
            random_finite_instance(seed, n, m, cone).unwrap()
        })
        .collect()
}

fn singh_grid() -> Vec<ConditionSpec> {
    let mut out = Vec::new();
    for i in 0..10 {
        for j in 0..10 {
            for k in 0..10 {
                let (a, b, c) = (i as f64 / 10.0, j as f64 / 20.0, k as f64 / 20.0);
                let sum = a + 2.0 * b + 2.0 * c;
                if sum > 0.0 && sum < 1.0 {
                    out.push(ConditionSpec::SinghS { a, b, c, variant: SinghVariant::Classic });
                }
            }
        }
    }
    out
}

fn gz0_grid() -> Vec<ConditionSpec> {
    let mut out = Vec::new();
    for i in 0..10 {
        for j in 0..5 {
            for k in 0..5 {
                let (a, b, c) = (i as f64 / 10.0, j as f64 / 10.0, k as f64 / 10.0);
                out.push(ConditionSpec::Gz0 { a, b, c });
            }
        }
    }
    out
}

fn gwc_grid() -> Vec<ConditionSpec> {
    let mut out = Vec::new();
    for delta in [0.2, 0.5, 0.8] {
        for l in [0.0, 0.5, 1.0, 3.0] {
            out.push(ConditionSpec::Gwc { delta, l });
        }
    }
    out
}

/// Certified parameter choices for one instance, keyed by family.
fn certified_conditions(inst: &FiniteInstance) -> BTreeMap<ConditionFamily, Vec<ConditionSpec>> {
    let holds = |c: &ConditionSpec| exhaustive_certify(inst, c).unwrap().holds_on_checked;
    let mut out: BTreeMap<ConditionFamily, Vec<ConditionSpec>> = BTreeMap::new();
    for fam in [ConditionFamily::J, ConditionFamily::Gkc, ConditionFamily::Gcc, ConditionFamily::MaxForm] {
        if let FitOutcome::Feasible(c) = exact_minimal_constant(inst, fam).unwrap().outcome {
            if holds(&c) {
                out.entry(fam).or_default().push(c);
            }
        }
    }
    for c in singh_grid().into_iter().chain(gz0_grid()).chain(gwc_grid()) {
        if holds(&c) {
            out.entry(c.family()).or_default().push(c);
        }
    }
    out
}

/// Outcome of the fixed-point checks on one instance.
struct FixedPointCheck {
    unique: bool,
    all_starts_reach: bool,
}

fn fixed_point_check(inst: &FiniteInstance, k: f64) -> FixedPointCheck {
    let fixed = enumerate_common_fixed_points(inst);
    let unique = fixed.len() == 1;
    let opts = SolverOptions {
        tol: 0.0,
        max_iter: 200,
        preimage_tol: 0.0,
        normal_constant: Some(k),
        seed: 0,
    };
    let (s, t) = (inst.s_map(), inst.t_map());
    let all_starts_reach = unique
        && (0..inst.len()).all(|x0| {
            let trace = jungck_iterate(inst.space(), &s, &t, None, &Point::Index(x0), &opts).unwrap();
            trace.converged && trace.last_image() == &fixed[0]
        });
    FixedPointCheck { unique, all_starts_reach }
}

fn c1(suite: &mut Suite) {
    let start = Instant::now();
    let space = ConeMetricSpace::real_line(-10.0, 10.0, vec![1.0]).unwrap();
    let (s, t) = (MapSpec::scalar_affine(0.25, 0.0), MapSpec::scalar_affine(0.5, 0.0));
    let cond = ConditionSpec::SinghS { a: 0.5, b: 0.0, c: 0.0, variant: SinghVariant::Classic };
    let trace = jungck_iterate(&space, &s, &t, Some(&cond), &Point::scalar(8.0), &SolverOptions::default()).unwrap();
    let k = trace.normal_constant;
    let ratios_ok = !trace.ratios.is_empty()
        && trace.ratios.iter().all(|r| r.is_some_and(|r| (r - 0.5).abs() <= 1e-12));
    let first = trace.step_norms[0];
    let bound_ok = trace
        .step_norms
        .iter()
        .enumerate()
        .all(|(n, norm)| *norm <= 0.5f64.powi(n as i32) * k * first + 1e-12);
    let elapsed = start.elapsed();
    suite.report(
        "C1",
        "rate bound",
        ratios_ok && bound_ok && trace.converged && elapsed.as_secs_f64() < 1.0,
        format!(
            "{} steps, ratios at 0.5: {ratios_ok}, bound holds: {bound_ok}, {:.3} s",
            trace.step_norms.len(),
            elapsed.as_secs_f64()
        ),
    );
}

fn c2_c3(suite: &mut Suite, corpus: &[FiniteInstance]) {
    let start = Instant::now();
    let mut k_by_dim: BTreeMap<(bool, usize), f64> = BTreeMap::new();
    let mut certified: BTreeMap<ConditionFamily, usize> = BTreeMap::new();
    let mut failures: BTreeMap<ConditionFamily, usize> = BTreeMap::new();
    let mut first_failure: BTreeMap<ConditionFamily, String> = BTreeMap::new();
    let mut conversions = 0usize;
    let mut counterexamples = Vec::new();
    let mut all_certs = Vec::with_capacity(corpus.len());

    for (seed, inst) in corpus.iter().enumerate() {
        let cone = inst.space().cone();
        let key = (cone.is_orthant(), cone.dim());
        let k = *k_by_dim.entry(key).or_insert_with(|| {
            estimate_normal_constant(cone, inst.space().norm(), 0, 100_000).unwrap().value
        });
        let certs = certified_conditions(inst);
        let check = (!certs.is_empty()).then(|| fixed_point_check(inst, k));
        for (fam, list) in &certs {
            *certified.entry(*fam).or_default() += 1;
            let check = check.as_ref().unwrap();
            if !(check.unique && check.all_starts_reach) {
                *failures.entry(*fam).or_default() += 1;
                first_failure.entry(*fam).or_insert_with(|| {
                    format!("seed {seed}, {}, unique {}", list[0], check.unique)
                });
            }
        }
        all_certs.push(certs);
    }
    let c2_time = start.elapsed().as_secs_f64();

    let mut fams = String::new();
    let mut c2_pass = c2_time < 60.0;
    for fam in [
        ConditionFamily::SinghS,
        ConditionFamily::J,
        ConditionFamily::Gkc,
        ConditionFamily::Gcc,
        ConditionFamily::Gz0,
        ConditionFamily::Gwc,
    ] {
        let n = certified.get(&fam).copied().unwrap_or(0);
        let f = failures.get(&fam).copied().unwrap_or(0);
        c2_pass &= f == 0 && n > 0;
        fams.push_str(&format!(" {fam} {}/{n}", n - f));
    }
    suite.report(
        "C2",
        "existence and uniqueness",
        c2_pass,
        format!("{} instances, unique and reached per family:{fams}, {c2_time:.2} s", corpus.len()),
    );
    for (fam, what) in &first_failure {
        println!("     {fam} first failure: {what}");
    }

    for (seed, (inst, certs)) in corpus.iter().zip(&all_certs).enumerate() {
        let holds = |c: &ConditionSpec| exhaustive_certify(inst, c).unwrap().holds_on_checked;
        let mut check = |src: &ConditionSpec, dst: ConditionSpec| {
            conversions += 1;
            if !holds(&dst) {
                counterexamples.push(format!("seed {seed}: {src} -> {dst}"));
            }
        };
        for src in certs.values().flatten() {
            match *src {
                ConditionSpec::J { a } => {
                    check(src, gwc_witness_from(src).unwrap());
                    check(src, ConditionSpec::Gz0 { a, b: 0.0, c: 0.0 });
                }
                ConditionSpec::Gkc { b } => {
                    check(src, gwc_witness_from(src).unwrap());
                    check(src, ConditionSpec::Gz0 { a: 0.0, b, c: 0.0 });
                }
                ConditionSpec::Gcc { c } => {
                    check(src, gwc_witness_from(src).unwrap());
                    check(src, ConditionSpec::Gz0 { a: 0.0, b: 0.0, c });
                }
                ConditionSpec::Gz0 { a, b, c } => {
                    check(src, gwc_witness_from(src).unwrap());
                    check(src, gz0_to_swapped_gwc(a, b, c).unwrap());
                    check(src, gz0_to_maxform(a, b, c).unwrap());
                }
                ConditionSpec::MaxForm { h } => check(src, maxform_to_gz0(h).unwrap()),
                _ => {}
            }
        }
    }
    suite.report(
        "C3",
        "implication lattice",
        counterexamples.is_empty() && conversions > 0,
        format!("{conversions} conversions checked, {} counterexamples", counterexamples.len()),
    );
    for c in counterexamples.iter().take(5) {
        println!("     {c}");
    }
}

fn c4(suite: &mut Suite) {
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for seed in 0..100u64 {
        let n = 2 + (seed % 7) as usize;
        let m = 1 + ((seed / 7) % 3) as usize;
        let inst = random_finite_instance(10_000 + seed, n, m, GenCone::Orthant).unwrap();
        for fam in [ConditionFamily::J, ConditionFamily::Gkc, ConditionFamily::Gcc, ConditionFamily::MaxForm] {
            let fit = fit_minimal_constants(inst.space(), &inst.s_map(), &inst.t_map(), fam, &PairSource::All).unwrap();
            let exact = exact_minimal_constant(&inst, fam).unwrap();
            compared += 1;
            if fit.outcome != exact.outcome {
                mismatches.push(format!("seed {seed} {fam}: {:?} vs {:?}", fit.outcome, exact.outcome));
            }
        }
    }
    suite.report(
        "C4",
        "fit agrees with oracle",
        mismatches.is_empty(),
        format!("{compared} fits on 100 orthant instances, {} mismatches", mismatches.len()),
    );
    for m in mismatches.iter().take(5) {
        println!("     {m}");
    }
}

fn c5(suite: &mut Suite) {
    let (mut checked, mut bad_alpha, mut bad_delta) = (0, 0, 0);
    for i in 0..50 {
        for j in 0..50 {
            for k in 0..50 {
                let (a, b, c) = (i as f64 / 50.0, j as f64 / 100.0, k as f64 / 100.0);
                let sum = a + 2.0 * b + 2.0 * c;
                if (sum - 1.0).abs() > 1e-12 {
                    checked += 1;
                    if (singh_rate(a, b, c) < 1.0) != (sum < 1.0) {
                        bad_alpha += 1;
                    }
                    if alpha_from_singh(a, b, c).is_ok() != (sum < 1.0) {
                        bad_alpha += 1;
                    }
                }
                let direct = [a, b / (1.0 - b), c / (1.0 - c)].into_iter().fold(f64::NEG_INFINITY, f64::max);
                if (delta_from_gz0(a, b, c).unwrap() - direct).abs() > 1e-12 {
                    bad_delta += 1;
                }
            }
        }
    }
    suite.report(
        "C5",
        "algebraic identities",
        bad_alpha == 0 && bad_delta == 0,
        format!("{checked} rate points, {bad_alpha} rate mismatches, 125000 delta points, {bad_delta} delta mismatches"),
    );
}

fn c6(suite: &mut Suite) {
    let mut analytic_ok = true;
    let mut worst = 0.0_f64;
    let mut samples = 0;
    for m in 1..=5 {
        let cone = Cone::orthant(m).unwrap();
        let est = estimate_normal_constant(&cone, &NormSpec::Euclidean, m as u64, 1).unwrap();
        analytic_ok &= est.value == 1.0 && est.is_analytic;
        let sampled = sampled_normal_constant(&cone, &NormSpec::Euclidean, m as u64, 200_000).unwrap();
        samples += sampled.samples_used;
        worst = worst.max(sampled.value);
    }
    suite.report(
        "C6",
        "normal constant",
        analytic_ok && worst <= 1.0 + 1e-9 && samples >= 1_000_000,
        format!("analytic K = 1 for m = 1..5: {analytic_ok}, sampled max {worst} over {samples} samples"),
    );
}

fn table_space(rows: Vec<Vec<f64>>) -> ConeMetricSpace {
    let table = rows
        .into_iter()
        .map(|r| r.into_iter().map(|v| ConeVec::new(vec![v]).unwrap()).collect())
        .collect();
    ConeMetricSpace::finite(table, Cone::orthant(1).unwrap(), NormSpec::Euclidean).unwrap()
}

fn c7(suite: &mut Suite, corpus: &[FiniteInstance]) {
    let cases = [
        // d(0, 1) = 0 for distinct points.
        (Axiom::Cm1, vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]], vec![0, 1]),
        (Axiom::Cm2, vec![vec![0.0, 1.0, 1.0], vec![2.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]], vec![0, 1]),
        // d(0, 2) = 5 > d(0, 1) + d(1, 2) = 2, reported as (x, y, via).
        (Axiom::Cm3, vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]], vec![0, 2, 1]),
    ];
    let mut detected = Vec::new();
    let mut hand_ok = true;
    for (axiom, rows, witness) in cases {
        let space = table_space(rows);
        let report = verify_axioms(&space, &space.domain().all_points().unwrap()).unwrap();
        let want: Vec<Point> = witness.into_iter().map(Point::Index).collect();
        let found = report.violations.iter().any(|v| v.axiom == axiom && v.witness == want);
        let only = report.violations.iter().all(|v| v.axiom == axiom);
        hand_ok &= !report.passed && found && only;
        detected.push(format!("{axiom} {}", if found && only { "found" } else { "missed" }));
    }
    let failing = corpus
        .iter()
        .filter(|inst| {
            let space = inst.space();
            !verify_axioms(space, &space.domain().all_points().unwrap()).unwrap().passed
        })
        .count();
    suite.report(
        "C7",
        "metric axiom verifier",
        hand_ok && failing == 0,
        format!("{}, {failing} of {} generated instances rejected", detected.join(", "), corpus.len()),
    );
}

fn c8(suite: &mut Suite) {
    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let out = tempfile::tempdir().unwrap();
    let run = |cmd: &str, name: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_conefix"))
            .args([cmd, "--scenario"])
            .arg(scenarios.join(name))
            .arg("--out")
            .arg(out.path())
            .output()
            .unwrap();
        let report = String::from_utf8(o.stdout).unwrap().parse::<toml::Table>().unwrap_or_default();
        (o.status.code(), report)
    };

    let (code, report) = run("verify", "non_commuting.toml");
    let witness = report.get("commuting").and_then(|c| c.get("witness")).cloned();
    let commute_ok = code == Some(2) && witness.is_some();

    let (code, report) = run("solve", "range_violator.toml");
    let breaking = report
        .get("run")
        .and_then(|r| r.as_array())
        .and_then(|r| r.first())
        .and_then(|r| r.get("breaking_point"))
        .and_then(|b| b.as_integer());
    let range_ok = code == Some(4) && breaking.is_some();

    suite.report(
        "C8",
        "negative controls",
        commute_ok && range_ok,
        format!(
            "non-commuting exit 2 with witness {}: {commute_ok}, range violator exit 4 at point {}: {range_ok}",
            witness.map(|w| w.to_string()).unwrap_or_default(),
            breaking.map(|b| b.to_string()).unwrap_or_default()
        ),
    );
}

fn main() {
    let mut suite = Suite { failed: 0 };
    let corpus = corpus();
    c1(&mut suite);
    c2_c3(&mut suite, &corpus);
    c4(&mut suite);
    c5(&mut suite);
    c6(&mut suite);
    c7(&mut suite, &corpus);
    c8(&mut suite);
    if suite.failed > 0 {
        println!("{} criteria failed", suite.failed);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
