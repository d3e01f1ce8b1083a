//! Named verification suites, as run by `fermicorr verify`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::{canonical, e_corr_bos_k, ks_between, quadratic_expansion_check};
use crate::error::{invalid, Result};
use crate::fock::{self, FockSuiteOptions, FockSystem, ModeSet};
use crate::lattice::{fermi_ball, lune, LatticeVector, Lune};
use crate::numeric::linalg::{max_abs, sym_norm, SymEigen};
use crate::numeric::quadrature::QuadratureSpec;
use crate::onebody::{
    check_element_bounds, one_dim_perturb_sqrt, t_pair_derivative_residual, trace_correction, Kernel, OneBody,
    SqrtRoute, BOUND_SLACK,
};
use crate::potential::PotentialModel;
use crate::report::{Check, Status, SuiteReport};

pub const SUITES: [&str; 6] = ["onebody", "fock-algebra", "fock-diag", "fock-nb", "energy-identities", "all"];

/// Times at which the `t`-dependent bounds are evaluated.
pub const T_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random one-body instances.
    pub instances: usize,
    /// Lunes are taken for every `k_F` in this list and `|k| ≤ 2k_F`.
    pub lune_k_f: Vec<f64>,
    /// `k_F` for the Fock-space suites.
    pub fock_k_f: f64,
    pub model: PotentialModel,
    pub quad: QuadratureSpec,
    pub fock: FockSuiteOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            instances: 100,
            lune_k_f: vec![1.0, 2.0, 3.0],
            fock_k_f: 0.9,
            model: PotentialModel::Coulomb { g: 1.0 },
            quad: QuadratureSpec::default(),
            fock: FockSuiteOptions::default(),
        }
    }
}

pub fn is_suite(name: &str) -> bool {
    SUITES.contains(&name)
}

/// Run one named suite, or all of them.
pub fn run_suite(name: &str, opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut out = SuiteReport::new(name);
    match name {
        "onebody" => out.extend(verify_onebody(opts)?),
        "energy-identities" => out.extend(verify_energy_identities(opts)?),
        "fock-algebra" | "fock-diag" | "fock-nb" => {
            for rep in fock_suites(name, opts)? {
                out.extend(rep);
            }
        }
        "all" => {
            for s in &SUITES[..5] {
                out.extend(run_suite(s, opts)?);
            }
        }
        other => return Err(invalid(format!("unknown suite '{other}' (expected one of {})", SUITES.join(", ")))),
    }
    Ok(out)
}

/// Transfer lists tried for the Fock suites: `{±x}` and `{±x, ±y}`.
pub fn fock_k_lists() -> Vec<Vec<LatticeVector>> {
    let x = LatticeVector::new(1, 0, 0);
    let y = LatticeVector::new(0, 1, 0);
    vec![vec![x], vec![x, y]]
}

fn fock_suites(name: &str, opts: &VerifyOptions) -> Result<Vec<SuiteReport>> {
    let mut out = Vec::new();
    for ks in fock_k_lists() {
        let label = ks.iter().map(|k| format!("±{k}")).collect::<Vec<_>>().join(",");
        let modes = match ModeSet::build(opts.fock_k_f, &ks) {
            Ok(m) => m,
            Err(crate::Error::ResourceLimit(msg)) => {
                let mut rep = SuiteReport::new(format!("{name} [kF={} k={label}]", opts.fock_k_f));
                rep.push(Check::skipped("mode set", msg));
                out.push(rep);
                continue;
            }
            Err(e) => return Err(e),
        };
        let sys = FockSystem::new(modes, opts.model.clone())?;
        let f = &opts.fock;
        match name {
            "fock-algebra" => {
                out.push(fock::verify_algebra(&sys, f));
                out.push(fock::verify_fermionic_estimates(&sys, f));
            }
            "fock-diag" => {
                out.push(fock::verify_diagonalization(&sys, f));
                out.push(fock::verify_exchange_value(&sys, f));
            }
            _ => out.push(fock::verify_nonbosonizable(&sys, f)),
        }
    }
    if name == "fock-nb" {
        let mut rep = SuiteReport::new("nested commutator");
        rep.push(fock::nested_commutator_check(opts.seed, 50, 12));
        out.push(rep);
    }
    Ok(out)
}

/// Every lune with `|k| ≤ 2k_F`, one representative per cubic orbit when the
/// potential is isotropic.
pub fn test_lunes(k_f_list: &[f64], model: &PotentialModel) -> Result<Vec<(f64, Lune)>> {
    let mut out = Vec::new();
    for &k_f in k_f_list {
        let ball = fermi_ball(k_f)?;
        for k in ks_between(None, 2.0 * k_f) {
            if model.is_isotropic() && canonical(k) != k {
                continue;
            }
            out.push((k_f, lune(&ball, k)?));
        }
    }
    Ok(out)
}

fn random_instance(r: &mut ChaCha8Rng) -> (DMatrix<f64>, DVector<f64>) {
    let n = r.gen_range(2..=20);
    let lam = DVector::from_fn(n, |_, _| r.gen_range(0.1..10.0));
    let v = DVector::from_fn(n, |_, _| r.gen_range(0.0..1.0));
    (DMatrix::from_diagonal(&lam), v)
}

/// Worst violation per bound family, merged over instances.
#[derive(Default)]
struct BoundTally {
    worst: BTreeMap<String, (f64, String)>,
    count: usize,
}

impl BoundTally {
    fn add(&mut self, label: &str, h: &DMatrix<f64>, v: &DVector<f64>, kernel: &Kernel) -> Result<()> {
        for b in check_element_bounds(h, v, kernel, &T_GRID)? {
            let e = self.worst.entry(b.name.clone()).or_insert((f64::NEG_INFINITY, String::new()));
            if b.max_violation > e.0 {
                *e = (b.max_violation, label.to_string());
            }
        }
        self.count += 1;
        Ok(())
    }

    fn report(self, prefix: &str, rep: &mut SuiteReport) {
        for (name, (worst, at)) in self.worst {
            rep.push(
                Check::within(format!("{prefix}: {name}"), worst.max(0.0), BOUND_SLACK)
                    .with_note(format!("{} instances, largest (lhs − rhs)/scale {worst:.3e} at {at}", self.count)),
            );
        }
    }
}

/// One-body identities and the explicit-constant bounds on random instances
/// and on lunes.
pub fn verify_onebody(opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("onebody");
    let quad = QuadratureSpec { rel_tol: 1e-12, abs_tol: 0.0, max_subdivisions: 400 };

    // scalar closed forms
    let scalar = OneBody::new(DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, 1.0))?;
    let tc = scalar.trace_correction(&quad)?;
    let exact = 3f64.sqrt() - 2.0;
    rep.push(Check::within("scalar trace correction, direct", (tc.route1 - exact).abs(), 1e-10));
    rep.push(Check::within("scalar trace correction, integral", (tc.route2 - exact).abs(), 1e-10));
    rep.push(Check::within("scalar K = −¼ log 3", (scalar.kernel.matrix[(0, 0)] + 0.25 * 3f64.ln()).abs(), 1e-14));
    rep.push(Check::within("scalar A(1) = √3 − 1", (scalar.a_b(1.0).0[(0, 0)] - (3f64.sqrt() - 1.0)).abs(), 1e-13));

    let mut r = ChaCha8Rng::seed_from_u64(opts.seed);
    r.set_stream(11);

    // rank-one square root against the eigendecomposition
    let mut sqrt_err: f64 = 0.0;
    let mut trace_err: f64 = 0.0;
    for _ in 0..10 {
        let n = 6;
        let m = DMatrix::from_fn(n, n, |_, _| r.gen_range(-1.0..1.0));
        let a = &m * m.transpose() + DMatrix::identity(n, n) * 0.5;
        let w = DVector::from_fn(n, |_, _| r.gen_range(-1.0..1.0));
        let g = 0.7;
        let s = one_dim_perturb_sqrt(&a, &w, g)?;
        let direct = SymEigen::new(&(&a + g * &w * w.transpose())).apply(f64::sqrt);
        sqrt_err = sqrt_err.max(max_abs(&(&s.matrix - &direct)) / max_abs(&direct));
        trace_err = trace_err.max((s.trace - s.matrix.trace()).abs() / s.trace.abs());
    }
    rep.push(Check::within("(A + gP_w)^{1/2}, integral vs eigendecomposition", sqrt_err, 1e-9));
    rep.push(Check::within("(A + gP_w)^{1/2}, trace form vs matrix trace", trace_err, 1e-9));

    // random instances
    let mut tally = BoundTally::default();
    let mut diag_worst: f64 = 0.0;
    let mut hyper_worst: f64 = 0.0;
    let mut start_worst: f64 = 0.0;
    let mut deriv_worst: f64 = 0.0;
    let mut nodes_worst: f64 = 0.0;
    for i in 0..opts.instances {
        let (h, v) = random_instance(&mut r);
        let ob = OneBody::new(h.clone(), v.clone())?;
        tally.add(&format!("instance {i}"), &h, &v, &ob.kernel)?;
        diag_worst = diag_worst.max(sym_norm(&ob.a_b(1.0).1) / sym_norm(&h));
        for &t in &T_GRID {
            let f = ob.kernel.functions(t);
            let c = &f.cosh_neg;
            let s = &f.sinh_neg;
            let id = DMatrix::identity(ob.dim(), ob.dim());
            hyper_worst = hyper_worst.max(max_abs(&(c * c - s * s - &id)));
        }
        let (a0, b0) = ob.a_b(0.0);
        start_worst = start_worst.max(max_abs(&(a0 - &ob.p))).max(max_abs(&(b0 - &ob.p)));
        for t in [&h, &ob.p] {
            deriv_worst = deriv_worst.max(t_pair_derivative_residual(&ob.kernel, t, &[0.25, 0.5, 0.75], 1e-5));
        }
        let i32 = ob.int_b(32);
        nodes_worst = nodes_worst.max(max_abs(&(&i32 - ob.int_b(64))) / max_abs(&i32).max(f64::MIN_POSITIVE));
    }
    tally.report("random", &mut rep);
    rep.push(Check::within("random: ‖B(1)‖ ≤ 1e−10‖h‖", diag_worst, 1e-10));
    rep.push(Check::within("random: cosh² − sinh² = 1", hyper_worst, 1e-11));
    rep.push(Check::within("random: A(0) = B(0) = P", start_worst, 1e-13));
    rep.push(Check::within("random: T-pair derivatives by central differences", deriv_worst, 1e-6));
    rep.push(Check::within("random: ∫B, 32 vs 64 nodes", nodes_worst, 1e-12));

    // lunes
    let lunes = test_lunes(&opts.lune_k_f, &opts.model)?;
    let per_lune: Vec<Result<(String, OneBody, f64, f64)>> = lunes
        .par_iter()
        .map(|(k_f, l)| {
            let ob = OneBody::for_lune(l, &opts.model, *k_f)?;
            let tc = trace_correction(&ob.h, &ob.v, &opts.quad)?;
            let diag = sym_norm(&ob.a_b(1.0).1) / sym_norm(&ob.h);
            Ok((format!("kF={k_f} k={}", l.k), ob, tc.relative_difference, diag))
        })
        .collect();
    let mut tally = BoundTally::default();
    let mut diag_worst: f64 = 0.0;
    let mut route_worst: f64 = 0.0;
    for item in per_lune {
        let (label, ob, route, diag) = item?;
        tally.add(&label, &ob.h, &ob.v, &ob.kernel)?;
        route_worst = route_worst.max(route);
        diag_worst = diag_worst.max(diag);
    }
    tally.report("lunes", &mut rep);
    rep.push(Check::within("lunes: ‖B(1)‖ ≤ 1e−10‖h‖", diag_worst, 1e-10).with_note(format!("{} lunes", lunes.len())));
    rep.push(Check::within("lunes: trace correction, direct vs integral", route_worst, 1e-8));

    // K through the rank-one integral representation
    let ball = fermi_ball(1.0)?;
    let l = lune(&ball, LatticeVector::new(1, 0, 0))?;
    let ob = OneBody::for_lune(&l, &PotentialModel::Coulomb { g: 1.0 }, 1.0)?;
    let alt = Kernel::build_with(&ob.h, &ob.v, SqrtRoute::RankOneIntegral)?;
    rep.push(Check::within(
        "K at kF=1, k=(1,0,0): eigendecomposition vs integral representation",
        max_abs(&(&alt.matrix - &ob.kernel.matrix)) / max_abs(&ob.kernel.matrix),
        1e-9,
    ));
    Ok(rep)
}

/// Per-`k` agreement of the energy integrand with the direct trace, and the
/// quadratic expansion identity.
pub fn verify_energy_identities(opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("energy-identities");
    let lunes = test_lunes(&opts.lune_k_f, &opts.model)?;
    let diffs: Vec<Result<(f64, String)>> = lunes
        .par_iter()
        .map(|(k_f, l)| {
            let ob = OneBody::for_lune(l, &opts.model, *k_f)?;
            let direct = trace_correction(&ob.h, &ob.v, &opts.quad)?.route1;
            let e = e_corr_bos_k(l, &opts.model, *k_f, &opts.quad)?;
            let rel = if direct == 0.0 { e.abs() } else { ((e - direct) / direct).abs() };
            Ok((rel, format!("kF={k_f} k={}", l.k)))
        })
        .collect();
    let mut worst = (0.0, String::new());
    for d in diffs {
        let d = d?;
        if d.0 > worst.0 {
            worst = d;
        }
    }
    rep.push(
        Check::within("e_corr_bos_k vs direct trace", worst.0, 1e-8)
            .with_note(format!("{} lunes, worst at {}", lunes.len(), worst.1)),
    );

    let ball = fermi_ball(3.0)?;
    let ks = [
        [1, 0, 0],
        [1, 1, 0],
        [1, 1, 1],
        [2, 0, 0],
        [2, 1, 0],
        [2, 1, 1],
        [2, 2, 1],
        [3, 1, 0],
        [4, 2, 1],
        [7, 0, 0],
    ];
    let mut worst = (0.0, String::new());
    for k in ks {
        let l = lune(&ball, LatticeVector::from(k))?;
        let b = quadratic_expansion_check(&l)?;
        if b.max_violation >= worst.0 {
            worst = (b.max_violation, b.name);
        }
    }
    rep.push(Check::within("quadratic expansion identity, 10 lunes at kF=3", worst.0, 1e-8).with_note(worst.1));
    Ok(rep)
}

/// Number of failed checks.
pub fn failure_count(rep: &SuiteReport) -> usize {
    rep.checks.iter().filter(|c| c.status == Status::Fail).count()
}
