use fermicorr::energy::{
    bos_integrand, e_corr_bos, e_corr_bos_k, e_corr_ex, e_corr_ex_k, e_fs, fit_scaling, fit_scaling_points,
    quadratic_expansion_check, upper_bound, write_csv, KSumPolicy, CSV_HEADER,
};
use fermicorr::lattice::{fermi_ball, k_vectors_within, lune, LatticeVector};
use fermicorr::numeric::quadrature::QuadratureSpec;
use fermicorr::onebody::OneBody;
use fermicorr::potential::PotentialModel;
use fermicorr::Error;
use proptest::prelude::*;

const TWO_PI_CUBED: f64 = 8.0 * std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI;

fn x() -> LatticeVector {
    LatticeVector::new(1, 0, 0)
}

fn unit_table(val: f64) -> PotentialModel {
    PotentialModel::table([(x(), val), (-x(), val)]).unwrap()
}

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

#[test]
fn fermi_state_energy() {
    let ball = fermi_ball(1.0).unwrap();
    let free = e_fs(&ball, &PotentialModel::Zero);
    assert_eq!((free.kinetic, free.interaction), (6.0, 0.0));

    let fs = e_fs(&ball, &unit_table(TWO_PI_CUBED));
    assert_eq!(fs.kinetic, 6.0);
    assert!((fs.interaction + 2.0).abs() < 1e-14);

    let far = LatticeVector::new(3, 0, 0);
    let m = PotentialModel::table([(far, 1.0), (-far, 1.0)]).unwrap();
    assert_eq!(e_fs(&ball, &m).interaction, 0.0);
}

#[test]
fn single_point_lune_values() {
    let k_f = 0.9;
    let ball = fermi_ball(k_f).unwrap();
    let l = lune(&ball, x()).unwrap();
    let m = unit_table(TWO_PI_CUBED);

    let xval: f64 = (1.0 / 0.9) * (0.5 / 0.25);
    let f0 = bos_integrand(&l, &m, k_f, 0.0);
    assert!((f0 - (xval.ln_1p() - xval)).abs() < 1e-14);
    assert!((f0 + 1.0521).abs() < 1e-4);
    assert!(bos_integrand(&l, &m, k_f, 1e9).abs() < 1e-30);
    assert_eq!(bos_integrand(&l, &PotentialModel::Zero, k_f, 0.0), 0.0);

    let c: f64 = 1.0 / 0.9;
    let closed = (0.25 + c * 0.5).sqrt() - 0.5 - c / 2.0;
    let bos = e_corr_bos_k(&l, &m, k_f, &quad()).unwrap();
    assert!((bos - closed).abs() < 1e-10 * closed.abs());
    assert!((bos + 0.15803).abs() < 1e-5);

    let ex = e_corr_ex(&m, k_f, &KSumPolicy::default()).unwrap();
    assert!((ex.value - 0.9f64.powi(-2) / 2.0).abs() < 1e-14);
    assert!((ex.value - 0.61728).abs() < 1e-5);
}

#[test]
fn zero_potential_contributes_nothing() {
    let ball = fermi_ball(2.0).unwrap();
    let l = lune(&ball, x()).unwrap();
    assert_eq!(e_corr_bos_k(&l, &PotentialModel::Zero, 2.0, &quad()).unwrap(), 0.0);
    assert_eq!(e_corr_ex_k(&l, &PotentialModel::Zero, 2.0), 0.0);
    let r = upper_bound(&PotentialModel::Zero, 2.0, &KSumPolicy::default(), &quad(), false).unwrap();
    assert_eq!(r.e_fs_kinetic, ball.kinetic() as f64);
    assert_eq!((r.e_fs_interaction, r.e_corr_bos, r.e_corr_ex, r.error_functional), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn table_sum_is_twice_the_single_lune() {
    let k_f = 2.0;
    let m = unit_table(3.0);
    let l = lune(&fermi_ball(k_f).unwrap(), x()).unwrap();
    let one = e_corr_bos_k(&l, &m, k_f, &quad()).unwrap();
    let all = e_corr_bos(&m, k_f, &KSumPolicy::default(), &quad()).unwrap();
    assert!((all.value - 2.0 * one).abs() < 1e-14 * one.abs());
    assert_eq!(all.half_width, 0.0);
}

#[test]
fn unit_table_report_components() {
    let m = unit_table(TWO_PI_CUBED);
    let r = upper_bound(&m, 1.0, &KSumPolicy::default(), &quad(), true).unwrap();
    assert_eq!(r.n, 7);
    assert_eq!(r.e_fs_kinetic, 6.0);
    assert!((r.e_fs_interaction + 2.0).abs() < 1e-14);
    assert!((r.e_fs() - 4.0).abs() < 1e-14);
    let l = lune(&fermi_ball(1.0).unwrap(), x()).unwrap();
    let bos = e_corr_bos_k(&l, &m, 1.0, &quad()).unwrap();
    assert!((r.e_corr_bos - 2.0 * bos).abs() < 1e-14);
    assert!((r.error_functional - 2f64.sqrt() * TWO_PI_CUBED).abs() < 1e-9);
    let per_k = r.per_k.unwrap();
    assert_eq!(per_k.len(), 2);
}

#[test]
fn signs_on_coulomb() {
    let m = PotentialModel::coulomb(1.0).unwrap();
    for k_f in [1.0, 1.5, 2.0] {
        let r = upper_bound(&m, k_f, &KSumPolicy::default(), &quad(), false).unwrap();
        assert!(r.e_corr_bos < 0.0 && r.e_corr_ex > 0.0, "{r:?}");
        assert!(r.bos_tail >= 0.0 && r.ex_tail >= 0.0);
    }
}

#[test]
fn adaptive_sum_matches_extrapolated_exhaustive_sums() {
    // Exhaustive sums are plain truncations; their Yukawa remainder falls off
    // like R⁻³, so two radii extrapolate to the full sum.
    let m = PotentialModel::yukawa(1.0, 1.0).unwrap();
    let ad = e_corr_bos(&m, 2.0, &KSumPolicy::Adaptive { rel_tail_tol: 1e-6, r_max: 200.0 }, &quad()).unwrap();
    let e30 = e_corr_bos(&m, 2.0, &KSumPolicy::Exhaustive { radius: 30.0 }, &quad()).unwrap();
    let e60 = e_corr_bos(&m, 2.0, &KSumPolicy::Exhaustive { radius: 60.0 }, &quad()).unwrap();
    assert_eq!(e60.half_width, 0.0);
    let full = e60.value + (e60.value - e30.value) / 7.0;
    assert!((ad.value - full).abs() <= ad.half_width, "{ad:?} vs {full:e}");
    assert!(e_corr_bos(&m, 2.0, &KSumPolicy::Exhaustive { radius: 3.0 }, &quad()).is_err());
}

#[test]
fn quadratic_expansion_examples() {
    let single = lune(&fermi_ball(0.9).unwrap(), x()).unwrap();
    assert!(quadratic_expansion_check(&single).unwrap().pass);
    for (k_f, k) in [(1.0, x()), (2.0, LatticeVector::new(1, 1, 0))] {
        let r = quadratic_expansion_check(&lune(&fermi_ball(k_f).unwrap(), k).unwrap()).unwrap();
        assert!(r.pass && r.max_violation <= 1e-8, "{r:?}");
    }
}

#[test]
fn scaling_fit() {
    let pts: Vec<(f64, f64)> = [3.0f64, 4.0, 5.0, 7.0].iter().map(|&k| (k, -k * k.ln() + 0.5 * k)).collect();
    let f = fit_scaling_points(&pts).unwrap();
    assert!((f.a + 1.0).abs() < 1e-10 && (f.b - 0.5).abs() < 1e-10);
    assert!(f.residual < 1e-10);

    let f = fit_scaling_points(&[(3.0, -1.0), (5.0, 2.0)]).unwrap();
    assert!(f.residual < 1e-12);

    assert!(matches!(fit_scaling_points(&[(3.0, -1.0), (3.0, -1.1)]), Err(Error::InvalidArgument(_))));
    assert!(fit_scaling(&[]).is_err());
}

#[test]
fn csv_rows() {
    let m = unit_table(TWO_PI_CUBED);
    let r = upper_bound(&m, 1.0, &KSumPolicy::default(), &quad(), false).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, std::slice::from_ref(&r)).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), CSV_HEADER.split(',').count());
    assert_eq!(row[1], "7");
    assert_eq!(row[2].parse::<f64>().unwrap(), 6.0);
    assert_eq!(row[4].parse::<f64>().unwrap(), r.e_corr_bos);
    let json = r.to_json_value();
    assert_eq!(json["N"], 7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn per_k_bos_equals_trace_route(k_f in 0.9f64..2.6, idx in 0usize..10_000, g in 0.1f64..3.0) {
        let ks = k_vectors_within(2.0 * k_f);
        let k = ks[idx % ks.len()];
        let m = PotentialModel::coulomb(g).unwrap();
        let l = lune(&fermi_ball(k_f).unwrap(), k).unwrap();
        let bos = e_corr_bos_k(&l, &m, k_f, &quad()).unwrap();
        let tc = OneBody::for_lune(&l, &m, k_f).unwrap().trace_correction(&quad()).unwrap();
        prop_assert!(bos <= 0.0);
        prop_assert!((bos - tc.route1).abs() <= 1e-8 * tc.route1.abs());
    }

    #[test]
    fn exchange_terms_are_positive(k_f in 0.9f64..2.6, idx in 0usize..10_000) {
        let ks = k_vectors_within(3.0 * k_f);
        let k = ks[idx % ks.len()];
        let m = PotentialModel::coulomb(1.0).unwrap();
        let l = lune(&fermi_ball(k_f).unwrap(), k).unwrap();
        prop_assert!(e_corr_ex_k(&l, &m, k_f) >= 0.0);
        let (a, b) = (e_corr_ex_k(&l, &m, k_f), e_corr_ex_k(&l.mirror(), &m, k_f));
        prop_assert!((a - b).abs() <= 1e-13 * a);
    }
}
