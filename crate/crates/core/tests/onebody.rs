use fermicorr::lattice::{fermi_ball, lune, LatticeVector};
use fermicorr::numeric::linalg::{anticommutator, sym_norm, SymEigen};
use fermicorr::numeric::quadrature::QuadratureSpec;
use fermicorr::onebody::{
    build_h, build_k, build_v, check_element_bounds, flip_operator, one_dim_perturb_sqrt, trace_correction, Kernel,
    OneBody, SqrtRoute,
};
use fermicorr::potential::PotentialModel;
use fermicorr::verify::T_GRID;
use fermicorr::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const TWO_PI_CUBED: f64 = 8.0 * std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI;

fn scalar(x: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, x)
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

#[test]
fn h_on_unit_lune() {
    let l = lune(&fermi_ball(1.0).unwrap(), LatticeVector::new(1, 0, 0)).unwrap();
    let h = build_h(&l);
    assert_eq!(h.dim(), 5);
    let mut d: Vec<f64> = h.entries.diagonal().iter().copied().collect();
    d.sort_by(f64::total_cmp);
    assert_eq!(d, vec![0.5, 0.5, 0.5, 0.5, 1.5]);
    assert_eq!(h.entries.clone() - DMatrix::from_diagonal(&h.entries.diagonal()), DMatrix::zeros(5, 5));
}

#[test]
fn v_entries() {
    let l = lune(&fermi_ball(1.0).unwrap(), LatticeVector::new(1, 0, 0)).unwrap();
    assert_eq!(build_v(&l, &PotentialModel::Zero, 1.0).coefficients, DVector::zeros(5));
    let x = LatticeVector::new(1, 0, 0);
    let m = PotentialModel::table([(x, 2.0 * TWO_PI_CUBED)]).unwrap();
    let v = build_v(&l, &m, 1.0).coefficients;
    assert!(v.iter().all(|e| (e - 1.0).abs() < 1e-15), "{v}");
}

#[test]
fn scalar_kernel_and_functions() {
    let k = Kernel::build(&scalar(1.0), &DVector::from_element(1, 1.0)).unwrap();
    assert!((k.matrix[(0, 0)] + 0.25 * 3f64.ln()).abs() < 1e-14);
    let f = k.functions(0.0);
    assert_eq!(f.exp_pos, scalar(1.0));
    assert_eq!(f.exp_neg, scalar(1.0));
    assert_eq!(f.sinh_neg, scalar(0.0));
    assert_eq!(f.cosh_neg, scalar(1.0));

    let zero = Kernel::build(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0])), &DVector::zeros(2)).unwrap();
    assert_eq!(zero.matrix, DMatrix::zeros(2, 2));
}

#[test]
fn kernel_needs_positive_h() {
    let h = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
    assert!(matches!(Kernel::build(&h, &DVector::from_element(2, 0.1)), Err(Error::InvalidArgument(_))));
}

#[test]
fn a_b_at_endpoints() {
    let h = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0, 2.5]));
    let ob = OneBody::new(h.clone(), DVector::from_vec(vec![0.4, 0.2, 0.7])).unwrap();
    let (a0, b0) = ob.a_b(0.0);
    assert!(rel(&a0, &ob.p) < 1e-13);
    assert!(rel(&b0, &ob.p) < 1e-13);
    let (a1, b1) = ob.a_b(1.0);
    assert!(sym_norm(&b1) <= 1e-10 * sym_norm(&h));
    assert!(rel(&a1, &ob.dressed_h_minus_h()) < 1e-12);
}

#[test]
fn sqrt_perturbation_examples() {
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0, 9.0]));
    let w = DVector::from_vec(vec![0.3, -0.5, 0.1]);
    let s = one_dim_perturb_sqrt(&a, &w, 0.0).unwrap();
    assert!(rel(&s.matrix, &DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]))) < 1e-14);

    let s = one_dim_perturb_sqrt(&scalar(1.0), &DVector::from_element(1, 1.0), 2.0).unwrap();
    assert!((s.matrix[(0, 0)] - 3f64.sqrt()).abs() < 1e-12);
    assert!((s.trace - 3f64.sqrt()).abs() < 1e-10);

    assert!(matches!(
        one_dim_perturb_sqrt(&scalar(1.0), &DVector::from_element(1, 1.0), -2.0),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn scalar_trace_correction() {
    let tc = trace_correction(&scalar(1.0), &DVector::from_element(1, 1.0), &QuadratureSpec::default()).unwrap();
    let want = 3f64.sqrt() - 2.0;
    assert!((tc.route1 - want).abs() <= 1e-10);
    assert!((tc.route2 - want).abs() <= 1e-10);
    let zero = trace_correction(&scalar(2.0), &DVector::zeros(1), &QuadratureSpec::default()).unwrap();
    assert_eq!((zero.route1, zero.route2), (0.0, 0.0));
}

#[test]
fn scalar_bounds() {
    let h = scalar(1.0);
    let v = DVector::from_element(1, 1.0);
    let k = Kernel::build(&h, &v).unwrap();
    let neg_k = -k.matrix[(0, 0)];
    assert!((1.0 / 6.0..=0.5).contains(&neg_k));
    for r in check_element_bounds(&h, &v, &k, &T_GRID).unwrap() {
        assert!(r.pass, "{r:?}");
    }
    let v0 = DVector::zeros(1);
    let k0 = Kernel::build(&h, &v0).unwrap();
    assert!(check_element_bounds(&h, &v0, &k0, &T_GRID).unwrap().iter().all(|r| r.pass));
}

#[test]
fn bounds_reject_negative_overlaps() {
    let h = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
    let v = DVector::from_vec(vec![0.5, -0.5]);
    let k = Kernel::build(&h, &v).unwrap();
    assert!(matches!(check_element_bounds(&h, &v, &k, &T_GRID), Err(Error::InvalidArgument(_))));
}

#[test]
fn kernel_routes_agree_on_a_lune() {
    let l = lune(&fermi_ball(2.0).unwrap(), LatticeVector::new(1, 1, 0)).unwrap();
    let m = PotentialModel::coulomb(1.0).unwrap();
    let h = build_h(&l);
    let v = build_v(&l, &m, 2.0);
    let a = Kernel::build_with(&h.entries, &v.coefficients, SqrtRoute::Eigen).unwrap();
    let b = Kernel::build_with(&h.entries, &v.coefficients, SqrtRoute::RankOneIntegral).unwrap();
    assert!(rel(&a.matrix, &b.matrix) < 1e-9);
    assert_eq!(build_k(&h, &v).unwrap().entries.nrows(), l.len());
}

#[test]
fn kernel_on_mirror_lune_is_flipped() {
    let ball = fermi_ball(2.0).unwrap();
    let m = PotentialModel::coulomb(1.0).unwrap();
    let k = LatticeVector::new(2, 1, 0);
    let l = lune(&ball, k).unwrap();
    let ob = OneBody::for_lune(&l, &m, 2.0).unwrap();
    let mirror = OneBody::for_lune(&l.mirror(), &m, 2.0).unwrap();
    let d = rel(&flip_operator(&ob.kernel.matrix), &mirror.kernel.matrix);
    assert!(d < 1e-10, "{d:e}");
}

fn instance() -> impl Strategy<Value = (DMatrix<f64>, DVector<f64>)> {
    (2usize..=12).prop_flat_map(|n| {
        (prop::collection::vec(0.1f64..10.0, n), prop::collection::vec(0.0f64..1.0, n)).prop_map(|(l, v)| {
            (DMatrix::from_diagonal(&DVector::from_vec(l)), DVector::from_vec(v))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn diagonalization_condition((h, v) in instance()) {
        let ob = OneBody::new(h.clone(), v).unwrap();
        let b1 = ob.a_b(1.0).1;
        prop_assert!(sym_norm(&b1) <= 1e-10 * sym_norm(&h));
        let k = &ob.kernel.matrix;
        prop_assert!(rel(k, &k.transpose()) < 1e-14 || k.norm() == 0.0);
        let e = SymEigen::new(&(ob.kernel.exp(-2.0) - DMatrix::identity(h.nrows(), h.nrows())));
        prop_assert!(e.min() >= -1e-12);
    }

    #[test]
    fn trace_routes_agree((h, v) in instance()) {
        let tc = trace_correction(&h, &v, &QuadratureSpec::default()).unwrap();
        let direct = OneBody::new(h, v.clone()).unwrap().dressed_h_minus_h().trace() - v.norm_squared();
        prop_assert!((tc.route1 - tc.route2).abs() <= 1e-8 * tc.route1.abs().max(1e-300));
        prop_assert!((tc.route1 - direct).abs() <= 1e-8 * tc.route1.abs().max(1e-14));
    }

    #[test]
    fn element_bounds_hold((h, v) in instance()) {
        let k = Kernel::build(&h, &v).unwrap();
        for r in check_element_bounds(&h, &v, &k, &T_GRID).unwrap() {
            prop_assert!(r.pass, "{:?}", r);
        }
    }

    #[test]
    fn b_derivative_is_anticommutator((h, v) in instance(), t in 0.2f64..0.8) {
        let ob = OneBody::new(h, v).unwrap();
        let step = 1e-5;
        let db = (ob.a_b(t + step).1 - ob.a_b(t - step).1) / (2.0 * step);
        let (a, _) = ob.a_b(t);
        let want = anticommutator(&ob.kernel.matrix, &(a + &ob.h));
        prop_assert!(rel(&db, &want) < 1e-6 || want.norm() < 1e-12);
    }

    #[test]
    fn sqrt_trace_forms_agree((a, w) in instance(), g in 0.0f64..3.0) {
        let s = one_dim_perturb_sqrt(&a, &w, g).unwrap();
        prop_assert!((s.trace - s.matrix.trace()).abs() <= 1e-9 * s.trace.abs());
        let sq = &s.matrix * &s.matrix;
        let target = &a + (&w * w.transpose()) * g;
        prop_assert!(rel(&sq, &target) < 1e-10);
    }
}
