use fermicorr::lattice::LatticeVector;
use fermicorr::potential::{PotentialModel, TablePotential, Weight};
use fermicorr::Error;
use proptest::prelude::*;

fn v(x: i64, y: i64, z: i64) -> LatticeVector {
    LatticeVector::new(x, y, z)
}

fn unit_pair(val: f64) -> PotentialModel {
    PotentialModel::table([(v(1, 0, 0), val), (v(-1, 0, 0), val)]).unwrap()
}

#[test]
fn v_hat_values() {
    assert_eq!(PotentialModel::coulomb(1.0).unwrap().v_hat(v(2, 0, 0)), 0.25);
    assert_eq!(PotentialModel::yukawa(1.0, 1.0).unwrap().v_hat(v(1, 0, 0)), 0.5);
    let t = PotentialModel::table([(v(1, 0, 0), 2.0)]).unwrap();
    assert_eq!(t.v_hat(v(-1, 0, 0)), 2.0);
    assert_eq!(t.v_hat(v(0, 1, 0)), 0.0);
    assert_eq!(PotentialModel::coulomb(1.0).unwrap().v_hat(v(0, 0, 0)), 0.0);
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(matches!(PotentialModel::coulomb(0.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(PotentialModel::coulomb(f64::NAN), Err(Error::InvalidArgument(_))));
    assert!(matches!(PotentialModel::yukawa(1.0, -1.0), Err(Error::InvalidArgument(_))));
    assert!(PotentialModel::table([(v(1, 0, 0), -1.0)]).is_err());
}

#[test]
fn zero_mode_entry_is_dropped_with_warning() {
    let m = PotentialModel::table([(v(0, 0, 0), 1.0), (v(1, 0, 0), 1.0)]).unwrap();
    assert_eq!(m.v_hat(v(0, 0, 0)), 0.0);
    assert_eq!(m.warnings().len(), 1);
}

#[test]
fn parse_specs() {
    assert_eq!(PotentialModel::parse("coulomb:g=2").unwrap(), PotentialModel::Coulomb { g: 2.0 });
    assert_eq!(PotentialModel::parse("yukawa:mu=0.5,g=1").unwrap(), PotentialModel::Yukawa { g: 1.0, mu: 0.5 });
    assert_eq!(PotentialModel::parse("none").unwrap(), PotentialModel::Zero);
    for bad in ["coulomb", "coulomb:g=x", "coulomb:g=1,g=2", "coulomb:g=1,mu=2", "yukawa:g=1", "gauss:s=1", "table:"] {
        assert!(matches!(PotentialModel::parse(bad), Err(Error::Parse(_))), "{bad}");
    }
}

#[test]
fn table_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("unit-mode.json");
    std::fs::write(&path, r#"{"entries": [{"k":[1,0,0],"v":2.0}, {"k":[0,2,0],"v":0.5}]}"#).unwrap();
    let m = PotentialModel::parse(&format!("table:{}", path.display())).unwrap();
    assert_eq!(m.v_hat(v(-1, 0, 0)), 2.0);
    assert_eq!(m.v_hat(v(0, -2, 0)), 0.5);
    assert_eq!(m.spec_string(), format!("table:{}", path.display()));

    let PotentialModel::Table(t) = &m else { panic!("expected a table") };
    let again = TablePotential::from_json_str(&t.to_json()).unwrap();
    assert_eq!(again.max_norm(), 2.0);
    assert!(matches!(PotentialModel::parse("table:/nonexistent/file.json"), Err(Error::Io(_))));
}

#[test]
fn table_sums_are_exact() {
    let m = unit_pair(1.0);
    assert_eq!(m.sum_v2(Weight::One).unwrap().value, 2.0);
    let e = m.error_term(2.0).unwrap();
    assert!((e.value - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(e.half_width, 0.0);
    assert_eq!(PotentialModel::Zero.error_term(2.0).unwrap().value, 0.0);
}

#[test]
fn min_weight_sum_is_error_term_squared() {
    for m in [PotentialModel::coulomb(1.0).unwrap(), PotentialModel::yukawa(0.7, 0.3).unwrap(), unit_pair(3.0)] {
        for k_f in [1.0, 2.5, 4.0] {
            let s = m.sum_v2(Weight::MinNormKf(k_f)).unwrap().value;
            let e = m.error_term(k_f).unwrap().value;
            assert!((s - e * e).abs() <= 1e-12 * s, "{} at {k_f}", m.spec_string());
        }
    }
}

#[test]
fn coulomb_error_term_matches_brute_force() {
    let k_f = 2.0f64;
    let m = PotentialModel::coulomb(1.0).unwrap();
    let e = m.error_term(k_f).unwrap();
    let mut direct = 0.0;
    for x in -64i64..=64 {
        for y in -64i64..=64 {
            for z in -64i64..=64 {
                let n2 = x * x + y * y + z * z;
                if n2 == 0 || n2 > 64 * 64 {
                    continue;
                }
                let r = (n2 as f64).sqrt();
                direct += r.min(k_f) / (n2 * n2) as f64;
            }
        }
    }
    // Continuum estimate of Σ_{|k|>64} k_F/|k|⁴.
    let tail = 4.0 * std::f64::consts::PI * k_f / 64.0;
    let s = e.value * e.value;
    assert!((s / (direct + tail) - 1.0).abs() < 1e-3, "{s} vs {direct} + {tail}");
    assert!(e.half_width / e.value < 1e-3);
}

#[test]
fn norm_weighted_sum_diverges_for_coulomb() {
    let m = PotentialModel::coulomb(1.0).unwrap();
    assert!(matches!(m.sum_v2(Weight::Norm), Err(Error::Numerical(_))));
    let r8 = m.sum_v2_within(Weight::Norm, 8.0) / 8f64.ln();
    let r64 = m.sum_v2_within(Weight::Norm, 64.0) / 64f64.ln();
    assert!(r8 > 0.0 && (r64 / r8 - 1.0).abs() < 0.5);
}

proptest! {
    #[test]
    fn v_hat_is_even(x in -50i64..50, y in -50i64..50, z in -50i64..50, g in 0.1f64..5.0, mu in 0.1f64..3.0) {
        let k = v(x, y, z);
        for m in [PotentialModel::coulomb(g).unwrap(), PotentialModel::yukawa(g, mu).unwrap()] {
            prop_assert_eq!(m.v_hat(k), m.v_hat(-k));
        }
    }

    #[test]
    fn error_term_is_monotone(a in 0.5f64..6.0, d in 0.0f64..3.0) {
        let m = PotentialModel::yukawa(1.0, 0.5).unwrap();
        prop_assert!(m.error_term(a).unwrap().value <= m.error_term(a + d).unwrap().value * (1.0 + 1e-12));
    }

    #[test]
    fn spec_string_round_trips(g in 0.01f64..100.0, mu in 0.01f64..10.0) {
        for m in [PotentialModel::coulomb(g).unwrap(), PotentialModel::yukawa(g, mu).unwrap()] {
            prop_assert_eq!(PotentialModel::parse(&m.spec_string()).unwrap(), m);
        }
    }
}
