use std::collections::BTreeSet;

use fermicorr::lattice::{
    fermi_ball, k_vectors_within, lambda, lune, lune_power_sum, lune_size, read_lunes_csv, write_lunes_csv, LatticeVector,
    LuneCache,
};
use fermicorr::Error;
use proptest::prelude::*;

fn v(x: i64, y: i64, z: i64) -> LatticeVector {
    LatticeVector::new(x, y, z)
}

#[test]
fn ball_sizes() {
    assert_eq!(fermi_ball(1.0).unwrap().n(), 7);
    assert_eq!(fermi_ball(0.9).unwrap().n(), 1);
    assert_eq!(fermi_ball(2.0).unwrap().n(), 33);
    assert_eq!(fermi_ball(1.0).unwrap().kinetic(), 6);
}

#[test]
fn ball_rejects_bad_radius() {
    for k_f in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(matches!(fermi_ball(k_f), Err(Error::InvalidArgument(_))), "k_F = {k_f}");
    }
}

#[test]
fn unit_lune_points() {
    let ball = fermi_ball(1.0).unwrap();
    let l = lune(&ball, v(1, 0, 0)).unwrap();
    let got: BTreeSet<_> = l.points.iter().map(|p| p.as_array()).collect();
    let want: BTreeSet<_> = [[2, 0, 0], [1, 1, 0], [1, -1, 0], [1, 0, 1], [1, 0, -1]].into_iter().collect();
    assert_eq!(got, want);
}

#[test]
fn far_lune_has_n_points() {
    let ball = fermi_ball(1.0).unwrap();
    assert_eq!(lune(&ball, v(3, 0, 0)).unwrap().len(), 7);
    assert!(matches!(lune(&ball, v(0, 0, 0)), Err(Error::InvalidArgument(_))));
}

#[test]
fn lunes_beyond_twice_k_f_have_n_points() {
    for k_f in [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0] {
        let ball = fermi_ball(k_f).unwrap();
        for k in k_vectors_within(2.0 * k_f + 2.0) {
            if k.norm() > 2.0 * k_f {
                assert_eq!(lune_size(&ball, k), ball.n(), "k_F = {k_f}, k = {k}");
            }
        }
    }
}

#[test]
fn lambda_values() {
    assert_eq!(lambda(v(1, 0, 0), v(2, 0, 0)), 1.5);
    assert_eq!(lambda(v(1, 0, 0), v(1, 0, 0)), 0.5);
    assert_eq!(lambda(v(1, 1, 0), v(1, 1, 0)), 1.0);
}

#[test]
fn power_sums() {
    let ball = fermi_ball(1.0).unwrap();
    let l = lune(&ball, v(1, 0, 0)).unwrap();
    assert_eq!(lune_power_sum(&l, 0.0).value, 5.0);
    assert!((lune_power_sum(&l, -1.0).value - (1.0 / 1.5 + 8.0)).abs() < 1e-12);

    let single = lune(&fermi_ball(0.9).unwrap(), v(1, 0, 0)).unwrap();
    assert_eq!(single.len(), 1);
    assert_eq!(lune_power_sum(&single, -1.0).value, 2.0);

    assert!(lune_power_sum(&l, -0.5).beta_in_range);
    assert!(!lune_power_sum(&l, 1.0).beta_in_range);
}

#[test]
fn lune_csv_round_trip() {
    let ball = fermi_ball(2.0).unwrap();
    let lunes: Vec<_> = [v(1, 0, 0), v(2, 1, 0), v(-1, 1, 1)].iter().map(|k| lune(&ball, *k).unwrap()).collect();
    let mut buf = Vec::new();
    write_lunes_csv(&mut buf, &lunes).unwrap();
    let back = read_lunes_csv(buf.as_slice(), 2.0).unwrap();
    assert_eq!(back, lunes);
}

#[test]
fn cache_persists_and_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let ball = fermi_ball(2.0).unwrap();
    let ks = k_vectors_within(4.0);
    let cache = LuneCache::with_dir(dir.path());
    for k in &ks {
        cache.get(&ball, *k).unwrap();
    }
    let path = cache.persist(2.0).unwrap().expect("a directory was given");
    assert!(path.exists());

    let fresh = LuneCache::with_dir(dir.path());
    let l = fresh.get(&ball, v(2, 1, 0)).unwrap();
    assert_eq!(*l, lune(&ball, v(2, 1, 0)).unwrap());
    assert_eq!(fresh.len(), ks.len());
}

#[test]
fn memory_cache_does_not_persist() {
    let cache = LuneCache::new();
    let ball = fermi_ball(1.0).unwrap();
    cache.get(&ball, v(1, 0, 0)).unwrap();
    assert_eq!(cache.len(), 1);
    assert_eq!(cache.persist(1.0).unwrap(), None);
}

#[test]
fn k_vectors_exclude_origin_and_respect_radius() {
    let ks = k_vectors_within(2.0);
    assert!(ks.iter().all(|k| !k.is_zero() && k.norm2() <= 4));
    assert_eq!(ks.len(), 32);
}

fn small_k() -> impl Strategy<Value = LatticeVector> {
    (-6i64..=6, -6i64..=6, -6i64..=6).prop_filter("k ≠ 0", |k| *k != (0, 0, 0)).prop_map(|(x, y, z)| v(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lune_is_outside_ball_with_positive_lambda(k_f in 0.5f64..3.5, k in small_k()) {
        let ball = fermi_ball(k_f).unwrap();
        let l = lune(&ball, k).unwrap();
        for (p, lam) in l.points.iter().zip(&l.lambdas) {
            prop_assert!(!ball.contains(p));
            prop_assert!(ball.contains(&(*p - k)));
            prop_assert!(*lam > 0.0);
            prop_assert_eq!(*lam, lambda(k, *p));
        }
        prop_assert_eq!(l.len(), lune_size(&ball, k));
    }

    #[test]
    fn mirror_lune_has_same_spectrum(k_f in 0.5f64..3.5, k in small_k()) {
        let ball = fermi_ball(k_f).unwrap();
        let l = lune(&ball, k).unwrap();
        let m = lune(&ball, -k).unwrap();
        prop_assert_eq!(l.spectrum(), m.spectrum());
        prop_assert_eq!(l.mirror(), m);
    }

    #[test]
    fn far_lunes_have_n_points(k_f in 0.5f64..3.0, k in small_k()) {
        let ball = fermi_ball(k_f).unwrap();
        prop_assume!(k.norm() > 2.0 * k_f);
        prop_assert_eq!(lune(&ball, k).unwrap().len(), ball.n());
    }

    #[test]
    fn ball_is_inversion_symmetric(k_f in 0.1f64..4.0) {
        let ball = fermi_ball(k_f).unwrap();
        for p in &ball.points {
            prop_assert!(ball.contains(&-*p));
            prop_assert!(p.norm() <= k_f);
        }
    }
}
