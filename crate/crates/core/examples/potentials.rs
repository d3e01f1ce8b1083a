//! Interaction models: parsing specs, evaluating V̂_k, and the error functional.

use fermicorr::lattice::LatticeVector;
use fermicorr::potential::{PotentialModel, Weight};

fn main() -> fermicorr::Result<()> {
    let k = LatticeVector::new(1, 1, 0);
    for spec in ["coulomb:g=1.0", "yukawa:g=1.0,mu=0.5", "none"] {
        let m = PotentialModel::parse(spec)?;
        println!("{:<24} V̂({k}) = {:.6e}  isotropic = {}", m.spec_string(), m.v_hat(k), m.is_isotropic());
    }

    // A compactly supported table; missing mirror entries are filled in.
    let table = PotentialModel::table([(LatticeVector::new(1, 0, 0), 2.0), (LatticeVector::new(0, 1, 0), 1.0)])?;
    println!("table: V̂(-1,0,0) = {}  support radius = {:?}", table.v_hat(LatticeVector::new(-1, 0, 0)), table.support_radius());

    let yukawa = PotentialModel::yukawa(1.0, 0.5)?;
    let s = yukawa.sum_v2(Weight::One)?;
    println!("yukawa Σ V̂² = {:.8e} ± {:.1e}", s.value, s.half_width);
    for k_f in [2.0, 4.0, 8.0] {
        let e = yukawa.error_term(k_f)?;
        println!("  error functional at k_F = {k_f}: {:.6e}", e.value);
    }

    // With the |k| weight the full sum diverges for both; truncated sums are finite.
    assert!(yukawa.sum_v2(Weight::Norm).is_err());
    let coulomb = PotentialModel::coulomb(1.0)?;
    assert!(coulomb.sum_v2(Weight::Norm).is_err());
    println!("coulomb Σ_(|k|≤4) V̂²|k| = {:.6e}", coulomb.sum_v2_within(Weight::Norm, 4.0));
    Ok(())
}
