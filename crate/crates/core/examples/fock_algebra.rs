//! Exact pair operators on a small mode set: the commutator of b and b*,
//! and the sector it lives in.
//!
//! ```text
//! cargo run --release --example fock_algebra
//! ```

use fermicorr::fock::ops::{apply_vec, commutator, max_abs};
use fermicorr::fock::{FockSystem, ModeSet};
use fermicorr::lattice::LatticeVector;
use fermicorr::potential::PotentialModel;
use nalgebra_sparse::CsrMatrix;

fn main() -> fermicorr::Result<()> {
    let x = LatticeVector::new(1, 0, 0);
    let modes = ModeSet::build(1.0, &[x, -x])?;
    let ks: Vec<String> = modes.k_list.iter().map(|k| k.to_string()).collect();
    println!("{} modes, {} holes, transfers {}", modes.len(), modes.n_holes(), ks.join(" "));
    let sys = FockSystem::new(modes, PotentialModel::coulomb(1.0)?)?;
    println!("sector dimension {}", sys.dim());

    // [b_{k,p}, b*_{k,q}] = δ_{pq} − (number corrections); on the Fermi state
    // it is exactly δ_{pq}.
    let ki = 0;
    let n = sys.lune(ki).len();
    let psi = sys.fermi_state();
    let mut worst = 0f64;
    for a in 0..n {
        for b in 0..n {
            let c: CsrMatrix<f64> = commutator(sys.b(ki, a), sys.b_dag(ki, b));
            let v = apply_vec(&c, &psi);
            let expect = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((psi.dot(&v) - expect).abs());
        }
    }
    println!("max |⟨ψ_FS, [b_p, b*_q] ψ_FS⟩ − δ_pq| = {worst:.1e}");

    let n_e = sys.n_e();
    let h_kin = sys.h_kin();
    println!("‖[H_kin, 𝒩_E]‖_max = {:.1e}", max_abs(&commutator(&h_kin, &n_e)));
    println!("‖𝒦 + 𝒦*‖_max = {:.1e}", max_abs(&(sys.kcal() + sys.kcal().transpose())));
    Ok(())
}
