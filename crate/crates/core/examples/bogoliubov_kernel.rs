//! The one-body kernel K on a lune and the matrices A(t), B(t) it generates.
//!
//! At t = 1 the off-diagonal part B(1) vanishes: the transformation
//! diagonalizes the quadratic form.

use fermicorr::lattice::{fermi_ball, lune, LatticeVector};
use fermicorr::numeric::linalg::sym_norm;
use fermicorr::onebody::OneBody;
use fermicorr::potential::PotentialModel;

fn main() -> fermicorr::Result<()> {
    let k_f = 3.0;
    let model = PotentialModel::coulomb(1.0)?;
    let ball = fermi_ball(k_f)?;
    let l = lune(&ball, LatticeVector::new(1, 0, 0))?;
    let ob = OneBody::for_lune(&l, &model, k_f)?;

    println!("lune dim = {}, ‖K‖_HS = {:.6e}", ob.dim(), ob.kernel.hs_norm());
    for t in [0.0, 0.5, 1.0] {
        let (a, b) = ob.a_b(t);
        println!("t = {t:.1}  ‖A(t)‖ = {:.6e}  ‖B(t)‖ = {:.3e}", sym_norm(&a), sym_norm(&b));
    }
    let b1 = ob.a_b(1.0).1;
    println!("‖B(1)‖/‖h‖ = {:.2e}", sym_norm(&b1) / sym_norm(&ob.h));

    let shift = ob.dressed_h_minus_h();
    println!("tr(e^-K h e^-K − h) = {:.10e}", shift.trace());
    println!("⟨v, h⁻¹ v⟩ = {:.10e}", ob.v_hinv_v());
    Ok(())
}
