//! The trace correction tr(e^{−K}he^{−K} − h − P) by its two routes:
//! the spectrum of a rank-one update and a one-dimensional integral.

use fermicorr::lattice::{fermi_ball, lune, LatticeVector};
use fermicorr::numeric::quadrature::QuadratureSpec;
use fermicorr::onebody::{one_dim_perturb_sqrt, trace_correction, OneBody};
use fermicorr::potential::PotentialModel;
use nalgebra::{DMatrix, DVector};

fn main() -> fermicorr::Result<()> {
    // Scalar case: h = 1, v = 1 gives √3 − 2.
    let tc = trace_correction(&DMatrix::from_element(1, 1, 1.0), &DVector::from_element(1, 1.0), &QuadratureSpec::default())?;
    println!("scalar: route1 = {:.15}  route2 = {:.15}  √3−2 = {:.15}", tc.route1, tc.route2, 3f64.sqrt() - 2.0);

    let model = PotentialModel::coulomb(1.0)?;
    for k_f in [1.0, 2.0, 3.0] {
        let ball = fermi_ball(k_f)?;
        let l = lune(&ball, LatticeVector::new(1, 1, 0))?;
        let ob = OneBody::for_lune(&l, &model, k_f)?;
        let tc = ob.trace_correction(&QuadratureSpec::default())?;
        println!("k_F = {k_f}: route1 = {:.12e}  route2 = {:.12e}  rel diff = {:.1e}", tc.route1, tc.route2, tc.relative_difference);
    }

    // The square root of a rank-one perturbation, checked against a dense root.
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 5.0]));
    let w = DVector::from_vec(vec![0.3, 0.5, 0.2]);
    let s = one_dim_perturb_sqrt(&a, &w, 0.7)?;
    let sq = &s.matrix * &s.matrix;
    let target = &a + (&w * w.transpose()) * 0.7;
    println!("(A + gP_w)^(1/2) squared error = {:.1e}, trace = {:.12}", (sq - target).norm(), s.trace);
    Ok(())
}
