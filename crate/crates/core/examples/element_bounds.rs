//! Elementwise bounds on K, A(t), B(t) and ∫B for every lune at a given k_F.

use fermicorr::lattice::{fermi_ball, k_vectors_within, lune};
use fermicorr::onebody::{check_element_bounds, OneBody};
use fermicorr::potential::PotentialModel;
use fermicorr::verify::T_GRID;

fn main() -> fermicorr::Result<()> {
    let k_f = 2.0;
    let model = PotentialModel::coulomb(1.0)?;
    let ball = fermi_ball(k_f)?;
    let mut worst: Vec<(String, f64)> = Vec::new();
    let ks = k_vectors_within(2.0 * k_f);
    for k in &ks {
        let l = lune(&ball, *k)?;
        let ob = OneBody::for_lune(&l, &model, k_f)?;
        for r in check_element_bounds(&ob.h, &ob.v, &ob.kernel, &T_GRID)? {
            match worst.iter_mut().find(|(n, _)| *n == r.name) {
                Some(w) => w.1 = w.1.max(r.max_violation),
                None => worst.push((r.name, r.max_violation)),
            }
        }
    }
    println!("{} lunes at k_F = {k_f}", ks.len());
    for (name, v) in worst {
        println!("{:>10.2e}  {name}", v);
    }
    Ok(())
}
