//! Fermi ball sizes, lunes and the λ spectrum on a lune.
//!
//! ```text
//! cargo run --example fermi_ball_and_lunes -- 2.0
//! ```

use fermicorr::lattice::{fermi_ball, lune, lune_power_sum, LatticeVector};

fn main() -> fermicorr::Result<()> {
    let k_f: f64 = std::env::args().nth(1).map(|s| s.parse().expect("k_F must be a number")).unwrap_or(2.0);
    let ball = fermi_ball(k_f)?;
    println!("k_F = {k_f}: N = {}, kinetic energy = {}", ball.n(), ball.kinetic());

    for k in [[1, 0, 0], [1, 1, 0], [2, 1, 0], [5, 0, 0]] {
        let k = LatticeVector::new(k[0], k[1], k[2]);
        let l = lune(&ball, k)?;
        let inv = lune_power_sum(&l, -1.0);
        println!("k = {k}  |L_k| = {:4}  λ_min = {:.3}  Σλ⁻¹ = {:.6}", l.len(), l.lambda_min(), inv.value);
        for (lam, mult) in l.spectrum().iter().take(4) {
            println!("    λ = {lam:<6} × {mult}");
        }
    }
    Ok(())
}
