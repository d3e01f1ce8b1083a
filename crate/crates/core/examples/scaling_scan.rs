//! Correlation energy over a range of k_F and a fit to a·k_F log k_F + b·k_F.

use fermicorr::energy::{e_corr_bos, e_corr_ex, fit_scaling_points, KSumPolicy};
use fermicorr::numeric::quadrature::QuadratureSpec;
use fermicorr::potential::PotentialModel;

fn main() -> fermicorr::Result<()> {
    let model = PotentialModel::coulomb(1.0)?;
    let policy = KSumPolicy::default();
    let quad = QuadratureSpec::default();
    let mut points = Vec::new();
    println!("{:>4} {:>16} {:>16} {:>14}", "k_F", "e_corr_bos", "e_corr_ex", "bos/(kF ln kF)");
    for k_f in [3.0, 4.0, 5.0, 6.0] {
        let bos = e_corr_bos(&model, k_f, &policy, &quad)?.value;
        let ex = e_corr_ex(&model, k_f, &policy)?.value;
        println!("{k_f:>4} {bos:>16.8e} {ex:>16.8e} {:>14.6e}", bos / (k_f * k_f.ln()));
        points.push((k_f, bos));
    }
    let fit = fit_scaling_points(&points)?;
    println!("a = {:.6e}  b = {:.6e}  residual = {:.2e}", fit.a, fit.b, fit.residual);
    Ok(())
}
