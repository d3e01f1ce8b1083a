//! Upper bound on the ground-state energy at one k_F, with per-k contributions.

use fermicorr::energy::{upper_bound, write_csv, KSumPolicy};
use fermicorr::numeric::quadrature::QuadratureSpec;
use fermicorr::potential::PotentialModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k_f: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3.0);
    let model = PotentialModel::coulomb(1.0)?;
    let policy = KSumPolicy::Adaptive { rel_tail_tol: 1e-4, r_max: 400.0 };
    let r = upper_bound(&model, k_f, &policy, &QuadratureSpec::default(), true)?;

    println!("N = {}  E_FS = {:.10e}", r.n, r.e_fs());
    println!("E_corr,bos = {:.10e} (tail ≤ {:.1e})", r.e_corr_bos, r.bos_tail);
    println!("E_corr,ex  = {:.10e} (tail ≤ {:.1e})", r.e_corr_ex, r.ex_tail);
    println!("upper bound = {:.12e}", r.upper_bound_value());
    println!("{} k evaluated out to |k| = {:.1}", r.diagnostics.evaluated, r.diagnostics.radius);

    let mut per_k = r.per_k.clone().unwrap_or_default();
    per_k.sort_by(|a, b| a.bos_k.total_cmp(&b.bos_k));
    for p in per_k.iter().take(3) {
        println!("  k = {:?}: bos = {:.4e}, ex = {:.4e}", p.k, p.bos_k, p.ex_k);
    }

    write_csv(&mut std::io::stdout(), std::slice::from_ref(&r))?;
    Ok(())
}
