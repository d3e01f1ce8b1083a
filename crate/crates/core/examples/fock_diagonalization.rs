//! The conjugated Hamiltonian e^{𝒦} H_eff e^{−𝒦} against its expansion in
//! the kernel, on a three-mode set with a strong two-point potential.

use fermicorr::fock::diag::THEOREM_NODES;
use fermicorr::fock::{DiagonalizationTerms, FockSystem, ModeSet};
use fermicorr::lattice::LatticeVector;
use fermicorr::potential::PotentialModel;
use nalgebra::DMatrix;

fn main() -> fermicorr::Result<()> {
    let x = LatticeVector::new(1, 0, 0);
    let strength = (2.0 * std::f64::consts::PI).powi(3);
    let model = PotentialModel::table([(x, strength), (-x, strength)])?;
    let modes = ModeSet::build(0.9, &[x, -x])?;
    let sys = FockSystem::new(modes, model)?;
    println!("{} modes, dim {}, Σ‖K‖²_HS = {:.4}", sys.modes.len(), sys.dim(), sys.kernel_hs2());

    let terms = DiagonalizationTerms::new(&sys);
    let identity = DMatrix::identity(sys.dim(), sys.dim());
    let r = terms.residual(&identity, THEOREM_NODES);
    println!("E_bos = {:.12e}", r.e_bos);
    println!("identity residual: absolute {:.2e}, relative {:.2e} over {} columns", r.absolute, r.relative, r.columns);
    Ok(())
}
