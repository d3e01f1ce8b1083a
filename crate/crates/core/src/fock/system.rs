//! Second-quantized operators on the `N = |B_F|` sector of a mode set.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::modes::ModeSet;
use super::ops::{combine, diagonal, identity, Csr};
use super::sector::{string_sum_operator, FockSector, Ladder};
use crate::error::{invalid, Result};
use crate::lattice::{LatticeVector, Lune};
use crate::numeric::linalg::max_abs;
use crate::onebody::{build_h, build_v, coupling, projector, Kernel, OneBody};
use crate::potential::PotentialModel;

/// One-body term: a multiple of the identity (`None`) or of `c*_i c_j`.
pub type OneBodyTerm = (f64, Option<(usize, usize)>);

/// Relative tolerance for `K_{−k} = I_k K_k I_k⁻¹`.
pub const KERNEL_SYMMETRY_TOL: f64 = 1e-13;

#[derive(Debug)]
pub struct FockSystem {
    pub modes: ModeSet,
    pub sector: FockSector,
    pub model: PotentialModel,
    /// Per `k`, the one-body data with the kernel actually used in `𝒦`.
    pub onebody: Vec<OneBody>,
    /// `V̂_k k_F⁻¹ / (2(2π)³)` per `k`.
    pub couplings: Vec<f64>,
    /// Per `k` and lune index: mode indices of `p` and `p − k`.
    pairs: Vec<Vec<(usize, usize)>>,
    /// Per `k` and lune index: lune index of `−p` in `L_{−k}`.
    mirror: Vec<Vec<usize>>,
    n_e_diag: Vec<f64>,
    hops: Vec<OnceLock<Csr>>,
    kcal: OnceLock<Csr>,
    kcal_tilde: OnceLock<Csr>,
    y_ops: OnceLock<Vec<Vec<Csr>>>,
}

impl FockSystem {
    /// Kernels from the interaction model.
    pub fn new(modes: ModeSet, model: PotentialModel) -> Result<Self> {
        let mut kernels: Vec<Option<DMatrix<f64>>> = vec![None; modes.k_list.len()];
        let mirror = mirror_maps(&modes)?;
        for ki in 0..modes.k_list.len() {
            let mk = modes.mirror_k(ki);
            if let Some(km) = &kernels[mk] {
                kernels[ki] = Some(permute(km, &mirror[mk]));
                continue;
            }
            let lune = &modes.lunes[ki];
            let k = Kernel::build(&build_h(lune).entries, &build_v(lune, &model, modes.k_f).coefficients)?;
            kernels[ki] = Some(k.matrix);
        }
        Self::with_kernels(modes, model, kernels.into_iter().map(|k| k.expect("every k visited")).collect())
    }

    /// Same operators with `K ≡ 0`.
    pub fn with_zero_kernel(modes: ModeSet, model: PotentialModel) -> Result<Self> {
        let kernels = modes.lunes.iter().map(|l| DMatrix::zeros(l.len(), l.len())).collect();
        Self::with_kernels(modes, model, kernels)
    }

    /// Arbitrary symmetric kernels; they must satisfy `K_{−k} = I_k K_k I_k⁻¹`.
    pub fn with_kernels(modes: ModeSet, model: PotentialModel, kernels: Vec<DMatrix<f64>>) -> Result<Self> {
        if kernels.len() != modes.k_list.len() {
            return Err(invalid("one kernel per listed momentum is required"));
        }
        let mirror = mirror_maps(&modes)?;
        for (ki, k) in kernels.iter().enumerate() {
            let n = modes.lunes[ki].len();
            if k.nrows() != n || k.ncols() != n {
                return Err(invalid(format!("kernel for {} has the wrong shape", modes.k_list[ki])));
            }
            let scale = 1f64.max(max_abs(k));
            if max_abs(&(k - k.transpose())) > KERNEL_SYMMETRY_TOL * scale {
                return Err(invalid(format!("kernel for {} is not symmetric", modes.k_list[ki])));
            }
            let mk = modes.mirror_k(ki);
            let flipped = permute(k, &mirror[ki]);
            if max_abs(&(&flipped - &kernels[mk])) > KERNEL_SYMMETRY_TOL * scale {
                return Err(invalid(format!(
                    "kernels for {} and {} violate the inversion symmetry",
                    modes.k_list[ki], modes.k_list[mk]
                )));
            }
        }
        let sector = FockSector::new(modes.len(), modes.n_holes())?;
        let mut pairs = Vec::new();
        for (ki, lune) in modes.lunes.iter().enumerate() {
            let k = modes.k_list[ki];
            let mut row = Vec::with_capacity(lune.len());
            for p in &lune.points {
                row.push((modes.index(p)?, modes.index(&(*p - k))?));
            }
            pairs.push(row);
        }
        let onebody = modes
            .lunes
            .iter()
            .zip(kernels)
            .map(|(lune, k)| {
                let h = build_h(lune).entries;
                let v = build_v(lune, &model, modes.k_f).coefficients;
                let p = projector(&v);
                OneBody { h, v, p, kernel: Kernel::from_matrix(k) }
            })
            .collect();
        let couplings = modes.k_list.iter().map(|k| coupling(&model, *k, modes.k_f)).collect();
        let particles: u64 = modes.particles().fold(0, |m, i| m | (1u64 << i));
        let n_e_diag = sector.states().iter().map(|s| (s & particles).count_ones() as f64).collect();
        let m = modes.len();
        Ok(Self {
            modes,
            sector,
            model,
            onebody,
            couplings,
            pairs,
            mirror,
            n_e_diag,
            hops: (0..m * m).map(|_| OnceLock::new()).collect(),
            kcal: OnceLock::new(),
            kcal_tilde: OnceLock::new(),
            y_ops: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.sector.dim()
    }

    pub fn k_count(&self) -> usize {
        self.modes.k_list.len()
    }

    pub fn k(&self, ki: usize) -> LatticeVector {
        self.modes.k_list[ki]
    }

    pub fn lune(&self, ki: usize) -> &Lune {
        &self.modes.lunes[ki]
    }

    pub fn k_index(&self, k: &LatticeVector) -> Result<usize> {
        self.modes.k_index(k).ok_or_else(|| invalid(format!("{k} is not a listed momentum")))
    }

    pub fn mirror_k(&self, ki: usize) -> usize {
        self.modes.mirror_k(ki)
    }

    /// Lune index of `−p` in `L_{−k}`.
    pub fn mirror_point(&self, ki: usize, a: usize) -> usize {
        self.mirror[ki][a]
    }

    /// `I_k φ`, a vector on `L_{−k}`.
    pub fn flip_vector(&self, ki: usize, phi: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(phi.len());
        for (a, x) in phi.iter().enumerate() {
            out[self.mirror[ki][a]] = *x;
        }
        out
    }

    /// `I_k A I_k⁻¹`, an operator on `ℓ²(L_{−k})`.
    pub fn flip_matrix(&self, ki: usize, a: &DMatrix<f64>) -> DMatrix<f64> {
        permute(a, &self.mirror[ki])
    }

    pub fn kernel(&self, ki: usize) -> &DMatrix<f64> {
        &self.onebody[ki].kernel.matrix
    }

    /// `Σ_l ‖K_l‖²_HS` over the listed momenta.
    pub fn kernel_hs2(&self) -> f64 {
        self.onebody.iter().map(|o| o.kernel.matrix.norm_squared()).sum()
    }

    /// Mode indices `(p, p − k)` of lune point `a`.
    pub fn pair(&self, ki: usize, a: usize) -> (usize, usize) {
        self.pairs[ki][a]
    }

    pub fn identity(&self) -> Csr {
        identity(self.dim())
    }

    /// `c*_i c_j`.
    pub fn hop(&self, i: usize, j: usize) -> &Csr {
        let m = self.modes.len();
        self.hops[i * m + j].get_or_init(|| {
            string_sum_operator(&self.sector, &self.sector, &[(1.0, vec![Ladder::Create(i), Ladder::Annihilate(j)])])
                .expect("hop on a valid sector")
                .matrix
        })
    }

    pub fn number(&self, i: usize) -> &Csr {
        self.hop(i, i)
    }

    pub fn materialize(&self, terms: &[OneBodyTerm]) -> Csr {
        let id = terms.iter().any(|t| t.1.is_none()).then(|| self.identity());
        let dim = self.dim();
        combine(
            dim,
            dim,
            terms.iter().map(|(a, t)| match t {
                Some((i, j)) => (*a, self.hop(*i, *j)),
                None => (*a, id.as_ref().expect("identity built")),
            }),
        )
    }

    /// `b_{k,p} = c*_{p−k} c_p`.
    pub fn b(&self, ki: usize, a: usize) -> &Csr {
        let (ip, ih) = self.pairs[ki][a];
        self.hop(ih, ip)
    }

    /// `b*_{k,p}`.
    pub fn b_dag(&self, ki: usize, a: usize) -> &Csr {
        let (ip, ih) = self.pairs[ki][a];
        self.hop(ip, ih)
    }

    /// `b_k(φ) = Σ_p ⟨φ, e_p⟩ b_{k,p}`.
    pub fn b_vec(&self, ki: usize, phi: &DVector<f64>) -> Csr {
        let terms: Vec<OneBodyTerm> =
            phi.iter().enumerate().map(|(a, x)| (*x, Some((self.pairs[ki][a].1, self.pairs[ki][a].0)))).collect();
        self.materialize(&terms)
    }

    /// `b*_k(φ)`.
    pub fn b_dag_vec(&self, ki: usize, phi: &DVector<f64>) -> Csr {
        let terms: Vec<OneBodyTerm> = phi.iter().enumerate().map(|(a, x)| (*x, Some(self.pairs[ki][a]))).collect();
        self.materialize(&terms)
    }

    /// `B_k = Σ_{p∈L_k} b_{k,p}`.
    pub fn big_b(&self, ki: usize) -> Csr {
        self.b_vec(ki, &DVector::from_element(self.lune(ki).len(), 1.0))
    }

    /// Diagonal of `𝒩_E` on the basis.
    pub fn n_e_diagonal(&self) -> &[f64] {
        &self.n_e_diag
    }

    /// `𝒩_E = Σ_{p∉B_F} c*_p c_p`.
    pub fn n_e(&self) -> Csr {
        diagonal(&self.n_e_diag)
    }

    /// `Σ_{p∈B_F} c_p c*_p`, assembled from hops.
    pub fn n_e_from_holes(&self) -> Csr {
        let terms: Vec<OneBodyTerm> = self.modes.holes().flat_map(|h| [(1.0, None), (-1.0, Some((h, h)))]).collect();
        self.materialize(&terms)
    }

    /// `𝒩_k = Σ_{p∈L_k} b*_{k,p} b_{k,p}`.
    pub fn n_k(&self, ki: usize) -> Csr {
        let mut acc = Csr::zeros(self.dim(), self.dim());
        for a in 0..self.lune(ki).len() {
            acc = &acc + &(self.b_dag(ki, a) * self.b(ki, a));
        }
        acc
    }

    /// `H′_kin = Σ_{p∉B_F} |p|² c*_p c_p − Σ_{p∈B_F} |p|² c_p c*_p`.
    pub fn h_kin(&self) -> Csr {
        let d: Vec<f64> = self
            .sector
            .states()
            .iter()
            .map(|&s| {
                (0..self.modes.len())
                    .map(|i| {
                        let occ = s & (1u64 << i) != 0;
                        let e = self.modes.modes[i].norm2() as f64;
                        match (self.modes.is_hole(i), occ) {
                            (false, true) => e,
                            (true, false) => -e,
                            _ => 0.0,
                        }
                    })
                    .sum()
            })
            .collect();
        diagonal(&d)
    }

    /// Terms of `ε_{k,l}(e_p; e_q)`.
    pub fn eps_terms(&self, ki: usize, a: usize, li: usize, b: usize) -> Vec<OneBodyTerm> {
        let (ip, ihp) = self.pairs[ki][a];
        let (iq, ihq) = self.pairs[li][b];
        let mut t = Vec::new();
        if ip == iq {
            // c_{q−l} c*_{p−k} = δ_{q−l,p−k} − c*_{p−k} c_{q−l}
            if ihp == ihq {
                t.push((-1.0, None));
            }
            t.push((1.0, Some((ihp, ihq))));
        }
        if ihp == ihq {
            t.push((-1.0, Some((iq, ip))));
        }
        t
    }

    /// `ε_{k,l}(φ; ψ)`, bilinear in real coefficients.
    pub fn eps(&self, ki: usize, phi: &DVector<f64>, li: usize, psi: &DVector<f64>) -> Csr {
        let mut terms = Vec::new();
        for (a, x) in phi.iter().enumerate() {
            if *x == 0.0 {
                continue;
            }
            for (b, y) in psi.iter().enumerate() {
                if *y == 0.0 {
                    continue;
                }
                terms.extend(self.eps_terms(ki, a, li, b).into_iter().map(|(c, t)| (c * x * y, t)));
            }
        }
        self.materialize(&terms)
    }

    /// `ε_k(A) = −Σ_p ⟨e_p, A e_p⟩ (c*_p c_p + c_{p−k} c*_{p−k})`.
    pub fn eps_k(&self, ki: usize, a: &DMatrix<f64>) -> Csr {
        let mut terms = Vec::new();
        for (i, &(ip, ih)) in self.pairs[ki].iter().enumerate() {
            let d = a[(i, i)];
            terms.push((-d, Some((ip, ip))));
            terms.push((-d, None));
            terms.push((d, Some((ih, ih))));
        }
        self.materialize(&terms)
    }

    /// `Q₁^k(A) = Σ_{p,q} ⟨e_p, A e_q⟩ b*_{k,p} b_{k,q}`.
    pub fn q1(&self, ki: usize, a: &DMatrix<f64>) -> Csr {
        let mut acc = Csr::zeros(self.dim(), self.dim());
        for i in 0..self.lune(ki).len() {
            let row = a.row(i).transpose();
            acc = &acc + &(self.b_dag(ki, i) * &self.b_vec(ki, &row));
        }
        acc
    }

    /// `Σ_{p,q} C_{pq} b_{k,p} b_{−k,−q}`.
    pub fn pair_product(&self, ki: usize, c: &DMatrix<f64>) -> Csr {
        let mk = self.mirror_k(ki);
        let mut acc = Csr::zeros(self.dim(), self.dim());
        for i in 0..self.lune(ki).len() {
            let row = self.flip_vector(ki, &c.row(i).transpose());
            if row.iter().all(|x| *x == 0.0) {
                continue;
            }
            acc = &acc + &(self.b(ki, i) * &self.b_vec(mk, &row));
        }
        acc
    }

    /// `Q₂^k(B) = Σ_{p,q} ⟨e_p, B e_q⟩ (b_{k,p} b_{−k,−q} + b*_{−k,−q} b*_{k,p})`.
    pub fn q2(&self, ki: usize, b: &DMatrix<f64>) -> Csr {
        let m = self.pair_product(ki, b);
        &m + &m.transpose()
    }

    /// `𝒦̃ = ½ Σ_l Σ_{p,q} ⟨e_p, K_l e_q⟩ b_{l,p} b_{−l,−q}`.
    pub fn kcal_tilde(&self) -> &Csr {
        self.kcal_tilde.get_or_init(|| {
            let mut acc = Csr::zeros(self.dim(), self.dim());
            for li in 0..self.k_count() {
                acc = &acc + &self.pair_product(li, self.kernel(li));
            }
            acc * 0.5
        })
    }

    /// `𝒦 = 𝒦̃ − 𝒦̃*`.
    pub fn kcal(&self) -> &Csr {
        self.kcal.get_or_init(|| {
            let t = self.kcal_tilde();
            t - &t.transpose()
        })
    }

    /// `b*_{−l}(K_{−l} e_{−q})` for `q = L_l[b]`.
    fn dressed_partner(&self, li: usize, b: usize) -> Csr {
        let ml = self.mirror_k(li);
        let col = self.kernel(ml).column(self.mirror[li][b]).into_owned();
        self.b_dag_vec(ml, &col)
    }

    /// `2ℰ_k(e_p) = Σ_l Σ_{q∈L_l} {ε_{k,l}(e_p; e_q), b*_{−l}(K_{−l} e_{−q})}`.
    fn y_op(&self, ki: usize, a: usize) -> Csr {
        let mut acc = Csr::zeros(self.dim(), self.dim());
        for li in 0..self.k_count() {
            for b in 0..self.lune(li).len() {
                let terms = self.eps_terms(ki, a, li, b);
                if terms.is_empty() {
                    continue;
                }
                let e = self.materialize(&terms);
                let partner = self.dressed_partner(li, b);
                acc = &acc + &(&(&e * &partner) + &(&partner * &e));
            }
        }
        acc
    }

    /// `2ℰ_k(e_p)` for every `k` and `p ∈ L_k`.
    pub fn y_ops(&self) -> &Vec<Vec<Csr>> {
        self.y_ops.get_or_init(|| {
            (0..self.k_count()).map(|ki| (0..self.lune(ki).len()).map(|a| self.y_op(ki, a)).collect()).collect()
        })
    }

    /// `ℰ_k(φ) = ½ Σ_l Σ_q {ε_{k,l}(φ; e_q), b*_{−l}(K_{−l} e_{−q})}`.
    pub fn e_k(&self, ki: usize, phi: &DVector<f64>) -> Csr {
        let y = &self.y_ops()[ki];
        combine(self.dim(), self.dim(), phi.iter().zip(y).map(|(x, m)| (0.5 * x, m)))
    }

    /// `2ℰ_{−k}(e_{−p})`, the inner operator of `ℰ²_k`.
    pub fn w_op(&self, ki: usize, a: usize) -> &Csr {
        &self.y_ops()[self.mirror_k(ki)][self.mirror[ki][a]]
    }

    /// `ℰ¹_k(A) = Σ_p b*_k(A e_p) · 2ℰ_k(e_p)`.
    pub fn e1(&self, ki: usize, a: &DMatrix<f64>) -> Csr {
        let y = &self.y_ops()[ki];
        let mut acc = Csr::zeros(self.dim(), self.dim());
        for (p, yp) in y.iter().enumerate() {
            acc = &acc + &(&self.b_dag_vec(ki, &a.column(p).into_owned()) * yp);
        }
        acc
    }

    /// `ℰ²_k(B) = ½ Σ_p {b_k(B e_p), 2ℰ_{−k}(e_{−p})}`.
    pub fn e2(&self, ki: usize, b: &DMatrix<f64>) -> Csr {
        let mut acc = Csr::zeros(self.dim(), self.dim());
        for p in 0..self.lune(ki).len() {
            let bp = self.b_vec(ki, &b.column(p).into_owned());
            let w = self.w_op(ki, p);
            acc = &acc + &(&(&bp * w) + &(w * &bp));
        }
        acc * 0.5
    }

    /// `H_eff = H′_kin + Σ_k c_k (2B*_k B_k + B_k B_{−k} + B*_{−k} B*_k)`.
    pub fn h_eff(&self) -> Csr {
        let mut acc = self.h_kin();
        let bs: Vec<Csr> = (0..self.k_count()).map(|ki| self.big_b(ki)).collect();
        for ki in 0..self.k_count() {
            let c = self.couplings[ki];
            if c == 0.0 {
                continue;
            }
            let mk = self.mirror_k(ki);
            let bb = &bs[ki].transpose() * &bs[ki];
            let pair = &bs[ki] * &bs[mk];
            let term = &(&bb * 2.0) + &(&pair + &pair.transpose());
            acc = &acc + &(term * c);
        }
        acc
    }

    fn is_hole_vec(&self, p: &LatticeVector) -> bool {
        self.modes.ball.contains(p)
    }

    fn is_particle_mode(&self, p: &LatticeVector) -> bool {
        self.modes.contains(p) && !self.is_hole_vec(p)
    }

    /// `D_{1,k} = Σ_{q∈B_F∩(B_F+k)} c*_{q−k} c_q`.
    pub fn d1(&self, ki: usize) -> Csr {
        let k = self.k(ki);
        let mut terms = Vec::new();
        for q in self.modes.holes() {
            let qv = self.modes.modes[q];
            if self.is_hole_vec(&(qv - k)) {
                terms.push((1.0, Some((self.modes.index_of(&(qv - k)).expect("hole in set"), q))));
            }
        }
        self.materialize(&terms)
    }

    /// `D_{2,k} = Σ_{p∈P∩(P−k)} c*_p c_{p+k}` over particle modes of the set.
    pub fn d2(&self, ki: usize) -> Csr {
        let k = self.k(ki);
        let mut terms = Vec::new();
        for p in self.modes.particles() {
            let pk = self.modes.modes[p] + k;
            if self.is_particle_mode(&pk) {
                terms.push((1.0, Some((p, self.modes.index_of(&pk).expect("particle in set")))));
            }
        }
        self.materialize(&terms)
    }

    pub fn d(&self, ki: usize) -> Csr {
        &self.d1(ki) + &self.d2(ki)
    }

    /// `𝒞 = Σ_k c_k ((B*_k + B_{−k}) D_k + D*_k (B_k + B*_{−k}))`.
    pub fn cubic(&self) -> Csr {
        let mut acc = Csr::zeros(self.dim(), self.dim());
        for ki in 0..self.k_count() {
            let c = self.couplings[ki];
            if c == 0.0 {
                continue;
            }
            let mk = self.mirror_k(ki);
            let d = self.d(ki);
            let left = &self.big_b(ki).transpose() + &self.big_b(mk);
            let t = &left * &d;
            acc = &acc + &(&(&t + &t.transpose()) * c);
        }
        acc
    }

    /// `𝒬 = Σ_k c_k (D*_k D_k − Σ_{p∈L_k} (c*_p c_p + c_{p−k} c*_{p−k}))`.
    pub fn quartic(&self) -> Csr {
        let mut acc = Csr::zeros(self.dim(), self.dim());
        for ki in 0..self.k_count() {
            let c = self.couplings[ki];
            if c == 0.0 {
                continue;
            }
            let d = self.d(ki);
            let mut terms = Vec::new();
            for &(ip, ih) in &self.pairs[ki] {
                terms.push((-1.0, Some((ip, ip))));
                terms.push((-1.0, None));
                terms.push((1.0, Some((ih, ih))));
            }
            let t = &(&d.transpose() * &d) + &self.materialize(&terms);
            acc = &acc + &(t * c);
        }
        acc
    }

    /// One-body part `G`.
    pub fn quartic_g(&self) -> Csr {
        let mut terms = Vec::new();
        for ki in 0..self.k_count() {
            let c = 2.0 * self.couplings[ki];
            let k = self.k(ki);
            for q in self.modes.holes() {
                if self.is_hole_vec(&(self.modes.modes[q] + k)) {
                    terms.push((c, None));
                    terms.push((-c, Some((q, q))));
                }
            }
            for p in self.modes.particles() {
                if self.is_hole_vec(&(self.modes.modes[p] - k)) {
                    terms.push((-c, Some((p, p))));
                }
            }
        }
        self.materialize(&terms)
    }

    /// `c̃_p`: `c_p` for particles, `c*_p` for holes.
    fn tilde(&self, p: &LatticeVector, dagger: bool) -> Ladder {
        let i = self.modes.index_of(p).expect("mode in set");
        match (self.is_hole_vec(p), dagger) {
            (false, false) | (true, true) => Ladder::Annihilate(i),
            (false, true) | (true, false) => Ladder::Create(i),
        }
    }

    fn quartic_strings(&self, terms: &[(f64, Vec<Ladder>)]) -> Csr {
        string_sum_operator(&self.sector, &self.sector, terms).expect("number-conserving strings").matrix
    }

    /// Long-range part `𝒬_LR`.
    pub fn quartic_lr(&self) -> Csr {
        let mut acc = Csr::zeros(self.dim(), self.dim());
        for ki in 0..self.k_count() {
            let c = self.couplings[ki];
            let k = self.k(ki);
            let set: Vec<LatticeVector> =
                self.modes.ball.points.iter().copied().filter(|p| self.is_hole_vec(&(*p - k))).collect();
            let mut strings = Vec::new();
            for p in &set {
                for q in &set {
                    strings.push((
                        c,
                        vec![self.tilde(&(*p - k), true), self.tilde(q, true), self.tilde(&(*q - k), false), self.tilde(p, false)],
                    ));
                }
            }
            let d1 = self.d1(ki);
            let d2 = self.d2(ki);
            let cross = &d1.transpose() * &d2;
            acc = &acc + &self.quartic_strings(&strings);
            acc = &acc + &(&(&cross + &cross.transpose()) * c);
        }
        acc
    }

    /// Short-range part `𝒬_SR`.
    pub fn quartic_sr(&self) -> Csr {
        let mut strings = Vec::new();
        for ki in 0..self.k_count() {
            let c = self.couplings[ki];
            let k = self.k(ki);
            let set: Vec<LatticeVector> = self
                .modes
                .particles()
                .map(|p| self.modes.modes[p])
                .filter(|p| self.is_particle_mode(&(*p + k)))
                .collect();
            for p in &set {
                for q in &set {
                    strings.push((
                        c,
                        vec![self.tilde(&(*p + k), true), self.tilde(q, true), self.tilde(&(*q + k), false), self.tilde(p, false)],
                    ));
                }
            }
        }
        self.quartic_strings(&strings)
    }

    /// Truncation remainder `−Σ_k c_k Σ_{p∈P, p−k∉M} c*_p c_p`, zero on the full lattice.
    pub fn quartic_truncation(&self) -> Csr {
        let mut terms = Vec::new();
        for ki in 0..self.k_count() {
            let k = self.k(ki);
            for p in self.modes.particles() {
                if !self.modes.contains(&(self.modes.modes[p] - k)) {
                    terms.push((-self.couplings[ki], Some((p, p))));
                }
            }
        }
        self.materialize(&terms)
    }

    /// `ψ_FS`.
    pub fn fermi_state(&self) -> DVector<f64> {
        self.sector.basis_vector(self.modes.fermi_mask()).expect("Fermi state lies in the N sector")
    }

    /// Distinct eigenvalues of `𝒩_E` on the sector.
    pub fn n_e_levels(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.n_e_diag.iter().map(|x| *x as usize).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Lune index of `−p` in `L_{−k}` for every `k` and `p`.
fn mirror_maps(modes: &ModeSet) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for (ki, lune) in modes.lunes.iter().enumerate() {
        let ml = &modes.lunes[modes.mirror_k(ki)];
        let row = lune
            .points
            .iter()
            .map(|p| ml.index_of(&-*p).ok_or_else(|| invalid(format!("{} has no mirror in L_{{-k}}", p))))
            .collect::<Result<Vec<_>>>()?;
        out.push(row);
    }
    Ok(out)
}

/// `(P A Pᵀ)` with `P e_i = e_{perm[i]}`.
fn permute(a: &DMatrix<f64>, perm: &[usize]) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(perm[i], perm[j])] = a[(i, j)];
        }
    }
    out
}
