//! The transformed effective Hamiltonian `e^𝒦 H_eff e^{−𝒦}`, evaluated on
//! blocks of vectors.

use nalgebra::{DMatrix, DVector};

use super::expm::ExpAction;
use super::ops::Csr;
use super::system::FockSystem;
use crate::numeric::linalg::anticommutator;
use crate::numeric::quadrature::gauss_legendre_on;
use crate::numeric::Neumaier;

pub const THEOREM_NODES: usize = 32;

/// Per-`k` one-body matrices and the operators needed for the integrand.
pub struct DiagonalizationTerms<'a> {
    sys: &'a FockSystem,
    y_t: Vec<Vec<Csr>>,
    h_eff: Csr,
    h_kin: Csr,
    /// `Σ_k 2Q₁^k(e^{−K}he^{−K} − h)`.
    dressed_q1: Csr,
    exp: ExpAction,
    pub e_bos: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremResidual {
    /// Largest column norm of `LHS − RHS` over unit probes.
    pub absolute: f64,
    /// Same, divided by the largest column norm of the left side.
    pub relative: f64,
    pub e_bos: f64,
    pub columns: usize,
}

impl<'a> DiagonalizationTerms<'a> {
    pub fn new(sys: &'a FockSystem) -> Self {
        let y = sys.y_ops();
        let y_t = y.iter().map(|row| row.iter().map(|m| m.transpose()).collect()).collect();
        let mut dressed_q1 = Csr::zeros(sys.dim(), sys.dim());
        let mut e_bos = Neumaier::new();
        for ki in 0..sys.k_count() {
            let ob = &sys.onebody[ki];
            let a1 = ob.dressed_h_minus_h();
            dressed_q1 = &dressed_q1 + &(sys.q1(ki, &a1) * 2.0);
            e_bos.add(a1.trace() - ob.p.trace());
        }
        Self {
            sys,
            y_t,
            h_eff: sys.h_eff(),
            h_kin: sys.h_kin(),
            dressed_q1,
            exp: ExpAction::new(sys.kcal()),
            e_bos: e_bos.total(),
        }
    }

    pub fn exp_action(&self) -> &ExpAction {
        &self.exp
    }

    /// `X(t) V` with `X(t) = Σ_k ε_k({K,B(t)}) + 2Re ℰ¹_k(A(t)) + 2Re ℰ²_k(B(t))`.
    pub fn integrand(&self, t: f64, v: &DMatrix<f64>) -> DMatrix<f64> {
        let sys = self.sys;
        let y = sys.y_ops();
        let yv: Vec<Vec<DMatrix<f64>>> = y.iter().map(|row| row.iter().map(|m| m * v).collect()).collect();
        let mut out = DMatrix::zeros(v.nrows(), v.ncols());
        for ki in 0..sys.k_count() {
            let ob = &sys.onebody[ki];
            let (a, b) = ob.a_b(t);
            out += sys.eps_k(ki, &anticommutator(&ob.kernel.matrix, &b)) * v;
            let mk = sys.mirror_k(ki);
            for p in 0..sys.lune(ki).len() {
                let ap = a.column(p).into_owned();
                let bp = b.column(p).into_owned();
                // 2Re ℰ¹
                out += sys.b_dag_vec(ki, &ap) * &yv[ki][p];
                out += &self.y_t[ki][p] * (sys.b_vec(ki, &ap) * v);
                // 2Re ℰ², with W_{k,p} = Y_{−k,−p}
                let mp = sys.mirror_point(ki, p);
                let w = &y[mk][mp];
                let w_t = &self.y_t[mk][mp];
                let b_op = sys.b_vec(ki, &bp);
                let b_dag = sys.b_dag_vec(ki, &bp);
                let mut e2 = &b_op * &yv[mk][mp];
                e2 += w * (&b_op * v);
                e2 += w_t * (&b_dag * v);
                e2 += &b_dag * (w_t * v);
                out += e2 * 0.5;
            }
        }
        out
    }

    /// `e^𝒦 H_eff e^{−𝒦} V`.
    pub fn lhs(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let w = self.exp.apply(-1.0, v);
        self.exp.apply(1.0, &(&self.h_eff * w))
    }

    /// Right side with `∫₀¹ e^{(1−t)𝒦} X(t) e^{−(1−t)𝒦} dt` on Gauss–Legendre nodes.
    pub fn rhs(&self, v: &DMatrix<f64>, nodes: usize) -> DMatrix<f64> {
        let mut out = v * self.e_bos + &self.h_kin * v + &self.dressed_q1 * v;
        // u = 1 − t ascending
        let mut pts: Vec<(f64, f64, f64)> = gauss_legendre_on(nodes, 0.0, 1.0).into_iter().map(|(t, w)| (1.0 - t, t, w)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut z = Vec::with_capacity(pts.len());
        let mut e = v.clone();
        let mut prev = 0.0;
        for &(u, t, w) in &pts {
            e = self.exp.apply(-(u - prev), &e);
            prev = u;
            z.push(self.integrand(t, &e) * w);
        }
        let n = pts.len();
        let mut s = z.pop().expect("at least one node");
        for j in (0..n - 1).rev() {
            s = self.exp.apply(pts[j + 1].0 - pts[j].0, &s);
            s += &z[j];
        }
        s = self.exp.apply(pts[0].0, &s);
        out += s;
        out
    }

    pub fn residual(&self, v: &DMatrix<f64>, nodes: usize) -> TheoremResidual {
        let l = self.lhs(v);
        let r = self.rhs(v, nodes);
        let d = &l - &r;
        let mut absolute: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..v.ncols() {
            let vn = v.column(j).norm().max(f64::MIN_POSITIVE);
            absolute = absolute.max(d.column(j).norm() / vn);
            scale = scale.max(l.column(j).norm() / vn);
        }
        TheoremResidual { absolute, relative: absolute / scale.max(1.0), e_bos: self.e_bos, columns: v.ncols() }
    }

    /// `⟨ψ, X(t) ψ⟩` integrated in `t`, i.e. without the conjugation by `e^{(1−t)𝒦}`.
    pub fn fermi_state_integrand_mean(&self, psi: &DVector<f64>, nodes: usize) -> f64 {
        let v = DMatrix::from_column_slice(psi.len(), 1, psi.as_slice());
        let mut acc = Neumaier::new();
        for (t, w) in gauss_legendre_on(nodes, 0.0, 1.0) {
            acc.add(w * (v.transpose() * self.integrand(t, &v))[(0, 0)]);
        }
        acc.total()
    }
}
