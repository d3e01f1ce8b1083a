//! One-body operators on `ℓ²(L_k)`: the excitation energies `h`, the
//! interaction vector `v`, the kernel `K` and everything built from them.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticeVector, Lune};
use crate::numeric::linalg::{anticommutator, max_abs, rank_one_sqrt_trace_shift, sym_norm, symmetrize, SymEigen};
use crate::numeric::quadrature::{gauss_legendre_on, integrate_half_line, integrate_vec, QuadratureSpec};
use crate::numeric::Neumaier;
use crate::potential::PotentialModel;

/// `(2π)³`.
pub const TWO_PI_CUBED: f64 = 8.0 * PI * PI * PI;

/// Dense symmetric matrix on a lune basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LuneOperator {
    pub k: LatticeVector,
    pub entries: DMatrix<f64>,
}

impl LuneOperator {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// Vector on a lune basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LuneVector {
    pub k: LatticeVector,
    pub coefficients: DVector<f64>,
}

impl LuneVector {
    /// Image under `I_k e_p = e_{−p}`, a vector on `L_{−k}`.
    pub fn flip(&self) -> LuneVector {
        let n = self.coefficients.len();
        LuneVector { k: -self.k, coefficients: DVector::from_fn(n, |i, _| self.coefficients[n - 1 - i]) }
    }
}

/// Conjugation by the flip map: `(I A I⁻¹)_{ij} = A_{n−1−i, n−1−j}`.
pub fn flip_operator(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_fn(n, n, |i, j| a[(n - 1 - i, n - 1 - j)])
}

/// `h_k = diag(λ_{k,p})`.
pub fn build_h(lune: &Lune) -> LuneOperator {
    LuneOperator { k: lune.k, entries: DMatrix::from_diagonal(&DVector::from_column_slice(&lune.lambdas)) }
}

/// `V̂_k k_F⁻¹ / (2(2π)³)`, the squared entry of `v_k`.
pub fn coupling(model: &PotentialModel, k: LatticeVector, k_f: f64) -> f64 {
    model.v_hat(k) / (k_f * 2.0 * TWO_PI_CUBED)
}

/// The constant vector `v_k`.
pub fn build_v(lune: &Lune, model: &PotentialModel, k_f: f64) -> LuneVector {
    let c = coupling(model, lune.k, k_f).sqrt();
    LuneVector { k: lune.k, coefficients: DVector::from_element(lune.len(), c) }
}

/// `|v⟩⟨v|`.
pub fn projector(v: &DVector<f64>) -> DMatrix<f64> {
    v * v.transpose()
}

fn diag_of(h: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = h.nrows();
    let off = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { h[(i, j)] });
    if max_abs(&off) > 0.0 {
        return Err(invalid("h must be diagonal in the working basis"));
    }
    let d = h.diagonal();
    if d.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(invalid("h must be positive definite"));
    }
    Ok(d)
}

/// The kernel `K = −½ log(h^{−1/2} (h² + 2P_{h^{1/2}v})^{1/2} h^{−1/2})` with its
/// eigendecomposition kept for matrix functions.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub matrix: DMatrix<f64>,
    eig: SymEigen,
}

/// How `(h² + 2P_{h^{1/2}v})^{1/2}` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqrtRoute {
    Eigen,
    RankOneIntegral,
}

impl Kernel {
    pub fn build(h: &DMatrix<f64>, v: &DVector<f64>) -> Result<Self> {
        Self::build_with(h, v, SqrtRoute::Eigen)
    }

    pub fn build_with(h: &DMatrix<f64>, v: &DVector<f64>, route: SqrtRoute) -> Result<Self> {
        let lam = diag_of(h)?;
        let n = lam.len();
        if v.len() != n {
            return Err(invalid("v has the wrong length"));
        }
        if v.iter().all(|x| *x == 0.0) {
            return Ok(Self::zero(n));
        }
        let w = DVector::from_fn(n, |i, _| lam[i].sqrt() * v[i]);
        let h2 = DMatrix::from_diagonal(&lam.map(|x| x * x));
        let root = match route {
            SqrtRoute::Eigen => SymEigen::new(&(&h2 + 2.0 * &w * w.transpose())).apply(|x| x.max(0.0).sqrt()),
            SqrtRoute::RankOneIntegral => one_dim_perturb_sqrt(&h2, &w, 2.0)?.matrix,
        };
        // S − 1 = h^{−1/2} (root − h) h^{−1/2}
        let s_minus_one = DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { root[(i, j)] - lam[i] } else { root[(i, j)] };
            d / (lam[i] * lam[j]).sqrt()
        });
        let es = SymEigen::new(&symmetrize(&s_minus_one));
        if es.min() <= -1.0 {
            return Err(Error::Numerical("square-root congruence lost positivity".into()));
        }
        let eig = SymEigen { values: es.values.map(|x| -0.5 * x.ln_1p()), vectors: es.vectors };
        Ok(Self { matrix: eig.apply(|x| x), eig })
    }

    pub fn zero(n: usize) -> Self {
        Self { matrix: DMatrix::zeros(n, n), eig: SymEigen { values: DVector::zeros(n), vectors: DMatrix::identity(n, n) } }
    }

    pub fn from_matrix(k: DMatrix<f64>) -> Self {
        let eig = SymEigen::new(&k);
        Self { matrix: symmetrize(&k), eig }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `f(K)` through the stored eigendecomposition.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> DMatrix<f64> {
        self.eig.apply(f)
    }

    pub fn exp(&self, t: f64) -> DMatrix<f64> {
        self.apply(|x| (t * x).exp())
    }

    /// `e^{tK} − 1`.
    pub fn expm1(&self, t: f64) -> DMatrix<f64> {
        self.apply(|x| (t * x).exp_m1())
    }

    /// `sinh(−tK)`.
    pub fn sinh_neg(&self, t: f64) -> DMatrix<f64> {
        self.apply(|x| (-t * x).sinh())
    }

    /// `cosh(−tK) − 1`, evaluated as `2 sinh²(tK/2)`.
    pub fn cosh_neg_minus_one(&self, t: f64) -> DMatrix<f64> {
        self.apply(|x| 2.0 * (0.5 * t * x).sinh().powi(2))
    }

    pub fn functions(&self, t: f64) -> MatrixFunctions {
        MatrixFunctions {
            exp_pos: self.exp(t),
            exp_neg: self.exp(-t),
            sinh_neg: self.sinh_neg(t),
            cosh_neg: self.apply(|x| (t * x).cosh()),
        }
    }

    pub fn hs_norm(&self) -> f64 {
        self.matrix.norm()
    }
}

/// `{e^{tK}, e^{−tK}, sinh(−tK), cosh(−tK)}`.
#[derive(Debug, Clone)]
pub struct MatrixFunctions {
    pub exp_pos: DMatrix<f64>,
    pub exp_neg: DMatrix<f64>,
    pub sinh_neg: DMatrix<f64>,
    pub cosh_neg: DMatrix<f64>,
}

/// `K_k` for a lune.
pub fn build_k(h: &LuneOperator, v: &LuneVector) -> Result<LuneOperator> {
    let k = Kernel::build(&h.entries, &v.coefficients)?;
    Ok(LuneOperator { k: h.k, entries: k.matrix })
}

/// Everything needed to form `A(t)`, `B(t)` on one lune.
#[derive(Debug, Clone)]
pub struct OneBody {
    pub h: DMatrix<f64>,
    pub v: DVector<f64>,
    pub p: DMatrix<f64>,
    pub kernel: Kernel,
}

impl OneBody {
    pub fn new(h: DMatrix<f64>, v: DVector<f64>) -> Result<Self> {
        let kernel = Kernel::build(&h, &v)?;
        let p = projector(&v);
        Ok(Self { h, v, p, kernel })
    }

    pub fn for_lune(lune: &Lune, model: &PotentialModel, k_f: f64) -> Result<Self> {
        Self::new(build_h(lune).entries, build_v(lune, model, k_f).coefficients)
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// `(A(t), B(t))`.
    pub fn a_b(&self, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let ep = self.kernel.exp(t);
        let en = self.kernel.exp(-t);
        let t1 = &ep * (&self.h + 2.0 * &self.p) * &ep;
        let t2 = &en * &self.h * &en;
        let a = symmetrize(&((&t1 + &t2) * 0.5 - &self.h));
        let b = symmetrize(&((t1 - t2) * 0.5));
        (a, b)
    }

    /// `{K, B(t)}`.
    pub fn k_anticomm_b(&self, t: f64) -> DMatrix<f64> {
        anticommutator(&self.kernel.matrix, &self.a_b(t).1)
    }

    /// `∫₀¹ B(t) dt` with an `n`-node Gauss–Legendre rule.
    pub fn int_b(&self, nodes: usize) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.dim(), self.dim());
        for (t, w) in gauss_legendre_on(nodes, 0.0, 1.0) {
            acc += self.a_b(t).1 * w;
        }
        acc
    }

    /// `e^{−K} h e^{−K} − h`, i.e. `A(1)`.
    pub fn dressed_h_minus_h(&self) -> DMatrix<f64> {
        let en = self.kernel.exp(-1.0);
        symmetrize(&(&en * &self.h * &en - &self.h))
    }

    pub fn v_hinv_v(&self) -> f64 {
        (0..self.dim()).map(|i| self.v[i] * self.v[i] / self.h[(i, i)]).sum()
    }

    pub fn trace_correction(&self, quad: &QuadratureSpec) -> Result<TraceCorrection> {
        trace_correction(&self.h, &self.v, quad)
    }
}

/// `F(x) = log(1+x) − x` with a series branch for small `x`.
pub fn f_corr(x: f64) -> f64 {
    if x < 1e-4 {
        let x2 = x * x;
        -0.5 * x2 + x2 * x / 3.0 - 0.25 * x2 * x2
    } else {
        x.ln_1p() - x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceCorrection {
    /// Trace of `e^{−K}he^{−K} − h − P` from the exact spectrum of `h² + 2P_{h^{1/2}v}`.
    pub route1: f64,
    /// `(1/π)∫₀^∞ F(2Σ v_p² λ_p/(λ_p² + t²)) dt`.
    pub route2: f64,
    pub relative_difference: f64,
}

/// `tr(e^{−K}he^{−K} − h − P)` by two routes.
///
/// Since `tr(e^{−K}he^{−K}) = tr((h² + 2P_{h^{1/2}v})^{1/2})`, the first route
/// only needs the eigenvalue shifts of a rank-one update of `h²`.
pub fn trace_correction(h: &DMatrix<f64>, v: &DVector<f64>, quad: &QuadratureSpec) -> Result<TraceCorrection> {
    let lam = diag_of(h)?;
    let route1 = trace_route_spectral(lam.as_slice(), v.as_slice());
    let pairs: Vec<(f64, f64)> = lam.iter().zip(v.iter()).map(|(l, x)| (*l, 2.0 * x * x)).collect();
    let route2 = trace_route_integral(&pairs, quad)?;
    let relative_difference = if route1 == 0.0 { route2.abs() } else { ((route1 - route2) / route1).abs() };
    Ok(TraceCorrection { route1, route2, relative_difference })
}

pub(crate) fn trace_route_spectral(lam: &[f64], v: &[f64]) -> f64 {
    let d: Vec<f64> = lam.iter().map(|l| l * l).collect();
    let z: Vec<f64> = lam.iter().zip(v).map(|(l, x)| (2.0 * l).sqrt() * x).collect();
    let shift = rank_one_sqrt_trace_shift(&d, &z);
    let mut acc = Neumaier::new();
    acc.add(shift);
    for x in v {
        acc.add(-x * x);
    }
    acc.total()
}

/// `(1/π)∫₀^∞ F(Σ_j c_j λ_j/(λ_j² + t²)) dt` for pairs `(λ_j, c_j)`.
pub(crate) fn trace_route_integral(pairs: &[(f64, f64)], quad: &QuadratureSpec) -> Result<f64> {
    if pairs.iter().all(|p| p.1 == 0.0) {
        return Ok(0.0);
    }
    let lmin = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let r = integrate_half_line(
        |t| {
            let t2 = t * t;
            let x: f64 = pairs.iter().map(|(l, c)| c * l / (l * l + t2)).sum();
            f_corr(x)
        },
        lmin,
        quad,
    )
    .map_err(|e| Error::Numerical(format!("trace-correction integral: {e}")))?;
    Ok(r.value / PI)
}

/// `(A + gP_w)^{1/2}` by the rank-one integral representation.
#[derive(Debug, Clone)]
pub struct SqrtPerturbation {
    pub matrix: DMatrix<f64>,
    /// `tr A^{1/2} + (1/π)∫₀^∞ log(1 + g⟨w,(A+t²)⁻¹w⟩) dt`.
    pub trace: f64,
}

pub fn one_dim_perturb_sqrt(a: &DMatrix<f64>, w: &DVector<f64>, g: f64) -> Result<SqrtPerturbation> {
    let n = a.nrows();
    let ea = SymEigen::new(a);
    if ea.min() <= 0.0 {
        return Err(invalid("A must be positive definite"));
    }
    let pert = a + g * w * w.transpose();
    if SymEigen::new(&pert).min() <= 0.0 {
        return Err(invalid("A + gP_w must be positive definite"));
    }
    let sqrt_a = ea.apply(f64::sqrt);
    if g == 0.0 {
        let trace = ea.values.iter().map(|x| x.sqrt()).sum();
        return Ok(SqrtPerturbation { matrix: sqrt_a, trace });
    }
    let y = ea.vectors.transpose() * w;
    let alpha = ea.values.clone();
    let scale = ea.min().sqrt();
    let spec = QuadratureSpec { rel_tol: 1e-13, abs_tol: 0.0, max_subdivisions: 2000 };
    // upper triangle of ũũᵀ in the eigenbasis of A, mapped to u ∈ [0, 1)
    let tri = integrate_vec(
        |u| {
            if u >= 1.0 {
                return vec![0.0; n * (n + 1) / 2];
            }
            let om = 1.0 - u;
            let t = scale * u / om;
            let jac = scale / (om * om);
            let t2 = t * t;
            let ut: Vec<f64> = (0..n).map(|i| y[i] / (alpha[i] + t2)).collect();
            let denom = 1.0 + g * (0..n).map(|i| y[i] * ut[i]).sum::<f64>();
            let pre = t2 / denom * jac;
            let mut out = Vec::with_capacity(n * (n + 1) / 2);
            for i in 0..n {
                for j in i..n {
                    out.push(pre * ut[i] * ut[j]);
                }
            }
            out
        },
        0.0,
        1.0,
        &spec,
    )?;
    let mut m = DMatrix::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = tri[idx];
            m[(j, i)] = tri[idx];
            idx += 1;
        }
    }
    let corr = &ea.vectors * m * ea.vectors.transpose() * (2.0 * g / PI);
    let log_int = integrate_half_line(
        |t| {
            let t2 = t * t;
            (g * (0..n).map(|i| y[i] * y[i] / (alpha[i] + t2)).sum::<f64>()).ln_1p()
        },
        scale,
        &QuadratureSpec { rel_tol: 1e-13, abs_tol: 0.0, max_subdivisions: 2000 },
    )?;
    let trace = ea.values.iter().map(|x| x.sqrt()).sum::<f64>() + log_int.value / PI;
    Ok(SqrtPerturbation { matrix: symmetrize(&(sqrt_a + corr)), trace })
}

/// Result of one elementwise inequality family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    /// Largest `(lhs − rhs)/scale`; positive means violated.
    pub max_violation: f64,
    pub location: Option<(usize, usize, Option<f64>)>,
    pub pass: bool,
}

/// Relative slack for the elementwise inequalities.
pub const BOUND_SLACK: f64 = 1e-12;

struct BoundAccumulator {
    name: String,
    worst: f64,
    location: Option<(usize, usize, Option<f64>)>,
}

impl BoundAccumulator {
    fn new(name: &str) -> Self {
        Self { name: name.to_string(), worst: f64::NEG_INFINITY, location: None }
    }

    /// Record `lhs ≤ rhs` elementwise. Each difference is scaled by the larger
    /// of the two sides, floored at 1% of the largest entry of either matrix so
    /// that rounding noise on vanishing entries is not read as a violation.
    fn le(&mut self, lhs: &DMatrix<f64>, rhs: &DMatrix<f64>, t: Option<f64>) {
        let floor = (1e-2 * max_abs(rhs).max(max_abs(lhs))).max(f64::MIN_POSITIVE);
        for i in 0..lhs.nrows() {
            for j in 0..lhs.ncols() {
                let (l, r) = (lhs[(i, j)], rhs[(i, j)]);
                let scale = l.abs().max(r.abs()).max(floor);
                let viol = (l - r) / scale;
                if viol > self.worst {
                    self.worst = viol;
                    self.location = Some((i, j, t));
                }
            }
        }
    }

    fn finish(self) -> BoundReport {
        let worst = if self.worst == f64::NEG_INFINITY { 0.0 } else { self.worst };
        BoundReport { name: self.name, max_violation: worst, location: self.location, pass: worst <= BOUND_SLACK }
    }
}

/// Evaluate every explicit-constant elementwise bound on `K`, its functions,
/// `A(t)`, `B(t)`, `{K, B(t)}` and `∫B`, at each `t` of `t_grid`.
pub fn check_element_bounds(h: &DMatrix<f64>, v: &DVector<f64>, kernel: &Kernel, t_grid: &[f64]) -> Result<Vec<BoundReport>> {
    let lam = diag_of(h)?;
    if v.iter().any(|x| *x < 0.0) {
        return Err(invalid("the bounds require ⟨x_i, v⟩ ≥ 0 for every eigenvector x_i of h"));
    }
    let n = lam.len();
    let a = (0..n).map(|i| v[i] * v[i] / lam[i]).sum::<f64>();
    let vv = DMatrix::from_fn(n, n, |i, j| v[i] * v[j]);
    let g = DMatrix::from_fn(n, n, |i, j| v[i] * v[j] / (lam[i] + lam[j]));
    let zero = DMatrix::zeros(n, n);
    let p = projector(v);
    let ob = OneBody { h: h.clone(), v: v.clone(), p: p.clone(), kernel: kernel.clone() };
    let neg_k = -&kernel.matrix;
    let mut out = Vec::new();

    let mut e2 = BoundAccumulator::new("exp(-2K)-1 two-sided");
    let em = kernel.expm1(-2.0);
    e2.le(&(&g * (2.0 / (1.0 + 2.0 * a))), &em, None);
    e2.le(&em, &(&g * 2.0), None);
    out.push(e2.finish());

    let mut e2p = BoundAccumulator::new("1-exp(2K) two-sided");
    let ep = -kernel.expm1(2.0);
    e2p.le(&(&g * (2.0 / (1.0 + 2.0 * a))), &ep, None);
    e2p.le(&ep, &(&g * 2.0), None);
    out.push(e2p.finish());

    let mut hyp = BoundAccumulator::new("sinh(-2K) and cosh(-2K)-1 upper");
    hyp.le(&kernel.sinh_neg(2.0), &(&g * 2.0), None);
    hyp.le(&kernel.cosh_neg_minus_one(2.0), &(&g * (2.0 * a / (1.0 + 2.0 * a))), None);
    out.push(hyp.finish());

    let mut kel = BoundAccumulator::new("-K two-sided");
    kel.le(&(&g * (1.0 / (1.0 + 2.0 * a))), &neg_k, None);
    kel.le(&neg_k, &g, None);
    out.push(kel.finish());

    let mut tdep = BoundAccumulator::new("sinh(-tK), cosh(-tK)-1, exp(tK)-1");
    let mut proj = BoundAccumulator::new("exp(tK)Pexp(tK)-P");
    let mut hpart = BoundAccumulator::new("A_h(t), B_h(t)");
    let mut abb = BoundAccumulator::new("A(t), B(t)");
    let mut kb = BoundAccumulator::new("{K,B(t)}");
    for &t in t_grid {
        let s = kernel.sinh_neg(t);
        let c = kernel.cosh_neg_minus_one(t);
        let e = kernel.expm1(t);
        tdep.le(&(&g * (t / (1.0 + 2.0 * a))), &s, Some(t));
        tdep.le(&s, &(&g * t), Some(t));
        tdep.le(&zero, &c, Some(t));
        tdep.le(&c, &(&g * (a / (1.0 + 2.0 * a))), Some(t));
        tdep.le(&e.abs(), &g, Some(t));

        let epe = &p * &e + &e * &p + &e * &p * &e;
        proj.le(&epe.abs(), &(&vv * ((2.0 + a) * a)), Some(t));

        let cosh = c.clone() + DMatrix::identity(n, n);
        let a_h = (&c * h + h * &c + &c * h * &c) + &s * h * &s;
        let b_h = &p * t - (&s * h * &cosh + &cosh * h * &s);
        let hb = &vv * (4.0 * a);
        hpart.le(&a_h.abs(), &hb, Some(t));
        hpart.le(&b_h.abs(), &hb, Some(t));

        let (at, bt) = ob.a_b(t);
        let ab_bound = &vv * (3.0 * (1.0 + a).powi(2));
        abb.le(&at.abs(), &ab_bound, Some(t));
        abb.le(&bt.abs(), &ab_bound, Some(t));
        kb.le(&anticommutator(&kernel.matrix, &bt).abs(), &(&vv * (6.0 * (1.0 + a).powi(2) * a)), Some(t));
    }
    out.push(tdep.finish());
    out.push(proj.finish());
    out.push(hpart.finish());
    out.push(abb.finish());
    out.push(kb.finish());

    let mut ib = BoundAccumulator::new("int B - P/2");
    let intb = ob.int_b(32);
    ib.le(&(intb - &p * 0.5).abs(), &(&vv * ((6.0 + a) * a)), None);
    out.push(ib.finish());

    let mut sign = BoundAccumulator::new("(-K)^m entrywise nonnegative, m=1,2,3");
    let k2 = &neg_k * &neg_k;
    let k3 = &k2 * &neg_k;
    for m in [&neg_k, &k2, &k3] {
        sign.le(&(-m), &zero, None);
    }
    out.push(sign.finish());

    let mut hs = BoundAccumulator::new("HS norm of K vs <v,h^-1 v>");
    hs.le(&DMatrix::from_element(1, 1, kernel.hs_norm()), &DMatrix::from_element(1, 1, a), None);
    out.push(hs.finish());
    Ok(out)
}

/// Central-difference check of `dT¹/dt = {K,T²}` and `dT²/dt = {K,T¹}` for
/// `T¹,² = ½(e^{tK}Te^{tK} ± e^{−tK}Te^{−tK})`. Returns the largest relative residual.
pub fn t_pair_derivative_residual(kernel: &Kernel, t_mat: &DMatrix<f64>, times: &[f64], step: f64) -> f64 {
    let pair = |t: f64| {
        let ep = kernel.exp(t);
        let en = kernel.exp(-t);
        let x = &ep * t_mat * &ep;
        let y = &en * t_mat * &en;
        ((&x + &y) * 0.5, (x - y) * 0.5)
    };
    let k = &kernel.matrix;
    let mut worst: f64 = 0.0;
    for &t in times {
        let (t1p, t2p) = pair(t + step);
        let (t1m, t2m) = pair(t - step);
        let (t1, t2) = pair(t);
        let d1 = (t1p - t1m) / (2.0 * step);
        let d2 = (t2p - t2m) / (2.0 * step);
        let r1 = anticommutator(k, &t2);
        let r2 = anticommutator(k, &t1);
        let scale = max_abs(&r1).max(max_abs(&r2)).max(1e-300);
        worst = worst.max(max_abs(&(d1 - r1)) / scale).max(max_abs(&(d2 - r2)) / scale);
    }
    worst
}

/// Per-lune diagnostic record.
#[derive(Debug, Clone, Serialize)]
pub struct LuneDiagnostics {
    pub k: [i64; 3],
    pub dim: usize,
    pub hs_norm_k: f64,
    pub trace_correction_route1: f64,
    pub trace_correction_route2: f64,
    pub diagonalization_residual: f64,
    pub bound_reports: Vec<BoundReport>,
}

pub fn lune_diagnostics(lune: &Lune, model: &PotentialModel, k_f: f64, t_grid: &[f64]) -> Result<LuneDiagnostics> {
    let ob = OneBody::for_lune(lune, model, k_f)?;
    let tc = ob.trace_correction(&QuadratureSpec::default())?;
    let bound_reports = check_element_bounds(&ob.h, &ob.v, &ob.kernel, t_grid)?;
    Ok(LuneDiagnostics {
        k: lune.k.as_array(),
        dim: ob.dim(),
        hs_norm_k: ob.kernel.hs_norm(),
        trace_correction_route1: tc.route1,
        trace_correction_route2: tc.route2,
        diagonalization_residual: sym_norm(&ob.a_b(1.0).1) / sym_norm(&ob.h),
        bound_reports,
    })
}
