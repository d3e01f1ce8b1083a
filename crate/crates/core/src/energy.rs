//! Fermi-state energy, bosonic and exchange correlation energies, and the
//! assembled upper bound.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lattice::{fermi_ball, lune, within_radius, FermiBall, LatticeVector, Lune};
use crate::numeric::quadrature::{integrate_half_line, QuadratureSpec};
use crate::numeric::Neumaier;
use crate::onebody::{trace_route_integral, BoundReport, TWO_PI_CUBED};
use crate::potential::{radial_tail_bounds, Estimate, PotentialModel};

/// How the sum over `k ∈ ℤ³∖{0}` is truncated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum KSumPolicy {
    /// Every `k` with `|k| ≤ radius` (at least the ball `|k| ≤ 2k_F`).
    Exhaustive { radius: f64 },
    /// The ball `|k| ≤ 2k_F` followed by unit-width shells until one contributes
    /// less than `rel_tail_tol` of the running total.
    Adaptive { rel_tail_tol: f64, r_max: f64 },
}

impl Default for KSumPolicy {
    fn default() -> Self {
        KSumPolicy::Adaptive { rel_tail_tol: 1e-4, r_max: 400.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerK {
    pub k: [i64; 3],
    pub bos_k: f64,
    pub ex_k: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct KSumDiagnostics {
    /// Largest `|k|` included explicitly.
    pub radius: f64,
    /// Number of distinct `k` evaluated (orbit representatives when reduced).
    pub evaluated: usize,
    pub shells: usize,
    pub orbit_reduced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub k_f: f64,
    pub n: usize,
    pub potential: String,
    pub e_fs_kinetic: f64,
    pub e_fs_interaction: f64,
    pub e_corr_bos: f64,
    pub e_corr_ex: f64,
    pub error_functional: f64,
    pub error_functional_halfwidth: f64,
    pub bos_tail: f64,
    pub ex_tail: f64,
    pub diagnostics: KSumDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_k: Option<Vec<PerK>>,
}

pub const CSV_HEADER: &str = "k_F,N,e_fs_kin,e_fs_int,e_corr_bos,e_corr_ex,error_functional,bos_tail,ex_tail";

/// 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

impl EnergyReport {
    pub fn e_fs(&self) -> f64 {
        self.e_fs_kinetic + self.e_fs_interaction
    }

    /// `E_FS + E_corr,bos + E_corr,ex`, without the error functional.
    pub fn upper_bound_value(&self) -> f64 {
        self.e_fs() + self.e_corr_bos + self.e_corr_ex
    }

    pub fn csv_row(&self) -> String {
        [
            fmt17(self.k_f),
            self.n.to_string(),
            fmt17(self.e_fs_kinetic),
            fmt17(self.e_fs_interaction),
            fmt17(self.e_corr_bos),
            fmt17(self.e_corr_ex),
            fmt17(self.error_functional),
            fmt17(self.bos_tail),
            fmt17(self.ex_tail),
        ]
        .join(",")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let num = |x: f64| serde_json::Value::String(fmt17(x));
        let mut v = serde_json::json!({
            "k_F": num(self.k_f),
            "N": self.n,
            "potential": self.potential,
            "e_fs_kin": num(self.e_fs_kinetic),
            "e_fs_int": num(self.e_fs_interaction),
            "e_corr_bos": num(self.e_corr_bos),
            "e_corr_ex": num(self.e_corr_ex),
            "error_functional": num(self.error_functional),
            "error_functional_halfwidth": num(self.error_functional_halfwidth),
            "bos_tail": num(self.bos_tail),
            "ex_tail": num(self.ex_tail),
            "diagnostics": self.diagnostics,
        });
        if let Some(per_k) = &self.per_k {
            v["per_k"] = per_k
                .iter()
                .map(|p| serde_json::json!({"k": p.k, "bos_k": num(p.bos_k), "ex_k": num(p.ex_k)}))
                .collect();
        }
        v
    }
}

pub fn write_csv<W: Write + ?Sized>(w: &mut W, reports: &[EnergyReport]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in reports {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Kinetic and interaction parts of the Fermi-state energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FermiStateEnergy {
    pub kinetic: f64,
    pub interaction: f64,
}

/// `Σ_{B_F}|p|²` and `k_F⁻¹ (2(2π)³)⁻¹ Σ_{|k|≤2k_F} V̂_k (|L_k| − N)`.
pub fn e_fs(ball: &FermiBall, model: &PotentialModel) -> FermiStateEnergy {
    let k_f = ball.k_f;
    let n = ball.n() as f64;
    let items = k_items_in_ball(model, 2.0 * k_f);
    let terms: Vec<f64> = items
        .par_iter()
        .map(|&(k, mult)| {
            let v = model.v_hat(k);
            if v == 0.0 {
                return 0.0;
            }
            let size = crate::lattice::lune_size(ball, k) as f64;
            mult as f64 * v * (size - n)
        })
        .collect();
    let interaction = crate::numeric::neumaier_sum(terms) / (k_f * 2.0 * TWO_PI_CUBED);
    FermiStateEnergy { kinetic: ball.kinetic() as f64, interaction }
}

/// `V̂_k k_F⁻¹/(2π)³`, the prefactor inside `F`.
fn bos_coupling(model: &PotentialModel, k: LatticeVector, k_f: f64) -> f64 {
    model.v_hat(k) / (k_f * TWO_PI_CUBED)
}

/// `F((V̂_k k_F⁻¹/(2π)³) Σ_{p∈L_k} λ/(λ² + t²))`.
pub fn bos_integrand(lune: &Lune, model: &PotentialModel, k_f: f64, t: f64) -> f64 {
    let c = bos_coupling(model, lune.k, k_f);
    if c == 0.0 {
        return 0.0;
    }
    let t2 = t * t;
    let s: f64 = lune.spectrum().iter().map(|(l, m)| *m as f64 * l / (l * l + t2)).sum();
    crate::onebody::f_corr(c * s)
}

/// `(1/π)∫₀^∞ F(…) dt` for one lune.
pub fn e_corr_bos_k(lune: &Lune, model: &PotentialModel, k_f: f64, quad: &QuadratureSpec) -> Result<f64> {
    let c = bos_coupling(model, lune.k, k_f);
    if c == 0.0 || lune.is_empty() {
        return Ok(0.0);
    }
    let pairs: Vec<(f64, f64)> = lune.spectrum().into_iter().map(|(l, m)| (l, c * m as f64)).collect();
    trace_route_integral(&pairs, quad)
}

/// `Σ_{p,q∈L_k} V̂_{p+q−k}/(λ_{k,p} + λ_{k,q})`.
fn exchange_double_sum(lune: &Lune, model: &PotentialModel) -> f64 {
    let k = lune.k;
    let n = lune.len();
    let mut acc = Neumaier::new();
    for i in 0..n {
        let (pi, li) = (lune.points[i], lune.lambdas[i]);
        let mut row = Neumaier::new();
        row.add(0.5 * model.v_hat(pi + pi - k) / (2.0 * li));
        for j in (i + 1)..n {
            let v = model.v_hat(pi + lune.points[j] - k);
            if v != 0.0 {
                row.add(v / (li + lune.lambdas[j]));
            }
        }
        acc.add(2.0 * row.total());
    }
    acc.total()
}

/// Exchange contribution of a single `k`.
pub fn e_corr_ex_k(lune: &Lune, model: &PotentialModel, k_f: f64) -> f64 {
    let vk = model.v_hat(lune.k);
    if vk == 0.0 {
        return 0.0;
    }
    vk * exchange_double_sum(lune, model) / (k_f * k_f * 4.0 * TWO_PI_CUBED * TWO_PI_CUBED)
}

/// Multiplicities of `a + b` over pairs `a, b ∈ B_F`.
///
/// For `|k| > 2k_F` the lune is `B_F + k`, so with `p = k + a`, `q = k + b`
/// the exchange summand depends on `a + b` only and the double sum collapses
/// to `Σ_s n(s) V̂_{k+s}/(|k|² + s·k)`.
struct PairSums {
    entries: Vec<(LatticeVector, f64)>,
}

impl PairSums {
    fn new(ball: &FermiBall) -> Self {
        let c = ball.coord_bound();
        let side = (4 * c + 1) as usize;
        let idx = |s: LatticeVector| (((s.x + 2 * c) as usize * side) + (s.y + 2 * c) as usize) * side + (s.z + 2 * c) as usize;
        let mut counts = vec![0u64; side * side * side];
        for a in &ball.points {
            for b in &ball.points {
                counts[idx(*a + *b)] += 1;
            }
        }
        let mut entries = Vec::new();
        for x in -2 * c..=2 * c {
            for y in -2 * c..=2 * c {
                for z in -2 * c..=2 * c {
                    let s = LatticeVector::new(x, y, z);
                    let n = counts[idx(s)];
                    if n > 0 {
                        entries.push((s, n as f64));
                    }
                }
            }
        }
        Self { entries }
    }

    fn exchange_sum(&self, model: &PotentialModel, k: LatticeVector) -> f64 {
        let k2 = k.norm2();
        let mut acc = Neumaier::new();
        for (s, n) in &self.entries {
            let v = model.v_hat(k + *s);
            if v != 0.0 {
                let dot = s.x * k.x + s.y * k.y + s.z * k.z;
                acc.add(n * v / (k2 + dot) as f64);
            }
        }
        acc.total()
    }
}

/// Canonical representative of the orbit of `k` under the cubic group.
pub(crate) fn canonical(k: LatticeVector) -> LatticeVector {
    let mut a = [k.x.abs(), k.y.abs(), k.z.abs()];
    a.sort_unstable_by(|x, y| y.cmp(x));
    LatticeVector::new(a[0], a[1], a[2])
}

/// Size of the orbit of a canonical `k` under the 48 signed permutations.
fn orbit_size(k: LatticeVector) -> usize {
    let c = [k.x, k.y, k.z];
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut seen = std::collections::BTreeSet::new();
    for p in perms {
        for s in 0..8 {
            let sgn = |b: usize| if s >> b & 1 == 1 { -1 } else { 1 };
            seen.insert([sgn(0) * c[p[0]], sgn(1) * c[p[1]], sgn(2) * c[p[2]]]);
        }
    }
    seen.len()
}

/// `k` with `lo² < |k|² ≤ hi²` (as `k_F`-style exact comparisons), lexicographic.
pub(crate) fn ks_between(lo: Option<f64>, hi: f64) -> Vec<LatticeVector> {
    let r = hi.floor() as i64;
    let mut out = Vec::new();
    for x in -r..=r {
        for y in -r..=r {
            for z in -r..=r {
                let k = LatticeVector::new(x, y, z);
                if k.is_zero() || !within_radius(k.norm2(), hi) {
                    continue;
                }
                if let Some(lo) = lo {
                    if within_radius(k.norm2(), lo) {
                        continue;
                    }
                }
                out.push(k);
            }
        }
    }
    out
}

/// Work items `(k, multiplicity)` in a region; orbit-reduced for isotropic models.
fn k_items(model: &PotentialModel, lo: Option<f64>, hi: f64) -> Vec<(LatticeVector, usize)> {
    if let PotentialModel::Table(t) = model {
        return t
            .entries
            .keys()
            .filter(|k| within_radius(k.norm2(), hi) && lo.map_or(true, |lo| !within_radius(k.norm2(), lo)))
            .map(|k| (*k, 1))
            .collect();
    }
    if model.is_zero() {
        return Vec::new();
    }
    ks_between(lo, hi).into_iter().filter(|k| canonical(*k) == *k).map(|k| (k, orbit_size(k))).collect()
}

fn k_items_in_ball(model: &PotentialModel, radius: f64) -> Vec<(LatticeVector, usize)> {
    k_items(model, None, radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Parts {
    bos: bool,
    ex: bool,
}

#[derive(Debug, Clone)]
struct KSum {
    bos: Estimate,
    ex: Estimate,
    per_item: Vec<(LatticeVector, f64, f64)>,
    diagnostics: KSumDiagnostics,
}

fn evaluate_items(
    ball: &FermiBall,
    model: &PotentialModel,
    items: &[(LatticeVector, usize)],
    parts: Parts,
    quad: &QuadratureSpec,
    pair_sums: Option<&PairSums>,
) -> Result<Vec<(f64, f64)>> {
    let k_f = ball.k_f;
    let n = ball.n();
    items
        .par_iter()
        .map(|&(k, _)| {
            let l = lune(ball, k)?;
            let b = if parts.bos { e_corr_bos_k(&l, model, k_f, quad)? } else { 0.0 };
            let e = match (parts.ex, pair_sums) {
                (false, _) => 0.0,
                (true, Some(ps)) if l.len() == n => {
                    let vk = model.v_hat(k);
                    vk * ps.exchange_sum(model, k) / (k_f * k_f * 4.0 * TWO_PI_CUBED * TWO_PI_CUBED)
                }
                (true, _) => e_corr_ex_k(&l, model, k_f),
            };
            Ok((b, e))
        })
        .collect()
}

fn ksum(ball: &FermiBall, model: &PotentialModel, policy: &KSumPolicy, quad: &QuadratureSpec, parts: Parts) -> Result<KSum> {
    let k_f = ball.k_f;
    let zero = Estimate { value: 0.0, half_width: 0.0 };
    let mut diagnostics = KSumDiagnostics { orbit_reduced: model.is_isotropic(), ..Default::default() };
    if model.is_zero() {
        return Ok(KSum { bos: zero, ex: zero, per_item: Vec::new(), diagnostics });
    }
    let base = (2.0 * k_f).floor() + 1.0;
    let (head_radius, adaptive) = match *policy {
        KSumPolicy::Exhaustive { radius } => {
            if !(radius >= 2.0 * k_f) {
                return Err(invalid(format!("exhaustive radius {radius} must cover |k| ≤ 2k_F = {}", 2.0 * k_f)));
            }
            (radius, None)
        }
        KSumPolicy::Adaptive { rel_tail_tol, r_max } => {
            if !(rel_tail_tol > 0.0 && r_max >= base) {
                return Err(invalid("adaptive policy needs rel_tail_tol > 0 and r_max ≥ 2k_F + 1"));
            }
            (base, Some((rel_tail_tol, r_max)))
        }
    };
    let finite_support = model.support_radius();
    let head_radius = match finite_support {
        Some(r) => head_radius.max(r),
        None => head_radius,
    };
    let pair_sums = (parts.ex && finite_support.is_none()).then(|| PairSums::new(ball));
    let mut per_item = Vec::new();
    let mut bos = Neumaier::new();
    let mut ex = Neumaier::new();
    let mut run = |items: Vec<(LatticeVector, usize)>, per_item: &mut Vec<(LatticeVector, f64, f64)>| -> Result<(f64, f64)> {
        let vals = evaluate_items(ball, model, &items, parts, quad, pair_sums.as_ref())?;
        let mut sb = Neumaier::new();
        let mut se = Neumaier::new();
        for ((k, m), (b, e)) in items.iter().zip(vals) {
            sb.add(*m as f64 * b);
            se.add(*m as f64 * e);
            per_item.push((*k, b, e));
        }
        diagnostics.evaluated += items.len();
        Ok((sb.total(), se.total()))
    };
    let (hb, he) = run(k_items(model, None, head_radius), &mut per_item)?;
    bos.add(hb);
    ex.add(he);
    diagnostics.radius = head_radius;
    let mut bos_tail = 0.0;
    let mut ex_tail = 0.0;
    if let (Some((tol, r_max)), None) = (adaptive, finite_support) {
        let mut prev: Option<(f64, f64)> = None;
        let mut r = head_radius;
        loop {
            if r + 1.0 > r_max {
                return Err(Error::Numerical(format!(
                    "k-sum reached R_max = {r_max} without meeting tolerance {tol:e}; partial bos = {:e}, ex = {:e}",
                    bos.total(),
                    ex.total()
                )));
            }
            let (sb, se) = run(k_items(model, Some(r), r + 1.0), &mut per_item)?;
            bos.add(sb);
            ex.add(se);
            r += 1.0;
            diagnostics.shells += 1;
            diagnostics.radius = r;
            let small = |s: f64, total: f64, on: bool| !on || s.abs() <= tol * total.abs();
            if small(sb, bos.total(), parts.bos) && small(se, ex.total(), parts.ex) && prev.is_some() {
                if parts.bos {
                    bos_tail = bos_quadratic_tail(model, ball, r)?;
                }
                if parts.ex {
                    ex_tail = geometric_tail(prev.unwrap().1, se, r);
                }
                break;
            }
            prev = Some((sb, se));
        }
    }
    Ok(KSum {
        bos: Estimate { value: bos.total() + bos_tail, half_width: bos_tail.abs() },
        ex: Estimate { value: ex.total() + ex_tail, half_width: ex_tail.abs() },
        per_item,
        diagnostics,
    })
}

/// Tail of the bosonic sum beyond `r` from its leading large-`|k|` form
/// `−(V̂_k k_F⁻¹/(2π)³)² N²/(4|k|²)`.
fn bos_quadratic_tail(model: &PotentialModel, ball: &FermiBall, r: f64) -> Result<f64> {
    let k_f = ball.k_f;
    let n = ball.n() as f64;
    let f = |s: f64| {
        let c = model.radial(s) / (k_f * TWO_PI_CUBED);
        c * c * n * n / (4.0 * s * s)
    };
    let (lo, hi) = radial_tail_bounds(f, r)?;
    Ok(-0.5 * (lo + hi))
}

/// Geometric continuation of the last two shell contributions; falls back to a
/// `|k|⁻⁴` shell law when the ratio is not in `(0, 1)`.
fn geometric_tail(prev: f64, last: f64, r: f64) -> f64 {
    let rho = if prev != 0.0 { last / prev } else { 0.0 };
    if rho > 0.0 && rho < 1.0 {
        last * rho / (1.0 - rho)
    } else {
        last * r / 3.0
    }
}

pub fn e_corr_bos(model: &PotentialModel, k_f: f64, policy: &KSumPolicy, quad: &QuadratureSpec) -> Result<Estimate> {
    let ball = fermi_ball(k_f)?;
    Ok(ksum(&ball, model, policy, quad, Parts { bos: true, ex: false })?.bos)
}

pub fn e_corr_ex(model: &PotentialModel, k_f: f64, policy: &KSumPolicy) -> Result<Estimate> {
    let ball = fermi_ball(k_f)?;
    Ok(ksum(&ball, model, policy, &QuadratureSpec::default(), Parts { bos: false, ex: true })?.ex)
}

/// Expand orbit representatives into every `k`, lexicographically.
fn expand_per_k(model: &PotentialModel, items: &[(LatticeVector, f64, f64)], radius: f64) -> Vec<PerK> {
    use std::collections::HashMap;
    let reduced = model.is_isotropic();
    let lookup: HashMap<LatticeVector, (f64, f64)> = items.iter().map(|(k, b, e)| (*k, (*b, *e))).collect();
    let ks: Vec<LatticeVector> = if reduced { ks_between(None, radius) } else { items.iter().map(|x| x.0).collect() };
    ks.into_iter()
        .filter_map(|k| {
            let key = if reduced { canonical(k) } else { k };
            lookup.get(&key).map(|(b, e)| PerK { k: k.as_array(), bos_k: *b, ex_k: *e })
        })
        .collect()
}

/// `E_FS + E_corr,bos + E_corr,ex` together with the error functional.
pub fn upper_bound(
    model: &PotentialModel,
    k_f: f64,
    policy: &KSumPolicy,
    quad: &QuadratureSpec,
    emit_per_k: bool,
) -> Result<EnergyReport> {
    let ball = fermi_ball(k_f)?;
    let fs = e_fs(&ball, model);
    let sums = ksum(&ball, model, policy, quad, Parts { bos: true, ex: true })?;
    let err = model.error_term(k_f)?;
    let per_k = emit_per_k.then(|| expand_per_k(model, &sums.per_item, sums.diagnostics.radius));
    Ok(EnergyReport {
        k_f,
        n: ball.n(),
        potential: model.spec_string(),
        e_fs_kinetic: fs.kinetic,
        e_fs_interaction: fs.interaction,
        e_corr_bos: sums.bos.value,
        e_corr_ex: sums.ex.value,
        error_functional: err.value,
        error_functional_halfwidth: err.half_width,
        bos_tail: sums.bos.half_width,
        ex_tail: sums.ex.half_width,
        diagnostics: sums.diagnostics,
        per_k,
    })
}

/// Least-squares fit `e_corr_bos ≈ a·k_F log k_F + b·k_F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub a: f64,
    pub b: f64,
    pub residual: f64,
}

pub fn fit_scaling(reports: &[EnergyReport]) -> Result<ScalingFit> {
    fit_scaling_points(&reports.iter().map(|r| (r.k_f, r.e_corr_bos)).collect::<Vec<_>>())
}

pub fn fit_scaling_points(points: &[(f64, f64)]) -> Result<ScalingFit> {
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(invalid("scaling fit needs at least two distinct k_F values"));
    }
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(k, e) in points {
        let x1 = k * k.ln();
        let x2 = k;
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        r1 += x1 * e;
        r2 += x2 * e;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() <= 1e-12 * s11 * s22 {
        return Err(invalid("scaling fit design matrix is rank deficient"));
    }
    let a = (r1 * s22 - r2 * s12) / det;
    let b = (s11 * r2 - s12 * r1) / det;
    let residual = points
        .iter()
        .map(|&(k, e)| (e - a * k * k.ln() - b * k).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(ScalingFit { a, b, residual })
}

/// `(2/π)∫₀^∞ (Σ_p λ_p/(λ_p² + t²))² dt` against `Σ_{p,q} 1/(λ_p + λ_q)`.
pub fn quadratic_expansion_check(lune: &Lune) -> Result<BoundReport> {
    let spec = lune.spectrum();
    let quad = QuadratureSpec { rel_tol: 1e-12, abs_tol: 0.0, max_subdivisions: 400 };
    let lhs = integrate_half_line(
        |t| {
            let t2 = t * t;
            let s: f64 = spec.iter().map(|(l, m)| *m as f64 * l / (l * l + t2)).sum();
            s * s
        },
        lune.lambda_min(),
        &quad,
    )?
    .value
        * 2.0
        / PI;
    let mut rhs = Neumaier::new();
    for (li, mi) in &spec {
        for (lj, mj) in &spec {
            rhs.add((*mi * *mj) as f64 / (li + lj));
        }
    }
    let rhs = rhs.total();
    let rel = ((lhs - rhs) / rhs).abs();
    Ok(BoundReport {
        name: format!("quadratic expansion identity at k={}", lune.k),
        max_violation: rel,
        location: None,
        pass: rel <= 1e-8,
    })
}
