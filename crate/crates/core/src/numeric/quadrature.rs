//! Gauss–Kronrod and Gauss–Legendre quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 0.0, max_subdivisions: 200 }
    }
}

impl QuadratureSpec {
    pub fn with_rel_tol(rel_tol: f64) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol <= 1e-4) {
            return Err(Error::InvalidArgument(format!(
                "quadrature rel_tol must lie in (0, 1e-4], got {rel_tol}"
            )));
        }
        Ok(Self { rel_tol, ..Self::default() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub subdivisions: usize,
    pub evaluations: usize,
}

/// One 15-point Kronrod panel on `[a, b]`, returning `(kronrod, |kronrod - gauss|)`.
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err).then(other.a.total_cmp(&self.a))
    }
}

/// Adaptive bisection with 15-point Gauss–Kronrod panels on a finite interval.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<QuadResult> {
    let mut heap = BinaryHeap::new();
    let (v, e) = gk15(&mut f, a, b);
    heap.push(Panel { a, b, value: v, err: e });
    let mut subdivisions = 1;
    loop {
        let (total, err) = totals(&heap);
        if !total.is_finite() {
            return Err(Error::Numerical(format!("non-finite integrand on [{a}, {b}]")));
        }
        if err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            return Ok(QuadResult { value: total, abs_error: err, subdivisions, evaluations: 15 * (2 * subdivisions - 1) });
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::Numerical(format!(
                "adaptive quadrature did not converge after {subdivisions} panels: value {total:e}, error estimate {err:e}"
            )));
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        heap.push(Panel { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, err: e2 });
        subdivisions += 1;
    }
}

fn totals(heap: &BinaryHeap<Panel>) -> (f64, f64) {
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut v = super::Neumaier::new();
    let mut e = super::Neumaier::new();
    for p in panels {
        v.add(p.value);
        e.add(p.err);
    }
    (v.total(), e.total())
}

/// Integral over `[0, ∞)` after the substitution `t = scale·u/(1−u)`.
pub fn integrate_half_line<F: FnMut(f64) -> f64>(mut f: F, scale: f64, spec: &QuadratureSpec) -> Result<QuadResult> {
    assert!(scale > 0.0, "half-line scale must be positive");
    integrate(
        |u| {
            if u >= 1.0 {
                return 0.0;
            }
            let om = 1.0 - u;
            let t = scale * u / om;
            let v = f(t);
            if v == 0.0 {
                0.0
            } else {
                v * scale / (om * om)
            }
        },
        0.0,
        1.0,
        spec,
    )
}

/// Vector-valued adaptive integration on a finite interval.
///
/// The error estimate is the largest componentwise Kronrod–Gauss difference and
/// convergence is tested against the largest component of the running integral.
pub fn integrate_vec<F: FnMut(f64) -> Vec<f64>>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    let mut panel = |a: f64, b: f64| -> (Vec<f64>, Vec<f64>) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut rk: Vec<f64> = fc.iter().map(|x| x * WGK[7]).collect();
        let mut rg: Vec<f64> = fc.iter().map(|x| x * WG[3]).collect();
        for j in 0..7 {
            let dx = h * XGK[j];
            let lo = f(c - dx);
            let hi = f(c + dx);
            for i in 0..rk.len() {
                let s = lo[i] + hi[i];
                rk[i] += WGK[j] * s;
                if j % 2 == 1 {
                    rg[i] += WG[j / 2] * s;
                }
            }
        }
        let err = rk.iter().zip(&rg).map(|(k, g)| ((k - g) * h).abs()).collect();
        (rk.into_iter().map(|k| k * h).collect(), err)
    };
    let mut panels = vec![(a, b, panel(a, b))];
    loop {
        let n = panels[0].2 .0.len();
        let mut total = vec![0.0; n];
        let mut err = vec![0.0; n];
        for (_, _, (v, e)) in &panels {
            for i in 0..n {
                total[i] += v[i];
                err[i] += e[i];
            }
        }
        let scale = total.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let worst_err = err.iter().fold(0.0f64, |m, x| m.max(*x));
        if worst_err <= spec.abs_tol.max(spec.rel_tol * scale) {
            return Ok(total);
        }
        if panels.len() >= spec.max_subdivisions {
            return Err(Error::Numerical(format!(
                "vector quadrature did not converge after {} panels (error {worst_err:e}, scale {scale:e})",
                panels.len()
            )));
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.2 .1.iter().fold(0.0f64, |m, x| m.max(*x))))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let (pa, pb, _) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        let left = panel(pa, mid);
        let right = panel(mid, pb);
        panels.push((pa, mid, left));
        panels.push((mid, pb, right));
        panels.sort_by(|x, y| x.0.total_cmp(&y.0));
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton iteration
/// on the Legendre recurrence. Nodes are returned in ascending order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    x.into_iter().zip(w).map(|(xi, wi)| (c + h * xi, h * wi)).collect()
}
