//! Dense symmetric helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

/// Eigendecomposition `M = Q diag(values) Qᵀ` with eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        if n == 0 {
            return Self { values: DVector::zeros(0), vectors: DMatrix::zeros(0, 0) };
        }
        let sym = symmetrize(m);
        // nalgebra's QR iteration stops early on strongly degenerate spectra
        // (relative reconstruction errors near 1e-5 on lune matrices), so the
        // decomposition is delegated to faer.
        let a = faer::Mat::<f64>::from_fn(n, n, |i, j| sym[(i, j)]);
        let evd = a.self_adjoint_eigen(faer::Side::Lower).expect("symmetric eigendecomposition converges");
        let s = evd.S().column_vector();
        let u = evd.U();
        let values = DVector::from_fn(n, |i, _| s[i]);
        let mut vectors = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
        for mut col in vectors.column_iter_mut() {
            // fix the sign so the largest component is positive
            let (imax, _) = col.iter().enumerate().fold((0, 0.0f64), |b, (k, x)| if x.abs() > b.1 { (k, x.abs()) } else { b });
            if col[imax] < 0.0 {
                col.neg_mut();
            }
        }
        Self { values, vectors }
    }

    /// `Q diag(f(λ)) Qᵀ`.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> DMatrix<f64> {
        let q = &self.vectors;
        let mut scaled = q.clone();
        for (j, &l) in self.values.iter().enumerate() {
            let s = f(l);
            scaled.column_mut(j).scale_mut(s);
        }
        symmetrize(&(scaled * q.transpose()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn anticommutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b + b * a
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Spectral norm of a symmetric matrix.
pub fn sym_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let e = SymEigen::new(m);
    e.min().abs().max(e.max().abs())
}

/// Exact eigenvalue shifts of a rank-one update of a diagonal matrix.
///
/// Given `D = diag(d)` and `z`, returns `μ_i − d_i` summed as
/// `Σ_i (√μ_i − √d_i)`, i.e. `tr((D + zzᵀ)^{1/2}) − tr(D^{1/2})`, for `d ≥ 0`.
/// Degenerate diagonal entries are merged first; each root of the secular
/// equation `1 + Σ ζ_j/(d_j − μ) = 0` is bracketed in its interlacing interval
/// and located by bisection on the shift `μ − d_j`, which keeps full relative
/// accuracy even when the update is tiny compared with `D`.
pub fn rank_one_sqrt_trace_shift(d: &[f64], z: &[f64]) -> f64 {
    assert_eq!(d.len(), z.len());
    let mut pairs: Vec<(f64, f64)> = d.iter().copied().zip(z.iter().map(|x| x * x)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for (di, zi) in pairs {
        match groups.last_mut() {
            Some(last) if last.0 == di => last.1 += zi,
            _ => groups.push((di, zi)),
        }
    }
    groups.retain(|g| g.1 > 0.0);
    if groups.is_empty() {
        return 0.0;
    }
    let total_weight: f64 = groups.iter().map(|g| g.1).sum();
    let m = groups.len();
    let mut acc = super::Neumaier::new();
    for j in 0..m {
        let dj = groups[j].0;
        let upper = if j + 1 < m { groups[j + 1].0 - dj } else { total_weight };
        let secular = |delta: f64| -> f64 {
            let mut s = super::Neumaier::new();
            s.add(1.0);
            for (i, g) in groups.iter().enumerate() {
                let gap = if i == j { -delta } else { (g.0 - dj) - delta };
                s.add(g.1 / gap);
            }
            s.total()
        };
        let (mut lo, mut hi) = (0.0f64, upper);
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if secular(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let delta = 0.5 * (lo + hi);
        acc.add(delta / ((dj + delta).sqrt() + dj.sqrt()));
    }
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_reconstructs() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 1.0]);
        let e = SymEigen::new(&m);
        let back = e.apply(|x| x);
        assert!(max_abs(&(back - &m)) < 1e-13);
        assert!(e.values[0] <= e.values[1] && e.values[1] <= e.values[2]);
    }

    #[test]
    fn secular_trace_matches_dense() {
        let d = [0.25, 0.25, 1.0, 2.25, 4.0];
        let z = [0.3, 0.1, 0.5, 0.2, 0.7];
        let shift = rank_one_sqrt_trace_shift(&d, &z);
        let zv = DVector::from_row_slice(&z);
        let m = DMatrix::from_diagonal(&DVector::from_row_slice(&d)) + &zv * zv.transpose();
        let dense: f64 = SymEigen::new(&m).values.iter().map(|x| x.sqrt()).sum::<f64>() - d.iter().map(|x| x.sqrt()).sum::<f64>();
        assert!((shift - dense).abs() < 1e-13, "{shift} vs {dense}");
    }

    #[test]
    fn secular_trace_scalar() {
        // √(1 + 2) − 1
        let s = rank_one_sqrt_trace_shift(&[1.0], &[2f64.sqrt()]);
        assert!((s - (3f64.sqrt() - 1.0)).abs() < 1e-15);
    }
}
