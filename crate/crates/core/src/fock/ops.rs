//! Small helpers on sparse sector matrices.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

pub type Csr = CsrMatrix<f64>;

pub fn zeros(dim: usize) -> Csr {
    Csr::zeros(dim, dim)
}

pub fn identity(dim: usize) -> Csr {
    Csr::identity(dim)
}

pub fn diagonal(d: &[f64]) -> Csr {
    let mut coo = CooMatrix::new(d.len(), d.len());
    for (i, x) in d.iter().enumerate() {
        if *x != 0.0 {
            coo.push(i, i, *x);
        }
    }
    Csr::from(&coo)
}

/// `Σ a_j M_j` in a single pass.
pub fn combine<'a>(nrows: usize, ncols: usize, terms: impl IntoIterator<Item = (f64, &'a Csr)>) -> Csr {
    let mut coo = CooMatrix::new(nrows, ncols);
    for (a, m) in terms {
        if a == 0.0 {
            continue;
        }
        for (i, j, x) in m.triplet_iter() {
            coo.push(i, j, a * x);
        }
    }
    Csr::from(&coo)
}

pub fn scale(m: &Csr, a: f64) -> Csr {
    m * a
}

pub fn commutator(a: &Csr, b: &Csr) -> Csr {
    &(a * b) - &(b * a)
}

pub fn anticommutator(a: &Csr, b: &Csr) -> Csr {
    &(a * b) + &(b * a)
}

pub fn transpose(m: &Csr) -> Csr {
    m.transpose()
}

/// Largest absolute entry.
pub fn max_abs(m: &Csr) -> f64 {
    m.values().iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

/// Maximum absolute column sum, an upper bound for the 2-norm of a symmetric
/// or antisymmetric matrix.
pub fn one_norm(m: &Csr) -> f64 {
    let mut cols = vec![0.0; m.ncols()];
    for (_, j, x) in m.triplet_iter() {
        cols[j] += x.abs();
    }
    cols.into_iter().fold(0.0, f64::max)
}

pub fn to_dense(m: &Csr) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, j, x) in m.triplet_iter() {
        d[(i, j)] += x;
    }
    d
}

pub fn apply(m: &Csr, block: &DMatrix<f64>) -> DMatrix<f64> {
    m * block
}

pub fn apply_vec(m: &Csr, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(m.nrows());
    for (i, j, x) in m.triplet_iter() {
        out[i] += x * v[j];
    }
    out
}

/// `‖a − b‖_max / max(1, ‖a‖_max, ‖b‖_max)`.
pub fn relative_difference(a: &Csr, b: &Csr) -> f64 {
    let scale = 1f64.max(max_abs(a)).max(max_abs(b));
    max_abs(&(a - b)) / scale
}

pub fn is_diagonal(m: &Csr) -> bool {
    m.triplet_iter().all(|(i, j, x)| i == j || *x == 0.0)
}

pub fn diagonal_entries(m: &Csr) -> Vec<f64> {
    let mut d = vec![0.0; m.nrows().min(m.ncols())];
    for (i, j, x) in m.triplet_iter() {
        if i == j {
            d[i] += x;
        }
    }
    d
}

/// `max |M + Mᵀ|` relative to `max |M|`.
pub fn antisymmetry_defect(m: &Csr) -> f64 {
    let s = &m.transpose() + m;
    max_abs(&s) / 1f64.max(max_abs(m))
}
