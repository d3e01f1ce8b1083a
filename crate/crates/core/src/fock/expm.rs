use nalgebra::DMatrix;

use super::ops::{one_norm, to_dense, Csr};

/// Sectors up to this size are exponentiated densely.
pub const DENSE_LIMIT: usize = 4000;

/// Target size of the truncation remainder relative to the running sum.
pub const TAYLOR_TOL: f64 = 1e-16;

const MAX_TERMS: usize = 80;

/// `e^{tA}` applied to blocks of vectors.
#[derive(Debug, Clone)]
pub struct ExpAction {
    sparse: Csr,
    dense: Option<DMatrix<f64>>,
    norm: f64,
}

impl ExpAction {
    pub fn new(a: &Csr) -> Self {
        Self::with_dense_limit(a, DENSE_LIMIT)
    }

    pub fn with_dense_limit(a: &Csr, limit: usize) -> Self {
        let dense = (a.nrows() <= limit).then(|| to_dense(a));
        Self { sparse: a.clone(), dense, norm: one_norm(a) }
    }

    pub fn dim(&self) -> usize {
        self.sparse.nrows()
    }

    pub fn is_dense(&self) -> bool {
        self.dense.is_some()
    }

    /// `e^{tA}` as a dense matrix (scaling and squaring).
    pub fn matrix(&self, t: f64) -> Option<DMatrix<f64>> {
        self.dense.as_ref().map(|d| (d * t).exp())
    }

    pub fn apply(&self, t: f64, block: &DMatrix<f64>) -> DMatrix<f64> {
        if t == 0.0 || self.norm == 0.0 {
            return block.clone();
        }
        match &self.dense {
            Some(d) => (d * t).exp() * block,
            None => self.taylor(t, block),
        }
    }

    /// Truncated Taylor series in substeps with `|t|‖A‖₁/s ≤ ½`.
    pub fn taylor(&self, t: f64, block: &DMatrix<f64>) -> DMatrix<f64> {
        let steps = ((t.abs() * self.norm) / 0.5).ceil().max(1.0) as usize;
        let h = t / steps as f64;
        let mut x = block.clone();
        for _ in 0..steps {
            let mut term = x.clone();
            let mut acc = x.clone();
            for j in 1..=MAX_TERMS {
                term = (&self.sparse * &term) * (h / j as f64);
                acc += &term;
                let tn = term.amax();
                if tn <= TAYLOR_TOL * acc.amax() || tn == 0.0 {
                    break;
                }
            }
            x = acc;
        }
        x
    }
}
