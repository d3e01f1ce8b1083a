use nalgebra::DVector;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{invalid, Error, Result};

/// Largest sector we are willing to enumerate.
pub const MAX_SECTOR_DIM: usize = 2_000_000;

/// All occupation masks over `m` modes with popcount `n`, ascending.
#[derive(Debug, Clone)]
pub struct FockSector {
    pub n: usize,
    pub m: usize,
    states: Vec<u64>,
}

fn binomial(m: usize, n: usize) -> u128 {
    let n = n.min(m - n);
    (0..n).fold(1u128, |acc, i| acc * (m - i) as u128 / (i + 1) as u128)
}

impl FockSector {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m > 64 {
            return Err(invalid(format!("{m} modes do not fit a 64-bit mask")));
        }
        if n > m {
            return Err(invalid(format!("particle number {n} exceeds mode count {m}")));
        }
        let dim = binomial(m, n);
        if dim > MAX_SECTOR_DIM as u128 {
            return Err(Error::ResourceLimit(format!("sector C({m},{n}) = {dim} exceeds {MAX_SECTOR_DIM}")));
        }
        let mut states = Vec::with_capacity(dim as usize);
        if n == 0 {
            states.push(0);
        } else {
            // Gosper's hack
            let top: u128 = 1u128 << m;
            let mut s: u128 = (1u128 << n) - 1;
            while s < top {
                states.push(s as u64);
                let c = s & s.wrapping_neg();
                let r = s + c;
                s = (((r ^ s) >> 2) / c) | r;
            }
        }
        Ok(Self { n, m, states })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, i: usize) -> u64 {
        self.states[i]
    }

    pub fn index(&self, mask: u64) -> Option<usize> {
        self.states.binary_search(&mask).ok()
    }

    /// Unit vector on a basis state.
    pub fn basis_vector(&self, mask: u64) -> Result<DVector<f64>> {
        let i = self.index(mask).ok_or_else(|| invalid(format!("mask {mask:#b} is not in the sector")))?;
        let mut v = DVector::zeros(self.dim());
        v[i] = 1.0;
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

impl Ladder {
    fn mode(self) -> usize {
        match self {
            Ladder::Create(i) | Ladder::Annihilate(i) => i,
        }
    }

    pub fn adjoint(self) -> Self {
        match self {
            Ladder::Create(i) => Ladder::Annihilate(i),
            Ladder::Annihilate(i) => Ladder::Create(i),
        }
    }
}

/// Adjoint of a product: reversed order, each factor conjugated.
pub fn adjoint_string(ops: &[Ladder]) -> Vec<Ladder> {
    ops.iter().rev().map(|o| o.adjoint()).collect()
}

/// `(−1)^{#occupied modes preceding i}`.
pub fn jw_sign(mask: u64, i: usize) -> f64 {
    let below = mask & ((1u64 << i) - 1);
    if below.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Applies a product of ladder operators (rightmost first) to a basis state.
pub fn apply_string(ops: &[Ladder], mask: u64) -> Option<(f64, u64)> {
    let mut s = mask;
    let mut sign = 1.0;
    for op in ops.iter().rev() {
        let bit = 1u64 << op.mode();
        match op {
            Ladder::Annihilate(i) => {
                if s & bit == 0 {
                    return None;
                }
                sign *= jw_sign(s, *i);
                s &= !bit;
            }
            Ladder::Create(i) => {
                if s & bit != 0 {
                    return None;
                }
                sign *= jw_sign(s, *i);
                s |= bit;
            }
        }
    }
    Some((sign, s))
}

fn number_change(ops: &[Ladder]) -> isize {
    ops.iter().map(|o| if matches!(o, Ladder::Create(_)) { 1 } else { -1 }).sum()
}

/// A linear map between two particle-number sectors.
#[derive(Debug, Clone)]
pub struct SectorOperator {
    pub domain: usize,
    pub codomain: usize,
    pub matrix: CsrMatrix<f64>,
}

fn check_string(domain: &FockSector, codomain: &FockSector, ops: &[Ladder]) -> Result<()> {
    if domain.m != codomain.m {
        return Err(invalid("sectors over different mode sets"));
    }
    if let Some(o) = ops.iter().find(|o| o.mode() >= domain.m) {
        return Err(invalid(format!("mode index {} out of range", o.mode())));
    }
    if domain.n as isize + number_change(ops) != codomain.n as isize {
        return Err(invalid("ladder string does not map the domain sector to the codomain sector"));
    }
    Ok(())
}

/// Matrix of a single ladder string.
pub fn string_operator(domain: &FockSector, codomain: &FockSector, ops: &[Ladder]) -> Result<SectorOperator> {
    string_sum_operator(domain, codomain, &[(1.0, ops.to_vec())])
}

/// Matrix of `Σ_j a_j · string_j`.
pub fn string_sum_operator(domain: &FockSector, codomain: &FockSector, terms: &[(f64, Vec<Ladder>)]) -> Result<SectorOperator> {
    for (_, ops) in terms {
        check_string(domain, codomain, ops)?;
    }
    let mut coo = CooMatrix::new(codomain.dim(), domain.dim());
    for (col, &s) in domain.states().iter().enumerate() {
        for (a, ops) in terms {
            if *a == 0.0 {
                continue;
            }
            if let Some((sign, t)) = apply_string(ops, s) {
                let row = codomain.index(t).expect("string image stays in the codomain sector");
                coo.push(row, col, a * sign);
            }
        }
    }
    Ok(SectorOperator { domain: domain.n, codomain: codomain.n, matrix: CsrMatrix::from(&coo) })
}

/// `Σ_j a_j · string_j` applied to a vector without forming the matrix.
pub fn apply_string_sum(domain: &FockSector, codomain: &FockSector, terms: &[(f64, Vec<Ladder>)], psi: &DVector<f64>) -> Result<DVector<f64>> {
    if psi.len() != domain.dim() {
        return Err(invalid("vector length does not match the domain sector"));
    }
    for (_, ops) in terms {
        check_string(domain, codomain, ops)?;
    }
    let mut out = DVector::zeros(codomain.dim());
    for (col, &s) in domain.states().iter().enumerate() {
        let x = psi[col];
        if x == 0.0 {
            continue;
        }
        for (a, ops) in terms {
            if let Some((sign, t)) = apply_string(ops, s) {
                out[codomain.index(t).expect("image in codomain")] += a * sign * x;
            }
        }
    }
    Ok(out)
}
