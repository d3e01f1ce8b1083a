use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lattice::{fermi_ball, lune, FermiBall, LatticeVector, Lune};

pub const DEFAULT_MODE_CAP: usize = 20;

/// Occupation masks are `u64`.
pub const HARD_MODE_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Hole,
    Particle,
}

/// `B_F ∪ ⋃_k L_k` for a finite, inversion-symmetric list of `k`.
#[derive(Debug, Clone)]
pub struct ModeSet {
    pub k_f: f64,
    /// Sorted, closed under `k → −k`.
    pub k_list: Vec<LatticeVector>,
    /// Lexicographically sorted; this is also the Jordan–Wigner order.
    pub modes: Vec<LatticeVector>,
    pub kinds: Vec<ModeKind>,
    pub ball: FermiBall,
    /// `lunes[i]` belongs to `k_list[i]`.
    pub lunes: Vec<Lune>,
}

impl ModeSet {
    pub fn build(k_f: f64, k_list: &[LatticeVector]) -> Result<Self> {
        Self::build_with_cap(k_f, k_list, DEFAULT_MODE_CAP)
    }

    pub fn build_with_cap(k_f: f64, k_list: &[LatticeVector], cap: usize) -> Result<Self> {
        if cap > HARD_MODE_LIMIT {
            return Err(invalid(format!("mode cap {cap} exceeds {HARD_MODE_LIMIT}")));
        }
        let mut ks = BTreeSet::new();
        for k in k_list {
            if k.is_zero() {
                return Err(invalid("k = 0 is not an admissible momentum transfer"));
            }
            ks.insert(*k);
            ks.insert(-*k);
        }
        if ks.is_empty() {
            return Err(invalid("empty k list"));
        }
        let ball = fermi_ball(k_f)?;
        let k_list: Vec<LatticeVector> = ks.into_iter().collect();
        let lunes = k_list.iter().map(|k| lune(&ball, *k)).collect::<Result<Vec<_>>>()?;
        let mut set: BTreeSet<LatticeVector> = ball.points.iter().copied().collect();
        for l in &lunes {
            set.extend(l.points.iter().copied());
        }
        if set.len() > cap {
            return Err(Error::ResourceLimit(format!(
                "mode set has {} modes, cap is {cap} (k_F = {k_f}, {} momenta)",
                set.len(),
                k_list.len()
            )));
        }
        let modes: Vec<LatticeVector> = set.into_iter().collect();
        let kinds = modes.iter().map(|p| if ball.contains(p) { ModeKind::Hole } else { ModeKind::Particle }).collect();
        Ok(Self { k_f, k_list, modes, kinds, ball, lunes })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn n_holes(&self) -> usize {
        self.ball.n()
    }

    pub fn index_of(&self, p: &LatticeVector) -> Option<usize> {
        self.modes.binary_search(p).ok()
    }

    pub fn index(&self, p: &LatticeVector) -> Result<usize> {
        self.index_of(p).ok_or_else(|| invalid(format!("{p} is not in the mode set")))
    }

    pub fn is_hole(&self, i: usize) -> bool {
        self.kinds[i] == ModeKind::Hole
    }

    pub fn holes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.is_hole(i))
    }

    pub fn particles(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.is_hole(i))
    }

    pub fn contains(&self, p: &LatticeVector) -> bool {
        self.index_of(p).is_some()
    }

    /// Occupation mask of `ψ_FS`.
    pub fn fermi_mask(&self) -> u64 {
        self.holes().fold(0u64, |m, i| m | (1u64 << i))
    }

    pub fn k_index(&self, k: &LatticeVector) -> Option<usize> {
        self.k_list.binary_search(k).ok()
    }

    /// Position of `−k` in `k_list`.
    pub fn mirror_k(&self, ki: usize) -> usize {
        self.k_index(&-self.k_list[ki]).expect("k list is inversion symmetric")
    }

    /// True when every particle–hole difference is a listed momentum, so
    /// that sums over `k` of pair operators see every pair in the set.
    pub fn pair_closed(&self) -> bool {
        self.particles().all(|p| self.holes().all(|h| self.k_index(&(self.modes[p] - self.modes[h])).is_some()))
    }
}
