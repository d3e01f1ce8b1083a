//! Integer momenta, the Fermi ball and its lunes.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::ops::{Add, Neg, Sub};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::Neumaier;

/// A point of ℤ³. Ordering is lexicographic in `(x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub struct LatticeVector {
    pub x: i64,
    pub y: i64,
    pub z: i64,
}

impl LatticeVector {
    pub const ZERO: Self = Self { x: 0, y: 0, z: 0 };

    pub const fn new(x: i64, y: i64, z: i64) -> Self {
        Self { x, y, z }
    }

    pub fn norm2(&self) -> i64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        (self.norm2() as f64).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    pub fn as_array(&self) -> [i64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[i64; 3]> for LatticeVector {
    fn from(a: [i64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl Add for LatticeVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for LatticeVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for LatticeVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

/// `true` iff `norm2 ≤ k_F²` for the exact real value of the `f64` `k_F`.
///
/// `k_F²` is carried as an unevaluated sum `hi + lo` (error-free product), so
/// points lying on the sphere are classified exactly.
pub fn within_radius(norm2: i64, k_f: f64) -> bool {
    let hi = k_f * k_f;
    let lo = k_f.mul_add(k_f, -hi);
    let n = norm2 as f64;
    if n < hi {
        return true;
    }
    if n > hi {
        // n - hi is exact here (Sterbenz) whenever it could matter
        return n - hi <= lo;
    }
    lo >= 0.0
}

fn check_kf(k_f: f64) -> Result<()> {
    if !k_f.is_finite() || k_f <= 0.0 {
        return Err(invalid(format!("k_F must be finite and positive, got {k_f}")));
    }
    Ok(())
}

/// Integer points of the closed ball of radius `k_F`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FermiBall {
    pub k_f: f64,
    pub points: Vec<LatticeVector>,
}

impl FermiBall {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn contains(&self, p: &LatticeVector) -> bool {
        within_radius(p.norm2(), self.k_f)
    }

    /// Integer bound on the coordinates of any ball point.
    pub fn coord_bound(&self) -> i64 {
        self.k_f.floor() as i64 + 1
    }

    pub fn kinetic(&self) -> i64 {
        self.points.iter().map(|p| p.norm2()).sum()
    }
}

pub fn fermi_ball(k_f: f64) -> Result<FermiBall> {
    check_kf(k_f)?;
    let r = k_f.floor() as i64 + 1;
    let mut points = Vec::new();
    for x in -r..=r {
        for y in -r..=r {
            for z in -r..=r {
                let p = LatticeVector::new(x, y, z);
                if within_radius(p.norm2(), k_f) {
                    points.push(p);
                }
            }
        }
    }
    Ok(FermiBall { k_f, points })
}

/// `λ_{k,p} = ½(|p|² − |p−k|²)`.
pub fn lambda(k: LatticeVector, p: LatticeVector) -> f64 {
    0.5 * (p.norm2() - (p - k).norm2()) as f64
}

/// The lune `L_k = (B_F + k) \ B_F` with its excitation energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lune {
    pub k_f: f64,
    pub k: LatticeVector,
    pub points: Vec<LatticeVector>,
    pub lambdas: Vec<f64>,
}

impl Lune {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, p: &LatticeVector) -> Option<usize> {
        self.points.binary_search(p).ok()
    }

    /// Index of `−p` in `L_{−k}` for the point at index `i` of `L_k`.
    pub fn mirror_index(&self, i: usize) -> usize {
        self.len() - 1 - i
    }

    /// The mirrored lune `L_{−k}`.
    pub fn mirror(&self) -> Lune {
        let points: Vec<_> = self.points.iter().rev().map(|p| -*p).collect();
        let lambdas: Vec<_> = self.lambdas.iter().rev().copied().collect();
        Lune { k_f: self.k_f, k: -self.k, points, lambdas }
    }

    /// Distinct excitation energies with multiplicities, ascending.
    pub fn spectrum(&self) -> Vec<(f64, usize)> {
        let mut l = self.lambdas.clone();
        l.sort_by(f64::total_cmp);
        let mut out: Vec<(f64, usize)> = Vec::new();
        for x in l {
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 += 1,
                _ => out.push((x, 1)),
            }
        }
        out
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambdas.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn lune(ball: &FermiBall, k: LatticeVector) -> Result<Lune> {
    if k.is_zero() {
        return Err(invalid("lune requires k ≠ 0"));
    }
    let mut points = Vec::new();
    let mut lambdas = Vec::new();
    for &h in &ball.points {
        let p = h + k;
        if !ball.contains(&p) {
            points.push(p);
            lambdas.push(lambda(k, p));
        }
    }
    Ok(Lune { k_f: ball.k_f, k, points, lambdas })
}

/// `|L_k|` without materializing the lune.
pub fn lune_size(ball: &FermiBall, k: LatticeVector) -> usize {
    ball.points.iter().filter(|h| !ball.contains(&(**h + k))).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerSum {
    pub value: f64,
    /// `false` when β lies outside `[−1, 0]`, where no lattice bound is claimed.
    pub beta_in_range: bool,
}

/// `Σ_{p∈L_k} λ_{k,p}^β`.
pub fn lune_power_sum(lune: &Lune, beta: f64) -> PowerSum {
    let mut acc = Neumaier::new();
    for &l in &lune.lambdas {
        acc.add(l.powf(beta));
    }
    PowerSum { value: acc.total(), beta_in_range: (-1.0..=0.0).contains(&beta) }
}

/// All nonzero `k` with `|k| ≤ radius`, lexicographically ordered.
pub fn k_vectors_within(radius: f64) -> Vec<LatticeVector> {
    let r = radius.floor() as i64;
    let mut out = Vec::new();
    for x in -r..=r {
        for y in -r..=r {
            for z in -r..=r {
                let k = LatticeVector::new(x, y, z);
                if !k.is_zero() && within_radius(k.norm2(), radius) {
                    out.push(k);
                }
            }
        }
    }
    out
}

/// Lune cache keyed by the exact bits of `k_F` and `k`, optionally backed by
/// CSV files in a directory.
#[derive(Debug, Default)]
pub struct LuneCache {
    dir: Option<PathBuf>,
    map: Mutex<HashMap<(u64, LatticeVector), Arc<Lune>>>,
    loaded: Mutex<std::collections::HashSet<u64>>,
}

impl LuneCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()), ..Self::default() }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn file_for(dir: &Path, k_f: f64) -> PathBuf {
        dir.join(format!("lunes_kf_{:016x}.csv", k_f.to_bits()))
    }

    fn ensure_loaded(&self, k_f: f64) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let mut loaded = self.loaded.lock().unwrap();
        if !loaded.insert(k_f.to_bits()) {
            return Ok(());
        }
        let path = Self::file_for(dir, k_f);
        if !path.exists() {
            return Ok(());
        }
        let file = std::io::BufReader::new(std::fs::File::open(&path)?);
        let lunes = read_lunes_csv(file, k_f)?;
        let mut map = self.map.lock().unwrap();
        for l in lunes {
            map.insert((k_f.to_bits(), l.k), Arc::new(l));
        }
        Ok(())
    }

    pub fn get(&self, ball: &FermiBall, k: LatticeVector) -> Result<Arc<Lune>> {
        self.ensure_loaded(ball.k_f)?;
        let key = (ball.k_f.to_bits(), k);
        if let Some(l) = self.map.lock().unwrap().get(&key) {
            return Ok(l.clone());
        }
        let l = Arc::new(lune(ball, k)?);
        self.map.lock().unwrap().insert(key, l.clone());
        Ok(l)
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Write every cached lune for `k_f` to the cache directory.
    pub fn persist(&self, k_f: f64) -> Result<Option<PathBuf>> {
        let Some(dir) = &self.dir else { return Ok(None) };
        std::fs::create_dir_all(dir)?;
        let map = self.map.lock().unwrap();
        let mut lunes: Vec<&Lune> = map.iter().filter(|(key, _)| key.0 == k_f.to_bits()).map(|(_, l)| l.as_ref()).collect();
        lunes.sort_by_key(|l| l.k);
        let path = Self::file_for(dir, k_f);
        let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
        write_lunes_csv(&mut w, lunes)?;
        w.flush()?;
        Ok(Some(path))
    }
}

pub const LUNE_CSV_HEADER: &str = "kx,ky,kz,px,py,pz,lambda";

pub fn write_lunes_csv<'a, W: Write>(w: &mut W, lunes: impl IntoIterator<Item = &'a Lune>) -> Result<()> {
    writeln!(w, "{LUNE_CSV_HEADER}")?;
    for l in lunes {
        for (p, lam) in l.points.iter().zip(&l.lambdas) {
            writeln!(w, "{},{},{},{},{},{},{}", l.k.x, l.k.y, l.k.z, p.x, p.y, p.z, lam)?;
        }
    }
    Ok(())
}

/// Parse lunes written by [`write_lunes_csv`]; rows for one `k` must be contiguous.
pub fn read_lunes_csv<R: BufRead>(r: R, k_f: f64) -> Result<Vec<Lune>> {
    let mut out: Vec<Lune> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if lineno == 0 {
            if line.trim() != LUNE_CSV_HEADER {
                return Err(Error::Parse(format!("unexpected lune CSV header {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Parse(format!("line {}: expected 7 fields", lineno + 1)));
        }
        let ints: Vec<i64> = f[..6]
            .iter()
            .map(|s| s.trim().parse::<i64>().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1))))
            .collect::<Result<_>>()?;
        let lam: f64 = f[6].trim().parse().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        let k = LatticeVector::new(ints[0], ints[1], ints[2]);
        let p = LatticeVector::new(ints[3], ints[4], ints[5]);
        match out.last_mut() {
            Some(l) if l.k == k => {
                l.points.push(p);
                l.lambdas.push(lam);
            }
            _ => out.push(Lune { k_f, k, points: vec![p], lambdas: vec![lam] }),
        }
    }
    Ok(out)
}
