//! Interaction potentials given by their Fourier coefficients `V̂_k`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{within_radius, LatticeVector};
use crate::numeric::quadrature::{integrate_half_line, QuadratureSpec};
use crate::numeric::Neumaier;

/// A finite table of coefficients, symmetric under `k → −k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TablePotential {
    pub entries: BTreeMap<LatticeVector, f64>,
    pub source: Option<PathBuf>,
    /// Notes produced while enforcing `V̂_k = V̂_{−k}` and `V̂_0 = 0`.
    pub warnings: Vec<String>,
}

#[derive(Debug, Deserialize, Serialize)]
struct TableDoc {
    entries: Vec<TableEntry>,
}

#[derive(Debug, Deserialize, Serialize)]
struct TableEntry {
    k: [i64; 3],
    v: f64,
}

impl TablePotential {
    /// Build a table from raw entries. A missing mirror entry is completed by
    /// copying, two different mirror entries are replaced by their average.
    pub fn new<I: IntoIterator<Item = (LatticeVector, f64)>>(raw: I) -> Result<Self> {
        let mut given: BTreeMap<LatticeVector, f64> = BTreeMap::new();
        let mut warnings = Vec::new();
        for (k, v) in raw {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(format!("table coefficient at {k} must be finite and nonnegative, got {v}")));
            }
            if k.is_zero() {
                if v != 0.0 {
                    warnings.push(format!("dropped V̂_0 = {v}; the zero mode is always 0"));
                }
                continue;
            }
            if given.insert(k, v).is_some() {
                return Err(invalid(format!("duplicate table entry for {k}")));
            }
        }
        let mut entries = BTreeMap::new();
        for (&k, &v) in &given {
            let value = match given.get(&-k) {
                Some(&w) if w != v => {
                    if k < -k {
                        warnings.push(format!("V̂ at {k} ({v}) and {} ({w}) differ; both set to {}", -k, 0.5 * (v + w)));
                    }
                    0.5 * (v + w)
                }
                _ => v,
            };
            if value > 0.0 {
                entries.insert(k, value);
                entries.insert(-k, value);
            }
        }
        Ok(Self { entries, source: None, warnings })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: TableDoc = serde_json::from_str(s)?;
        Self::new(doc.entries.into_iter().map(|e| (LatticeVector::from(e.k), e.v)))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut t = Self::from_json_str(&text)?;
        t.source = Some(path.to_path_buf());
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        let doc = TableDoc { entries: self.entries.iter().map(|(k, v)| TableEntry { k: k.as_array(), v: *v }).collect() };
        serde_json::to_string_pretty(&doc).expect("table serializes")
    }

    pub fn max_norm(&self) -> f64 {
        self.entries.keys().map(|k| k.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PotentialModel {
    Coulomb { g: f64 },
    Yukawa { g: f64, mu: f64 },
    Table(TablePotential),
    Zero,
}

/// Weight `w(k)` in `Σ V̂_k² w(k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    One,
    Norm,
    MinNormKf(f64),
}

impl Weight {
    fn at(&self, r: f64) -> f64 {
        match *self {
            Weight::One => 1.0,
            Weight::Norm => r,
            Weight::MinNormKf(kf) => r.min(kf),
        }
    }
}

/// A value with a symmetric uncertainty interval from tail truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
}

impl PotentialModel {
    pub fn coulomb(g: f64) -> Result<Self> {
        if !(g.is_finite() && g > 0.0) {
            return Err(invalid(format!("coulomb coupling must be positive, got {g}")));
        }
        Ok(Self::Coulomb { g })
    }

    pub fn yukawa(g: f64, mu: f64) -> Result<Self> {
        if !(g.is_finite() && g > 0.0 && mu.is_finite() && mu > 0.0) {
            return Err(invalid(format!("yukawa parameters must be positive, got g={g}, mu={mu}")));
        }
        Ok(Self::Yukawa { g, mu })
    }

    pub fn table<I: IntoIterator<Item = (LatticeVector, f64)>>(raw: I) -> Result<Self> {
        Ok(Self::Table(TablePotential::new(raw)?))
    }

    /// Parse `coulomb:g=1.0`, `yukawa:g=1.0,mu=0.5`, `table:<path>` or `none`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "none" {
            return Ok(Self::Zero);
        }
        let (kind, rest) = spec.split_once(':').ok_or_else(|| Error::Parse(format!("potential spec {spec:?} lacks ':'")))?;
        match kind {
            "table" => {
                if rest.is_empty() {
                    return Err(Error::Parse("table potential needs a path".into()));
                }
                Ok(Self::Table(TablePotential::load(Path::new(rest))?))
            }
            "coulomb" | "yukawa" => {
                let mut params = BTreeMap::new();
                for kv in rest.split(',') {
                    let (key, val) = kv.split_once('=').ok_or_else(|| Error::Parse(format!("bad parameter {kv:?}")))?;
                    let val: f64 = val.trim().parse().map_err(|_| Error::Parse(format!("bad number in {kv:?}")))?;
                    if params.insert(key.trim().to_string(), val).is_some() {
                        return Err(Error::Parse(format!("repeated parameter {key:?}")));
                    }
                }
                let take = |params: &mut BTreeMap<String, f64>, k: &str| {
                    params.remove(k).ok_or_else(|| Error::Parse(format!("{kind} potential needs {k}=")))
                };
                let model = if kind == "coulomb" {
                    Self::coulomb(take(&mut params, "g")?)?
                } else {
                    let g = take(&mut params, "g")?;
                    Self::yukawa(g, take(&mut params, "mu")?)?
                };
                if let Some(k) = params.keys().next() {
                    return Err(Error::Parse(format!("unknown parameter {k:?} for {kind}")));
                }
                Ok(model)
            }
            other => Err(Error::Parse(format!("unknown potential kind {other:?}"))),
        }
    }

    /// Canonical spec string; tables without a source path render inline.
    pub fn spec_string(&self) -> String {
        match self {
            Self::Coulomb { g } => format!("coulomb:g={g:?}"),
            Self::Yukawa { g, mu } => format!("yukawa:g={g:?},mu={mu:?}"),
            Self::Table(t) => match &t.source {
                Some(p) => format!("table:{}", p.display()),
                None => "table:<inline>".to_string(),
            },
            Self::Zero => "none".to_string(),
        }
    }

    pub fn v_hat(&self, k: LatticeVector) -> f64 {
        if k.is_zero() {
            return 0.0;
        }
        match self {
            Self::Coulomb { g } => g / k.norm2() as f64,
            Self::Yukawa { g, mu } => g / (k.norm2() as f64 + mu * mu),
            Self::Table(t) => t.entries.get(&k).copied().unwrap_or(0.0),
            Self::Zero => 0.0,
        }
    }

    /// `true` when `V̂_k` depends on `|k|` only.
    pub fn is_isotropic(&self) -> bool {
        !matches!(self, Self::Table(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Table(t) => t.entries.is_empty(),
            _ => false,
        }
    }

    /// Radius beyond which `V̂_k = 0`, if finite.
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            Self::Table(t) => Some(t.max_norm()),
            Self::Zero => Some(0.0),
            _ => None,
        }
    }

    pub fn warnings(&self) -> &[String] {
        match self {
            Self::Table(t) => &t.warnings,
            _ => &[],
        }
    }

    /// `V̂` as a function of `|k|` for the analytic models (0 for tables).
    pub fn radial(&self, r: f64) -> f64 {
        match *self {
            Self::Coulomb { g } => g / (r * r),
            Self::Yukawa { g, mu } => g / (r * r + mu * mu),
            _ => 0.0,
        }
    }

    /// Default split radius for the infinite sums.
    pub fn split_radius(&self, k_f: Option<f64>) -> f64 {
        let mut r: f64 = 64.0;
        if let Some(kf) = k_f {
            r = r.max(8.0 * kf);
        }
        if let Self::Yukawa { mu, .. } = self {
            r = r.max(2.0 * mu + 2.0);
        }
        r.ceil()
    }

    /// `Σ_{k≠0} V̂_k² w(k)` with a rigorous tail interval for the analytic models.
    pub fn sum_v2(&self, weight: Weight) -> Result<Estimate> {
        let kf = match weight {
            Weight::MinNormKf(kf) => {
                if !(kf.is_finite() && kf > 0.0) {
                    return Err(invalid(format!("k_F must be positive, got {kf}")));
                }
                Some(kf)
            }
            _ => None,
        };
        match self {
            Self::Zero => Ok(Estimate { value: 0.0, half_width: 0.0 }),
            Self::Table(t) => {
                let mut acc = Neumaier::new();
                for (k, v) in &t.entries {
                    acc.add(v * v * weight.at(k.norm()));
                }
                Ok(Estimate { value: acc.total(), half_width: 0.0 })
            }
            _ => {
                if weight == Weight::Norm {
                    return Err(Error::Numerical(
                        "Σ V̂_k²|k| diverges logarithmically for this potential; restrict the sum".into(),
                    ));
                }
                let r = self.split_radius(kf);
                let head = self.sum_v2_within(weight, r);
                let (lo, hi) = self.tail_bounds(weight, r)?;
                Ok(Estimate { value: head + 0.5 * (lo + hi), half_width: 0.5 * (hi - lo) })
            }
        }
    }

    /// Finite sum over `0 < |k| ≤ radius`.
    pub fn sum_v2_within(&self, weight: Weight, radius: f64) -> f64 {
        let r = radius.floor() as i64;
        let mut acc = Neumaier::new();
        for x in -r..=r {
            for y in -r..=r {
                for z in -r..=r {
                    let k = LatticeVector::new(x, y, z);
                    if k.is_zero() || !within_radius(k.norm2(), radius) {
                        continue;
                    }
                    let v = self.v_hat(k);
                    if v != 0.0 {
                        acc.add(v * v * weight.at(k.norm()));
                    }
                }
            }
        }
        acc.total()
    }

    fn tail_bounds(&self, weight: Weight, r: f64) -> Result<(f64, f64)> {
        radial_tail_bounds(
            |s: f64| {
                let v = self.radial(s);
                v * v * weight.at(s)
            },
            r,
        )
    }

    /// `√(Σ V̂_k² min{|k|, k_F})` with its interval half-width.
    pub fn error_term(&self, k_f: f64) -> Result<Estimate> {
        let s = self.sum_v2(Weight::MinNormKf(k_f))?;
        let value = s.value.sqrt();
        let lo = (s.value - s.half_width).max(0.0).sqrt();
        Ok(Estimate { value, half_width: value - lo })
    }
}

/// Lower and upper bounds on `Σ_{|k|>R} f(|k|)` for a radial `f` that is
/// decreasing on `[R − √3, ∞)`, from the unit cubes centred at lattice points
/// compared with spherical shells shifted by the cube half-diagonal.
pub fn radial_tail_bounds<F: Fn(f64) -> f64>(f: F, r: f64) -> Result<(f64, f64)> {
    let a = 3f64.sqrt() / 2.0;
    let spec = QuadratureSpec { rel_tol: 1e-12, abs_tol: 0.0, max_subdivisions: 400 };
    let upper_start = r - 2.0 * a;
    let lower_start = r + 2.0 * a;
    let hi = integrate_half_line(|t| (upper_start + t + a).powi(2) * f(upper_start + t), upper_start, &spec)?.value;
    let lo = integrate_half_line(|t| (lower_start + t - a).powi(2) * f(lower_start + t), lower_start, &spec)?.value;
    Ok((4.0 * PI * lo, 4.0 * PI * hi))
}
