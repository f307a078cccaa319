//! Sparse vectors and p-norm geometry over a growing, point-indexed
//! coordinate universe.
//!
//! Coordinate axes are not a fixed `0..d` range: they are minted as the
//! staged construction runs, one per dense-set point, and carry the stage
//! that minted them. Points are finite-support real functions on those
//! axes; all norms are computed by summing `|x_i|^p` in ascending
//! coordinate order so results are reproducible bit-for-bit across runs.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Entries whose magnitude falls below this after arithmetic are dropped,
/// so a point's support is exactly its stored key set.
pub const ZERO_DROP: f64 = 1e-15;

/// Default margin used to certify strict inequalities in floating point.
pub const DEFAULT_ETA: f64 = 1e-9;

/// Label of a coordinate axis: `stage` is the dense set that minted it,
/// `index` the position within that stage. Ordering is lexicographic on
/// `(stage, index)`, which fixes the summation order of every norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoordId {
    stage: u32,
    index: u32,
}

impl CoordId {
    /// `stage` must be positive; `index` is free.
    pub fn new(stage: u32, index: u32) -> Result<Self> {
        if stage == 0 {
            return Err(Error::InvalidParams(
                "coordinate stage must be positive".into(),
            ));
        }
        Ok(CoordId { stage, index })
    }

    pub fn stage(&self) -> u32 {
        self.stage
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    /// Serialized form `s{stage}i{index}`.
    pub fn label(&self) -> String {
        format!("s{}i{}", self.stage, self.index)
    }
}

impl fmt::Display for CoordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}i{}", self.stage, self.index)
    }
}

impl FromStr for CoordId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ParseLabel(s.to_string());
        let rest = s.strip_prefix('s').ok_or_else(bad)?;
        let (stage_str, index_str) = rest.split_once('i').ok_or_else(bad)?;
        let stage: u32 = stage_str.parse().map_err(|_| bad())?;
        let index: u32 = index_str.parse().map_err(|_| bad())?;
        CoordId::new(stage, index).map_err(|_| bad())
    }
}

impl Serialize for CoordId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for CoordId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Exponent and strictness margin of the ambient space.
///
/// `p` is a runtime value with `p >= 1`; `p = 1` is allowed. `eta` is the
/// quantified margin used wherever a strict inequality has to be certified
/// in floating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub p: f64,
    pub eta: f64,
}

impl SpaceParams {
    pub fn new(p: f64) -> Result<Self> {
        Self::with_eta(p, DEFAULT_ETA)
    }

    pub fn with_eta(p: f64, eta: f64) -> Result<Self> {
        let params = SpaceParams { p, eta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.p.is_finite() || self.p < 1.0 {
            return Err(Error::InvalidParams(format!(
                "exponent p must be finite and >= 1, got {}",
                self.p
            )));
        }
        if !self.eta.is_finite() || self.eta <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "strictness margin eta must be positive, got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

/// Finite-support real-valued function on coordinate axes; the element
/// type of the sequence space. No stored entry is ever zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparsePoint {
    entries: BTreeMap<CoordId, f64>,
}

impl SparsePoint {
    /// The origin: empty support.
    pub fn zero() -> Self {
        SparsePoint::default()
    }

    /// The unit vector `e_a` on axis `a`.
    pub fn unit(coord: CoordId) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(coord, 1.0);
        SparsePoint { entries }
    }

    /// Builds a point from `(coord, value)` pairs, dropping near-zero values.
    pub fn from_entries<I: IntoIterator<Item = (CoordId, f64)>>(iter: I) -> Self {
        let mut point = SparsePoint::zero();
        for (coord, value) in iter {
            point.set(coord, value);
        }
        point
    }

    /// Sets one coordinate, dropping the entry when `|value| < ZERO_DROP`.
    pub fn set(&mut self, coord: CoordId, value: f64) {
        if value.abs() < ZERO_DROP {
            self.entries.remove(&coord);
        } else {
            self.entries.insert(coord, value);
        }
    }

    /// Coordinate value, 0 when outside the support.
    pub fn get(&self, coord: CoordId) -> f64 {
        self.entries.get(&coord).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    /// Support axes in ascending order.
    pub fn support(&self) -> impl Iterator<Item = CoordId> + '_ {
        self.entries.keys().copied()
    }

    /// `(coord, value)` pairs in ascending coordinate order.
    pub fn entries(&self) -> impl Iterator<Item = (CoordId, f64)> + '_ {
        self.entries.iter().map(|(c, v)| (*c, *v))
    }

    /// Largest stage appearing in the support, if any.
    pub fn max_stage(&self) -> Option<u32> {
        self.entries.keys().map(|c| c.stage).max()
    }

    /// Coordinate-wise sum; entries cancelling to (near) zero are dropped.
    pub fn add(&self, other: &SparsePoint) -> SparsePoint {
        let mut out = self.clone();
        for (&coord, &value) in &other.entries {
            let sum = out.get(coord) + value;
            out.set(coord, sum);
        }
        out
    }

    /// Coordinate-wise difference.
    pub fn sub(&self, other: &SparsePoint) -> SparsePoint {
        let mut out = self.clone();
        for (&coord, &value) in &other.entries {
            let diff = out.get(coord) - value;
            out.set(coord, diff);
        }
        out
    }

    /// Scalar multiple; `c = 0` yields the origin.
    pub fn scale(&self, c: f64) -> SparsePoint {
        let mut out = SparsePoint::zero();
        for (&coord, &value) in &self.entries {
            out.set(coord, c * value);
        }
        out
    }

    /// True iff the supports share no axis. The empty support is disjoint
    /// from everything.
    pub fn disjoint_support(&self, other: &SparsePoint) -> bool {
        let (small, large) = if self.entries.len() <= other.entries.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.entries.keys().all(|c| !large.entries.contains_key(c))
    }

    /// Restriction to axes of stage `< n`: the metric projection onto the
    /// subspace spanned by earlier-stage coordinates.
    pub fn restrict_to_stages_below(&self, n: u32) -> SparsePoint {
        SparsePoint {
            entries: self
                .entries
                .iter()
                .filter(|(c, _)| c.stage < n)
                .map(|(c, v)| (*c, *v))
                .collect(),
        }
    }

    /// `sum |x_i|^p` in ascending coordinate order (no root taken).
    pub fn p_norm_pow(&self, params: &SpaceParams) -> f64 {
        let mut acc = 0.0;
        for value in self.entries.values() {
            acc += value.abs().powf(params.p);
        }
        acc
    }

    /// The p-norm `(sum |x_i|^p)^(1/p)`; 0 for the origin.
    pub fn p_norm(&self, params: &SpaceParams) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.p_norm_pow(params).powf(1.0 / params.p)
    }

    /// Canonical form used for exact deduplication: labels paired with the
    /// bit pattern of each value.
    pub fn canonical_key(&self) -> String {
        let mut out = String::new();
        for (coord, value) in &self.entries {
            out.push_str(&coord.label());
            out.push(':');
            out.push_str(&format!("{:016x};", value.to_bits()));
        }
        out
    }
}

impl fmt::Display for SparsePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("{0}");
        }
        f.write_str("{")?;
        for (i, (coord, value)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{coord}: {value}")?;
        }
        f.write_str("}")
    }
}

/// `p_norm(x - y)`: symmetric, triangle inequality up to rounding.
pub fn distance(x: &SparsePoint, y: &SparsePoint, params: &SpaceParams) -> f64 {
    let acc = distance_pow(x, y, params);
    if acc == 0.0 {
        return 0.0;
    }
    acc.powf(1.0 / params.p)
}

/// `sum |x_i - y_i|^p` without the final root, accumulated term by term
/// in ascending coordinate order over the union of the two supports.
pub fn distance_pow(x: &SparsePoint, y: &SparsePoint, params: &SpaceParams) -> f64 {
    let mut acc = 0.0;
    let mut ix = x.entries.iter().peekable();
    let mut iy = y.entries.iter().peekable();
    loop {
        match (ix.peek(), iy.peek()) {
            (Some((cx, vx)), Some((cy, vy))) => match cx.cmp(cy) {
                std::cmp::Ordering::Less => {
                    acc += vx.abs().powf(params.p);
                    ix.next();
                }
                std::cmp::Ordering::Greater => {
                    acc += vy.abs().powf(params.p);
                    iy.next();
                }
                std::cmp::Ordering::Equal => {
                    acc += (*vx - *vy).abs().powf(params.p);
                    ix.next();
                    iy.next();
                }
            },
            (Some((_, vx)), None) => {
                acc += vx.abs().powf(params.p);
                ix.next();
            }
            (None, Some((_, vy))) => {
                acc += vy.abs().powf(params.p);
                iy.next();
            }
            (None, None) => break,
        }
    }
    acc
}

impl Serialize for SparsePoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        struct Entries<'a>(&'a BTreeMap<CoordId, f64>);
        impl Serialize for Entries<'_> {
            fn serialize<S: Serializer>(
                &self,
                serializer: S,
            ) -> std::result::Result<S::Ok, S::Error> {
                let mut map = serializer.serialize_map(Some(self.0.len()))?;
                for (coord, value) in self.0 {
                    map.serialize_entry(&coord.label(), value)?;
                }
                map.end()
            }
        }
        let mut st = serializer.serialize_struct("SparsePoint", 1)?;
        st.serialize_field("entries", &Entries(&self.entries))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for SparsePoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct PointVisitor;
        impl<'de> Visitor<'de> for PointVisitor {
            type Value = SparsePoint;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map with an \"entries\" field")
            }

            fn visit_map<A: MapAccess<'de>>(
                self,
                mut access: A,
            ) -> std::result::Result<SparsePoint, A::Error> {
                let mut entries: Option<BTreeMap<String, f64>> = None;
                while let Some(key) = access.next_key::<String>()? {
                    match key.as_str() {
                        "entries" => entries = Some(access.next_value()?),
                        other => return Err(serde::de::Error::unknown_field(other, &["entries"])),
                    }
                }
                let raw = entries.ok_or_else(|| serde::de::Error::missing_field("entries"))?;
                let mut map = BTreeMap::new();
                for (label, value) in raw {
                    let coord: CoordId = label.parse().map_err(serde::de::Error::custom)?;
                    if map.insert(coord, value).is_some() {
                        return Err(serde::de::Error::custom(format!(
                            "duplicate coordinate {label}"
                        )));
                    }
                }
                Ok(SparsePoint { entries: map })
            }
        }
        deserializer.deserialize_struct("SparsePoint", &["entries"], PointVisitor)
    }
}
