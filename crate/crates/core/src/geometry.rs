//! Dyadic boxes in level-index form and their per-dimension location codes.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::tree::DimLabel;
use crate::{Error, Result};

/// Largest supported dimension count.
pub const MAX_DIM: usize = 16;

/// Largest per-dimension refinement level; indices stay below `2^62`.
pub const MAX_LEVEL: u8 = 62;

/// A dyadic box `Q_{i,l}`: lower corner `i * 2^-l`, upper corner `(i+1) * 2^-l`.
///
/// Ordering is lexicographic over the per-dimension location strings
/// (dimension 0 first, a proper prefix sorts before its extensions).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rectangle {
    dim: u8,
    level: [u8; MAX_DIM],
    index: [u64; MAX_DIM],
}

impl Rectangle {
    /// The whole domain `(0,1)^d`.
    pub fn root(d: usize) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidDimension(d));
        }
        Ok(Self { dim: d as u8, level: [0; MAX_DIM], index: [0; MAX_DIM] })
    }

    pub fn new(level: &[u8], index: &[u64]) -> Result<Self> {
        if level.len() != index.len() {
            return Err(Error::DimensionMismatch { expected: level.len(), found: index.len() });
        }
        let mut rect = Self::root(level.len())?;
        for (j, (&l, &i)) in level.iter().zip(index).enumerate() {
            if l > MAX_LEVEL || i >> l != 0 {
                return Err(Error::InvalidRectangle);
            }
            rect.level[j] = l;
            rect.index[j] = i;
        }
        Ok(rect)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn levels(&self) -> &[u8] {
        &self.level[..self.dim()]
    }

    #[inline]
    pub fn indices(&self) -> &[u64] {
        &self.index[..self.dim()]
    }

    #[inline]
    pub fn level(&self, j: usize) -> u8 {
        self.level[j]
    }

    #[inline]
    pub fn index(&self, j: usize) -> u64 {
        self.index[j]
    }

    /// Edge length `2^-l_j` in dimension `j`.
    #[inline]
    pub fn width(&self, j: usize) -> f64 {
        libm::ldexp(1.0, -(self.level[j] as i32))
    }

    #[inline]
    pub fn lower(&self, j: usize) -> f64 {
        self.index[j] as f64 * self.width(j)
    }

    #[inline]
    pub fn upper(&self, j: usize) -> f64 {
        (self.index[j] + 1) as f64 * self.width(j)
    }

    /// Midpoint of the box along dimension `j`; the bisection plane of a split.
    #[inline]
    pub fn midpoint(&self, j: usize) -> f64 {
        (2 * self.index[j] + 1) as f64 * libm::ldexp(1.0, -(self.level[j] as i32) - 1)
    }

    pub fn total_level(&self) -> u32 {
        self.levels().iter().map(|&l| l as u32).sum()
    }

    pub fn volume(&self) -> f64 {
        libm::ldexp(1.0, -(self.total_level() as i32))
    }

    pub fn center(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.midpoint(j)).collect()
    }

    /// Maps `u ∈ [0,1)^d` affinely into the box.
    pub fn map_unit(&self, u: &[f64], out: &mut [f64]) {
        for j in 0..self.dim() {
            out[j] = self.lower(j) + u[j] * self.width(j);
        }
    }

    /// Half-open containment, with the domain's upper face folded into the
    /// last cell of each dimension.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|j| {
            let lo = self.lower(j);
            let hi = self.upper(j);
            x[j] >= lo && (x[j] < hi || (x[j] == 1.0 && hi == 1.0))
        })
    }

    /// True if `other` lies inside `self` (equality included).
    pub fn covers(&self, other: &Rectangle) -> bool {
        self.dim == other.dim
            && (0..self.dim()).all(|j| {
                other.level[j] >= self.level[j] && other.index[j] >> (other.level[j] - self.level[j]) == self.index[j]
            })
    }

    /// Bit `pos` (0 = most significant) of the location string in dimension `j`.
    #[inline]
    pub fn code_bit(&self, j: usize, pos: u8) -> u64 {
        debug_assert!(pos < self.level[j]);
        (self.index[j] >> (self.level[j] - pos - 1)) & 1
    }

    /// The child box selected by Z-order `ordinal` under a split `label`.
    pub fn child(&self, label: DimLabel, ordinal: usize) -> Result<Rectangle> {
        let split = label.count() as usize;
        let mut out = *self;
        for (k, j) in label.dims().enumerate() {
            if out.level[j] >= MAX_LEVEL {
                return Err(Error::LevelCap);
            }
            let bit = ((ordinal >> (split - 1 - k)) & 1) as u64;
            out.level[j] += 1;
            out.index[j] = (out.index[j] << 1) | bit;
        }
        Ok(out)
    }

    /// All children of a split in Z order.
    pub fn children(&self, label: DimLabel) -> Result<Vec<Rectangle>> {
        (0..label.child_count()).map(|k| self.child(label, k)).collect()
    }

    /// The Z-order ordinal of the child of `self` (split by `label`) that
    /// contains `finer`. `finer` must be strictly finer in every split dimension.
    pub(crate) fn child_ordinal_towards(&self, label: DimLabel, finer: &Rectangle) -> usize {
        let mut ordinal = 0usize;
        for j in label.dims() {
            ordinal = (ordinal << 1) | finer.code_bit(j, self.level[j]) as usize;
        }
        ordinal
    }

    pub fn location_code(&self) -> LocationCode {
        LocationCode::from(self)
    }
}

impl Ord for Rectangle {
    fn cmp(&self, other: &Self) -> Ordering {
        for j in 0..self.dim().min(other.dim()) {
            let (la, lb) = (self.level[j], other.level[j]);
            let common = la.min(lb);
            let pa = self.index[j] >> (la - common);
            let pb = other.index[j] >> (lb - common);
            let ord = pa.cmp(&pb).then(la.cmp(&lb));
            if ord != Ordering::Equal {
                return ord;
            }
        }
        self.dim.cmp(&other.dim)
    }
}

impl PartialOrd for Rectangle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Rectangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{{l={:?}, i={:?}}}", self.levels(), self.indices())
    }
}

/// Per-dimension binary strings; the length of string `j` is the level in
/// dimension `j`, and its bits spell the index most significant first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocationCode(Vec<String>);

impl LocationCode {
    pub fn parse<S: AsRef<str>>(parts: &[S]) -> Result<Self> {
        let strings: Vec<String> = parts.iter().map(|s| String::from(s.as_ref())).collect();
        if strings.iter().any(|s| s.len() > MAX_LEVEL as usize || s.chars().any(|c| c != '0' && c != '1')) {
            return Err(Error::InvalidRectangle);
        }
        Ok(Self(strings))
    }

    pub fn strings(&self) -> &[String] {
        &self.0
    }

    pub fn to_rectangle(&self) -> Result<Rectangle> {
        let level: Vec<u8> = self.0.iter().map(|s| s.len() as u8).collect();
        let index: Vec<u64> =
            self.0.iter().map(|s| s.bytes().fold(0u64, |acc, b| (acc << 1) | (b - b'0') as u64)).collect();
        Rectangle::new(&level, &index)
    }
}

impl From<&Rectangle> for LocationCode {
    fn from(rect: &Rectangle) -> Self {
        let strings = (0..rect.dim())
            .map(|j| (0..rect.level(j)).map(|p| if rect.code_bit(j, p) == 1 { '1' } else { '0' }).collect())
            .collect();
        Self(strings)
    }
}

impl fmt::Display for LocationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (j, s) in self.0.iter().enumerate() {
            if j > 0 {
                f.write_str(", ")?;
            }
            f.write_str(if s.is_empty() { "\u{3b5}" } else { s })?;
        }
        f.write_str(")")
    }
}
