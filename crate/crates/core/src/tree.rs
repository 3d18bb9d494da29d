//! The omnitree data model: labels, preorder structure, Z-order leaves and
//! point location.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::{Rectangle, MAX_DIM};
use crate::{Error, Result};

/// A `d`-bit split label. Bit `j` set means "bisect dimension `j`".
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct DimLabel {
    bits: u16,
    dim: u8,
}

impl DimLabel {
    pub fn new(dim: usize, bits: u16) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidDimension(dim));
        }
        if dim < 16 && bits >> dim != 0 {
            return Err(Error::MalformedTree("label has bits beyond the dimension count"));
        }
        Ok(Self { bits, dim: dim as u8 })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(dim, 0)
    }

    pub fn ones(dim: usize) -> Result<Self> {
        Self::new(dim, if dim == 16 { u16::MAX } else { (1u16 << dim) - 1 })
    }

    /// Label splitting exactly dimension `j`.
    pub fn unit(dim: usize, j: usize) -> Result<Self> {
        if j >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: j + 1 });
        }
        Self::new(dim, 1 << j)
    }

    /// Parses `"b0 b1 .. b(d-1)"` written as a string of `0`/`1`, dimension 0 first.
    pub fn parse(s: &str) -> Result<Self> {
        let mut bits = 0u16;
        let mut dim = 0usize;
        for c in s.chars() {
            match c {
                '0' => {}
                '1' if dim < MAX_DIM => bits |= 1 << dim,
                _ => return Err(Error::MalformedTree("label must consist of 0 and 1")),
            }
            dim += 1;
        }
        Self::new(dim, bits)
    }

    #[inline]
    pub fn dim(self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn bits(self) -> u16 {
        self.bits
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn is_all_ones(self) -> bool {
        self.bits.count_ones() == self.dim as u32
    }

    #[inline]
    pub fn has(self, j: usize) -> bool {
        (self.bits >> j) & 1 == 1
    }

    /// Number of split dimensions `d'`.
    #[inline]
    pub fn count(self) -> u32 {
        self.bits.count_ones()
    }

    #[inline]
    pub fn child_count(self) -> usize {
        if self.bits == 0 {
            0
        } else {
            1usize << self.count()
        }
    }

    pub(crate) fn with_bit(self, j: usize, on: bool) -> Self {
        let bits = if on { self.bits | (1 << j) } else { self.bits & !(1 << j) };
        Self { bits, dim: self.dim }
    }

    /// Split dimensions in ascending order.
    pub fn dims(self) -> impl Iterator<Item = usize> {
        let bits = self.bits;
        (0..self.dim as usize).filter(move |&j| (bits >> j) & 1 == 1)
    }

    /// Z-order ordinal of the child selected by `assignment`, a list of
    /// `(dimension, bit)` pairs covering exactly the split dimensions. The
    /// lowest split dimension is the most significant bit.
    pub fn child_ordinal(self, assignment: &[(usize, bool)]) -> Result<usize> {
        if assignment.len() != self.count() as usize {
            return Err(Error::InvalidChildAssignment);
        }
        let mut seen = 0u16;
        for &(j, _) in assignment {
            if j >= self.dim() || !self.has(j) || seen & (1 << j) != 0 {
                return Err(Error::InvalidChildAssignment);
            }
            seen |= 1 << j;
        }
        let mut ordinal = 0usize;
        for j in self.dims() {
            let bit = assignment.iter().find(|&&(k, _)| k == j).map(|&(_, b)| b).unwrap_or(false);
            ordinal = (ordinal << 1) | bit as usize;
        }
        Ok(ordinal)
    }
}

impl fmt::Display for DimLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.dim() {
            f.write_str(if self.has(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for DimLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Summary counts of a tree.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeStats {
    pub nodes: usize,
    pub leaves: usize,
    /// Mean depth of the leaves (root has depth 0).
    pub mean_leaf_depth: f64,
    /// Largest refinement level reached in each dimension.
    pub max_level: Vec<u8>,
}

/// An immutable omnitree stored as its preorder label sequence.
///
/// Construction validates the self-delimiting walk, so every value of this
/// type is a well-formed tree.
#[derive(Clone, PartialEq, Eq)]
pub struct Omnitree {
    dim: u8,
    labels: Vec<DimLabel>,
    // Preorder position one past the end of each node's subtree.
    subtree_end: Vec<u32>,
    // Number of leaves that precede each node in preorder.
    leaf_rank: Vec<u32>,
}

impl Omnitree {
    /// The one-node tree covering the whole domain.
    pub fn singleton(d: usize) -> Result<Self> {
        Self::from_labels(d, vec![DimLabel::zero(d)?])
    }

    pub fn from_labels(d: usize, labels: Vec<DimLabel>) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidDimension(d));
        }
        if let Some(bad) = labels.iter().find(|l| l.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: bad.dim() });
        }
        if labels.is_empty() {
            return Err(Error::MalformedTree("empty label sequence"));
        }
        if labels.len() > u32::MAX as usize - 1 {
            return Err(Error::MalformedTree("too many nodes"));
        }
        let n = labels.len();
        let mut subtree_end = vec![0u32; n];
        let mut leaf_rank = vec![0u32; n];
        // (node, children still to visit)
        let mut open: Vec<(usize, usize)> = Vec::new();
        let mut leaves = 0u32;
        for (v, label) in labels.iter().enumerate() {
            if v > 0 && open.is_empty() {
                return Err(Error::MalformedTree("walk terminated before the end of the sequence"));
            }
            leaf_rank[v] = leaves;
            if label.is_zero() {
                leaves += 1;
                subtree_end[v] = v as u32 + 1;
                while let Some(top) = open.last_mut() {
                    top.1 -= 1;
                    if top.1 > 0 {
                        break;
                    }
                    subtree_end[top.0] = v as u32 + 1;
                    open.pop();
                }
            } else {
                open.push((v, label.child_count()));
            }
        }
        if !open.is_empty() {
            return Err(Error::MalformedTree("sequence ended inside the walk"));
        }
        Ok(Self { dim: d as u8, labels, subtree_end, leaf_rank })
    }

    /// Parses whitespace-separated labels such as `"10 01 00 00 10 00 00"`.
    pub fn parse(d: usize, text: &str) -> Result<Self> {
        let labels = text.split_whitespace().map(DimLabel::parse).collect::<Result<Vec<_>>>()?;
        Self::from_labels(d, labels)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn labels(&self) -> &[DimLabel] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, node: usize) -> DimLabel {
        self.labels[node]
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn leaf_count(&self) -> usize {
        let last = self.labels.len() - 1;
        self.leaf_rank[last] as usize + 1
    }

    #[inline]
    pub fn is_leaf(&self, node: usize) -> bool {
        self.labels[node].is_zero()
    }

    #[inline]
    pub fn subtree_end(&self, node: usize) -> usize {
        self.subtree_end[node] as usize
    }

    /// Leaf ordinal (Z-order position) of a leaf node.
    #[inline]
    pub fn leaf_ordinal(&self, node: usize) -> usize {
        self.leaf_rank[node] as usize
    }

    /// Children of `node` in Z order.
    pub fn children(&self, node: usize) -> Children<'_> {
        let count = self.labels[node].child_count();
        Children { tree: self, next: node + 1, remaining: count }
    }

    /// The `ordinal`-th child of a nonleaf node.
    pub fn child(&self, node: usize, ordinal: usize) -> usize {
        let mut c = node + 1;
        for _ in 0..ordinal {
            c = self.subtree_end(c);
        }
        c
    }

    /// Visits every node in preorder with its rectangle and depth.
    pub fn for_each_node<F: FnMut(usize, &Rectangle, usize)>(&self, mut visit: F) {
        let root = Rectangle::root(self.dim()).expect("validated dimension");
        visit(0, &root, 0);
        let mut stack: Vec<(Rectangle, DimLabel, usize)> = Vec::new();
        if !self.labels[0].is_zero() {
            stack.push((root, self.labels[0], 0));
        }
        let mut v = 1;
        while let Some(top) = stack.last_mut() {
            if top.2 == top.1.child_count() {
                stack.pop();
                continue;
            }
            // Levels are bounded by construction (refinement enforces the cap).
            let rect = top.0.child(top.1, top.2).expect("level within cap");
            top.2 += 1;
            let depth = stack.len();
            visit(v, &rect, depth);
            if !self.labels[v].is_zero() {
                stack.push((rect, self.labels[v], 0));
            }
            v += 1;
        }
    }

    /// Rectangles of all nodes, indexed by preorder position.
    pub fn node_rectangles(&self) -> Vec<Rectangle> {
        let mut out = Vec::with_capacity(self.node_count());
        self.for_each_node(|_, r, _| out.push(*r));
        out
    }

    /// Leaf rectangles in depth-first Z order (the traversal `t`).
    pub fn leaf_rectangles(&self) -> Vec<Rectangle> {
        let mut out = Vec::with_capacity(self.leaf_count());
        self.for_each_node(|v, r, _| {
            if self.labels[v].is_zero() {
                out.push(*r)
            }
        });
        out
    }

    /// Leaf ordinal of the cell containing `x` (the mapping `p`).
    pub fn locate(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        for (j, &value) in x.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::PointOutOfDomain { dim: j, value });
            }
        }
        Ok(self.locate_unchecked(x).0)
    }

    /// Returns `(leaf ordinal, leaf rectangle)`; `x` must already be validated.
    pub fn locate_unchecked(&self, x: &[f64]) -> (usize, Rectangle) {
        let mut node = 0;
        let mut rect = Rectangle::root(self.dim()).expect("validated dimension");
        loop {
            let label = self.labels[node];
            if label.is_zero() {
                return (self.leaf_rank[node] as usize, rect);
            }
            let mut ordinal = 0;
            for j in label.dims() {
                ordinal = (ordinal << 1) | (x[j] >= rect.midpoint(j)) as usize;
            }
            rect = rect.child(label, ordinal).expect("level within cap");
            node = self.child(node, ordinal);
        }
    }

    /// Preorder id of the node whose rectangle equals `target`, if any.
    pub fn find_node(&self, target: &Rectangle) -> Option<usize> {
        if target.dim() != self.dim() {
            return None;
        }
        let mut node = 0;
        let mut rect = Rectangle::root(self.dim()).ok()?;
        loop {
            if rect == *target {
                return Some(node);
            }
            let label = self.labels[node];
            if label.is_zero() || !rect.covers(target) {
                return None;
            }
            if label.dims().any(|j| target.level(j) <= rect.level(j)) {
                return None;
            }
            let ordinal = rect.child_ordinal_towards(label, target);
            rect = rect.child(label, ordinal).ok()?;
            node = self.child(node, ordinal);
        }
    }

    pub fn node_stats(&self) -> NodeStats {
        let mut depth_sum = 0usize;
        let mut max_level = vec![0u8; self.dim()];
        self.for_each_node(|v, r, depth| {
            if self.labels[v].is_zero() {
                depth_sum += depth;
                for (m, &l) in max_level.iter_mut().zip(r.levels()) {
                    *m = (*m).max(l);
                }
            }
        });
        let leaves = self.leaf_count();
        NodeStats { nodes: self.node_count(), leaves, mean_leaf_depth: depth_sum as f64 / leaves as f64, max_level }
    }

    /// True iff no nonleaf node leaves a dimension unsplit while all of its
    /// children split it.
    pub fn is_normalized(&self) -> bool {
        (0..self.node_count()).filter(|&v| !self.is_leaf(v)).all(|v| {
            let label = self.labels[v];
            let common = self.children(v).fold(u16::MAX, |acc, c| acc & self.labels[c].bits());
            common & !label.bits() == 0
        })
    }

    /// Number of nonleaf labels splitting each dimension.
    pub fn split_histogram(&self) -> Vec<u64> {
        let mut hist = vec![0u64; self.dim()];
        for label in &self.labels {
            for j in label.dims() {
                hist[j] += 1;
            }
        }
        hist
    }

    /// True when every label is all-zero or all-one.
    pub fn is_octree(&self) -> bool {
        self.labels.iter().all(|l| l.is_zero() || l.is_all_ones())
    }

    /// Labels rendered as space-separated bit strings.
    pub fn to_label_string(&self) -> String {
        use core::fmt::Write;
        let mut s = String::new();
        for (i, l) in self.labels.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{l}");
        }
        s
    }
}

impl fmt::Debug for Omnitree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Omnitree(d={}, [{}])", self.dim, self.to_label_string())
    }
}

pub struct Children<'a> {
    tree: &'a Omnitree,
    next: usize,
    remaining: usize,
}

impl Iterator for Children<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.remaining == 0 {
            return None;
        }
        let c = self.next;
        self.next = self.tree.subtree_end(c);
        self.remaining -= 1;
        Some(c)
    }
}
