//! Marker-driven refinement.
//!
//! Refining a tree takes four steps: markers are attached to nodes, swept
//! bottom-up (a unit of refinement moves to the parent when every sibling
//! either requests it too or already splits that dimension), swept top-down
//! (units that cannot be realized at a node move to its children), and the
//! target tree is rebuilt top-down. The rebuild looks every new node up in
//! the source tree by rectangle, so parents whose splits were hoisted vanish
//! and parents that gained a split are duplicated and interleaved in Z order.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::geometry::{Rectangle, MAX_LEVEL};
use crate::tree::{DimLabel, Omnitree};
use crate::{Error, Result};

/// Requested refinements keyed by preorder node id.
#[derive(Clone, Debug)]
pub struct RefinementPlan {
    dim: usize,
    node_count: usize,
    markers: BTreeMap<usize, Vec<i32>>,
}

impl RefinementPlan {
    pub fn new(tree: &Omnitree) -> Self {
        Self { dim: tree.dim(), node_count: tree.node_count(), markers: BTreeMap::new() }
    }

    /// Adds `marker` (levels to add per dimension) to `node`, accumulating
    /// with anything already requested there.
    pub fn mark(&mut self, node: usize, marker: &[i32]) -> Result<&mut Self> {
        if node >= self.node_count {
            return Err(Error::InvalidNode(node));
        }
        if marker.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: marker.len() });
        }
        if marker.iter().any(|&m| m < 0) || marker.iter().all(|&m| m == 0) {
            return Err(Error::InvalidMarker);
        }
        let entry = self.markers.entry(node).or_insert_with(|| vec![0; marker.len()]);
        for (acc, &m) in entry.iter_mut().zip(marker) {
            *acc = acc.checked_add(m).ok_or(Error::LevelCap)?;
        }
        Ok(self)
    }

    pub fn marker(&self, node: usize) -> Option<&[i32]> {
        self.markers.get(&node).map(Vec::as_slice)
    }

    /// Total number of one-dimensional refinements requested (`n_m`).
    pub fn requested_refinements(&self) -> u64 {
        self.markers.values().flatten().map(|&m| m as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    /// Equivalent plan with every marker moved onto the leaves below it.
    fn moved_to_leaves(&self, tree: &Omnitree) -> Result<Self> {
        let dense = Markers::from_plan(tree, self);
        let sums = path_sums(tree, &dense);
        let mut out = Self::new(tree);
        for v in (0..tree.node_count()).filter(|&v| tree.is_leaf(v)) {
            let m = &sums[v * self.dim..(v + 1) * self.dim];
            if m.iter().any(|&x| x != 0) {
                out.mark(v, m)?;
            }
        }
        Ok(out)
    }

    fn check(&self, tree: &Omnitree) -> Result<()> {
        if self.dim != tree.dim() || self.node_count != tree.node_count() {
            return Err(Error::PlanMismatch);
        }
        Ok(())
    }
}

/// Dense per-node markers as they move through the sweeps. Entries may be
/// `-1` where a node gives up a split to its parent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Markers {
    dim: usize,
    values: Vec<i32>,
}

impl Markers {
    fn from_plan(tree: &Omnitree, plan: &RefinementPlan) -> Self {
        let d = tree.dim();
        let mut values = vec![0; d * tree.node_count()];
        for (&node, m) in &plan.markers {
            values[node * d..(node + 1) * d].copy_from_slice(m);
        }
        Self { dim: d, values }
    }

    #[inline]
    pub fn get(&self, node: usize) -> &[i32] {
        &self.values[node * self.dim..(node + 1) * self.dim]
    }

    #[inline]
    fn at(&self, node: usize, j: usize) -> i32 {
        self.values[node * self.dim + j]
    }

    #[inline]
    fn add(&mut self, node: usize, j: usize, delta: i32) {
        self.values[node * self.dim + j] += delta;
    }

    /// Nodes carrying a nonzero marker, with the marker.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, &[i32])> {
        self.values.chunks(self.dim).enumerate().filter(|(_, m)| m.iter().any(|&v| v != 0))
    }
}

/// Moves refinement units towards the root as far as they can go.
///
/// For dimension `j`, a unit lifts from the children of `p` to `p` when every
/// child either carries at least one unit in `j` or already splits `j` (with
/// nothing pending there); the latter receive `-1`. Nodes are processed in
/// reverse preorder and the pass repeats until nothing moves.
pub fn sweep_up(tree: &Omnitree, plan: &RefinementPlan) -> Result<Markers> {
    plan.check(tree)?;
    let mut markers = Markers::from_plan(tree, plan);
    let d = tree.dim();
    let mut children: Vec<usize> = Vec::new();
    loop {
        let mut moved = false;
        for p in (0..tree.node_count()).rev() {
            if tree.is_leaf(p) {
                continue;
            }
            children.clear();
            children.extend(tree.children(p));
            for j in 0..d {
                loop {
                    let mut any_unit = false;
                    let liftable = children.iter().all(|&c| {
                        let m = markers.at(c, j);
                        if m >= 1 {
                            any_unit = true;
                            true
                        } else {
                            m == 0 && tree.label(c).has(j)
                        }
                    });
                    if !(liftable && any_unit) {
                        break;
                    }
                    markers.add(p, j, 1);
                    for &c in &children {
                        markers.add(c, j, -1);
                    }
                    moved = true;
                }
            }
        }
        if !moved {
            return Ok(markers);
        }
    }
}

/// Pushes units that cannot be realized at a nonleaf node (the node already
/// splits that dimension) down to all of its children, in preorder.
pub fn sweep_down(tree: &Omnitree, mut markers: Markers) -> Result<Markers> {
    let d = tree.dim();
    let mut children: Vec<usize> = Vec::new();
    for v in 0..tree.node_count() {
        let label = tree.label(v);
        if label.is_zero() {
            if markers.get(v).iter().any(|&m| m < 0) {
                return Err(Error::InconsistentMarkers(v));
            }
            continue;
        }
        children.clear();
        children.extend(tree.children(v));
        for j in 0..d {
            let split = label.has(j) as i32;
            while split + markers.at(v, j) > 1 {
                markers.add(v, j, -1);
                for &c in &children {
                    markers.add(c, j, 1);
                }
            }
            if split + markers.at(v, j) < 0 {
                return Err(Error::InconsistentMarkers(v));
            }
        }
    }
    Ok(markers)
}

/// Smallest subtree under `root` (whose rectangle is `root_rect`) whose
/// rectangle covers `q`. Returns the node and its rectangle.
///
/// Descent continues while `q` is strictly finer than the current node in
/// every dimension the node splits; the child is chosen from the bits of
/// `q`'s location code at those positions.
pub fn search_descendant(
    tree: &Omnitree,
    root: usize,
    root_rect: &Rectangle,
    q: &Rectangle,
) -> Result<(usize, Rectangle)> {
    if !root_rect.covers(q) {
        return Err(Error::NotCovered);
    }
    let mut node = root;
    let mut rect = *root_rect;
    loop {
        let label = tree.label(node);
        if rect == *q || label.is_zero() || label.dims().any(|j| q.level(j) <= rect.level(j)) {
            return Ok((node, rect));
        }
        let ordinal = rect.child_ordinal_towards(label, q);
        rect = rect.child(label, ordinal)?;
        node = tree.child(node, ordinal);
    }
}

struct Builder<'a> {
    tree: &'a Omnitree,
    markers: &'a Markers,
    /// Markers summed along the path from the root: a leaf's rectangle is
    /// refined by every ancestor's gained or lost splits as well as its own.
    along_path: Vec<i32>,
    out: Vec<DimLabel>,
}

fn path_sums(tree: &Omnitree, markers: &Markers) -> Vec<i32> {
    let d = tree.dim();
    let mut sums = markers.values.clone();
    for v in 0..tree.node_count() {
        for c in tree.children(v) {
            for j in 0..d {
                sums[c * d + j] += sums[v * d + j];
            }
        }
    }
    sums
}

impl Builder<'_> {
    fn label_for(&self, q: &Rectangle, s: usize, s_rect: &Rectangle) -> Result<DimLabel> {
        let d = self.tree.dim();
        let source = self.tree.label(s);
        let mut label = DimLabel::zero(d)?;
        if source.is_zero() {
            // Source leaf: uniform expansion towards its target levels.
            let m = &self.along_path[s * d..(s + 1) * d];
            for j in 0..d {
                let target = s_rect.level(j) as i32 + m[j];
                if target > MAX_LEVEL as i32 {
                    return Err(Error::LevelCap);
                }
                let have = q.level(j) as i32;
                if have > target {
                    return Err(Error::InconsistentMarkers(s));
                }
                label = label.with_bit(j, have < target);
            }
        } else {
            let m = self.markers.get(s);
            for j in 0..d {
                let bit = source.has(j) as i32 + m[j];
                if !(0..=1).contains(&bit) {
                    return Err(Error::InconsistentMarkers(s));
                }
                // A split of `s` that `q` has not yet made is still owed here
                // even if it was handed to an ancestor: the ancestor's copy
                // of `q` was skipped by the search.
                let owed = source.has(j) && q.level(j) == s_rect.level(j);
                label = label.with_bit(j, bit == 1 || owed);
            }
            if label.is_zero() {
                return Err(Error::InconsistentMarkers(s));
            }
        }
        Ok(label)
    }

    fn build(&mut self, q: Rectangle, t: usize, t_rect: &Rectangle) -> Result<()> {
        let (s, s_rect) = search_descendant(self.tree, t, t_rect, &q)?;
        let label = self.label_for(&q, s, &s_rect)?;
        self.out.push(label);
        for k in 0..label.child_count() {
            let w = q.child(label, k)?;
            self.build(w, s, &s_rect)?;
        }
        Ok(())
    }
}

/// Builds the subtree of the target tree for rectangle `q` from the source
/// subtree rooted at `t` (rectangle `t_rect`), using resolved markers.
pub fn construct_subtree(
    tree: &Omnitree,
    markers: &Markers,
    q: &Rectangle,
    t: usize,
    t_rect: &Rectangle,
) -> Result<Vec<DimLabel>> {
    let along_path = path_sums(tree, markers);
    let mut builder = Builder { tree, markers, along_path, out: Vec::new() };
    builder.build(*q, t, t_rect)?;
    Ok(builder.out)
}

/// Builds the whole target tree from resolved markers.
pub fn construct_new_tree(tree: &Omnitree, markers: &Markers) -> Result<Omnitree> {
    let root = Rectangle::root(tree.dim())?;
    let labels = construct_subtree(tree, markers, &root, 0, &root)?;
    Omnitree::from_labels(tree.dim(), labels)
}

/// Applies `plan` to `tree` and returns the refined tree. Node ids in the
/// plan refer to `tree`; they are meaningless for the result.
///
/// With at most one unit per dimension per marked leaf (all-ones or a single
/// dimension) a normalized input stays normalized. Larger markers are
/// realized exactly but may leave the result unnormalized.
pub fn refine(tree: &Omnitree, plan: &RefinementPlan) -> Result<Omnitree> {
    plan.check(tree)?;
    let leaf_plan;
    let plan = if plan.markers.keys().any(|&v| !tree.is_leaf(v)) {
        leaf_plan = plan.moved_to_leaves(tree)?;
        &leaf_plan
    } else {
        plan
    };
    let swept = sweep_up(tree, plan)?;
    let resolved = sweep_down(tree, swept)?;
    let target = construct_new_tree(tree, &resolved)?;
    if tree.is_normalized() && !target.is_normalized() {
        normalize(&target)
    } else {
        Ok(target)
    }
}

/// Hoists splits shared by all children of a node into the node until no
/// such split remains. Leaf rectangles are unchanged.
///
/// Each pass hoists at a set of nodes no two of which are parent and child,
/// which keeps every node's marker to a single sign.
pub fn normalize(tree: &Omnitree) -> Result<Omnitree> {
    let d = tree.dim();
    let mut tree = tree.clone();
    loop {
        let n = tree.node_count();
        let mut markers = Markers { dim: d, values: vec![0; d * n] };
        let mut blocked = vec![false; n];
        let mut any = false;
        for v in 0..n {
            if tree.is_leaf(v) || blocked[v] {
                continue;
            }
            let label = tree.label(v);
            let shared = tree
                .children(v)
                .fold(DimLabel::ones(d)?, |acc, c| DimLabel::new(d, acc.bits() & tree.label(c).bits()).unwrap());
            let hoist: Vec<usize> = shared.dims().filter(|&j| !label.has(j)).collect();
            if hoist.is_empty() {
                continue;
            }
            any = true;
            for &j in &hoist {
                markers.add(v, j, 1);
            }
            for c in tree.children(v) {
                blocked[c] = true;
                for &j in &hoist {
                    markers.add(c, j, -1);
                }
            }
        }
        if !any {
            return Ok(tree);
        }
        tree = construct_new_tree(&tree, &markers)?;
    }
}

/// Debug view of the location stack: one row per node in preorder with the
/// extended location code of every dimension. `λ` marks a split, `+` a
/// pending refinement and `-` a split being given up.
pub fn location_stack(tree: &Omnitree, markers: Option<&Markers>) -> String {
    let d = tree.dim();
    let mut rows: Vec<Vec<String>> = Vec::with_capacity(tree.node_count());
    tree.for_each_node(|v, rect, _| {
        let code = rect.location_code();
        let label = tree.label(v);
        let row = (0..d)
            .map(|j| {
                let mut cell = code.strings()[j].clone();
                if label.has(j) {
                    cell.push('\u{3bb}');
                }
                let m = markers.map_or(0, |mk| mk.at(v, j));
                if m < 0 {
                    cell.push('-');
                }
                for _ in 0..m.max(0) {
                    cell.push('+');
                }
                cell
            })
            .collect();
        rows.push(row);
    });
    let widths: Vec<usize> =
        (0..d).map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0).max(1)).collect();
    let mut out = String::new();
    for row in rows {
        for (j, cell) in row.iter().enumerate() {
            let _ = write!(out, "{cell}");
            if j + 1 < d {
                for _ in cell.chars().count()..widths[j] + 1 {
                    out.push(' ');
                }
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE_2D: &str = "10 01 00 00 10 00 00";

    fn rect(level: &[u8], index: &[u64]) -> Rectangle {
        Rectangle::new(level, index).unwrap()
    }

    fn two_marker_plan(tree: &Omnitree) -> RefinementPlan {
        let mut plan = RefinementPlan::new(tree);
        plan.mark(5, &[0, 1]).unwrap();
        plan.mark(6, &[0, 1]).unwrap();
        plan
    }

    #[test]
    fn mark_accumulates_and_validates() {
        let t = Omnitree::singleton(3).unwrap();
        let mut plan = RefinementPlan::new(&t);
        plan.mark(0, &[1, 1, 1]).unwrap();
        assert_eq!(plan.requested_refinements(), 3);

        let t = Omnitree::parse(2, SAMPLE_2D).unwrap();
        assert_eq!(two_marker_plan(&t).requested_refinements(), 2);
        let mut plan = RefinementPlan::new(&t);
        plan.mark(2, &[1, 0]).unwrap().mark(2, &[1, 0]).unwrap();
        assert_eq!(plan.marker(2), Some(&[2, 0][..]));

        assert_eq!(plan.mark(7, &[1, 0]).unwrap_err(), Error::InvalidNode(7));
        assert_eq!(plan.mark(1, &[-1, 1]).unwrap_err(), Error::InvalidMarker);
        assert_eq!(plan.mark(1, &[0, 0]).unwrap_err(), Error::InvalidMarker);
    }

    #[test]
    fn sweep_up_two_marker_plan() {
        let t = Omnitree::parse(2, SAMPLE_2D).unwrap();
        let up = sweep_up(&t, &two_marker_plan(&t)).unwrap();
        let nonzero: Vec<(usize, Vec<i32>)> = up.nonzero().map(|(v, m)| (v, m.to_vec())).collect();
        assert_eq!(nonzero, vec![(0, vec![0, 1]), (1, vec![0, -1])]);
        // Nothing changes on the way down.
        assert_eq!(sweep_down(&t, up.clone()).unwrap(), up);
    }

    #[test]
    fn sweep_up_unanimous_children() {
        let t = Omnitree::parse(3, "111 000 000 000 000 000 000 000 000").unwrap();
        let mut plan = RefinementPlan::new(&t);
        for c in 1..9 {
            plan.mark(c, &[1, 0, 0]).unwrap();
        }
        let up = sweep_up(&t, &plan).unwrap();
        // The root already splits dim 0, so the lifted unit returns on the way down.
        assert_eq!(up.get(0), &[1, 0, 0]);
        assert!((1..9).all(|c| up.get(c) == [0, 0, 0]));

        let t = Omnitree::parse(2, "01 00 00").unwrap();
        let mut plan = RefinementPlan::new(&t);
        plan.mark(1, &[1, 0]).unwrap().mark(2, &[1, 0]).unwrap();
        let up = sweep_up(&t, &plan).unwrap();
        assert_eq!(up.get(0), &[1, 0]);
        assert_eq!((up.get(1), up.get(2)), (&[0, 0][..], &[0, 0][..]));
    }

    #[test]
    fn sweep_up_single_leaf_is_unchanged() {
        let t = Omnitree::parse(2, SAMPLE_2D).unwrap();
        let mut plan = RefinementPlan::new(&t);
        plan.mark(2, &[1, 0]).unwrap();
        let up = sweep_up(&t, &plan).unwrap();
        assert_eq!(up.nonzero().map(|(v, _)| v).collect::<Vec<_>>(), vec![2]);
        assert_eq!(up.get(2), &[1, 0]);
    }

    #[test]
    fn sweep_down_pushes_unrealizable_units() {
        let t = Omnitree::parse(2, "01 00 00").unwrap();
        let mut plan = RefinementPlan::new(&t);
        plan.mark(0, &[0, 1]).unwrap();
        let down = sweep_down(&t, sweep_up(&t, &plan).unwrap()).unwrap();
        assert_eq!(down.get(0), &[0, 0]);
        assert_eq!((down.get(1), down.get(2)), (&[0, 1][..], &[0, 1][..]));

        let t = Omnitree::singleton(2).unwrap();
        let mut plan = RefinementPlan::new(&t);
        plan.mark(0, &[2, 0]).unwrap();
        let down = sweep_down(&t, sweep_up(&t, &plan).unwrap()).unwrap();
        assert_eq!(down.get(0), &[2, 0]);
    }

    #[test]
    fn search_examples() {
        let t = Omnitree::parse(2, SAMPLE_2D).unwrap();
        let root = Rectangle::root(2).unwrap();
        assert_eq!(search_descendant(&t, 0, &root, &root).unwrap().0, 0);
        let q = rect(&[2, 0], &[2, 0]);
        assert_eq!(search_descendant(&t, 0, &root, &q).unwrap(), (5, q));
        let q = rect(&[1, 1], &[1, 0]);
        let (node, r) = search_descendant(&t, 0, &root, &q).unwrap();
        assert_eq!((node, r), (4, rect(&[1, 0], &[1, 0])));
        let left = rect(&[1, 0], &[0, 0]);
        assert_eq!(search_descendant(&t, 1, &left, &q).unwrap_err(), Error::NotCovered);
    }

    #[test]
    fn construct_examples() {
        let t = Omnitree::singleton(2).unwrap();
        let mut plan = RefinementPlan::new(&t);
        plan.mark(0, &[1, 1]).unwrap();
        assert_eq!(refine(&t, &plan).unwrap().to_label_string(), "11 00 00 00 00");

        let mut plan = RefinementPlan::new(&t);
        plan.mark(0, &[2, 0]).unwrap();
        let r = refine(&t, &plan).unwrap();
        assert_eq!(r.to_label_string(), "10 10 00 00 10 00 00");
        assert!(r.leaf_rectangles().iter().all(|q| q.levels() == [2, 0]));
    }

    #[test]
    fn two_marker_plan_end_to_end() {
        let t = Omnitree::parse(2, SAMPLE_2D).unwrap();
        let r = refine(&t, &two_marker_plan(&t)).unwrap();
        // Root splits both dimensions; the left parent vanished and the right
        // parent appears once per half of dimension 1.
        assert_eq!(r.to_label_string(), "11 00 00 10 00 00 10 00 00");
        assert_eq!(r.node_count(), 9);
        assert!(r.is_normalized());
        let levels: Vec<Vec<u8>> = r.leaf_rectangles().iter().map(|q| q.levels().to_vec()).collect();
        assert_eq!(levels, vec![vec![1, 1], vec![1, 1], vec![2, 1], vec![2, 1], vec![2, 1], vec![2, 1]]);
    }

    #[test]
    fn octree_refinement_of_singleton() {
        let t = Omnitree::singleton(3).unwrap();
        let mut plan = RefinementPlan::new(&t);
        plan.mark(0, &[1, 1, 1]).unwrap();
        let r = refine(&t, &plan).unwrap();
        assert_eq!(r.node_count(), 9);
        assert_eq!(r.leaf_count(), 8);
    }

    #[test]
    fn plan_for_other_tree_is_rejected() {
        let t = Omnitree::singleton(2).unwrap();
        let other = Omnitree::parse(2, SAMPLE_2D).unwrap();
        let mut plan = RefinementPlan::new(&other);
        plan.mark(3, &[1, 0]).unwrap();
        assert_eq!(refine(&t, &plan).unwrap_err(), Error::PlanMismatch);
    }

    #[test]
    fn level_cap_is_enforced() {
        let t = Omnitree::singleton(1).unwrap();
        let mut plan = RefinementPlan::new(&t);
        plan.mark(0, &[63]).unwrap();
        assert_eq!(refine(&t, &plan).unwrap_err(), Error::LevelCap);
    }

    #[test]
    fn location_stack_rendering() {
        let t = Omnitree::parse(2, SAMPLE_2D).unwrap();
        let up = sweep_up(&t, &two_marker_plan(&t)).unwrap();
        let stack = location_stack(&t, Some(&up));
        let rows: Vec<&str> = stack.lines().collect();
        assert_eq!(rows.len(), 7);
        assert!(rows[0].starts_with('\u{3bb}') && rows[0].ends_with('+'));
        assert!(rows[1].ends_with("\u{3bb}-"));
    }
}
