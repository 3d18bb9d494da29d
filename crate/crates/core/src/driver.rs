//! Adaptive refinement driven by sampled variance and first-order
//! sensitivities, plus filling the leaf data vector.
//!
//! Each leaf is scored from a Saltelli sample of its rectangle. In octree
//! mode the score is the sample variance of `g*`, in omnitree mode there is
//! one score per dimension: the variance explained by that coordinate alone
//! (`Var[E[Y | x_j]]`). Scores are scaled by leaf volume and kept in a max
//! priority queue; popping an entry realizes one refinement of one leaf.

use alloc::collections::{BTreeSet, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use crate::geometry::{Rectangle, MAX_LEVEL};
use crate::oracle::Oracle;
use crate::refinement::{refine, RefinementPlan};
use crate::rng::{rect_stream, Purpose};
use crate::tree::{DimLabel, Omnitree};
use crate::{Error, Result};

/// Runs independent work items, possibly in parallel. Implementations must
/// return results in index order.
pub trait Executor: Sync {
    fn map<T: Send, F: Fn(usize) -> T + Sync>(&self, n: usize, f: F) -> Vec<T>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T: Send, F: Fn(usize) -> T + Sync>(&self, n: usize, f: F) -> Vec<T> {
        (0..n).map(f).collect()
    }
}

/// Points evaluated per work item.
const EVAL_CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Every refinement bisects all dimensions.
    Octree,
    /// Every refinement bisects one dimension.
    Omnitree,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Octree => "octree",
            Mode::Omnitree => "omnitree",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdaptConfig {
    pub mode: Mode,
    /// Stop once the leaf count reaches this.
    pub target_leaves: usize,
    /// Saltelli base sample count; must be a power of two.
    pub n_s: usize,
    pub seed: u64,
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.n_s.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(self.n_s));
        }
        if self.target_leaves == 0 {
            return Err(Error::InvalidConfig("target leaf count must be positive"));
        }
        Ok(())
    }
}

/// Saltelli layout in `2d + 2` blocks of `n_s` points: `A`, `B`, then
/// `A_B^(i)` (A with column `i` from B) and `B_A^(i)` for each dimension.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    dim: usize,
    n_s: usize,
    points: Vec<f64>,
}

impl SampleBatch {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn len(&self) -> usize {
        self.n_s * (2 * self.dim + 2)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    pub fn evaluate<O: Oracle + ?Sized, E: Executor>(&self, oracle: &O, exec: &E) -> Vec<bool> {
        let n = self.len();
        let chunks = exec.map(n.div_ceil(EVAL_CHUNK), |c| {
            (c * EVAL_CHUNK..((c + 1) * EVAL_CHUNK).min(n)).map(|k| oracle.contains(self.point(k))).collect::<Vec<_>>()
        });
        chunks.concat()
    }
}

/// Draws the Saltelli sample for `rect`; `A` and `B` come from independent
/// substreams keyed by the rectangle.
pub fn saltelli_points(rect: &Rectangle, n_s: usize, seed: u64) -> Result<SampleBatch> {
    if !n_s.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n_s));
    }
    let d = rect.dim();
    let draw = |purpose| {
        let mut rng = rect_stream(seed, rect, purpose);
        let mut m = vec![0.0; n_s * d];
        for row in m.chunks_mut(d) {
            for (j, v) in row.iter_mut().enumerate() {
                *v = rect.lower(j) + rng.random::<f64>() * rect.width(j);
            }
        }
        m
    };
    let a = draw(Purpose::SaltelliA);
    let b = draw(Purpose::SaltelliB);
    let mut points = Vec::with_capacity(n_s * (2 * d + 2) * d);
    points.extend_from_slice(&a);
    points.extend_from_slice(&b);
    for (base, other) in [(&a, &b), (&b, &a)] {
        for i in 0..d {
            for k in 0..n_s {
                let start = points.len();
                points.extend_from_slice(&base[k * d..(k + 1) * d]);
                points[start + i] = other[k * d + i];
            }
        }
    }
    Ok(SampleBatch { dim: d, n_s, points })
}

fn block(values: &[bool], n_s: usize, b: usize) -> &[bool] {
    &values[b * n_s..(b + 1) * n_s]
}

/// Unbiased sample variance of the evaluations over `A ∪ B`.
pub fn variance_score(values: &[bool], n_s: usize) -> f64 {
    let n = 2 * n_s;
    if n < 2 {
        return 0.0;
    }
    let ones = values[..n].iter().filter(|&&v| v).count() as f64;
    let mean = ones / n as f64;
    mean * (1.0 - mean) * n as f64 / (n - 1) as f64
}

/// First-order variance contributions `Var[E[Y | x_j]]`, estimated
/// symmetrically from both cross blocks and clamped at zero:
/// `½ [mean f(B)(f(A_B^j) - f(A)) + mean f(A)(f(B_A^j) - f(B))]`.
pub fn sensitivity_scores(values: &[bool], n_s: usize, d: usize) -> Vec<f64> {
    let f = |v: bool| v as i64;
    let a = block(values, n_s, 0);
    let b = block(values, n_s, 1);
    (0..d)
        .map(|j| {
            let ab = block(values, n_s, 2 + j);
            let ba = block(values, n_s, 2 + d + j);
            let mut sum = 0i64;
            for k in 0..n_s {
                sum += f(b[k]) * (f(ab[k]) - f(a[k]));
                sum += f(a[k]) * (f(ba[k]) - f(b[k]));
            }
            (sum as f64 / (2 * n_s) as f64).max(0.0)
        })
        .collect()
}

/// Volume-scaled scores: one entry in octree mode, `d` in omnitree mode.
pub fn leaf_priorities(rect: &Rectangle, values: &[bool], n_s: usize, mode: Mode) -> Vec<f64> {
    let vol = rect.volume();
    match mode {
        Mode::Octree => vec![variance_score(values, n_s) * vol],
        Mode::Omnitree => sensitivity_scores(values, n_s, rect.dim()).into_iter().map(|s| s * vol).collect(),
    }
}

/// One queue entry. `dim` is `None` for an octree (all-dimension) split.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Priority {
    pub rect: Rectangle,
    pub dim: Option<usize>,
    pub score: f64,
}

impl Eq for Priority {}

impl Ord for Priority {
    /// Higher score first, then smaller location code, then lower dimension.
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.rect.cmp(&self.rect))
            .then_with(|| other.dim.cmp(&self.dim))
    }
}

impl PartialOrd for Priority {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// The leaf count reached the target.
    Reached,
    /// The queue ran dry first: every remaining leaf scored zero.
    PerfectlyResolved,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptResult {
    pub tree: Omnitree,
    pub status: Status,
    /// Refinements realized so far.
    pub refinements: u64,
    /// Realized bisections per dimension.
    pub split_counts: Vec<u64>,
}

fn score_children<O: Oracle + ?Sized, E: Executor>(
    oracle: &O,
    rects: &[Rectangle],
    config: &AdaptConfig,
    exec: &E,
) -> Result<Vec<Vec<f64>>> {
    let batches = rects.iter().map(|r| saltelli_points(r, config.n_s, config.seed)).collect::<Result<Vec<_>>>()?;
    let per = batches.first().map_or(0, SampleBatch::len);
    let chunks_per = per.div_ceil(EVAL_CHUNK);
    let chunks = exec.map(batches.len() * chunks_per, |c| {
        let batch = &batches[c / chunks_per];
        let start = (c % chunks_per) * EVAL_CHUNK;
        (start..(start + EVAL_CHUNK).min(per)).map(|k| oracle.contains(batch.point(k))).collect::<Vec<_>>()
    });
    Ok(rects
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let values = chunks[i * chunks_per..(i + 1) * chunks_per].concat();
            leaf_priorities(r, &values, config.n_s, config.mode)
        })
        .collect())
}

fn push_scores(heap: &mut BinaryHeap<Priority>, rect: Rectangle, scores: &[f64], mode: Mode) {
    for (j, &score) in scores.iter().enumerate() {
        if score > 0.0 {
            let dim = match mode {
                Mode::Octree => None,
                Mode::Omnitree => Some(j),
            };
            heap.push(Priority { rect, dim, score });
        }
    }
}

/// Grows a tree from the singleton until it has at least
/// `config.target_leaves` leaves.
pub fn adapt<O: Oracle + ?Sized, E: Executor>(oracle: &O, config: &AdaptConfig, exec: &E) -> Result<AdaptResult> {
    let mut out = adapt_ladder(oracle, config, &[config.target_leaves], exec)?;
    Ok(out.pop().unwrap())
}

/// Like [`adapt`], but snapshots the tree as each of the increasing
/// `targets` is reached. Because the refinement sequence does not depend on
/// the target, each snapshot equals a separate run with that target.
pub fn adapt_ladder<O: Oracle + ?Sized, E: Executor>(
    oracle: &O,
    config: &AdaptConfig,
    targets: &[usize],
    exec: &E,
) -> Result<Vec<AdaptResult>> {
    config.validate()?;
    if targets.is_empty() || targets.windows(2).any(|w| w[0] >= w[1]) || targets[0] == 0 {
        return Err(Error::InvalidConfig("leaf ladder must be positive and strictly increasing"));
    }
    let d = oracle.dim();
    let mode = config.mode;
    let mut tree = Omnitree::singleton(d)?;
    let root = Rectangle::root(d)?;
    let mut leaves = BTreeSet::from([root]);
    let mut heap = BinaryHeap::new();
    let scores = score_children(oracle, &[root], config, exec)?;
    push_scores(&mut heap, root, &scores[0], mode);

    let mut refinements = 0u64;
    let mut split_counts = vec![0u64; d];
    let mut snapshots = Vec::with_capacity(targets.len());
    let snapshot = |tree: &Omnitree, status, refinements, split_counts: &Vec<u64>| AdaptResult {
        tree: tree.clone(),
        status,
        refinements,
        split_counts: split_counts.clone(),
    };

    while snapshots.len() < targets.len() {
        if tree.leaf_count() >= targets[snapshots.len()] {
            snapshots.push(snapshot(&tree, Status::Reached, refinements, &split_counts));
            continue;
        }
        let Some(top) = heap.pop() else {
            while snapshots.len() < targets.len() {
                snapshots.push(snapshot(&tree, Status::PerfectlyResolved, refinements, &split_counts));
            }
            break;
        };
        if !leaves.contains(&top.rect) {
            continue;
        }
        let label = match top.dim {
            None => DimLabel::ones(d)?,
            Some(j) => DimLabel::unit(d, j)?,
        };
        if label.dims().any(|j| top.rect.level(j) >= MAX_LEVEL) {
            continue;
        }
        let node = tree.find_node(&top.rect).ok_or(Error::NotCovered)?;
        let mut plan = RefinementPlan::new(&tree);
        let marker: Vec<i32> = (0..d).map(|j| label.has(j) as i32).collect();
        plan.mark(node, &marker)?;
        tree = refine(&tree, &plan)?;
        refinements += 1;
        for j in label.dims() {
            split_counts[j] += 1;
        }

        leaves.remove(&top.rect);
        let children = top.rect.children(label)?;
        let scores = score_children(oracle, &children, config, exec)?;
        for (child, s) in children.iter().zip(&scores) {
            leaves.insert(*child);
            push_scores(&mut heap, *child, s, mode);
        }
    }
    Ok(snapshots)
}

/// Assigns each leaf the bit closest to the mean of `n_g` samples of `g*`
/// inside it; a mean of exactly one half gives 1.
pub fn fill_data<O: Oracle + ?Sized, E: Executor>(
    tree: &Omnitree,
    oracle: &O,
    n_g: usize,
    seed: u64,
    exec: &E,
) -> Result<Vec<bool>> {
    if oracle.dim() != tree.dim() {
        return Err(Error::DimensionMismatch { expected: tree.dim(), found: oracle.dim() });
    }
    if n_g == 0 {
        return Err(Error::InvalidConfig("fill sample count must be positive"));
    }
    let rects = tree.leaf_rectangles();
    let d = tree.dim();
    Ok(exec.map(rects.len(), |i| {
        let rect = &rects[i];
        let mut rng = rect_stream(seed, rect, Purpose::Fill);
        let mut x = vec![0.0; d];
        let mut ones = 0usize;
        for _ in 0..n_g {
            for (j, v) in x.iter_mut().enumerate() {
                *v = rect.lower(j) + rng.random::<f64>() * rect.width(j);
            }
            ones += oracle.contains(&x) as usize;
        }
        2 * ones >= n_g
    }))
}
