//! Triangle meshes: validation, normalization and point containment.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use super::{Aabb, Rotation, Solid};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidShape("mesh has no triangles"));
        }
        let n = vertices.len();
        if triangles.iter().flatten().any(|&i| i as usize >= n) {
            return Err(Error::InvalidShape("triangle references a missing vertex"));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidShape("non-finite vertex coordinate"));
        }
        Ok(Self { vertices, triangles })
    }

    pub fn bounds(&self) -> Aabb {
        let mut b = Aabb::empty();
        for &v in &self.vertices {
            b.include(v);
        }
        b
    }

    /// Every edge must be shared by exactly two triangles that traverse it in
    /// opposite directions.
    pub fn validate_watertight(&self) -> Result<()> {
        let mut directed: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for t in &self.triangles {
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::NotWatertight("degenerate triangle"));
            }
            for k in 0..3 {
                *directed.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            if count > 1 {
                return Err(Error::NotWatertight("edge traversed twice in the same direction"));
            }
            if !directed.contains_key(&(b, a)) {
                return Err(Error::NotWatertight("boundary edge"));
            }
        }
        Ok(())
    }

    /// Uniform scale and translation taking the largest extent to exactly
    /// `[0,1]` and centering the others on 0.5.
    pub fn normalized(&self) -> Result<Self> {
        let b = self.bounds();
        let extent = b.largest_extent();
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::DegenerateMesh);
        }
        let c = b.center();
        let vertices = self.vertices.iter().map(|v| core::array::from_fn(|k| (v[k] - c[k]) / extent + 0.5)).collect();
        Ok(Self { vertices, triangles: self.triangles.clone() })
    }
}

#[inline]
fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Primary ray direction followed by fallbacks, all with irrational slopes
/// so that axis-aligned and diagonal features are never grazed exactly.
pub const RAY_DIRECTIONS: [[f64; 3]; 8] = [
    [1.0, 0.414_213_562_373_095_1, 0.732_050_807_568_877_2],
    [-0.236_067_977_499_789_7, 1.0, 0.645_751_311_064_590_6],
    [0.316_624_790_355_399_8, -0.549_509_756_796_392_4, 1.0],
    [-1.0, -0.302_775_637_731_994_6, 0.162_277_660_168_379_5],
    [0.605_551_275_463_989_3, 0.872_983_346_207_416_9, -1.0],
    [-0.414_213_562_373_095_1, -1.0, -0.259_921_049_894_873_2],
    [0.847_322_101_863_072_9, -1.0, 0.442_249_570_307_408_4],
    [-0.709_975_946_676_697, 0.259_921_049_894_873_2, -1.0],
];

const BARY_EPS: f64 = 1e-9;
const LEAF_SIZE: usize = 4;

#[derive(Clone, Debug)]
struct BvhNode {
    bounds: Aabb,
    /// Leaf: triangle range `first..first + count`. Inner: `first` is the
    /// right child, the left child follows the node.
    first: u32,
    count: u32,
}

#[derive(Clone, Debug)]
struct Bvh {
    nodes: Vec<BvhNode>,
    /// Triangle corners, reordered to match the leaves.
    tris: Vec<[[f64; 3]; 3]>,
}

impl Bvh {
    fn build(mesh: &TriangleMesh) -> Self {
        let mut tris: Vec<[[f64; 3]; 3]> =
            mesh.triangles.iter().map(|t| t.map(|i| mesh.vertices[i as usize])).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1);
        Self::build_range(&mut nodes, &mut tris, 0);
        Self { nodes, tris }
    }

    fn build_range(nodes: &mut Vec<BvhNode>, tris: &mut [[[f64; 3]; 3]], offset: usize) -> usize {
        let mut bounds = Aabb::empty();
        let mut centroids = Aabb::empty();
        for t in tris.iter() {
            t.iter().for_each(|&p| bounds.include(p));
            centroids.include(centroid(t));
        }
        let id = nodes.len();
        nodes.push(BvhNode { bounds, first: offset as u32, count: tris.len() as u32 });
        if tris.len() <= LEAF_SIZE {
            return id;
        }
        let axis = (0..3)
            .max_by(|&a, &b| {
                let ea = centroids.max[a] - centroids.min[a];
                let eb = centroids.max[b] - centroids.min[b];
                ea.total_cmp(&eb)
            })
            .unwrap();
        let mid = tris.len() / 2;
        tris.select_nth_unstable_by(mid, |a, b| centroid(a)[axis].total_cmp(&centroid(b)[axis]));
        let (left, right) = tris.split_at_mut(mid);
        Self::build_range(nodes, left, offset);
        let right_id = Self::build_range(nodes, right, offset + mid);
        nodes[id].first = right_id as u32;
        nodes[id].count = 0;
        id
    }

    /// Counts crossings of the ray `o + s * dir, s > 0`. Returns the parity
    /// and whether any hit was too close to an edge, a vertex or the origin
    /// to be trusted.
    fn cast(&self, o: [f64; 3], dir: [f64; 3]) -> (bool, bool) {
        let inv = dir.map(|v| 1.0 / v);
        let mut odd = false;
        let mut degenerate = false;
        let mut stack: Vec<usize> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if !slab_hit(&node.bounds, o, inv) {
                continue;
            }
            if node.count == 0 {
                stack.push(id + 1);
                stack.push(node.first as usize);
                continue;
            }
            let range = node.first as usize..(node.first + node.count) as usize;
            for tri in &self.tris[range] {
                match ray_triangle(o, dir, tri) {
                    Hit::Miss => {}
                    Hit::Clean => odd = !odd,
                    Hit::Degenerate => {
                        odd = !odd;
                        degenerate = true;
                    }
                }
            }
        }
        (odd, degenerate)
    }
}

fn centroid(t: &[[f64; 3]; 3]) -> [f64; 3] {
    core::array::from_fn(|k| (t[0][k] + t[1][k] + t[2][k]) / 3.0)
}

fn slab_hit(b: &Aabb, o: [f64; 3], inv: [f64; 3]) -> bool {
    let mut lo = 0.0f64;
    let mut hi = f64::INFINITY;
    for k in 0..3 {
        let t1 = (b.min[k] - o[k]) * inv[k];
        let t2 = (b.max[k] - o[k]) * inv[k];
        lo = lo.max(t1.min(t2));
        hi = hi.min(t1.max(t2));
    }
    // Small slack so rays grazing a box face are not dropped.
    lo <= hi + 1e-9 * (1.0 + hi.abs())
}

enum Hit {
    Miss,
    Clean,
    Degenerate,
}

fn ray_triangle(o: [f64; 3], dir: [f64; 3], tri: &[[f64; 3]; 3]) -> Hit {
    let e1 = sub(tri[1], tri[0]);
    let e2 = sub(tri[2], tri[0]);
    let p = cross(dir, e2);
    let det = dot(e1, p);
    let scale = libm::sqrt(dot(e1, e1) * dot(e2, e2) * dot(dir, dir));
    let tv = sub(o, tri[0]);
    if det.abs() <= 1e-14 * scale {
        // Ray parallel to the plane: only a concern if it lies in it.
        let n = cross(e1, e2);
        let nn = libm::sqrt(dot(n, n));
        return if nn == 0.0 || (dot(tv, n) / nn).abs() < BARY_EPS { Hit::Degenerate } else { Hit::Miss };
    }
    let inv = 1.0 / det;
    let u = dot(tv, p) * inv;
    if !(-BARY_EPS..=1.0 + BARY_EPS).contains(&u) {
        return Hit::Miss;
    }
    let q = cross(tv, e1);
    let v = dot(dir, q) * inv;
    if v < -BARY_EPS || u + v > 1.0 + BARY_EPS {
        return Hit::Miss;
    }
    let t = dot(e2, q) * inv;
    let dir_len = libm::sqrt(dot(dir, dir));
    if t * dir_len < -BARY_EPS {
        return Hit::Miss;
    }
    if u < BARY_EPS || v < BARY_EPS || u + v > 1.0 - BARY_EPS || (t * dir_len).abs() < BARY_EPS {
        Hit::Degenerate
    } else {
        Hit::Clean
    }
}

const TABLE_STEPS: usize = 4096;
const TABLE_MIN_VERTICES: usize = 64;

/// For rotations about the main diagonal: per angle interval and per signed
/// axis, the vertices that can attain the extreme coordinate anywhere in the
/// interval. Extremes of the rotated mesh are then exact maxima over a short
/// candidate list.
#[derive(Clone, Debug)]
struct ExtremeTable {
    offsets: Vec<u32>,
    candidates: Vec<u32>,
}

impl ExtremeTable {
    fn build(vertices: &[[f64; 3]]) -> Self {
        let center = [0.5; 3];
        // Each coordinate of a rotated vertex moves at speed at most its
        // distance from the center (which lies on the axis).
        let rho = vertices
            .iter()
            .map(|&v| {
                let w = sub(v, center);
                libm::sqrt(dot(w, w))
            })
            .fold(0.0, f64::max);
        let step = TAU / TABLE_STEPS as f64;
        let slack = 2.0 * rho * step + 1e-12;
        let mut offsets = Vec::with_capacity(TABLE_STEPS * 6 + 1);
        let mut candidates = Vec::new();
        let mut rotated = alloc::vec![[0.0; 3]; vertices.len()];
        offsets.push(0);
        for i in 0..TABLE_STEPS {
            let rot = Rotation::about_diagonal(i as f64 * step);
            for (r, &v) in rotated.iter_mut().zip(vertices) {
                *r = rot.apply(v);
            }
            for slot in 0..6 {
                let (k, sign) = (slot / 2, if slot % 2 == 0 { 1.0 } else { -1.0 });
                let best = rotated.iter().map(|r| sign * r[k]).fold(f64::NEG_INFINITY, f64::max);
                for (idx, r) in rotated.iter().enumerate() {
                    if sign * r[k] >= best - slack {
                        candidates.push(idx as u32);
                    }
                }
                offsets.push(candidates.len() as u32);
            }
        }
        Self { offsets, candidates }
    }

    fn slot(&self, interval: usize, slot: usize) -> &[u32] {
        let i = interval * 6 + slot;
        &self.candidates[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }
}

/// A validated, normalized mesh ready for containment queries.
#[derive(Clone, Debug)]
pub struct MeshSolid {
    mesh: TriangleMesh,
    bounds: Aabb,
    bvh: Bvh,
    table: Option<ExtremeTable>,
}

impl MeshSolid {
    /// Validates watertightness, normalizes to the unit cube and builds the
    /// acceleration structures.
    pub fn new(mesh: TriangleMesh) -> Result<Self> {
        mesh.validate_watertight()?;
        let mesh = mesh.normalized()?;
        let bvh = Bvh::build(&mesh);
        let table = (mesh.vertices.len() > TABLE_MIN_VERTICES).then(|| ExtremeTable::build(&mesh.vertices));
        Ok(Self { bounds: mesh.bounds(), mesh, bvh, table })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    /// Ray-parity containment using the given direction list: the first
    /// direction without a near-degenerate hit decides; if all are
    /// degenerate the parities are put to a majority vote.
    pub fn contains_with(&self, p: [f64; 3], directions: &[[f64; 3]]) -> bool {
        let b = &self.bounds;
        if (0..3).any(|k| p[k] < b.min[k] - BARY_EPS || p[k] > b.max[k] + BARY_EPS) {
            return false;
        }
        let mut inside_votes = 0;
        for &dir in directions {
            let (odd, degenerate) = self.bvh.cast(p, dir);
            if !degenerate {
                return odd;
            }
            inside_votes += odd as usize;
        }
        2 * inside_votes > directions.len()
    }
}

impl Solid for MeshSolid {
    fn contains_point(&self, p: [f64; 3]) -> bool {
        self.contains_with(p, &RAY_DIRECTIONS)
    }

    fn rotated_bounds(&self, rot: &Rotation) -> Aabb {
        let vertices = &self.mesh.vertices;
        match &self.table {
            Some(table) if rot.is_about_diagonal() => {
                let theta = rot.theta() - TAU * libm::floor(rot.theta() / TAU);
                let interval = ((theta / TAU * TABLE_STEPS as f64) as usize).min(TABLE_STEPS - 1);
                let mut b = Aabb::empty();
                for slot in 0..6 {
                    for &idx in table.slot(interval, slot) {
                        b.include(rot.apply(vertices[idx as usize]));
                    }
                }
                b
            }
            _ => {
                let mut b = Aabb::empty();
                for &v in vertices {
                    b.include(rot.apply(v));
                }
                b
            }
        }
    }
}
