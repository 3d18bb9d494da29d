#![allow(dead_code)]

use std::collections::BTreeSet;

use omnitree_core::oracle::TriangleMesh;
use omnitree_core::{DimLabel, Omnitree, Rectangle};
use rand::Rng;

/// Random label sequence built top-down, independent of the refinement code.
pub fn random_tree<R: Rng>(rng: &mut R, d: usize, max_nodes: usize) -> Omnitree {
    let mut labels = Vec::new();
    let mut pending = 1usize;
    while pending > 0 {
        let room = labels.len() + pending + (1 << d) <= max_nodes;
        let bits: u16 = if room && rng.random_bool(0.45) { rng.random_range(1..(1u32 << d)) as u16 } else { 0 };
        let label = DimLabel::new(d, bits).unwrap();
        pending = pending - 1 + if bits == 0 { 0 } else { label.child_count() };
        labels.push(label);
    }
    Omnitree::from_labels(d, labels).unwrap()
}

/// Leaf boxes expected after splitting `rect` by `levels` extra levels per
/// dimension, computed by plain index arithmetic.
pub fn subdivide(rect: &Rectangle, levels: &[u8]) -> Vec<Rectangle> {
    let d = rect.dim();
    let mut out = vec![*rect];
    for j in 0..d {
        let mut next = Vec::new();
        for r in &out {
            let shift = levels[j];
            for k in 0..(1u64 << shift) {
                let mut l = r.levels().to_vec();
                let mut i = r.indices().to_vec();
                l[j] += shift;
                i[j] = (i[j] << shift) | k;
                next.push(Rectangle::new(&l, &i).unwrap());
            }
        }
        out = next;
    }
    out
}

pub fn leaf_set(tree: &Omnitree) -> BTreeSet<Rectangle> {
    tree.leaf_rectangles().into_iter().collect()
}

/// Geodesic sphere of radius `r` centered at `c`, outward oriented.
pub fn icosphere(subdivisions: u32, r: f64, c: [f64; 3]) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    #[rustfmt::skip]
    let mut v: Vec<[f64; 3]> = vec![
        [-1.0, t, 0.0], [1.0, t, 0.0], [-1.0, -t, 0.0], [1.0, -t, 0.0],
        [0.0, -1.0, t], [0.0, 1.0, t], [0.0, -1.0, -t], [0.0, 1.0, -t],
        [t, 0.0, -1.0], [t, 0.0, 1.0], [-t, 0.0, -1.0], [-t, 0.0, 1.0],
    ];
    #[rustfmt::skip]
    let mut f: Vec<[u32; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    let unit = |p: [f64; 3]| {
        let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        p.map(|x| x / n)
    };
    v = v.into_iter().map(unit).collect();
    for _ in 0..subdivisions {
        let mut cache = std::collections::HashMap::new();
        let mut mid = |a: u32, b: u32, v: &mut Vec<[f64; 3]>| -> u32 {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let (pa, pb) = (v[a as usize], v[b as usize]);
                v.push(unit([(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0, (pa[2] + pb[2]) / 2.0]));
                (v.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(f.len() * 4);
        for [a, b, c] in f {
            let ab = mid(a, b, &mut v);
            let bc = mid(b, c, &mut v);
            let ca = mid(c, a, &mut v);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = next;
    }
    let v = v.into_iter().map(|p| [c[0] + r * p[0], c[1] + r * p[1], c[2] + r * p[2]]).collect();
    TriangleMesh::new(v, f).unwrap()
}
