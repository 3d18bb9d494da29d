mod common;

use std::collections::BTreeSet;

use common::{leaf_set, random_tree, subdivide};
use omnitree_core::codec::{decode, encode};
use omnitree_core::refinement::{sweep_down, sweep_up};
use omnitree_core::{refine, Omnitree, Rectangle, RefinementPlan};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check_locate(tree: &Omnitree, rng: &mut ChaCha8Rng, points: usize) {
    let leaves = tree.leaf_rectangles();
    for _ in 0..points {
        let x: Vec<f64> = (0..tree.dim()).map(|_| rng.random()).collect();
        let k = tree.locate(&x).unwrap();
        let owners: Vec<usize> = (0..leaves.len()).filter(|&i| leaves[i].contains_point(&x)).collect();
        assert_eq!(owners, vec![k]);
    }
}

fn volume_sum(tree: &Omnitree) -> f64 {
    tree.leaf_rectangles().iter().map(Rectangle::volume).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Splitting one leaf in one dimension replaces exactly that leaf by its
    /// two halves and keeps the tree normalized.
    #[test]
    fn single_unit_sequences(seed in any::<u64>(), d in 2usize..=4, steps in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tree = Omnitree::singleton(d).unwrap();
        for _ in 0..steps {
            let leaves = tree.leaf_rectangles();
            let pick = rng.random_range(0..leaves.len());
            let j = rng.random_range(0..d);
            let node = tree.find_node(&leaves[pick]).unwrap();
            let mut marker = vec![0; d];
            marker[j] = 1;
            let mut plan = RefinementPlan::new(&tree);
            plan.mark(node, &marker).unwrap();
            let next = refine(&tree, &plan).unwrap();

            let mut levels = vec![0u8; d];
            levels[j] = 1;
            let mut expected = leaf_set(&tree);
            expected.remove(&leaves[pick]);
            expected.extend(subdivide(&leaves[pick], &levels));
            prop_assert_eq!(leaf_set(&next), expected);
            prop_assert!(next.is_normalized());
            prop_assert!((volume_sum(&next) - 1.0).abs() < 1e-12);
            prop_assert_eq!(decode(&encode(&next)).unwrap(), next.clone());
            tree = next;
        }
        check_locate(&tree, &mut rng, 200);
    }

    /// Arbitrary plans, including markers on inner nodes and several levels
    /// at once: every leaf gains the levels marked on its path from the root.
    #[test]
    fn multi_marker_plans(seed in any::<u64>(), d in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_tree(&mut rng, d, 40);
        let mut plan = RefinementPlan::new(&tree);
        let mut per_node = vec![vec![0i32; d]; tree.node_count()];
        for node in 0..tree.node_count() {
            if rng.random_bool(0.15) {
                let mut m: Vec<i32> = (0..d).map(|_| rng.random_range(0..=2)).collect();
                if m.iter().all(|&v| v == 0) {
                    m[rng.random_range(0..d)] = 1;
                }
                plan.mark(node, &m).unwrap();
                per_node[node] = m;
            }
        }
        // Path sums by walking from the root to each leaf.
        let nodes = tree.node_rectangles();
        let mut extras = Vec::new();
        for leaf in (0..tree.node_count()).filter(|&v| tree.is_leaf(v)) {
            let mut extra = vec![0u8; d];
            for v in 0..tree.node_count() {
                if nodes[v].covers(&nodes[leaf]) {
                    for j in 0..d {
                        extra[j] += per_node[v][j] as u8;
                    }
                }
            }
            extras.push((leaf, extra));
        }
        let size: u64 = extras.iter().map(|(_, e)| 1u64 << e.iter().map(|&x| x as u32).sum::<u32>()).sum();
        prop_assume!(size <= 1 << 14);
        let mut expected = BTreeSet::new();
        for (leaf, extra) in &extras {
            expected.extend(subdivide(&nodes[*leaf], extra));
        }
        let refined = refine(&tree, &plan).unwrap();
        prop_assert_eq!(leaf_set(&refined), expected);
        prop_assert!((volume_sum(&refined) - 1.0).abs() < 1e-12);
    }

    /// Sweeps never lose or invent refinement: after both sweeps, every leaf
    /// still gets the same total along its path.
    #[test]
    fn sweeps_conserve_path_totals(seed in any::<u64>(), d in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_tree(&mut rng, d, 60);
        let mut plan = RefinementPlan::new(&tree);
        for v in 0..tree.node_count() {
            if tree.is_leaf(v) && rng.random_bool(0.5) {
                let mut m = vec![0; d];
                m[rng.random_range(0..d)] = 1;
                plan.mark(v, &m).unwrap();
            }
        }
        let up = sweep_up(&tree, &plan).unwrap();
        let down = sweep_down(&tree, up.clone()).unwrap();
        let nodes = tree.node_rectangles();
        for leaf in (0..tree.node_count()).filter(|&v| tree.is_leaf(v)) {
            let total = |get: &dyn Fn(usize) -> Vec<i32>| {
                let mut t = vec![0; d];
                for v in 0..tree.node_count() {
                    if nodes[v].covers(&nodes[leaf]) {
                        let m = get(v);
                        for j in 0..d {
                            t[j] += m[j] + (v != leaf && tree.label(v).has(j)) as i32;
                        }
                    }
                }
                t
            };
            let before = total(&|v| plan.marker(v).map_or(vec![0; d], <[i32]>::to_vec));
            prop_assert_eq!(total(&|v| up.get(v).to_vec()), before.clone());
            prop_assert_eq!(total(&|v| down.get(v).to_vec()), before);
        }
    }
}

#[test]
fn all_ones_refinement_of_every_leaf_is_uniform() {
    let mut tree = Omnitree::singleton(3).unwrap();
    for level in 1..=3u8 {
        let mut plan = RefinementPlan::new(&tree);
        for v in 0..tree.node_count() {
            if tree.is_leaf(v) {
                plan.mark(v, &[1, 1, 1]).unwrap();
            }
        }
        tree = refine(&tree, &plan).unwrap();
        assert_eq!(tree.leaf_count(), 1 << (3 * level));
        assert!(tree.leaf_rectangles().iter().all(|r| r.levels() == [level; 3]));
        assert!(tree.is_octree());
    }
}
