mod common;

use common::random_tree;
use omnitree_core::driver::{fill_data, Sequential};
use omnitree_core::metrics::{evaluate, information_density, l1_error, Coding};
use omnitree_core::oracle::{Halfspace, SolidOracle, Sphere};
use omnitree_core::Omnitree;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform(d: usize, levels: u32) -> Omnitree {
    let ones = "1".repeat(d);
    let zeros = "0".repeat(d);
    fn walk(depth: u32, levels: u32, d: usize, ones: &str, zeros: &str, out: &mut Vec<String>) {
        if depth == levels {
            out.push(zeros.to_owned());
            return;
        }
        out.push(ones.to_owned());
        for _ in 0..1 << d {
            walk(depth + 1, levels, d, ones, zeros, out);
        }
    }
    let mut labels = Vec::new();
    walk(0, levels, d, &ones, &zeros, &mut labels);
    Omnitree::parse(d, &labels.join(" ")).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn l1_is_a_fraction(seed in any::<u64>(), d in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_tree(&mut rng, d, 60);
        let field: Vec<bool> = (0..tree.leaf_count()).map(|_| rng.random()).collect();
        let h = Halfspace::new(d, rng.random_range(0..d), rng.random_range(0.05..0.95)).unwrap();
        let e = l1_error(&tree, &field, &h, 2000, seed, &Sequential).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        let flipped: Vec<bool> = field.iter().map(|b| !b).collect();
        let f = l1_error(&tree, &flipped, &h, 2000, seed, &Sequential).unwrap();
        // Same points, complementary mismatches.
        prop_assert!((e + f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_ignores_order(mut bits in proptest::collection::vec(any::<bool>(), 1..200), seed in any::<u64>()) {
        let h = information_density(&bits).unwrap();
        prop_assert!((0.0..=1.0).contains(&h));
        bits.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(information_density(&bits).unwrap(), h);
    }
}

#[test]
fn resolved_trees_have_zero_error() {
    // Leaves never straddle x_0 = 1/2 once the root splits x_0.
    let tree = Omnitree::parse(3, "100 011 000 000 000 000 000").unwrap();
    let h = Halfspace::new(3, 0, 0.5).unwrap();
    let field = fill_data(&tree, &h, 64, 1, &Sequential).unwrap();
    assert_eq!(field, [true, true, true, true, false]);
    for n_e in [1, 100, 4097, 50_000] {
        assert_eq!(l1_error(&tree, &field, &h, n_e, 9, &Sequential).unwrap(), 0.0);
    }
}

#[test]
fn l1_matches_mismatched_volume() {
    // Cells in x_0 ∈ [1/4, 1/2) are 20% inside and get 0, so the
    // slab [1/4, 0.3) is wrong: error 0.05 exactly.
    let tree = uniform(3, 2);
    let h = Halfspace::new(3, 0, 0.3).unwrap();
    let field = fill_data(&tree, &h, 2048, 2, &Sequential).unwrap();
    let e = l1_error(&tree, &field, &h, 1 << 18, 3, &Sequential).unwrap();
    assert!((e - 0.05).abs() < 0.002, "{e}");
}

#[test]
fn evaluation_is_deterministic_and_consistent() {
    let tree = uniform(3, 3);
    let oracle = SolidOracle(Sphere);
    let field = fill_data(&tree, &oracle, 256, 5, &Sequential).unwrap();
    let a = evaluate(&tree, &field, &oracle, Coding::Octree, 10_000, 5, &Sequential).unwrap();
    let b = evaluate(&tree, &field, &oracle, Coding::Octree, 10_000, 5, &Sequential).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.leaves, 512);
    assert_eq!(a.tree_bits, 585);
    assert_eq!(a.data_bits, 512);
    let omni = evaluate(&tree, &field, &oracle, Coding::Omnitree, 10_000, 5, &Sequential).unwrap();
    assert_eq!(omni.tree_bits, 3 * 585);
    assert_eq!(omni.l1_error, a.l1_error);
    let c = evaluate(&tree, &field, &oracle, Coding::Octree, 10_000, 6, &Sequential).unwrap();
    assert_ne!(a.l1_error, c.l1_error);
}
