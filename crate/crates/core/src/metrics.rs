//! Error, convergence and storage measures for a filled tree.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::codec::storage_report;
use crate::driver::Executor;
use crate::oracle::Oracle;
use crate::rng::{keyed_stream, Purpose};
use crate::tree::Omnitree;
use crate::{Error, Result};

/// Evaluation points per work item.
pub const EVAL_CHUNK: usize = 4096;

/// Monte Carlo estimate of `∫ |g' - g*|` over the unit hypercube, with `g'`
/// the piecewise-constant function given by `field`.
///
/// Points come from substreams keyed by `(leaf count, chunk)`, so trees of
/// different size are measured on fresh points while two trees of the same
/// size (e.g. octree and omnitree) share them.
pub fn l1_error<O: Oracle + ?Sized, E: Executor>(
    tree: &Omnitree,
    field: &[bool],
    oracle: &O,
    n_e: usize,
    seed: u64,
    exec: &E,
) -> Result<f64> {
    if field.len() != tree.leaf_count() {
        return Err(Error::FieldLength { expected: tree.leaf_count(), found: field.len() });
    }
    if oracle.dim() != tree.dim() {
        return Err(Error::DimensionMismatch { expected: tree.dim(), found: oracle.dim() });
    }
    if n_e == 0 {
        return Err(Error::InvalidConfig("error sample count must be positive"));
    }
    let d = tree.dim();
    let leaves = tree.leaf_count() as u64;
    let counts = exec.map(n_e.div_ceil(EVAL_CHUNK), |c| {
        let mut rng = keyed_stream(seed, &[leaves, c as u64], Purpose::Eval);
        let mut x = vec![0.0; d];
        let mut mismatches = 0u64;
        for _ in c * EVAL_CHUNK..((c + 1) * EVAL_CHUNK).min(n_e) {
            x.iter_mut().for_each(|v| *v = rng.random::<f64>());
            let (leaf, _) = tree.locate_unchecked(&x);
            mismatches += (field[leaf] != oracle.contains(&x)) as u64;
        }
        mismatches
    });
    Ok(counts.iter().sum::<u64>() as f64 / n_e as f64)
}

/// `ln(e1 / e2) / ln(N2 / N1)`. `None` when either error is not positive,
/// i.e. the shape is already perfectly resolved.
pub fn convergence_rate(e1: f64, n1: usize, e2: f64, n2: usize) -> Option<f64> {
    if !(e1 > 0.0 && e2 > 0.0) || n1 == 0 || n2 <= n1 {
        return None;
    }
    Some(libm::log(e1 / e2) / libm::log(n2 as f64 / n1 as f64))
}

/// Shannon entropy (in bits) of the symbol frequencies of a bit string.
pub fn information_density(field: &[bool]) -> Result<f64> {
    if field.is_empty() {
        return Err(Error::EmptyField);
    }
    let p1 = field.iter().filter(|&&b| b).count() as f64 / field.len() as f64;
    let h = |p: f64| if p > 0.0 { -p * libm::log2(p) } else { 0.0 };
    Ok(h(p1) + h(1.0 - p1))
}

/// How tree bits are counted: `d` per node, or one per node for octrees.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coding {
    Omnitree,
    Octree,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalResult {
    pub leaves: usize,
    pub l1_error: f64,
    pub tree_bits: u64,
    pub data_bits: u64,
    pub info_density: f64,
    pub n_e: usize,
    pub seed: u64,
}

pub fn evaluate<O: Oracle + ?Sized, E: Executor>(
    tree: &Omnitree,
    field: &[bool],
    oracle: &O,
    coding: Coding,
    n_e: usize,
    seed: u64,
    exec: &E,
) -> Result<EvalResult> {
    let l1 = l1_error(tree, field, oracle, n_e, seed, exec)?;
    let storage = storage_report(tree, 1);
    let tree_bits = match coding {
        Coding::Omnitree => storage.tree_bits_omnitree,
        Coding::Octree => storage.tree_bits_octree.ok_or(Error::NotAnOctree)?,
    };
    Ok(EvalResult {
        leaves: tree.leaf_count(),
        l1_error: l1,
        tree_bits,
        data_bits: storage.data_bits,
        info_density: information_density(field)?,
        n_e,
        seed,
    })
}

/// Rates between consecutive `(N, error)` points; the first entry is `None`.
pub fn ladder_rates(points: &[(usize, f64)]) -> Vec<Option<f64>> {
    let mut out = vec![None; points.len()];
    for k in 1..points.len() {
        let (n1, e1) = points[k - 1];
        let (n2, e2) = points[k];
        out[k] = convergence_rate(e1, n1, e2, n2);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::Sequential;
    use crate::oracle::{BoxSolid, Constant, SolidOracle};

    #[test]
    fn rate_examples() {
        assert!((convergence_rate(0.1, 100, 0.05, 200).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(convergence_rate(0.1, 100, 0.1, 200), Some(0.0));
        assert!((convergence_rate(0.04, 64, 0.01, 1024).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(convergence_rate(0.0, 64, 0.01, 1024), None);
        assert_eq!(convergence_rate(0.1, 64, 0.0, 1024), None);
        assert!(convergence_rate(0.1, 64, 0.2, 128).unwrap() < 0.0);
        assert_eq!(ladder_rates(&[(16, 0.2), (32, 0.1)]), vec![None, Some(1.0)]);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(information_density(&[false; 10]).unwrap(), 0.0);
        assert_eq!(information_density(&[true, false]).unwrap(), 1.0);
        let h = information_density(&[true, false, false, false]).unwrap();
        assert!((h - 0.811_278_124_459_132_8).abs() < 1e-12);
        assert_eq!(information_density(&[]).unwrap_err(), Error::EmptyField);
    }

    #[test]
    fn l1_examples() {
        let t = Omnitree::singleton(3).unwrap();
        let cube = SolidOracle(BoxSolid::unit_cube());
        assert_eq!(l1_error(&t, &[true], &cube, 10_000, 1, &Sequential).unwrap(), 0.0);
        let empty = Constant { dim: 3, value: false };
        assert_eq!(l1_error(&t, &[true], &empty, 10_000, 1, &Sequential).unwrap(), 1.0);
        assert!(matches!(l1_error(&t, &[true, false], &cube, 10, 1, &Sequential), Err(Error::FieldLength { .. })));

        let r = evaluate(&t, &[true], &cube, Coding::Octree, 1000, 3, &Sequential).unwrap();
        assert_eq!((r.leaves, r.l1_error, r.tree_bits, r.data_bits, r.info_density), (1, 0.0, 1, 1, 0.0));
        let r = evaluate(&t, &[true], &cube, Coding::Omnitree, 1000, 3, &Sequential).unwrap();
        assert_eq!(r.tree_bits, 3);
    }
}
