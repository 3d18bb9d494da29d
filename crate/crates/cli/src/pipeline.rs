//! The refine / fill / evaluate pipeline and its on-disk artifacts.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use omnitree_core::codec::{self, OCTREE_MAGIC, TREE_MAGIC};
use omnitree_core::driver::{adapt_ladder, fill_data, AdaptConfig, AdaptResult, Executor, Mode, Status};
use omnitree_core::metrics::{convergence_rate, evaluate, Coding, EvalResult};
use omnitree_core::oracle::Oracle;
use omnitree_core::Omnitree;
use serde::Serialize;

pub const DEFAULT_N_S: usize = 512;

/// Fill samples per leaf.
pub fn default_n_g(d: usize) -> usize {
    if d >= 4 {
        8192
    } else {
        4096
    }
}

/// Error samples over the whole domain.
pub fn default_n_e(d: usize) -> usize {
    if d >= 4 {
        1 << 24
    } else {
        1 << 18
    }
}

pub fn coding(mode: Mode) -> Coding {
    match mode {
        Mode::Octree => Coding::Octree,
        Mode::Omnitree => Coding::Omnitree,
    }
}

/// A refined tree with one bit per leaf.
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub mode: Mode,
    pub adapt: AdaptResult,
    pub field: Vec<bool>,
}

impl Artifacts {
    pub fn tree(&self) -> &Omnitree {
        &self.adapt.tree
    }

    pub fn perfectly_resolved(&self) -> bool {
        self.adapt.status == Status::PerfectlyResolved
    }

    /// Octree-mode trees use the one-bit-per-node coding.
    pub fn tree_blob(&self) -> Result<Vec<u8>> {
        Ok(match self.mode {
            Mode::Octree => codec::encode_octree(self.tree())?,
            Mode::Omnitree => codec::encode(self.tree()),
        })
    }

    pub fn field_blob(&self) -> Vec<u8> {
        codec::encode_field(&self.field)
    }

    pub fn write(&self, tree_path: &Path, field_path: &Path) -> Result<()> {
        fs::write(tree_path, self.tree_blob()?).with_context(|| format!("cannot write {}", tree_path.display()))?;
        fs::write(field_path, self.field_blob()).with_context(|| format!("cannot write {}", field_path.display()))?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Budget {
    pub n_s: usize,
    pub n_g: usize,
    pub seed: u64,
}

/// Refines toward each ladder target and fills each snapshot.
pub fn refine_ladder<O: Oracle + ?Sized, E: Executor>(
    oracle: &O,
    mode: Mode,
    targets: &[usize],
    budget: Budget,
    exec: &E,
) -> Result<Vec<Artifacts>> {
    let config = AdaptConfig {
        mode,
        target_leaves: *targets.last().context("empty leaf ladder")?,
        n_s: budget.n_s,
        seed: budget.seed,
    };
    let snaps = adapt_ladder(oracle, &config, targets, exec)?;
    snaps
        .into_iter()
        .map(|adapt| {
            let field = fill_data(&adapt.tree, oracle, budget.n_g, budget.seed, exec)?;
            Ok(Artifacts { mode, adapt, field })
        })
        .collect()
}

pub fn refine_shape<O: Oracle + ?Sized, E: Executor>(
    oracle: &O,
    mode: Mode,
    max_leaves: usize,
    budget: Budget,
    exec: &E,
) -> Result<Artifacts> {
    Ok(refine_ladder(oracle, mode, &[max_leaves], budget, exec)?.pop().unwrap())
}

/// Reads a tree blob (either coding) and a field blob, checking they match.
pub fn read_artifacts(tree_path: &Path, field_path: &Path) -> Result<(Omnitree, Vec<bool>, Coding)> {
    let (tree, coding) = read_tree(tree_path)?;
    let blob = fs::read(field_path).with_context(|| format!("cannot read {}", field_path.display()))?;
    let field = codec::decode_field(&blob).with_context(|| format!("corrupt field blob {}", field_path.display()))?;
    if field.len() != tree.leaf_count() {
        bail!("field has {} bits but the tree has {} leaves", field.len(), tree.leaf_count());
    }
    Ok((tree, field, coding))
}

pub fn read_tree(path: &Path) -> Result<(Omnitree, Coding)> {
    let blob = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let coding = match blob.get(..4) {
        Some(m) if m == OCTREE_MAGIC => Coding::Octree,
        Some(m) if m == TREE_MAGIC => Coding::Omnitree,
        _ => bail!("{} is not a tree blob", path.display()),
    };
    let tree = codec::decode_any(&blob).with_context(|| format!("corrupt tree blob {}", path.display()))?;
    Ok((tree, coding))
}

/// Flat JSON form of an evaluation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRecord {
    #[serde(rename = "N")]
    pub leaves: usize,
    pub l1_error: f64,
    pub tree_bits: u64,
    pub data_bits: u64,
    pub info_density: f64,
    pub n_e: usize,
    pub seed: u64,
}

impl From<EvalResult> for EvalRecord {
    fn from(r: EvalResult) -> Self {
        Self {
            leaves: r.leaves,
            l1_error: r.l1_error,
            tree_bits: r.tree_bits,
            data_bits: r.data_bits,
            info_density: r.info_density,
            n_e: r.n_e,
            seed: r.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub shape: String,
    pub mode: &'static str,
    pub d: usize,
    pub leaves: usize,
    pub l1_error: f64,
    /// Rate from the previous ladder point of the same mode and seed.
    pub rate: Option<f64>,
    pub tree_bits: u64,
    pub data_bits: u64,
    pub info_density: f64,
    pub seed: u64,
}

pub struct SweepSpec<'a> {
    pub shape_name: &'a str,
    pub modes: &'a [Mode],
    pub ladder: &'a [usize],
    pub seeds: &'a [u64],
    pub n_s: usize,
    pub n_g: usize,
    pub n_e: usize,
}

/// One row per (seed, mode, ladder point), in that nesting order.
pub fn sweep<O: Oracle + ?Sized, E: Executor>(oracle: &O, spec: &SweepSpec, exec: &E) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &seed in spec.seeds {
        for &mode in spec.modes {
            let budget = Budget { n_s: spec.n_s, n_g: spec.n_g, seed };
            let arts = refine_ladder(oracle, mode, spec.ladder, budget, exec)?;
            let mut prev: Option<(usize, f64)> = None;
            for a in &arts {
                let r = evaluate(a.tree(), &a.field, oracle, coding(mode), spec.n_e, seed, exec)?;
                rows.push(SweepRow {
                    shape: spec.shape_name.to_owned(),
                    mode: mode.name(),
                    d: oracle.dim(),
                    leaves: r.leaves,
                    l1_error: r.l1_error,
                    rate: prev.and_then(|(n, e)| convergence_rate(e, n, r.l1_error, r.leaves)),
                    tree_bits: r.tree_bits,
                    data_bits: r.data_bits,
                    info_density: r.info_density,
                    seed,
                });
                prev = Some((r.leaves, r.l1_error));
            }
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "shape,mode,d,N,l1_error,rate,tree_bits,data_bits,info_density,seed";

pub fn write_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        let rate = r.rate.map(|x| x.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.shape),
            r.mode,
            r.d,
            r.leaves,
            r.l1_error,
            rate,
            r.tree_bits,
            r.data_bits,
            r.info_density,
            r.seed
        )?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// `16..8192` (powers of two, inclusive) or a comma list.
pub fn parse_ladder(s: &str) -> Result<Vec<usize>> {
    let ladder: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
        if !a.is_power_of_two() || !b.is_power_of_two() || a > b {
            bail!("ladder range {s:?} must run between powers of two");
        }
        std::iter::successors(Some(a), |&n| n.checked_mul(2)).take_while(|&n| n <= b).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<usize>().with_context(|| format!("bad ladder entry {t:?}")))
            .collect::<Result<_>>()?
    };
    if ladder.is_empty() || ladder[0] == 0 || ladder.windows(2).any(|w| w[0] >= w[1]) {
        bail!("leaf ladder must be positive and strictly increasing");
    }
    Ok(ladder)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladders() {
        assert_eq!(parse_ladder("16..128").unwrap(), [16, 32, 64, 128]);
        assert_eq!(parse_ladder("4, 9,20").unwrap(), [4, 9, 20]);
        assert!(parse_ladder("16..100").is_err());
        assert!(parse_ladder("8,8").is_err());
        assert!(parse_ladder("0,4").is_err());
    }

    #[test]
    fn csv_layout() {
        let row = SweepRow {
            shape: "halfspace:0:0.5".into(),
            mode: "octree",
            d: 3,
            leaves: 8,
            l1_error: 0.25,
            rate: None,
            tree_bits: 9,
            data_bits: 8,
            info_density: 1.0,
            seed: 4,
        };
        let mut out = Vec::new();
        write_csv(&[row], &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            format!("{CSV_HEADER}\nhalfspace:0:0.5,octree,3,8,0.25,,9,8,1,4\n")
        );
    }
}
