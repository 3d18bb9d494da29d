//! Leaf geometry export: box meshes of filled leaves (OBJ) and per-leaf
//! level-index tables (CSV).

use std::io::Write;

use anyhow::{bail, Result};
use omnitree_core::{Omnitree, Rectangle};

/// Keeps the leaves whose time interval holds `t` and drops the time axis.
/// Intervals are half-open except that `t = 1` falls in the last one.
pub fn time_slice(tree: &Omnitree, field: &[bool], t: f64) -> Result<Vec<(Rectangle, bool)>> {
    let d = tree.dim();
    if d < 2 {
        bail!("time slices need at least two dimensions");
    }
    if !(0.0..=1.0).contains(&t) {
        bail!("slice time {t} lies outside [0, 1]");
    }
    let k = d - 1;
    let mut out = Vec::new();
    for (rect, &bit) in tree.leaf_rectangles().iter().zip(field) {
        let (lo, hi) = (rect.lower(k), rect.upper(k));
        if lo <= t && (t < hi || (hi == 1.0 && t == 1.0)) {
            out.push((Rectangle::new(&rect.levels()[..k], &rect.indices()[..k])?, bit));
        }
    }
    Ok(out)
}

/// One axis-aligned box (8 vertices, 12 outward-facing triangles) per
/// filled 3-d leaf.
pub fn write_obj<W: Write>(leaves: &[(Rectangle, bool)], mut w: W) -> Result<()> {
    #[rustfmt::skip]
    const FACES: [[usize; 3]; 12] = [
        [0, 2, 1], [1, 2, 3], // x = lo
        [4, 5, 6], [5, 7, 6], // x = hi
        [0, 1, 4], [1, 5, 4], // y = lo
        [2, 6, 3], [3, 6, 7], // y = hi
        [0, 4, 2], [2, 4, 6], // z = lo
        [1, 3, 5], [3, 7, 5], // z = hi
    ];
    let mut base = 1;
    for (rect, _) in leaves.iter().filter(|(_, bit)| *bit) {
        if rect.dim() != 3 {
            bail!("OBJ export needs 3-d leaves, got {}-d", rect.dim());
        }
        // Corner c has x from bit 2, y from bit 1, z from bit 0.
        for c in 0..8 {
            let p: Vec<f64> =
                (0..3).map(|j| if c >> (2 - j) & 1 == 1 { rect.upper(j) } else { rect.lower(j) }).collect();
            writeln!(w, "v {} {} {}", p[0], p[1], p[2])?;
        }
        for f in FACES {
            writeln!(w, "f {} {} {}", base + f[0], base + f[1], base + f[2])?;
        }
        base += 8;
    }
    Ok(())
}

/// Header `i0..i{d-1},l0..l{d-1},bit`, then one row per leaf in Z order.
pub fn write_csv<W: Write>(tree: &Omnitree, field: &[bool], mut w: W) -> Result<()> {
    let d = tree.dim();
    let header: Vec<String> =
        (0..d).map(|j| format!("i{j}")).chain((0..d).map(|j| format!("l{j}"))).chain(["bit".into()]).collect();
    writeln!(w, "{}", header.join(","))?;
    for (rect, &bit) in tree.leaf_rectangles().iter().zip(field) {
        let cells: Vec<String> = rect
            .indices()
            .iter()
            .map(u64::to_string)
            .chain(rect.levels().iter().map(u8::to_string))
            .chain([(bit as u8).to_string()])
            .collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj_for(tree: &Omnitree, field: &[bool]) -> String {
        let leaves: Vec<_> = tree.leaf_rectangles().into_iter().zip(field.iter().copied()).collect();
        let mut out = Vec::new();
        write_obj(&leaves, &mut out).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn single_box() {
        let t = Omnitree::singleton(3).unwrap();
        let obj = obj_for(&t, &[true]);
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 8);
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 12);
        assert_eq!(obj_for(&t, &[false]), "");
    }

    #[test]
    fn csv_rows() {
        let t = Omnitree::parse(2, "10 01 00 00 10 00 00").unwrap();
        let mut out = Vec::new();
        write_csv(&t, &[true, false, true, false], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "i0,i1,l0,l1,bit\n0,0,1,1,1\n0,1,1,1,0\n2,0,2,0,1\n3,0,2,0,0\n");
    }

    #[test]
    fn slices() {
        let t = Omnitree::parse(2, "01 00 00").unwrap();
        let s = time_slice(&t, &[true, false], 0.25).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s[0].1);
        assert_eq!(s[0].0.dim(), 1);
        assert!(!time_slice(&t, &[true, false], 1.0).unwrap()[0].1);
        assert!(time_slice(&t, &[true, false], 1.5).is_err());
    }
}
