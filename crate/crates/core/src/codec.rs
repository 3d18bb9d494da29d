//! Binary containers for trees and leaf data.
//!
//! All three formats share a fixed header (magic, version byte, little-endian
//! integers) followed by a bit payload packed most significant bit first and
//! zero-padded to a whole byte.
//!
//! | magic  | header after version               | payload                   |
//! |--------|------------------------------------|---------------------------|
//! | `OMNI` | `d: u16`, `node_count: u64`        | `d` label bits per node   |
//! | `OMNO` | `d: u16`, `node_count: u64`        | 1 bit per node (1 = split)|
//! | `OMNG` | `leaf_count: u64`, `bits_per_leaf: u8` | leaf bits in Z order  |

use alloc::vec::Vec;

use crate::tree::{DimLabel, Omnitree};
use crate::{Error, Result, MAX_DIM};

pub const TREE_MAGIC: [u8; 4] = *b"OMNI";
pub const OCTREE_MAGIC: [u8; 4] = *b"OMNO";
pub const FIELD_MAGIC: [u8; 4] = *b"OMNG";
pub const VERSION: u8 = 1;

const TREE_HEADER: usize = 4 + 1 + 2 + 8;
const FIELD_HEADER: usize = 4 + 1 + 8 + 1;

struct BitWriter {
    bytes: Vec<u8>,
    len: u64,
}

impl BitWriter {
    fn new(bytes: Vec<u8>) -> Self {
        Self { bytes, len: 0 }
    }

    fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
}

impl BitReader<'_> {
    fn remaining(&self) -> u64 {
        self.bytes.len() as u64 * 8 - self.pos
    }

    fn read(&mut self) -> Result<bool> {
        if self.remaining() == 0 {
            return Err(Error::Truncated);
        }
        let byte = self.bytes[(self.pos / 8) as usize];
        let bit = byte & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(bit)
    }

    /// Everything after the current position must be zero padding within the
    /// current byte.
    fn finish(&self) -> Result<()> {
        let used = self.pos.div_ceil(8) as usize;
        if used != self.bytes.len() {
            return Err(Error::TrailingData);
        }
        if !self.pos.is_multiple_of(8) {
            let mask = 0xffu8 >> (self.pos % 8);
            if self.bytes[used - 1] & mask != 0 {
                return Err(Error::TrailingData);
            }
        }
        Ok(())
    }
}

fn tree_header(magic: [u8; 4], d: usize, nodes: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(TREE_HEADER);
    out.extend_from_slice(&magic);
    out.push(VERSION);
    out.extend_from_slice(&(d as u16).to_le_bytes());
    out.extend_from_slice(&(nodes as u64).to_le_bytes());
    out
}

fn read_tree_header(blob: &[u8], magic: [u8; 4]) -> Result<(usize, u64, &[u8])> {
    if blob.len() < TREE_HEADER {
        return Err(if blob.len() >= 4 && blob[..4] != magic { Error::BadHeader } else { Error::Truncated });
    }
    if blob[..4] != magic || blob[4] != VERSION {
        return Err(Error::BadHeader);
    }
    let d = u16::from_le_bytes([blob[5], blob[6]]) as usize;
    if d == 0 || d > MAX_DIM {
        return Err(Error::BadHeader);
    }
    let nodes = u64::from_le_bytes(blob[7..15].try_into().unwrap());
    Ok((d, nodes, &blob[TREE_HEADER..]))
}

/// Walks the self-delimiting label sequence, reading one label per call of
/// `next_label`, and checks it against the declared node count.
fn walk(
    d: usize,
    declared: u64,
    reader: &mut BitReader<'_>,
    mut next_label: impl FnMut(&mut BitReader<'_>) -> Result<DimLabel>,
) -> Result<Omnitree> {
    let cap = declared.min(reader.remaining()) as usize;
    let mut labels = Vec::with_capacity(cap);
    let mut pending: u64 = 1;
    while pending > 0 {
        if labels.len() as u64 == declared {
            return Err(Error::CountMismatch { declared });
        }
        let label = next_label(reader)?;
        pending = pending - 1 + if label.is_zero() { 0 } else { label.child_count() as u64 };
        labels.push(label);
    }
    if labels.len() as u64 != declared {
        return Err(Error::CountMismatch { declared });
    }
    reader.finish()?;
    Omnitree::from_labels(d, labels)
}

/// Serializes the preorder labels: `d` bits per node, bit `b_0` first.
pub fn encode(tree: &Omnitree) -> Vec<u8> {
    let d = tree.dim();
    let mut w = BitWriter::new(tree_header(TREE_MAGIC, d, tree.node_count()));
    w.bytes.reserve((tree.node_count() * d).div_ceil(8));
    for label in tree.labels() {
        for j in 0..d {
            w.push(label.has(j));
        }
    }
    w.bytes
}

pub fn decode(blob: &[u8]) -> Result<Omnitree> {
    let (d, declared, payload) = read_tree_header(blob, TREE_MAGIC)?;
    let mut reader = BitReader { bytes: payload, pos: 0 };
    walk(d, declared, &mut reader, |r| {
        let mut bits = 0u16;
        for j in 0..d {
            if r.read()? {
                bits |= 1 << j;
            }
        }
        DimLabel::new(d, bits)
    })
}

/// One bit per node; only trees whose labels are all-zero or all-ones.
pub fn encode_octree(tree: &Omnitree) -> Result<Vec<u8>> {
    if !tree.is_octree() {
        return Err(Error::NotAnOctree);
    }
    let mut w = BitWriter::new(tree_header(OCTREE_MAGIC, tree.dim(), tree.node_count()));
    for label in tree.labels() {
        w.push(!label.is_zero());
    }
    Ok(w.bytes)
}

pub fn decode_octree(blob: &[u8]) -> Result<Omnitree> {
    let (d, declared, payload) = read_tree_header(blob, OCTREE_MAGIC)?;
    let mut reader = BitReader { bytes: payload, pos: 0 };
    let ones = DimLabel::ones(d)?;
    let zero = DimLabel::zero(d)?;
    walk(d, declared, &mut reader, |r| Ok(if r.read()? { ones } else { zero }))
}

/// Decodes either tree container, dispatching on the magic.
pub fn decode_any(blob: &[u8]) -> Result<Omnitree> {
    match blob.get(..4) {
        Some(m) if m == OCTREE_MAGIC => decode_octree(blob),
        Some(m) if m == TREE_MAGIC => decode(blob),
        Some(_) => Err(Error::BadHeader),
        None => Err(Error::Truncated),
    }
}

/// Serializes one bit per leaf, in Z order.
pub fn encode_field(bits: &[bool]) -> Vec<u8> {
    let mut header = Vec::with_capacity(FIELD_HEADER + bits.len().div_ceil(8));
    header.extend_from_slice(&FIELD_MAGIC);
    header.push(VERSION);
    header.extend_from_slice(&(bits.len() as u64).to_le_bytes());
    header.push(1);
    let mut w = BitWriter::new(header);
    for &b in bits {
        w.push(b);
    }
    w.bytes
}

pub fn decode_field(blob: &[u8]) -> Result<Vec<bool>> {
    if blob.len() < FIELD_HEADER {
        return Err(Error::Truncated);
    }
    if blob[..4] != FIELD_MAGIC || blob[4] != VERSION || blob[13] != 1 {
        return Err(Error::BadHeader);
    }
    let count = u64::from_le_bytes(blob[5..13].try_into().unwrap());
    let mut reader = BitReader { bytes: &blob[FIELD_HEADER..], pos: 0 };
    if reader.remaining() < count {
        return Err(Error::Truncated);
    }
    let bits = (0..count).map(|_| reader.read()).collect::<Result<Vec<bool>>>()?;
    reader.finish()?;
    Ok(bits)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StorageReport {
    pub tree_bits_omnitree: u64,
    /// Present only when every label is all-zero or all-ones.
    pub tree_bits_octree: Option<u64>,
    pub data_bits: u64,
    /// Omnitree-coded tree bits plus data bits.
    pub total_bits: u64,
}

pub fn storage_report(tree: &Omnitree, payload_bits_per_leaf: u64) -> StorageReport {
    let nodes = tree.node_count() as u64;
    let tree_bits_omnitree = nodes * tree.dim() as u64;
    let data_bits = tree.leaf_count() as u64 * payload_bits_per_leaf;
    StorageReport {
        tree_bits_omnitree,
        tree_bits_octree: tree.is_octree().then_some(nodes),
        data_bits,
        total_bits: tree_bits_omnitree + data_bits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refinement::{refine, RefinementPlan};

    const SAMPLE_2D: &str = "10 01 00 00 10 00 00";

    fn octree_level1(d: usize) -> Omnitree {
        let t = Omnitree::singleton(d).unwrap();
        let mut plan = RefinementPlan::new(&t);
        plan.mark(0, &alloc::vec![1; d]).unwrap();
        refine(&t, &plan).unwrap()
    }

    #[test]
    fn singleton_blob() {
        let blob = encode(&Omnitree::singleton(3).unwrap());
        assert_eq!(&blob[..4], b"OMNI");
        assert_eq!(blob[4], 1);
        assert_eq!(&blob[5..7], &[3, 0]);
        assert_eq!(&blob[7..15], &1u64.to_le_bytes());
        assert_eq!(&blob[15..], &[0]);
        assert_eq!(decode(&blob).unwrap(), Omnitree::singleton(3).unwrap());
    }

    #[test]
    fn sample_payload() {
        let t = Omnitree::parse(2, SAMPLE_2D).unwrap();
        let blob = encode(&t);
        // 10 01 00 00 | 10 00 00 pad
        assert_eq!(&blob[15..], &[0b1001_0000, 0b1000_0000]);
        assert_eq!(decode(&blob).unwrap(), t);
    }

    #[test]
    fn octree_coding() {
        let blob = encode_octree(&Omnitree::singleton(3).unwrap()).unwrap();
        assert_eq!(&blob[15..], &[0]);
        let full = octree_level1(3);
        let blob = encode_octree(&full).unwrap();
        assert_eq!(&blob[15..], &[0b1000_0000, 0]);
        assert_eq!(decode_octree(&blob).unwrap(), full);
        assert_eq!(decode_any(&blob).unwrap(), full);
        let mixed = Omnitree::parse(2, SAMPLE_2D).unwrap();
        assert_eq!(encode_octree(&mixed).unwrap_err(), Error::NotAnOctree);
    }

    #[test]
    fn decode_errors() {
        let t = Omnitree::parse(2, SAMPLE_2D).unwrap();
        let blob = encode(&t);

        let mut bad = blob.clone();
        bad[0] = b'X';
        assert_eq!(decode(&bad).unwrap_err(), Error::BadHeader);
        let mut bad = blob.clone();
        bad[4] = 2;
        assert_eq!(decode(&bad).unwrap_err(), Error::BadHeader);

        assert_eq!(decode(&blob[..16]).unwrap_err(), Error::Truncated);

        let mut extra = blob.clone();
        extra.push(0);
        assert_eq!(decode(&extra).unwrap_err(), Error::TrailingData);
        let mut pad = blob.clone();
        *pad.last_mut().unwrap() |= 1;
        assert_eq!(decode(&pad).unwrap_err(), Error::TrailingData);

        for declared in [6u64, 8] {
            let mut off = blob.clone();
            off[7..15].copy_from_slice(&declared.to_le_bytes());
            assert_eq!(decode(&off).unwrap_err(), Error::CountMismatch { declared });
        }
    }

    #[test]
    fn field_round_trip() {
        let bits = [true, false, true, true, false, false, false, true, true];
        let blob = encode_field(&bits);
        assert_eq!(&blob[..4], b"OMNG");
        assert_eq!(blob[13], 1);
        assert_eq!(&blob[14..], &[0b1011_0001, 0b1000_0000]);
        assert_eq!(decode_field(&blob).unwrap(), bits);
        assert_eq!(decode_field(&blob[..14]).unwrap_err(), Error::Truncated);
        assert!(decode_field(&encode_field(&[])).unwrap().is_empty());
    }

    #[test]
    fn storage_examples() {
        let r = storage_report(&Omnitree::singleton(3).unwrap(), 1);
        assert_eq!((r.tree_bits_omnitree, r.tree_bits_octree, r.data_bits), (3, Some(1), 1));
        let r = storage_report(&octree_level1(3), 32);
        assert_eq!((r.tree_bits_omnitree, r.tree_bits_octree, r.data_bits), (27, Some(9), 256));
        assert_eq!(r.total_bits, 283);
        let r = storage_report(&Omnitree::parse(2, SAMPLE_2D).unwrap(), 1);
        assert_eq!((r.tree_bits_omnitree, r.tree_bits_octree), (14, None));
    }
}
