//! Omnitrees: anisotropic dyadic partitions of the unit hypercube.
//!
//! An omnitree generalizes the octree by letting every node bisect any
//! nonempty subset of the `d` dimensions. The whole structure is a preorder
//! sequence of `d`-bit labels, which this crate stores, refines, serializes
//! and uses to approximate binary shape functions.
//!
//! The crate is `no_std` and only needs `alloc`. File IO, the command line
//! and thread pools live in the `omnitree-cli` companion crate.
//!
//! ```
//! use omnitree_core::{Omnitree, RefinementPlan, refine};
//!
//! let tree = Omnitree::singleton(2).unwrap();
//! let mut plan = RefinementPlan::new(&tree);
//! plan.mark(0, &[1, 1]).unwrap();
//! let refined = refine(&tree, &plan).unwrap();
//! assert_eq!(refined.leaf_count(), 4);
//! ```

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod codec;
pub mod driver;
mod error;
pub mod geometry;
pub mod metrics;
pub mod oracle;
pub mod refinement;
pub mod rng;
pub mod tree;

pub use error::{Error, Result};
pub use geometry::{LocationCode, Rectangle, MAX_DIM, MAX_LEVEL};
pub use oracle::Oracle;
pub use refinement::{refine, RefinementPlan};
pub use tree::{DimLabel, NodeStats, Omnitree};
