//! Ground-truth membership functions `g*: [0,1]^d -> {0,1}`.

use alloc::boxed::Box;

mod analytic;
mod mesh;
mod rotate;

pub use analytic::{analytic_solid, BoxSolid, Halfspace, Rod, Sphere, Tetrahedron};
pub use mesh::{MeshSolid, TriangleMesh, RAY_DIRECTIONS};
pub use rotate::{Aabb, Rotation, TimeRotated};

/// A deterministic binary function on the unit hypercube.
pub trait Oracle: Sync {
    fn dim(&self) -> usize;
    fn contains(&self, x: &[f64]) -> bool;
}

impl<T: Oracle + ?Sized> Oracle for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn contains(&self, x: &[f64]) -> bool {
        (**self).contains(x)
    }
}

impl<T: Oracle + ?Sized> Oracle for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn contains(&self, x: &[f64]) -> bool {
        (**self).contains(x)
    }
}

/// A bounded 3-d solid that can report its bounds under rotation, which is
/// what time rotation needs to re-normalize every frame.
pub trait Solid: Send + Sync {
    fn contains_point(&self, p: [f64; 3]) -> bool;
    /// Axis-aligned bounds of the solid rotated by `rot` about the origin.
    fn rotated_bounds(&self, rot: &Rotation) -> Aabb;
}

impl<T: Solid + ?Sized> Solid for Box<T> {
    fn contains_point(&self, p: [f64; 3]) -> bool {
        (**self).contains_point(p)
    }
    fn rotated_bounds(&self, rot: &Rotation) -> Aabb {
        (**self).rotated_bounds(rot)
    }
}

/// Queries a solid directly in domain coordinates.
pub struct SolidOracle<S>(pub S);

impl<S: Solid> Oracle for SolidOracle<S> {
    fn dim(&self) -> usize {
        3
    }
    fn contains(&self, x: &[f64]) -> bool {
        self.0.contains_point([x[0], x[1], x[2]])
    }
}

/// `g* ≡ value`.
#[derive(Clone, Copy, Debug)]
pub struct Constant {
    pub dim: usize,
    pub value: bool,
}

impl Oracle for Constant {
    fn dim(&self) -> usize {
        self.dim
    }
    fn contains(&self, _: &[f64]) -> bool {
        self.value
    }
}
