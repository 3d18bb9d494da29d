//! Closed-form shapes, all already normalized to the unit cube.

use alloc::boxed::Box;

use super::{Aabb, Oracle, Rotation, Solid};
use crate::{Error, Result};

const EPS: f64 = 1e-12;

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn bounds_of(points: impl Iterator<Item = [f64; 3]>, rot: &Rotation) -> Aabb {
    let mut b = Aabb::empty();
    for p in points {
        b.include(rot.apply(p));
    }
    b
}

/// Axis-aligned box `[lo, hi]`. The unit box is the cube shape, which fills
/// the whole domain.
#[derive(Clone, Copy, Debug)]
pub struct BoxSolid {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl BoxSolid {
    pub fn unit_cube() -> Self {
        Self { lo: [0.0; 3], hi: [1.0; 3] }
    }

    fn corners(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..8).map(move |k| core::array::from_fn(|j| if k >> j & 1 == 1 { self.hi[j] } else { self.lo[j] }))
    }
}

impl Solid for BoxSolid {
    fn contains_point(&self, p: [f64; 3]) -> bool {
        (0..3).all(|j| p[j] >= self.lo[j] - EPS && p[j] <= self.hi[j] + EPS)
    }
    fn rotated_bounds(&self, rot: &Rotation) -> Aabb {
        bounds_of(self.corners(), rot)
    }
}

/// Ball of diameter 1 centered in the domain.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sphere;

const CENTER: [f64; 3] = [0.5; 3];

impl Solid for Sphere {
    fn contains_point(&self, p: [f64; 3]) -> bool {
        let w = sub(p, CENTER);
        dot(w, w) <= 0.25
    }
    fn rotated_bounds(&self, rot: &Rotation) -> Aabb {
        let c = rot.apply(CENTER);
        Aabb { min: c.map(|v| v - 0.5), max: c.map(|v| v + 0.5) }
    }
}

/// Corner simplex `x >= 0, x_0 + x_1 + x_2 <= 1`, which spans `[0,1]` in
/// every dimension.
#[derive(Clone, Copy, Debug, Default)]
pub struct Tetrahedron;

const TET: [[f64; 3]; 4] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

impl Solid for Tetrahedron {
    fn contains_point(&self, p: [f64; 3]) -> bool {
        p.iter().all(|&v| v >= 0.0) && p[0] + p[1] + p[2] <= 1.0
    }
    fn rotated_bounds(&self, rot: &Rotation) -> Aabb {
        bounds_of(TET.into_iter(), rot)
    }
}

/// Solid cylinder of radius 0.05 and length 1 along `z`, tilted by π/4 about
/// `(1,1,0)/√2`, then scaled so its largest extent is 1 and centered in the
/// domain.
#[derive(Clone, Copy, Debug)]
pub struct Rod {
    axis: [f64; 3],
    half_length: f64,
    radius: f64,
}

impl Rod {
    pub fn new() -> Self {
        let tilt = Rotation::axis_angle([1.0, 1.0, 0.0], core::f64::consts::FRAC_PI_4);
        let axis = tilt.apply([0.0, 0.0, 1.0]);
        let raw = Self { axis, half_length: 0.5, radius: 0.05 };
        let ext = raw.half_extents(axis);
        let scale = 0.5 / ext.into_iter().fold(0.0, f64::max);
        Self { axis, half_length: 0.5 * scale, radius: 0.05 * scale }
    }

    fn half_extents(&self, axis: [f64; 3]) -> [f64; 3] {
        axis.map(|u| self.half_length * u.abs() + self.radius * libm::sqrt((1.0 - u * u).max(0.0)))
    }
}

impl Default for Rod {
    fn default() -> Self {
        Self::new()
    }
}

impl Solid for Rod {
    fn contains_point(&self, p: [f64; 3]) -> bool {
        let w = sub(p, CENTER);
        let a = dot(w, self.axis);
        let radial = dot(w, w) - a * a;
        a.abs() <= self.half_length && radial <= self.radius * self.radius
    }
    fn rotated_bounds(&self, rot: &Rotation) -> Aabb {
        let c = rot.apply(CENTER);
        let ext = self.half_extents(rot.apply(self.axis));
        Aabb { min: core::array::from_fn(|k| c[k] - ext[k]), max: core::array::from_fn(|k| c[k] + ext[k]) }
    }
}

/// `x_axis < c` in any dimension.
#[derive(Clone, Copy, Debug)]
pub struct Halfspace {
    pub dim: usize,
    pub axis: usize,
    pub threshold: f64,
}

impl Halfspace {
    pub fn new(dim: usize, axis: usize, threshold: f64) -> Result<Self> {
        if dim == 0 || dim > crate::MAX_DIM {
            return Err(Error::InvalidDimension(dim));
        }
        if axis >= dim {
            return Err(Error::InvalidShape("halfspace axis out of range"));
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidShape("halfspace threshold must lie in (0, 1)"));
        }
        Ok(Self { dim, axis, threshold })
    }

    /// The part of the 3-d domain inside the halfspace, as a box.
    pub fn to_solid(&self) -> Result<BoxSolid> {
        if self.dim != 3 {
            return Err(Error::InvalidShape("only 3-d halfspaces form a solid"));
        }
        let mut b = BoxSolid::unit_cube();
        b.hi[self.axis] = self.threshold;
        Ok(b)
    }
}

impl Oracle for Halfspace {
    fn dim(&self) -> usize {
        self.dim
    }
    fn contains(&self, x: &[f64]) -> bool {
        x[self.axis] < self.threshold
    }
}

/// `cube`, `sphere`, `tetrahedron` or `rod`.
pub fn analytic_solid(name: &str) -> Result<Box<dyn Solid>> {
    Ok(match name {
        "cube" => Box::new(BoxSolid::unit_cube()),
        "sphere" => Box::new(Sphere),
        "tetrahedron" => Box::new(Tetrahedron),
        "rod" => Box::new(Rod::new()),
        _ => return Err(Error::InvalidShape("unknown shape name")),
    })
}
