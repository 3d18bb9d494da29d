//! Rotation of a 3-d solid through time, giving a 4-d shape.

use core::f64::consts::TAU;

use super::{Oracle, Solid};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn empty() -> Self {
        Self { min: [f64::INFINITY; 3], max: [f64::NEG_INFINITY; 3] }
    }

    pub fn include(&mut self, p: [f64; 3]) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(p[k]);
            self.max[k] = self.max[k].max(p[k]);
        }
    }

    pub fn largest_extent(&self) -> f64 {
        (0..3).map(|k| self.max[k] - self.min[k]).fold(0.0, f64::max)
    }

    pub fn center(&self) -> [f64; 3] {
        core::array::from_fn(|k| 0.5 * (self.min[k] + self.max[k]))
    }
}

/// A rotation about an axis through the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    theta: f64,
    diagonal: bool,
    m: [[f64; 3]; 3],
}

impl Rotation {
    pub fn identity() -> Self {
        Self::axis_angle([1.0, 0.0, 0.0], 0.0)
    }

    /// Right-handed rotation by `theta` about `axis` (need not be unit length).
    pub fn axis_angle(axis: [f64; 3], theta: f64) -> Self {
        let n = libm::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
        let [x, y, z] = axis.map(|v| v / n);
        let (s, c) = (libm::sin(theta), libm::cos(theta));
        let t = 1.0 - c;
        let m = [
            [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
            [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
            [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
        ];
        Self { theta, diagonal: false, m }
    }

    /// Rotation about the main diagonal `(1,1,1)/√3`.
    pub fn about_diagonal(theta: f64) -> Self {
        Self { diagonal: true, ..Self::axis_angle([1.0, 1.0, 1.0], theta) }
    }

    pub(crate) fn is_about_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    #[inline]
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let m = &self.m;
        core::array::from_fn(|i| m[i][0] * p[0] + m[i][1] * p[1] + m[i][2] * p[2])
    }

    #[inline]
    pub fn apply_inverse(&self, p: [f64; 3]) -> [f64; 3] {
        let m = &self.m;
        core::array::from_fn(|i| m[0][i] * p[0] + m[1][i] * p[1] + m[2][i] * p[2])
    }
}

/// 4-d shape whose last coordinate is time: at time `t` the solid is rotated
/// by `2πt` about the main diagonal through the domain center and then
/// re-normalized so its largest extent spans `[0,1]` and the other extents
/// are centered. Periodic in `t` with period 1.
pub struct TimeRotated<S> {
    solid: S,
}

impl<S: Solid> TimeRotated<S> {
    pub fn new(solid: S) -> Self {
        Self { solid }
    }

    /// Point of the unrotated solid that `x` (spatial part) sees at time `t`.
    pub fn source_point(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let rot = Rotation::about_diagonal(TAU * (t - libm::floor(t)));
        // Rotating about the origin rather than the domain center only moves
        // the bounds, and the re-normalization removes any translation.
        let bounds = self.solid.rotated_bounds(&rot);
        let extent = bounds.largest_extent();
        let c = bounds.center();
        let p: [f64; 3] = core::array::from_fn(|k| (x[k] - 0.5) * extent + c[k]);
        rot.apply_inverse(p)
    }
}

impl<S: Solid> Oracle for TimeRotated<S> {
    fn dim(&self) -> usize {
        4
    }
    fn contains(&self, x: &[f64]) -> bool {
        self.solid.contains_point(self.source_point([x[0], x[1], x[2]], x[3]))
    }
}
