//! Planar geometry shared by the simulator: vectors, poses, frame changes
//! and oriented rectangles.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("angle must be finite, got {0}")]
    NonFiniteAngle(f64),
}

/// A point or displacement in meters (or a velocity in m/s).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector pointing along `angle` radians.
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c, s)
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Rotates counter-clockwise by `angle` radians.
    pub fn rotate(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Returns the unit vector in this direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, rhs: Vec2) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Maps a finite angle into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> Result<f64, GeometryError> {
    if !theta.is_finite() {
        return Err(GeometryError::NonFiniteAngle(theta));
    }
    Ok(wrap_angle(theta))
}

/// Infallible variant of [`normalize_angle`] for values already known to be finite.
pub(crate) fn wrap_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let r = theta.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Position and heading of a robot in the global field frame.
///
/// The heading is kept in `(-π, π]`; every constructor and mutator re-wraps it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub position: Vec2,
    heading: f64,
}

impl Pose2D {
    pub fn new(position: Vec2, heading: f64) -> Self {
        Self {
            position,
            heading: wrap_angle(heading),
        }
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn set_heading(&mut self, heading: f64) {
        self.heading = wrap_angle(heading);
    }

    pub fn rotate_by(&mut self, delta: f64) {
        self.heading = wrap_angle(self.heading + delta);
    }

    /// Unit vector along the heading.
    pub fn forward(&self) -> Vec2 {
        Vec2::from_angle(self.heading)
    }
}

/// Expresses `target` in the observer's body frame: `x` forward, `y` to the left.
pub fn egocentric_transform(observer: &Pose2D, target: Vec2) -> Vec2 {
    (target - observer.position).rotate(-observer.heading)
}

/// Inverse of [`egocentric_transform`]: body-frame point back to the global frame.
pub fn inverse_egocentric(observer: &Pose2D, local: Vec2) -> Vec2 {
    local.rotate(observer.heading) + observer.position
}

/// Rectangle centred on a pose, long axis along the heading.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedRect {
    pub pose: Pose2D,
    pub half_length: f64,
    pub half_width: f64,
}

impl OrientedRect {
    pub fn new(pose: Pose2D, length: f64, width: f64) -> Self {
        Self {
            pose,
            half_length: 0.5 * length,
            half_width: 0.5 * width,
        }
    }

    pub fn to_local(&self, p: Vec2) -> Vec2 {
        egocentric_transform(&self.pose, p)
    }

    pub fn to_global(&self, p: Vec2) -> Vec2 {
        inverse_egocentric(&self.pose, p)
    }

    /// Strict interior test; points on the boundary are outside.
    pub fn contains(&self, p: Vec2) -> bool {
        let l = self.to_local(p);
        l.x.abs() < self.half_length && l.y.abs() < self.half_width
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let (hl, hw) = (self.half_length, self.half_width);
        [
            self.to_global(Vec2::new(hl, hw)),
            self.to_global(Vec2::new(-hl, hw)),
            self.to_global(Vec2::new(-hl, -hw)),
            self.to_global(Vec2::new(hl, -hw)),
        ]
    }

    /// Separating-axis overlap test. Touching edges do not count as overlap.
    pub fn overlaps(&self, other: &OrientedRect) -> bool {
        let axes = [
            self.pose.forward(),
            self.pose.forward().rotate(PI / 2.0),
            other.pose.forward(),
            other.pose.forward().rotate(PI / 2.0),
        ];
        let a = self.corners();
        let b = other.corners();
        axes.iter().all(|axis| {
            let (amin, amax) = project(&a, *axis);
            let (bmin, bmax) = project(&b, *axis);
            amax > bmin && bmax > amin
        })
    }

    /// Distance along unit direction `dir` (local frame) from the local point `p`
    /// to where the ray leaves the rectangle, and the outward normal of the exit face.
    /// `p` is expected to be inside or on the rectangle.
    pub(crate) fn local_exit(&self, p: Vec2, dir: Vec2) -> (f64, Vec2) {
        let mut best = (f64::INFINITY, Vec2::ZERO);
        if dir.x > 0.0 {
            best = min_hit(best, (self.half_length - p.x) / dir.x, Vec2::new(1.0, 0.0));
        } else if dir.x < 0.0 {
            best = min_hit(
                best,
                (-self.half_length - p.x) / dir.x,
                Vec2::new(-1.0, 0.0),
            );
        }
        if dir.y > 0.0 {
            best = min_hit(best, (self.half_width - p.y) / dir.y, Vec2::new(0.0, 1.0));
        } else if dir.y < 0.0 {
            best = min_hit(best, (-self.half_width - p.y) / dir.y, Vec2::new(0.0, -1.0));
        }
        (best.0.max(0.0), best.1)
    }

    /// Entry parameter `t ∈ [0, 1]` and outward face normal (local frame) for the
    /// segment `from → from + delta`, both given in local coordinates.
    pub(crate) fn local_segment_entry(&self, from: Vec2, delta: Vec2) -> Option<(f64, Vec2)> {
        let mut t_enter = 0.0_f64;
        let mut t_exit = 1.0_f64;
        let mut normal = Vec2::ZERO;
        let slabs = [
            (from.x, delta.x, self.half_length, Vec2::new(1.0, 0.0)),
            (from.y, delta.y, self.half_width, Vec2::new(0.0, 1.0)),
        ];
        for (p, d, h, axis) in slabs {
            if d == 0.0 {
                if p.abs() >= h {
                    return None;
                }
                continue;
            }
            let (mut t0, mut t1) = ((-h - p) / d, (h - p) / d);
            let mut face = -axis;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
                face = axis;
            }
            if t0 > t_enter {
                t_enter = t0;
                normal = face;
            }
            t_exit = t_exit.min(t1);
            if t_enter >= t_exit {
                return None;
            }
        }
        (normal != Vec2::ZERO).then_some((t_enter, normal))
    }
}

fn min_hit(best: (f64, Vec2), t: f64, n: Vec2) -> (f64, Vec2) {
    if t < best.0 {
        (t, n)
    } else {
        best
    }
}

fn project(corners: &[Vec2; 4], axis: Vec2) -> (f64, f64) {
    corners
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            let d = c.dot(axis);
            (lo.min(d), hi.max(d))
        })
}
