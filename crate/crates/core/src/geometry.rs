//! Rigid-body poses and the pinhole camera model.
//!
//! Camera frame: +z along the optical axis, +x right, +y down. Poses map
//! camera coordinates into the world frame, so a pose's translation is the
//! sensor origin.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction, or `None` for (near-)zero input.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn component_min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn component_max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Unit quaternion, scalar first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Builds a quaternion and renormalizes it. A zero quaternion yields the identity.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Self::IDENTITY;
        }
        Quaternion {
            w: w / n,
            x: x / n,
            y: y / n,
            z: z / n,
        }
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let Some(a) = axis.normalized() else {
            return Self::IDENTITY;
        };
        let (s, c) = (angle * 0.5).sin_cos();
        Quaternion::new(c, a.x * s, a.y * s, a.z * s)
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn conjugate(self) -> Self {
        Quaternion {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    fn vector(self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    /// Rotates `v` by this quaternion.
    #[inline]
    pub fn rotate(self, v: Vec3) -> Vec3 {
        let u = self.vector();
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }

    pub fn mul(self, o: Quaternion) -> Quaternion {
        Quaternion::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }

    pub fn dot(self, o: Quaternion) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Spherical linear interpolation along the shorter arc, `s` in [0, 1].
    pub fn slerp(self, other: Quaternion, s: f64) -> Quaternion {
        let mut b = other;
        let mut d = self.dot(b);
        if d < 0.0 {
            b = Quaternion {
                w: -b.w,
                x: -b.x,
                y: -b.y,
                z: -b.z,
            };
            d = -d;
        }
        let (ka, kb) = if d > 0.9995 {
            (1.0 - s, s)
        } else {
            let theta = d.min(1.0).acos();
            let sin = theta.sin();
            (((1.0 - s) * theta).sin() / sin, (s * theta).sin() / sin)
        };
        Quaternion::new(
            ka * self.w + kb * b.w,
            ka * self.x + kb * b.x,
            ka * self.y + kb * b.y,
            ka * self.z + kb * b.z,
        )
    }
}

/// Camera-to-world rigid transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Quaternion,
    pub translation: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::IDENTITY
    }
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        rotation: Quaternion::IDENTITY,
        translation: Vec3::ZERO,
    };

    pub fn new(rotation: Quaternion, translation: Vec3) -> Self {
        // Renormalize on construction: callers may pass raw parsed values.
        let r = rotation;
        Pose {
            rotation: Quaternion::new(r.w, r.x, r.y, r.z),
            translation,
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Pose {
            rotation: Quaternion::IDENTITY,
            translation: t,
        }
    }

    /// Pose at `eye` with the optical axis pointing at `target`; `up` fixes roll.
    ///
    /// The image "down" direction (+y) is chosen opposite to `up`.
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3) -> Option<Self> {
        let z = (target - eye).normalized()?;
        let x = (-up).cross(z).normalized()?;
        let y = z.cross(x);
        Some(Pose::new(quaternion_from_columns(x, y, z), eye))
    }

    /// Sensor origin in the world frame.
    #[inline]
    pub fn origin(&self) -> Vec3 {
        self.translation
    }

    #[inline]
    pub fn transform(&self, p: Vec3) -> Vec3 {
        self.rotation.rotate(p) + self.translation
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.rotation.conjugate();
        Pose {
            rotation: inv,
            translation: -inv.rotate(self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation.mul(other.rotation),
            translation: self.transform(other.translation),
        }
    }
}

/// Quaternion of the rotation matrix whose columns are `x`, `y`, `z`.
fn quaternion_from_columns(x: Vec3, y: Vec3, z: Vec3) -> Quaternion {
    let (m00, m01, m02) = (x.x, y.x, z.x);
    let (m10, m11, m12) = (x.y, y.y, z.y);
    let (m20, m21, m22) = (x.z, y.z, z.z);
    let trace = m00 + m11 + m22;
    if trace > 0.0 {
        let s = (trace + 1.0).sqrt() * 2.0;
        Quaternion::new(0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s)
    } else if m00 > m11 && m00 > m22 {
        let s = (1.0 + m00 - m11 - m22).sqrt() * 2.0;
        Quaternion::new((m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s)
    } else if m11 > m22 {
        let s = (1.0 + m11 - m00 - m22).sqrt() * 2.0;
        Quaternion::new((m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s)
    } else {
        let s = (1.0 + m22 - m00 - m11).sqrt() * 2.0;
        Quaternion::new((m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s)
    }
}

/// Axis-aligned box, `min <= max` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(a: Vec3, b: Vec3) -> Self {
        Aabb {
            min: a.component_min(b),
            max: a.component_max(b),
        }
    }

    #[inline]
    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    /// Box grown by `d` on every side (shrunk for negative `d`).
    pub fn inflate(&self, d: f64) -> Aabb {
        let e = Vec3::new(d, d, d);
        Aabb {
            min: self.min - e,
            max: self.max + e,
        }
    }
}

/// Pinhole intrinsics plus the stereo baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub o_x: f64,
    pub o_y: f64,
    pub width: usize,
    pub height: usize,
    pub baseline: f64,
}

impl CameraIntrinsics {
    pub fn new(
        alpha_x: f64,
        alpha_y: f64,
        o_x: f64,
        o_y: f64,
        width: usize,
        height: usize,
        baseline: f64,
    ) -> Result<Self> {
        let intr = CameraIntrinsics {
            alpha_x,
            alpha_y,
            o_x,
            o_y,
            width,
            height,
            baseline,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha_x > 0.0
            && self.alpha_y > 0.0
            && self.baseline > 0.0
            && self.alpha_x.is_finite()
            && self.alpha_y.is_finite()
            && self.baseline.is_finite()
            && self.o_x >= 0.0
            && self.o_x < self.width as f64
            && self.o_y >= 0.0
            && self.o_y < self.height as f64;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid camera intrinsics {self:?}")))
        }
    }

    /// Projects a camera-frame point to real-valued pixel coordinates.
    #[inline]
    pub fn project(&self, p: Vec3) -> Result<(f64, f64)> {
        if !(p.z > 0.0) {
            return Err(Error::BehindCamera(p.z));
        }
        Ok((
            self.alpha_x * (p.x / p.z) + self.o_x,
            self.alpha_y * (p.y / p.z) + self.o_y,
        ))
    }

    /// Inverse of [`project`](Self::project) at a known depth `z`.
    #[inline]
    pub fn backproject(&self, a: f64, b: f64, z: f64) -> Result<Vec3> {
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::InvalidDepth(z));
        }
        Ok(Vec3::new(
            (a - self.o_x) * z / self.alpha_x,
            (b - self.o_y) * z / self.alpha_y,
            z,
        ))
    }

    /// Nearest pixel to a real-valued image coordinate, if it lies in the image.
    #[inline]
    pub fn nearest_pixel(&self, a: f64, b: f64) -> Option<(usize, usize)> {
        let col = (a + 0.5).floor();
        let row = (b + 0.5).floor();
        if col >= 0.0 && row >= 0.0 && col < self.width as f64 && row < self.height as f64 {
            Some((col as usize, row as usize))
        } else {
            None
        }
    }
}
