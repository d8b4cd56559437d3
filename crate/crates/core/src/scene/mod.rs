//! Analytic scenes and a ray-cast depth/confidence renderer.
//!
//! A scene is a union of solids: planes bound half-spaces (solid on the side
//! opposite the normal), boxes and spheres are solid inside. The scene
//! signed distance is the minimum over primitives.

mod catalog;
mod trajectory;

pub use catalog::{make_reference_scenes, reference_scene, NamedScene, PoolScale, Region, SCENE_NAMES};
pub use trajectory::{sample_trajectory, TrajectorySpec, TIME_EPSILON};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, CameraIntrinsics, Pose, Vec3};
use crate::image::ScalarImage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Plane { point: Vec3, normal: Vec3 },
    Box(Aabb),
    Sphere { center: Vec3, radius: f64 },
}

impl Shape {
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        match *self {
            Shape::Plane { point, normal } => (p - point).dot(normal),
            Shape::Box(b) => {
                let c = b.center();
                let h = (b.max - b.min) * 0.5;
                let d = p - c;
                let q = Vec3::new(d.x.abs() - h.x, d.y.abs() - h.y, d.z.abs() - h.z);
                let outside = q.component_max(Vec3::ZERO).norm();
                let inside = q.x.max(q.y).max(q.z).min(0.0);
                outside + inside
            }
            Shape::Sphere { center, radius } => (p - center).norm() - radius,
        }
    }

    /// Smallest `t > 0` where `origin + t * dir` enters the solid from outside.
    pub fn intersect(&self, origin: Vec3, dir: Vec3) -> Option<f64> {
        match *self {
            Shape::Plane { point, normal } => {
                let denom = dir.dot(normal);
                if !(denom < 0.0) || (origin - point).dot(normal) < 0.0 {
                    return None;
                }
                let t = (point - origin).dot(normal) / denom;
                (t > 0.0).then_some(t)
            }
            Shape::Sphere { center, radius } => {
                let oc = origin - center;
                let a = dir.dot(dir);
                let b = oc.dot(dir);
                let c = oc.dot(oc) - radius * radius;
                if c < 0.0 {
                    return None;
                }
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let t = (-b - disc.sqrt()) / a;
                (t > 0.0).then_some(t)
            }
            Shape::Box(bx) => {
                if bx.contains(origin) {
                    return None;
                }
                let (o, d) = (origin.to_array(), dir.to_array());
                let (lo, hi) = (bx.min.to_array(), bx.max.to_array());
                let mut t0 = f64::NEG_INFINITY;
                let mut t1 = f64::INFINITY;
                for a in 0..3 {
                    if d[a] == 0.0 {
                        if o[a] < lo[a] || o[a] > hi[a] {
                            return None;
                        }
                        continue;
                    }
                    let (mut ta, mut tb) = ((lo[a] - o[a]) / d[a], (hi[a] - o[a]) / d[a]);
                    if ta > tb {
                        std::mem::swap(&mut ta, &mut tb);
                    }
                    t0 = t0.max(ta);
                    t1 = t1.min(tb);
                }
                (t0 <= t1 && t0 > 0.0).then_some(t0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenePrimitive {
    pub shape: Shape,
    pub texture_confidence: f64,
}

impl ScenePrimitive {
    pub fn plane(point: Vec3, normal: Vec3, texture_confidence: f64) -> Result<Self> {
        let normal = normal
            .normalized()
            .ok_or_else(|| Error::Config("plane normal must be non-zero".into()))?;
        Self::checked(Shape::Plane { point, normal }, texture_confidence)
    }

    pub fn cuboid(a: Vec3, b: Vec3, texture_confidence: f64) -> Result<Self> {
        let bx = Aabb::new(a, b);
        let e = bx.max - bx.min;
        if !(e.x > 0.0 && e.y > 0.0 && e.z > 0.0) {
            return Err(Error::Config("box must have positive extent on every axis".into()));
        }
        Self::checked(Shape::Box(bx), texture_confidence)
    }

    pub fn sphere(center: Vec3, radius: f64, texture_confidence: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Config("sphere radius must be positive".into()));
        }
        Self::checked(Shape::Sphere { center, radius }, texture_confidence)
    }

    fn checked(shape: Shape, texture_confidence: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&texture_confidence) {
            return Err(Error::Config(format!(
                "texture confidence {texture_confidence} outside [0, 1]"
            )));
        }
        Ok(ScenePrimitive {
            shape,
            texture_confidence,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scene {
    pub primitives: Vec<ScenePrimitive>,
}

impl Scene {
    pub fn new(primitives: Vec<ScenePrimitive>) -> Self {
        Scene { primitives }
    }

    pub fn signed_distance(&self, p: Vec3) -> f64 {
        self.primitives
            .iter()
            .map(|pr| pr.shape.signed_distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Nearest hit along a ray: `(t, primitive index)`.
    pub fn intersect(&self, origin: Vec3, dir: Vec3) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (i, pr) in self.primitives.iter().enumerate() {
            if let Some(t) = pr.shape.intersect(origin, dir) {
                if best.map_or(true, |(bt, _)| t < bt) {
                    best = Some((t, i));
                }
            }
        }
        best
    }
}

/// Depth noise: `sigma = coeff * Z^2`, drawn from a seeded ChaCha8 stream in
/// row-major pixel order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthNoise {
    pub sigma_coeff: f64,
    pub seed: u64,
}

/// Renders camera-frame Z depth and per-primitive confidence.
///
/// Rays pass through integer pixel coordinates (pixel centers).
pub fn render_frame(
    scene: &Scene,
    pose: &Pose,
    intr: &CameraIntrinsics,
    noise: Option<DepthNoise>,
) -> Result<(ScalarImage, ScalarImage)> {
    if scene.primitives.is_empty() {
        return Err(Error::Config("cannot render an empty scene".into()));
    }
    let (w, h) = (intr.width, intr.height);
    let origin = pose.origin();
    let rows: Vec<Vec<Option<(f64, f64)>>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    // unit-depth direction: the ray parameter equals camera Z
                    let d_cam = Vec3::new(
                        (x as f64 - intr.o_x) / intr.alpha_x,
                        (y as f64 - intr.o_y) / intr.alpha_y,
                        1.0,
                    );
                    let dir = pose.rotation.rotate(d_cam);
                    scene
                        .intersect(origin, dir)
                        .map(|(t, i)| (t, scene.primitives[i].texture_confidence))
                })
                .collect()
        })
        .collect();
    let mut depth = ScalarImage::invalid(w, h);
    let mut conf = ScalarImage::invalid(w, h);
    for (y, row) in rows.iter().enumerate() {
        for (x, hit) in row.iter().enumerate() {
            if let Some((z, c)) = *hit {
                depth.set(x, y, z);
                conf.set(x, y, c);
            }
        }
    }
    if let Some(n) = noise.filter(|n| n.sigma_coeff > 0.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(n.seed);
        let std = Normal::new(0.0, 1.0).expect("unit normal");
        for i in 0..depth.len() {
            let Some(z) = depth.get_index(i) else { continue };
            let noisy = z + std.sample(&mut rng) * n.sigma_coeff * z * z;
            if noisy > 0.0 {
                depth.set_index(i, noisy);
            } else {
                depth.invalidate_index(i);
                conf.invalidate_index(i);
            }
        }
    }
    Ok((depth, conf))
}
