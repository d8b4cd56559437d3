//! Ray-cast integration of confidence point clouds into a [`TsdfMap`].
//!
//! Each point casts a ray from the sensor origin through the point and `τ`
//! beyond it. Every voxel the segment passes through receives one update.
//! Rays are traced in parallel, but updates are applied in point order, so
//! the resulting map does not depend on the thread count.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Pose, Vec3};
use crate::image::ScalarImage;
use crate::stereo::{depth_to_pointcloud, filter_by_confidence, ConfidencePointCloud};

use super::map::{MapParams, TsdfMap, VoxelIndex};
use super::voxel::{update_voxel, UpdateMode};
use super::weights::{projective_distance, quadratic_from_parts, weight_confidence, WeightMode};

const RAY_CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub weight_mode: WeightMode,
    pub update_mode: UpdateMode,
    pub c_min: f64,
    pub max_ray_length: f64,
    pub default_confidence: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            weight_mode: WeightMode::Confidence,
            update_mode: UpdateMode::Average,
            c_min: crate::stereo::DEFAULT_C_MIN,
            max_ray_length: 5.0,
            default_confidence: 0.0,
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.c_min)
            || !(self.max_ray_length > 0.0)
            || !self.max_ray_length.is_finite()
            || !(0.0..=1.0).contains(&self.default_confidence)
        {
            return Err(Error::Config(format!("invalid integration config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrationReport {
    pub points_integrated: usize,
    pub points_skipped: usize,
    /// Voxel updates with non-zero weight.
    pub voxel_updates: usize,
    /// Distinct voxels that received at least one update.
    pub voxels_touched: usize,
}

impl IntegrationReport {
    pub fn merge(&mut self, o: &IntegrationReport) {
        self.points_integrated += o.points_integrated;
        self.points_skipped += o.points_skipped;
        self.voxel_updates += o.voxel_updates;
        self.voxels_touched += o.voxels_touched;
    }
}

/// Confidence at the nearest pixel to where a world point projects, or
/// `default_confidence` when it is behind the camera, off-image, or invalid.
pub fn lookup_confidence(
    point: Vec3,
    pose: &Pose,
    intr: &CameraIntrinsics,
    conf: &ScalarImage,
    default_confidence: f64,
) -> f64 {
    sample_confidence(pose.inverse().transform(point), intr, conf, default_confidence)
}

#[inline]
fn sample_confidence(
    p_cam: Vec3,
    intr: &CameraIntrinsics,
    conf: &ScalarImage,
    default_confidence: f64,
) -> f64 {
    let Ok((a, b)) = intr.project(p_cam) else {
        return default_confidence;
    };
    match intr.nearest_pixel(a, b) {
        Some((x, y)) if x < conf.width() && y < conf.height() => {
            conf.get(x, y).unwrap_or(default_confidence)
        }
        _ => default_confidence,
    }
}

/// Visits, in order, every voxel whose cell the segment `start → end` passes
/// through (grid traversal in voxel units).
pub fn traverse_segment(start: Vec3, end: Vec3, voxel_size: f64, mut visit: impl FnMut(VoxelIndex)) {
    let inv = 1.0 / voxel_size;
    let s = [start.x * inv, start.y * inv, start.z * inv];
    let e = [end.x * inv, end.y * inv, end.z * inv];
    let mut cur = [s[0].floor() as i64, s[1].floor() as i64, s[2].floor() as i64];
    let last = [e[0].floor() as i64, e[1].floor() as i64, e[2].floor() as i64];
    let mut step = [0i64; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for a in 0..3 {
        let d = e[a] - s[a];
        if d > 0.0 {
            step[a] = 1;
            t_max[a] = ((cur[a] + 1) as f64 - s[a]) / d;
            t_delta[a] = 1.0 / d;
        } else if d < 0.0 {
            step[a] = -1;
            t_max[a] = (cur[a] as f64 - s[a]) / d;
            t_delta[a] = -1.0 / d;
        }
    }
    let budget = (0..3).map(|a| (last[a] - cur[a]).unsigned_abs()).sum::<u64>() + 1;
    for _ in 0..=budget {
        visit(VoxelIndex(cur));
        if cur == last {
            break;
        }
        let a = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
            0
        } else if t_max[1] <= t_max[2] {
            1
        } else {
            2
        };
        if t_max[a] > 1.0 {
            break;
        }
        cur[a] += step[a];
        t_max[a] += t_delta[a];
    }
}

#[derive(Debug, Clone, Copy)]
struct Update {
    voxel: VoxelIndex,
    rho: f64,
    omega: f64,
}

struct FrameContext<'a> {
    params: MapParams,
    origin: Vec3,
    pose: Pose,
    world_to_cam: Pose,
    intr: &'a CameraIntrinsics,
    conf: &'a ScalarImage,
    cfg: &'a IntegrationConfig,
}

impl FrameContext<'_> {
    /// Updates for one point, or `None` if the point is skipped.
    fn trace(&self, p_cam: Vec3, point_conf: f64, scratch: &mut Vec<VoxelIndex>) -> Option<Vec<Update>> {
        if !p_cam.is_finite() {
            return None;
        }
        let q = self.pose.transform(p_cam);
        let c = self.origin;
        let ray = q - c;
        let len = ray.norm();
        if !(len > 0.0) || len > self.cfg.max_ray_length {
            return None;
        }
        let p = &self.params;
        let band = p.band();
        let end = c + ray * ((len + p.truncation) / len);
        scratch.clear();
        traverse_segment(c, end, p.voxel_size, |v| scratch.push(v));
        let mut out = Vec::with_capacity(scratch.len());
        for &g in scratch.iter() {
            let v = center(p.voxel_size, g);
            let rho = projective_distance(v, q, c);
            let omega = match self.cfg.weight_mode {
                WeightMode::Constant => super::weights::weight_constant(rho, &band),
                WeightMode::Quadratic => {
                    let z = (v - c).norm();
                    if !(z > 0.0) {
                        continue;
                    }
                    quadratic_from_parts(rho, z, &band)
                }
                WeightMode::Confidence => {
                    let c1 = if rho > -band.eta {
                        sample_confidence(
                            self.world_to_cam.transform(v),
                            self.intr,
                            self.conf,
                            self.cfg.default_confidence,
                        )
                    } else {
                        0.0
                    };
                    weight_confidence(rho, c1, point_conf, &band)
                }
            };
            if omega > 0.0 {
                out.push(Update { voxel: g, rho, omega });
            }
        }
        Some(out)
    }
}

#[inline]
fn center(mu: f64, g: VoxelIndex) -> Vec3 {
    Vec3::new(
        (g.0[0] as f64 + 0.5) * mu,
        (g.0[1] as f64 + 0.5) * mu,
        (g.0[2] as f64 + 0.5) * mu,
    )
}

/// Integrates a camera-frame point cloud observed from `pose`.
///
/// `conf` is the frame's confidence image, sampled for the in-front weight in
/// confidence mode; each point's own confidence weights the band behind it.
pub fn integrate_frame(
    map: &mut TsdfMap,
    cloud: &ConfidencePointCloud,
    pose: &Pose,
    intr: &CameraIntrinsics,
    conf: &ScalarImage,
    cfg: &IntegrationConfig,
) -> Result<IntegrationReport> {
    cfg.validate()?;
    if conf.width() != intr.width || conf.height() != intr.height {
        return Err(Error::Shape(format!(
            "confidence {}x{} vs intrinsics {}x{}",
            conf.width(),
            conf.height(),
            intr.width,
            intr.height
        )));
    }
    let ctx = FrameContext {
        params: *map.params(),
        origin: pose.origin(),
        pose: *pose,
        world_to_cam: pose.inverse(),
        intr,
        conf,
        cfg,
    };
    let params = ctx.params;
    let mut report = IntegrationReport::default();
    let mut touched = HashSet::new();
    for chunk in cloud.points.chunks(RAY_CHUNK) {
        let traced: Vec<Option<Vec<Update>>> = chunk
            .par_iter()
            .map_init(Vec::new, |scratch, pt| ctx.trace(pt.position, pt.confidence, scratch))
            .collect();
        for ray in traced {
            let Some(updates) = ray else {
                report.points_skipped += 1;
                continue;
            };
            report.points_integrated += 1;
            for u in updates {
                let voxel = map.voxel_mut(u.voxel);
                *voxel = update_voxel(
                    *voxel,
                    u.rho,
                    u.omega,
                    cfg.update_mode,
                    params.omega_max,
                    params.truncation,
                );
                report.voxel_updates += 1;
                touched.insert(u.voxel);
            }
        }
    }
    report.voxels_touched = touched.len();
    Ok(report)
}

/// Confidence filter, back-projection and integration of one depth frame.
pub fn integrate_depth_frame(
    map: &mut TsdfMap,
    depth: &ScalarImage,
    conf: &ScalarImage,
    pose: &Pose,
    intr: &CameraIntrinsics,
    cfg: &IntegrationConfig,
) -> Result<IntegrationReport> {
    let filtered = filter_by_confidence(depth, conf, cfg.c_min)?;
    let cloud = depth_to_pointcloud(&filtered, conf, intr)?;
    integrate_frame(map, &cloud, pose, intr, conf, cfg)
}
