use crate::geometry::Vec3;
use crate::tsdf::TsdfMap;

use super::color::{confidence_to_color, Rgb};

pub const DEFAULT_OMEGA_VIS_MIN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelCloudEntry {
    pub center: Vec3,
    pub phi: f64,
    pub omega: f64,
    pub color: Rgb,
}

/// Surface voxels colored by normalized weight.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VoxelCloud {
    pub entries: Vec<VoxelCloudEntry>,
}

/// Voxels with `omega > omega_vis_min` and `|phi| < mu`, in block order.
pub fn export_voxel_cloud(map: &TsdfMap, omega_vis_min: f64) -> VoxelCloud {
    let mu = map.voxel_size();
    let omega_max = map.params().omega_max;
    let entries = map
        .observed_voxels()
        .into_iter()
        .filter(|(_, v)| v.omega > omega_vis_min && v.phi.abs() < mu)
        .map(|(g, v)| VoxelCloudEntry {
            center: map.voxel_center(g),
            phi: v.phi,
            omega: v.omega,
            color: confidence_to_color(v.omega / omega_max),
        })
        .collect();
    VoxelCloud { entries }
}
