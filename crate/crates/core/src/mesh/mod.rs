//! Surface extraction, confidence coloring and PLY export.

mod color;
mod marching_cubes;
mod ply;
mod voxel_cloud;

pub use color::{confidence_hue, confidence_to_color, Rgb};
pub use marching_cubes::{marching_cubes, DEFAULT_OMEGA_MESH_MIN};
pub use ply::{export_ply, export_voxel_cloud_ply, import_ply, read_ply, write_ply};
pub use voxel_cloud::{export_voxel_cloud, VoxelCloud, VoxelCloudEntry, DEFAULT_OMEGA_VIS_MIN};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshVertex {
    pub position: Vec3,
    pub confidence: f64,
    pub color: Rgb,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<MeshVertex>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len() as u32;
        if let Some(t) = self.triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(Error::Invariant(format!("triangle {t:?} indexes past {n} vertices")));
        }
        for v in &self.vertices {
            if !(0.0..=1.0).contains(&v.confidence) || v.color != confidence_to_color(v.confidence) {
                return Err(Error::Invariant(format!("bad vertex confidence/color {v:?}")));
            }
        }
        Ok(())
    }

    /// Unit normal of a triangle, `None` when degenerate.
    pub fn triangle_normal(&self, t: usize) -> Option<Vec3> {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i as usize].position);
        (b - a).cross(c - a).normalized()
    }

    /// True when every undirected edge is shared by exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        let mut count = std::collections::HashMap::<(u32, u32), u32>::new();
        for t in &self.triangles {
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        !count.is_empty() && count.values().all(|&n| n == 2)
    }
}
