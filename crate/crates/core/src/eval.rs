//! Accuracy and weight statistics against analytic scenes.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::mesh::TriangleMesh;
use crate::scene::Scene;
use crate::tsdf::{TsdfMap, VoxelIndex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceErrorReport {
    pub rms_error: f64,
    pub max_error: f64,
    pub vertex_count: usize,
}

/// Per-vertex `|SDF|` of the mesh against the scene.
pub fn surface_error(mesh: &TriangleMesh, scene: &Scene) -> Result<SurfaceErrorReport> {
    if mesh.vertices.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let errs: Vec<f64> = mesh
        .vertices
        .par_iter()
        .map(|v| scene.signed_distance(v.position).abs())
        .collect();
    // sequential reduction keeps the result independent of thread count
    let (mut sq, mut max) = (0.0, 0.0f64);
    for e in &errs {
        sq += e * e;
        max = max.max(*e);
    }
    Ok(SurfaceErrorReport {
        rms_error: (sq / errs.len() as f64).sqrt().min(max),
        max_error: max,
        vertex_count: errs.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionWeightStats {
    pub label: String,
    pub mean_omega: f64,
    pub min_omega: f64,
    pub max_omega: f64,
    pub voxel_count: usize,
}

/// Weight statistics over observed voxels whose centers lie in `region` and
/// whose `|phi|` is below `surface_band`. An empty selection reports zeros.
pub fn region_weight_stats(
    map: &TsdfMap,
    label: &str,
    region: &Aabb,
    surface_band: f64,
) -> Result<RegionWeightStats> {
    if !(surface_band > 0.0) {
        return Err(Error::Config(format!("surface band {surface_band} must be positive")));
    }
    let mut stats = RegionWeightStats {
        label: label.to_string(),
        mean_omega: 0.0,
        min_omega: f64::INFINITY,
        max_omega: 0.0,
        voxel_count: 0,
    };
    let mut sum = 0.0;
    for (g, v) in map.observed_voxels() {
        if v.phi.abs() < surface_band && region.contains(map.voxel_center(g)) {
            sum += v.omega;
            stats.min_omega = stats.min_omega.min(v.omega);
            stats.max_omega = stats.max_omega.max(v.omega);
            stats.voxel_count += 1;
        }
    }
    if stats.voxel_count == 0 {
        stats.min_omega = 0.0;
    } else {
        stats.mean_omega = (sum / stats.voxel_count as f64).clamp(stats.min_omega, stats.max_omega);
    }
    Ok(stats)
}

/// Weight of `probe` in each of a sequence of map states, one per frame.
///
/// Every state must have observed the probe.
pub fn convergence_series<'a>(
    states: impl IntoIterator<Item = &'a TsdfMap>,
    probe: VoxelIndex,
) -> Result<Vec<f64>> {
    let series: Vec<f64> = states.into_iter().map(|m| m.voxel(probe).omega).collect();
    if series.is_empty() || series.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::ProbeUnobserved);
    }
    Ok(series)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub surface: Option<SurfaceErrorReport>,
    pub regions: Vec<RegionWeightStats>,
}

impl EvalReport {
    pub fn region(&self, label: &str) -> Option<&RegionWeightStats> {
        self.regions.iter().find(|r| r.label == label)
    }

    /// Flat JSON with `rms_error`, `max_error`, `vertex_count` at top level.
    pub fn to_json(&self) -> String {
        let mut obj = serde_json::Map::new();
        if let Some(s) = &self.surface {
            obj.insert("rms_error".into(), s.rms_error.into());
            obj.insert("max_error".into(), s.max_error.into());
            obj.insert("vertex_count".into(), s.vertex_count.into());
        }
        let regions: Vec<serde_json::Value> = self
            .regions
            .iter()
            .map(|r| serde_json::to_value(r).expect("stats serialize"))
            .collect();
        obj.insert("regions".into(), regions.into());
        let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(obj)).expect("report serializes");
        s.push('\n');
        s
    }

    /// One `key=value` per line, region keys prefixed by `region.<label>.`.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        if let Some(s) = &self.surface {
            let _ = writeln!(out, "rms_error={}", s.rms_error);
            let _ = writeln!(out, "max_error={}", s.max_error);
            let _ = writeln!(out, "vertex_count={}", s.vertex_count);
        }
        for r in &self.regions {
            let p = format!("region.{}", r.label);
            let _ = writeln!(out, "{p}.mean_omega={}", r.mean_omega);
            let _ = writeln!(out, "{p}.min_omega={}", r.min_omega);
            let _ = writeln!(out, "{p}.max_omega={}", r.max_omega);
            let _ = writeln!(out, "{p}.voxel_count={}", r.voxel_count);
        }
        out
    }
}
