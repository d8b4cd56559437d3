//! Engine configuration as a strict JSON document.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{DEFAULT_OMEGA_MESH_MIN, DEFAULT_OMEGA_VIS_MIN};
use crate::scene::PoolScale;
use crate::stereo::DEFAULT_C_MIN;
use crate::tsdf::{
    IntegrationConfig, MapParams, UpdateMode, WeightMode, DEFAULT_BLOCK_SIDE, DEFAULT_VOXEL_SIZE,
};

pub const DEFAULT_POSE_TIME_TOLERANCE: f64 = 0.01;

/// Every key is optional and defaulted; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub voxel_size: f64,
    /// Weight cap; `None` picks 1.0 in average mode with bounded weights
    /// (constant or confidence) and 100.0 otherwise.
    pub omega_max: Option<f64>,
    pub weight_mode: WeightMode,
    pub update_mode: UpdateMode,
    pub c_min: f64,
    pub max_ray_length: f64,
    pub default_confidence: f64,
    pub block_side: usize,
    /// Overrides the `4 * voxel_size` truncation distance.
    pub truncation: Option<f64>,
    /// Overrides the `voxel_size` inner band.
    pub eta: Option<f64>,
    pub omega_mesh_min: f64,
    pub omega_vis_min: f64,
    pub seed: u64,
    pub noise_sigma_coeff: f64,
    pub pose_time_tolerance: f64,
    pub pool_scale: PoolScale,
    pub max_disparity: usize,
    pub patch_radius: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        let ic = IntegrationConfig::default();
        EngineConfig {
            voxel_size: DEFAULT_VOXEL_SIZE,
            omega_max: None,
            weight_mode: ic.weight_mode,
            update_mode: ic.update_mode,
            c_min: DEFAULT_C_MIN,
            max_ray_length: ic.max_ray_length,
            default_confidence: ic.default_confidence,
            block_side: DEFAULT_BLOCK_SIDE,
            truncation: None,
            eta: None,
            omega_mesh_min: DEFAULT_OMEGA_MESH_MIN,
            omega_vis_min: DEFAULT_OMEGA_VIS_MIN,
            seed: 0,
            noise_sigma_coeff: 0.0,
            pose_time_tolerance: DEFAULT_POSE_TIME_TOLERANCE,
            pool_scale: PoolScale::Reduced,
            max_disparity: 64,
            patch_radius: 2,
        }
    }
}

impl EngineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: EngineConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn effective_omega_max(&self) -> f64 {
        self.omega_max.unwrap_or(match (self.update_mode, self.weight_mode) {
            (UpdateMode::Average, WeightMode::Constant | WeightMode::Confidence) => 1.0,
            _ => 100.0,
        })
    }

    pub fn map_params(&self) -> MapParams {
        let mut p = MapParams::new(self.voxel_size, self.effective_omega_max())
            .with_block_side(self.block_side);
        if let Some(t) = self.truncation {
            p.truncation = t;
        }
        if let Some(e) = self.eta {
            p.eta = e;
        }
        p
    }

    pub fn integration(&self) -> IntegrationConfig {
        IntegrationConfig {
            weight_mode: self.weight_mode,
            update_mode: self.update_mode,
            c_min: self.c_min,
            max_ray_length: self.max_ray_length,
            default_confidence: self.default_confidence,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.map_params().validate()?;
        self.integration().validate()?;
        let bad = |what: &str| Err(Error::Config(format!("{what} out of range")));
        if !(self.omega_mesh_min >= 0.0) || !self.omega_mesh_min.is_finite() {
            return bad("omega_mesh_min");
        }
        if !(self.omega_vis_min >= 0.0) || !self.omega_vis_min.is_finite() {
            return bad("omega_vis_min");
        }
        if !(self.noise_sigma_coeff >= 0.0) || !self.noise_sigma_coeff.is_finite() {
            return bad("noise_sigma_coeff");
        }
        if !(self.pose_time_tolerance >= 0.0) || !self.pose_time_tolerance.is_finite() {
            return bad("pose_time_tolerance");
        }
        if self.max_disparity == 0 {
            return bad("max_disparity");
        }
        if self.patch_radius == 0 {
            return bad("patch_radius");
        }
        Ok(())
    }
}
