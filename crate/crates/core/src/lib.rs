//! Confidence-weighted TSDF volumetric mapping.
//!
//! Posed depth and confidence frames (or stereo disparities and feature
//! maps) are fused into a block-hashed truncated signed distance field whose
//! voxel weights track depth confidence. Surfaces are exported as
//! confidence-colored meshes and voxel clouds. A synthetic scene renderer and
//! an evaluation module make the whole pipeline checkable against analytic
//! ground truth.

pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod image;
pub mod mesh;
pub mod pfm;
pub mod pipeline;
pub mod scene;
pub mod stereo;
pub mod tsdf;

pub use error::{Error, Result};
