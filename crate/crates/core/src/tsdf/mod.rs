//! Block-hashed TSDF storage and the integration engine.

mod integrator;
mod map;
mod snapshot;
mod voxel;
mod weights;

pub use integrator::{
    integrate_depth_frame, integrate_frame, lookup_confidence, traverse_segment,
    IntegrationConfig, IntegrationReport,
};
pub use map::{
    BlockIndex, MapParams, TsdfMap, VoxelBlock, VoxelIndex, DEFAULT_BLOCK_SIDE,
    DEFAULT_VOXEL_SIZE,
};
pub use snapshot::{
    load_snapshot, read_snapshot, save_snapshot, write_snapshot, SNAPSHOT_MAGIC,
    SNAPSHOT_VERSION,
};
pub use voxel::{update_voxel, TsdfVoxel, UpdateMode};
pub use weights::{
    projective_distance, weight_confidence, weight_constant, weight_quadratic, Band, WeightMode,
};
