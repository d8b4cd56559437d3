use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

use super::voxel::TsdfVoxel;
use super::weights::Band;

pub const DEFAULT_VOXEL_SIZE: f64 = 0.05;
pub const DEFAULT_BLOCK_SIDE: usize = 16;

/// Integer coordinates of a voxel block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockIndex(pub [i64; 3]);

/// Global integer coordinates of a voxel; its cell spans `[g*mu, (g+1)*mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelIndex(pub [i64; 3]);

impl VoxelIndex {
    pub fn offset(self, d: [i64; 3]) -> VoxelIndex {
        VoxelIndex([self.0[0] + d[0], self.0[1] + d[1], self.0[2] + d[2]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapParams {
    pub voxel_size: f64,
    pub truncation: f64,
    pub eta: f64,
    pub omega_max: f64,
    pub block_side: usize,
}

impl MapParams {
    /// `truncation = 4 mu`, `eta = mu`.
    pub fn new(voxel_size: f64, omega_max: f64) -> Self {
        MapParams {
            voxel_size,
            truncation: 4.0 * voxel_size,
            eta: voxel_size,
            omega_max,
            block_side: DEFAULT_BLOCK_SIDE,
        }
    }

    pub fn with_block_side(mut self, side: usize) -> Self {
        self.block_side = side;
        self
    }

    pub fn band(&self) -> Band {
        Band {
            truncation: self.truncation,
            eta: self.eta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.voxel_size, self.truncation, self.eta, self.omega_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite
            || !(self.voxel_size > 0.0)
            || !(self.eta >= 0.0)
            || !(self.truncation > self.eta)
            || !(self.omega_max > 0.0)
            || self.block_side == 0
            || self.block_side > 1024
        {
            return Err(Error::Config(format!("invalid map parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelBlock {
    pub index: BlockIndex,
    side: usize,
    voxels: Vec<TsdfVoxel>,
}

impl VoxelBlock {
    pub fn new(index: BlockIndex, side: usize) -> Self {
        VoxelBlock {
            index,
            side,
            voxels: vec![TsdfVoxel::default(); side * side * side],
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Linear storage index; x varies fastest.
    #[inline]
    pub fn linear(&self, local: [usize; 3]) -> usize {
        local[0] + self.side * (local[1] + self.side * local[2])
    }

    #[inline]
    pub fn voxel(&self, local: [usize; 3]) -> &TsdfVoxel {
        &self.voxels[self.linear(local)]
    }

    #[inline]
    pub fn voxel_mut(&mut self, local: [usize; 3]) -> &mut TsdfVoxel {
        let i = self.linear(local);
        &mut self.voxels[i]
    }

    pub fn voxels(&self) -> &[TsdfVoxel] {
        &self.voxels
    }

    pub(crate) fn voxels_mut(&mut self) -> &mut [TsdfVoxel] {
        &mut self.voxels
    }

    pub fn global_index(&self, local: [usize; 3]) -> VoxelIndex {
        let s = self.side as i64;
        VoxelIndex([
            self.index.0[0] * s + local[0] as i64,
            self.index.0[1] * s + local[1] as i64,
            self.index.0[2] * s + local[2] as i64,
        ])
    }

    /// `(local, voxel)` pairs in storage order.
    pub fn iter(&self) -> impl Iterator<Item = ([usize; 3], &TsdfVoxel)> + '_ {
        let s = self.side;
        self.voxels
            .iter()
            .enumerate()
            .map(move |(i, v)| ([i % s, (i / s) % s, i / (s * s)], v))
    }
}

/// Sparse, block-hashed TSDF volume. Blocks are allocated on first update.
#[derive(Debug, Clone)]
pub struct TsdfMap {
    params: MapParams,
    blocks: HashMap<BlockIndex, VoxelBlock>,
}

impl TsdfMap {
    pub fn new(params: MapParams) -> Result<Self> {
        params.validate()?;
        Ok(TsdfMap {
            params,
            blocks: HashMap::new(),
        })
    }

    #[inline]
    pub fn params(&self) -> &MapParams {
        &self.params
    }

    #[inline]
    pub fn voxel_size(&self) -> f64 {
        self.params.voxel_size
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    #[inline]
    pub fn split(&self, v: VoxelIndex) -> (BlockIndex, [usize; 3]) {
        let s = self.params.block_side as i64;
        let g = v.0;
        (
            BlockIndex([g[0].div_euclid(s), g[1].div_euclid(s), g[2].div_euclid(s)]),
            [
                g[0].rem_euclid(s) as usize,
                g[1].rem_euclid(s) as usize,
                g[2].rem_euclid(s) as usize,
            ],
        )
    }

    /// World position of a voxel center: `(g + 0.5) * mu` per axis.
    #[inline]
    pub fn voxel_center(&self, v: VoxelIndex) -> Vec3 {
        let mu = self.params.voxel_size;
        Vec3::new(
            (v.0[0] as f64 + 0.5) * mu,
            (v.0[1] as f64 + 0.5) * mu,
            (v.0[2] as f64 + 0.5) * mu,
        )
    }

    /// Voxel whose cell contains `p`.
    pub fn voxel_containing(&self, p: Vec3) -> VoxelIndex {
        let inv = 1.0 / self.params.voxel_size;
        VoxelIndex([
            (p.x * inv).floor() as i64,
            (p.y * inv).floor() as i64,
            (p.z * inv).floor() as i64,
        ])
    }

    /// Stored voxel, or the unobserved default for unallocated space.
    #[inline]
    pub fn voxel(&self, v: VoxelIndex) -> TsdfVoxel {
        let (b, l) = self.split(v);
        self.blocks
            .get(&b)
            .map(|blk| *blk.voxel(l))
            .unwrap_or_default()
    }

    pub fn voxel_mut(&mut self, v: VoxelIndex) -> &mut TsdfVoxel {
        let (b, l) = self.split(v);
        let side = self.params.block_side;
        self.blocks
            .entry(b)
            .or_insert_with(|| VoxelBlock::new(b, side))
            .voxel_mut(l)
    }

    pub fn set_voxel(&mut self, v: VoxelIndex, voxel: TsdfVoxel) {
        *self.voxel_mut(v) = voxel;
    }

    pub fn block(&self, b: &BlockIndex) -> Option<&VoxelBlock> {
        self.blocks.get(b)
    }

    pub(crate) fn insert_block(&mut self, block: VoxelBlock) {
        self.blocks.insert(block.index, block);
    }

    /// Blocks in lexicographic index order.
    pub fn sorted_blocks(&self) -> Vec<&VoxelBlock> {
        let mut v: Vec<&VoxelBlock> = self.blocks.values().collect();
        v.sort_by_key(|b| b.index);
        v
    }

    /// Observed voxels (`omega > 0`) in block order, then storage order.
    pub fn observed_voxels(&self) -> Vec<(VoxelIndex, TsdfVoxel)> {
        let mut out = Vec::new();
        for blk in self.sorted_blocks() {
            for (l, v) in blk.iter() {
                if v.is_observed() {
                    out.push((blk.global_index(l), *v));
                }
            }
        }
        out
    }

    /// Checks the weight and distance bounds on every stored voxel.
    pub fn check_invariants(&self) -> Result<()> {
        let p = &self.params;
        for blk in self.blocks.values() {
            if blk.voxels.len() != p.block_side.pow(3) {
                return Err(Error::Invariant(format!(
                    "block {:?} has {} voxels",
                    blk.index,
                    blk.voxels.len()
                )));
            }
            for (l, v) in blk.iter() {
                let ok = v.omega >= 0.0
                    && v.omega <= p.omega_max
                    && v.phi.abs() <= p.truncation
                    && (v.omega > 0.0 || v.phi == 0.0);
                if !ok {
                    return Err(Error::Invariant(format!(
                        "voxel {:?} out of bounds: {v:?}",
                        blk.global_index(l)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Bitwise equality of parameters and all observed content.
    pub fn bitwise_eq(&self, other: &TsdfMap) -> bool {
        if self.params != other.params {
            return false;
        }
        let a = self.sorted_blocks();
        let b = other.sorted_blocks();
        a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| {
                x.index == y.index
                    && x.voxels.iter().zip(&y.voxels).all(|(p, q)| {
                        p.phi.to_bits() == q.phi.to_bits() && p.omega.to_bits() == q.omega.to_bits()
                    })
            })
    }
}
