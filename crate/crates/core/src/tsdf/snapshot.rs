//! Binary map snapshots.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "CTSD" | version u32 | mu f64 | tau f64 | eta f64 | omega_max f64
//!        | block_side u32 | block_count u64
//! per block (sorted by index): ix iy iz i64 | side^3 x (phi f64, omega f64)
//! ```
//!
//! Voxels inside a block are stored with x varying fastest.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::map::{BlockIndex, MapParams, TsdfMap, VoxelBlock};
use super::voxel::TsdfVoxel;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"CTSD";
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn write_snapshot<W: Write>(map: &TsdfMap, mut w: W) -> std::io::Result<()> {
    let p = map.params();
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    for v in [p.voxel_size, p.truncation, p.eta, p.omega_max] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&(p.block_side as u32).to_le_bytes())?;
    let blocks = map.sorted_blocks();
    w.write_all(&(blocks.len() as u64).to_le_bytes())?;
    for blk in blocks {
        for i in blk.index.0 {
            w.write_all(&i.to_le_bytes())?;
        }
        for v in blk.voxels() {
            w.write_all(&v.phi.to_le_bytes())?;
            w.write_all(&v.omega.to_le_bytes())?;
        }
    }
    w.flush()
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated snapshot: {e}")))?;
    Ok(buf)
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(read_array(r)?))
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<TsdfMap> {
    let magic: [u8; 4] = read_array(&mut r)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Format("bad snapshot magic".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let voxel_size = read_f64(&mut r)?;
    let truncation = read_f64(&mut r)?;
    let eta = read_f64(&mut r)?;
    let omega_max = read_f64(&mut r)?;
    let block_side = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let count = u64::from_le_bytes(read_array(&mut r)?);
    let params = MapParams {
        voxel_size,
        truncation,
        eta,
        omega_max,
        block_side,
    };
    let mut map = TsdfMap::new(params).map_err(|e| Error::Format(e.to_string()))?;
    for _ in 0..count {
        let mut idx = [0i64; 3];
        for i in idx.iter_mut() {
            *i = i64::from_le_bytes(read_array(&mut r)?);
        }
        let mut blk = VoxelBlock::new(BlockIndex(idx), block_side);
        for v in blk.voxels_mut() {
            let phi = read_f64(&mut r)?;
            let omega = read_f64(&mut r)?;
            *v = TsdfVoxel { phi, omega };
        }
        if map.block(&blk.index).is_some() {
            return Err(Error::Format(format!("duplicate block {:?}", blk.index)));
        }
        map.insert_block(blk);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(|e| Error::Format(e.to_string()))? != 0 {
        return Err(Error::Format("trailing bytes after snapshot".into()));
    }
    Ok(map)
}

pub fn save_snapshot(map: &TsdfMap, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_snapshot(map, BufWriter::new(f)).map_err(|e| Error::io(path, e))
}

pub fn load_snapshot(path: &Path) -> Result<TsdfMap> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_snapshot(BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsdf::map::VoxelIndex;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let map = TsdfMap::new(MapParams::new(0.05, 1.0).with_block_side(4)).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&map, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"CTSD");
        assert_eq!(buf.len(), 4 + 4 + 32 + 4 + 8);
        assert_eq!(f64::from_le_bytes(buf[8..16].try_into().unwrap()), 0.05);
        assert_eq!(f64::from_le_bytes(buf[16..24].try_into().unwrap()), 0.2);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_snapshot(&b"XTSD"[..]), Err(Error::Format(_))));
        let map = TsdfMap::new(MapParams::new(0.05, 1.0).with_block_side(2)).unwrap();
        let mut m = map.clone();
        m.set_voxel(VoxelIndex([0, 0, 0]), TsdfVoxel { phi: 0.1, omega: 0.5 });
        let mut buf = Vec::new();
        write_snapshot(&m, &mut buf).unwrap();
        buf.pop();
        assert!(matches!(read_snapshot(&buf[..]), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(vox in proptest::collection::vec(((-40i64..40, -40i64..40, -40i64..40), -0.2f64..0.2, 0.0f64..1.0), 0..60)) {
            let mut map = TsdfMap::new(MapParams::new(0.05, 1.0).with_block_side(8)).unwrap();
            for ((x, y, z), phi, omega) in vox {
                map.set_voxel(VoxelIndex([x, y, z]), TsdfVoxel { phi, omega });
            }
            let mut buf = Vec::new();
            write_snapshot(&map, &mut buf).unwrap();
            let back = read_snapshot(&buf[..]).unwrap();
            prop_assert!(map.bitwise_eq(&back));
            let mut buf2 = Vec::new();
            write_snapshot(&back, &mut buf2).unwrap();
            prop_assert_eq!(buf, buf2);
        }
    }
}
