//! Marching cubes over the voxel-center lattice of a [`TsdfMap`].
//!
//! The case table is generated at first use instead of being transcribed.
//! Iso-segments are built per cube face; on a face with two diagonal inside
//! corners each inside corner is cut off separately. That rule only depends
//! on the four face corners, so neighboring cubes always agree on the
//! segments of a shared face and the output is closed wherever all cubes
//! are emitted.

use std::collections::HashMap;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::geometry::Vec3;
use crate::tsdf::{TsdfMap, TsdfVoxel, VoxelBlock, VoxelIndex};

use super::color::confidence_to_color;
use super::{MeshVertex, TriangleMesh};

pub const DEFAULT_OMEGA_MESH_MIN: f64 = 1e-4;

#[inline]
fn corner_offset(c: u8) -> [i64; 3] {
    [(c & 1) as i64, ((c >> 1) & 1) as i64, ((c >> 2) & 1) as i64]
}

/// The 12 cube edges as `(low corner, high corner)`, grouped by axis.
const EDGES: [(u8, u8); 12] = [
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7),
    (0, 2),
    (1, 3),
    (4, 6),
    (5, 7),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

#[inline]
fn edge_axis(e: usize) -> usize {
    e / 4
}

fn edge_id(a: u8, b: u8) -> usize {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    EDGES
        .iter()
        .position(|&(x, y)| x == lo && y == hi)
        .expect("corners are not adjacent")
}

/// Cube faces as corner cycles.
fn faces() -> Vec<[u8; 4]> {
    let mut out = Vec::with_capacity(6);
    for bit in [1u8, 2, 4] {
        let others: Vec<u8> = [1u8, 2, 4].into_iter().filter(|&b| b != bit).collect();
        let (u, v) = (others[0], others[1]);
        for s in 0..2u8 {
            let base = s * bit;
            out.push([base, base | u, base | u | v, base | v]);
        }
    }
    out
}

type CaseTable = Vec<Vec<[u8; 3]>>;

fn case_table() -> &'static CaseTable {
    static TABLE: OnceLock<CaseTable> = OnceLock::new();
    TABLE.get_or_init(build_case_table)
}

fn corner_pos(c: u8) -> Vec3 {
    let o = corner_offset(c);
    Vec3::new(o[0] as f64, o[1] as f64, o[2] as f64)
}

fn edge_mid(e: usize) -> Vec3 {
    let (a, b) = EDGES[e];
    (corner_pos(a) + corner_pos(b)) * 0.5
}

fn build_case_table() -> CaseTable {
    let faces = faces();
    (0..256usize)
        .map(|config| {
            let inside = |c: u8| (config >> c) & 1 == 1;
            let mut adj: Vec<Vec<usize>> = vec![Vec::new(); 12];
            for f in &faces {
                let active: Vec<usize> = (0..4)
                    .filter(|&k| inside(f[k]) != inside(f[(k + 1) % 4]))
                    .collect();
                let mut link = |k1: usize, k2: usize| {
                    let e1 = edge_id(f[k1], f[(k1 + 1) % 4]);
                    let e2 = edge_id(f[k2], f[(k2 + 1) % 4]);
                    adj[e1].push(e2);
                    adj[e2].push(e1);
                };
                match active.len() {
                    0 => {}
                    2 => link(active[0], active[1]),
                    4 => {
                        // cut off each inside corner: corner k touches face edges k-1 and k
                        for k in 0..4 {
                            if inside(f[k]) {
                                link((k + 3) % 4, k);
                            }
                        }
                    }
                    _ => unreachable!("a face has an even number of sign changes"),
                }
            }
            let mut visited = [false; 12];
            let mut tris = Vec::new();
            for start in 0..12 {
                if visited[start] || adj[start].is_empty() {
                    continue;
                }
                let mut cycle = vec![start];
                visited[start] = true;
                let mut prev = start;
                let mut cur = adj[start][0];
                while cur != start {
                    visited[cur] = true;
                    cycle.push(cur);
                    let next = if adj[cur][0] != prev { adj[cur][0] } else { adj[cur][1] };
                    prev = cur;
                    cur = next;
                }
                // orient so the right-hand normal points from inside to outside
                let mut normal = Vec3::ZERO;
                let mut grad = Vec3::ZERO;
                for i in 0..cycle.len() {
                    let p = edge_mid(cycle[i]);
                    let q = edge_mid(cycle[(i + 1) % cycle.len()]);
                    normal += p.cross(q);
                    let (a, b) = EDGES[cycle[i]];
                    grad += if inside(a) {
                        corner_pos(b) - corner_pos(a)
                    } else {
                        corner_pos(a) - corner_pos(b)
                    };
                }
                if normal.dot(grad) < 0.0 {
                    cycle.reverse();
                }
                for i in 1..cycle.len() - 1 {
                    tris.push([cycle[0] as u8, cycle[i] as u8, cycle[i + 1] as u8]);
                }
            }
            tris
        })
        .collect()
}

/// A lattice edge: its low end voxel and axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct EdgeKey(VoxelIndex, u8);

struct CornerReader<'a> {
    map: &'a TsdfMap,
    block: &'a VoxelBlock,
}

impl CornerReader<'_> {
    #[inline]
    fn get(&self, local: [usize; 3], off: [i64; 3]) -> TsdfVoxel {
        let s = self.block.side();
        let l = [
            local[0] + off[0] as usize,
            local[1] + off[1] as usize,
            local[2] + off[2] as usize,
        ];
        if l[0] < s && l[1] < s && l[2] < s {
            *self.block.voxel(l)
        } else {
            self.map.voxel(self.block.global_index(local).offset(off))
        }
    }
}

fn block_triangles(map: &TsdfMap, block: &VoxelBlock, omega_min: f64) -> Vec<[EdgeKey; 3]> {
    let table = case_table();
    let reader = CornerReader { map, block };
    let s = block.side();
    let mut out = Vec::new();
    for z in 0..s {
        for y in 0..s {
            'cube: for x in 0..s {
                let local = [x, y, z];
                let mut config = 0usize;
                for c in 0..8u8 {
                    let v = reader.get(local, corner_offset(c));
                    if !(v.omega > omega_min) {
                        continue 'cube;
                    }
                    if v.phi < 0.0 {
                        config |= 1 << c;
                    }
                }
                if config == 0 || config == 255 {
                    continue;
                }
                let g = block.global_index(local);
                for tri in &table[config] {
                    out.push(tri.map(|e| {
                        let (a, _) = EDGES[e as usize];
                        EdgeKey(g.offset(corner_offset(a)), edge_axis(e as usize) as u8)
                    }));
                }
            }
        }
    }
    out
}

fn edge_vertex(map: &TsdfMap, key: EdgeKey) -> MeshVertex {
    let mut off = [0i64; 3];
    off[key.1 as usize] = 1;
    let (ia, ib) = (key.0, key.0.offset(off));
    let (a, b) = (map.voxel(ia), map.voxel(ib));
    let t = a.phi / (a.phi - b.phi);
    let (pa, pb) = (map.voxel_center(ia), map.voxel_center(ib));
    let position = pa + (pb - pa) * t;
    let omega = a.omega * (1.0 - t) + b.omega * t;
    let confidence = (omega / map.params().omega_max).clamp(0.0, 1.0);
    MeshVertex {
        position,
        confidence,
        color: confidence_to_color(confidence),
    }
}

/// Extracts the zero level set of the map as a triangle mesh.
///
/// A cube is meshed only when all eight corner voxels have weight above
/// `omega_mesh_min`. Output order is deterministic: blocks in index order,
/// vertices in order of first use.
pub fn marching_cubes(map: &TsdfMap, omega_mesh_min: f64) -> TriangleMesh {
    let blocks = map.sorted_blocks();
    let per_block: Vec<Vec<[EdgeKey; 3]>> = blocks
        .par_iter()
        .map(|b| block_triangles(map, b, omega_mesh_min))
        .collect();
    let mut index: HashMap<EdgeKey, u32> = HashMap::new();
    let mut mesh = TriangleMesh::default();
    for tris in per_block {
        for tri in tris {
            let ids = tri.map(|k| {
                *index.entry(k).or_insert_with(|| {
                    mesh.vertices.push(edge_vertex(map, k));
                    (mesh.vertices.len() - 1) as u32
                })
            });
            mesh.triangles.push(ids);
        }
    }
    mesh
}
