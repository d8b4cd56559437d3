//! Binary little-endian PLY 1.0 output for meshes and voxel clouds, plus a
//! reader for the mesh layout written here.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

use super::color::Rgb;
use super::voxel_cloud::VoxelCloud;
use super::{MeshVertex, TriangleMesh};

pub fn write_ply<W: Write>(mesh: &TriangleMesh, mut w: W) -> std::io::Result<()> {
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\ncomment conftsdf mesh\n\
         element vertex {}\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\n\
         property float confidence\n\
         element face {}\n\
         property list uchar int vertex_indices\n\
         end_header\n",
        mesh.vertices.len(),
        mesh.triangles.len()
    )?;
    for v in &mesh.vertices {
        for c in v.position.to_array() {
            w.write_all(&(c as f32).to_le_bytes())?;
        }
        w.write_all(&[v.color.0, v.color.1, v.color.2])?;
        w.write_all(&(v.confidence as f32).to_le_bytes())?;
    }
    for t in &mesh.triangles {
        w.write_all(&[3u8])?;
        for &i in t {
            w.write_all(&(i as i32).to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn export_ply(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_ply(mesh, BufWriter::new(f)).map_err(|e| Error::io(path, e))
}

pub fn export_voxel_cloud_ply(cloud: &VoxelCloud, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let io = |e| Error::io(path, e);
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\ncomment conftsdf voxel cloud\n\
         element vertex {}\n\
         property float x\nproperty float y\nproperty float z\n\
         property float phi\nproperty float omega\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\n\
         end_header\n",
        cloud.entries.len()
    )
    .map_err(io)?;
    for e in &cloud.entries {
        for c in e.center.to_array() {
            w.write_all(&(c as f32).to_le_bytes()).map_err(io)?;
        }
        w.write_all(&(e.phi as f32).to_le_bytes()).map_err(io)?;
        w.write_all(&(e.omega as f32).to_le_bytes()).map_err(io)?;
        w.write_all(&[e.color.0, e.color.1, e.color.2]).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    U8,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "uchar" | "uint8" => Scalar::U8,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            other => return Err(Error::Format(format!("unsupported PLY type {other}"))),
        })
    }

    fn read<R: Read>(self, r: &mut R) -> Result<f64> {
        let fail = |e: std::io::Error| Error::Format(format!("truncated PLY body: {e}"));
        Ok(match self {
            Scalar::U8 => {
                let mut b = [0u8; 1];
                r.read_exact(&mut b).map_err(fail)?;
                b[0] as f64
            }
            Scalar::I32 | Scalar::U32 | Scalar::F32 => {
                let mut b = [0u8; 4];
                r.read_exact(&mut b).map_err(fail)?;
                match self {
                    Scalar::I32 => i32::from_le_bytes(b) as f64,
                    Scalar::U32 => u32::from_le_bytes(b) as f64,
                    _ => f32::from_le_bytes(b) as f64,
                }
            }
            Scalar::F64 => {
                let mut b = [0u8; 8];
                r.read_exact(&mut b).map_err(fail)?;
                f64::from_le_bytes(b)
            }
        })
    }
}

#[derive(Debug)]
enum Property {
    Value(String, Scalar),
    List(Scalar, Scalar),
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

/// Reads a binary little-endian PLY mesh with vertex positions and
/// optional `red/green/blue/confidence` properties.
pub fn read_ply<R: BufRead>(mut r: R) -> Result<TriangleMesh> {
    let mut line = String::new();
    let next_line = |r: &mut R, line: &mut String| -> Result<()> {
        line.clear();
        let n = r
            .read_line(line)
            .map_err(|e| Error::Format(format!("PLY header: {e}")))?;
        if n == 0 {
            return Err(Error::Format("PLY header ended early".into()));
        }
        Ok(())
    };
    next_line(&mut r, &mut line)?;
    if line.trim_end() != "ply" {
        return Err(Error::Format("missing PLY magic".into()));
    }
    let mut elements: Vec<Element> = Vec::new();
    loop {
        next_line(&mut r, &mut line)?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["end_header"] => break,
            ["format", fmt, ver] => {
                if *fmt != "binary_little_endian" || *ver != "1.0" {
                    return Err(Error::Format(format!("unsupported PLY format {fmt} {ver}")));
                }
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| Error::Format(format!("bad element count {count}")))?,
                props: Vec::new(),
            }),
            ["property", "list", ct, it, _] => elements
                .last_mut()
                .ok_or_else(|| Error::Format("property before element".into()))?
                .props
                .push(Property::List(Scalar::parse(ct)?, Scalar::parse(it)?)),
            ["property", ty, name] => elements
                .last_mut()
                .ok_or_else(|| Error::Format("property before element".into()))?
                .props
                .push(Property::Value(name.to_string(), Scalar::parse(ty)?)),
            _ => return Err(Error::Format(format!("bad PLY header line: {}", line.trim_end()))),
        }
    }

    let mut mesh = TriangleMesh::default();
    for el in &elements {
        for _ in 0..el.count {
            let mut vals: Vec<(&str, f64)> = Vec::with_capacity(el.props.len());
            let mut list: Vec<u32> = Vec::new();
            for p in &el.props {
                match p {
                    Property::Value(name, ty) => vals.push((name.as_str(), ty.read(&mut r)?)),
                    Property::List(ct, it) => {
                        let n = ct.read(&mut r)? as usize;
                        list.clear();
                        for _ in 0..n {
                            list.push(it.read(&mut r)? as u32);
                        }
                    }
                }
            }
            let get = |k: &str| vals.iter().find(|(n, _)| *n == k).map(|(_, v)| *v);
            match el.name.as_str() {
                "vertex" => {
                    let pos = Vec3::new(
                        get("x").unwrap_or(0.0),
                        get("y").unwrap_or(0.0),
                        get("z").unwrap_or(0.0),
                    );
                    let color = Rgb(
                        get("red").unwrap_or(0.0) as u8,
                        get("green").unwrap_or(0.0) as u8,
                        get("blue").unwrap_or(0.0) as u8,
                    );
                    mesh.vertices.push(MeshVertex {
                        position: pos,
                        confidence: get("confidence").unwrap_or(0.0),
                        color,
                    });
                }
                "face" => {
                    if list.len() != 3 {
                        return Err(Error::Format(format!("face with {} vertices", list.len())));
                    }
                    mesh.triangles.push([list[0], list[1], list[2]]);
                }
                _ => {}
            }
        }
    }
    Ok(mesh)
}

pub fn import_ply(path: &Path) -> Result<TriangleMesh> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_ply(BufReader::new(f))
}
