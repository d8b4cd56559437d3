//! Dataset layout: a JSON manifest, a TUM pose file and PFM frames.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Pose, Quaternion, Vec3};

pub const MANIFEST_VERSION: u32 = 1;

/// Parses TUM trajectory text: `t tx ty tz qx qy qz qw` per line.
pub fn parse_poses(text: &str) -> Result<Vec<(f64, Pose)>> {
    let mut out: Vec<(f64, Pose)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(Error::Parse {
                line,
                message: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        let mut v = [0.0; 8];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("not a finite number: {f:?}"),
                })?;
        }
        let [t, tx, ty, tz, qx, qy, qz, qw] = v;
        if qx == 0.0 && qy == 0.0 && qz == 0.0 && qw == 0.0 {
            return Err(Error::Parse {
                line,
                message: "zero quaternion".into(),
            });
        }
        if let Some((prev, _)) = out.last() {
            if !(t > *prev) {
                return Err(Error::Order { line });
            }
        }
        out.push((t, Pose::new(Quaternion::new(qw, qx, qy, qz), Vec3::new(tx, ty, tz))));
    }
    Ok(out)
}

pub fn parse_pose_file(path: &Path) -> Result<Vec<(f64, Pose)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_poses(&text)
}

/// Shortest round-trip float formatting, so parse(format(p)) == p.
pub fn format_poses(poses: &[(f64, Pose)]) -> String {
    let mut s = String::from("# timestamp tx ty tz qx qy qz qw\n");
    for (t, p) in poses {
        let (r, q) = (p.translation, p.rotation);
        let _ = writeln!(s, "{t} {} {} {} {} {} {} {}", r.x, r.y, r.z, q.x, q.y, q.z, q.w);
    }
    s
}

pub fn write_pose_file(path: &Path, poses: &[(f64, Pose)]) -> Result<()> {
    std::fs::write(path, format_poses(poses)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameEntry {
    pub timestamp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disparity: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<PathBuf>,
}

impl FrameEntry {
    pub fn with_depth(timestamp: f64, depth: PathBuf, confidence: PathBuf) -> Self {
        FrameEntry {
            timestamp,
            depth: Some(depth),
            confidence: Some(confidence),
            disparity: None,
            left: None,
            right: None,
        }
    }

    fn paths(&self) -> impl Iterator<Item = &PathBuf> {
        [&self.depth, &self.confidence, &self.disparity, &self.left, &self.right]
            .into_iter()
            .flatten()
    }
}

/// Relative paths are resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub version: u32,
    pub intrinsics: CameraIntrinsics,
    pub pose_file: PathBuf,
    /// When false, confidence images hold raw cosine similarity in [-1, 1].
    pub confidence_prenormalized: bool,
    pub frames: Vec<FrameEntry>,
}

impl DatasetManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Data(format!("manifest: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Structural checks that do not touch the filesystem.
    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::Data(format!(
                "manifest version {} (expected {MANIFEST_VERSION})",
                self.version
            )));
        }
        self.intrinsics.validate()?;
        for w in self.frames.windows(2) {
            if !(w[1].timestamp > w[0].timestamp) {
                return Err(Error::Data(format!(
                    "frame timestamps not strictly increasing: {} then {}",
                    w[0].timestamp, w[1].timestamp
                )));
            }
        }
        for f in &self.frames {
            if !f.timestamp.is_finite() {
                return Err(Error::Data(format!("frame timestamp {}", f.timestamp)));
            }
            let stereo_pair = f.left.is_some() && f.right.is_some();
            if f.depth.is_none() && f.disparity.is_none() && !stereo_pair {
                return Err(Error::Data(format!(
                    "frame at t={} has neither depth, disparity nor a stereo pair",
                    f.timestamp
                )));
            }
            if f.left.is_some() != f.right.is_some() {
                return Err(Error::Data(format!(
                    "frame at t={} has only one stereo image",
                    f.timestamp
                )));
            }
        }
        Ok(())
    }
}

/// A manifest plus the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub root: PathBuf,
}

impl Dataset {
    /// Loads and validates a manifest; every referenced file must exist.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest = DatasetManifest::from_json(&text)?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let ds = Dataset { manifest, root };
        ds.manifest.validate()?;
        let missing = std::iter::once(&ds.manifest.pose_file)
            .chain(ds.manifest.frames.iter().flat_map(FrameEntry::paths))
            .map(|p| ds.resolve(p))
            .find(|p| !p.is_file());
        if let Some(p) = missing {
            return Err(Error::Data(format!("missing dataset file {}", p.display())));
        }
        Ok(ds)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// One pose per frame, by nearest timestamp within `tolerance`.
    pub fn frame_poses(&self, tolerance: f64) -> Result<Vec<Pose>> {
        let poses = parse_pose_file(&self.resolve(&self.manifest.pose_file))?;
        let times: Vec<f64> = self.manifest.frames.iter().map(|f| f.timestamp).collect();
        associate_poses(&times, &poses, tolerance)
    }
}

/// Nearest pose for each timestamp; `poses` must be sorted by time.
pub fn associate_poses(times: &[f64], poses: &[(f64, Pose)], tolerance: f64) -> Result<Vec<Pose>> {
    times
        .iter()
        .map(|&t| {
            let i = poses.partition_point(|(tp, _)| *tp < t);
            let best = [i.checked_sub(1), Some(i)]
                .into_iter()
                .flatten()
                .filter_map(|j| poses.get(j))
                .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()));
            match best {
                Some((tp, p)) if (tp - t).abs() <= tolerance => Ok(*p),
                _ => Err(Error::Data(format!("no pose within {tolerance} s of frame t={t}"))),
            }
        })
        .collect()
}
