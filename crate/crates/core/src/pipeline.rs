//! Stage orchestration: synth, stereo, integrate, mesh, voxels, eval.
//!
//! Stages always run in that order, whatever order they are requested in.
//! Frames are read, processed and dropped one at a time.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::config::EngineConfig;
use crate::dataset::{write_pose_file, Dataset, DatasetManifest, FrameEntry, MANIFEST_VERSION};
use crate::error::{Error, Result};
use crate::eval::{region_weight_stats, surface_error, EvalReport};
use crate::image::ScalarImage;
use crate::mesh::{export_ply, export_voxel_cloud, export_voxel_cloud_ply, marching_cubes, TriangleMesh};
use crate::pfm::{read_pfm, write_pfm};
use crate::scene::{reference_scene, render_frame, DepthNoise, NamedScene};
use crate::stereo::{block_match, disparity_confidence, disparity_to_depth, similarity_to_confidence};
use crate::tsdf::{integrate_depth_frame, load_snapshot, save_snapshot, IntegrationReport, TsdfMap};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const POSE_FILE: &str = "poses.txt";
pub const SNAPSHOT_FILE: &str = "map.ctsd";
pub const MESH_FILE: &str = "mesh.ply";
pub const VOXELS_FILE: &str = "voxels.ply";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";
pub const STEREO_DIR: &str = "stereo";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Synth,
    Stereo,
    Integrate,
    Mesh,
    Voxels,
    Eval,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Synth,
        Stage::Stereo,
        Stage::Integrate,
        Stage::Mesh,
        Stage::Voxels,
        Stage::Eval,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Stereo => "stereo",
            Stage::Integrate => "integrate",
            Stage::Mesh => "mesh",
            Stage::Voxels => "voxels",
            Stage::Eval => "eval",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

/// A failure tagged with the stage that produced it.
#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        self.error.exit_code()
    }
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    pub output: PathBuf,
    /// Input dataset; `synth` and `stereo` replace it with what they write.
    pub manifest: Option<PathBuf>,
    /// Reference scene for `synth` and `eval`.
    pub scene: Option<String>,
    /// Input map when `integrate` is not part of the run.
    pub snapshot: Option<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOutcome {
    pub frames_written: usize,
    pub integration: IntegrationReport,
    pub report: Option<EvalReport>,
    pub written: Vec<PathBuf>,
}

pub fn run_pipeline(
    stages: &[Stage],
    cfg: &EngineConfig,
    opts: &PipelineOptions,
) -> std::result::Result<PipelineOutcome, StageError> {
    let mut order: Vec<Stage> = stages.to_vec();
    order.sort();
    order.dedup();
    let first = order.first().copied().unwrap_or(Stage::Synth);
    let tag = |stage: Stage| move |error: Error| StageError { stage, error };
    cfg.validate().map_err(tag(first))?;
    std::fs::create_dir_all(&opts.output)
        .map_err(|e| Error::io(&opts.output, e))
        .map_err(tag(first))?;

    let mut run = Run {
        cfg,
        opts,
        manifest: opts.manifest.clone(),
        map: None,
        mesh: None,
        outcome: PipelineOutcome::default(),
    };
    for stage in order {
        let r = match stage {
            Stage::Synth => run.synth(),
            Stage::Stereo => run.stereo(),
            Stage::Integrate => run.integrate(),
            Stage::Mesh => run.mesh(),
            Stage::Voxels => run.voxels(),
            Stage::Eval => run.eval(),
        };
        r.map_err(tag(stage))?;
    }
    Ok(run.outcome)
}

struct Run<'a> {
    cfg: &'a EngineConfig,
    opts: &'a PipelineOptions,
    manifest: Option<PathBuf>,
    map: Option<TsdfMap>,
    mesh: Option<TriangleMesh>,
    outcome: PipelineOutcome,
}

fn frame_name(i: usize) -> String {
    format!("{i:06}.pfm")
}

fn make_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

impl Run<'_> {
    fn out(&self, name: &str) -> PathBuf {
        self.opts.output.join(name)
    }

    fn written(&mut self, p: PathBuf) {
        self.outcome.written.push(p);
    }

    fn scene(&self) -> Result<NamedScene> {
        let name = self
            .opts
            .scene
            .as_deref()
            .ok_or_else(|| Error::Config("a scene name is required".into()))?;
        reference_scene(name, self.cfg.pool_scale)
    }

    fn dataset(&self) -> Result<Dataset> {
        let path = self
            .manifest
            .as_ref()
            .ok_or_else(|| Error::Config("a dataset manifest is required".into()))?;
        Dataset::load(path)
    }

    fn write_dataset(
        &mut self,
        dir: &Path,
        manifest: &DatasetManifest,
        poses: &[(f64, crate::geometry::Pose)],
    ) -> Result<()> {
        write_pose_file(&dir.join(POSE_FILE), poses)?;
        let mpath = dir.join(MANIFEST_FILE);
        std::fs::write(&mpath, manifest.to_json()).map_err(|e| Error::io(&mpath, e))?;
        self.written(dir.join(POSE_FILE));
        self.written(mpath.clone());
        self.manifest = Some(mpath);
        Ok(())
    }

    fn synth(&mut self) -> Result<()> {
        let named = self.scene()?;
        let poses = named.trajectory.sample()?;
        let dir = self.opts.output.clone();
        make_dir(&dir.join("depth"))?;
        make_dir(&dir.join("conf"))?;
        let mut frames = Vec::with_capacity(poses.len());
        for (i, (t, pose)) in poses.iter().enumerate() {
            let noise = DepthNoise {
                sigma_coeff: self.cfg.noise_sigma_coeff,
                seed: self.cfg.seed.wrapping_add(i as u64),
            };
            let (depth, conf) = render_frame(&named.scene, pose, &named.intrinsics, Some(noise))?;
            let (d, c) = (
                PathBuf::from("depth").join(frame_name(i)),
                PathBuf::from("conf").join(frame_name(i)),
            );
            write_pfm(&depth, &dir.join(&d))?;
            write_pfm(&conf, &dir.join(&c))?;
            frames.push(FrameEntry::with_depth(*t, d, c));
        }
        let manifest = DatasetManifest {
            version: MANIFEST_VERSION,
            intrinsics: named.intrinsics,
            pose_file: POSE_FILE.into(),
            confidence_prenormalized: true,
            frames,
        };
        self.outcome.frames_written = poses.len();
        self.write_dataset(&dir, &manifest, &poses)
    }

    fn stereo(&mut self) -> Result<()> {
        let ds = self.dataset()?;
        let poses = ds.frame_poses(self.cfg.pose_time_tolerance)?;
        let dir = self.out(STEREO_DIR);
        make_dir(&dir.join("depth"))?;
        make_dir(&dir.join("conf"))?;
        let mut frames = Vec::with_capacity(ds.manifest.frames.len());
        for (i, f) in ds.manifest.frames.iter().enumerate() {
            let (depth, conf) = load_frame(&ds, i, self.cfg)?;
            let (d, c) = (
                PathBuf::from("depth").join(frame_name(i)),
                PathBuf::from("conf").join(frame_name(i)),
            );
            write_pfm(&depth, &dir.join(&d))?;
            write_pfm(&conf, &dir.join(&c))?;
            frames.push(FrameEntry::with_depth(f.timestamp, d, c));
        }
        let timed: Vec<_> = frames.iter().map(|f| f.timestamp).zip(poses).collect();
        let manifest = DatasetManifest {
            version: MANIFEST_VERSION,
            intrinsics: ds.manifest.intrinsics,
            pose_file: POSE_FILE.into(),
            confidence_prenormalized: true,
            frames,
        };
        self.outcome.frames_written = timed.len();
        self.write_dataset(&dir, &manifest, &timed)
    }

    fn integrate(&mut self) -> Result<()> {
        let ds = self.dataset()?;
        let poses = ds.frame_poses(self.cfg.pose_time_tolerance)?;
        let mut map = TsdfMap::new(self.cfg.map_params())?;
        let icfg = self.cfg.integration();
        for (i, pose) in poses.iter().enumerate() {
            let (depth, conf) = load_frame(&ds, i, self.cfg)?;
            let r = integrate_depth_frame(&mut map, &depth, &conf, pose, &ds.manifest.intrinsics, &icfg)?;
            self.outcome.integration.merge(&r);
        }
        map.check_invariants()?;
        let path = self.out(SNAPSHOT_FILE);
        save_snapshot(&map, &path)?;
        self.written(path);
        self.map = Some(map);
        Ok(())
    }

    fn ensure_map(&mut self) -> Result<&TsdfMap> {
        if self.map.is_none() {
            let path = self.opts.snapshot.clone().unwrap_or_else(|| self.out(SNAPSHOT_FILE));
            if !path.is_file() {
                return Err(Error::Config(format!(
                    "no map: run integrate or pass a snapshot ({} not found)",
                    path.display()
                )));
            }
            self.map = Some(load_snapshot(&path)?);
        }
        Ok(self.map.as_ref().expect("map loaded"))
    }

    fn ensure_mesh(&mut self) -> Result<&TriangleMesh> {
        if self.mesh.is_none() {
            let min = self.cfg.omega_mesh_min;
            let mesh = marching_cubes(self.ensure_map()?, min);
            mesh.validate()?;
            self.mesh = Some(mesh);
        }
        Ok(self.mesh.as_ref().expect("mesh built"))
    }

    fn mesh(&mut self) -> Result<()> {
        let path = self.out(MESH_FILE);
        export_ply(self.ensure_mesh()?, &path)?;
        self.written(path);
        Ok(())
    }

    fn voxels(&mut self) -> Result<()> {
        let min = self.cfg.omega_vis_min;
        let cloud = export_voxel_cloud(self.ensure_map()?, min);
        let path = self.out(VOXELS_FILE);
        export_voxel_cloud_ply(&cloud, &path)?;
        self.written(path);
        Ok(())
    }

    fn eval(&mut self) -> Result<()> {
        let named = self.scene()?;
        let surface = Some(surface_error(self.ensure_mesh()?, &named.scene)?);
        let map = self.ensure_map()?;
        let band = map.voxel_size();
        let regions = named
            .regions
            .iter()
            .map(|r| region_weight_stats(map, &r.label, &r.bounds, band))
            .collect::<Result<Vec<_>>>()?;
        let report = EvalReport { surface, regions };
        let (json, text) = (self.out(REPORT_JSON), self.out(REPORT_TEXT));
        std::fs::write(&json, report.to_json()).map_err(|e| Error::io(&json, e))?;
        std::fs::write(&text, report.to_key_value()).map_err(|e| Error::io(&text, e))?;
        self.written(json);
        self.written(text);
        self.outcome.report = Some(report);
        Ok(())
    }
}

fn read_checked(ds: &Dataset, p: &Path) -> Result<ScalarImage> {
    let img = read_pfm(&ds.resolve(p))?;
    let k = &ds.manifest.intrinsics;
    if img.width() != k.width || img.height() != k.height {
        return Err(Error::Data(format!(
            "{} is {}x{}, intrinsics say {}x{}",
            p.display(),
            img.width(),
            img.height(),
            k.width,
            k.height
        )));
    }
    Ok(img)
}

/// Depth and normalized confidence for frame `i`.
///
/// Depth comes from the depth map, else from the disparity map, else from
/// block matching the stereo pair. Confidence comes from the confidence map,
/// else from the stereo pair.
pub fn load_frame(ds: &Dataset, i: usize, cfg: &EngineConfig) -> Result<(ScalarImage, ScalarImage)> {
    let f = &ds.manifest.frames[i];
    let intr = &ds.manifest.intrinsics;
    let pair = match (&f.left, &f.right) {
        (Some(l), Some(r)) => Some((read_checked(ds, l)?, read_checked(ds, r)?)),
        _ => None,
    };
    let mut matched_conf = None;
    let mut disparity = None;
    let depth = if let Some(d) = &f.depth {
        read_checked(ds, d)?
    } else if let Some(d) = &f.disparity {
        let disp = read_checked(ds, d)?;
        let depth = disparity_to_depth(&disp, intr);
        disparity = Some(disp);
        depth
    } else {
        let (l, r) = pair.as_ref().expect("validated manifest has a stereo pair");
        let (disp, conf) = block_match(l, r, intr, cfg.max_disparity, cfg.patch_radius)?;
        matched_conf = Some(conf);
        disparity_to_depth(&disp, intr)
    };
    let conf = if let Some(c) = &f.confidence {
        let raw = read_checked(ds, c)?;
        if ds.manifest.confidence_prenormalized {
            raw
        } else {
            raw.map_valid(|v| Some(similarity_to_confidence(v)))
        }
    } else if let Some(c) = matched_conf {
        c
    } else if let (Some((l, r)), Some(disp)) = (&pair, &disparity) {
        disparity_confidence(l, r, disp, cfg.patch_radius)?
    } else {
        return Err(Error::Data(format!(
            "frame at t={} has no confidence map and no stereo pair to compute one",
            f.timestamp
        )));
    };
    Ok((depth, conf))
}
