use std::path::{Path, PathBuf};

use conftsdf::config::EngineConfig;
use conftsdf::dataset::{write_pose_file, Dataset, DatasetManifest, FrameEntry, MANIFEST_VERSION};
use conftsdf::geometry::{CameraIntrinsics, Pose};
use conftsdf::image::ScalarImage;
use conftsdf::mesh::import_ply;
use conftsdf::pfm::{read_pfm, write_pfm};
use conftsdf::pipeline::{run_pipeline, PipelineOptions, Stage, MANIFEST_FILE, SNAPSHOT_FILE};
use conftsdf::tsdf::load_snapshot;
use conftsdf::Error;

fn opts(dir: &Path) -> PipelineOptions {
    PipelineOptions {
        output: dir.to_path_buf(),
        ..PipelineOptions::default()
    }
}

fn write_manifest(dir: &Path, manifest: &DatasetManifest, poses: &[(f64, Pose)]) -> PathBuf {
    write_pose_file(&dir.join(&manifest.pose_file), poses).unwrap();
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, manifest.to_json()).unwrap();
    path
}

fn small_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(40.0, 40.0, 23.5, 15.5, 48, 32, 0.1).unwrap()
}

#[test]
fn synth_output_feeds_integrate_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = EngineConfig {
        c_min: 0.3,
        ..EngineConfig::default()
    };
    let o = PipelineOptions {
        scene: Some("two_walls".into()),
        ..opts(dir.path())
    };
    let out = run_pipeline(&[Stage::Synth], &cfg, &o).unwrap();
    assert_eq!(out.frames_written, 21);

    let ds = Dataset::load(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(ds.manifest.frames.len(), 21);
    assert_eq!(ds.frame_poses(cfg.pose_time_tolerance).unwrap().len(), 21);

    // a second invocation picks the dataset up from disk
    let o = PipelineOptions {
        manifest: Some(dir.path().join(MANIFEST_FILE)),
        ..o
    };
    let out = run_pipeline(&[Stage::Eval, Stage::Integrate], &cfg, &o).unwrap();
    let report = out.report.unwrap();
    let (a, b) = (report.region("wall_a").unwrap(), report.region("wall_b").unwrap());
    assert!(a.mean_omega > b.mean_omega + 0.4, "{a:?} {b:?}");
    let map = load_snapshot(&dir.path().join(SNAPSHOT_FILE)).unwrap();
    assert!(!map.is_empty());
    assert!(dir.path().join("report.json").is_file());
    assert!(dir.path().join("report.txt").is_file());
}

#[test]
fn zero_frames_give_empty_map_and_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        intrinsics: small_intrinsics(),
        pose_file: "poses.txt".into(),
        confidence_prenormalized: true,
        frames: Vec::new(),
    };
    let m = write_manifest(dir.path(), &manifest, &[]);
    let o = PipelineOptions {
        manifest: Some(m),
        ..opts(dir.path())
    };
    let out = run_pipeline(&[Stage::Integrate, Stage::Mesh, Stage::Voxels], &EngineConfig::default(), &o).unwrap();
    assert_eq!(out.integration.points_integrated, 0);
    assert!(load_snapshot(&dir.path().join(SNAPSHOT_FILE)).unwrap().is_empty());
    let mesh = import_ply(&dir.path().join("mesh.ply")).unwrap();
    assert!(mesh.is_empty() && mesh.triangles.is_empty());
}

#[test]
fn mesh_stage_reads_a_given_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = EngineConfig::default();
    let o = PipelineOptions {
        scene: Some("sphere_room".into()),
        ..opts(dir.path())
    };
    run_pipeline(&[Stage::Synth, Stage::Integrate], &cfg, &o).unwrap();
    let other = tempfile::tempdir().unwrap();
    let o = PipelineOptions {
        snapshot: Some(dir.path().join(SNAPSHOT_FILE)),
        ..opts(other.path())
    };
    run_pipeline(&[Stage::Mesh], &cfg, &o).unwrap();
    let mesh = import_ply(&other.path().join("mesh.ply")).unwrap();
    assert!(mesh.triangles.len() > 100);
}

fn hash_texture(w: usize, h: usize, shift: usize) -> ScalarImage {
    let mut img = ScalarImage::invalid(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut s = ((x + shift) as u64 ^ ((y as u64) << 32)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            s ^= s >> 29;
            img.set(x, y, (s >> 40) as f64 / (1u64 << 24) as f64);
        }
    }
    img
}

#[test]
fn stereo_stage_turns_pairs_into_depth() {
    let dir = tempfile::tempdir().unwrap();
    let k = small_intrinsics();
    write_pfm(&hash_texture(48, 32, 0), &dir.path().join("left.pfm")).unwrap();
    write_pfm(&hash_texture(48, 32, 4), &dir.path().join("right.pfm")).unwrap();
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        intrinsics: k,
        pose_file: "poses.txt".into(),
        confidence_prenormalized: true,
        frames: vec![FrameEntry {
            timestamp: 0.0,
            depth: None,
            confidence: None,
            disparity: None,
            left: Some("left.pfm".into()),
            right: Some("right.pfm".into()),
        }],
    };
    let m = write_manifest(dir.path(), &manifest, &[(0.0, Pose::IDENTITY)]);
    let cfg = EngineConfig {
        max_disparity: 8,
        ..EngineConfig::default()
    };
    let o = PipelineOptions {
        manifest: Some(m),
        ..opts(dir.path())
    };
    run_pipeline(&[Stage::Stereo, Stage::Integrate], &cfg, &o).unwrap();
    let depth = read_pfm(&dir.path().join("stereo/depth/000000.pfm")).unwrap();
    let want = k.alpha_x * k.baseline / 4.0;
    assert_eq!(depth.get(24, 16).map(|z| z as f32), Some(want as f32));
    let conf = read_pfm(&dir.path().join("stereo/conf/000000.pfm")).unwrap();
    assert!((conf.get(24, 16).unwrap() - 1.0).abs() < 1e-6);
    assert!(!load_snapshot(&dir.path().join(SNAPSHOT_FILE)).unwrap().is_empty());
}

#[test]
fn missing_inputs_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = EngineConfig::default();
    let e = run_pipeline(&[Stage::Integrate], &cfg, &opts(dir.path())).unwrap_err();
    assert_eq!(e.stage, Stage::Integrate);
    assert!(matches!(e.error, Error::Config(_)));
    assert_eq!(e.exit_code(), 2);
    let e = run_pipeline(&[Stage::Mesh], &cfg, &opts(dir.path())).unwrap_err();
    assert!(matches!(e.error, Error::Config(_)));
    let o = PipelineOptions {
        scene: Some("atrium".into()),
        ..opts(dir.path())
    };
    assert!(run_pipeline(&[Stage::Synth], &cfg, &o).is_err());
}

#[test]
fn corrupt_frame_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("d.pfm"), b"PF\n1 1\n-1.0\n\0\0\0\0\0\0\0\0\0\0\0\0").unwrap();
    std::fs::write(dir.path().join("c.pfm"), b"Pf\n1 1\n-1.0\n\0\0\0\0").unwrap();
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        intrinsics: small_intrinsics(),
        pose_file: "poses.txt".into(),
        confidence_prenormalized: true,
        frames: vec![FrameEntry::with_depth(0.0, "d.pfm".into(), "c.pfm".into())],
    };
    let m = write_manifest(dir.path(), &manifest, &[(0.0, Pose::IDENTITY)]);
    let o = PipelineOptions {
        manifest: Some(m),
        ..opts(dir.path())
    };
    let e = run_pipeline(&[Stage::Integrate], &EngineConfig::default(), &o).unwrap_err();
    assert!(matches!(e.error, Error::Format(_)), "{e}");
    assert_eq!(e.exit_code(), 3);
}
