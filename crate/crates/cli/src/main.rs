use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use conftsdf::config::EngineConfig;
use conftsdf::pipeline::{run_pipeline, PipelineOptions, Stage};
use conftsdf::scene::PoolScale;
use conftsdf::tsdf::{UpdateMode, WeightMode};
use conftsdf::Error;

const THREADS_ENV: &str = "CONFTSDF_THREADS";

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StageArg {
    Synth,
    Stereo,
    Integrate,
    Mesh,
    Voxels,
    Eval,
}

impl From<StageArg> for Stage {
    fn from(s: StageArg) -> Self {
        match s {
            StageArg::Synth => Stage::Synth,
            StageArg::Stereo => Stage::Stereo,
            StageArg::Integrate => Stage::Integrate,
            StageArg::Mesh => Stage::Mesh,
            StageArg::Voxels => Stage::Voxels,
            StageArg::Eval => Stage::Eval,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Accumulate,
    Average,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WeightArg {
    Const,
    Quad,
    Conf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PoolArg {
    Full,
    Reduced,
}

/// Confidence-weighted TSDF mapping: synthesize or ingest posed depth and
/// confidence frames, fuse them into a voxel map, and export meshes,
/// voxel clouds and evaluation reports.
///
/// Stages run in pipeline order: synth, stereo, integrate, mesh, voxels, eval.
#[derive(Debug, Parser)]
#[command(name = "conftsdf", version)]
struct Cli {
    /// Stages to run.
    #[arg(value_enum, required = true)]
    stages: Vec<StageArg>,

    /// Engine configuration (JSON). Flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Dataset manifest (JSON) for stereo and integrate.
    #[arg(long)]
    manifest: Option<PathBuf>,

    /// Output directory.
    #[arg(long, default_value = "out")]
    output: PathBuf,

    /// Reference scene for synth and eval: pool, two_walls, sphere_room.
    #[arg(long)]
    scene: Option<String>,

    /// Map snapshot for mesh, voxels and eval when not integrating.
    #[arg(long)]
    snapshot: Option<PathBuf>,

    #[arg(long, value_enum)]
    mode: Option<ModeArg>,

    #[arg(long, value_enum)]
    weight: Option<WeightArg>,

    /// Voxel edge length in meters.
    #[arg(long)]
    voxel_size: Option<f64>,

    /// Minimum confidence for a depth pixel to be integrated.
    #[arg(long)]
    c_min: Option<f64>,

    /// Weight cap.
    #[arg(long)]
    omega_max: Option<f64>,

    /// Seed for synthetic depth noise.
    #[arg(long)]
    seed: Option<u64>,

    /// Depth noise coefficient: sigma = coeff * z^2.
    #[arg(long)]
    noise: Option<f64>,

    #[arg(long, value_enum)]
    pool_scale: Option<PoolArg>,
}

impl Cli {
    fn engine_config(&self) -> conftsdf::Result<EngineConfig> {
        let mut cfg = match &self.config {
            Some(p) => EngineConfig::load(p)?,
            None => EngineConfig::default(),
        };
        if let Some(m) = self.mode {
            cfg.update_mode = match m {
                ModeArg::Accumulate => UpdateMode::Accumulate,
                ModeArg::Average => UpdateMode::Average,
            };
        }
        if let Some(w) = self.weight {
            cfg.weight_mode = match w {
                WeightArg::Const => WeightMode::Constant,
                WeightArg::Quad => WeightMode::Quadratic,
                WeightArg::Conf => WeightMode::Confidence,
            };
        }
        if let Some(p) = self.pool_scale {
            cfg.pool_scale = match p {
                PoolArg::Full => PoolScale::Full,
                PoolArg::Reduced => PoolScale::Reduced,
            };
        }
        cfg.voxel_size = self.voxel_size.unwrap_or(cfg.voxel_size);
        cfg.c_min = self.c_min.unwrap_or(cfg.c_min);
        cfg.omega_max = self.omega_max.or(cfg.omega_max);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.noise_sigma_coeff = self.noise.unwrap_or(cfg.noise_sigma_coeff);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn init_threads() -> conftsdf::Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV}={v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match init_threads().and_then(|_| cli.engine_config()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("conftsdf: config: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let stages: Vec<Stage> = cli.stages.iter().map(|&s| s.into()).collect();
    let opts = PipelineOptions {
        output: cli.output.clone(),
        manifest: cli.manifest.clone(),
        scene: cli.scene.clone(),
        snapshot: cli.snapshot.clone(),
    };
    match run_pipeline(&stages, &cfg, &opts) {
        Ok(outcome) => {
            for p in &outcome.written {
                println!("wrote {}", p.display());
            }
            if let Some(r) = &outcome.report {
                print!("{}", r.to_key_value());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("conftsdf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
