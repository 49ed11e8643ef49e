//! `fruitgauge`: batch commands over capture bundles.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fruitgauge_core::pipeline::{
    cmd_calibrate, cmd_evaluate, cmd_fuse, cmd_measure, cmd_simulate, io, PipelineConfig, PipelineError,
};
use fruitgauge_core::simulate::{lab_scene, FruitShape, LabSceneOptions};

#[derive(Parser)]
#[command(name = "fruitgauge", version, about = "Multi-view RGBD fruit size measurement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve camera-to-world poses from simultaneous board observations.
    Calibrate {
        #[arg(long)]
        poses: PathBuf,
        /// Camera whose frame becomes the world frame.
        #[arg(long, default_value = "middle")]
        anchor: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Measure every detection in a bundle.
    Measure {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        rig: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for records.json and manifest.json; defaults to
        /// the config's `output_dir`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Localize, deduplicate and pick the best view of each fruit.
    Fuse {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        rig: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Score records and fused fruits against ground truth.
    Evaluate {
        #[arg(long)]
        fused: PathBuf,
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report prefix; `.json` and `.txt` are appended.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Render a scene spec into a bundle.
    Simulate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write the built-in twelve-fruit bench as a scene spec.
    Scene {
        #[arg(long, value_enum, default_value_t = Shape::Ellipsoid)]
        shape: Shape,
        /// Depth noise standard deviation at 1 m, in meters.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Cover this fraction range of each bottom-camera view with leaves, e.g. `0.2,0.4`.
        #[arg(long, value_parser = parse_range)]
        bottom_occlusion: Option<(f64, f64)>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Sphere,
    Ellipsoid,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected two comma-separated numbers")?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok((num(lo)?, num(hi)?))
}

fn config(path: Option<PathBuf>) -> Result<PipelineConfig, PipelineError> {
    path.map_or_else(|| Ok(PipelineConfig::default()), |p| PipelineConfig::load(&p))
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Calibrate { poses, anchor, output } => {
            cmd_calibrate(&poses, &anchor, &output)?;
        }
        Command::Measure { bundle, rig, config: cfg, output } => {
            let cfg = config(cfg)?;
            let output = output
                .or_else(|| cfg.output_dir.clone())
                .ok_or_else(|| PipelineError::InvalidConfig("no output directory given".into()))?;
            let (records, _) = cmd_measure(&bundle, rig.as_deref(), &cfg, &output)?;
            println!("{} records, {} rejections", records.records.len(), records.rejections.len());
        }
        Command::Fuse { records, rig, config: cfg, output } => {
            let fused = cmd_fuse(&records, rig.as_deref(), &config(cfg)?, &output)?;
            println!("{} fruits", fused.fruits.len());
        }
        Command::Evaluate { fused, records, truth, config: cfg, output } => {
            let report = cmd_evaluate(&fused, &records, &truth, &config(cfg)?, &output)?;
            print!("{}", fruitgauge_core::evaluation::render_text(&report));
        }
        Command::Simulate { scene, output } => {
            let bundle = cmd_simulate(&scene, &output)?;
            println!("{} cameras, {} fruits", bundle.cameras.len(), bundle.truth.len());
        }
        Command::Scene { shape, noise, bottom_occlusion, seed, output } => {
            let opts = LabSceneOptions {
                shape: match shape {
                    Shape::Sphere => FruitShape::Sphere,
                    Shape::Ellipsoid => FruitShape::Ellipsoid,
                },
                sigma_at_1m: noise,
                bottom_occlusion,
                seed,
            };
            if !(noise >= 0.0) {
                return Err(PipelineError::InvalidInput(format!("noise must be non-negative, got {noise}")));
            }
            if let Some((lo, hi)) = opts.bottom_occlusion {
                if !(0.0..=1.0).contains(&lo) || !(lo..=1.0).contains(&hi) {
                    return Err(PipelineError::InvalidInput(format!("bad occlusion range {lo},{hi}")));
                }
            }
            io::write_json(&output, &lab_scene(&opts))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("FRUITGAUGE_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
