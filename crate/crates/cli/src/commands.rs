//! Subcommand definitions and their file outputs.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use obsdet_core::mapping::reset;
use obsdet_core::pcio::{read_map_file, write_detections, write_map_files};
use obsdet_core::OccupancyGrid;

use crate::bench::bench;
use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::pipeline::{load_config_map, load_map, run_pipeline, RunOutput};
use crate::render::{render_topdown, RenderOptions};
use crate::scene::{gen_scene, write_scene, SceneSpec};

#[derive(Debug, Parser)]
#[command(name = "obsdet", version, about = "Obstacle detection over recorded point-cloud frames")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Process frames in order and write detections, timings and the final map.
    Run(PipelineArgs),
    /// Replay frames repeatedly and report per-stage latency.
    Bench {
        #[command(flatten)]
        args: PipelineArgs,
        #[arg(long, default_value_t = 100)]
        reps: usize,
    },
    /// Process frames and draw one top-down PPM per frame.
    Render {
        #[command(flatten)]
        args: PipelineArgs,
        #[arg(long, default_value_t = 800)]
        size: usize,
    },
    /// Write a synthetic scene: frames, map, ground truth and a matching config.
    GenScene {
        /// Scene spec (TOML); built-in default scene when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replace the working map in --out with the baseline given by --map.
    MapReset {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Pipeline config (TOML); defaults apply when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Map YAML, overriding the config's map_metadata_path.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Frame files; matches are processed in sorted order.
    #[arg(long)]
    pub frames: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Do not write detections back into the working map between frames.
    #[arg(long)]
    pub stateless: bool,
}

/// How a command finished, short of a fatal error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    SkippedFrames(usize),
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Ok => 0,
            Outcome::SkippedFrames(_) => 2,
        }
    }

    fn from_skipped(n: usize) -> Self {
        if n == 0 { Outcome::Ok } else { Outcome::SkippedFrames(n) }
    }
}

pub fn execute(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Bench { args, reps } => cmd_bench(&args, reps),
        Command::Render { args, size } => cmd_render(&args, size),
        Command::GenScene { config, seed, out } => cmd_gen_scene(config.as_deref(), seed, &out),
        Command::MapReset { map, out } => cmd_map_reset(&map, &out),
    }
}

/// Sorted paths matching `pattern`.
pub fn expand_frames(pattern: &str) -> Result<Vec<PathBuf>> {
    let paths = glob::glob(pattern).map_err(|e| CliError::Config(format!("bad --frames pattern: {e}")))?;
    let mut out = paths
        .map(|p| p.map_err(|e| CliError::io(e.path(), std::io::Error::other(e.to_string()))))
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    if out.is_empty() {
        log::warn!("--frames {pattern} matched nothing");
    }
    Ok(out)
}

fn setup(args: &PipelineArgs) -> Result<(PipelineConfig, Option<OccupancyGrid>, Vec<PathBuf>)> {
    let mut config = match &args.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    config.stateless |= args.stateless;
    let map = match &args.map {
        Some(path) => Some(load_map(path)?),
        None => load_config_map(&config)?,
    };
    if map.is_none() && config.map_filter_enabled {
        log::info!("no map given; map filtering and map updates are off");
    }
    Ok((config, map, expand_frames(&args.frames)?))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::unwritable(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::unwritable(path, e))
}

/// Per-frame timing table: frame path, stamp, counts, then stage columns.
pub fn timings_csv(run: &RunOutput) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["frame", "stamp", "input_points", "detections"];
    header.extend(crate::pipeline::FrameTiming::STAGES.iter().copied());
    w.write_record(&header).expect("in-memory csv write");
    for (path, f) in &run.frames {
        let mut row = vec![
            path.display().to_string(),
            f.stamp.to_string(),
            f.input_points.to_string(),
            f.detections.len().to_string(),
        ];
        row.extend(f.timing.values().iter().map(|v| v.to_string()));
        w.write_record(&row).expect("in-memory csv write");
    }
    w.into_inner().expect("in-memory csv flush")
}

/// Writes `detections.ndjson`, `timings.csv` and, when there is a working
/// map, `map.yaml`/`map.pgm`.
pub fn write_run_outputs(run: &RunOutput, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    write_file(&dir.join("detections.ndjson"), &write_detections(&run.records()))?;
    write_file(&dir.join("timings.csv"), &timings_csv(run))?;
    if let Some(map) = &run.map {
        write_map_files(map, dir, "map")?;
    }
    Ok(())
}

fn cmd_run(args: &PipelineArgs) -> Result<Outcome> {
    let (config, map, frames) = setup(args)?;
    let run = run_pipeline(&config, map, &frames)?;
    let detections: usize = run.frames.iter().map(|(_, f)| f.detections.len()).sum();
    println!("processed {} frames, skipped {}, {} detections", run.frames.len(), run.skipped.len(), detections);
    if let Some(out) = &args.out {
        write_run_outputs(&run, out)?;
    }
    Ok(Outcome::from_skipped(run.skipped.len()))
}

fn cmd_bench(args: &PipelineArgs, reps: usize) -> Result<Outcome> {
    let (config, map, frames) = setup(args)?;
    let report = bench(&config, map, &frames, reps)?;
    println!(
        "{} frames x {} reps, {:.0} points/frame, deterministic: {}",
        report.frames, report.repetitions, report.mean_points_per_frame, report.deterministic
    );
    println!("{:<12}{:>12}{:>12}{:>12}", "stage", "mean_us", "median_us", "p95_us");
    for s in &report.stages {
        println!("{:<12}{:>12.1}{:>12.1}{:>12.1}", s.stage, s.mean_us, s.median_us, s.p95_us);
    }
    if let Some(out) = &args.out {
        create_dir(out)?;
        write_file(&out.join("bench.json"), report.to_json().as_bytes())?;
        write_file(&out.join("bench.csv"), &report.to_csv())?;
    }
    Ok(Outcome::from_skipped(report.skipped_frames))
}

fn cmd_render(args: &PipelineArgs, size: usize) -> Result<Outcome> {
    let out = args.out.as_deref().ok_or_else(|| CliError::Config("render needs --out".into()))?;
    let (config, map, frames) = setup(args)?;
    create_dir(out)?;
    let mut pipeline = crate::pipeline::Pipeline::new(&config, map)?;
    let options = RenderOptions { width: size, height: size, bounds: None };
    let mut skipped = 0;
    for (i, path) in frames.iter().enumerate() {
        let result = std::fs::read(path)
            .map_err(|e| CliError::io(path, e))
            .and_then(|bytes| pipeline.process_bytes(&bytes));
        match result {
            Ok(frame) => {
                let img = render_topdown(Some(&frame.obstacles), &frame.detections, pipeline.map(), &options);
                img.write_ppm(&out.join(format!("frame_{i:04}.ppm")))?;
            }
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                skipped += 1;
            }
        }
    }
    Ok(Outcome::from_skipped(skipped))
}

fn cmd_gen_scene(spec_path: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<Outcome> {
    let mut spec = match spec_path {
        Some(p) => SceneSpec::load(p)?,
        None => SceneSpec::default(),
    };
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let scene = gen_scene(&spec)?;
    let frames = write_scene(&scene, &spec, out)?;
    println!("wrote {} synthetic frames and {} ground-truth boxes to {}", frames.len(), scene.truth.boxes.len(), out.display());
    Ok(Outcome::Ok)
}

fn cmd_map_reset(baseline: &Path, out: &Path) -> Result<Outcome> {
    let (_, base) = read_map_file(baseline)?;
    let current = out.join("map.yaml");
    let restored = if current.exists() {
        let (_, working) = read_map_file(&current)?;
        reset(&working, &base)?
    } else {
        base
    };
    create_dir(out)?;
    write_map_files(&restored, out, "map")?;
    println!("reset {} from {}", current.display(), baseline.display());
    Ok(Outcome::Ok)
}
