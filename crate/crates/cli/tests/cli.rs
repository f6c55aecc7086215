use std::path::{Path, PathBuf};
use std::process::Command;

use obsdet::pipeline::{load_config_map, run_pipeline};
use obsdet::scene::{gen_scene, write_scene, BoxSpec, SceneSpec};
use obsdet::PipelineConfig;
use obsdet_core::pcio::{read_detections, write_pcd, DataMode};
use obsdet_core::{Point3, PointCloud};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_obsdet"))
}

fn small_spec() -> SceneSpec {
    SceneSpec { points_per_frame: 8000, frames: 3, ..Default::default() }
}

fn scene_dir(spec: &SceneSpec) -> (tempfile::TempDir, Vec<PathBuf>) {
    let dir = tempfile::tempdir().unwrap();
    let scene = gen_scene(spec).unwrap();
    let frames = write_scene(&scene, spec, dir.path()).unwrap();
    (dir, frames)
}

fn load_config(dir: &Path) -> PipelineConfig {
    PipelineConfig::load(&dir.join("config.toml")).unwrap()
}

#[test]
fn run_writes_outputs_and_exits_zero() {
    let (dir, _) = scene_dir(&small_spec());
    let out = dir.path().join("out");
    let status = bin()
        .args(["run", "--config"])
        .arg(dir.path().join("config.toml"))
        .arg("--frames")
        .arg(dir.path().join("*.pcd"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let records = read_detections(&std::fs::read(out.join("detections.ndjson")).unwrap()).unwrap();
    assert!(!records.is_empty());
    assert!(out.join("map.yaml").exists() && out.join("map.pgm").exists());
    let csv = std::fs::read_to_string(out.join("timings.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn skipped_frame_exits_two() {
    let (dir, _) = scene_dir(&SceneSpec { frames: 1, ..small_spec() });
    std::fs::write(dir.path().join("frame_0001.pcd"), b"VERSION 0.7\nFIELDS x y z\n").unwrap();
    let status = bin()
        .args(["run", "--config"])
        .arg(dir.path().join("config.toml"))
        .arg("--frames")
        .arg(dir.path().join("*.pcd"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn fatal_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = bin().args(["run", "--config", "/nonexistent/config.toml", "--frames", "*.pcd"]).status().unwrap();
    assert_eq!(missing.code(), Some(1));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[cluster]\ntolerance = -1.0\n").unwrap();
    let status = bin().args(["run", "--frames", "*.pcd", "--config"]).arg(&bad).status().unwrap();
    assert_eq!(status.code(), Some(1));

    let usage = bin().args(["run", "--reps", "3"]).status().unwrap();
    assert_eq!(usage.code(), Some(1));
}

#[test]
fn gen_scene_then_map_reset() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene");
    let status = bin().args(["gen-scene", "--seed", "3", "--out"]).arg(&scene).status().unwrap();
    assert_eq!(status.code(), Some(0));
    for name in ["frame_0000.pcd", "map.yaml", "map.pgm", "ground_truth.json", "config.toml", "scene.toml"] {
        assert!(scene.join(name).exists(), "{name}");
    }

    let out = dir.path().join("out");
    let run = bin()
        .args(["run", "--config"])
        .arg(scene.join("config.toml"))
        .arg("--frames")
        .arg(scene.join("*.pcd"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(run.code(), Some(0));
    assert_ne!(std::fs::read(out.join("map.pgm")).unwrap(), std::fs::read(scene.join("map.pgm")).unwrap());

    let reset = bin().args(["map-reset", "--map"]).arg(scene.join("map.yaml")).arg("--out").arg(&out).status().unwrap();
    assert_eq!(reset.code(), Some(0));
    assert_eq!(std::fs::read(out.join("map.pgm")).unwrap(), std::fs::read(scene.join("map.pgm")).unwrap());
}

#[test]
fn bench_and_render_commands() {
    let (dir, _) = scene_dir(&SceneSpec { frames: 1, ..small_spec() });
    let out = dir.path().join("out");
    let common = |cmd: &str| {
        let mut c = bin();
        c.arg(cmd)
            .arg("--config")
            .arg(dir.path().join("config.toml"))
            .arg("--frames")
            .arg(dir.path().join("*.pcd"))
            .arg("--out")
            .arg(&out);
        c
    };
    assert_eq!(common("bench").args(["--reps", "3"]).status().unwrap().code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("bench.json")).unwrap()).unwrap();
    assert_eq!(report["repetitions"], 3);
    assert_eq!(report["deterministic"], true);
    assert_eq!(report["stages"].as_array().unwrap().len(), 9);

    assert_eq!(common("render").args(["--size", "64"]).status().unwrap().code(), Some(0));
    let ppm = std::fs::read(out.join("frame_0000.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n64 64\n255\n"));
}

#[test]
fn zero_frames_leave_map_unchanged() {
    let (dir, _) = scene_dir(&SceneSpec { frames: 1, ..small_spec() });
    let config = load_config(dir.path());
    let map = load_config_map(&config).unwrap();
    let run = run_pipeline(&config, map.clone(), &[]).unwrap();
    assert!(run.frames.is_empty() && run.skipped.is_empty());
    assert_eq!(run.map, map);
}

#[test]
fn floor_only_frame_has_no_detections() {
    let spec = SceneSpec { frames: 1, boxes: vec![], walls: vec![], ..small_spec() };
    let (dir, frames) = scene_dir(&spec);
    let config = load_config(dir.path());
    let run = run_pipeline(&config, load_config_map(&config).unwrap(), &frames).unwrap();
    assert_eq!(run.frames.len(), 1);
    assert!(run.frames[0].1.detections.is_empty());
}

#[test]
fn empty_frame_is_processed_not_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.pcd");
    std::fs::write(&path, write_pcd(&PointCloud::empty("sensor", 0), DataMode::Binary)).unwrap();
    let run = run_pipeline(&PipelineConfig::default(), None, &[path]).unwrap();
    assert!(run.skipped.is_empty());
    assert!(run.frames[0].1.detections.is_empty());
}

#[test]
fn frame_in_wrong_frame_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lidar.pcd");
    let cloud = PointCloud::new(vec![Point3::new(1.0, 0.0, 0.0); 20], "lidar", 0).unwrap();
    std::fs::write(&path, write_pcd(&cloud, DataMode::Binary)).unwrap();
    let config = PipelineConfig { floor_removal_enabled: false, ..Default::default() };
    let run = run_pipeline(&config, None, &[path]).unwrap();
    assert_eq!(run.skipped.len(), 1);
    assert!(matches!(run.skipped[0].error, obsdet::CliError::Core(obsdet_core::Error::FrameMismatch { .. })));
}

#[test]
fn disabling_map_filter_never_reduces_output() {
    for seed in 0..4 {
        let (dir, frames) = scene_dir(&SceneSpec { seed, ..small_spec() });
        let config = PipelineConfig { stateless: true, ..load_config(dir.path()) };
        let map = load_config_map(&config).unwrap();
        let with = run_pipeline(&config, map.clone(), &frames).unwrap();
        let without = run_pipeline(&PipelineConfig { map_filter_enabled: false, ..config }, map, &frames).unwrap();
        for ((_, a), (_, b)) in with.frames.iter().zip(&without.frames) {
            assert!(b.obstacles.len() >= a.obstacles.len());
            assert!(b.detections.len() >= a.detections.len());
        }
    }
}

#[test]
fn stateless_frames_do_not_depend_on_history() {
    let (dir, frames) = scene_dir(&small_spec());
    let config = PipelineConfig { stateless: true, ..load_config(dir.path()) };
    let map = load_config_map(&config).unwrap();
    let all = run_pipeline(&config, map.clone(), &frames).unwrap();
    let last = run_pipeline(&config, map.clone(), &frames[2..]).unwrap();
    assert_eq!(all.frames[2].1.records(), last.frames[0].1.records());
    assert_eq!(all.map, map);
}

#[test]
fn stateful_feedback_suppresses_known_obstacles() {
    let spec = SceneSpec { boxes: vec![BoxSpec { center: [3.0, 0.0], size: [0.6, 0.4, 0.6], yaw: 0.2 }], ..small_spec() };
    let (dir, frames) = scene_dir(&spec);
    let config = load_config(dir.path());
    let run = run_pipeline(&config, load_config_map(&config).unwrap(), &frames).unwrap();
    let first = &run.frames[0].1.detections;
    assert_eq!(first.len(), 1);
    // the box is in the map after frame 0; only boundary slivers of its
    // faces can survive in later frames
    for (_, f) in &run.frames[1..] {
        let survivors: usize = f.detections.iter().map(|d| d.point_count()).sum();
        assert!(survivors * 2 < first[0].point_count(), "{survivors} points survived the map");
    }
}

