//! Repeated replay of a frame set with per-stage latency statistics.

use std::path::{Path, PathBuf};

use obsdet_core::pcio::{write_detections, DetectionRecord};
use obsdet_core::OccupancyGrid;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::pipeline::{FrameTiming, Pipeline};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageStats {
    pub stage: String,
    pub samples: usize,
    pub mean_us: f64,
    pub median_us: f64,
    pub p95_us: f64,
    pub max_us: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub frames: usize,
    pub repetitions: usize,
    pub skipped_frames: usize,
    pub mean_points_per_frame: f64,
    /// Every repetition produced the same detection bytes as the first.
    pub deterministic: bool,
    pub stages: Vec<StageStats>,
    #[serde(skip)]
    pub samples: Vec<FrameTiming>,
}

impl BenchReport {
    pub fn stage(&self, name: &str) -> Option<&StageStats> {
        self.stages.iter().find(|s| s.stage == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per stage.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for s in &self.stages {
            w.serialize(s).expect("in-memory csv write");
        }
        w.into_inner().expect("in-memory csv flush")
    }
}

/// Replays `frames` `repetitions` times, each time from `map` as the
/// starting map. Frame files are read once up front; timings cover parsing
/// onwards.
pub fn bench(
    config: &PipelineConfig,
    map: Option<OccupancyGrid>,
    frames: &[PathBuf],
    repetitions: usize,
) -> Result<BenchReport> {
    if repetitions == 0 {
        return Err(CliError::Config("repetitions must be at least 1".into()));
    }
    let loaded: Vec<(&Path, Vec<u8>)> = frames
        .iter()
        .map(|p| Ok((p.as_path(), std::fs::read(p).map_err(|e| CliError::io(p, e))?)))
        .collect::<Result<_>>()?;
    let template = Pipeline::new(config, map)?;

    let mut samples = Vec::with_capacity(repetitions * frames.len());
    let mut points = 0usize;
    let mut reference: Option<Vec<u8>> = None;
    let mut deterministic = true;
    let mut skipped = 0;
    for _ in 0..repetitions {
        let mut pipeline = template.clone();
        let mut records: Vec<DetectionRecord> = Vec::new();
        for (path, bytes) in &loaded {
            match pipeline.process_bytes(bytes) {
                Ok(out) => {
                    points += out.input_points;
                    samples.push(out.timing);
                    records.extend(out.records());
                }
                Err(e) => {
                    log::warn!("skipping {}: {e}", path.display());
                    skipped += 1;
                }
            }
        }
        let bytes = write_detections(&records);
        match &reference {
            None => reference = Some(bytes),
            Some(first) => deterministic &= *first == bytes,
        }
    }

    let stages = FrameTiming::STAGES
        .iter()
        .enumerate()
        .map(|(i, name)| stage_stats(name, samples.iter().map(|t| t.values()[i]).collect()))
        .collect();
    Ok(BenchReport {
        frames: frames.len(),
        repetitions,
        skipped_frames: skipped,
        mean_points_per_frame: if samples.is_empty() { 0.0 } else { points as f64 / samples.len() as f64 },
        deterministic,
        stages,
        samples,
    })
}

fn stage_stats(name: &str, mut values: Vec<u64>) -> StageStats {
    values.sort_unstable();
    let n = values.len();
    let mean = if n == 0 { 0.0 } else { values.iter().sum::<u64>() as f64 / n as f64 };
    StageStats {
        stage: name.to_string(),
        samples: n,
        mean_us: mean,
        median_us: median(&values),
        p95_us: nearest_rank(&values, 0.95),
        max_us: values.last().copied().unwrap_or(0),
    }
}

/// Median of sorted values; mean of the middle pair for even counts.
pub fn median(sorted: &[u64]) -> f64 {
    let n = sorted.len();
    match n {
        0 => 0.0,
        _ if n % 2 == 1 => sorted[n / 2] as f64,
        _ => (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0,
    }
}

/// Nearest-rank percentile of sorted values, `q` in `(0, 1]`.
pub fn nearest_rank(sorted: &[u64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1] as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentiles() {
        assert_eq!(median(&[]), 0.0);
        assert_eq!(median(&[3]), 3.0);
        assert_eq!(median(&[1, 2, 3, 10]), 2.5);
        let v: Vec<u64> = (1..=100).collect();
        assert_eq!(nearest_rank(&v, 0.95), 95.0);
        assert_eq!(nearest_rank(&[7], 0.95), 7.0);
    }

    #[test]
    fn zero_repetitions_rejected() {
        assert!(bench(&PipelineConfig::default(), None, &[], 0).is_err());
    }
}
