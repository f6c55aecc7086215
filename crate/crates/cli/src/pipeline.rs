//! The fixed stage graph: read, voxel, floor removal, transform, map filter,
//! clustering, box fitting, map update.

use std::path::{Path, PathBuf};
use std::time::Instant;

use obsdet_core::cluster::{euclidean_cluster, fit_obb, ClusterParams, ObbParams};
use obsdet_core::mapping::mark_detections;
use obsdet_core::pcio::{read_map_file, read_pcd, DetectionRecord};
use obsdet_core::preprocess::{
    filter_by_map, fit_floor_ransac, remove_floor, voxel_downsample, OutOfBoundsPolicy, RansacParams, VoxelParams,
};
use obsdet_core::{transform_cloud, Detection, OccupancyGrid, PointCloud, RigidTransform};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};

/// Per-stage wall time of one frame, microseconds. Disabled stages read 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FrameTiming {
    pub load: u64,
    pub voxel: u64,
    pub ransac: u64,
    pub transform: u64,
    pub map_filter: u64,
    pub cluster: u64,
    pub obb: u64,
    pub map_update: u64,
    pub total: u64,
}

impl FrameTiming {
    pub const STAGES: [&'static str; 9] =
        ["load", "voxel", "ransac", "transform", "map_filter", "cluster", "obb", "map_update", "total"];

    pub fn values(&self) -> [u64; 9] {
        [
            self.load,
            self.voxel,
            self.ransac,
            self.transform,
            self.map_filter,
            self.cluster,
            self.obb,
            self.map_update,
            self.total,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct FrameOutput {
    pub stamp: u64,
    pub input_points: usize,
    /// Points left after filtration, in the map frame.
    pub obstacles: PointCloud,
    pub detections: Vec<Detection>,
    pub timing: FrameTiming,
}

impl FrameOutput {
    pub fn records(&self) -> Vec<DetectionRecord> {
        self.detections.iter().map(|d| DetectionRecord::new(d, self.stamp)).collect()
    }
}

/// Stage parameters plus the working map. Holds no other state between
/// frames.
#[derive(Debug, Clone)]
pub struct Pipeline {
    voxel: VoxelParams,
    ransac: Option<RansacParams>,
    cluster: ClusterParams,
    obb: ObbParams,
    transform: RigidTransform,
    map_filter: bool,
    policy: OutOfBoundsPolicy,
    stateless: bool,
    map: Option<OccupancyGrid>,
}

impl Pipeline {
    /// `map` is the working map. Without one, map filtration and map updates
    /// are skipped.
    pub fn new(config: &PipelineConfig, map: Option<OccupancyGrid>) -> Result<Self> {
        config.validate()?;
        let transform = config.transform()?;
        let map = map.map(|g| g.with_frame_id(transform.parent_frame()));
        Ok(Pipeline {
            voxel: config.voxel_params(),
            ransac: config.floor_removal_enabled.then(|| config.ransac_params()),
            cluster: config.cluster_params(),
            obb: config.obb_params(),
            transform,
            map_filter: config.map_filter_enabled,
            policy: config.out_of_bounds_policy(),
            stateless: config.stateless,
            map,
        })
    }

    pub fn map(&self) -> Option<&OccupancyGrid> {
        self.map.as_ref()
    }

    pub fn into_map(self) -> Option<OccupancyGrid> {
        self.map
    }

    /// Runs one frame given the raw PCD bytes.
    pub fn process_bytes(&mut self, bytes: &[u8]) -> Result<FrameOutput> {
        let start = Instant::now();
        let cloud = read_pcd(bytes)?;
        let mut timing = FrameTiming { load: micros(start), ..Default::default() };
        let out = self.process_cloud(cloud, &mut timing)?;
        timing.total = micros(start);
        Ok(FrameOutput { timing, ..out })
    }

    fn process_cloud(&mut self, cloud: PointCloud, timing: &mut FrameTiming) -> Result<FrameOutput> {
        let input_points = cloud.len();
        let stamp = cloud.stamp();

        let t = Instant::now();
        let mut cloud = voxel_downsample(&cloud, &self.voxel)?;
        timing.voxel = micros(t);

        if let Some(params) = &self.ransac {
            let t = Instant::now();
            // an empty frame has no floor to remove
            if !cloud.is_empty() {
                let fit = fit_floor_ransac(&cloud, params)?;
                cloud = remove_floor(&cloud, &fit.plane, params.distance_threshold)?;
            }
            timing.ransac = micros(t);
        }

        let t = Instant::now();
        let mut cloud = transform_cloud(&cloud, &self.transform)?;
        timing.transform = micros(t);

        if let (true, Some(map)) = (self.map_filter, &self.map) {
            let t = Instant::now();
            cloud = filter_by_map(&cloud, map, self.policy)?;
            timing.map_filter = micros(t);
        }

        let t = Instant::now();
        let clusters = euclidean_cluster(&cloud, &self.cluster)?;
        timing.cluster = micros(t);

        let t = Instant::now();
        let detections = clusters
            .iter()
            .enumerate()
            .map(|(id, members)| Ok(fit_obb(&cloud, members, &self.obb)?.with_cluster_id(id)))
            .collect::<Result<Vec<_>>>()?;
        timing.obb = micros(t);

        if !self.stateless {
            if let Some(map) = &self.map {
                let t = Instant::now();
                self.map = Some(mark_detections(map, &detections));
                timing.map_update = micros(t);
            }
        }

        Ok(FrameOutput { stamp, input_points, obstacles: cloud, detections, timing: FrameTiming::default() })
    }
}

fn micros(since: Instant) -> u64 {
    since.elapsed().as_micros() as u64
}

#[derive(Debug)]
pub struct SkippedFrame {
    pub path: PathBuf,
    pub error: CliError,
}

#[derive(Debug, Default)]
pub struct RunOutput {
    /// Processed frames in input order, with their source paths.
    pub frames: Vec<(PathBuf, FrameOutput)>,
    pub skipped: Vec<SkippedFrame>,
    pub map: Option<OccupancyGrid>,
}

impl RunOutput {
    pub fn records(&self) -> Vec<DetectionRecord> {
        self.frames.iter().flat_map(|(_, f)| f.records()).collect()
    }
}

/// Loads the map named by the config, if any.
pub fn load_config_map(config: &PipelineConfig) -> Result<Option<OccupancyGrid>> {
    config.map_metadata_path.as_deref().map(load_map).transpose()
}

pub fn load_map(path: &Path) -> Result<OccupancyGrid> {
    Ok(read_map_file(path)?.1)
}

/// Processes `frames` in order. Unreadable or failing frames are logged and
/// skipped.
pub fn run_pipeline(config: &PipelineConfig, map: Option<OccupancyGrid>, frames: &[PathBuf]) -> Result<RunOutput> {
    let mut pipeline = Pipeline::new(config, map)?;
    let mut out = RunOutput::default();
    for path in frames {
        let result = std::fs::read(path)
            .map_err(|e| CliError::io(path, e))
            .and_then(|bytes| pipeline.process_bytes(&bytes));
        match result {
            Ok(frame) => out.frames.push((path.clone(), frame)),
            Err(error) => {
                log::warn!("skipping {}: {error}", path.display());
                out.skipped.push(SkippedFrame { path: path.clone(), error });
            }
        }
    }
    out.map = pipeline.into_map();
    Ok(out)
}
