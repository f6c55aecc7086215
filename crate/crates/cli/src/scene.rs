//! Synthetic frames: rays cast from a posed sensor into a floor, boxes and
//! walls. Walls are written into the map as occupied; boxes are not and
//! come back as ground truth.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use obsdet_core::geometry::normalize_quarter_turn;
use obsdet_core::mapping::mark_detections;
use obsdet_core::pcio::{write_map_files, write_pcd, DataMode};
use obsdet_core::{CellState, Detection, GridOrigin, OccupancyGrid, Point3, PointCloud, RigidTransform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{PipelineConfig, TransformSection};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub seed: u64,
    pub frames: usize,
    pub points_per_frame: usize,
    pub fov_deg: f64,
    pub min_range: f64,
    pub max_range: f64,
    /// Standard deviation of the range error, meters.
    pub range_noise: f64,
    pub map_resolution: f64,
    /// Margin by which walls grow when written into the map.
    pub wall_inflation: f64,
    pub sensor: SensorPose,
    pub floor: FloorSpec,
    pub boxes: Vec<BoxSpec>,
    pub walls: Vec<WallSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorPose {
    pub position: [f64; 3],
    pub yaw: f64,
    /// Positive pitch tips the view axis down.
    pub pitch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FloorSpec {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    /// Uniform height jitter of floor returns, `±noise`.
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub center: [f64; 2],
    /// Length along the yaw axis, width, height.
    pub size: [f64; 3],
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSpec {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub height: f64,
    pub thickness: f64,
}

impl Default for SensorPose {
    fn default() -> Self {
        SensorPose { position: [0.0, 0.0, 1.2], yaw: 0.0, pitch: 10f64.to_radians() }
    }
}

impl Default for FloorSpec {
    fn default() -> Self {
        FloorSpec { x_range: [-1.0, 10.0], y_range: [-5.0, 5.0], noise: 0.005 }
    }
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            seed: 7,
            frames: 1,
            points_per_frame: 20_000,
            fov_deg: 70.0,
            min_range: 0.05,
            max_range: 20.0,
            range_noise: 0.003,
            map_resolution: 0.05,
            wall_inflation: 0.1,
            sensor: SensorPose::default(),
            floor: FloorSpec::default(),
            boxes: vec![
                BoxSpec { center: [3.0, -1.0], size: [0.8, 0.5, 0.6], yaw: 0.5 },
                BoxSpec { center: [4.5, 1.2], size: [0.7, 0.45, 0.7], yaw: 0.3 },
                BoxSpec { center: [6.0, -0.2], size: [1.0, 0.4, 0.5], yaw: 1.1 },
            ],
            walls: vec![WallSpec { start: [8.0, -4.0], end: [8.0, 4.0], height: 1.0, thickness: 0.1 }],
        }
    }
}

/// Box as reported in `ground_truth.json`, in the detection convention:
/// yaw in `[0, π/2)`, `extents[0]` along the yaw axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthBox {
    pub center: [f64; 3],
    pub extents: [f64; 3],
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub synthetic: bool,
    pub map_resolution: f64,
    pub boxes: Vec<TruthBox>,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub frames: Vec<PointCloud>,
    pub map: OccupancyGrid,
    pub truth: GroundTruth,
    pub sensor_to_map: RigidTransform,
}

impl SceneSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::InvalidSpec(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::InvalidSpec(m));
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return bad(format!("fov_deg must lie in (0, 180), got {}", self.fov_deg));
        }
        if !(self.min_range >= 0.0 && self.max_range > self.min_range) {
            return bad(format!("need 0 <= min_range < max_range, got {} and {}", self.min_range, self.max_range));
        }
        if !(self.range_noise >= 0.0 && self.floor.noise >= 0.0) {
            return bad("noise levels must be non-negative".into());
        }
        if !(self.map_resolution > 0.0 && self.wall_inflation >= 0.0) {
            return bad("map_resolution must be positive and wall_inflation non-negative".into());
        }
        let [x0, x1] = self.floor.x_range;
        let [y0, y1] = self.floor.y_range;
        if !(x1 > x0 && y1 > y0) {
            return bad("floor ranges must be increasing".into());
        }
        if self.boxes.iter().any(|b| b.size.iter().any(|s| s.is_nan() || *s <= 0.0)) {
            return bad("box sizes must be positive".into());
        }
        if self.walls.iter().any(|w| !(w.height > 0.0 && w.thickness > 0.0) || w.start == w.end) {
            return bad("walls need positive height and thickness and distinct end points".into());
        }
        Ok(())
    }

    pub fn sensor_to_map(&self) -> RigidTransform {
        let s = &self.sensor;
        RigidTransform::from_euler(0.0, s.pitch, s.yaw, s.position, "map", "sensor")
    }
}

/// Yawed solid standing on the floor.
#[derive(Debug, Clone, Copy)]
struct Solid {
    center: [f64; 2],
    half: [f64; 2],
    height: f64,
    cos: f64,
    sin: f64,
}

impl Solid {
    fn new(center: [f64; 2], length: f64, width: f64, height: f64, yaw: f64) -> Self {
        Solid { center, half: [length / 2.0, width / 2.0], height, cos: yaw.cos(), sin: yaw.sin() }
    }

    fn from_wall(w: &WallSpec) -> Self {
        let (dx, dy) = (w.end[0] - w.start[0], w.end[1] - w.start[1]);
        let mid = [(w.start[0] + w.end[0]) / 2.0, (w.start[1] + w.end[1]) / 2.0];
        Solid::new(mid, dx.hypot(dy), w.thickness, w.height, dy.atan2(dx))
    }

    /// Entry distance of the ray, by slab clipping in the solid's frame.
    fn hit(&self, o: Point3, d: Point3) -> Option<f64> {
        let (ox, oy) = (o.x - self.center[0], o.y - self.center[1]);
        let lo = [self.cos * ox + self.sin * oy, -self.sin * ox + self.cos * oy, o.z];
        let ld = [self.cos * d.x + self.sin * d.y, -self.sin * d.x + self.cos * d.y, d.z];
        let bounds = [(-self.half[0], self.half[0]), (-self.half[1], self.half[1]), (0.0, self.height)];
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for axis in 0..3 {
            let (a, b) = bounds[axis];
            if ld[axis] == 0.0 {
                if lo[axis] < a || lo[axis] > b {
                    return None;
                }
                continue;
            }
            let (mut ta, mut tb) = ((a - lo[axis]) / ld[axis], (b - lo[axis]) / ld[axis]);
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
        }
        (t0 <= t1 && t0 >= 0.0).then_some(t0)
    }
}

/// Generates the frames, map and ground truth for `spec`.
pub fn gen_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let tf = spec.sensor_to_map();
    let to_sensor = tf.inverse();
    let origin = Point3::from(spec.sensor.position);

    let mut solids: Vec<(Solid, bool)> = spec
        .boxes
        .iter()
        .map(|b| (Solid::new(b.center, b.size[0], b.size[1], b.size[2], b.yaw), false))
        .collect();
    solids.extend(spec.walls.iter().map(|w| (Solid::from_wall(w), true)));

    let half_fov = (spec.fov_deg / 2.0).to_radians();
    let noise = Normal::new(0.0, spec.range_noise).map_err(|e| CliError::InvalidSpec(e.to_string()))?;
    let max_attempts = spec.points_per_frame.saturating_mul(50).max(1000);

    let mut frames = Vec::with_capacity(spec.frames);
    for frame in 0..spec.frames {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(frame as u64));
        let mut points = Vec::with_capacity(spec.points_per_frame);
        let mut attempts = 0;
        while points.len() < spec.points_per_frame {
            attempts += 1;
            if attempts > max_attempts {
                return Err(CliError::InvalidSpec("too few rays hit anything; check the sensor pose".into()));
            }
            // uniform over the spherical cap around the sensor's +x axis
            let cos_t = rng.random_range(half_fov.cos()..=1.0);
            let sin_t = (1.0 - cos_t * cos_t).sqrt();
            let phi = rng.random_range(0.0..2.0 * PI);
            let local = Point3::new(cos_t, sin_t * phi.cos(), sin_t * phi.sin());
            let dir = tf.apply(local) - origin;

            let mut best: Option<(f64, bool)> = None;
            if dir.z < 0.0 {
                let t = -origin.z / dir.z;
                let hit = origin + dir * t;
                let [x0, x1] = spec.floor.x_range;
                let [y0, y1] = spec.floor.y_range;
                if (x0..=x1).contains(&hit.x) && (y0..=y1).contains(&hit.y) {
                    best = Some((t, true));
                }
            }
            for (solid, _) in &solids {
                if let Some(t) = solid.hit(origin, dir) {
                    if best.is_none_or(|(b, _)| t < b) {
                        best = Some((t, false));
                    }
                }
            }
            let Some((t, on_floor)) = best else { continue };
            if t < spec.min_range || t > spec.max_range {
                continue;
            }
            let range = (t + noise.sample(&mut rng)).max(spec.min_range);
            let mut hit = origin + dir * range;
            if on_floor && spec.floor.noise > 0.0 {
                hit.z += rng.random_range(-spec.floor.noise..=spec.floor.noise);
            }
            points.push(to_sensor.apply(hit));
        }
        frames.push(PointCloud::new(points, "sensor", frame as u64 * 100_000)?);
    }

    Ok(Scene { frames, map: scene_map(spec)?, truth: ground_truth(spec), sensor_to_map: tf })
}

/// Free grid over the floor with every wall (grown by `wall_inflation`)
/// marked occupied.
fn scene_map(spec: &SceneSpec) -> Result<OccupancyGrid> {
    let res = spec.map_resolution;
    let [x0, x1] = spec.floor.x_range;
    let [y0, y1] = spec.floor.y_range;
    let width = ((x1 - x0) / res).ceil() as usize;
    let height = ((y1 - y0) / res).ceil() as usize;
    let grid = OccupancyGrid::filled(width, height, res, GridOrigin { x: x0, y: y0, yaw: 0.0 }, CellState::Free)?;
    let grow = 2.0 * spec.wall_inflation;
    let walls = spec
        .walls
        .iter()
        .map(|w| {
            let s = Solid::from_wall(w);
            Detection::new(
                Point3::new(s.center[0], s.center[1], w.height / 2.0),
                [2.0 * s.half[0] + grow, 2.0 * s.half[1] + grow, w.height],
                s.sin.atan2(s.cos),
                1,
                0,
            )
        })
        .collect::<obsdet_core::Result<Vec<_>>>()?;
    Ok(mark_detections(&grid, &walls))
}

fn ground_truth(spec: &SceneSpec) -> GroundTruth {
    let boxes = spec
        .boxes
        .iter()
        .map(|b| {
            let (yaw, swap) = normalize_quarter_turn(b.yaw);
            let [l, w, h] = b.size;
            TruthBox {
                center: [b.center[0], b.center[1], h / 2.0],
                extents: if swap { [w, l, h] } else { [l, w, h] },
                yaw,
            }
        })
        .collect();
    GroundTruth { synthetic: true, map_resolution: spec.map_resolution, boxes }
}

/// Pipeline settings matching the scene: its sensor pose and map.
pub fn scene_config(scene: &Scene) -> PipelineConfig {
    PipelineConfig {
        map_metadata_path: Some("map.yaml".into()),
        static_transform: TransformSection::from_transform(&scene.sensor_to_map),
        ..PipelineConfig::default()
    }
}

/// Writes `frame_NNNN.pcd`, `map.yaml`/`map.pgm`, `ground_truth.json`,
/// `config.toml` and `scene.toml` into `dir`. Returns the frame paths.
pub fn write_scene(scene: &Scene, spec: &SceneSpec, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::unwritable(dir, e))?;
    let write = |name: &str, bytes: &[u8]| {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::unwritable(&path, e))?;
        Ok::<_, CliError>(path)
    };
    let mut paths = Vec::with_capacity(scene.frames.len());
    for (i, frame) in scene.frames.iter().enumerate() {
        paths.push(write(&format!("frame_{i:04}.pcd"), &write_pcd(frame, DataMode::Binary))?);
    }
    write_map_files(&scene.map, dir, "map")?;
    let truth = serde_json::to_vec_pretty(&scene.truth).expect("ground truth serializes");
    write("ground_truth.json", &truth)?;
    write("config.toml", scene_config(scene).to_toml().as_bytes())?;
    write("scene.toml", toml::to_string(spec).expect("spec serializes").as_bytes())?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(boxes: Vec<BoxSpec>) -> SceneSpec {
        SceneSpec { points_per_frame: 2000, boxes, walls: vec![], ..Default::default() }
    }

    #[test]
    fn no_boxes_gives_floor_only() {
        let spec = small(vec![]);
        let scene = gen_scene(&spec).unwrap();
        let tf = spec.sensor_to_map();
        for p in scene.frames[0].points() {
            assert!(tf.apply(*p).z.abs() < 0.05);
        }
    }

    #[test]
    fn box_outside_cone_gets_no_points() {
        let spec = small(vec![BoxSpec { center: [-0.8, 0.0], size: [0.3, 0.3, 0.5], yaw: 0.0 }]);
        let scene = gen_scene(&spec).unwrap();
        let tf = spec.sensor_to_map();
        assert!(scene.frames[0].points().iter().all(|p| tf.apply(*p).z < 0.05));
    }

    #[test]
    fn same_seed_same_frames() {
        let spec = small(SceneSpec::default().boxes);
        assert_eq!(gen_scene(&spec).unwrap().frames, gen_scene(&spec).unwrap().frames);
        let other = SceneSpec { seed: 8, ..spec.clone() };
        assert_ne!(gen_scene(&other).unwrap().frames, gen_scene(&spec).unwrap().frames);
    }

    #[test]
    fn ranges_respect_floor() {
        let scene = gen_scene(&small(SceneSpec::default().boxes)).unwrap();
        assert!(scene.frames[0].points().iter().all(|p| p.norm() >= 0.05));
    }

    #[test]
    fn walls_are_occupied_in_map() {
        let spec = SceneSpec::default();
        let map = scene_map(&spec).unwrap();
        assert_eq!(map.state_at(8.0, 0.0), Some(CellState::Occupied));
        assert_eq!(map.state_at(3.0, -1.0), Some(CellState::Free));
    }

    #[test]
    fn invalid_specs() {
        for spec in [
            SceneSpec { fov_deg: 0.0, ..Default::default() },
            SceneSpec { min_range: 5.0, max_range: 1.0, ..Default::default() },
            SceneSpec { boxes: vec![BoxSpec { center: [0.0; 2], size: [0.0, 1.0, 1.0], yaw: 0.0 }], ..Default::default() },
        ] {
            assert!(matches!(gen_scene(&spec), Err(CliError::InvalidSpec(_))));
        }
    }
}
