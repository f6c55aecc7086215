//! Per-frame preprocessing: voxel-grid reduction, RANSAC floor fitting and
//! removal, and filtration against an occupancy map.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Plane, Point3, PointCloud};
use crate::mapping::{CellState, OccupancyGrid};

/// Name of the generator RANSAC draws its samples from.
pub const RANSAC_GENERATOR: &str = "chacha8";

/// Which point stands in for an occupied voxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Representative {
    #[default]
    Centroid,
    CellCenter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelParams {
    pub leaf_size: f64,
    pub min_points_per_voxel: usize,
    pub representative: Representative,
}

impl Default for VoxelParams {
    fn default() -> Self {
        VoxelParams {
            leaf_size: 0.05,
            min_points_per_voxel: 1,
            representative: Representative::Centroid,
        }
    }
}

impl VoxelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.leaf_size.is_finite() && self.leaf_size > 0.0) {
            return Err(Error::InvalidParams(format!(
                "voxel leaf_size must be positive, got {}",
                self.leaf_size
            )));
        }
        if self.min_points_per_voxel == 0 {
            return Err(Error::InvalidParams("min_points_per_voxel must be at least 1".into()));
        }
        Ok(())
    }
}

/// Replaces the points of every sufficiently populated cube by one
/// representative. Cubes have edge `leaf_size` and are anchored at the world
/// origin; output is ordered by cell index `(ix, iy, iz)`.
pub fn voxel_downsample(cloud: &PointCloud, params: &VoxelParams) -> Result<PointCloud> {
    params.validate()?;
    let leaf = params.leaf_size;
    let mut keyed: Vec<([i64; 3], u32)> = cloud
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| (voxel_key(p, leaf), i as u32))
        .collect();
    // index in the key keeps member order (and so the summation order) fixed
    keyed.sort_unstable();

    let pts = cloud.points();
    let mut out = Vec::new();
    let mut start = 0;
    while start < keyed.len() {
        let key = keyed[start].0;
        let mut end = start + 1;
        while end < keyed.len() && keyed[end].0 == key {
            end += 1;
        }
        let count = end - start;
        if count >= params.min_points_per_voxel {
            out.push(match params.representative {
                Representative::Centroid => {
                    let mut sum = pts[keyed[start].1 as usize];
                    for &(_, i) in &keyed[start + 1..end] {
                        sum = sum + pts[i as usize];
                    }
                    if count == 1 {
                        sum
                    } else {
                        sum * (1.0 / count as f64)
                    }
                }
                Representative::CellCenter => Point3::new(
                    (key[0] as f64 + 0.5) * leaf,
                    (key[1] as f64 + 0.5) * leaf,
                    (key[2] as f64 + 0.5) * leaf,
                ),
            });
        }
        start = end;
    }
    Ok(cloud.with_points(out))
}

/// Integer cell of a point for a grid of edge `leaf` anchored at the origin.
#[inline]
pub fn voxel_key(p: &Point3, leaf: f64) -> [i64; 3] {
    [
        (p.x / leaf).floor() as i64,
        (p.y / leaf).floor() as i64,
        (p.z / leaf).floor() as i64,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    /// Inlier distance threshold in meters.
    pub distance_threshold: f64,
    pub max_iterations: usize,
    pub seed: u64,
    /// Largest accepted angle between the plane normal and +z, radians.
    pub max_normal_tilt: f64,
    pub min_inlier_fraction: f64,
}

impl Default for RansacParams {
    fn default() -> Self {
        RansacParams {
            distance_threshold: 0.03,
            max_iterations: 100,
            seed: 42,
            max_normal_tilt: 15f64.to_radians(),
            min_inlier_fraction: 0.05,
        }
    }
}

impl RansacParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance_threshold.is_finite() && self.distance_threshold > 0.0) {
            return Err(Error::InvalidParams(format!(
                "ransac distance_threshold must be positive, got {}",
                self.distance_threshold
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParams("ransac max_iterations must be at least 1".into()));
        }
        if !(0.0..=FRAC_PI_2).contains(&self.max_normal_tilt) {
            return Err(Error::InvalidParams(format!(
                "max_normal_tilt must lie in [0, pi/2], got {}",
                self.max_normal_tilt
            )));
        }
        if !(0.0..=1.0).contains(&self.min_inlier_fraction) {
            return Err(Error::InvalidParams(format!(
                "min_inlier_fraction must lie in [0, 1], got {}",
                self.min_inlier_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloorFit {
    pub plane: Plane,
    /// Ascending indices of every point within the threshold of `plane`.
    pub inliers: Vec<usize>,
}

/// Fits the dominant near-horizontal plane.
///
/// Each of the `max_iterations` rounds draws three distinct indices from a
/// ChaCha8 stream seeded with `params.seed`, builds the plane through them,
/// discards it if its normal tilts past `max_normal_tilt`, and scores it by
/// the number of points within `distance_threshold`. The first best-scoring
/// plane wins.
pub fn fit_floor_ransac(cloud: &PointCloud, params: &RansacParams) -> Result<FloorFit> {
    params.validate()?;
    let pts = cloud.points();
    let n = pts.len();
    if n < 3 {
        return Err(Error::DegenerateInput(format!(
            "plane fitting needs at least 3 points, got {n}"
        )));
    }
    let tau = params.distance_threshold;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut any_plane = false;
    let mut best: Option<(Plane, usize)> = None;

    for _ in 0..params.max_iterations {
        let [i, j, k] = sample_three(&mut rng, n);
        let Some(plane) = Plane::through(pts[i], pts[j], pts[k]) else {
            continue;
        };
        any_plane = true;
        if plane.tilt() > params.max_normal_tilt {
            continue;
        }
        let score = count_inliers(pts, &plane, tau);
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((plane, score));
        }
    }

    if !any_plane {
        return Err(Error::DegenerateInput(
            "every sampled triple was collinear".into(),
        ));
    }
    let (plane, score) = match best {
        Some(b) => b,
        None => {
            return Err(Error::NoFloorFound {
                fraction: 0.0,
                required: params.min_inlier_fraction,
            })
        }
    };
    let fraction = score as f64 / n as f64;
    if fraction < params.min_inlier_fraction {
        return Err(Error::NoFloorFound {
            fraction,
            required: params.min_inlier_fraction,
        });
    }
    let inliers: Vec<usize> = (0..n).filter(|&i| plane.distance(&pts[i]) <= tau).collect();
    debug_assert_eq!(inliers.len(), score);
    Ok(FloorFit { plane, inliers })
}

fn sample_three(rng: &mut ChaCha8Rng, n: usize) -> [usize; 3] {
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n);
    while j == i {
        j = rng.random_range(0..n);
    }
    let mut k = rng.random_range(0..n);
    while k == i || k == j {
        k = rng.random_range(0..n);
    }
    [i, j, k]
}

#[inline]
fn count_inliers(pts: &[Point3], plane: &Plane, tau: f64) -> usize {
    pts.iter().filter(|p| plane.distance(p) <= tau).count()
}

/// Drops every point within `threshold` of the plane, keeping order.
pub fn remove_floor(cloud: &PointCloud, plane: &Plane, threshold: f64) -> Result<PointCloud> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::InvalidParams(format!(
            "floor threshold must be positive, got {threshold}"
        )));
    }
    Ok(cloud.with_points(
        cloud
            .points()
            .iter()
            .copied()
            .filter(|p| plane.distance(p) > threshold)
            .collect(),
    ))
}

/// What to do with points that fall outside the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutOfBoundsPolicy {
    #[default]
    Keep,
    Drop,
}

/// Removes points whose map cell is occupied. Height is ignored; free and
/// unknown cells keep their points.
pub fn filter_by_map(
    cloud: &PointCloud,
    grid: &OccupancyGrid,
    policy: OutOfBoundsPolicy,
) -> Result<PointCloud> {
    if cloud.frame_id() != grid.frame_id() {
        return Err(Error::frame_mismatch(grid.frame_id(), cloud.frame_id()));
    }
    Ok(cloud.with_points(
        cloud
            .points()
            .iter()
            .copied()
            .filter(|p| match grid.state_at(p.x, p.y) {
                Some(CellState::Occupied) => false,
                Some(_) => true,
                None => policy == OutOfBoundsPolicy::Keep,
            })
            .collect(),
    ))
}

/// `(col, row)` of the map cell holding `(x, y)`; `None` when out of bounds.
pub fn world_to_cell(grid: &OccupancyGrid, x: f64, y: f64) -> Option<(usize, usize)> {
    grid.world_to_cell(x, y)
}
