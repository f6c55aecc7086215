//! Reference implementations used only by tests.
//!
//! Every oracle here is written the slow, obvious way and avoids the code
//! path it checks: no KD-tree, no floor arithmetic for cell lookup, no
//! sort-based grouping.

use std::collections::HashMap;
use std::f64::consts::PI;

use obsdet_core::{
    CellState, Detection, GridOrigin, OccupancyGrid, Point3, PointCloud, RigidTransform,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<Point3> {
    (0..n)
        .map(|_| {
            Point3::new(
                rng.random_range(lo..hi),
                rng.random_range(lo..hi),
                rng.random_range(lo..hi),
            )
        })
        .collect()
}

pub fn random_cloud(rng: &mut impl Rng, n: usize, lo: f64, hi: f64, frame: &str) -> PointCloud {
    PointCloud::new(random_points(rng, n, lo, hi), frame, rng.random()).unwrap()
}

pub fn random_transform(rng: &mut impl Rng, parent: &str, child: &str) -> RigidTransform {
    let q = [
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    ];
    let t = [
        rng.random_range(-10.0..10.0),
        rng.random_range(-10.0..10.0),
        rng.random_range(-10.0..10.0),
    ];
    RigidTransform::new(q, t, parent, child).unwrap()
}

pub fn random_state(rng: &mut impl Rng) -> CellState {
    match rng.random_range(0..3) {
        0 => CellState::Free,
        1 => CellState::Occupied,
        _ => CellState::Unknown,
    }
}

/// Random trinary grid with random origin and yaw.
pub fn random_grid(rng: &mut impl Rng, width: usize, height: usize) -> OccupancyGrid {
    let origin = GridOrigin {
        x: rng.random_range(-5.0..5.0),
        y: rng.random_range(-5.0..5.0),
        yaw: rng.random_range(-PI..PI),
    };
    let resolution = rng.random_range(0.02..0.5);
    let cells = (0..width * height).map(|_| random_state(rng)).collect();
    OccupancyGrid::from_cells(width, height, resolution, origin, cells).unwrap()
}

/// Map-frame points scattered over the grid's footprint plus a margin.
pub fn points_over_grid(rng: &mut impl Rng, grid: &OccupancyGrid, n: usize) -> Vec<Point3> {
    let w = grid.width() as f64 * grid.resolution();
    let h = grid.height() as f64 * grid.resolution();
    (0..n)
        .map(|_| {
            let lx = rng.random_range(-0.1 * w..1.1 * w);
            let ly = rng.random_range(-0.1 * h..1.1 * h);
            let (x, y) = grid.from_local(lx, ly);
            Point3::new(x, y, rng.random_range(-1.0..2.0))
        })
        .collect()
}

/// Indices within `r` of `q`, by scanning every point.
pub fn linear_radius(points: &[Point3], q: &Point3, r: f64) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            let p = points[i];
            let (dx, dy, dz) = (p.x - q.x, p.y - q.y, p.z - q.z);
            dx * dx + dy * dy + dz * dz <= r * r
        })
        .collect()
}

/// Connected components of the O(n²) distance graph via union-find, as a
/// canonical set of ascending clusters sorted by first member.
pub fn union_find_clusters(points: &[Point3], tolerance: f64, min: usize, max: usize) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            let p = points[i];
            let q = points[j];
            let (dx, dy, dz) = (p.x - q.x, p.y - q.y, p.z - q.z);
            if dx * dx + dy * dy + dz * dz <= tolerance * tolerance {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    let mut clusters: Vec<Vec<usize>> = groups
        .into_values()
        .filter(|g| g.len() >= min && g.len() <= max)
        .collect();
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters.sort_by_key(|c| c[0]);
    clusters
}

/// Per-cell means by hashing every point into a map of member lists.
pub fn voxel_means(points: &[Point3], leaf: f64, min_points: usize) -> HashMap<(i64, i64, i64), Point3> {
    let mut cells: HashMap<(i64, i64, i64), Vec<Point3>> = HashMap::new();
    for p in points {
        let key = (
            (p.x / leaf).floor() as i64,
            (p.y / leaf).floor() as i64,
            (p.z / leaf).floor() as i64,
        );
        cells.entry(key).or_default().push(*p);
    }
    cells
        .into_iter()
        .filter(|(_, members)| members.len() >= min_points)
        .map(|(k, members)| {
            let n = members.len() as f64;
            let (sx, sy, sz) = members
                .iter()
                .fold((0.0, 0.0, 0.0), |(x, y, z), p| (x + p.x, y + p.y, z + p.z));
            (k, Point3::new(sx / n, sy / n, sz / n))
        })
        .collect()
}

/// Cell holding `(x, y)`, found by testing the point against every cell's
/// square in turn.
pub fn linear_cell_lookup(grid: &OccupancyGrid, x: f64, y: f64) -> Option<(usize, usize)> {
    let o = grid.origin();
    let res = grid.resolution();
    let (ex, ey) = ((o.yaw.cos(), o.yaw.sin()), (-o.yaw.sin(), o.yaw.cos()));
    for row in 0..grid.height() {
        for col in 0..grid.width() {
            // cell corner in the map frame
            let cx = o.x + ex.0 * col as f64 * res + ey.0 * row as f64 * res;
            let cy = o.y + ex.1 * col as f64 * res + ey.1 * row as f64 * res;
            let u = (x - cx) * ex.0 + (y - cy) * ex.1;
            let v = (x - cx) * ey.0 + (y - cy) * ey.1;
            if (0.0..res).contains(&u) && (0.0..res).contains(&v) {
                return Some((col, row));
            }
        }
    }
    None
}

/// Map filtration by linear cell lookup.
pub fn filter_oracle(grid: &OccupancyGrid, points: &[Point3], keep_out_of_bounds: bool) -> Vec<Point3> {
    points
        .iter()
        .copied()
        .filter(|p| match linear_cell_lookup(grid, p.x, p.y) {
            Some((c, r)) => grid.get(c, r) != CellState::Occupied,
            None => keep_out_of_bounds,
        })
        .collect()
}

/// Point-in-rectangle by edge cross products over the footprint corners.
pub fn in_footprint(det: &Detection, x: f64, y: f64) -> bool {
    let c = det.footprint_corners();
    let slack = 1e-12 * (det.extents()[0] + det.extents()[1]);
    (0..4).all(|i| {
        let a = c[i];
        let b = c[(i + 1) % 4];
        let edge_len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let cross = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
        cross / edge_len >= -slack
    })
}

/// Cell states after stamping detections, decided cell by cell.
pub fn mark_oracle(grid: &OccupancyGrid, dets: &[Detection]) -> Vec<CellState> {
    let mut out = grid.cells().to_vec();
    for row in 0..grid.height() {
        for col in 0..grid.width() {
            let (x, y) = grid.cell_to_world(col, row);
            if dets.iter().any(|d| in_footprint(d, x, y)) {
                out[row * grid.width() + col] = CellState::Occupied;
            }
        }
    }
    out
}

/// Floor-plus-clutter scene: `floor` points on z = 0 with uniform noise of
/// `±noise`, `clutter` points uniform in a box above. Returns the cloud and
/// the indices of the floor points.
pub fn floor_scene(rng: &mut impl Rng, floor: usize, clutter: usize, noise: f64) -> (PointCloud, Vec<usize>) {
    let mut pts = Vec::with_capacity(floor + clutter);
    let mut floor_idx = Vec::with_capacity(floor);
    let mut remaining = (floor, clutter);
    while remaining.0 + remaining.1 > 0 {
        let pick_floor = rng.random_range(0..remaining.0 + remaining.1) < remaining.0;
        if pick_floor {
            floor_idx.push(pts.len());
            pts.push(Point3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-noise..=noise),
            ));
            remaining.0 -= 1;
        } else {
            pts.push(Point3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(0.1..1.5),
            ));
            remaining.1 -= 1;
        }
    }
    (PointCloud::new(pts, "sensor", 0).unwrap(), floor_idx)
}

/// A random 2D cluster: uniform points in a rotated ellipse with aspect ratio
/// up to 1.6, jittered center.
pub fn random_cluster_2d(rng: &mut impl Rng, n: usize) -> Vec<[f64; 2]> {
    let a = rng.random_range(0.2..2.0);
    let b = a / rng.random_range(1.0..1.6);
    let rot = rng.random_range(0.0..PI);
    let (s, c) = rot.sin_cos();
    let (cx, cy) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
    (0..n)
        .map(|_| {
            let (u, v) = loop {
                let u: f64 = rng.random_range(-1.0..1.0);
                let v: f64 = rng.random_range(-1.0..1.0);
                if u * u + v * v <= 1.0 {
                    break (u * a, v * b);
                }
            };
            [cx + c * u - s * v, cy + s * u + c * v]
        })
        .collect()
}

/// Whether every point lies inside the detection footprint up to `slack`.
pub fn footprint_contains_all(det: &Detection, points: &[[f64; 2]], slack: f64) -> bool {
    let (s, c) = det.yaw().sin_cos();
    let center = det.center();
    let [l, w, _] = det.extents();
    points.iter().all(|&[x, y]| {
        let (dx, dy) = (x - center.x, y - center.y);
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        u.abs() <= 0.5 * l + slack && v.abs() <= 0.5 * w + slack
    })
}

/// Smallest angular distance between two yaws modulo a quarter turn.
pub fn yaw_error_mod_quarter(a: f64, b: f64) -> f64 {
    let q = PI / 2.0;
    let d = (a - b).rem_euclid(q);
    d.min(q - d)
}
