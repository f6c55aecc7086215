//! Oriented footprint rectangles for clusters.
//!
//! [`fit_obb`] is the production path: a rotation search over a fixed grid
//! of angles keeping the rectangle of least area. [`min_area_rect_calipers`]
//! computes the exact optimum (one side always lies on a hull edge) and
//! bounds the search's error in tests.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::geometry::{normalize_quarter_turn, Detection, Point3, PointCloud};

/// Smallest reported box side, meters.
pub const MIN_EXTENT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObbParams {
    /// Rotation search step, radians in `(0, π/4]`.
    pub angle_step: f64,
    /// Height from the members' z range; otherwise boxes stand on z = 0.
    pub z_from_cluster: bool,
}

impl Default for ObbParams {
    fn default() -> Self {
        ObbParams {
            angle_step: 0.5f64.to_radians(),
            z_from_cluster: true,
        }
    }
}

impl ObbParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.angle_step > 0.0 && self.angle_step <= std::f64::consts::FRAC_PI_4) {
            return Err(Error::InvalidParams(format!(
                "angle_step must lie in (0, pi/4], got {}",
                self.angle_step
            )));
        }
        Ok(())
    }
}

/// Fits a yawed box to the cluster members.
///
/// Members are projected onto the xy-plane and rotated about their centroid
/// by `-θ` for `θ = 0, step, 2·step, … < π/2`; the axis-aligned rectangle
/// with the least area wins (earliest angle on ties). Rectangle bounds only
/// depend on the hull, so the search runs over hull vertices.
pub fn fit_obb(cloud: &PointCloud, cluster: &[usize], params: &ObbParams) -> Result<Detection> {
    params.validate()?;
    if cluster.is_empty() {
        return Err(Error::EmptyCluster);
    }
    let pts = cloud.points();
    let mut z_min = f64::INFINITY;
    let mut z_max = f64::NEG_INFINITY;
    let mut cx = 0.0;
    let mut cy = 0.0;
    let mut flat = Vec::with_capacity(cluster.len());
    for &i in cluster {
        let p = pts[i];
        z_min = z_min.min(p.z);
        z_max = z_max.max(p.z);
        cx += p.x;
        cy += p.y;
        flat.push([p.x, p.y]);
    }
    let n = cluster.len() as f64;
    let (cx, cy) = (cx / n, cy / n);
    let hull: Vec<[f64; 2]> = convex_hull(&flat)
        .into_iter()
        .map(|[x, y]| [x - cx, y - cy])
        .collect();

    let mut best: Option<(f64, f64, [f64; 4])> = None;
    let mut k = 0u32;
    loop {
        let theta = f64::from(k) * params.angle_step;
        if theta >= FRAC_PI_2 {
            break;
        }
        k += 1;
        let bounds = rotated_bounds(&hull, theta);
        let area = (bounds[1] - bounds[0]) * (bounds[3] - bounds[2]);
        if best.is_none_or(|(a, _, _)| area < a) {
            best = Some((area, theta, bounds));
        }
    }
    let (_, theta, [u0, u1, v0, v1]) = best.expect("at least the zero angle is searched");

    let (s, c) = theta.sin_cos();
    let (uc, vc) = (0.5 * (u0 + u1), 0.5 * (v0 + v1));
    let center_x = cx + c * uc - s * vc;
    let center_y = cy + s * uc + c * vc;
    let (center_z, height) = if params.z_from_cluster {
        (0.5 * (z_min + z_max), z_max - z_min)
    } else {
        let top = z_max.max(0.0);
        (0.5 * top, top)
    };
    Detection::new(
        Point3::new(center_x, center_y, center_z),
        [
            (u1 - u0).max(MIN_EXTENT),
            (v1 - v0).max(MIN_EXTENT),
            height.max(MIN_EXTENT),
        ],
        theta,
        cluster.len(),
        0,
    )
}

/// `[u_min, u_max, v_min, v_max]` of the points in a frame rotated by `theta`.
#[inline]
fn rotated_bounds(points: &[[f64; 2]], theta: f64) -> [f64; 4] {
    let (s, c) = theta.sin_cos();
    let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    for &[x, y] in points {
        let u = c * x + s * y;
        let v = -s * x + c * y;
        b[0] = b[0].min(u);
        b[1] = b[1].max(u);
        b[2] = b[2].min(v);
        b[3] = b[3].max(v);
    }
    b
}

/// Minimal-area enclosing rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectFit {
    /// In `[0, π/2)`; `extents[0]` runs along `(cos yaw, sin yaw)`.
    pub yaw: f64,
    pub extents: [f64; 2],
    pub center: [f64; 2],
    /// Product of the (floored) extents.
    pub area: f64,
}

/// Exact minimal-area rectangle: convex hull, then one candidate per hull
/// edge. Collinear or single-point inputs give sides floored at
/// [`MIN_EXTENT`]. Returns `None` for an empty input.
pub fn min_area_rect_calipers(points: &[[f64; 2]]) -> Option<RectFit> {
    let hull = convex_hull(points);
    match hull.len() {
        0 => None,
        1 => Some(RectFit {
            yaw: 0.0,
            extents: [MIN_EXTENT, MIN_EXTENT],
            center: hull[0],
            area: MIN_EXTENT * MIN_EXTENT,
        }),
        _ => {
            let mut best: Option<(f64, f64, [f64; 4])> = None;
            for i in 0..hull.len() {
                let a = hull[i];
                let b = hull[(i + 1) % hull.len()];
                let theta = (b[1] - a[1]).atan2(b[0] - a[0]);
                let bounds = rotated_bounds(&hull, theta);
                let area = (bounds[1] - bounds[0]) * (bounds[3] - bounds[2]);
                if best.is_none_or(|(a, _, _)| area < a) {
                    best = Some((area, theta, bounds));
                }
            }
            let (_, theta, [u0, u1, v0, v1]) = best?;
            let (s, c) = theta.sin_cos();
            let (uc, vc) = (0.5 * (u0 + u1), 0.5 * (v0 + v1));
            let center = [c * uc - s * vc, s * uc + c * vc];
            let (yaw, swap) = normalize_quarter_turn(theta);
            let mut extents = [(u1 - u0).max(MIN_EXTENT), (v1 - v0).max(MIN_EXTENT)];
            if swap {
                extents.swap(0, 1);
            }
            Some(RectFit {
                yaw,
                extents,
                center,
                area: extents[0] * extents[1],
            })
        }
    }
}

/// Counter-clockwise convex hull without collinear vertices (monotone chain).
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}
