//! Occupancy-grid container and the runtime map updates: stamping detected
//! obstacles, building a local map from sensed points, and resetting to a
//! baseline.
//!
//! Updates never mutate their input; each returns a fresh grid so callers
//! can keep snapshots of earlier frames.

use crate::error::{Error, Result};
use crate::geometry::{Detection, PointCloud};

/// Trinary cell state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellState {
    Free,
    Occupied,
    Unknown,
}

/// Pose of the grid's cell (0, 0) corner in the map frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GridOrigin {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

/// Planar raster of trinary cells. Row-major; row 0 is the southernmost row
/// (smallest grid-local y), column 0 the westernmost.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: GridOrigin,
    // sin/cos of origin.yaw, cached for per-point lookups
    yaw_sin_cos: (f64, f64),
    frame_id: String,
    cells: Vec<CellState>,
}

impl OccupancyGrid {
    pub const DEFAULT_FRAME: &'static str = "map";

    /// A grid with every cell set to `fill`.
    pub fn filled(
        width: usize,
        height: usize,
        resolution: f64,
        origin: GridOrigin,
        fill: CellState,
    ) -> Result<Self> {
        Self::from_cells(width, height, resolution, origin, vec![fill; width * height])
    }

    pub fn from_cells(
        width: usize,
        height: usize,
        resolution: f64,
        origin: GridOrigin,
        cells: Vec<CellState>,
    ) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::InvalidParams(format!(
                "grid resolution must be positive, got {resolution}"
            )));
        }
        if ![origin.x, origin.y, origin.yaw].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParams("grid origin is not finite".into()));
        }
        if cells.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} cells for a {width}x{height} grid",
                cells.len()
            )));
        }
        Ok(OccupancyGrid {
            width,
            height,
            resolution,
            origin,
            yaw_sin_cos: origin.yaw.sin_cos(),
            frame_id: Self::DEFAULT_FRAME.to_owned(),
            cells,
        })
    }

    pub fn with_frame_id(mut self, frame_id: impl Into<String>) -> Self {
        self.frame_id = frame_id.into();
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> GridOrigin {
        self.origin
    }

    pub fn frame_id(&self) -> &str {
        &self.frame_id
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> CellState {
        self.cells[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, state: CellState) {
        self.cells[row * self.width + col] = state;
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == state).count()
    }

    /// Same dimensions, resolution, origin and frame.
    pub fn same_geometry(&self, other: &OccupancyGrid) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.resolution == other.resolution
            && self.origin == other.origin
            && self.frame_id == other.frame_id
    }

    /// Map-frame `(x, y)` to grid-local coordinates (origin-relative, unrotated).
    #[inline]
    pub fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.yaw_sin_cos;
        let dx = x - self.origin.x;
        let dy = y - self.origin.y;
        (c * dx + s * dy, -s * dx + c * dy)
    }

    #[inline]
    pub fn from_local(&self, lx: f64, ly: f64) -> (f64, f64) {
        let (s, c) = self.yaw_sin_cos;
        (
            self.origin.x + c * lx - s * ly,
            self.origin.y + s * lx + c * ly,
        )
    }

    /// `(col, row)` of the cell containing map-frame `(x, y)`, or `None`
    /// when the point falls outside the grid. Cells are half-open, so a
    /// point on a boundary belongs to the cell above/right of it.
    #[inline]
    pub fn world_to_cell(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let (lx, ly) = self.to_local(x, y);
        let col = (lx / self.resolution).floor();
        let row = (ly / self.resolution).floor();
        if col >= 0.0 && row >= 0.0 && col < self.width as f64 && row < self.height as f64 {
            Some((col as usize, row as usize))
        } else {
            None
        }
    }

    /// Map-frame center of a cell.
    pub fn cell_to_world(&self, col: usize, row: usize) -> (f64, f64) {
        self.from_local(
            (col as f64 + 0.5) * self.resolution,
            (row as f64 + 0.5) * self.resolution,
        )
    }

    /// State at a map-frame position, `None` outside the grid.
    pub fn state_at(&self, x: f64, y: f64) -> Option<CellState> {
        self.world_to_cell(x, y).map(|(c, r)| self.get(c, r))
    }
}

/// Marks every cell whose center lies inside a detection footprint as
/// occupied. Footprints are clipped to the grid; other cells keep their state.
pub fn mark_detections(grid: &OccupancyGrid, detections: &[Detection]) -> OccupancyGrid {
    let mut out = grid.clone();
    for det in detections {
        let Some((c0, c1, r0, r1)) = footprint_cell_range(grid, det) else {
            continue;
        };
        for row in r0..=r1 {
            for col in c0..=c1 {
                let (x, y) = grid.cell_to_world(col, row);
                if det.footprint_contains(x, y) {
                    out.set(col, row, CellState::Occupied);
                }
            }
        }
    }
    out
}

/// Inclusive cell window covering the footprint's bounding box in grid-local
/// coordinates, clipped to the grid.
fn footprint_cell_range(grid: &OccupancyGrid, det: &Detection) -> Option<(usize, usize, usize, usize)> {
    if grid.width == 0 || grid.height == 0 {
        return None;
    }
    let (mut lo_x, mut lo_y) = (f64::INFINITY, f64::INFINITY);
    let (mut hi_x, mut hi_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for [x, y] in det.footprint_corners() {
        let (lx, ly) = grid.to_local(x, y);
        lo_x = lo_x.min(lx);
        lo_y = lo_y.min(ly);
        hi_x = hi_x.max(lx);
        hi_y = hi_y.max(ly);
    }
    let res = grid.resolution;
    // one cell of slack on each side; the exact test runs per cell center
    let c0 = ((lo_x / res).floor() - 1.0).max(0.0);
    let r0 = ((lo_y / res).floor() - 1.0).max(0.0);
    let c1 = ((hi_x / res).floor() + 1.0).min(grid.width as f64 - 1.0);
    let r1 = ((hi_y / res).floor() + 1.0).min(grid.height as f64 - 1.0);
    if c0 > c1 || r0 > r1 {
        return None;
    }
    Some((c0 as usize, c1 as usize, r0 as usize, r1 as usize))
}

/// A map of only the sensed obstacles: template geometry, every cell unknown
/// except those hit by at least one point, which become occupied.
pub fn build_local_map(template: &OccupancyGrid, obstacle_cloud: &PointCloud) -> Result<OccupancyGrid> {
    if obstacle_cloud.frame_id() != template.frame_id() {
        return Err(Error::frame_mismatch(template.frame_id(), obstacle_cloud.frame_id()));
    }
    let mut out = template.clone();
    out.cells.fill(CellState::Unknown);
    for p in obstacle_cloud.points() {
        if let Some((col, row)) = template.world_to_cell(p.x, p.y) {
            out.set(col, row, CellState::Occupied);
        }
    }
    Ok(out)
}

/// Discards runtime markings by returning the baseline map.
pub fn reset(grid: &OccupancyGrid, baseline: &OccupancyGrid) -> Result<OccupancyGrid> {
    if !grid.same_geometry(baseline) {
        return Err(Error::GeometryMismatch);
    }
    Ok(baseline.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;

    fn free_grid(w: usize, h: usize, res: f64) -> OccupancyGrid {
        OccupancyGrid::filled(w, h, res, GridOrigin::default(), CellState::Free).unwrap()
    }

    fn det(x: f64, y: f64, l: f64, w: f64, yaw: f64) -> Detection {
        Detection::new(Point3::new(x, y, 0.5), [l, w, 1.0], yaw, 1, 0).unwrap()
    }

    #[test]
    fn world_to_cell_floor_convention() {
        let g = free_grid(10, 10, 0.05);
        assert_eq!(g.world_to_cell(0.07, 0.0), Some((1, 0)));
        assert_eq!(g.world_to_cell(0.05, 0.0), Some((1, 0)));
        assert_eq!(g.world_to_cell(-0.001, 0.0), None);
        assert_eq!(g.world_to_cell(0.5, 0.0), None);
        assert_eq!(g.world_to_cell(0.4999, 0.4999), Some((9, 9)));
    }

    #[test]
    fn world_to_cell_with_yawed_origin() {
        let origin = GridOrigin { x: 1.0, y: 1.0, yaw: std::f64::consts::FRAC_PI_2 };
        let g = OccupancyGrid::filled(4, 4, 1.0, origin, CellState::Free).unwrap();
        // grid-local +x points along world +y
        assert_eq!(g.world_to_cell(0.5, 2.5), Some((1, 0)));
        let (x, y) = g.cell_to_world(1, 0);
        assert!((x - 0.5).abs() < 1e-12 && (y - 2.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(OccupancyGrid::filled(2, 2, 0.0, GridOrigin::default(), CellState::Free).is_err());
        assert!(OccupancyGrid::from_cells(2, 2, 1.0, GridOrigin::default(), vec![CellState::Free; 3]).is_err());
    }

    #[test]
    fn empty_detection_list_is_identity() {
        let g = free_grid(8, 8, 0.5);
        assert_eq!(mark_detections(&g, &[]), g);
    }

    #[test]
    fn aligned_box_covers_two_by_two() {
        // 1 m box at resolution 0.5 centered on a cell corner: four cell centers inside
        let g = free_grid(8, 8, 0.5);
        let marked = mark_detections(&g, &[det(2.0, 2.0, 1.0, 1.0, 0.0)]);
        assert_eq!(marked.count(CellState::Occupied), 4);
        for (c, r) in [(3, 3), (3, 4), (4, 3), (4, 4)] {
            assert_eq!(marked.get(c, r), CellState::Occupied);
        }
        assert_eq!(g.count(CellState::Occupied), 0, "input must not change");
    }

    #[test]
    fn footprint_clipped_at_border() {
        let g = free_grid(4, 4, 1.0);
        let marked = mark_detections(&g, &[det(0.0, 0.0, 3.0, 3.0, 0.3)]);
        assert!(marked.count(CellState::Occupied) >= 1);
        let far = mark_detections(&g, &[det(100.0, 100.0, 1.0, 1.0, 0.0)]);
        assert_eq!(far, g);
    }

    #[test]
    fn marking_is_idempotent_and_monotone() {
        let mut g = free_grid(20, 20, 0.25);
        g.set(0, 0, CellState::Occupied);
        g.set(5, 5, CellState::Unknown);
        let dets = [det(2.0, 2.5, 1.2, 0.4, 0.7), det(4.0, 1.0, 0.6, 0.6, 0.0)];
        let once = mark_detections(&g, &dets);
        let twice = mark_detections(&once, &dets);
        assert_eq!(once, twice);
        for (a, b) in g.cells().iter().zip(once.cells()) {
            if *a == CellState::Occupied {
                assert_eq!(*b, CellState::Occupied);
            }
        }
        assert!(once.same_geometry(&g));
    }

    #[test]
    fn local_map_marks_hit_cells() {
        let g = free_grid(10, 10, 1.0);
        let empty = PointCloud::empty("map", 0);
        let local = build_local_map(&g, &empty).unwrap();
        assert_eq!(local.count(CellState::Unknown), 100);

        let one = PointCloud::new(vec![Point3::new(3.5, 7.2, 1.0)], "map", 0).unwrap();
        let local = build_local_map(&g, &one).unwrap();
        assert_eq!(local.count(CellState::Occupied), 1);
        assert_eq!(local.get(3, 7), CellState::Occupied);

        let wrong = PointCloud::empty("sensor", 0);
        assert!(matches!(build_local_map(&g, &wrong), Err(Error::FrameMismatch { .. })));
    }

    #[test]
    fn reset_returns_baseline() {
        let g = free_grid(6, 6, 0.5);
        let marked = mark_detections(&g, &[det(1.0, 1.0, 1.0, 1.0, 0.0)]);
        assert_eq!(reset(&marked, &g).unwrap(), g);
        assert_eq!(reset(&g, &g).unwrap(), g);
        let dets = [det(1.5, 1.5, 0.7, 0.3, 0.2)];
        let a = mark_detections(&reset(&mark_detections(&g, &dets), &g).unwrap(), &dets);
        assert_eq!(a, mark_detections(&g, &dets));

        let other = free_grid(6, 7, 0.5);
        assert_eq!(reset(&g, &other), Err(Error::GeometryMismatch));
    }
}
