//! Top-down raster of a map, a cloud and detections, written as binary PPM.

use std::path::Path;

use obsdet_core::{CellState, Detection, OccupancyGrid, PointCloud};

use crate::error::{CliError, Result};

pub const FREE: [u8; 3] = [255, 255, 255];
pub const OCCUPIED: [u8; 3] = [0, 0, 0];
pub const UNKNOWN: [u8; 3] = [205, 205, 205];
pub const OUTSIDE: [u8; 3] = [128, 128, 128];
pub const POINT: [u8; 3] = [255, 0, 0];
pub const OUTLINE: [u8; 3] = [0, 200, 0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub width: usize,
    pub height: usize,
    /// World window `[x_min, y_min, x_max, y_max]`; derived from the inputs
    /// when absent.
    pub bounds: Option<[f64; 4]>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { width: 800, height: 800, bounds: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl Image {
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    fn put(&mut self, x: i64, y: i64, color: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            self.pixels[y as usize * self.width + x as usize] = color;
        }
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for px in &self.pixels {
            out.extend_from_slice(px);
        }
        out
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_ppm()).map_err(|e| CliError::unwritable(path, e))
    }
}

/// World to pixel mapping with equal scale on both axes, +y up.
#[derive(Debug, Clone, Copy)]
struct View {
    x_min: f64,
    y_max: f64,
    scale: f64,
}

impl View {
    fn new(bounds: [f64; 4], width: usize, height: usize) -> Self {
        let [x0, y0, x1, y1] = bounds;
        let scale = (width as f64 / (x1 - x0)).min(height as f64 / (y1 - y0));
        // center the window on the image
        let cx = 0.5 * (x0 + x1);
        let cy = 0.5 * (y0 + y1);
        View { x_min: cx - 0.5 * width as f64 / scale, y_max: cy + 0.5 * height as f64 / scale, scale }
    }

    fn to_pixel(self, x: f64, y: f64) -> (i64, i64) {
        (((x - self.x_min) * self.scale).floor() as i64, ((self.y_max - y) * self.scale).floor() as i64)
    }

    fn to_world(self, px: usize, py: usize) -> (f64, f64) {
        (self.x_min + (px as f64 + 0.5) / self.scale, self.y_max - (py as f64 + 0.5) / self.scale)
    }
}

fn derive_bounds(cloud: Option<&PointCloud>, detections: &[Detection], grid: Option<&OccupancyGrid>) -> [f64; 4] {
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    let mut add = |x: f64, y: f64| {
        b = [b[0].min(x), b[1].min(y), b[2].max(x), b[3].max(y)];
    };
    if let Some(g) = grid {
        let (w, h) = (g.width() as f64 * g.resolution(), g.height() as f64 * g.resolution());
        for (lx, ly) in [(0.0, 0.0), (w, 0.0), (0.0, h), (w, h)] {
            let (x, y) = g.from_local(lx, ly);
            add(x, y);
        }
    } else {
        for p in cloud.map(|c| c.points()).unwrap_or(&[]) {
            add(p.x, p.y);
        }
        for d in detections {
            for [x, y] in d.footprint_corners() {
                add(x, y);
            }
        }
    }
    if !b.iter().all(|v| v.is_finite()) {
        return [-10.0, -10.0, 10.0, 10.0];
    }
    let margin = 0.05 * (b[2] - b[0]).max(b[3] - b[1]).max(1.0);
    [b[0] - margin, b[1] - margin, b[2] + margin, b[3] + margin]
}

/// Draws map cells as shades, points as single red pixels and each detection
/// footprint as a green outline. Output depends only on the inputs.
pub fn render_topdown(
    cloud: Option<&PointCloud>,
    detections: &[Detection],
    grid: Option<&OccupancyGrid>,
    options: &RenderOptions,
) -> Image {
    let (w, h) = (options.width.max(1), options.height.max(1));
    let bounds = options.bounds.unwrap_or_else(|| derive_bounds(cloud, detections, grid));
    let view = View::new(bounds, w, h);
    let mut img = Image { width: w, height: h, pixels: vec![OUTSIDE; w * h] };

    if let Some(g) = grid {
        for py in 0..h {
            for px in 0..w {
                let (x, y) = view.to_world(px, py);
                img.pixels[py * w + px] = match g.state_at(x, y) {
                    Some(CellState::Free) => FREE,
                    Some(CellState::Occupied) => OCCUPIED,
                    Some(CellState::Unknown) => UNKNOWN,
                    None => OUTSIDE,
                };
            }
        }
    }
    if let Some(c) = cloud {
        for p in c.points() {
            let (px, py) = view.to_pixel(p.x, p.y);
            img.put(px, py, POINT);
        }
    }
    for d in detections {
        let corners = d.footprint_corners().map(|[x, y]| view.to_pixel(x, y));
        for i in 0..4 {
            line(&mut img, corners[i], corners[(i + 1) % 4], OUTLINE);
        }
    }
    img
}

/// Bresenham line, clipped per pixel.
fn line(img: &mut Image, (mut x0, mut y0): (i64, i64), (x1, y1): (i64, i64), color: [u8; 3]) {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    // cap the walk so a wildly off-screen segment cannot stall
    for _ in 0..=(dx - dy).min(1 << 16) {
        img.put(x0, y0, color);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use obsdet_core::Point3;

    fn count(img: &Image, color: [u8; 3]) -> usize {
        img.pixels.iter().filter(|p| **p == color).count()
    }

    #[test]
    fn empty_inputs_give_background_of_requested_size() {
        let opts = RenderOptions { width: 40, height: 30, bounds: None };
        let img = render_topdown(None, &[], None, &opts);
        assert_eq!((img.width, img.height), (40, 30));
        assert_eq!(count(&img, OUTSIDE), 1200);
        assert!(img.to_ppm().starts_with(b"P6\n40 30\n255\n"));
        assert_eq!(img.to_ppm().len(), 13 + 1200 * 3);
    }

    #[test]
    fn one_detection_one_closed_outline() {
        let det = Detection::new(Point3::new(0.0, 0.0, 0.5), [4.0, 2.0, 1.0], 0.3, 10, 0).unwrap();
        let opts = RenderOptions { width: 100, height: 100, bounds: Some([-5.0, -5.0, 5.0, 5.0]) };
        let img = render_topdown(None, &[det], None, &opts);
        // the rectangle's interior stays background and its center is enclosed
        assert_eq!(img.get(50, 50), OUTSIDE);
        let outline = count(&img, OUTLINE);
        assert!(outline > 100 && outline < 160, "{outline} outline pixels");
        // every row between the top and bottom corner crosses the outline twice
        let rows: Vec<usize> = (0..100).filter(|&y| (0..100).any(|x| img.get(x, y) == OUTLINE)).collect();
        for &y in &rows[1..rows.len() - 1] {
            let xs: Vec<usize> = (0..100).filter(|&x| img.get(x, y) == OUTLINE).collect();
            assert!(xs.len() >= 2 && xs.windows(2).any(|w| w[1] > w[0] + 1), "row {y}");
        }
    }

    #[test]
    fn map_shades_follow_cells() {
        let mut grid = OccupancyGrid::filled(2, 1, 1.0, Default::default(), CellState::Free).unwrap();
        grid.set(1, 0, CellState::Occupied);
        let opts = RenderOptions { width: 20, height: 10, bounds: Some([0.0, 0.0, 2.0, 1.0]) };
        let img = render_topdown(None, &[], Some(&grid), &opts);
        assert_eq!(img.get(2, 5), FREE);
        assert_eq!(img.get(17, 5), OCCUPIED);
    }
}
