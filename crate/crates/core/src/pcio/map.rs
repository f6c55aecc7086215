//! Occupancy maps on disk: a YAML metadata file next to a binary PGM (P5).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mapping::{CellState, GridOrigin, OccupancyGrid};

pub const DEFAULT_OCCUPIED_THRESH: f64 = 0.65;
pub const DEFAULT_FREE_THRESH: f64 = 0.196;

/// Pixel values used when saving each state.
pub const OCCUPIED_PIXEL: u8 = 0;
pub const FREE_PIXEL: u8 = 255;
pub const UNKNOWN_PIXEL: u8 = 205;

#[derive(Debug, Clone, PartialEq)]
pub struct MapMetadata {
    pub image_path: String,
    pub resolution: f64,
    /// `(x, y, yaw)` of the cell (0, 0) corner.
    pub origin: [f64; 3],
    pub negate: bool,
    pub occupied_thresh: f64,
    pub free_thresh: f64,
}

#[derive(Deserialize)]
struct RawMetadata {
    image: String,
    resolution: f64,
    origin: Vec<f64>,
    #[serde(default)]
    negate: u8,
    occupied_thresh: Option<f64>,
    free_thresh: Option<f64>,
}

impl MapMetadata {
    pub fn new(image_path: impl Into<String>, resolution: f64, origin: [f64; 3]) -> Self {
        MapMetadata {
            image_path: image_path.into(),
            resolution,
            origin,
            negate: false,
            occupied_thresh: DEFAULT_OCCUPIED_THRESH,
            free_thresh: DEFAULT_FREE_THRESH,
        }
    }

    /// Parses the YAML metadata document. Missing thresholds take the
    /// conventional defaults (0.65 / 0.196); unknown keys such as `mode` are ignored.
    pub fn from_yaml(text: &str) -> Result<Self> {
        let raw: RawMetadata =
            serde_yaml::from_str(text).map_err(|e| Error::MalformedMetadata(e.to_string()))?;
        let origin: [f64; 3] = match raw.origin.as_slice() {
            [x, y, yaw] => [*x, *y, *yaw],
            [x, y] => [*x, *y, 0.0],
            _ => {
                return Err(Error::MalformedMetadata(
                    "origin must be [x, y, yaw]".into(),
                ))
            }
        };
        let negate = match raw.negate {
            0 => false,
            1 => true,
            n => return Err(Error::MalformedMetadata(format!("negate must be 0 or 1, got {n}"))),
        };
        let meta = MapMetadata {
            image_path: raw.image,
            resolution: raw.resolution,
            origin,
            negate,
            occupied_thresh: raw.occupied_thresh.unwrap_or(DEFAULT_OCCUPIED_THRESH),
            free_thresh: raw.free_thresh.unwrap_or(DEFAULT_FREE_THRESH),
        };
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(Error::MalformedMetadata(format!(
                "resolution must be positive, got {}",
                self.resolution
            )));
        }
        if self.origin.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedMetadata("origin is not finite".into()));
        }
        let in_unit = |t: f64| (0.0..=1.0).contains(&t);
        if !(in_unit(self.free_thresh) && in_unit(self.occupied_thresh))
            || self.free_thresh >= self.occupied_thresh
        {
            return Err(Error::MalformedMetadata(format!(
                "thresholds must satisfy 0 <= free ({}) < occupied ({}) <= 1",
                self.free_thresh, self.occupied_thresh
            )));
        }
        Ok(())
    }

    pub fn to_yaml(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "image: {}", self.image_path);
        let _ = writeln!(s, "mode: trinary");
        let _ = writeln!(s, "resolution: {:?}", self.resolution);
        let _ = writeln!(
            s,
            "origin: [{:?}, {:?}, {:?}]",
            self.origin[0], self.origin[1], self.origin[2]
        );
        let _ = writeln!(s, "negate: {}", u8::from(self.negate));
        let _ = writeln!(s, "occupied_thresh: {:?}", self.occupied_thresh);
        let _ = writeln!(s, "free_thresh: {:?}", self.free_thresh);
        s
    }
}

struct Pgm<'a> {
    width: usize,
    height: usize,
    pixels: &'a [u8],
}

fn parse_pgm(bytes: &[u8]) -> Result<Pgm<'_>> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::BadMagic);
    }
    let mut pos = 2;
    let mut next_number = |what: &str| -> Result<u32> {
        // whitespace and `#` comments may separate header tokens
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::DimensionMismatch(format!("unreadable PGM {what}")))
    };
    let width = next_number("width")? as usize;
    let height = next_number("height")? as usize;
    let maxval = next_number("maxval")?;
    if maxval != 255 {
        return Err(Error::MaxvalUnsupported(maxval));
    }
    // exactly one whitespace byte separates maxval from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::DimensionMismatch("missing raster separator".into())),
    }
    let pixels = &bytes[pos..];
    if pixels.len() != width * height {
        return Err(Error::DimensionMismatch(format!(
            "{width}x{height} image needs {} bytes, found {}",
            width * height,
            pixels.len()
        )));
    }
    Ok(Pgm { width, height, pixels })
}

/// Decodes a map. Image row 0 is the top of the map (grid row `height - 1`).
pub fn load_occupancy_map(metadata: &MapMetadata, image_bytes: &[u8]) -> Result<OccupancyGrid> {
    metadata.validate()?;
    let pgm = parse_pgm(image_bytes)?;
    let mut cells = vec![CellState::Unknown; pgm.width * pgm.height];
    for (img_row, line) in pgm.pixels.chunks_exact(pgm.width.max(1)).enumerate().take(pgm.height) {
        let grid_row = pgm.height - 1 - img_row;
        for (col, &v) in line.iter().enumerate() {
            cells[grid_row * pgm.width + col] = classify_pixel(metadata, v);
        }
    }
    let [x, y, yaw] = metadata.origin;
    OccupancyGrid::from_cells(
        pgm.width,
        pgm.height,
        metadata.resolution,
        GridOrigin { x, y, yaw },
        cells,
    )
}

#[inline]
fn classify_pixel(metadata: &MapMetadata, v: u8) -> CellState {
    let v = f64::from(v);
    let p = if metadata.negate { v / 255.0 } else { (255.0 - v) / 255.0 };
    if p > metadata.occupied_thresh {
        CellState::Occupied
    } else if p < metadata.free_thresh {
        CellState::Free
    } else {
        CellState::Unknown
    }
}

/// Encodes a grid as trinary P5 plus metadata (image name `map.pgm`, default thresholds).
pub fn save_occupancy_map(grid: &OccupancyGrid) -> (MapMetadata, Vec<u8>) {
    let origin = grid.origin();
    let meta = MapMetadata::new("map.pgm", grid.resolution(), [origin.x, origin.y, origin.yaw]);
    let (w, h) = (grid.width(), grid.height());
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    bytes.reserve(w * h);
    for row in (0..h).rev() {
        for col in 0..w {
            bytes.push(match grid.get(col, row) {
                CellState::Occupied => OCCUPIED_PIXEL,
                CellState::Free => FREE_PIXEL,
                CellState::Unknown => UNKNOWN_PIXEL,
            });
        }
    }
    (meta, bytes)
}

/// Reads a map YAML file and the image it names (relative paths resolve
/// against the YAML file's directory).
pub fn read_map_file(yaml_path: impl AsRef<Path>) -> Result<(MapMetadata, OccupancyGrid)> {
    let yaml_path = yaml_path.as_ref();
    let text = std::fs::read_to_string(yaml_path).map_err(|e| Error::io(yaml_path, e))?;
    let meta = MapMetadata::from_yaml(&text)?;
    let image_path = resolve_image_path(yaml_path, &meta.image_path);
    let bytes = std::fs::read(&image_path).map_err(|e| Error::io(&image_path, e))?;
    let grid = load_occupancy_map(&meta, &bytes)?;
    Ok((meta, grid))
}

/// Writes `<stem>.yaml` and `<stem>.pgm` side by side; returns the YAML path.
pub fn write_map_files(grid: &OccupancyGrid, dir: impl AsRef<Path>, stem: &str) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let (mut meta, image) = save_occupancy_map(grid);
    meta.image_path = format!("{stem}.pgm");
    let image_path = dir.join(&meta.image_path);
    let yaml_path = dir.join(format!("{stem}.yaml"));
    std::fs::write(&image_path, image).map_err(|e| Error::io(&image_path, e))?;
    std::fs::write(&yaml_path, meta.to_yaml()).map_err(|e| Error::io(&yaml_path, e))?;
    Ok(yaml_path)
}

fn resolve_image_path(yaml_path: &Path, image: &str) -> PathBuf {
    let image = Path::new(image);
    if image.is_absolute() {
        image.to_path_buf()
    } else {
        yaml_path.parent().unwrap_or(Path::new(".")).join(image)
    }
}
