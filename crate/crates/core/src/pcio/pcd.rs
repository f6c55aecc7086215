//! PCD v0.7 reader and writer (ascii and binary payloads).
//!
//! Only `x`, `y`, `z` are kept; any other declared fields are skipped. The
//! frame id and stamp of a cloud have no slot in the PCD header, so the
//! writer stores them as `# frame_id ...` / `# stamp ...` comment lines and
//! the reader picks them up when present.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};

/// Frame assigned to clouds whose file carries no `# frame_id` comment.
pub const DEFAULT_FRAME_ID: &str = "sensor";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataMode {
    Ascii,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldType {
    Float,
    Signed,
    Unsigned,
}

impl FieldType {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "F" => Ok(FieldType::Float),
            "I" => Ok(FieldType::Signed),
            "U" => Ok(FieldType::Unsigned),
            other => Err(Error::MalformedHeader(format!("unknown TYPE `{other}`"))),
        }
    }
}

/// Storage width of the xyz fields written by [`write_pcd_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldWidth {
    F32,
    #[default]
    F64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcdHeader {
    pub version: String,
    pub fields: Vec<String>,
    pub sizes: Vec<usize>,
    pub types: Vec<FieldType>,
    pub counts: Vec<usize>,
    pub width: usize,
    pub height: usize,
    pub viewpoint: [f64; 7],
    pub points: usize,
    pub data_mode: DataMode,
    pub frame_id: Option<String>,
    pub stamp: Option<u64>,
}

impl PcdHeader {
    /// Bytes per point in a binary payload.
    pub fn point_stride(&self) -> usize {
        self.sizes.iter().zip(&self.counts).map(|(s, c)| s * c).sum()
    }

    /// Scalars per point in an ascii payload.
    pub fn scalars_per_point(&self) -> usize {
        self.counts.iter().sum()
    }

    /// For each of x, y, z: (scalar offset, byte offset, byte size).
    fn xyz_layout(&self) -> Result<[(usize, usize, usize); 3]> {
        let mut out = [(0, 0, 0); 3];
        for (slot, name) in ["x", "y", "z"].iter().enumerate() {
            let i = self
                .fields
                .iter()
                .position(|f| f == name)
                .ok_or_else(|| Error::MalformedHeader(format!("missing field `{name}`")))?;
            if self.types[i] != FieldType::Float || !matches!(self.sizes[i], 4 | 8) {
                return Err(Error::MalformedHeader(format!(
                    "field `{name}` must be a 4- or 8-byte float"
                )));
            }
            if self.counts[i] != 1 {
                return Err(Error::MalformedHeader(format!("field `{name}` must have COUNT 1")));
            }
            let scalar: usize = self.counts[..i].iter().sum();
            let byte: usize = self.sizes[..i]
                .iter()
                .zip(&self.counts[..i])
                .map(|(s, c)| s * c)
                .sum();
            out[slot] = (scalar, byte, self.sizes[i]);
        }
        Ok(out)
    }
}

/// Parses the header; returns it together with the byte offset of the payload.
pub fn read_pcd_header(bytes: &[u8]) -> Result<(PcdHeader, usize)> {
    let mut version = String::from("0.7");
    let mut fields: Option<Vec<String>> = None;
    let mut sizes: Option<Vec<usize>> = None;
    let mut types: Option<Vec<FieldType>> = None;
    let mut counts: Option<Vec<usize>> = None;
    let mut width: Option<usize> = None;
    let mut height: Option<usize> = None;
    let mut viewpoint = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
    let mut points: Option<usize> = None;
    let mut frame_id = None;
    let mut stamp = None;

    let mut pos = 0;
    loop {
        if pos >= bytes.len() {
            return Err(Error::MalformedHeader("missing DATA line".into()));
        }
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map_or(bytes.len(), |n| pos + n);
        let line = std::str::from_utf8(&bytes[pos..end])
            .map_err(|_| Error::MalformedHeader("header is not valid UTF-8".into()))?
            .trim();
        pos = (end + 1).min(bytes.len());

        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(rest) = comment.strip_prefix("frame_id ") {
                frame_id = Some(rest.trim().to_owned());
            } else if let Some(rest) = comment.strip_prefix("stamp ") {
                stamp = Some(rest.trim().parse().map_err(|_| {
                    Error::MalformedHeader(format!("bad stamp comment `{rest}`"))
                })?);
            }
            continue;
        }

        let mut tokens = line.split_whitespace();
        let key = tokens.next().unwrap_or_default();
        let values: Vec<&str> = tokens.collect();
        match key {
            "VERSION" => version = values.first().copied().unwrap_or("").to_owned(),
            "FIELDS" => fields = Some(values.iter().map(|s| s.to_string()).collect()),
            "SIZE" => sizes = Some(parse_list(key, &values)?),
            "TYPE" => types = Some(values.iter().map(|s| FieldType::parse(s)).collect::<Result<_>>()?),
            "COUNT" => counts = Some(parse_list(key, &values)?),
            "WIDTH" => width = Some(parse_single(key, &values)?),
            "HEIGHT" => height = Some(parse_single(key, &values)?),
            "POINTS" => points = Some(parse_single(key, &values)?),
            "VIEWPOINT" => {
                let v: Vec<f64> = parse_list(key, &values)?;
                viewpoint = v
                    .try_into()
                    .map_err(|_| Error::MalformedHeader("VIEWPOINT needs 7 values".into()))?;
            }
            "DATA" => {
                let mode = match values.first().copied() {
                    Some("ascii") => DataMode::Ascii,
                    Some("binary") => DataMode::Binary,
                    Some(other) => return Err(Error::UnsupportedDataMode(other.to_owned())),
                    None => return Err(Error::MalformedHeader("DATA without a mode".into())),
                };
                let fields = fields.ok_or_else(|| missing("FIELDS"))?;
                let sizes = sizes.ok_or_else(|| missing("SIZE"))?;
                let types = types.ok_or_else(|| missing("TYPE"))?;
                let counts = counts.unwrap_or_else(|| vec![1; fields.len()]);
                if sizes.len() != fields.len() || types.len() != fields.len() || counts.len() != fields.len() {
                    return Err(Error::MalformedHeader(
                        "FIELDS, SIZE, TYPE and COUNT lengths differ".into(),
                    ));
                }
                let width = width.ok_or_else(|| missing("WIDTH"))?;
                let height = height.unwrap_or(1);
                let points = points.unwrap_or(width * height);
                if width * height != points {
                    return Err(Error::MalformedHeader(format!(
                        "WIDTH {width} x HEIGHT {height} != POINTS {points}"
                    )));
                }
                let header = PcdHeader {
                    version,
                    fields,
                    sizes,
                    types,
                    counts,
                    width,
                    height,
                    viewpoint,
                    points,
                    data_mode: mode,
                    frame_id,
                    stamp,
                };
                return Ok((header, pos));
            }
            other => {
                return Err(Error::MalformedHeader(format!("unknown header key `{other}`")));
            }
        }
    }
}

fn missing(key: &str) -> Error {
    Error::MalformedHeader(format!("missing {key} line"))
}

fn parse_list<T: std::str::FromStr>(key: &str, values: &[&str]) -> Result<Vec<T>> {
    values
        .iter()
        .map(|v| {
            v.parse()
                .map_err(|_| Error::MalformedHeader(format!("bad {key} value `{v}`")))
        })
        .collect()
}

fn parse_single<T: std::str::FromStr>(key: &str, values: &[&str]) -> Result<T> {
    match values {
        [v] => v
            .parse()
            .map_err(|_| Error::MalformedHeader(format!("bad {key} value `{v}`"))),
        _ => Err(Error::MalformedHeader(format!("{key} takes exactly one value"))),
    }
}

/// Decodes a PCD file into a cloud, keeping only xyz in file order.
pub fn read_pcd(bytes: &[u8]) -> Result<PointCloud> {
    let (header, offset) = read_pcd_header(bytes)?;
    let layout = header.xyz_layout()?;
    let body = &bytes[offset..];
    let points = match header.data_mode {
        DataMode::Binary => read_binary_body(&header, &layout, body)?,
        DataMode::Ascii => read_ascii_body(&header, &layout, body)?,
    };
    PointCloud::new(
        points,
        header.frame_id.as_deref().unwrap_or(DEFAULT_FRAME_ID),
        header.stamp.unwrap_or(0),
    )
}

fn read_binary_body(
    header: &PcdHeader,
    layout: &[(usize, usize, usize); 3],
    body: &[u8],
) -> Result<Vec<Point3>> {
    let stride = header.point_stride();
    if header.points > 0 && stride == 0 {
        return Err(Error::MalformedHeader("zero-sized point record".into()));
    }
    let available = body.len().checked_div(stride).unwrap_or(0);
    if available < header.points {
        return Err(Error::TruncatedBody {
            declared: header.points,
            available,
        });
    }
    let read = |rec: &[u8], (_, off, size): (usize, usize, usize)| -> f64 {
        if size == 8 {
            f64::from_le_bytes(rec[off..off + 8].try_into().unwrap())
        } else {
            f32::from_le_bytes(rec[off..off + 4].try_into().unwrap()) as f64
        }
    };
    Ok(body
        .chunks_exact(stride)
        .take(header.points)
        .map(|rec| {
            Point3::new(
                read(rec, layout[0]),
                read(rec, layout[1]),
                read(rec, layout[2]),
            )
        })
        .collect())
}

fn read_ascii_body(
    header: &PcdHeader,
    layout: &[(usize, usize, usize); 3],
    body: &[u8],
) -> Result<Vec<Point3>> {
    let text = std::str::from_utf8(body)
        .map_err(|_| Error::MalformedBody("ascii payload is not valid UTF-8".into()))?;
    let per_point = header.scalars_per_point();
    let mut points = Vec::with_capacity(header.points);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    for n in 0..header.points {
        let Some(line) = lines.next() else {
            return Err(Error::TruncatedBody {
                declared: header.points,
                available: n,
            });
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != per_point {
            return Err(Error::MalformedBody(format!(
                "point {n}: expected {per_point} values, found {}",
                tokens.len()
            )));
        }
        let coord = |(scalar, _, _): (usize, usize, usize)| -> Result<f64> {
            tokens[scalar]
                .parse::<f64>()
                .map_err(|_| Error::MalformedBody(format!("point {n}: bad number `{}`", tokens[scalar])))
        };
        points.push(Point3::new(coord(layout[0])?, coord(layout[1])?, coord(layout[2])?));
    }
    Ok(points)
}

/// Encodes a cloud with full-width (8-byte) xyz fields.
pub fn write_pcd(cloud: &PointCloud, mode: DataMode) -> Vec<u8> {
    write_pcd_with(cloud, mode, FieldWidth::F64)
}

pub fn write_pcd_with(cloud: &PointCloud, mode: DataMode, width: FieldWidth) -> Vec<u8> {
    let n = cloud.len();
    let size = match width {
        FieldWidth::F32 => 4,
        FieldWidth::F64 => 8,
    };
    let mut header = String::new();
    header.push_str("# .PCD v0.7 - Point Cloud Data file format\n");
    let _ = writeln!(header, "# frame_id {}", cloud.frame_id());
    let _ = writeln!(header, "# stamp {}", cloud.stamp());
    header.push_str("VERSION 0.7\nFIELDS x y z\n");
    let _ = writeln!(header, "SIZE {size} {size} {size}");
    header.push_str("TYPE F F F\nCOUNT 1 1 1\n");
    let _ = writeln!(header, "WIDTH {n}\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS {n}");
    let _ = writeln!(
        header,
        "DATA {}",
        match mode {
            DataMode::Ascii => "ascii",
            DataMode::Binary => "binary",
        }
    );

    let mut out = header.into_bytes();
    match mode {
        DataMode::Binary => {
            out.reserve(n * 3 * size);
            for p in cloud.points() {
                for v in [p.x, p.y, p.z] {
                    match width {
                        FieldWidth::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
                        FieldWidth::F64 => out.extend_from_slice(&v.to_le_bytes()),
                    }
                }
            }
        }
        DataMode::Ascii => {
            // shortest round-trip decimal forms; never more than 9 significant digits for f32
            let mut body = String::with_capacity(n * 30);
            for p in cloud.points() {
                match width {
                    FieldWidth::F32 => {
                        let _ = writeln!(body, "{} {} {}", p.x as f32, p.y as f32, p.z as f32);
                    }
                    FieldWidth::F64 => {
                        let _ = writeln!(body, "{} {} {}", p.x, p.y, p.z);
                    }
                }
            }
            out.extend_from_slice(body.as_bytes());
        }
    }
    out
}
