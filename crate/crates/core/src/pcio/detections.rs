//! Detection output as newline-delimited JSON, one record per line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Detection, Point3};

pub const SCHEMA_VERSION: u32 = 1;

/// Flat, serializable form of a [`Detection`] tagged with its frame stamp.
/// Field order here is the on-disk order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub schema_version: u32,
    pub stamp: u64,
    pub cluster_id: usize,
    pub center: [f64; 3],
    pub extents: [f64; 3],
    pub yaw: f64,
    pub point_count: usize,
}

impl DetectionRecord {
    pub fn new(detection: &Detection, stamp: u64) -> Self {
        DetectionRecord {
            schema_version: SCHEMA_VERSION,
            stamp,
            cluster_id: detection.cluster_id(),
            center: detection.center().into(),
            extents: detection.extents(),
            yaw: detection.yaw(),
            point_count: detection.point_count(),
        }
    }

    pub fn to_detection(&self) -> Result<Detection> {
        Detection::new(
            Point3::from(self.center),
            self.extents,
            self.yaw,
            self.point_count,
            self.cluster_id,
        )
    }
}

pub fn write_detections(records: &[DetectionRecord]) -> Vec<u8> {
    let mut out = Vec::with_capacity(records.len() * 200);
    for r in records {
        // a record of plain numbers always serializes
        serde_json::to_writer(&mut out, r).expect("detection record serializes");
        out.push(b'\n');
    }
    out
}

pub fn read_detections(bytes: &[u8]) -> Result<Vec<DetectionRecord>> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::MalformedRecord {
        line: 0,
        message: "output is not valid UTF-8".into(),
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::MalformedRecord {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> DetectionRecord {
        let d = Detection::new(Point3::new(1.0, -2.5, 0.3), [0.7, 0.4, 0.6], 0.25, 42, 3).unwrap();
        DetectionRecord::new(&d, 1_700_000_000_123_456_789)
    }

    #[test]
    fn empty_sequence_writes_nothing() {
        assert!(write_detections(&[]).is_empty());
        assert!(read_detections(b"").unwrap().is_empty());
    }

    #[test]
    fn one_record_round_trip() {
        let r = record();
        let bytes = write_detections(&[r]);
        assert_eq!(read_detections(&bytes).unwrap(), vec![r]);
        assert_eq!(r.to_detection().unwrap().cluster_id(), 3);
    }

    #[test]
    fn field_order_is_stable() {
        let line = String::from_utf8(write_detections(&[record()])).unwrap();
        let keys = ["schema_version", "stamp", "cluster_id", "center", "extents", "yaw", "point_count"];
        let positions: Vec<usize> = keys.iter().map(|k| line.find(&format!("\"{k}\"")).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{line}");
        assert!(line.ends_with('\n'));
    }

    #[test]
    fn malformed_line_reports_position() {
        let mut bytes = write_detections(&[record()]);
        bytes.extend_from_slice(b"{not json}\n");
        assert!(matches!(read_detections(&bytes), Err(Error::MalformedRecord { line: 2, .. })));
    }
}
