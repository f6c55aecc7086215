//! Readers and writers for point-cloud frames, occupancy maps and detection
//! output.

mod detections;
mod map;
mod pcd;

pub use detections::{read_detections, write_detections, DetectionRecord, SCHEMA_VERSION};
pub use map::{
    load_occupancy_map, read_map_file, save_occupancy_map, write_map_files, MapMetadata,
    DEFAULT_FREE_THRESH, DEFAULT_OCCUPIED_THRESH, FREE_PIXEL, OCCUPIED_PIXEL, UNKNOWN_PIXEL,
};
pub use pcd::{
    read_pcd, read_pcd_header, write_pcd, write_pcd_with, DataMode, FieldType, FieldWidth,
    PcdHeader, DEFAULT_FRAME_ID,
};
