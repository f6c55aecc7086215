//! Obstacle detection on LiDAR point clouds.
//!
//! A frame flows through voxel-grid reduction, RANSAC floor removal, a
//! sensor-to-map transform, filtration against a known occupancy map, and
//! Euclidean clustering; each surviving cluster becomes a yawed box
//! ([`Detection`]) that can be stamped back into the map.
//!
//! ```
//! use obsdet_core::{cluster, Point3, PointCloud};
//!
//! let cloud = PointCloud::new(
//!     vec![Point3::new(0.0, 0.0, 0.0), Point3::new(0.1, 0.0, 0.0), Point3::new(5.0, 0.0, 0.0)],
//!     "map",
//!     0,
//! )?;
//! let params = cluster::ClusterParams { tolerance: 0.2, min_cluster_size: 1, max_cluster_size: 10 };
//! assert_eq!(cluster::euclidean_cluster(&cloud, &params)?, vec![vec![0, 1], vec![2]]);
//! # Ok::<(), obsdet_core::Error>(())
//! ```

pub mod cluster;
mod error;
pub mod geometry;
pub mod mapping;
pub mod pcio;
pub mod preprocess;

pub use error::{Error, Result};
pub use geometry::{compose, transform_cloud, Detection, Plane, Point3, PointCloud, RigidTransform};
pub use mapping::{CellState, GridOrigin, OccupancyGrid};
