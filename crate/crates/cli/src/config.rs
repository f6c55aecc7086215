//! Pipeline configuration file (TOML).
//!
//! Every key is optional; missing keys take the defaults below. Angles are
//! radians, lengths meters.
//!
//! ```toml
//! floor_removal_enabled = true
//! map_filter_enabled = true
//! out_of_bounds_policy = "keep"      # or "drop"
//! stateless = false
//! map_metadata_path = "map.yaml"     # relative to this file
//!
//! [voxel]
//! leaf_size = 0.05
//! min_points_per_voxel = 1
//! representative = "centroid"        # or "cell_center"
//!
//! [ransac]
//! generator = "chacha8"
//! distance_threshold = 0.03
//! max_iterations = 100
//! seed = 42
//! max_normal_tilt = 0.2618
//! min_inlier_fraction = 0.05
//!
//! [cluster]
//! tolerance = 0.3
//! min_cluster_size = 10
//! max_cluster_size = 25000
//!
//! [obb]
//! angle_step = 0.008727
//! z_from_cluster = true
//!
//! [static_transform]
//! rotation = [1.0, 0.0, 0.0, 0.0]    # w, x, y, z
//! translation = [0.0, 0.0, 0.0]
//! parent_frame = "map"
//! child_frame = "sensor"
//! ```

use std::path::{Path, PathBuf};

use obsdet_core::cluster::{ClusterParams, ObbParams};
use obsdet_core::preprocess::{OutOfBoundsPolicy, RansacParams, Representative, VoxelParams, RANSAC_GENERATOR};
use obsdet_core::RigidTransform;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub floor_removal_enabled: bool,
    pub map_filter_enabled: bool,
    pub out_of_bounds_policy: PolicyName,
    pub stateless: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map_metadata_path: Option<PathBuf>,
    pub voxel: VoxelSection,
    pub ransac: RansacSection,
    pub cluster: ClusterSection,
    pub obb: ObbSection,
    pub static_transform: TransformSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            floor_removal_enabled: true,
            map_filter_enabled: true,
            out_of_bounds_policy: PolicyName::Keep,
            stateless: false,
            map_metadata_path: None,
            voxel: VoxelSection::default(),
            ransac: RansacSection::default(),
            cluster: ClusterSection::default(),
            obb: ObbSection::default(),
            static_transform: TransformSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    #[default]
    Keep,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentativeName {
    #[default]
    Centroid,
    CellCenter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoxelSection {
    pub leaf_size: f64,
    pub min_points_per_voxel: usize,
    pub representative: RepresentativeName,
}

impl Default for VoxelSection {
    fn default() -> Self {
        let d = VoxelParams::default();
        VoxelSection {
            leaf_size: d.leaf_size,
            min_points_per_voxel: d.min_points_per_voxel,
            representative: RepresentativeName::Centroid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacSection {
    pub generator: String,
    pub distance_threshold: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub max_normal_tilt: f64,
    pub min_inlier_fraction: f64,
}

impl Default for RansacSection {
    fn default() -> Self {
        let d = RansacParams::default();
        RansacSection {
            generator: RANSAC_GENERATOR.to_string(),
            distance_threshold: d.distance_threshold,
            max_iterations: d.max_iterations,
            seed: d.seed,
            max_normal_tilt: d.max_normal_tilt,
            min_inlier_fraction: d.min_inlier_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSection {
    pub tolerance: f64,
    pub min_cluster_size: usize,
    pub max_cluster_size: usize,
}

impl Default for ClusterSection {
    fn default() -> Self {
        let d = ClusterParams::default();
        ClusterSection {
            tolerance: d.tolerance,
            min_cluster_size: d.min_cluster_size,
            max_cluster_size: d.max_cluster_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObbSection {
    pub angle_step: f64,
    pub z_from_cluster: bool,
}

impl Default for ObbSection {
    fn default() -> Self {
        let d = ObbParams::default();
        ObbSection { angle_step: d.angle_step, z_from_cluster: d.z_from_cluster }
    }
}

/// Sensor-to-map pose as a quaternion `[w, x, y, z]` and translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformSection {
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
    pub parent_frame: String,
    pub child_frame: String,
}

impl Default for TransformSection {
    fn default() -> Self {
        TransformSection {
            rotation: [1.0, 0.0, 0.0, 0.0],
            translation: [0.0; 3],
            parent_frame: "map".into(),
            child_frame: "sensor".into(),
        }
    }
}

impl TransformSection {
    pub fn from_transform(tf: &RigidTransform) -> Self {
        TransformSection {
            rotation: tf.quaternion(),
            translation: tf.translation(),
            parent_frame: tf.parent_frame().into(),
            child_frame: tf.child_frame().into(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: PipelineConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads and validates a config file. A relative `map_metadata_path` is
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let Some(map) = &config.map_metadata_path {
            if map.is_relative() {
                let base = path.parent().unwrap_or(Path::new(""));
                config.map_metadata_path = Some(base.join(map));
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.ransac.generator != RANSAC_GENERATOR {
            return Err(CliError::Config(format!(
                "ransac.generator must be \"{RANSAC_GENERATOR}\", got \"{}\"",
                self.ransac.generator
            )));
        }
        self.voxel_params().validate()?;
        self.ransac_params().validate()?;
        self.cluster_params().validate()?;
        self.obb_params().validate()?;
        self.transform()?;
        Ok(())
    }

    pub fn voxel_params(&self) -> VoxelParams {
        VoxelParams {
            leaf_size: self.voxel.leaf_size,
            min_points_per_voxel: self.voxel.min_points_per_voxel,
            representative: match self.voxel.representative {
                RepresentativeName::Centroid => Representative::Centroid,
                RepresentativeName::CellCenter => Representative::CellCenter,
            },
        }
    }

    pub fn ransac_params(&self) -> RansacParams {
        RansacParams {
            distance_threshold: self.ransac.distance_threshold,
            max_iterations: self.ransac.max_iterations,
            seed: self.ransac.seed,
            max_normal_tilt: self.ransac.max_normal_tilt,
            min_inlier_fraction: self.ransac.min_inlier_fraction,
        }
    }

    pub fn cluster_params(&self) -> ClusterParams {
        ClusterParams {
            tolerance: self.cluster.tolerance,
            min_cluster_size: self.cluster.min_cluster_size,
            max_cluster_size: self.cluster.max_cluster_size,
        }
    }

    pub fn obb_params(&self) -> ObbParams {
        ObbParams { angle_step: self.obb.angle_step, z_from_cluster: self.obb.z_from_cluster }
    }

    pub fn out_of_bounds_policy(&self) -> OutOfBoundsPolicy {
        match self.out_of_bounds_policy {
            PolicyName::Keep => OutOfBoundsPolicy::Keep,
            PolicyName::Drop => OutOfBoundsPolicy::Drop,
        }
    }

    pub fn transform(&self) -> Result<RigidTransform> {
        let t = &self.static_transform;
        Ok(RigidTransform::new(t.rotation, t.translation, t.parent_frame.clone(), t.child_frame.clone())?)
    }
}
