//! Clustering stage: KD-tree index, Euclidean cluster extraction and
//! oriented box fitting.

mod kdtree;
mod obb;

pub use kdtree::KdTree;
pub use obb::{convex_hull, fit_obb, min_area_rect_calipers, ObbParams, RectFit, MIN_EXTENT};

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams {
    /// Linkage distance, meters.
    pub tolerance: f64,
    pub min_cluster_size: usize,
    pub max_cluster_size: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            tolerance: 0.3,
            min_cluster_size: 10,
            max_cluster_size: 25_000,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidParams(format!(
                "cluster tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.min_cluster_size == 0 || self.min_cluster_size > self.max_cluster_size {
            return Err(Error::InvalidParams(format!(
                "cluster sizes must satisfy 1 <= min ({}) <= max ({})",
                self.min_cluster_size, self.max_cluster_size
            )));
        }
        Ok(())
    }
}

/// Builds the KD-tree over a cloud's points.
pub fn build_kdtree(cloud: &PointCloud) -> KdTree {
    KdTree::build(cloud)
}

/// Ascending indices of the points within `radius` of `query`.
pub fn radius_search(tree: &KdTree, query: &Point3, radius: f64) -> Vec<usize> {
    tree.radius_search(query, radius)
}

/// Connected components of the graph linking points at most `tolerance`
/// apart. Components outside `[min_cluster_size, max_cluster_size]` are
/// dropped; each cluster is ascending and clusters are ordered by their
/// smallest member.
pub fn euclidean_cluster(cloud: &PointCloud, params: &ClusterParams) -> Result<Vec<Vec<usize>>> {
    params.validate()?;
    let tree = KdTree::build(cloud);
    Ok(euclidean_cluster_with(&tree, cloud.points(), params))
}

/// Same as [`euclidean_cluster`] over a prebuilt tree of `points`.
pub fn euclidean_cluster_with(tree: &KdTree, points: &[Point3], params: &ClusterParams) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut visited = vec![false; n];
    let mut clusters = Vec::new();
    let mut neighbors = Vec::new();
    // seeds are taken in index order, so each seed is its component's minimum
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        let mut members = vec![seed];
        let mut head = 0;
        while head < members.len() {
            let current = members[head];
            head += 1;
            neighbors.clear();
            tree.radius_search_into(&points[current], params.tolerance, &mut neighbors);
            for &j in &neighbors {
                if !visited[j] {
                    visited[j] = true;
                    members.push(j);
                }
            }
        }
        if (params.min_cluster_size..=params.max_cluster_size).contains(&members.len()) {
            members.sort_unstable();
            clusters.push(members);
        }
    }
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: Vec<Point3>) -> PointCloud {
        PointCloud::new(points, "map", 0).unwrap()
    }

    #[test]
    fn far_apart_points_are_singletons() {
        let params = ClusterParams { tolerance: 0.1, min_cluster_size: 1, max_cluster_size: 10 };
        let c = cloud(vec![Point3::ORIGIN, Point3::new(1.0, 0.0, 0.0)]);
        assert_eq!(euclidean_cluster(&c, &params).unwrap(), vec![vec![0], vec![1]]);
    }

    #[test]
    fn chain_links_transitively() {
        let params = ClusterParams { tolerance: 0.1, min_cluster_size: 1, max_cluster_size: 100 };
        // shuffled order along the chain
        let order = [5, 0, 9, 3, 7, 1, 8, 2, 6, 4];
        let c = cloud(order.iter().map(|&k| Point3::new(k as f64 * 0.09, 0.0, 0.0)).collect());
        assert_eq!(euclidean_cluster(&c, &params).unwrap(), vec![(0..10).collect::<Vec<_>>()]);
    }

    #[test]
    fn size_limits_filter_components() {
        let mut pts: Vec<Point3> = (0..5).map(|i| Point3::new(i as f64 * 0.05, 0.0, 0.0)).collect();
        pts.push(Point3::new(10.0, 0.0, 0.0));
        pts.extend((0..3).map(|i| Point3::new(20.0 + i as f64 * 0.05, 0.0, 0.0)));
        let c = cloud(pts);
        let params = ClusterParams { tolerance: 0.1, min_cluster_size: 2, max_cluster_size: 4 };
        assert_eq!(euclidean_cluster(&c, &params).unwrap(), vec![vec![6, 7, 8]]);
    }

    #[test]
    fn invalid_params() {
        let c = cloud(vec![]);
        for params in [
            ClusterParams { tolerance: 0.0, ..Default::default() },
            ClusterParams { min_cluster_size: 0, ..Default::default() },
            ClusterParams { min_cluster_size: 5, max_cluster_size: 4, ..Default::default() },
        ] {
            assert!(euclidean_cluster(&c, &params).is_err());
        }
        assert!(euclidean_cluster(&c, &ClusterParams::default()).unwrap().is_empty());
    }
}
