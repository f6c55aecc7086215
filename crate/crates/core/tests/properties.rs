use obsdet_core::cluster::{euclidean_cluster, fit_obb, ClusterParams, ObbParams};
use obsdet_core::mapping::mark_detections;
use obsdet_core::pcio::{read_pcd, write_pcd, DataMode};
use obsdet_core::preprocess::{filter_by_map, voxel_downsample, voxel_key, OutOfBoundsPolicy, VoxelParams};
use obsdet_core::{transform_cloud, CellState, Detection, Point3, PointCloud, RigidTransform};
use obsdet_testkit as kit;
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = f64> {
    -50.0..50.0f64
}

fn point() -> impl Strategy<Value = Point3> {
    (coord(), coord(), coord()).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn points(max: usize) -> impl Strategy<Value = Vec<Point3>> {
    prop::collection::vec(point(), 0..max)
}

fn transform() -> impl Strategy<Value = RigidTransform> {
    (prop::array::uniform4(-1.0..1.0f64), prop::array::uniform3(-10.0..10.0f64))
        .prop_filter("nonzero quaternion", |(q, _)| q.iter().map(|v| v * v).sum::<f64>() > 1e-3)
        .prop_map(|(q, t)| RigidTransform::new(q, t, "map", "sensor").unwrap())
}

proptest! {
    #[test]
    fn transform_preserves_distances(pts in points(40), tf in transform()) {
        let cloud = PointCloud::new(pts.clone(), "sensor", 0).unwrap();
        let out = transform_cloud(&cloud, &tf).unwrap();
        prop_assert_eq!(out.frame_id(), "map");
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let before = pts[i].distance(&pts[j]);
                let after = out.points()[i].distance(&out.points()[j]);
                prop_assert!((before - after).abs() <= 1e-9 * (1.0 + before));
            }
        }
    }

    #[test]
    fn inverse_round_trips(pts in points(40), tf in transform()) {
        let cloud = PointCloud::new(pts, "sensor", 3).unwrap();
        let back = transform_cloud(&transform_cloud(&cloud, &tf).unwrap(), &tf.inverse()).unwrap();
        prop_assert_eq!(back.frame_id(), "sensor");
        prop_assert_eq!(back.stamp(), 3);
        for (a, b) in cloud.points().iter().zip(back.points()) {
            prop_assert!(a.distance(b) <= 1e-9);
        }
    }

    #[test]
    fn pcd_binary_bytes_are_stable(pts in points(100), stamp in any::<u64>()) {
        let cloud = PointCloud::new(pts, "sensor", stamp).unwrap();
        let bytes = write_pcd(&cloud, DataMode::Binary);
        let back = read_pcd(&bytes).unwrap();
        prop_assert_eq!(back.points(), cloud.points());
        prop_assert_eq!(write_pcd(&back, DataMode::Binary), bytes);
    }

    #[test]
    fn voxel_output_one_point_per_cell(pts in points(300), leaf in 0.1..5.0f64) {
        let cloud = PointCloud::new(pts, "sensor", 0).unwrap();
        let params = VoxelParams { leaf_size: leaf, ..Default::default() };
        let out = voxel_downsample(&cloud, &params).unwrap();
        prop_assert!(out.len() <= cloud.len());
        let mut keys: Vec<_> = out.points().iter().map(|p| voxel_key(p, leaf)).collect();
        let n = keys.len();
        keys.dedup();
        // already strictly ordered, so no duplicates were removed
        prop_assert_eq!(keys.len(), n);
        prop_assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn map_filter_is_order_preserving_subsequence(seed in any::<u64>(), n in 0usize..400) {
        let mut rng = kit::rng(seed);
        let grid = kit::random_grid(&mut rng, 20, 15);
        let pts = kit::points_over_grid(&mut rng, &grid, n);
        let cloud = PointCloud::new(pts.clone(), "map", 0).unwrap();
        let out = filter_by_map(&cloud, &grid, OutOfBoundsPolicy::Keep).unwrap();
        let mut it = pts.iter();
        for p in out.points() {
            prop_assert!(it.any(|q| q == p));
            if let Some((c, r)) = grid.world_to_cell(p.x, p.y) {
                prop_assert_ne!(grid.get(c, r), CellState::Occupied);
            }
        }
        let again = filter_by_map(&out, &grid, OutOfBoundsPolicy::Keep).unwrap();
        prop_assert_eq!(again.points(), out.points());
    }

    #[test]
    fn clusters_are_disjoint_and_sized(pts in points(200), tol in 0.5..10.0f64, min in 1usize..5) {
        let cloud = PointCloud::new(pts, "map", 0).unwrap();
        let params = ClusterParams { tolerance: tol, min_cluster_size: min, max_cluster_size: 150 };
        let clusters = euclidean_cluster(&cloud, &params).unwrap();
        let mut seen = vec![false; cloud.len()];
        for c in &clusters {
            prop_assert!(c.len() >= min && c.len() <= 150);
            prop_assert!(c.windows(2).all(|w| w[0] < w[1]));
            for &i in c {
                prop_assert!(!seen[i]);
                seen[i] = true;
            }
        }
        prop_assert!(clusters.windows(2).all(|w| w[0][0] < w[1][0]));
    }

    #[test]
    fn obb_contains_cluster(seed in any::<u64>(), n in 1usize..80) {
        let mut rng = kit::rng(seed);
        let pts2 = kit::random_cluster_2d(&mut rng, n);
        let pts: Vec<Point3> = pts2.iter().enumerate().map(|(i, &[x, y])| Point3::new(x, y, i as f64 * 0.01)).collect();
        let cloud = PointCloud::new(pts, "map", 0).unwrap();
        let idx: Vec<usize> = (0..n).collect();
        let det = fit_obb(&cloud, &idx, &ObbParams::default()).unwrap();
        prop_assert!((0.0..std::f64::consts::FRAC_PI_2).contains(&det.yaw()));
        prop_assert!(det.extents().iter().all(|&e| e > 0.0));
        prop_assert!(kit::footprint_contains_all(&det, &pts2, 1e-9));
        prop_assert_eq!(det.point_count(), n);
    }

    #[test]
    fn marking_is_monotone_and_idempotent(seed in any::<u64>(), x in -3.0..3.0f64, y in -3.0..3.0f64,
                                          l in 0.05..2.0f64, w in 0.05..2.0f64, yaw in 0.0..6.3f64) {
        let mut rng = kit::rng(seed);
        let grid = kit::random_grid(&mut rng, 30, 30);
        let det = Detection::new(Point3::new(x, y, 0.0), [l, w, 1.0], yaw, 5, 0).unwrap();
        let once = mark_detections(&grid, std::slice::from_ref(&det));
        for (before, after) in grid.cells().iter().zip(once.cells()) {
            prop_assert!(before == after || *after == CellState::Occupied);
        }
        prop_assert_eq!(mark_detections(&once, &[det]), once);
    }
}
