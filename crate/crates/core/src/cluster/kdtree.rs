//! Static 3-d tree for exact radius queries.
//!
//! The tree is implicit: points are permuted so that every subrange
//! `[lo, hi)` stores its splitting point at `mid = (lo + hi) / 2`, left
//! children in `[lo, mid)` and right children in `(mid, hi)`. Small ranges
//! are scanned linearly.

use std::cmp::Ordering;

use crate::geometry::{Point3, PointCloud};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
pub struct KdTree {
    /// Points in tree order.
    points: Vec<Point3>,
    /// Source index of each slot in `points`.
    indices: Vec<usize>,
    /// Split axis of the node whose splitting point sits in this slot.
    axes: Vec<u8>,
}

impl KdTree {
    /// Builds a median-split tree: each node splits on the axis of largest
    /// extent (first of x, y, z on ties), ordering equal coordinates by
    /// source index.
    pub fn build(cloud: &PointCloud) -> KdTree {
        Self::from_points(cloud.points())
    }

    pub fn from_points(points: &[Point3]) -> KdTree {
        let mut items: Vec<(Point3, usize)> = points.iter().copied().zip(0..).collect();
        let mut axes = vec![0u8; items.len()];
        build_range(&mut items, &mut axes);
        let (points, indices) = items.into_iter().unzip();
        KdTree { points, indices, axes }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Source indices held by the tree, in tree order.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Ascending indices of every point with `|p - query| <= radius`.
    pub fn radius_search(&self, query: &Point3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.radius_search_into(query, radius, &mut out);
        out.sort_unstable();
        out
    }

    /// Appends matching indices to `out` in tree order (unsorted).
    pub fn radius_search_into(&self, query: &Point3, radius: f64, out: &mut Vec<usize>) {
        if self.points.is_empty() || radius.is_nan() || radius < 0.0 {
            return;
        }
        let r2 = radius * radius;
        let mut stack: Vec<(usize, usize)> = Vec::with_capacity(64);
        stack.push((0, self.points.len()));
        while let Some((lo, hi)) = stack.pop() {
            if hi - lo <= LEAF_SIZE {
                for slot in lo..hi {
                    if self.points[slot].distance_squared(query) <= r2 {
                        out.push(self.indices[slot]);
                    }
                }
                continue;
            }
            let mid = lo + (hi - lo) / 2;
            let split = &self.points[mid];
            if split.distance_squared(query) <= r2 {
                out.push(self.indices[mid]);
            }
            let axis = self.axes[mid] as usize;
            let diff = query.coord(axis) - split.coord(axis);
            let near_left = diff <= 0.0;
            let far_reachable = diff * diff <= r2;
            if near_left {
                if far_reachable && mid + 1 < hi {
                    stack.push((mid + 1, hi));
                }
                stack.push((lo, mid));
            } else {
                if far_reachable {
                    stack.push((lo, mid));
                }
                if mid + 1 < hi {
                    stack.push((mid + 1, hi));
                }
            }
        }
    }
}

fn build_range(items: &mut [(Point3, usize)], axes: &mut [u8]) {
    let n = items.len();
    if n <= LEAF_SIZE {
        return;
    }
    let axis = widest_axis(items);
    let mid = n / 2;
    items.select_nth_unstable_by(mid, |a, b| cmp_on_axis(a, b, axis));
    axes[mid] = axis as u8;
    let (left, rest) = items.split_at_mut(mid);
    let (left_axes, rest_axes) = axes.split_at_mut(mid);
    build_range(left, left_axes);
    build_range(&mut rest[1..], &mut rest_axes[1..]);
}

fn widest_axis(items: &[(Point3, usize)]) -> usize {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for (p, _) in items {
        for a in 0..3 {
            let v = p.coord(a);
            lo[a] = lo[a].min(v);
            hi[a] = hi[a].max(v);
        }
    }
    let mut best = 0;
    for a in 1..3 {
        if hi[a] - lo[a] > hi[best] - lo[best] {
            best = a;
        }
    }
    best
}

#[inline]
fn cmp_on_axis(a: &(Point3, usize), b: &(Point3, usize), axis: usize) -> Ordering {
    a.0.coord(axis)
        .total_cmp(&b.0.coord(axis))
        .then(a.1.cmp(&b.1))
}
