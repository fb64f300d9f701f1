use std::collections::HashMap;

use crate::Point3;

/// Store of visited configurations answering exact max-norm proximity.
///
/// Entries are bucketed by the voxel (edge `eps`) of the configuration's
/// centroid plus a caller-supplied tag. If every agent of two configurations
/// is within `eps` of its counterpart, so are their centroids, so probing the
/// 27 voxels around the query's centroid finds every candidate; each one is
/// then verified exactly.
#[derive(Debug, Clone)]
pub struct DuplicateIndex {
    eps: f64,
    n: usize,
    positions: Vec<Point3>,
    buckets: HashMap<([i64; 3], u32), Vec<u32>>,
}

impl DuplicateIndex {
    pub fn new(eps: f64, n: usize) -> Self {
        assert!(eps > 0.0 && n > 0);
        Self {
            eps,
            n,
            positions: Vec::new(),
            buckets: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn get(&self, id: usize) -> &[Point3] {
        &self.positions[id * self.n..(id + 1) * self.n]
    }

    fn voxel(&self, q: &[Point3]) -> [i64; 3] {
        let c = q.iter().sum::<Point3>() / q.len() as f64;
        [0, 1, 2].map(|k| (c[k] / self.eps).floor() as i64)
    }

    /// Id of some stored configuration with the same tag and every agent
    /// within `eps` of `q`.
    pub fn find(&self, q: &[Point3], tag: u32) -> Option<usize> {
        debug_assert_eq!(q.len(), self.n);
        let v = self.voxel(q);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let key = ([v[0] + dx, v[1] + dy, v[2] + dz], tag);
                    let Some(ids) = self.buckets.get(&key) else {
                        continue;
                    };
                    for &id in ids {
                        let other = self.get(id as usize);
                        if q.iter().zip(other).all(|(a, b)| (a - b).norm() <= self.eps) {
                            return Some(id as usize);
                        }
                    }
                }
            }
        }
        None
    }

    /// Stores `q` unconditionally and returns its id.
    pub fn insert(&mut self, q: &[Point3], tag: u32) -> usize {
        debug_assert_eq!(q.len(), self.n);
        let id = self.len();
        self.positions.extend_from_slice(q);
        let key = (self.voxel(q), tag);
        self.buckets.entry(key).or_default().push(id as u32);
        id
    }
}

/// True iff some visited configuration lies within `eps` of `q` in the
/// per-agent max norm.
pub fn is_duplicate(q: &[Point3], visited: &DuplicateIndex) -> bool {
    visited.find(q, 0).is_some()
}
