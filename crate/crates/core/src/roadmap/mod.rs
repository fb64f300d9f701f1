//! Per-agent coarse roadmaps: a collision-checked lattice, Dijkstra
//! cost-to-go towards the agent's target, and the obstacle-aware descent
//! direction estimated from radius neighbours.

mod kdtree;

pub use kdtree::KdTree;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use nalgebra::{Matrix3, Unit};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::workspace::{OccupancyGrid, Workspace};
use crate::Point3;

#[derive(Debug, Error, PartialEq)]
pub enum RoadmapError {
    #[error("target {0:?} is not collision-free")]
    TargetBlocked([f64; 3]),
    #[error("no collision-free roadmap vertex exists")]
    EmptyRoadmap,
    #[error("direction is not a unit vector (norm {0})")]
    NotUnit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoadmapParams {
    /// Lattice spacing in meters.
    pub lattice_h: f64,
    /// Radius within which the target is linked to lattice vertices.
    pub connect_radius: f64,
    /// Radius of the neighbourhood used for the descent estimate.
    pub neighbor_radius: f64,
}

impl Default for RoadmapParams {
    fn default() -> Self {
        Self {
            lattice_h: 0.5,
            connect_radius: 0.95,
            neighbor_radius: 1.0,
        }
    }
}

/// Collision-checked vertex set and edges shared by every agent with the
/// same radius at one build time.
#[derive(Debug, Clone)]
pub struct Lattice {
    vertices: Vec<Point3>,
    adjacency: Vec<Vec<(u32, f64)>>,
    tree: KdTree,
}

impl Lattice {
    /// Free points of a regular lattice of spacing `h` over the workspace,
    /// linked to their 26 (planar: 8) neighbours by collision-free edges.
    pub fn build(
        ws: &Workspace,
        r_agent: f64,
        params: &RoadmapParams,
        t: f64,
    ) -> Result<Self, RoadmapError> {
        let h = params.lattice_h;
        assert!(h > 0.0, "lattice spacing must be positive");
        let extent = ws.bounds_max - ws.bounds_min;
        let count = |k: usize| (extent[k] / h + 1e-9).floor() as usize + 1;
        let (nx, ny) = (count(0), count(1));
        let nz = if ws.is_planar() { 1 } else { count(2) };
        let grid = OccupancyGrid::build(ws, 0.5 * h, r_agent);
        let has_dynamic = ws.obstacles.iter().any(|ob| ob.is_dynamic());

        let mut slot = vec![u32::MAX; nx * ny * nz];
        let mut vertices = Vec::new();
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    let mut p = ws.bounds_min + Point3::new(ix as f64, iy as f64, iz as f64) * h;
                    if let Some(z) = ws.plane_z {
                        p.z = z;
                    }
                    let free = if grid.is_occupied(&p) || has_dynamic {
                        ws.point_free(&p, r_agent, t)
                    } else {
                        ws.inside_shrunk(&p, r_agent)
                    };
                    if free {
                        slot[(iz * ny + iy) * nx + ix] = vertices.len() as u32;
                        vertices.push(p);
                    }
                }
            }
        }
        if vertices.is_empty() {
            return Err(RoadmapError::EmptyRoadmap);
        }

        let mut offsets = Vec::new();
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let positive = (dz, dy, dx) > (0, 0, 0);
                    if positive && (nz > 1 || dz == 0) {
                        offsets.push((dx, dy, dz));
                    }
                }
            }
        }
        let mut adjacency = vec![Vec::new(); vertices.len()];
        for iz in 0..nz as i64 {
            for iy in 0..ny as i64 {
                for ix in 0..nx as i64 {
                    let u = slot[((iz as usize) * ny + iy as usize) * nx + ix as usize];
                    if u == u32::MAX {
                        continue;
                    }
                    for &(dx, dy, dz) in &offsets {
                        let (jx, jy, jz) = (ix + dx, iy + dy, iz + dz);
                        if jx < 0
                            || jy < 0
                            || jz < 0
                            || jx >= nx as i64
                            || jy >= ny as i64
                            || jz >= nz as i64
                        {
                            continue;
                        }
                        let v = slot[((jz as usize) * ny + jy as usize) * nx + jx as usize];
                        if v == u32::MAX {
                            continue;
                        }
                        let (a, b) = (vertices[u as usize], vertices[v as usize]);
                        if ws.segment_free(&a, &b, r_agent, t) {
                            let w = (b - a).norm();
                            adjacency[u as usize].push((v, w));
                            adjacency[v as usize].push((u, w));
                        }
                    }
                }
            }
        }
        let tree = KdTree::new(vertices.clone());
        Ok(Self {
            vertices,
            adjacency,
            tree,
        })
    }

    /// Arbitrary graph with Euclidean edge weights.
    pub fn from_graph(vertices: Vec<Point3>, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![Vec::new(); vertices.len()];
        for &(a, b) in edges {
            let w = (vertices[a] - vertices[b]).norm();
            adjacency[a].push((b as u32, w));
            adjacency[b].push((a as u32, w));
        }
        let tree = KdTree::new(vertices.clone());
        Self {
            vertices,
            adjacency,
            tree,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

#[derive(PartialEq)]
struct Frontier(f64, u32);

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One agent's roadmap: a shared lattice plus the agent's target vertex and
/// cost-to-go values.
#[derive(Debug, Clone)]
pub struct Roadmap {
    lattice: Arc<Lattice>,
    target: Point3,
    target_index: usize,
    /// Links from the extra target vertex (index `lattice.len()`) into the lattice.
    target_links: Option<Vec<(u32, f64)>>,
    cost_to_go: Vec<f64>,
    neighbor_radius: f64,
}

impl Roadmap {
    pub fn build(
        ws: &Workspace,
        target: Point3,
        r_agent: f64,
        params: &RoadmapParams,
        t: f64,
    ) -> Result<Self, RoadmapError> {
        if !ws.point_free(&target, r_agent, t) {
            return Err(RoadmapError::TargetBlocked(target.into()));
        }
        let lattice = Arc::new(Lattice::build(ws, r_agent, params, t)?);
        Self::on_lattice(lattice, ws, target, r_agent, params, t)
    }

    /// Adds `target` to a prebuilt lattice and runs Dijkstra from it.
    pub fn on_lattice(
        lattice: Arc<Lattice>,
        ws: &Workspace,
        target: Point3,
        r_agent: f64,
        params: &RoadmapParams,
        t: f64,
    ) -> Result<Self, RoadmapError> {
        if !ws.point_free(&target, r_agent, t) {
            return Err(RoadmapError::TargetBlocked(target.into()));
        }
        let mut links = Vec::new();
        lattice
            .tree
            .for_each_within(&target, params.connect_radius, |i, d2| {
                let v = lattice.vertices[i];
                if ws.segment_free(&target, &v, r_agent, t) {
                    links.push((i as u32, d2.sqrt()));
                }
            });
        links.sort_by_key(|l| l.0);
        let mut rm = Self {
            target_index: lattice.len(),
            lattice,
            target,
            target_links: Some(links),
            cost_to_go: Vec::new(),
            neighbor_radius: params.neighbor_radius,
        };
        rm.run_dijkstra();
        Ok(rm)
    }

    /// Roadmap over an explicit graph whose target is one of its vertices.
    pub fn from_graph(
        vertices: Vec<Point3>,
        edges: &[(usize, usize)],
        target_index: usize,
        neighbor_radius: f64,
    ) -> Self {
        let target = vertices[target_index];
        let lattice = Arc::new(Lattice::from_graph(vertices, edges));
        let mut rm = Self {
            lattice,
            target,
            target_index,
            target_links: None,
            cost_to_go: Vec::new(),
            neighbor_radius,
        };
        rm.run_dijkstra();
        rm
    }

    fn run_dijkstra(&mut self) {
        let n = self.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        dist[self.target_index] = 0.0;
        heap.push(Frontier(0.0, self.target_index as u32));
        while let Some(Frontier(d, u)) = heap.pop() {
            let u = u as usize;
            if d > dist[u] {
                continue;
            }
            let edges: &[(u32, f64)] = if u == self.lattice.len() {
                self.target_links.as_deref().unwrap_or(&[])
            } else {
                &self.lattice.adjacency[u]
            };
            for &(v, w) in edges {
                let nd = d + w;
                if nd < dist[v as usize] {
                    dist[v as usize] = nd;
                    heap.push(Frontier(nd, v));
                }
            }
        }
        self.cost_to_go = dist;
    }

    /// Roadmap over arbitrary vertices with externally supplied cost-to-go
    /// values (no edges; used to probe the descent estimator directly).
    pub fn from_cost_field(
        vertices: Vec<Point3>,
        cost_to_go: Vec<f64>,
        target_index: usize,
        neighbor_radius: f64,
    ) -> Self {
        assert_eq!(vertices.len(), cost_to_go.len());
        let target = vertices[target_index];
        Self {
            lattice: Arc::new(Lattice::from_graph(vertices, &[])),
            target,
            target_index,
            target_links: None,
            cost_to_go,
            neighbor_radius,
        }
    }

    pub fn len(&self) -> usize {
        self.lattice.len() + usize::from(self.target_links.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn target(&self) -> Point3 {
        self.target
    }

    pub fn target_index(&self) -> usize {
        self.target_index
    }

    pub fn neighbor_radius(&self) -> f64 {
        self.neighbor_radius
    }

    pub fn vertex(&self, i: usize) -> Point3 {
        if i < self.lattice.len() {
            self.lattice.vertices[i]
        } else {
            self.target
        }
    }

    pub fn cost_to_go(&self, i: usize) -> f64 {
        self.cost_to_go[i]
    }

    pub fn cost_to_go_values(&self) -> &[f64] {
        &self.cost_to_go
    }

    /// Neighbours of vertex `i` with edge weights.
    pub fn edges(&self, i: usize) -> Vec<(usize, f64)> {
        let lat = self.lattice.len();
        if i == lat && self.target_links.is_some() {
            return self
                .target_links
                .iter()
                .flatten()
                .map(|&(v, w)| (v as usize, w))
                .collect();
        }
        let mut out: Vec<(usize, f64)> = self.lattice.adjacency[i]
            .iter()
            .map(|&(v, w)| (v as usize, w))
            .collect();
        if let Some(links) = &self.target_links {
            if let Some(&(_, w)) = links.iter().find(|l| l.0 as usize == i) {
                out.push((lat, w));
            }
        }
        out
    }

    /// Visits reachable vertices within `radius` of `p` as `(index, position, φ)`.
    fn for_each_neighbor<F: FnMut(usize, &Point3, f64)>(&self, p: &Point3, radius: f64, mut f: F) {
        self.lattice.tree.for_each_within(p, radius, |i, _| {
            let phi = self.cost_to_go[i];
            if phi.is_finite() {
                f(i, &self.lattice.vertices[i], phi);
            }
        });
        if self.target_links.is_some() && (self.target - p).norm() <= radius {
            f(self.lattice.len(), &self.target, 0.0);
        }
    }

    /// Reachable vertices with `‖v − p‖ ≤ radius`, sorted by index.
    pub fn radius_neighbors(&self, p: &Point3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_neighbor(p, radius, |i, _, _| out.push(i));
        out.sort_unstable();
        out
    }

    /// Unit descent direction of the cost-to-go around `p`: the negated
    /// φ-weighted centroid offset of the radius neighbourhood.
    pub fn descent_direction(&self, p: &Point3) -> Option<Unit<Point3>> {
        if let Some(d) = self.direct_to_target(p) {
            return Some(d);
        }
        let mut weighted = Point3::zeros();
        let mut offsets = Point3::zeros();
        let mut phi_sum = 0.0;
        let mut count = 0usize;
        self.for_each_neighbor(p, self.neighbor_radius, |_, v, phi| {
            let d = v - p;
            weighted += d * phi;
            offsets += d;
            phi_sum += phi;
            count += 1;
        });
        if count < 2 {
            return None;
        }
        let g = weighted - offsets * (phi_sum / count as f64);
        if g.norm() < 1e-9 {
            return None;
        }
        Some(Unit::new_normalize(-g))
    }

    /// Straight line to the target when it lies inside the neighbourhood and
    /// the vertex nearest `p` reaches it along a straight free path
    /// (`φ(v) = ‖v − T‖`). The weighted-offset estimate is biased around the
    /// apex of φ, so this takes over there.
    fn direct_to_target(&self, p: &Point3) -> Option<Unit<Point3>> {
        let off = self.target - p;
        let dist = off.norm();
        if dist > self.neighbor_radius || dist < 1e-9 {
            return None;
        }
        let mut nearest: Option<(f64, f64, Point3)> = None;
        let mut count = 0usize;
        self.for_each_neighbor(p, self.neighbor_radius, |_, v, phi| {
            count += 1;
            let d2 = (v - p).norm_squared();
            if nearest.is_none_or(|(b, _, _)| d2 < b) {
                nearest = Some((d2, phi, *v));
            }
        });
        let (_, phi, v) = nearest.filter(|_| count >= 2)?;
        ((phi - (v - self.target).norm()).abs() <= 1e-9).then(|| Unit::new_normalize(off))
    }

    /// Descent direction, falling back to the neighbour minimising
    /// `φ(v) + ‖v − p‖` when the estimate degenerates.
    pub fn frame_direction(&self, p: &Point3) -> Option<Unit<Point3>> {
        if let Some(d) = self.descent_direction(p) {
            return Some(d);
        }
        let mut best: Option<(f64, Point3)> = None;
        self.for_each_neighbor(p, self.neighbor_radius, |_, v, phi| {
            let off = v - p;
            let dist = off.norm();
            if dist > 1e-9 && best.is_none_or(|(s, _)| phi + dist < s) {
                best = Some((phi + dist, off));
            }
        });
        best.map(|(_, off)| Unit::new_normalize(off))
    }

    /// Cost-to-go estimate at an arbitrary point:
    /// `min over neighbours v of φ(v) + ‖v − p‖`, infinite when none are reachable.
    pub fn estimate_cost(&self, p: &Point3) -> f64 {
        let mut best = f64::INFINITY;
        self.for_each_neighbor(p, self.neighbor_radius, |_, v, phi| {
            best = best.min(phi + (v - p).norm());
        });
        best
    }
}

/// Proper rotation taking `[1, 0, 0]` onto `dir` with minimal angle.
pub fn rotation_to(dir: &Point3) -> Result<Matrix3<f64>, RoadmapError> {
    let norm = dir.norm();
    if !((norm - 1.0).abs() <= 1e-6) {
        return Err(RoadmapError::NotUnit(norm));
    }
    let d = dir / norm;
    let c = d.x;
    // axis = e1 × d
    let k = Point3::new(0.0, -d.z, d.y);
    let s2 = k.norm_squared();
    if s2 < 1e-24 {
        return Ok(if c > 0.0 {
            Matrix3::identity()
        } else {
            Matrix3::new(-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0)
        });
    }
    let kx = k.cross_matrix();
    Ok(Matrix3::identity() + kx + kx * kx * ((1.0 - c) / s2))
}
