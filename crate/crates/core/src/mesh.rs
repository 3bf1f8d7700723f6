//! Conforming triangulations of bounded polygons with a Dirichlet/flux
//! partition of the boundary.

mod corkscrew;
mod generate;
mod io;

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use corkscrew::{check_corkscrew, CorkscrewReport, CorkscrewWitness};
pub use generate::{generate_structured, Shape, TagRule};
pub use io::{load_mesh, save_mesh};

pub type Point = [f64; 2];

/// Boundary condition family carried by a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundaryTag {
    Dirichlet,
    /// Robin or Neumann.
    Flux,
}

impl BoundaryTag {
    pub fn letter(self) -> char {
        match self {
            BoundaryTag::Dirichlet => 'D',
            BoundaryTag::Flux => 'N',
        }
    }

    pub fn from_letter(s: &str) -> Option<Self> {
        match s {
            "D" | "d" => Some(BoundaryTag::Dirichlet),
            "N" | "n" => Some(BoundaryTag::Flux),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

/// Immutable, validated triangulation.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshQuality {
    pub min_angle: f64,
    pub max_angle: f64,
    pub is_nonobtuse: bool,
    pub h_max: f64,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn signed_area(p: Point, q: Point, r: Point) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

pub(crate) fn dist(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Distance from `p` to the closed segment `[a, b]`.
pub(crate) fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

impl TriMesh {
    /// Validates and builds a mesh. Violations name the offending simplex.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let nv = vertices.len();
        if triangles.is_empty() {
            return Err(Error::Mesh("mesh has no triangles".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !v[0].is_finite() || !v[1].is_finite() {
                return Err(Error::Mesh(format!("vertex {i} has a non-finite coordinate")));
            }
        }
        let mut used = vec![false; nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(Error::Mesh(format!("triangle {t} references missing vertex {v}")));
                }
                used[v] = true;
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area <= 0.0 {
                return Err(Error::Mesh(format!(
                    "triangle {t} is not counterclockwise (signed area {area:e})"
                )));
            }
        }
        if let Some(v) = used.iter().position(|&u| !u) {
            return Err(Error::Mesh(format!("vertex {v} belongs to no triangle")));
        }

        // directed edge multiplicities: a conforming, consistently oriented mesh
        // uses each undirected edge at most twice, once per direction
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        let mut undirected: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if let Some(other) = directed.insert((a, b), t) {
                    return Err(Error::Mesh(format!(
                        "triangles {other} and {t} share edge ({a}, {b}) with the same orientation"
                    )));
                }
                undirected.entry(edge_key(a, b)).or_default().push(t);
            }
        }
        let mut single: Vec<(usize, usize)> = undirected
            .iter()
            .filter(|(_, ts)| ts.len() == 1)
            .map(|(&e, _)| e)
            .collect();
        single.sort_unstable();

        // hanging vertices on a lone edge make the mesh non-conforming
        for &(a, b) in &single {
            let (pa, pb) = (vertices[a], vertices[b]);
            let len = dist(pa, pb);
            for (v, &p) in vertices.iter().enumerate() {
                if v == a || v == b {
                    continue;
                }
                if point_segment_distance(p, pa, pb) <= 1e-12 * len
                    && dist(p, pa) > 1e-12 * len
                    && dist(p, pb) > 1e-12 * len
                {
                    return Err(Error::Mesh(format!(
                        "vertex {v} lies inside edge ({a}, {b}) of triangle {}: mesh is not conforming",
                        undirected[&(a, b)][0]
                    )));
                }
            }
        }

        let mut tagged: HashMap<(usize, usize), usize> = HashMap::new();
        for (k, e) in boundary_edges.iter().enumerate() {
            let key = edge_key(e.vertices[0], e.vertices[1]);
            if let Some(prev) = tagged.insert(key, k) {
                return Err(Error::Mesh(format!(
                    "boundary edge ({}, {}) tagged twice (entries {prev} and {k})",
                    key.0, key.1
                )));
            }
            match undirected.get(&key) {
                Some(ts) if ts.len() == 1 => {}
                Some(_) => {
                    return Err(Error::Mesh(format!(
                        "boundary entry {k} ({}, {}) is an interior edge",
                        key.0, key.1
                    )))
                }
                None => {
                    return Err(Error::Mesh(format!(
                        "boundary entry {k} ({}, {}) is not a mesh edge",
                        key.0, key.1
                    )))
                }
            }
        }
        if let Some(&(a, b)) = single.iter().find(|e| !tagged.contains_key(e)) {
            return Err(Error::Mesh(format!(
                "boundary edge ({a}, {b}) of triangle {} carries no tag",
                undirected[&(a, b)][0]
            )));
        }

        let mesh = TriMesh {
            vertices,
            triangles,
            boundary_edges,
            label: label.into(),
        };
        let adjacency = mesh.triangle_adjacency();
        let mut seen = vec![false; mesh.triangles.len()];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(t) = queue.pop_front() {
            for &s in &adjacency[t] {
                if !seen[s] {
                    seen[s] = true;
                    queue.push_back(s);
                }
            }
        }
        if let Some(t) = seen.iter().position(|&s| !s) {
            return Err(Error::Mesh(format!(
                "triangle {t} is not connected to triangle 0: domain must be connected"
            )));
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Copy of the mesh with every boundary tag replaced by `tag(edge)`.
    pub fn retagged(&self, tag: impl Fn(&BoundaryEdge) -> BoundaryTag) -> Self {
        let mut m = self.clone();
        for e in m.boundary_edges.iter_mut() {
            e.tag = tag(e);
        }
        m
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        dist(self.vertices[e.vertices[0]], self.vertices[e.vertices[1]])
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary_edges.iter().map(|e| self.edge_length(e)).sum()
    }

    pub fn has_tag(&self, tag: BoundaryTag) -> bool {
        self.boundary_edges.iter().any(|e| e.tag == tag)
    }

    /// `true` for vertices on some boundary edge.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for e in &self.boundary_edges {
            mask[e.vertices[0]] = true;
            mask[e.vertices[1]] = true;
        }
        mask
    }

    /// `true` for vertices on the closed Dirichlet part.
    pub fn dirichlet_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for e in self.boundary_edges.iter().filter(|e| e.tag == BoundaryTag::Dirichlet) {
            mask[e.vertices[0]] = true;
            mask[e.vertices[1]] = true;
        }
        mask
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mask = self.boundary_mask();
        (0..mask.len()).filter(|&v| mask[v]).collect()
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        let mask = self.boundary_mask();
        (0..mask.len()).filter(|&v| !mask[v]).collect()
    }

    /// Undirected edges, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| edge_key(t[k], t[(k + 1) % 3])))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Triangles sharing an edge with each triangle.
    pub fn triangle_adjacency(&self) -> Vec<Vec<usize>> {
        let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                by_edge.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
            }
        }
        let mut adj = vec![Vec::new(); self.triangles.len()];
        for ts in by_edge.values() {
            if let [a, b] = ts[..] {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for l in adj.iter_mut() {
            l.sort_unstable();
        }
        adj
    }

    pub fn h_max(&self) -> f64 {
        self.edges()
            .iter()
            .map(|&(a, b)| dist(self.vertices[a], self.vertices[b]))
            .fold(0.0, f64::max)
    }

    /// Exact angle extremes over all triangles.
    pub fn quality(&self) -> MeshQuality {
        let mut min_angle = f64::INFINITY;
        let mut max_angle: f64 = 0.0;
        let mut nonobtuse = true;
        for tri in &self.triangles {
            for k in 0..3 {
                let p = self.vertices[tri[k]];
                let q = self.vertices[tri[(k + 1) % 3]];
                let r = self.vertices[tri[(k + 2) % 3]];
                let u = [q[0] - p[0], q[1] - p[1]];
                let v = [r[0] - p[0], r[1] - p[1]];
                let dot = u[0] * v[0] + u[1] * v[1];
                let cross = (u[0] * v[1] - u[1] * v[0]).abs();
                if dot < 0.0 {
                    nonobtuse = false;
                }
                let angle = if dot == 0.0 {
                    90.0
                } else {
                    cross.atan2(dot).to_degrees()
                };
                min_angle = min_angle.min(angle);
                max_angle = max_angle.max(angle);
            }
        }
        MeshQuality {
            min_angle,
            max_angle,
            is_nonobtuse: nonobtuse,
            h_max: self.h_max(),
        }
    }
}

/// Free-function form of [`TriMesh::quality`].
pub fn quality(mesh: &TriMesh) -> MeshQuality {
    mesh.quality()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(p: [Point; 3]) -> TriMesh {
        let b = [(0, 1), (1, 2), (2, 0)]
            .iter()
            .map(|&(a, b)| BoundaryEdge {
                vertices: [a, b],
                tag: BoundaryTag::Flux,
            })
            .collect();
        TriMesh::new(p.to_vec(), vec![[0, 1, 2]], b, "single").unwrap()
    }

    #[test]
    fn equilateral_angles() {
        let q = single([[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]]).quality();
        assert!((q.min_angle - 60.0).abs() < 1e-12);
        assert!((q.max_angle - 60.0).abs() < 1e-12);
        assert!(q.is_nonobtuse);
    }

    #[test]
    fn sliver_angles() {
        let q = single([[0.0, 0.0], [1.0, 0.0], [0.5, 1e-6]]).quality();
        // direct trigonometry: base angles atan(1e-6 / 0.5)
        let base = (1e-6f64 / 0.5).atan().to_degrees();
        assert!((q.min_angle - base).abs() < 1e-12);
        assert!(q.min_angle < 1e-3);
        assert!((q.max_angle - (180.0 - 2.0 * base)).abs() < 1e-9);
        assert!(!q.is_nonobtuse);
    }

    #[test]
    fn clockwise_triangle_rejected() {
        let b = vec![
            BoundaryEdge { vertices: [0, 1], tag: BoundaryTag::Flux },
            BoundaryEdge { vertices: [1, 2], tag: BoundaryTag::Flux },
            BoundaryEdge { vertices: [2, 0], tag: BoundaryTag::Flux },
        ];
        let err = TriMesh::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], vec![[0, 1, 2]], b, "")
            .unwrap_err()
            .to_string();
        assert!(err.contains("triangle 0"), "{err}");
    }

    #[test]
    fn untagged_and_disconnected_rejected() {
        let b = vec![
            BoundaryEdge { vertices: [0, 1], tag: BoundaryTag::Flux },
            BoundaryEdge { vertices: [1, 2], tag: BoundaryTag::Flux },
        ];
        let err = TriMesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], b, "")
            .unwrap_err()
            .to_string();
        assert!(err.contains("no tag"), "{err}");

        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [5.0, 0.0], [6.0, 0.0], [5.0, 1.0]];
        let mut b = Vec::new();
        for base in [0, 3] {
            for (a, c) in [(0, 1), (1, 2), (2, 0)] {
                b.push(BoundaryEdge { vertices: [base + a, base + c], tag: BoundaryTag::Flux });
            }
        }
        let err = TriMesh::new(v, vec![[0, 1, 2], [3, 4, 5]], b, "").unwrap_err().to_string();
        assert!(err.contains("connected"), "{err}");
    }

    #[test]
    fn hanging_vertex_rejected() {
        // triangle (0,1,2) with vertex 3 on its hypotenuse, covered from the other side
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.5], [1.0, 1.0]];
        let tris = vec![[0, 1, 2], [1, 4, 3], [3, 4, 2]];
        let b = [(0, 1), (1, 4), (4, 2), (2, 0), (1, 2)]
            .iter()
            .map(|&(a, c)| BoundaryEdge { vertices: [a, c], tag: BoundaryTag::Flux })
            .collect();
        let err = TriMesh::new(v, tris, b, "").unwrap_err().to_string();
        assert!(err.contains("not conforming") || err.contains("interior edge"), "{err}");
    }
}
