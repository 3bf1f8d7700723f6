//! Sampled check of the interior-corkscrew condition for the Dirichlet part.
//!
//! For every vertex `x` where Dirichlet and flux edges meet and every radius
//! `r` of the dyadic grid `1, 1/2, ...` down to `h_max`, a point `y` on the
//! Dirichlet part with `|y - x| < r` must keep the ball `B(y, delta r)` away
//! from the flux part. Candidate points are sampled along Dirichlet edges at
//! spacing `h_max / 4`. This is a finite necessary-style test, not a proof.

use serde::Serialize;

use super::{dist, point_segment_distance, BoundaryTag, Point, TriMesh};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorkscrewWitness {
    pub vertex: usize,
    pub radius: f64,
    pub point: Point,
    /// Distance from `point` to the flux part.
    pub clearance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorkscrewReport {
    pub pass: bool,
    pub delta: f64,
    pub witnesses: Vec<CorkscrewWitness>,
    /// First `(vertex, radius)` without a witness.
    pub failure: Option<(usize, f64)>,
}

pub fn check_corkscrew(mesh: &TriMesh, delta: f64) -> Result<CorkscrewReport> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid("delta must be positive"));
    }
    if !mesh.has_tag(BoundaryTag::Dirichlet) {
        return Err(Error::ModeMismatch(
            "corkscrew check needs a non-empty Dirichlet part".into(),
        ));
    }
    let verts = mesh.vertices();
    let d_edges: Vec<[Point; 2]> = mesh
        .boundary_edges()
        .iter()
        .filter(|e| e.tag == BoundaryTag::Dirichlet)
        .map(|e| [verts[e.vertices[0]], verts[e.vertices[1]]])
        .collect();
    let n_edges: Vec<[Point; 2]> = mesh
        .boundary_edges()
        .iter()
        .filter(|e| e.tag == BoundaryTag::Flux)
        .map(|e| [verts[e.vertices[0]], verts[e.vertices[1]]])
        .collect();

    // relative boundary of D inside the boundary curve
    let mut on_d = vec![false; verts.len()];
    let mut on_n = vec![false; verts.len()];
    for e in mesh.boundary_edges() {
        let mask = if e.tag == BoundaryTag::Dirichlet { &mut on_d } else { &mut on_n };
        mask[e.vertices[0]] = true;
        mask[e.vertices[1]] = true;
    }
    let junctions: Vec<usize> = (0..verts.len()).filter(|&v| on_d[v] && on_n[v]).collect();

    let h_max = mesh.h_max();
    let mut radii = Vec::new();
    let mut r = 1.0f64;
    while r > h_max {
        radii.push(r);
        r *= 0.5;
    }
    radii.push(h_max);

    let spacing = h_max / 4.0;
    let mut samples: Vec<Point> = Vec::new();
    for [a, b] in &d_edges {
        let k = (dist(*a, *b) / spacing).ceil().max(1.0) as usize;
        for s in 0..=k {
            let t = s as f64 / k as f64;
            samples.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    let clearance = |y: Point| {
        n_edges
            .iter()
            .map(|[a, b]| point_segment_distance(y, *a, *b))
            .fold(f64::INFINITY, f64::min)
    };
    let clearances: Vec<f64> = samples.iter().map(|&y| clearance(y)).collect();

    let mut witnesses = Vec::new();
    for &x in &junctions {
        for &r in &radii {
            let best = samples
                .iter()
                .zip(&clearances)
                .filter(|(y, _)| dist(**y, verts[x]) < r)
                .max_by(|a, b| a.1.total_cmp(b.1));
            match best {
                Some((&y, &c)) if c >= delta * r => witnesses.push(CorkscrewWitness {
                    vertex: x,
                    radius: r,
                    point: y,
                    clearance: c,
                }),
                _ => {
                    return Ok(CorkscrewReport {
                        pass: false,
                        delta,
                        witnesses,
                        failure: Some((x, r)),
                    })
                }
            }
        }
    }
    Ok(CorkscrewReport {
        pass: true,
        delta,
        witnesses,
        failure: None,
    })
}
