use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{BoundaryEdge, BoundaryTag, Point, TriMesh};
use crate::error::{Error, Result};

/// Polygons with a structured right-triangle mesher.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    UnitSquare,
    /// `[0, 2]^2` minus `(1, 2] x (1, 2]`.
    LShape,
    Rectangle { width: f64, height: f64 },
}

impl Shape {
    /// Boundary segment names in counterclockwise order starting at the origin.
    pub fn segment_names(&self) -> &'static [&'static str] {
        match self {
            Shape::UnitSquare | Shape::Rectangle { .. } => &["bottom", "right", "top", "left"],
            Shape::LShape => &[
                "bottom",
                "right",
                "inner_horizontal",
                "inner_vertical",
                "top",
                "left",
            ],
        }
    }

    fn corners(&self) -> Vec<Point> {
        match *self {
            Shape::UnitSquare => vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            Shape::Rectangle { width, height } => {
                vec![[0.0, 0.0], [width, 0.0], [width, height], [0.0, height]]
            }
            Shape::LShape => vec![
                [0.0, 0.0],
                [2.0, 0.0],
                [2.0, 1.0],
                [1.0, 1.0],
                [1.0, 2.0],
                [0.0, 2.0],
            ],
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::UnitSquare => 1.0,
            Shape::Rectangle { width, height } => width * height,
            Shape::LShape => 3.0,
        }
    }

    fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::UnitSquare => write!(f, "unit_square"),
            Shape::LShape => write!(f, "l_shape"),
            Shape::Rectangle { width, height } => write!(f, "rectangle:{width},{height}"),
        }
    }
}

impl FromStr for Shape {
    type Err = Error;

    /// `unit_square`, `l_shape` or `rectangle:W,H`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit_square" => Ok(Shape::UnitSquare),
            "l_shape" => Ok(Shape::LShape),
            _ => {
                let dims = s
                    .strip_prefix("rectangle:")
                    .ok_or_else(|| Error::invalid(format!("unknown shape '{s}'")))?;
                let (w, h) = dims
                    .split_once(',')
                    .ok_or_else(|| Error::invalid("rectangle needs 'rectangle:W,H'"))?;
                let width: f64 = w.trim().parse().map_err(|_| Error::invalid("bad rectangle width"))?;
                let height: f64 = h.trim().parse().map_err(|_| Error::invalid("bad rectangle height"))?;
                if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
                    return Err(Error::invalid("rectangle sides must be positive"));
                }
                Ok(Shape::Rectangle { width, height })
            }
        }
    }
}

/// Assignment of a boundary kind to every boundary segment of a shape.
///
/// Text form: `all=N`, positional `D,N,N,N`, or named `bottom=D,rest=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagRule {
    pub named: Vec<(String, BoundaryTag)>,
    pub rest: Option<BoundaryTag>,
}

impl TagRule {
    pub fn all(tag: BoundaryTag) -> Self {
        TagRule {
            named: Vec::new(),
            rest: Some(tag),
        }
    }

    pub fn with(mut self, segment: &str, tag: BoundaryTag) -> Self {
        self.named.push((segment.to_string(), tag));
        self
    }

    pub fn segments(pairs: &[(&str, BoundaryTag)]) -> Self {
        TagRule {
            named: pairs.iter().map(|&(s, t)| (s.to_string(), t)).collect(),
            rest: None,
        }
    }

    /// Resolves the rule to one tag per segment of `shape`.
    pub fn resolve(&self, shape: &Shape) -> Result<Vec<BoundaryTag>> {
        let names = shape.segment_names();
        let mut tags: Vec<Option<BoundaryTag>> = vec![None; names.len()];
        for (name, tag) in &self.named {
            let k = names
                .iter()
                .position(|n| n == name)
                .or_else(|| name.strip_prefix('s').and_then(|i| i.parse::<usize>().ok()).filter(|&i| i < names.len()))
                .ok_or_else(|| Error::invalid(format!("shape {shape} has no boundary segment '{name}'")))?;
            tags[k] = Some(*tag);
        }
        tags.iter()
            .enumerate()
            .map(|(k, t)| {
                t.or(self.rest).ok_or_else(|| {
                    Error::invalid(format!("boundary segment '{}' has no tag", names[k]))
                })
            })
            .collect()
    }
}

impl FromStr for TagRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let items: Vec<&str> = s.split(',').map(str::trim).filter(|i| !i.is_empty()).collect();
        if items.is_empty() {
            return Err(Error::invalid("empty tag rule"));
        }
        let parse_tag = |t: &str| {
            BoundaryTag::from_letter(t).ok_or_else(|| Error::invalid(format!("unknown boundary tag '{t}'")))
        };
        let mut rule = TagRule {
            named: Vec::new(),
            rest: None,
        };
        if items.iter().all(|i| !i.contains('=')) {
            if items.len() == 1 {
                rule.rest = Some(parse_tag(items[0])?);
            } else {
                for (k, i) in items.iter().enumerate() {
                    rule.named.push((format!("s{k}"), parse_tag(i)?));
                }
            }
            return Ok(rule);
        }
        for item in items {
            let (name, tag) = item
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("tag rule item '{item}' must be name=TAG")))?;
            let tag = parse_tag(tag.trim())?;
            match name.trim() {
                "all" | "rest" => rule.rest = Some(tag),
                n => rule.named.push((n.to_string(), tag)),
            }
        }
        Ok(rule)
    }
}

/// Structured right-triangle mesh: every square (or rectangular) cell of an
/// `n`-per-unit-side grid is split along its lower-left to upper-right diagonal.
pub fn generate_structured(shape: Shape, n: usize, tagging: &TagRule) -> Result<TriMesh> {
    if n == 0 {
        return Err(Error::invalid("subdivision count n must be at least 1"));
    }
    let tags = tagging.resolve(&shape)?;
    let (nx, ny) = match shape {
        Shape::UnitSquare | Shape::Rectangle { .. } => (n, n),
        Shape::LShape => (2 * n, 2 * n),
    };
    let cell_in = |i: usize, j: usize| match shape {
        Shape::LShape => !(i >= n && j >= n),
        _ => true,
    };
    let vertex_in = |i: usize, j: usize| {
        let lo_i = i.saturating_sub(1);
        let lo_j = j.saturating_sub(1);
        (lo_i..=i.min(nx - 1)).any(|ci| (lo_j..=j.min(ny - 1)).any(|cj| cell_in(ci, cj)))
    };
    let coord = |i: usize, j: usize| -> Point {
        match shape {
            Shape::Rectangle { width, height } => {
                [width * i as f64 / n as f64, height * j as f64 / n as f64]
            }
            _ => [i as f64 / n as f64, j as f64 / n as f64],
        }
    };

    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertices = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            if vertex_in(i, j) {
                index.insert((i, j), vertices.len());
                vertices.push(coord(i, j));
            }
        }
    }
    let mut triangles = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if !cell_in(i, j) {
                continue;
            }
            let v00 = index[&(i, j)];
            let v10 = index[&(i + 1, j)];
            let v01 = index[&(i, j + 1)];
            let v11 = index[&(i + 1, j + 1)];
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    // boundary edges: lone edges, oriented as in their (counterclockwise) triangle
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let corners = shape.corners();
    let mut boundary = Vec::new();
    for t in &triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if count[&(a.min(b), a.max(b))] != 1 {
                continue;
            }
            let mid = [
                0.5 * (vertices[a][0] + vertices[b][0]),
                0.5 * (vertices[a][1] + vertices[b][1]),
            ];
            let seg = (0..corners.len())
                .min_by(|&s, &r| {
                    let ds = super::point_segment_distance(mid, corners[s], corners[(s + 1) % corners.len()]);
                    let dr = super::point_segment_distance(mid, corners[r], corners[(r + 1) % corners.len()]);
                    ds.total_cmp(&dr)
                })
                .unwrap();
            boundary.push(BoundaryEdge {
                vertices: [a, b],
                tag: tags[seg],
            });
        }
    }
    TriMesh::new(vertices, triangles, boundary, shape.label())
}
