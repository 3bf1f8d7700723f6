//! Plain-text mesh format.
//!
//! ```text
//! # domain: unit_square
//! trimesh 2
//! vertices 4
//! 0 0
//! ...
//! triangles 2
//! 0 1 3
//! ...
//! boundary 4
//! 0 1 D
//! ...
//! ```
//!
//! Tokens are whitespace separated and `#` starts a comment. A leading
//! `# domain: <label>` comment carries the domain label.

use std::fmt::Write as _;

use super::{BoundaryEdge, BoundaryTag, TriMesh};
use crate::error::{Error, Result};

struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

struct Lexer<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    end: (usize, usize),
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        let mut tokens = Vec::new();
        let mut end = (1, 1);
        for (ln, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("");
            let mut offset = 0;
            for word in content.split_whitespace() {
                let start = content[offset..].find(word).unwrap() + offset;
                offset = start + word.len();
                tokens.push(Token {
                    text: word,
                    line: ln + 1,
                    column: content[..start].chars().count() + 1,
                });
            }
            end = (ln + 1, line.chars().count() + 1);
        }
        Lexer { tokens, pos: 0, end }
    }

    fn err(&self, line: usize, column: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    fn next(&mut self, what: &str) -> Result<&Token<'a>> {
        if self.pos >= self.tokens.len() {
            let (l, c) = self.end;
            return Err(self.err(l, c, format!("unexpected end of input, expected {what}")));
        }
        self.pos += 1;
        Ok(&self.tokens[self.pos - 1])
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        let t = self.next(&format!("'{kw}'"))?;
        if t.text != kw {
            let (l, c, s) = (t.line, t.column, t.text.to_string());
            return Err(self.err(l, c, format!("expected '{kw}', found '{s}'")));
        }
        Ok(())
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let t = self.next(what)?;
        let (l, c, s) = (t.line, t.column, t.text);
        s.parse::<usize>()
            .map_err(|_| self.err(l, c, format!("expected {what} (non-negative integer), found '{s}'")))
    }

    fn float(&mut self, what: &str) -> Result<f64> {
        let t = self.next(what)?;
        let (l, c, s) = (t.line, t.column, t.text);
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(l, c, format!("expected {what} (decimal number), found '{s}'"))),
        }
    }
}

/// Parses the text mesh format and validates all mesh invariants.
pub fn load_mesh(text: &str) -> Result<TriMesh> {
    let label = text
        .lines()
        .map(str::trim)
        .take_while(|l| l.is_empty() || l.starts_with('#'))
        .find_map(|l| l.strip_prefix('#').map(str::trim).and_then(|l| l.strip_prefix("domain:")))
        .map(|l| l.trim().to_string())
        .unwrap_or_default();

    let mut lx = Lexer::new(text);
    lx.keyword("trimesh")?;
    let dim_tok = lx.next("dimension")?;
    if dim_tok.text != "2" {
        let (l, c, s) = (dim_tok.line, dim_tok.column, dim_tok.text.to_string());
        return Err(lx.err(l, c, format!("only dimension 2 is supported, found '{s}'")));
    }
    lx.keyword("vertices")?;
    let nv = lx.usize("vertex count")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x = lx.float("x coordinate")?;
        let y = lx.float("y coordinate")?;
        vertices.push([x, y]);
    }
    lx.keyword("triangles")?;
    let nt = lx.usize("triangle count")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let mut t = [0usize; 3];
        for slot in t.iter_mut() {
            *slot = lx.usize("vertex index")?;
        }
        triangles.push(t);
    }
    lx.keyword("boundary")?;
    let nb = lx.usize("boundary edge count")?;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let a = lx.usize("vertex index")?;
        let b = lx.usize("vertex index")?;
        let t = lx.next("boundary tag")?;
        let tag = BoundaryTag::from_letter(t.text).ok_or_else(|| {
            Error::Parse {
                line: t.line,
                column: t.column,
                message: format!("expected boundary tag D or N, found '{}'", t.text),
            }
        })?;
        boundary.push(BoundaryEdge { vertices: [a, b], tag });
    }
    if lx.pos < lx.tokens.len() {
        let t = &lx.tokens[lx.pos];
        return Err(lx.err(t.line, t.column, format!("trailing content '{}'", t.text)));
    }
    TriMesh::new(vertices, triangles, boundary, label)
}

/// Canonical text form; `save_mesh(&load_mesh(&save_mesh(m))?)` reproduces it byte for byte.
pub fn save_mesh(mesh: &TriMesh) -> String {
    let mut s = String::new();
    if !mesh.label().is_empty() {
        let _ = writeln!(s, "# domain: {}", mesh.label().replace('\n', " "));
    }
    s.push_str("trimesh 2\n");
    let _ = writeln!(s, "vertices {}", mesh.n_vertices());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?}", v[0], v[1]);
    }
    let _ = writeln!(s, "triangles {}", mesh.n_triangles());
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "boundary {}", mesh.boundary_edges().len());
    for e in mesh.boundary_edges() {
        let _ = writeln!(s, "{} {} {}", e.vertices[0], e.vertices[1], e.tag.letter());
    }
    s
}
