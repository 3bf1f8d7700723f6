//! Flat-shaded SVG heatmaps of nodal fields.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 16.0;
const LEGEND: f64 = 40.0;

/// Blue to red through white, `s ∈ [0, 1]`.
fn ramp(s: f64) -> (u8, u8, u8) {
    let s = s.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64, w: f64| (a + (b - a) * w).round() as u8;
    if s < 0.5 {
        let w = s / 0.5;
        (lerp(49.0, 247.0, w), lerp(54.0, 247.0, w), lerp(149.0, 247.0, w))
    } else {
        let w = (s - 0.5) / 0.5;
        (lerp(247.0, 165.0, w), lerp(247.0, 0.0, w), lerp(247.0, 38.0, w))
    }
}

fn colour(v: f64, lo: f64, hi: f64) -> String {
    let s = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
    let (r, g, b) = ramp(s);
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Per-triangle mean colouring on a linear ramp from the field minimum to
/// its maximum. Output bytes depend only on the inputs.
pub fn heatmap_svg(mesh: &TriMesh, values: &[f64], title: &str) -> Result<String> {
    if values.len() != mesh.n_vertices() {
        return Err(Error::Dimension {
            expected: mesh.n_vertices(),
            actual: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("field values must be finite"));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let verts = mesh.vertices();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in verts {
        x0 = x0.min(p[0]);
        y0 = y0.min(p[1]);
        x1 = x1.max(p[0]);
        y1 = y1.max(p[1]);
    }
    let scale = (SIZE - 2.0 * MARGIN) / (x1 - x0).max(y1 - y0);
    let width = (x1 - x0) * scale + 2.0 * MARGIN;
    let height = (y1 - y0) * scale + 2.0 * MARGIN;
    let map = |p: [f64; 2]| ((p[0] - x0) * scale + MARGIN, (y1 - p[1]) * scale + MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.1}" height="{:.1}" viewBox="0 0 {:.1} {:.1}">"#,
        width,
        height + LEGEND,
        width,
        height + LEGEND
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r#"<g id="field" data-min="{lo:e}" data-max="{hi:e}">"#);
    for t in mesh.triangles() {
        let mean = (values[t[0]] + values[t[1]] + values[t[2]]) / 3.0;
        let c = colour(mean, lo, hi);
        let pts: Vec<String> = t
            .iter()
            .map(|&v| {
                let (x, y) = map(verts[v]);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="{c}" stroke="{c}" stroke-width="0.3" data-v="{mean:e}"/>"#,
            pts.join(" ")
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g id="boundary" stroke-width="2">"#);
    for e in mesh.boundary_edges() {
        let [a, b] = e.vertices;
        let mean = 0.5 * (values[a] + values[b]);
        let (xa, ya) = map(verts[a]);
        let (xb, yb) = map(verts[b]);
        let _ = writeln!(
            s,
            r#"<line x1="{xa:.2}" y1="{ya:.2}" x2="{xb:.2}" y2="{yb:.2}" stroke="{}" data-tag="{}" data-v="{mean:e}"/>"#,
            colour(mean, lo, hi),
            e.tag.letter()
        );
    }
    let _ = writeln!(s, "</g>");
    let label = if hi > lo {
        format!("min {lo:.6e}   max {hi:.6e}")
    } else {
        format!("min = max = {lo:.6e}")
    };
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="monospace" font-size="12">{}</text>"#,
        MARGIN,
        height + LEGEND / 2.0,
        label
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// Space-time strip: column `k` shows `states[k]` top to bottom in vertex order.
pub fn strip_svg(states: &[Vec<f64>], title: &str) -> Result<String> {
    let n = states.first().map_or(0, Vec::len);
    if states.is_empty() || n == 0 || states.iter().any(|s| s.len() != n) {
        return Err(Error::invalid("strip needs equally sized nonempty states"));
    }
    let lo = states.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let hi = states.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let cw = (SIZE / states.len() as f64).max(1.0);
    let ch = (SIZE / n as f64).max(1.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.1}" height="{:.1}">"#,
        cw * states.len() as f64,
        ch * n as f64
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    for (k, u) in states.iter().enumerate() {
        for (i, &v) in u.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{cw:.2}" height="{ch:.2}" fill="{}"/>"#,
                k as f64 * cw,
                i as f64 * ch,
                colour(v, lo, hi)
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
