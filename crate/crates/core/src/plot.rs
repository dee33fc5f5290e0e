//! Ternary diagrams of three-part prediction regions as SVG.

use std::fmt::Write as _;
use std::path::Path;

use crate::conformal::PredictionRegion;
use crate::dirichlet::CompositionalVector;
use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 60.0;

/// Screen position of the three vertices: part 1 bottom left, part 2 bottom
/// right, part 3 on top.
pub fn vertices() -> [(f64, f64); 3] {
    let side = WIDTH - 2.0 * MARGIN;
    let base = HEIGHT - MARGIN - 40.0;
    let top = base - side * 3f64.sqrt() / 2.0;
    [(MARGIN, base), (WIDTH - MARGIN, base), (WIDTH / 2.0, top)]
}

/// Barycentric projection of a three-part composition.
pub fn project(y: &[f64]) -> (f64, f64) {
    let v = vertices();
    let total: f64 = y.iter().sum();
    (0..3).fold((0.0, 0.0), |(x, z), j| (x + y[j] / total * v[j].0, z + y[j] / total * v[j].1))
}

// Clips a polygon (in composition coordinates) to `y_j >= bound`
// (`upper = false`) or `y_j <= bound` (`upper = true`).
fn clip(poly: &[[f64; 3]], j: usize, bound: f64, upper: bool) -> Vec<[f64; 3]> {
    let inside = |p: &[f64; 3]| if upper { p[j] <= bound } else { p[j] >= bound };
    let mut out = Vec::new();
    for k in 0..poly.len() {
        let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
        if inside(&a) {
            out.push(a);
        }
        if inside(&a) != inside(&b) {
            let t = (bound - a[j]) / (b[j] - a[j]);
            out.push([0, 1, 2].map(|i| a[i] + t * (b[i] - a[i])));
        }
    }
    out
}

/// Boundary of the region in composition coordinates; empty for grids.
pub fn region_outline(region: &PredictionRegion) -> Vec<[f64; 3]> {
    let bounds = match region {
        PredictionRegion::Box(b) => b.intervals.clone(),
        PredictionRegion::FloorPolytope(f) => f.tau.iter().map(|t| (*t, 1.0)).collect(),
        PredictionRegion::LevelSetGrid(_) => return Vec::new(),
    };
    let mut poly = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for (j, (lo, hi)) in bounds.iter().enumerate() {
        poly = clip(&poly, j, *lo, false);
        poly = clip(&poly, j, *hi, true);
    }
    poly
}

fn points_attr(poly: &[[f64; 3]]) -> String {
    poly.iter()
        .map(|p| {
            let (x, y) = project(p);
            format!("{x:.2},{y:.2}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// SVG document for the region, the predicted mean and, when given, the
/// observed response.
pub fn render_ternary_svg(
    region: &PredictionRegion,
    mean: &CompositionalVector,
    truth: Option<&CompositionalVector>,
    labels: [&str; 3],
) -> Result<String> {
    if region.dim() != 3 {
        return Err(Error::Dimension { expected: 3, got: region.dim() });
    }
    if mean.dim() != 3 || truth.is_some_and(|t| t.dim() != 3) {
        return Err(Error::Dimension { expected: 3, got: mean.dim() });
    }
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="14">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let corners = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let _ = writeln!(svg, r##"<polygon points="{}" fill="none" stroke="#333" stroke-width="1.5"/>"##, points_attr(&corners));
    for (v, (label, anchor, dy)) in vertices().iter().zip([(labels[0], "end", 18.0), (labels[1], "start", 18.0), (labels[2], "middle", -10.0)]) {
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{}</text>"#, v.0, v.1 + dy, escape(label));
    }

    let region_label = match region {
        PredictionRegion::Box(_) => {
            let _ = writeln!(
                svg,
                r##"<polygon class="region" points="{}" fill="none" stroke="#1f5fbf" stroke-width="2"/>"##,
                points_attr(&region_outline(region))
            );
            "QR box"
        }
        PredictionRegion::FloorPolytope(_) => {
            let _ = writeln!(
                svg,
                r##"<polygon class="region" points="{}" fill="#7fa7e0" fill-opacity="0.45" stroke="#1f5fbf" stroke-width="1.5"/>"##,
                points_attr(&region_outline(region))
            );
            "HDR floor"
        }
        PredictionRegion::LevelSetGrid(g) => {
            let _ = writeln!(svg, r##"<g class="region" fill="#1f5fbf" fill-opacity="0.6">"##);
            for p in &g.accepted {
                let (x, y) = project(p.parts());
                let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.2"/>"#);
            }
            let _ = writeln!(svg, "</g>");
            "HDR grid"
        }
    };

    let (mx, my) = project(mean.parts());
    let _ = writeln!(svg, r##"<circle class="mean" cx="{mx:.2}" cy="{my:.2}" r="6" fill="#f2c200" stroke="#333"/>"##);
    if let Some(t) = truth {
        let (tx, ty) = project(t.parts());
        let _ = writeln!(svg, r##"<polygon class="truth" points="{}" fill="#d62728" stroke="#333"/>"##, diamond(tx, ty, 7.0));
    }

    let (lx, ly) = (WIDTH - 190.0, 24.0);
    let _ = writeln!(svg, r##"<g class="legend"><rect x="{}" y="{}" width="175" height="78" fill="white" stroke="#999"/>"##, lx - 10.0, ly - 16.0);
    let _ = writeln!(svg, r##"<rect x="{lx}" y="{}" width="14" height="10" fill="#7fa7e0" stroke="#1f5fbf"/><text x="{}" y="{}">{region_label}</text>"##, ly - 8.0, lx + 22.0, ly + 2.0);
    let _ = writeln!(svg, r##"<circle cx="{}" cy="{}" r="6" fill="#f2c200" stroke="#333"/><text x="{}" y="{}">estimated mean</text>"##, lx + 7.0, ly + 20.0, lx + 22.0, ly + 25.0);
    if truth.is_some() {
        let _ = writeln!(svg, r##"<polygon points="{}" fill="#d62728" stroke="#333"/><text x="{}" y="{}">observed</text>"##, diamond(lx + 7.0, ly + 44.0, 7.0), lx + 22.0, ly + 49.0);
    }
    let _ = writeln!(svg, "</g>\n</svg>");
    Ok(svg)
}

fn diamond(x: f64, y: f64, r: f64) -> String {
    format!("{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}", x, y - r, x + r, y, x, y + r, x - r, y)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn emit_ternary_plot(
    region: &PredictionRegion,
    mean: &CompositionalVector,
    truth: Option<&CompositionalVector>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let svg = render_ternary_svg(region, mean, truth, ["y1", "y2", "y3"])?;
    std::fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertices_and_centroid() {
        let v = vertices();
        assert_eq!(project(&[1.0, 0.0, 0.0]), v[0]);
        assert_eq!(project(&[0.0, 1.0, 0.0]), v[1]);
        assert_eq!(project(&[0.0, 0.0, 1.0]), v[2]);
        let c = project(&[1.0 / 3.0; 3]);
        assert!((c.0 - (v[0].0 + v[1].0 + v[2].0) / 3.0).abs() < 1e-9);
        assert!((c.1 - (v[0].1 + v[1].1 + v[2].1) / 3.0).abs() < 1e-9);
    }
}
