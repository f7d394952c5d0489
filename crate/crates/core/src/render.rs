//! CSV and SVG output for sampled regions.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::solution_set::SampleBox;
use crate::vector::Vector;

fn axis_names(d: usize) -> Vec<String> {
    match d {
        1 => vec!["x".into()],
        2 => vec!["x".into(), "y".into()],
        3 => vec!["x".into(), "y".into(), "z".into()],
        _ => (1..=d).map(|k| format!("x{k}")).collect(),
    }
}

/// One row per accepted point with `member = 1`; header `x,y,member` in
/// the plane.
pub fn region_csv(dim: usize, points: &[Vector]) -> String {
    let mut out = axis_names(dim).join(",");
    out.push_str(",member\n");
    for p in points {
        for c in p.iter() {
            let _ = write!(out, "{c},");
        }
        out.push_str("1\n");
    }
    out
}

const CANVAS: f64 = 600.0;
const MARGIN: f64 = 20.0;

/// Accepted lattice cells as filled squares and anchors as dots, over the
/// sampling box. Planar only.
pub fn region_svg(anchors: &[Vector], points: &[Vector], bx: &SampleBox, grid: usize) -> Result<String> {
    if bx.dim() != 2 || anchors.iter().any(|a| a.dim() != 2) {
        return Err(Error::InvalidInput("SVG output needs a planar instance (d = 2)".into()));
    }
    let (x0, x1) = bx.0[0];
    let (y0, y1) = bx.0[1];
    let wx = (x1 - x0).max(1e-300);
    let wy = (y1 - y0).max(1e-300);
    let sx = |x: f64| MARGIN + (x - x0) / wx * CANVAS;
    let sy = |y: f64| MARGIN + (y1 - y) / wy * CANVAS;
    let cells = grid.saturating_sub(1).max(1) as f64;
    let cw = CANVAS / cells;
    let size = CANVAS + 2.0 * MARGIN;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{CANVAS}" height="{CANVAS}" fill="#ffffff" stroke="#000000" stroke-width="1"/>"##
    );
    if (x0..=x1).contains(&0.0) {
        let _ = writeln!(
            out,
            r##"<line x1="{:.3}" y1="{MARGIN}" x2="{:.3}" y2="{:.3}" stroke="#bbbbbb" stroke-width="0.5"/>"##,
            sx(0.0),
            sx(0.0),
            MARGIN + CANVAS
        );
    }
    if (y0..=y1).contains(&0.0) {
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#bbbbbb" stroke-width="0.5"/>"##,
            sy(0.0),
            MARGIN + CANVAS,
            sy(0.0)
        );
    }
    out.push_str(r##"<g fill="#4a7ebb" fill-opacity="0.6">"##);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            r#"<rect x="{:.3}" y="{:.3}" width="{cw:.3}" height="{cw:.3}"/>"#,
            sx(p[0]) - cw / 2.0,
            sy(p[1]) - cw / 2.0
        );
    }
    out.push_str("</g>\n");
    for (i, a) in anchors.iter().enumerate() {
        let _ = writeln!(
            out,
            r##"<circle cx="{:.3}" cy="{:.3}" r="4" fill="#c0392b"/><text x="{:.3}" y="{:.3}" font-size="12" font-family="sans-serif">v{}</text>"##,
            sx(a[0]),
            sy(a[1]),
            sx(a[0]) + 6.0,
            sy(a[1]) - 6.0,
            i + 1
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
