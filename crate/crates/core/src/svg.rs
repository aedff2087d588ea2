//! SVG rendering of tiled components.

use std::fmt::Write;

use crate::complex::VertexId;
use crate::tiler::{ConePoint, RectTile, Target, TiledComponent};

/// `π/2`, `π`, `3π/2`, `2π`, ... from a count of quarter turns.
pub fn angle_label(quarter_turns: i64) -> String {
    match quarter_turns {
        1 => "π/2".into(),
        2 => "π".into(),
        q if q % 2 == 0 => format!("{}π", q / 2),
        q => format!("{q}π/2"),
    }
}

fn vertex_range(tiles: &[RectTile], v: VertexId) -> Option<(f64, f64, f64)> {
    let mut x = None;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in tiles {
        let at = if t.edge.0 == v {
            t.x[1]
        } else if t.edge.1 == v {
            t.x[0]
        } else {
            continue;
        };
        x = Some(at);
        lo = lo.min(t.y[0]);
        hi = hi.max(t.y[1]);
    }
    x.map(|x| (x, lo, hi))
}

/// One chart: tiles as rectangles with edge labels, dashed seams at sides
/// that lie on interior levels, circled cone points.
pub fn render_component(tc: &TiledComponent, cones: &[ConePoint], k: f64, scale: f64) -> String {
    let (x0, x1) = tc.target.x_range();
    let extent = tc.target.extent();
    let span = (x1 - x0).max(extent).max(f64::MIN_POSITIVE);
    let s = scale / span;
    let pad = 20.0;
    let (w, h) = ((x1 - x0) * s + 2.0 * pad, extent * s + 2.0 * pad);
    let px = |x: f64| pad + (x - x0) * s;
    let py = |y: f64| pad + (extent - y) * s;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.2}" height="{h:.2}" viewBox="0 0 {w:.2} {h:.2}">"#
    );
    let _ = writeln!(
        out,
        r##"<rect x="{:.4}" y="{:.4}" width="{:.4}" height="{:.4}" fill="none" stroke="#999" stroke-width="0.5"/>"##,
        px(x0),
        py(extent),
        (x1 - x0) * s,
        extent * s
    );
    let mut tiles: Vec<&RectTile> = tc.tiles.iter().collect();
    tiles.sort_by_key(|t| t.edge);
    for t in tiles {
        let mut pieces = vec![(t.y[0], t.y[1])];
        if tc.target.is_cyclic() && t.y[1] > extent {
            pieces = vec![(t.y[0], extent), (0.0, t.y[1] - extent)];
        }
        let fill = if t.embedded { "#dde8f4" } else { "#f4dede" };
        for (a, b) in pieces {
            let _ = writeln!(
                out,
                r##"<rect x="{:.4}" y="{:.4}" width="{:.4}" height="{:.4}" fill="{fill}" stroke="#234" stroke-width="0.4"/>"##,
                px(t.x[0]),
                py(b),
                t.width * s,
                (b - a) * s
            );
        }
        if t.width * s > 18.0 && t.height * s > 8.0 {
            let _ = writeln!(
                out,
                r#"<text x="{:.4}" y="{:.4}" font-size="6" text-anchor="middle">{}-{}</text>"#,
                px(0.5 * (t.x[0] + t.x[1])),
                py(t.y[0] + 0.5 * t.height.min(extent - t.y[0])) + 2.0,
                t.edge.0,
                t.edge.1
            );
        }
    }
    let tol = 1e-9 * k;
    for x in [x0, x1] {
        if x > tol && x < k - tol {
            let _ = writeln!(
                out,
                r##"<line x1="{:.4}" y1="{:.4}" x2="{:.4}" y2="{:.4}" stroke="#c00" stroke-width="1" stroke-dasharray="4 3"/>"##,
                px(x),
                py(0.0),
                px(x),
                py(extent)
            );
        }
    }
    let identified: Vec<(VertexId, [f64; 3])> = match &tc.target {
        Target::SlicedRectangle { identified, .. } => identified
            .iter()
            .flat_map(|p| p.segments.iter().map(move |s| (p.vertex, *s)))
            .collect(),
        _ => Vec::new(),
    };
    for cone in cones {
        let marks: Vec<[f64; 3]> = {
            let own: Vec<[f64; 3]> = identified
                .iter()
                .filter(|(v, _)| *v == cone.vertex)
                .map(|(_, s)| *s)
                .collect();
            if own.is_empty() {
                vertex_range(&tc.tiles, cone.vertex)
                    .map(|(x, a, b)| vec![[x, a, b]])
                    .unwrap_or_default()
            } else {
                own
            }
        };
        for [x, a, b] in marks {
            let y = 0.5 * (a + b.min(a + extent));
            let _ = writeln!(
                out,
                r##"<circle cx="{:.4}" cy="{:.4}" r="3" fill="none" stroke="#080" stroke-width="1"/>"##,
                px(x),
                py(y)
            );
            let _ = writeln!(
                out,
                r##"<text x="{:.4}" y="{:.4}" font-size="7" fill="#080">{}</text>"##,
                px(x) + 4.0,
                py(y) - 4.0,
                angle_label(cone.quarter_turns)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        assert_eq!(angle_label(1), "π/2");
        assert_eq!(angle_label(2), "π");
        assert_eq!(angle_label(4), "2π");
        assert_eq!(angle_label(3), "3π/2");
        assert_eq!(angle_label(8), "4π");
    }
}
