//! Static SVG renders of placements: pinned vertices as filled squares,
//! free vertices as circles, edges as lines whose opacity scales with
//! weight. Output is deterministic for identical inputs.

use std::fmt::Write as _;

use dimap::model::{Instance, Point};

const SCALE: f64 = 24.0;
const MARGIN_CELLS: f64 = 1.5;

/// Render an instance with its placement. `positions[v]` is where vertex
/// `v` sits; the caller has already checked the lengths match.
pub fn render(inst: &Instance, positions: &[Point]) -> String {
    assert_eq!(positions.len(), inst.n, "one position per vertex");
    let mut min_x = i64::MAX;
    let mut max_x = i64::MIN;
    let mut min_y = i64::MAX;
    let mut max_y = i64::MIN;
    let mut cover = |p: Point| {
        min_x = min_x.min(p.x);
        max_x = max_x.max(p.x);
        min_y = min_y.min(p.y);
        max_y = max_y.max(p.y);
    };
    for &p in positions {
        cover(p);
    }
    if let Some(side) = inst.grid.box_side(inst.n, inst.dim) {
        cover(Point::new(0, 0));
        cover(Point::new(side - 1, if inst.dim == 1 { 0 } else { side - 1 }));
    }
    let cx = |p: Point| ((p.x - min_x) as f64 + MARGIN_CELLS + 0.5) * SCALE;
    let cy = |p: Point| ((max_y - p.y) as f64 + MARGIN_CELLS + 0.5) * SCALE;
    let width = ((max_x - min_x) as f64 + 2.0 * MARGIN_CELLS + 1.0) * SCALE;
    let height = ((max_y - min_y) as f64 + 2.0 * MARGIN_CELLS + 1.0) * SCALE;

    let mut s = String::new();
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\">"
    )
    .unwrap();
    writeln!(s, "  <rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"#ffffff\"/>").unwrap();

    // Outline the grid for the box-constrained modes.
    if let Some(side) = inst.grid.box_side(inst.n, inst.dim) {
        let lo = Point::new(0, if inst.dim == 1 { 0 } else { side - 1 });
        let hi = Point::new(side - 1, 0);
        writeln!(
            s,
            "  <rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" \
             stroke=\"#9ca3af\" stroke-dasharray=\"4 3\"/>",
            cx(lo) - 0.5 * SCALE,
            cy(lo) - 0.5 * SCALE,
            cx(hi) - cx(lo) + SCALE,
            cy(hi) - cy(lo) + SCALE,
        )
        .unwrap();
    }

    let w_max = inst.edges.iter().map(|e| e.w).fold(0.0_f64, f64::max);
    for e in &inst.edges {
        if e.w <= 0.0 {
            continue; // zero-weight edges cost nothing and would be invisible
        }
        let (a, b) = (positions[e.u], positions[e.v]);
        let opacity = 0.15 + 0.85 * e.w / w_max;
        writeln!(
            s,
            "  <line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#1f2937\" \
             stroke-width=\"1.5\" stroke-opacity=\"{opacity:.3}\"/>",
            cx(a),
            cy(a),
            cx(b),
            cy(b),
        )
        .unwrap();
    }

    for (v, &p) in positions.iter().enumerate() {
        if inst.is_terminal(v) {
            let half = 0.3 * SCALE;
            writeln!(
                s,
                "  <rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" \
                 fill=\"#dc2626\"/>",
                cx(p) - half,
                cy(p) - half,
                2.0 * half,
                2.0 * half,
            )
            .unwrap();
        } else {
            writeln!(
                s,
                "  <circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"{:.1}\" fill=\"#60a5fa\" \
                 stroke=\"#1e3a8a\"/>",
                cx(p),
                cy(p),
                0.3 * SCALE,
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}
