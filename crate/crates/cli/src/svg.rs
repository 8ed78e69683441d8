//! Phase portraits as standalone SVG. Polylines stay in data coordinates;
//! a single affine transform flips `E` upward.

use std::fmt::Write;

use ep_transonic::portrait::{Portrait, TrajectoryClass};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;

fn colour(class: &TrajectoryClass) -> &'static str {
    match class {
        TrajectoryClass::StaysSupersonic => "#3b6ea8",
        TrajectoryClass::StaysSubsonic => "#4f9a5b",
        TrajectoryClass::Singular { .. } => "#9a9a9a",
        TrajectoryClass::SmoothCrossing { .. } => "#c0392b",
    }
}

pub fn portrait_svg(portrait: &Portrait) -> String {
    let s = &portrait.spec;
    let (x0, x1, y0, y1) = (s.n_min, s.n_max, s.e_min, s.e_max);
    let (w, h) = (x1 - x0, y1 - y0);
    let j = portrait.params.current();
    let alpha = portrait.params.alpha();
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="{x0} {} {w} {h}" preserveAspectRatio="none">"#,
        -y1
    );
    let _ = writeln!(out, r#"<defs><clipPath id="box"><rect x="{x0}" y="{y0}" width="{w}" height="{h}"/></clipPath></defs>"#);
    let _ = writeln!(out, r#"<g transform="matrix(1 0 0 -1 0 0)" fill="none" stroke-width="1.2">"#);
    let _ = writeln!(
        out,
        r##"<g id="axes" stroke="#000000"><rect x="{x0}" y="{y0}" width="{w}" height="{h}" vector-effect="non-scaling-stroke"/>"##
    );
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(out, r#"<line x1="{x0}" y1="0" x2="{x1}" y2="0" vector-effect="non-scaling-stroke"/>"#);
    }
    let _ = writeln!(out, "</g>");
    if x0 < j && j < x1 {
        let _ = writeln!(
            out,
            r##"<line id="sonic-line" x1="{j}" y1="{y0}" x2="{j}" y2="{y1}" stroke="#555555" stroke-dasharray="6 4" vector-effect="non-scaling-stroke"/>"##
        );
    }
    let _ = writeln!(out, r#"<g id="trajectories" clip-path="url(#box)">"#);
    for t in &portrait.trajectories {
        if t.points.len() < 2 {
            continue;
        }
        let mut pts = String::new();
        for (i, (n, e)) in t.points.iter().enumerate() {
            if !(n.is_finite() && e.is_finite()) {
                continue;
            }
            if i > 0 {
                pts.push(' ');
            }
            let _ = write!(pts, "{n},{e}");
        }
        let width = if t.class.crosses_smoothly() { 2.4 } else { 1.0 };
        let _ = writeln!(
            out,
            r#"<polyline points="{}" stroke="{}" stroke-width="{width}" vector-effect="non-scaling-stroke"/>"#,
            pts.trim(),
            colour(&t.class)
        );
    }
    let _ = writeln!(out, "</g>");
    if x0 < j && j < x1 && y0 < alpha && alpha < y1 {
        let r = 0.006 * w.min(h);
        let _ = writeln!(out, r##"<circle id="sonic-point" cx="{j}" cy="{alpha}" r="{r}" fill="#000000"/>"##);
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    out
}
