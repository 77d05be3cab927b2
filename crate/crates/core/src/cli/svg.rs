//! Minimal hand-written SVG figures.

use std::fmt::Write;

use crate::belief::Belief;
use crate::sim::{Environment, TrajectoryPoint};

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// One polyline of a line chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

/// Line chart on `[0, x_max] x [0, 1]` with a `y = x` reference line.
pub fn rate_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (560.0, 420.0);
    let (left, right, top, bottom) = (64.0, 170.0, 36.0, 52.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let x_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .fold(0.0f64, f64::max)
        .max(0.05)
        * 1.1;
    let sx = |x: f64| left + pw * x / x_max;
    let sy = |y: f64| top + ph * (1.0 - y.clamp(0.0, 1.0));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, left + pw / 2.0, escape(title));
    for k in 0..=5 {
        let y = k as f64 / 5.0;
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#dddddd"/><text x="{2}" y="{3:.2}" text-anchor="end">{y:.1}</text>"##,
            sy(y),
            left + pw,
            left - 6.0,
            sy(y) + 4.0
        );
    }
    let ticks = (x_max / 0.05).floor() as usize;
    let step = ticks.div_ceil(8).max(1);
    for k in (0..=ticks).step_by(step) {
        let x = k as f64 * 0.05;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x:.2}</text>"#,
            sx(x),
            top + ph + 16.0
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333333"/>"##
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    );
    // reference y = x
    let _ = writeln!(
        s,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555555" stroke-dasharray="2 3"/>"##,
        sx(0.0),
        sy(0.0),
        sx(x_max.min(1.0)),
        sy(x_max.min(1.0))
    );
    let mut legend_y = top + 8.0;
    let lx = left + pw + 12.0;
    let _ = writeln!(
        s,
        r##"<line x1="{lx}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="#555555" stroke-dasharray="2 3"/><text x="{}" y="{}">y = epsilon</text>"##,
        lx + 24.0,
        lx + 30.0,
        legend_y + 4.0
    );
    for (i, se) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = if se.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let pts: Vec<String> = se.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
            pts.join(" ")
        );
        for &(x, y) in &se.points {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
        }
        legend_y += 18.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 24.0,
            lx + 30.0,
            legend_y + 4.0,
            escape(&se.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Top-down render of one episode: free space, ground truth, path, start
/// and goal.
pub fn trajectory_plot(env: &Environment, trajectory: &[TrajectoryPoint], belief: Option<&Belief>, title: &str) -> String {
    let scale = 60.0;
    let margin = 20.0;
    let e = env.room.extent();
    let (w, h) = (e[0] * scale + 2.0 * margin, e[1] * scale + 2.0 * margin + 20.0);
    let tx = |x: f64| margin + (x - env.room.min[0]) * scale;
    let ty = |y: f64| 20.0 + margin + (env.room.max[1] - y) * scale;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w:.0}" height="{h:.0}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{margin}" y="16">{}</text>"#, escape(title));
    let _ = writeln!(
        s,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#eeeeee" stroke="#333333"/>"##,
        tx(env.room.min[0]),
        ty(env.room.max[1]),
        e[0] * scale,
        e[1] * scale
    );
    if let Some(b) = belief {
        // free cells, merged into horizontal runs
        let g = b.grid();
        let _ = writeln!(s, r##"<g fill="#b9e4c9">"##);
        for iy in 0..g.ny {
            let mut ix = 0;
            while ix < g.nx {
                if !b.is_free(g.index(ix, iy)) {
                    ix += 1;
                    continue;
                }
                let start = ix;
                while ix < g.nx && b.is_free(g.index(ix, iy)) {
                    ix += 1;
                }
                let r0 = g.cell_rect(start, iy);
                let r1 = g.cell_rect(ix - 1, iy);
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                    tx(r0.min[0]),
                    ty(r0.max[1]),
                    (r1.max[0] - r0.min[0]) * scale,
                    (r0.max[1] - r0.min[1]) * scale
                );
            }
        }
        s.push_str("</g>\n");
    }
    for b in &env.obstacles.boxes {
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#555555" fill-opacity="0.8"/>"##,
            tx(b.min[0]),
            ty(b.max[1]),
            (b.max[0] - b.min[0]) * scale,
            (b.max[1] - b.min[1]) * scale
        );
    }
    let _ = writeln!(
        s,
        r##"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="#ffd54f" fill-opacity="0.5" stroke="#c79a00"/>"##,
        tx(env.goal[0]),
        ty(env.goal[1]),
        env.goal_radius * scale
    );
    if !trajectory.is_empty() {
        let pts: Vec<String> = trajectory
            .iter()
            .map(|p| format!("{:.2},{:.2}", tx(p.state.x), ty(p.state.y)))
            .collect();
        let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##, pts.join(" "));
    }
    let _ = writeln!(
        s,
        r##"<circle cx="{:.2}" cy="{:.2}" r="5" fill="#2ca02c"/>"##,
        tx(env.start[0]),
        ty(env.start[1])
    );
    s.push_str("</svg>\n");
    s
}
