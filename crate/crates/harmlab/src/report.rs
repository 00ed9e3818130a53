//! Output plumbing: atomic file writes, pretty JSON, and small hand-rolled
//! SVG plots (semilog series and 2D heatmaps).

use crate::geometry::Point;
use std::fs;
use std::io;
use std::path::Path;

/// Write-temp-rename so partial files never appear under the final name.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn to_pretty_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Eight-stop dark-to-bright color ramp used by every heatmap.
pub const COLOR_RAMP: [&str; 8] = [
    "#440154", "#46327e", "#365c8d", "#277f8e", "#1fa187", "#4ac16d", "#a0da39", "#fde725",
];

fn ramp_color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let scaled = t * (COLOR_RAMP.len() - 1) as f64;
    let i = (scaled.floor() as usize).min(COLOR_RAMP.len() - 2);
    let frac = scaled - i as f64;
    let parse = |s: &str| -> (f64, f64, f64) {
        let v = u32::from_str_radix(&s[1..], 16).expect("hex");
        (
            ((v >> 16) & 0xff) as f64,
            ((v >> 8) & 0xff) as f64,
            (v & 0xff) as f64,
        )
    };
    let (r0, g0, b0) = parse(COLOR_RAMP[i]);
    let (r1, g1, b1) = parse(COLOR_RAMP[i + 1]);
    format!(
        "#{:02x}{:02x}{:02x}",
        (r0 + frac * (r1 - r0)).round() as u8,
        (g0 + frac * (g1 - g0)).round() as u8,
        (b0 + frac * (b1 - b0)).round() as u8
    )
}

/// Semilog plot of one or more named series (m, value); values at or below
/// zero are clipped to the floor of the plot.
pub fn semilog_svg(title: &str, series: &[(&str, Vec<(f64, f64)>)]) -> String {
    let (w, h, ml, mb) = (640.0, 420.0, 60.0, 40.0);
    let mut xmax = 1.0f64;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for (_, pts) in series {
        for &(x, y) in pts {
            xmax = xmax.max(x);
            if y > 0.0 {
                ymin = ymin.min(y.log10());
                ymax = ymax.max(y.log10());
            }
        }
    }
    if !ymin.is_finite() {
        ymin = -1.0;
        ymax = 0.0;
    }
    if (ymax - ymin).abs() < 1e-12 {
        ymax = ymin + 1.0;
    }
    let floor = ymin - 0.05 * (ymax - ymin);
    let px = |x: f64| ml + (w - ml - 20.0) * x / xmax;
    let py = |logy: f64| h - mb - (h - mb - 30.0) * (logy - floor) / (ymax - floor);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"18\" font-size=\"14\" text-anchor=\"middle\">{title}</text>\n",
        w / 2.0
    );
    // Axes and decade ticks.
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{ml}\" y1=\"30\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb,
        w - 20.0,
        h - mb,
        h - mb
    ));
    let mut dec = ymin.floor();
    while dec <= ymax.ceil() {
        let y = py(dec);
        if y > 30.0 && y < h - mb {
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#ddd\"/>\n\
                 <text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">1e{}</text>\n",
                ml,
                w - 20.0,
                ml - 4.0,
                y + 3.0,
                dec as i64
            ));
        }
        dec += 1.0;
    }
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    for (si, (name, pts)) in series.iter().enumerate() {
        let color = colors[si % colors.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| {
                let logy = if y > 0.0 { y.log10().max(floor) } else { floor };
                format!("{:.2},{:.2}", px(x), py(logy))
            })
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{name}</text>\n",
            w - 150.0,
            40.0 + 14.0 * si as f64
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">m</text>\n</svg>\n",
        (w + ml) / 2.0,
        h - 8.0
    ));
    svg
}

/// Heatmap of scattered 2D values on [0, 1], rendered as cells.
pub fn heatmap_svg(title: &str, points: &[Point], values: &[f64], cell: f64) -> String {
    let (w, h, ml, mt) = (560.0, 560.0, 40.0, 30.0);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x());
        x1 = x1.max(p.x());
        y0 = y0.min(p.y());
        y1 = y1.max(p.y());
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-12);
    let scale = (w - ml - 20.0) / span;
    let px = |x: f64| ml + (x - x0) * scale;
    let py = |y: f64| h - 40.0 - (y - y0) * scale;
    let side = cell * scale;

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">{title}</text>\n",
        w / 2.0,
        mt - 10.0
    );
    for (p, &v) in points.iter().zip(values) {
        svg.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n",
            px(p.x()) - side / 2.0,
            py(p.y()) - side / 2.0,
            side,
            side,
            ramp_color(v)
        ));
    }
    // Color bar legend.
    for i in 0..64 {
        let t = i as f64 / 63.0;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{:.2}\" width=\"14\" height=\"{:.2}\" fill=\"{}\"/>\n",
            w - 28.0,
            h - 60.0 - (t * 200.0) - 200.0 / 63.0,
            200.0 / 63.0 + 0.5,
            ramp_color(t)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"10\">1</text>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"10\">0</text>\n</svg>\n",
        w - 28.0,
        h - 266.0,
        w - 28.0,
        h - 48.0
    ));
    svg
}
