//! Line charts written directly as SVG.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::artifacts::{AllocationRow, IroningRow, ALLOCATION, IRONING};
use crate::config::{Format, RunConfig};
use crate::error::{CliError, Result};
use crate::io::read_csv;

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN: f64 = 50.0;
/// Points kept per curve.
const MAX_POINTS: usize = 1025;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
}

fn series(label: &str, points: Vec<(f64, f64)>) -> Series {
    Series {
        label: label.to_string(),
        points,
    }
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<()> {
    let ironing: Vec<IroningRow> = read_csv(&out.join(IRONING))?;
    let allocation: Vec<AllocationRow> = read_csv(&out.join(ALLOCATION))?;
    let figures = [
        (
            "ironing",
            vec![
                Panel {
                    title: "cumulative surplus".into(),
                    series: vec![
                        series("G", ironing.iter().map(|r| (r.s, r.g)).collect()),
                        series("Gbar", ironing.iter().map(|r| (r.s, r.g_bar)).collect()),
                    ],
                },
                Panel {
                    title: "ironed surplus".into(),
                    series: vec![series("gbar", ironing.iter().map(|r| (r.s, r.gbar)).collect())],
                },
            ],
        ),
        (
            "allocation",
            vec![Panel {
                title: "interim allocation".into(),
                series: vec![
                    series("P_hat", allocation.iter().map(|r| (r.s, r.p_hat)).collect()),
                    series("P_star", allocation.iter().map(|r| (r.s, r.p_star)).collect()),
                ],
            }],
        ),
    ];
    for format in &cfg.output.formats {
        match format {
            Format::Svg => {
                for (name, panels) in &figures {
                    let path = out.join(format!("{name}.svg"));
                    fs::write(&path, render(panels)).map_err(|e| CliError::write(&path, e))?;
                    println!("wrote {}", path.display());
                }
            }
        }
    }
    Ok(())
}

fn y_range(panel: &Panel) -> (f64, f64) {
    let ys = panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).filter(|y| y.is_finite());
    let (lo, hi) = ys.fold((0.0f64, 0.0f64), |(lo, hi), y| (lo.min(y), hi.max(y)));
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn thin(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let stride = points.len().div_ceil(MAX_POINTS).max(1);
    let mut out: Vec<(f64, f64)> = points.iter().copied().step_by(stride).collect();
    if let Some(&last) = points.last() {
        if out.last() != Some(&last) {
            out.push(last);
        }
    }
    out
}

/// Panels side by side, each with `[0, 1]` on the horizontal axis.
pub fn render(panels: &[Panel]) -> String {
    let width = panels.len() as f64 * (PANEL_W + 2.0 * MARGIN);
    let height = PANEL_H + 2.0 * MARGIN;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, panel) in panels.iter().enumerate() {
        let x0 = i as f64 * (PANEL_W + 2.0 * MARGIN) + MARGIN;
        let y0 = MARGIN;
        let (lo, hi) = y_range(panel);
        let px = |x: f64| x0 + x * PANEL_W;
        let py = |y: f64| y0 + (hi - y) / (hi - lo) * PANEL_H;

        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
            px(0.5),
            y0 - 15.0,
            panel.title
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{x0}" y="{y0}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="black"/>"#
        );
        for k in 0..=4 {
            let x = k as f64 / 4.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/><text x="{0}" y="{3}" text-anchor="middle">{4}</text>"#,
                px(x),
                y0 + PANEL_H,
                y0 + PANEL_H + 5.0,
                y0 + PANEL_H + 18.0,
                x
            );
            let y = lo + (hi - lo) * k as f64 / 4.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/><text x="{3}" y="{4}" text-anchor="end">{5:.3}</text>"#,
                x0 - 5.0,
                py(y),
                x0,
                x0 - 8.0,
                py(y) + 4.0,
                y
            );
        }
        if lo < 0.0 && hi > 0.0 {
            let _ = writeln!(
                svg,
                r##"<line x1="{x0}" y1="{0}" x2="{1}" y2="{0}" stroke="#999" stroke-dasharray="4 3"/>"##,
                py(0.0),
                x0 + PANEL_W
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">s</text>"#,
            px(0.5),
            y0 + PANEL_H + 34.0
        );
        for (j, s) in panel.series.iter().enumerate() {
            let color = COLORS[j % COLORS.len()];
            let pts: Vec<String> = thin(&s.points)
                .into_iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
                pts.join(" "),
                s.label
            );
            let ly = y0 + 16.0 + 16.0 * j as f64;
            let lx = x0 + PANEL_W - 90.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{0}" x2="{1}" y2="{0}" stroke="{color}" stroke-width="2"/><text x="{2}" y="{3}">{4}</text>"#,
                ly,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                s.label
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
