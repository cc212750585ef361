//! Minimal static SVG bar charts for the analysis outputs. Hand-rolled so
//! chart files are small, dependency-free and byte-deterministic.

use std::fmt::Write as _;
use std::path::Path;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

/// Writes a vertical bar chart of labeled non-negative values.
pub fn write_bar_chart(
    path: &Path,
    title: &str,
    labels: &[String],
    values: &[f64],
) -> std::io::Result<()> {
    assert_eq!(labels.len(), values.len());
    let max = values.iter().copied().fold(0.0f64, f64::max).max(1e-12);
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let n = values.len().max(1) as f64;
    let slot = plot_w / n;
    let bar_w = slot * 0.8;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    // axes
    let x0 = MARGIN;
    let y0 = HEIGHT - MARGIN;
    let _ = writeln!(
        svg,
        r#"<line x1="{x0}" y1="{y0}" x2="{:.1}" y2="{y0}" stroke="black"/>"#,
        WIDTH - MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{MARGIN}" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{:.3}</text>"#,
        x0 - 6.0,
        MARGIN + 4.0,
        max
    );
    for (i, (label, &value)) in labels.iter().zip(values).enumerate() {
        let h = (value / max) * plot_h;
        let x = x0 + slot * i as f64 + (slot - bar_w) / 2.0;
        let y = y0 - h;
        let _ = writeln!(
            svg,
            r##"<rect x="{x:.1}" y="{y:.1}" width="{bar_w:.1}" height="{h:.1}" fill="#4878a8"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            x + bar_w / 2.0,
            y0 + 16.0,
            escape(label)
        );
    }
    let _ = writeln!(svg, "</svg>");
    std::fs::write(path, svg)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
