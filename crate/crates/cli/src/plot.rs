//! Deterministic SVG line plots of the CSV outputs.
//!
//! Output depends only on the CSV bytes: fixed canvas, fixed palette, numbers
//! printed with two decimals, nothing time-dependent.

use std::fmt::Write as _;
use std::path::Path;

use clap::ValueEnum;

use crate::error::CliError;

pub const PATHS_HEADER: &str = "t,S,S_check,h,dist2_P,absorbed";
pub const TRIANGLE_HEADER: &str = "t,term1,term2,term3";
pub const TRIANGLE4_HEADER: &str = "t,term1,term2,term3,term4";
pub const COLLAPSE_HEADER: &str =
    "t,mean_S,se_S,mean_S_check,se_S_check,mean_h,se_h,bound,mean_het";

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    /// `S` against `t`, one line per replica.
    Paths,
    /// Replica-mean triangle terms against `t`.
    Triangle,
    /// Mean `h` with the Lyapunov bound overlaid.
    Collapse,
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    dashed: bool,
    color: &'static str,
}

/// Reads a numeric CSV and checks its header against the expected schemas.
fn read_table(text: &str, accepted: &[&str]) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Schema(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let joined = header.join(",");
    if !accepted.contains(&joined.as_str()) {
        return Err(CliError::Schema(format!(
            "header `{joined}`, expected one of {accepted:?}"
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Schema(e.to_string()))?;
        let row = record
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Schema(format!("row {}: {e}", i + 1)))?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn build_series(kind: PlotKind, text: &str) -> Result<(Vec<Series>, &'static str), CliError> {
    match kind {
        PlotKind::Paths => {
            let (_, rows) = read_table(text, &[PATHS_HEADER])?;
            // Replicas are stacked; a drop in `t` starts a new one.
            let mut series: Vec<Series> = Vec::new();
            let mut prev_t = f64::INFINITY;
            for row in rows {
                if row[0] <= prev_t {
                    let idx = series.len();
                    series.push(Series {
                        label: if idx == 0 {
                            "S (per replica)".into()
                        } else {
                            String::new()
                        },
                        points: Vec::new(),
                        dashed: false,
                        color: PALETTE[0],
                    });
                }
                prev_t = row[0];
                series.last_mut().unwrap().points.push((row[0], row[1]));
            }
            Ok((series, "S"))
        }
        PlotKind::Triangle => {
            let (header, rows) = read_table(text, &[TRIANGLE_HEADER, TRIANGLE4_HEADER])?;
            let series = (1..header.len())
                .map(|c| Series {
                    label: header[c].clone(),
                    points: rows.iter().map(|r| (r[0], r[c])).collect(),
                    dashed: false,
                    color: PALETTE[(c - 1) % PALETTE.len()],
                })
                .collect();
            Ok((series, "mean term"))
        }
        PlotKind::Collapse => {
            let (_, rows) = read_table(text, &[COLLAPSE_HEADER])?;
            let col = |c: usize| rows.iter().map(|r| (r[0], r[c])).collect();
            Ok((
                vec![
                    Series {
                        label: "mean h".into(),
                        points: col(5),
                        dashed: false,
                        color: PALETTE[0],
                    },
                    Series {
                        label: "bound".into(),
                        points: col(7),
                        dashed: true,
                        color: PALETTE[1],
                    },
                ],
                "h",
            ))
        }
    }
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 0.0 { lo.abs() * 0.1 } else { 1.0 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// Renders the plot for a CSV document.
pub fn render_svg(kind: PlotKind, csv_text: &str) -> Result<String, CliError> {
    let (series, y_label) = build_series(kind, csv_text)?;
    let finite = |v: f64| v.is_finite();
    let pts = || {
        series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|p| finite(p.0) && finite(p.1))
    };
    let (x0, x1) = nice_range(
        pts().map(|p| p.0).fold(f64::INFINITY, f64::min),
        pts().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = nice_range(
        pts().map(|p| p.1).fold(f64::INFINITY, f64::min).min(0.0),
        pts().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    );
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| MARGIN_TOP + (1.0 - (y - y0) / (y1 - y0)) * plot_h;

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#).unwrap();
    writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    let (left, right, top, bottom) = (
        MARGIN_LEFT,
        MARGIN_LEFT + plot_w,
        MARGIN_TOP,
        MARGIN_TOP + plot_h,
    );
    writeln!(w, r#"<g stroke="black" stroke-width="1">"#).unwrap();
    writeln!(
        w,
        r#"<line x1="{left:.2}" y1="{bottom:.2}" x2="{right:.2}" y2="{bottom:.2}"/>"#
    )
    .unwrap();
    writeln!(
        w,
        r#"<line x1="{left:.2}" y1="{top:.2}" x2="{left:.2}" y2="{bottom:.2}"/>"#
    )
    .unwrap();
    writeln!(w, "</g>").unwrap();
    writeln!(
        w,
        r#"<g font-family="sans-serif" font-size="11" fill="black">"#
    )
    .unwrap();
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (xp, yp) = (px(xv), py(yv));
        writeln!(
            w,
            r#"<line x1="{xp:.2}" y1="{bottom:.2}" x2="{xp:.2}" y2="{:.2}" stroke="black"/>"#,
            bottom + 4.0
        )
        .unwrap();
        writeln!(
            w,
            r#"<text x="{xp:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 17.0,
            tick(xv)
        )
        .unwrap();
        writeln!(
            w,
            r#"<line x1="{:.2}" y1="{yp:.2}" x2="{left:.2}" y2="{yp:.2}" stroke="black"/>"#,
            left - 4.0
        )
        .unwrap();
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 7.0,
            yp + 4.0,
            tick(yv)
        )
        .unwrap();
    }
    writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#,
        left + plot_w / 2.0,
        HEIGHT - 10.0
    )
    .unwrap();
    writeln!(
        w,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{y_label}</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    )
    .unwrap();
    writeln!(w, "</g>").unwrap();

    let mut legend_row = 0;
    for s in &series {
        let coords: Vec<String> = s
            .points
            .iter()
            .filter(|p| finite(p.0) && finite(p.1))
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        if !coords.is_empty() {
            let dash = if s.dashed {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            writeln!(
                w,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
                s.color,
                coords.join(" ")
            )
            .unwrap();
        }
        if !s.label.is_empty() {
            let ly = top + 10.0 + 18.0 * legend_row as f64;
            let lx = right + 15.0;
            let dash = if s.dashed {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            writeln!(w, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="1.5"{dash}/>"#, lx + 25.0, s.color).unwrap();
            writeln!(
                w,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
                lx + 30.0,
                ly + 4.0,
                s.label
            )
            .unwrap();
            legend_row += 1;
        }
    }
    writeln!(w, "</svg>").unwrap();
    Ok(svg)
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

/// Reads `csv_path`, writes the SVG to `svg_path`.
pub fn emit_plot(csv_path: &Path, kind: PlotKind, svg_path: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(csv_path).map_err(|e| CliError::io(csv_path, e))?;
    let svg = render_svg(kind, &text)?;
    std::fs::write(svg_path, svg).map_err(|e| CliError::io(svg_path, e))
}
