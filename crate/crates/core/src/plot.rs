//! Static SVG line charts from parsed CSV tables.
//!
//! Rendering is pure string assembly with fixed-precision coordinates, so
//! one table and one spec always give byte-equal output. Non-finite cells
//! are dropped from their series; everything else is drawn as a polyline
//! with circular markers, one series per requested y column.

use crate::error::{Error, Result};
use crate::io::CsvTable;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 58.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// What to draw: one x column against any number of y columns.
#[derive(Clone, Debug)]
pub struct PlotSpec {
    pub x_column: String,
    pub y_columns: Vec<String>,
    pub title: String,
}

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    /// Covering interval with 5% padding; degenerate spans widen to a unit
    /// window so single-valued series still render.
    fn covering(values: impl Iterator<Item = f64>) -> Option<Axis> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo > hi {
            return None;
        }
        if lo == hi {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.05 * (hi - lo);
        Some(Axis {
            lo: lo - pad,
            hi: hi + pad,
        })
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        (0..=4)
            .map(|i| self.lo + (self.hi - self.lo) * (i as f64) / 4.0)
            .collect()
    }
}

fn coord(v: f64) -> String {
    format!("{v:.2}")
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && (a >= 1e4 || a < 1e-3) {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the requested series as an SVG line chart. Fails when a column
/// is missing or when no series has a single finite point.
pub fn render_svg(table: &CsvTable, spec: &PlotSpec) -> Result<String> {
    if spec.y_columns.is_empty() {
        return Err(Error::Format {
            context: "plot".into(),
            message: "no y columns requested".into(),
        });
    }
    let xs = table.column(&spec.x_column)?;
    let series: Vec<(String, Vec<f64>)> = spec
        .y_columns
        .iter()
        .map(|name| Ok((name.clone(), table.column(name)?)))
        .collect::<Result<Vec<_>>>()?;

    let points: Vec<(&String, Vec<(f64, f64)>)> = series
        .iter()
        .map(|(name, ys)| {
            let pts = xs
                .iter()
                .zip(ys)
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(&x, &y)| (x, y))
                .collect();
            (name, pts)
        })
        .collect();
    if points.iter().all(|(_, pts)| pts.is_empty()) {
        return Err(Error::Format {
            context: "plot".into(),
            message: "no finite data points in any series".into(),
        });
    }

    let x_axis = Axis::covering(points.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)))
        .expect("nonempty by the check above");
    let y_axis = Axis::covering(points.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)))
        .expect("nonempty by the check above");
    let to_px = |x: f64, y: f64| {
        let px = MARGIN_LEFT + x_axis.frac(x) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT);
        let py = HEIGHT - MARGIN_BOTTOM - y_axis.frac(y) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);
        (px, py)
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        coord(WIDTH / 2.0),
        escape(&spec.title)
    ));

    // Frame and ticks.
    let (x0, y0) = (MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM);
    let (x1, y1) = (WIDTH - MARGIN_RIGHT, MARGIN_TOP);
    svg.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
        coord(x0),
        coord(y1),
        coord(x1 - x0),
        coord(y0 - y1)
    ));
    for t in x_axis.ticks() {
        let (px, _) = to_px(t, y_axis.lo);
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#333\"/>\n",
            coord(px),
            coord(y0),
            coord(y0 + 5.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            coord(px),
            coord(y0 + 20.0),
            tick_label(t)
        ));
    }
    for t in y_axis.ticks() {
        let (_, py) = to_px(x_axis.lo, t);
        svg.push_str(&format!(
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"#333\"/>\n",
            coord(py),
            coord(x0 - 5.0),
            coord(x0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            coord(x0 - 9.0),
            coord(py + 4.0),
            tick_label(t)
        ));
    }

    // Axis labels carry the column names.
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        coord((x0 + x1) / 2.0),
        coord(HEIGHT - 14.0),
        escape(&spec.x_column)
    ));
    let y_label = spec.y_columns.join(", ");
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        coord((y0 + y1) / 2.0),
        coord((y0 + y1) / 2.0),
        escape(&y_label)
    ));

    for (idx, (name, pts)) in points.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let color = PALETTE[idx % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| {
                let (px, py) = to_px(x, y);
                format!("{},{}", coord(px), coord(py))
            })
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            color,
            path.join(" ")
        ));
        for &(x, y) in pts {
            let (px, py) = to_px(x, y);
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\"/>\n",
                coord(px),
                coord(py),
                color
            ));
        }
        let ly = MARGIN_TOP + 16.0 + 16.0 * idx as f64;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n",
            coord(x1 - 130.0),
            coord(ly - 9.0),
            color
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            coord(x1 - 116.0),
            coord(ly),
            escape(name)
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}
