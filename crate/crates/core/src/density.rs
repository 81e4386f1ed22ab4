//! Gaussian kernel density of index values and a standalone SVG plot.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRID_POINTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub bandwidth: f64,
    pub points: Vec<DensityPoint>,
}

impl Density {
    /// Trapezoid-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| 0.5 * (w[0].y + w[1].y) * (w[1].x - w[0].x))
            .sum()
    }

    /// Grid location of the highest density.
    pub fn mode(&self) -> f64 {
        self.points
            .iter()
            .fold(None::<DensityPoint>, |best, p| match best {
                Some(b) if b.y >= p.y => Some(b),
                _ => Some(*p),
            })
            .map(|p| p.x)
            .unwrap_or(f64::NAN)
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Silverman's rule of thumb, `0.9 · min(sd, IQR/1.34) · n^(−1/5)`.
///
/// Falls back to whichever spread measure is non-zero, and to a small
/// multiple of the centre when all values coincide.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = (quantile(&sorted, 0.75) - quantile(&sorted, 0.25)) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => 0.0,
    };
    if spread > 0.0 {
        0.9 * spread * n.powf(-0.2)
    } else {
        1e-3 * mean.abs().max(1.0)
    }
}

/// Kernel density on a 512-point grid spanning `[min − 3h, max + 3h]`.
pub fn emit_density(values: &[f64], bandwidth: Option<f64>) -> Result<Density> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "density needs at least 2 values, got {}",
            values.len()
        )));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid("values", format!("non-finite value {bad}")));
    }
    let h = match bandwidth {
        Some(h) if h.is_finite() && h > 0.0 => h,
        Some(h) => {
            return Err(Error::invalid(
                "bandwidth",
                format!("must be positive, got {h}"),
            ))
        }
        None => silverman_bandwidth(values),
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = (min - 3.0 * h, max + 3.0 * h);
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let points = (0..GRID_POINTS)
        .map(|i| {
            let x = lo + step * i as f64;
            let y = values
                .iter()
                .map(|v| {
                    let z = (x - v) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm;
            DensityPoint { x, y }
        })
        .collect();
    Ok(Density {
        bandwidth: h,
        points,
    })
}

/// A vertical marker drawn across the plot.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceLine {
    pub x: f64,
    pub colour: &'static str,
    pub label: String,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

/// Render the density curve as a self-contained SVG document.
pub fn render_svg(density: &Density, title: &str, lines: &[ReferenceLine]) -> String {
    let xs = density.points.iter().map(|p| p.x);
    let mut x_lo = xs.clone().fold(f64::INFINITY, f64::min);
    let mut x_hi = xs.fold(f64::NEG_INFINITY, f64::max);
    for l in lines {
        x_lo = x_lo.min(l.x);
        x_hi = x_hi.max(l.x);
    }
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    let y_hi = density
        .points
        .iter()
        .map(|p| p.y)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let px = |x: f64| MARGIN + (x - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - y / y_hi * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    // axes
    let _ = writeln!(
        svg,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN
    );
    for i in 0..=4 {
        let x = x_lo + (x_hi - x_lo) * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{:.2}</text>"#,
            px(x),
            HEIGHT - MARGIN + 16.0,
            x
        );
    }
    let mut path = String::new();
    for (i, p) in density.points.iter().enumerate() {
        let _ = write!(
            path,
            "{}{:.2},{:.2}",
            if i == 0 { "M" } else { " L" },
            px(p.x),
            py(p.y)
        );
    }
    let _ = writeln!(
        svg,
        r#"<path d="{path}" fill="none" stroke="steelblue" stroke-width="2"/>"#
    );
    for l in lines {
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{t}" x2="{x:.2}" y2="{b}" stroke="{c}" stroke-width="1.5"/>"#,
            x = px(l.x),
            t = MARGIN,
            b = HEIGHT - MARGIN,
            c = l.colour
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="{}">{}</text>"#,
            px(l.x) + 4.0,
            MARGIN + 12.0,
            l.colour,
            escape(&l.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Parse a list of values: one number per line, or a CSV whose header has a
/// `sgi` or `value` column. Blank lines and `#` comments are skipped.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let Some((first_no, first)) = lines.next() else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    let column = if first.parse::<f64>().is_ok() {
        out.push(parse_cell(first, first_no)?);
        None
    } else {
        let header: Vec<&str> = first.split(',').map(str::trim).collect();
        let idx = header
            .iter()
            .position(|h| *h == "sgi" || *h == "value")
            .ok_or_else(|| Error::Schema("values file needs an `sgi` or `value` column".into()))?;
        Some(idx)
    };
    for (no, line) in lines {
        let cell = match column {
            None => line,
            Some(idx) => line
                .split(',')
                .nth(idx)
                .map(str::trim)
                .ok_or_else(|| Error::Data {
                    location: crate::error::CellLocation {
                        file: "values".into(),
                        row: no as u64,
                        column: None,
                    },
                    message: "row is shorter than the header".into(),
                })?,
        };
        out.push(parse_cell(cell, no)?);
    }
    Ok(out)
}

fn parse_cell(cell: &str, line: usize) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Data {
            location: crate::error::CellLocation {
                file: "values".into(),
                row: line as u64,
                column: None,
            },
            message: format!("`{cell}` is not a finite number"),
        }),
    }
}
