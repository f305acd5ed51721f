//! CSV and SVG emission. All floating-point output uses 17 significant
//! digits so files round-trip exactly.

use crate::grid::FieldSnapshot;
use crate::profiles::ProfileSample;
use crate::{Error, Result};
use std::fmt::Write as _;

/// `{:.16e}` gives 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Profile dump: `y,value,derivative`.
pub fn profile_csv(samples: &[ProfileSample]) -> String {
    let mut out = String::from("y,value,derivative\n");
    for s in samples {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_f64(s.y),
            fmt_f64(s.value),
            fmt_f64(s.derivative)
        );
    }
    out
}

/// Snapshot dump: `r,value`.
pub fn snapshot_csv(f: &FieldSnapshot) -> String {
    let mut out = String::from("r,value\n");
    for (i, &r) in f.grid.nodes().iter().enumerate() {
        let _ = writeln!(out, "{},{}", fmt_f64(r), fmt_f64(f.values[i]));
    }
    out
}

/// Generic two-column dump.
pub fn xy_csv(header: &str, xs: &[f64], ys: &[f64]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for (x, y) in xs.iter().zip(ys) {
        let _ = writeln!(out, "{},{}", fmt_f64(*x), fmt_f64(*y));
    }
    out
}

// ---------------------------------------------------------------------------
// SVG plotting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axes {
    Linear,
    LogLog,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PlotStyle {
    pub axes: Axes,
    pub title: String,
    /// Annotate the fitted log-log slope of the first series.
    pub annotate_slope: bool,
    pub width: f64,
    pub height: f64,
}

impl Default for PlotStyle {
    fn default() -> Self {
        PlotStyle {
            axes: Axes::Linear,
            title: String::new(),
            annotate_slope: false,
            width: 640.0,
            height: 440.0,
        }
    }
}

const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// Render series into a standalone SVG 1.1 document.
pub fn emit_plot(series: &[Series], style: &PlotStyle) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.xs.is_empty()) {
        return Err(Error::invalid("emit_plot needs at least one nonempty series"));
    }
    let transform = |v: f64| -> Option<f64> {
        match style.axes {
            Axes::Linear => Some(v),
            Axes::LogLog => {
                if v > 0.0 {
                    Some(v.log10())
                } else {
                    None
                }
            }
        }
    };
    let mut pts: Vec<Vec<(f64, f64)>> = Vec::new();
    for s in series {
        if s.xs.len() != s.ys.len() {
            return Err(Error::invalid("series coordinate lengths differ"));
        }
        let p: Vec<(f64, f64)> = s
            .xs
            .iter()
            .zip(&s.ys)
            .filter_map(|(&x, &y)| Some((transform(x)?, transform(y)?)))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        pts.push(p);
    }
    if pts.iter().all(|p| p.is_empty()) {
        return Err(Error::invalid("no plottable points after axis transform"));
    }
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for p in &pts {
        for &(x, y) in p {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    if y_max == y_min {
        y_max = y_min + 1.0;
    }
    let (w, h) = (style.width, style.height);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let sx = |x: f64| ml + (x - x_min) / (x_max - x_min) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y - y_min) / (y_max - y_min) * (h - mt - mb);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#
    );
    // frame
    let _ = writeln!(
        svg,
        r##"<rect x="{ml}" y="{mt}" width="{}" height="{}" fill="none" stroke="#444" stroke-width="1"/>"##,
        w - ml - mr,
        h - mt - mb
    );
    // axis ticks (4 per axis)
    for i in 0..=4 {
        let fx = x_min + (x_max - x_min) * i as f64 / 4.0;
        let fy = y_min + (y_max - y_min) * i as f64 / 4.0;
        let label_x = match style.axes {
            Axes::Linear => trim_num(fx),
            Axes::LogLog => format!("1e{fx:.2}"),
        };
        let label_y = match style.axes {
            Axes::Linear => trim_num(fy),
            Axes::LogLog => format!("1e{fy:.2}"),
        };
        let _ = writeln!(
            svg,
            r##"<text x="{}" y="{}" font-size="11" text-anchor="middle" fill="#333">{}</text>"##,
            sx(fx),
            h - mb + 16.0,
            label_x
        );
        let _ = writeln!(
            svg,
            r##"<text x="{}" y="{}" font-size="11" text-anchor="end" fill="#333">{}</text>"##,
            ml - 6.0,
            sy(fy) + 4.0,
            label_y
        );
    }
    if !style.title.is_empty() {
        let _ = writeln!(
            svg,
            r##"<text x="{}" y="24" font-size="14" text-anchor="middle" fill="#111">{}</text>"##,
            0.5 * w,
            xml_escape(&style.title)
        );
    }
    for (si, p) in pts.iter().enumerate() {
        if p.is_empty() {
            continue;
        }
        let color = PALETTE[si % PALETTE.len()];
        let mut path = String::new();
        for (i, &(x, y)) in p.iter().enumerate() {
            let _ = write!(path, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, sx(x), sy(y));
        }
        let _ = writeln!(
            svg,
            r#"<path d="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            w - mr - 150.0,
            mt + 16.0 + 14.0 * si as f64,
            xml_escape(&series[si].name)
        );
    }
    if style.annotate_slope && pts[0].len() >= 2 {
        let xs: Vec<f64> = pts[0].iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts[0].iter().map(|p| p.1).collect();
        if let Ok((_, slope)) = crate::numerics::linear_fit(&xs, &ys) {
            let _ = writeln!(
                svg,
                r##"<text x="{}" y="{}" font-size="12" fill="#111">slope = {slope:.4}</text>"##,
                ml + 10.0,
                mt + 18.0
            );
        }
    }
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}

fn trim_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Minimal well-formedness check used by tests and the report command:
/// every opened tag is closed in order and entities are intact.
pub fn xml_well_formed(doc: &str) -> bool {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = doc;
    while let Some(start) = rest.find('<') {
        let Some(end_rel) = rest[start..].find('>') else {
            return false;
        };
        let tag = &rest[start + 1..start + end_rel];
        rest = &rest[start + end_rel + 1..];
        if tag.starts_with('?') || tag.starts_with('!') {
            continue;
        }
        if let Some(name) = tag.strip_prefix('/') {
            match stack.pop() {
                Some(open) if open == name => {}
                _ => return false,
            }
        } else if !tag.ends_with('/') {
            let name: String = tag
                .split_whitespace()
                .next()
                .unwrap_or("")
                .chars()
                .collect();
            stack.push(name);
        }
    }
    stack.is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digit_roundtrip() {
        for &v in &[std::f64::consts::PI, 1.0 / 3.0, 1e-300, -7.25] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, v, "{s}");
        }
    }

    #[test]
    fn small_series_is_valid_xml() {
        let s = Series {
            name: "demo".into(),
            xs: (0..10).map(|i| i as f64 + 1.0).collect(),
            ys: (0..10).map(|i| (i as f64 + 1.0) * 2.0).collect(),
        };
        let svg = emit_plot(&[s], &PlotStyle::default()).unwrap();
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains("version=\"1.1\""));
        assert!(xml_well_formed(&svg), "{svg}");
    }

    #[test]
    fn loglog_slope_annotation_of_power_law() {
        // μ₀(t) against (T-t) is an exact power law with slope 2k
        let k = 2;
        let t_end = 0.01_f64;
        let xs: Vec<f64> = (1..40).map(|i| t_end * i as f64 / 64.0).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&dt| 3.0_f64.sqrt() * dt.powi(2 * k))
            .collect();
        let svg = emit_plot(
            &[Series {
                name: "mu0".into(),
                xs,
                ys,
            }],
            &PlotStyle {
                axes: Axes::LogLog,
                annotate_slope: true,
                ..PlotStyle::default()
            },
        )
        .unwrap();
        assert!(svg.contains("slope = 4.0000"), "{svg}");
        assert!(xml_well_formed(&svg));
    }

    #[test]
    fn empty_input_rejected() {
        assert!(emit_plot(&[], &PlotStyle::default()).is_err());
    }
}
