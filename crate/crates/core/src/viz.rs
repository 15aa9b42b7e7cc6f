//! Vector Field Visualisation rendered as standalone SVG 1.1.
//!
//! Each successful scan row becomes a marker at the Robinson projection of
//! its programmed state, filled by the purity of its reconstruction. An
//! arrow runs from the marker to the projection of the reconstructed
//! direction `a_out / |a_out|`. A vertical legend shows the purity scale with
//! a red line at the mean purity.
//!
//! Output is byte-stable: no timestamps, fixed element order, and every
//! number printed with four decimals.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bloch::{purity, BlochVector};
use crate::error::{Error, Result};
use crate::projection::{max_abs_x, max_abs_y, robinson_project, GeoPoint, PlanePoint};
use crate::scan::ScanResult;

/// Reconstructions shorter than this have no direction to draw.
pub const MIN_DIRECTION_NORM: f64 = 1e-9;

const MARGIN: f64 = 20.0;
const LEGEND_WIDTH: f64 = 110.0;

/// Viridis anchor colours, low to high.
const VIRIDIS: [(u8, u8, u8); 9] = [
    (0x44, 0x01, 0x54),
    (0x47, 0x2d, 0x7b),
    (0x3b, 0x52, 0x8b),
    (0x2c, 0x72, 0x8e),
    (0x21, 0x91, 0x8c),
    (0x28, 0xae, 0x80),
    (0x5e, 0xc9, 0x62),
    (0xad, 0xdc, 0x30),
    (0xfd, 0xe7, 0x25),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColorMap {
    /// Only `viridis` is available.
    pub name: String,
    /// Purity range mapped onto the colour scale. Defaults to
    /// `[min purity - 0.005, 1.0]` over the rendered rows.
    pub range: Option<(f64, f64)>,
}

impl Default for ColorMap {
    fn default() -> Self {
        Self {
            name: "viridis".to_string(),
            range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VfvStyle {
    pub colormap: ColorMap,
    /// Pixels per radian of angular error used to size arrows for the
    /// visibility test. Defaults to the map's pixels per plane unit.
    pub arrow_scale: Option<f64>,
    /// Marker radius in pixels; arrows shorter than half of it are dropped.
    pub marker_radius: f64,
    pub show_mean_line: bool,
    pub width_px: f64,
    pub height_px: f64,
    pub title: Option<String>,
}

impl Default for VfvStyle {
    fn default() -> Self {
        Self {
            colormap: ColorMap::default(),
            arrow_scale: None,
            marker_radius: 10.0,
            show_mean_line: true,
            width_px: 1000.0,
            height_px: 520.0,
            title: None,
        }
    }
}

impl VfvStyle {
    pub fn validate(&self) -> Result<()> {
        if self.colormap.name != "viridis" {
            return Err(Error::InvalidConfig(format!(
                "unknown colormap '{}'",
                self.colormap.name
            )));
        }
        if let Some((lo, hi)) = self.colormap.range {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(Error::InvalidConfig(format!(
                    "colormap range [{lo}, {hi}] is empty"
                )));
            }
        }
        if self.marker_radius.is_nan() || self.marker_radius <= 0.0 {
            return Err(Error::InvalidConfig(
                "marker_radius must be positive".into(),
            ));
        }
        if !(self.width_px > LEGEND_WIDTH + 4.0 * MARGIN && self.height_px > 4.0 * MARGIN) {
            return Err(Error::InvalidConfig("canvas is too small".into()));
        }
        if matches!(self.arrow_scale, Some(s) if s.is_nan() || s <= 0.0) {
            return Err(Error::InvalidConfig("arrow_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Formats with four decimals, never printing `-0.0000`.
pub fn fmt4(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".to_string()
    } else {
        s
    }
}

pub fn colormap_rgb(t: f64) -> (u8, u8, u8) {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let pos = t * (VIRIDIS.len() - 1) as f64;
    let i = (pos.floor() as usize).min(VIRIDIS.len() - 2);
    let f = pos - i as f64;
    let lerp = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * f).round() as u8;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    (lerp(a.0, b.0), lerp(a.1, b.1), lerp(a.2, b.2))
}

fn hex(c: (u8, u8, u8)) -> String {
    format!("#{:02x}{:02x}{:02x}", c.0, c.1, c.2)
}

/// Relative height of the mean line in the legend bar, clamped to `[0, 1]`.
pub fn mean_line_fraction(mean: f64, range: (f64, f64)) -> f64 {
    ((mean - range.0) / (range.1 - range.0)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendBox {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

/// Gradient bar with five tick labels and, when `mean` is given, a red line
/// at its proportional height. Expects a `purity-gradient` definition in the
/// enclosing document (see [`legend_gradient_def`]).
pub fn render_purity_legend(mean: Option<f64>, range: (f64, f64), bbox: LegendBox) -> String {
    let mut s = String::new();
    let bottom = bbox.y + bbox.height;
    let _ = writeln!(s, r#"<g id="legend">"#);
    let _ = writeln!(
        s,
        r##"<rect id="legend-bar" x="{}" y="{}" width="{}" height="{}" fill="url(#purity-gradient)" stroke="#000000" stroke-width="1.0000"/>"##,
        fmt4(bbox.x),
        fmt4(bbox.y),
        fmt4(bbox.width),
        fmt4(bbox.height)
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let y = bottom - f * bbox.height;
        let value = range.0 + f * (range.1 - range.0);
        let _ = writeln!(
            s,
            r##"<line class="tick" x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#000000" stroke-width="1.0000"/>"##,
            fmt4(bbox.x + bbox.width),
            fmt4(bbox.x + bbox.width + 4.0),
            y = fmt4(y)
        );
        let _ = writeln!(
            s,
            r#"<text class="tick-label" x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            fmt4(bbox.x + bbox.width + 6.0),
            fmt4(y + 4.0),
            fmt4(value)
        );
    }
    if let Some(m) = mean {
        let y = bottom - mean_line_fraction(m, range) * bbox.height;
        let _ = writeln!(
            s,
            r##"<line id="mean-line" x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#ff0000" stroke-width="2.0000"/>"##,
            fmt4(bbox.x - 3.0),
            fmt4(bbox.x + bbox.width + 3.0),
            y = fmt4(y)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">purity</text>"#,
        fmt4(bbox.x),
        fmt4(bbox.y - 8.0)
    );
    s.push_str("</g>\n");
    s
}

/// The vertical `purity-gradient` paint server used by the legend bar.
pub fn legend_gradient_def() -> String {
    let mut s = String::from(
        "<linearGradient id=\"purity-gradient\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">\n",
    );
    for (k, c) in VIRIDIS.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<stop offset="{}" stop-color="{}"/>"#,
            fmt4(k as f64 / (VIRIDIS.len() - 1) as f64),
            hex(*c)
        );
    }
    s.push_str("</linearGradient>\n");
    s
}

#[derive(Debug, Clone, PartialEq)]
pub enum RenderWarning {
    /// The reconstruction of this row is too short to have a direction.
    DegenerateDirection { row: usize },
    /// The row has no programmed state; only the reconstruction is shown.
    MissingState { row: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VfvDocument {
    pub svg: String,
    pub markers: usize,
    pub arrows: usize,
    pub suppressed_arrows: usize,
    pub warnings: Vec<RenderWarning>,
}

struct Frame {
    cx: f64,
    cy: f64,
    scale: f64,
}

impl Frame {
    fn new(style: &VfvStyle) -> Self {
        let map_w = style.width_px - LEGEND_WIDTH - 2.0 * MARGIN;
        let map_h = style.height_px - 2.0 * MARGIN;
        let scale = (map_w / (2.0 * max_abs_x())).min(map_h / (2.0 * max_abs_y()));
        Self {
            cx: MARGIN + map_w / 2.0,
            cy: style.height_px / 2.0,
            scale,
        }
    }

    fn px(&self, p: PlanePoint) -> (f64, f64) {
        (self.cx + self.scale * p.x, self.cy - self.scale * p.y)
    }

    fn geo(&self, g: GeoPoint) -> (f64, f64) {
        self.px(robinson_project(g))
    }
}

fn outline_path(frame: &Frame) -> String {
    let mut d = String::new();
    let mut first = true;
    let mut push = |g: GeoPoint, d: &mut String| {
        let (x, y) = frame.geo(g);
        let _ = write!(
            d,
            "{}{},{} ",
            if first { "M" } else { "L" },
            fmt4(x),
            fmt4(y)
        );
        first = false;
    };
    for k in 0..=36 {
        push(GeoPoint::new(90.0 - 5.0 * k as f64, 180.0), &mut d);
    }
    for k in 0..=36 {
        push(GeoPoint::new(-90.0 + 5.0 * k as f64, -180.0), &mut d);
    }
    d.push('Z');
    d
}

fn graticule(frame: &Frame) -> String {
    let mut s = String::from(
        "<g id=\"graticule\" fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"0.5000\">\n",
    );
    for lat in [-60.0, -30.0, 0.0, 30.0, 60.0] {
        let (x1, y) = frame.geo(GeoPoint::new(lat, -180.0));
        let (x2, _) = frame.geo(GeoPoint::new(lat, 180.0));
        let _ = writeln!(
            s,
            r#"<path d="M{},{y} L{},{y}"/>"#,
            fmt4(x1),
            fmt4(x2),
            y = fmt4(y)
        );
    }
    for lon in [-120.0, -60.0, 0.0, 60.0, 120.0] {
        let mut d = String::new();
        for k in 0..=36 {
            let (x, y) = frame.geo(GeoPoint::new(90.0 - 5.0 * k as f64, lon));
            let _ = write!(
                d,
                "{}{},{} ",
                if k == 0 { "M" } else { "L" },
                fmt4(x),
                fmt4(y)
            );
        }
        let _ = writeln!(s, r#"<path d="{}"/>"#, d.trim_end());
    }
    s.push_str("</g>\n");
    s
}

/// Splits a short great-circle-ish move between two globe points at the
/// antimeridian. Returns one or two segments in globe coordinates.
fn split_at_seam(start: GeoPoint, end: GeoPoint) -> Vec<(GeoPoint, GeoPoint)> {
    let dlon = end.longitude - start.longitude;
    if dlon.abs() <= 180.0 {
        return vec![(start, end)];
    }
    // Travel the short way across +-180.
    let (seam_start, seam_end, unwrapped_end) = if dlon < 0.0 {
        (180.0, -180.0, end.longitude + 360.0)
    } else {
        (-180.0, 180.0, end.longitude - 360.0)
    };
    let f = (seam_start - start.longitude) / (unwrapped_end - start.longitude);
    let lat = start.latitude + f * (end.latitude - start.latitude);
    vec![
        (start, GeoPoint::new(lat, seam_start)),
        (GeoPoint::new(lat, seam_end), end),
    ]
}

/// Renders the vector field visualisation of the successful rows of `scan`.
pub fn render_vfv(scan: &ScanResult, style: &VfvStyle) -> Result<VfvDocument> {
    style.validate()?;
    let rows: Vec<_> = scan.successful_rows().collect();
    if rows.is_empty() {
        return Err(Error::EmptyScan);
    }
    let frame = Frame::new(style);
    let arrow_scale = style.arrow_scale.unwrap_or(frame.scale);
    let min_arrow = 0.5 * style.marker_radius;

    let estimates: Vec<BlochVector> = rows
        .iter()
        .map(|r| {
            r.result(scan.primary_estimator)
                .map(|res| res.estimate)
                .unwrap_or_default()
        })
        .collect();
    let purities: Vec<f64> = estimates.iter().map(|&a| purity(a)).collect();
    let mean = purities.iter().sum::<f64>() / purities.len() as f64;
    let range = style.colormap.range.unwrap_or_else(|| {
        let lo = purities.iter().copied().fold(f64::INFINITY, f64::min) - 0.005;
        (lo.max(0.0), 1.0)
    });

    let mut markers =
        String::from("<g id=\"markers\" stroke=\"#333333\" stroke-width=\"0.5000\">\n");
    let mut arrows = String::from(
        "<g id=\"arrows\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.5000\">\n",
    );
    let mut warnings = Vec::new();
    let (mut n_markers, mut n_arrows, mut n_suppressed) = (0, 0, 0);

    for ((row, &a_out), &p) in rows.iter().zip(&estimates).zip(&purities) {
        let direction = a_out.direction(MIN_DIRECTION_NORM);
        let anchor = match (row.a_in, direction) {
            (Some(a_in), _) => GeoPoint::from_direction(a_in),
            (None, Some(dir)) => {
                warnings.push(RenderWarning::MissingState { row: row.index });
                GeoPoint::from_direction(dir)
            }
            (None, None) => {
                warnings.push(RenderWarning::MissingState { row: row.index });
                warnings.push(RenderWarning::DegenerateDirection { row: row.index });
                continue;
            }
        };
        let (mx, my) = frame.geo(anchor);
        n_markers += 1;
        let t = (p - range.0) / (range.1 - range.0);
        let _ = writeln!(
            markers,
            r#"<circle class="marker" data-row="{}" cx="{}" cy="{}" r="{}" fill="{}"/>"#,
            row.index,
            fmt4(mx),
            fmt4(my),
            fmt4(style.marker_radius),
            hex(colormap_rgb(t))
        );

        let Some(a_in) = row.a_in else { continue };
        let Some(dir) = direction else {
            warnings.push(RenderWarning::DegenerateDirection { row: row.index });
            continue;
        };
        if arrow_scale * a_in.angle_to(dir) < min_arrow {
            n_suppressed += 1;
            continue;
        }
        n_arrows += 1;
        let target = GeoPoint::from_direction(dir);
        let segments = split_at_seam(anchor, target);
        let last = segments.len() - 1;
        let _ = writeln!(arrows, r#"<g class="arrow" data-row="{}">"#, row.index);
        for (k, (s, e)) in segments.into_iter().enumerate() {
            let (x1, y1) = if k == 0 { (mx, my) } else { frame.geo(s) };
            let (x2, y2) = frame.geo(e);
            let head = if k == last {
                r#" marker-end="url(#arrowhead)""#
            } else {
                ""
            };
            let _ = writeln!(
                arrows,
                r#"<path d="M{},{} L{},{}"{head}/>"#,
                fmt4(x1),
                fmt4(y1),
                fmt4(x2),
                fmt4(y2)
            );
        }
        arrows.push_str("</g>\n");
    }
    markers.push_str("</g>\n");
    arrows.push_str("</g>\n");

    let w = style.width_px;
    let h = style.height_px;
    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n");
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = fmt4(w),
        h = fmt4(h)
    );
    if let Some(title) = &style.title {
        let _ = writeln!(svg, "<title>{}</title>", xml_escape(title));
    }
    svg.push_str("<defs>\n");
    svg.push_str(&legend_gradient_def());
    svg.push_str(
        "<marker id=\"arrowhead\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" markerWidth=\"6\" markerHeight=\"6\" orient=\"auto\">\n<path d=\"M0,0 L10,5 L0,10 Z\" fill=\"#000000\"/>\n</marker>\n",
    );
    svg.push_str("</defs>\n");
    let _ = writeln!(
        svg,
        r##"<rect x="0.0000" y="0.0000" width="{}" height="{}" fill="#ffffff"/>"##,
        fmt4(w),
        fmt4(h)
    );
    let _ = writeln!(
        svg,
        r##"<path id="outline" d="{}" fill="#f2f2f2" stroke="#000000" stroke-width="1.0000"/>"##,
        outline_path(&frame)
    );
    svg.push_str(&graticule(&frame));
    svg.push_str(&markers);
    svg.push_str(&arrows);
    let legend = LegendBox {
        x: w - LEGEND_WIDTH + 10.0,
        y: MARGIN + 20.0,
        width: 24.0,
        height: h - 2.0 * MARGIN - 40.0,
    };
    svg.push_str(&render_purity_legend(
        style.show_mean_line.then_some(mean),
        range,
        legend,
    ));
    svg.push_str("</svg>\n");

    Ok(VfvDocument {
        svg,
        markers: n_markers,
        arrows: n_arrows,
        suppressed_arrows: n_suppressed,
        warnings,
    })
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
