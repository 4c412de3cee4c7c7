//! Deterministic SVG charts: spiderweb profiles of dimension achievement,
//! kernel density overlays, and the two-panel achievement/opportunity
//! scatter. Output depends only on the input values; floats are printed
//! with two decimals, so identical inputs yield identical bytes.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dataset::{Area, Sex};
use crate::stats::DensityCurve;

#[derive(Debug, Error, PartialEq)]
pub enum ChartError {
    #[error("spiderweb needs at least 3 axes, got {0}")]
    TooFewAxes(usize),
    #[error("chart needs at least one series")]
    NoSeries,
    #[error("series `{label}` has {got} values for {want} axes")]
    LengthMismatch {
        label: String,
        want: usize,
        got: usize,
    },
    #[error("series `{label}` holds {value}, outside [{lo}, {hi}]")]
    ValueOutOfRange {
        label: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("chart values must be finite")]
    NonFinite,
    #[error("highlight percentage must lie in (0, 100], got {0}")]
    BadHighlight(f64),
    #[error("scatter needs at least one point")]
    NoPoints,
}

/// Default series palette.
const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
];

fn f2(v: f64) -> String {
    format!("{v:.2}")
}

fn esc(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct SpiderSeries {
    pub label: String,
    /// One value per axis on a 0..100 scale.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SpiderwebSpec {
    pub axes: Vec<String>,
    pub series: Vec<SpiderSeries>,
    /// Optional color per series; the palette fills the rest.
    pub colors: Vec<String>,
}

pub const SPIDER_SIZE: f64 = 800.0;
pub const SPIDER_CENTER: f64 = 400.0;
pub const SPIDER_RADIUS: f64 = 300.0;

/// Vertex of axis `i` of `n` at `value` (0..100): axes start at twelve
/// o'clock and proceed clockwise.
pub fn spider_vertex(i: usize, n: usize, value: f64) -> (f64, f64) {
    let theta = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
    let r = value / 100.0 * SPIDER_RADIUS;
    (
        SPIDER_CENTER + r * theta.sin(),
        SPIDER_CENTER - r * theta.cos(),
    )
}

/// Render a spiderweb (radar) chart of 0..100 scores.
pub fn spiderweb_svg(spec: &SpiderwebSpec) -> Result<String, ChartError> {
    let n = spec.axes.len();
    if n < 3 {
        return Err(ChartError::TooFewAxes(n));
    }
    if spec.series.is_empty() {
        return Err(ChartError::NoSeries);
    }
    for s in &spec.series {
        if s.values.len() != n {
            return Err(ChartError::LengthMismatch {
                label: s.label.clone(),
                want: n,
                got: s.values.len(),
            });
        }
        for &v in &s.values {
            if !v.is_finite() {
                return Err(ChartError::NonFinite);
            }
            if !(0.0..=100.0).contains(&v) {
                return Err(ChartError::ValueOutOfRange {
                    label: s.label.clone(),
                    value: v,
                    lo: 0.0,
                    hi: 100.0,
                });
            }
        }
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="800" viewBox="0 0 800 800">"#
    );
    let _ = writeln!(svg, r#"<rect width="800" height="800" fill="white"/>"#);

    // concentric gridlines every 20 points
    for step in 1..=5 {
        let level = step as f64 * 20.0;
        let pts: Vec<String> = (0..n)
            .map(|i| {
                let (x, y) = spider_vertex(i, n, level);
                format!("{},{}", f2(x), f2(y))
            })
            .collect();
        let _ = writeln!(
            svg,
            r##"<polygon points="{}" fill="none" stroke="#cccccc" stroke-width="1"/>"##,
            pts.join(" ")
        );
    }

    // spokes and axis labels
    for (i, axis) in spec.axes.iter().enumerate() {
        let (x, y) = spider_vertex(i, n, 100.0);
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#cccccc" stroke-width="1"/>"##,
            f2(SPIDER_CENTER),
            f2(SPIDER_CENTER),
            f2(x),
            f2(y)
        );
        let (lx, ly) = spider_vertex(i, n, 112.0);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="13" font-family="sans-serif" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
            f2(lx),
            f2(ly),
            esc(axis)
        );
    }

    // series polygons
    for (s_ix, s) in spec.series.iter().enumerate() {
        let color = spec
            .colors
            .get(s_ix)
            .map(String::as_str)
            .unwrap_or(PALETTE[s_ix % PALETTE.len()]);
        let pts: Vec<String> = s
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let (x, y) = spider_vertex(i, n, v);
                format!("{},{}", f2(x), f2(y))
            })
            .collect();
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.15" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
    }

    // legend, top-left
    for (s_ix, s) in spec.series.iter().enumerate() {
        let color = spec
            .colors
            .get(s_ix)
            .map(String::as_str)
            .unwrap_or(PALETTE[s_ix % PALETTE.len()]);
        let y = 24.0 + 20.0 * s_ix as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="16" y="{}" width="14" height="14" fill="{color}"/>"#,
            f2(y)
        );
        let _ = writeln!(
            svg,
            r#"<text x="36" y="{}" font-size="13" font-family="sans-serif" dominant-baseline="middle">{}</text>"#,
            f2(y + 7.0),
            esc(&s.label)
        );
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

#[derive(Debug, Clone)]
pub struct DensitySeries<'a> {
    pub label: String,
    pub curve: &'a DensityCurve,
    /// Draws a dotted vertical marker when present.
    pub median: Option<f64>,
}

const DENSITY_W: f64 = 900.0;
const DENSITY_H: f64 = 600.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;

/// Render overlaid density curves on [0, 1].
pub fn density_svg(series: &[DensitySeries<'_>]) -> Result<String, ChartError> {
    if series.is_empty() {
        return Err(ChartError::NoSeries);
    }
    let mut y_max = 0.0f64;
    for s in series {
        for &h in &s.curve.heights {
            if !h.is_finite() {
                return Err(ChartError::NonFinite);
            }
            y_max = y_max.max(h);
        }
    }
    let y_max = if y_max <= 0.0 { 1.0 } else { y_max * 1.05 };

    let plot_w = DENSITY_W - MARGIN_L - MARGIN_R;
    let plot_h = DENSITY_H - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + x * plot_w;
    let py = |y: f64| MARGIN_T + (1.0 - y / y_max) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="900" height="600" viewBox="0 0 900 600">"#
    );
    let _ = writeln!(svg, r#"<rect width="900" height="600" fill="white"/>"#);

    // frame and ticks
    let _ = writeln!(
        svg,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333333" stroke-width="1"/>"##,
        f2(MARGIN_L),
        f2(MARGIN_T),
        f2(plot_w),
        f2(plot_h)
    );
    for i in 0..=5 {
        let x = i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#333333" stroke-width="1"/>"##,
            f2(px(x)),
            f2(MARGIN_T + plot_h),
            f2(MARGIN_T + plot_h + 6.0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="12" font-family="sans-serif" text-anchor="middle">{}</text>"#,
            f2(px(x)),
            f2(MARGIN_T + plot_h + 22.0),
            f2(x)
        );
        let yv = y_max * i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#333333" stroke-width="1"/>"##,
            f2(MARGIN_L - 6.0),
            f2(py(yv)),
            f2(MARGIN_L)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="12" font-family="sans-serif" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            f2(MARGIN_L - 10.0),
            f2(py(yv)),
            f2(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="13" font-family="sans-serif" text-anchor="middle">score</text>"#,
        f2(MARGIN_L + plot_w / 2.0),
        f2(DENSITY_H - 18.0)
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{}" font-size="13" font-family="sans-serif" text-anchor="middle" transform="rotate(-90 20 {})">density</text>"#,
        f2(MARGIN_T + plot_h / 2.0),
        f2(MARGIN_T + plot_h / 2.0)
    );

    for (s_ix, s) in series.iter().enumerate() {
        let color = PALETTE[s_ix % PALETTE.len()];
        let pts: Vec<String> = s
            .curve
            .grid
            .iter()
            .zip(&s.curve.heights)
            .map(|(&x, &h)| format!("{},{}", f2(px(x)), f2(py(h))))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        if let Some(m) = s.median {
            let _ = writeln!(
                svg,
                r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="{color}" stroke-width="1.5" stroke-dasharray="2 4"/>"#,
                f2(px(m)),
                f2(MARGIN_T),
                f2(MARGIN_T + plot_h)
            );
        }
    }

    // legend
    for (s_ix, s) in series.iter().enumerate() {
        let color = PALETTE[s_ix % PALETTE.len()];
        let y = MARGIN_T + 10.0 + 20.0 * s_ix as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#,
            f2(MARGIN_L + 12.0),
            f2(y),
            f2(MARGIN_L + 34.0),
            f2(y)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="13" font-family="sans-serif" dominant-baseline="middle">{}</text>"#,
            f2(MARGIN_L + 40.0),
            f2(y),
            esc(&s.label)
        );
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

#[derive(Debug, Clone, Copy)]
pub struct ScatterPoint {
    pub achievement: f64,
    pub opportunity: f64,
    pub sex: Sex,
    pub area: Area,
}

#[derive(Debug, Clone)]
pub struct ScatterSpec {
    pub points: Vec<ScatterPoint>,
    /// Highlights the lowest q percent of opportunity in panel b.
    pub highlight_pct: Option<f64>,
}

/// Marker color and shape: area picks the color (rural red, urban light
/// blue); sex picks the shape within each area.
fn marker(svg: &mut String, x: f64, y: f64, sex: Sex, area: Area) {
    let color = match area {
        Area::Rural => "#d62728",
        Area::Urban => "#87cefa",
    };
    match (area, sex) {
        (Area::Rural, Sex::Female) | (Area::Urban, Sex::Male) => {
            let _ = writeln!(
                svg,
                r#"<circle cx="{}" cy="{}" r="3.5" fill="{color}" fill-opacity="0.8"/>"#,
                f2(x),
                f2(y)
            );
        }
        (Area::Rural, Sex::Male) => {
            let _ = writeln!(
                svg,
                r#"<path d="M {} {} L {} {} L {} {} Z" fill="{color}" fill-opacity="0.8"/>"#,
                f2(x),
                f2(y - 4.2),
                f2(x - 3.8),
                f2(y + 3.0),
                f2(x + 3.8),
                f2(y + 3.0)
            );
        }
        (Area::Urban, Sex::Female) => {
            let _ = writeln!(
                svg,
                r#"<rect x="{}" y="{}" width="7" height="7" fill="{color}" fill-opacity="0.8"/>"#,
                f2(x - 3.5),
                f2(y - 3.5)
            );
        }
    }
}

/// Two-panel scatter: panel a shows achievements, panel b opportunity
/// means, both against child index in input order. The optional purple
/// box in panel b frames the lowest q percent of opportunity.
pub fn scatter_svg(spec: &ScatterSpec) -> Result<String, ChartError> {
    let n = spec.points.len();
    if n == 0 {
        return Err(ChartError::NoPoints);
    }
    for p in &spec.points {
        if !p.achievement.is_finite() || !p.opportunity.is_finite() {
            return Err(ChartError::NonFinite);
        }
    }
    if let Some(q) = spec.highlight_pct {
        if !(q > 0.0 && q <= 100.0) {
            return Err(ChartError::BadHighlight(q));
        }
    }

    let panel_w = 380.0;
    let panel_h = 470.0;
    let top = 70.0;
    let panels = [(60.0, "a. achievement"), (490.0, "b. opportunity")];

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="900" height="600" viewBox="0 0 900 600">"#
    );
    let _ = writeln!(svg, r#"<rect width="900" height="600" fill="white"/>"#);

    // legend across the top
    let legend = [
        (Area::Rural, Sex::Female, "rural female"),
        (Area::Rural, Sex::Male, "rural male"),
        (Area::Urban, Sex::Male, "urban male"),
        (Area::Urban, Sex::Female, "urban female"),
    ];
    for (i, (area, sex, label)) in legend.iter().enumerate() {
        let x = 70.0 + 200.0 * i as f64;
        marker(&mut svg, x, 30.0, *sex, *area);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="30" font-size="13" font-family="sans-serif" dominant-baseline="middle">{}</text>"#,
            f2(x + 12.0),
            esc(label)
        );
    }

    for (panel_ix, (left, title)) in panels.iter().enumerate() {
        let _ = writeln!(
            svg,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333333" stroke-width="1"/>"##,
            f2(*left),
            f2(top),
            f2(panel_w),
            f2(panel_h)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="14" font-family="sans-serif">{}</text>"#,
            f2(*left),
            f2(top - 12.0),
            esc(title)
        );
        let px = |i: usize| left + (i as f64 + 0.5) / n as f64 * panel_w;
        let py = |v: f64| top + (1.0 - v) * panel_h;

        // y ticks at 0, 0.25, .., 1
        for t in 0..=4 {
            let v = t as f64 / 4.0;
            let _ = writeln!(
                svg,
                r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#333333" stroke-width="1"/>"##,
                f2(left - 6.0),
                f2(py(v)),
                f2(*left)
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" font-size="12" font-family="sans-serif" text-anchor="end" dominant-baseline="middle">{}</text>"#,
                f2(left - 10.0),
                f2(py(v)),
                f2(v)
            );
        }

        if panel_ix == 1 {
            if let Some(q) = spec.highlight_pct {
                let mut opp: Vec<f64> = spec.points.iter().map(|p| p.opportunity).collect();
                opp.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let m = ((q / 100.0 * n as f64).round() as usize).clamp(1, n);
                let lo = opp[0];
                let hi = opp[m - 1];
                let pad = 0.012;
                let y_top = py((hi + pad).min(1.0));
                let y_bot = py((lo - pad).max(0.0));
                let _ = writeln!(
                    svg,
                    r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#7b2d8b" stroke-width="2"/>"##,
                    f2(left + 2.0),
                    f2(y_top),
                    f2(panel_w - 4.0),
                    f2(y_bot - y_top)
                );
            }
        }

        for (i, p) in spec.points.iter().enumerate() {
            let v = if panel_ix == 0 {
                p.achievement
            } else {
                p.opportunity
            };
            marker(&mut svg, px(i), py(v.clamp(0.0, 1.0)), p.sex, p.area);
        }

        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="13" font-family="sans-serif" text-anchor="middle">child</text>"#,
            f2(left + panel_w / 2.0),
            f2(top + panel_h + 30.0)
        );
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::kde_unit_interval;

    fn axes14() -> Vec<String> {
        (0..14).map(|i| format!("dim {i}")).collect()
    }

    #[test]
    fn spiderweb_full_score_is_regular_polygon() {
        let spec = SpiderwebSpec {
            axes: axes14(),
            series: vec![SpiderSeries {
                label: "all".into(),
                values: vec![100.0; 14],
            }],
            colors: vec![],
        };
        let svg = spiderweb_svg(&spec).unwrap();
        for i in 0..14 {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / 14.0;
            let x = 400.0 + 300.0 * theta.sin();
            let y = 400.0 - 300.0 * theta.cos();
            let pt = format!("{},{}", f2(x), f2(y));
            assert!(svg.contains(&pt), "missing vertex {pt}");
        }
        // axes start at twelve o'clock: the first vertex is (400, 100)
        assert!(svg.contains("400.00,100.00"));
    }

    #[test]
    fn spiderweb_emission_is_stable() {
        let spec = SpiderwebSpec {
            axes: axes14(),
            series: vec![
                SpiderSeries {
                    label: "urban".into(),
                    values: (0..14).map(|i| 50.0 + 3.0 * i as f64).collect(),
                },
                SpiderSeries {
                    label: "rural".into(),
                    values: (0..14).map(|i| 40.0 + 2.0 * i as f64).collect(),
                },
            ],
            colors: vec![],
        };
        assert_eq!(spiderweb_svg(&spec).unwrap(), spiderweb_svg(&spec).unwrap());
    }

    #[test]
    fn spiderweb_validation() {
        let spec = SpiderwebSpec {
            axes: vec!["a".into(), "b".into()],
            series: vec![SpiderSeries {
                label: "s".into(),
                values: vec![1.0, 2.0],
            }],
            colors: vec![],
        };
        assert_eq!(spiderweb_svg(&spec).unwrap_err(), ChartError::TooFewAxes(2));

        let spec = SpiderwebSpec {
            axes: axes14(),
            series: vec![SpiderSeries {
                label: "s".into(),
                values: vec![101.0; 14],
            }],
            colors: vec![],
        };
        assert!(matches!(
            spiderweb_svg(&spec).unwrap_err(),
            ChartError::ValueOutOfRange { .. }
        ));

        let spec = SpiderwebSpec {
            axes: axes14(),
            series: vec![SpiderSeries {
                label: "s".into(),
                values: vec![50.0; 13],
            }],
            colors: vec![],
        };
        assert!(matches!(
            spiderweb_svg(&spec).unwrap_err(),
            ChartError::LengthMismatch { .. }
        ));
    }

    #[test]
    fn labels_are_escaped() {
        let spec = SpiderwebSpec {
            axes: (0..3).map(|i| format!("a<{i}> & more")).collect(),
            series: vec![SpiderSeries {
                label: "x \"q\"".into(),
                values: vec![10.0, 20.0, 30.0],
            }],
            colors: vec![],
        };
        let svg = spiderweb_svg(&spec).unwrap();
        assert!(svg.contains("a&lt;0&gt; &amp; more"));
        assert!(svg.contains("x &quot;q&quot;"));
        assert!(!svg.contains("a<0>"));
    }

    #[test]
    fn density_chart_draws_median_markers() {
        let values: Vec<f64> = (0..50).map(|i| 0.2 + 0.01 * i as f64).collect();
        let curve = kde_unit_interval(&values, None).unwrap();
        let series = vec![DensitySeries {
            label: "scores".into(),
            curve: &curve,
            median: Some(0.445),
        }];
        let svg = density_svg(&series).unwrap();
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg, density_svg(&series).unwrap());
    }

    #[test]
    fn scatter_highlight_box_frames_bottom_decile() {
        let mut points = Vec::new();
        for i in 0..100 {
            points.push(ScatterPoint {
                achievement: 0.5,
                opportunity: (i + 1) as f64 / 100.0,
                sex: if i % 2 == 0 { Sex::Male } else { Sex::Female },
                area: if i % 3 == 0 { Area::Urban } else { Area::Rural },
            });
        }
        let spec = ScatterSpec {
            points,
            highlight_pct: Some(10.0),
        };
        let svg = scatter_svg(&spec).unwrap();
        assert!(svg.contains("#7b2d8b"));
        assert_eq!(svg, scatter_svg(&spec).unwrap());
        let none = ScatterSpec {
            highlight_pct: None,
            ..spec
        };
        assert!(!scatter_svg(&none).unwrap().contains("#7b2d8b"));
    }

    #[test]
    fn scatter_validation() {
        let empty = ScatterSpec {
            points: vec![],
            highlight_pct: None,
        };
        assert_eq!(scatter_svg(&empty).unwrap_err(), ChartError::NoPoints);
        let bad = ScatterSpec {
            points: vec![ScatterPoint {
                achievement: 0.5,
                opportunity: 0.5,
                sex: Sex::Male,
                area: Area::Urban,
            }],
            highlight_pct: Some(0.0),
        };
        assert!(matches!(
            scatter_svg(&bad).unwrap_err(),
            ChartError::BadHighlight(_)
        ));
    }
}
