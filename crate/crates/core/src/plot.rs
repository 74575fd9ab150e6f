//! Minimal static SVG charts: line charts, heatmaps and box plots.

use std::fmt::Write as _;

use crate::experiments::Quartiles;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points, dashed: false }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

pub struct BoxGroup {
    pub label: String,
    pub quartiles: Quartiles,
    pub min: f64,
    pub max: f64,
}

/// Shared chart labels. `stamp`, when set, is written into a leading comment.
pub struct Frame<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub stamp: Option<&'a str>,
}

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let (x0, x1) = padded_range(xs, 0.0);
        let (y0, y1) = padded_range(ys, 0.05);
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x0) / (self.x1 - self.x0) * plot_width()
    }

    fn py(&self, y: f64) -> f64 {
        MARGIN_TOP + (self.y1 - y) / (self.y1 - self.y0) * plot_height()
    }
}

fn plot_width() -> f64 {
    WIDTH - MARGIN_LEFT - MARGIN_RIGHT
}

fn plot_height() -> f64 {
    HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
}

fn padded_range(values: impl Iterator<Item = f64>, pad: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let p = (hi - lo) * pad;
    (lo - p, hi + p)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(svg: &mut String, frame: &Frame) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    if let Some(stamp) = frame.stamp {
        let _ = writeln!(svg, "<!-- generated {} -->", escape(stamp));
    }
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        MARGIN_LEFT + plot_width() / 2.0,
        escape(frame.title)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_width() / 2.0,
        HEIGHT - 12.0,
        escape(frame.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        MARGIN_TOP + plot_height() / 2.0,
        escape(frame.y_label)
    );
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
}

fn axes_box(svg: &mut String, axes: &Axes, x_ticks: bool) {
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        plot_width(),
        plot_height()
    );
    for y in ticks(axes.y0, axes.y1) {
        let py = axes.py(y);
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            MARGIN_LEFT + plot_width(),
            MARGIN_LEFT - 6.0,
            py + 4.0,
            tick_label(y)
        );
    }
    if x_ticks {
        for x in ticks(axes.x0, axes.x1) {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                axes.px(x),
                MARGIN_TOP + plot_height() + 16.0,
                tick_label(x)
            );
        }
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 0.01 && v.abs() < 1e4) {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

pub fn line_chart(frame: &Frame, series: &[Series]) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let axes = Axes::fit(all().map(|p| p.0), all().map(|p| p.1));
    let mut svg = String::new();
    header(&mut svg, frame);
    axes_box(&mut svg, &axes, true);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut path = String::new();
        for (k, (x, y)) in s.points.iter().enumerate() {
            let _ = write!(path, "{}{:.2},{:.2} ", if k == 0 { "M" } else { "L" }, axes.px(*x), axes.py(*y));
        }
        let dash = if s.dashed { r#" stroke-dasharray="5,3""# } else { "" };
        let _ =
            writeln!(svg, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.3"{dash}/>"#, path.trim_end());
        let ly = MARGIN_TOP + 14.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// `grid[i][j]` is drawn in row `i` (y = `y_values[i]`) and column `j`
/// (x = `x_values[j]`); values are expected in [0, 1].
pub fn heatmap(frame: &Frame, x_values: &[f64], y_values: &[f64], grid: &[Vec<f64>]) -> String {
    let mut svg = String::new();
    header(&mut svg, frame);
    let cw = plot_width() / x_values.len().max(1) as f64;
    let ch = plot_height() / y_values.len().max(1) as f64;
    for (i, row) in grid.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let x = MARGIN_LEFT + j as f64 * cw;
            let y = MARGIN_TOP + plot_height() - (i + 1) as f64 * ch;
            let _ = writeln!(
                svg,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{:.3}</title></rect>"#,
                cw + 0.05,
                ch + 0.05,
                ramp(*v),
                v
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        plot_width(),
        plot_height()
    );
    let label_every = |len: usize| (len / 6).max(1);
    for (j, x) in x_values.iter().enumerate().step_by(label_every(x_values.len())) {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + (j as f64 + 0.5) * cw,
            MARGIN_TOP + plot_height() + 16.0,
            tick_label(*x)
        );
    }
    for (i, y) in y_values.iter().enumerate().step_by(label_every(y_values.len())) {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 6.0,
            MARGIN_TOP + plot_height() - (i as f64 + 0.5) * ch + 4.0,
            tick_label(*y)
        );
    }
    let lx = WIDTH - MARGIN_RIGHT + 20.0;
    for k in 0..=10 {
        let v = k as f64 / 10.0;
        let y = MARGIN_TOP + plot_height() * (1.0 - v) - plot_height() / 22.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx}" y="{y:.2}" width="18" height="{:.2}" fill="{}"/>"#,
            plot_height() / 11.0,
            ramp(v)
        );
        if k % 5 == 0 {
            let _ = writeln!(svg, r#"<text x="{}" y="{:.2}">{}%</text>"#, lx + 24.0, y + 12.0, k * 10);
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// White to dark blue.
fn ramp(v: f64) -> String {
    let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    let mix = |a: f64, b: f64| (a + (b - a) * v).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(255.0, 8.0), mix(255.0, 48.0), mix(255.0, 107.0))
}

pub fn box_plot(frame: &Frame, groups: &[BoxGroup]) -> String {
    let axes = Axes {
        x0: 0.0,
        x1: groups.len().max(1) as f64,
        ..Axes::fit(std::iter::empty(), groups.iter().flat_map(|g| [g.min, g.max]))
    };
    let mut svg = String::new();
    header(&mut svg, frame);
    axes_box(&mut svg, &axes, false);
    let slot = plot_width() / groups.len().max(1) as f64;
    for (i, g) in groups.iter().enumerate() {
        let cx = MARGIN_LEFT + (i as f64 + 0.5) * slot;
        let half = (slot * 0.25).min(40.0);
        let q = g.quartiles;
        let _ = writeln!(
            svg,
            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
            axes.py(g.max),
            axes.py(g.min)
        );
        let _ = writeln!(
            svg,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" stroke="black"/>"##,
            cx - half,
            axes.py(q.q3),
            2.0 * half,
            (axes.py(q.q1) - axes.py(q.q3)).max(0.5)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{2:.2}" x2="{:.2}" y2="{2:.2}" stroke="black" stroke-width="2"/>"#,
            cx - half,
            cx + half,
            axes.py(q.median)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_TOP + plot_height() + 16.0,
            escape(&g.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(stamp: Option<&str>) -> Frame<'_> {
        Frame { title: "a < b", x_label: "x", y_label: "y", stamp }
    }

    #[test]
    fn line_chart_is_well_formed() {
        let s = vec![
            Series::new("sin", (0..50).map(|i| (i as f64, (i as f64 / 5.0).sin())).collect()),
            Series::new("flat", vec![(0.0, 0.5), (49.0, 0.5)]).dashed(),
        ];
        let svg = line_chart(&frame(None), &s);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.contains("a &lt; b"));
        assert!(!svg.contains("generated"));
        assert!(line_chart(&frame(Some("1700000000")), &s).contains("<!-- generated 1700000000 -->"));
    }

    #[test]
    fn heatmap_has_one_cell_per_entry() {
        let grid = vec![vec![0.0, 0.5, 1.0], vec![0.2, 0.4, f64::NAN]];
        let svg = heatmap(&frame(None), &[1.0, 2.0, 3.0], &[0.1, 0.2], &grid);
        assert_eq!(svg.matches("<title>").count(), 6);
        assert_eq!(ramp(0.0), "#ffffff");
        assert_eq!(ramp(1.0), "#08306b");
    }

    #[test]
    fn box_plot_and_degenerate_ranges() {
        let q = Quartiles { q1: 0.1, median: 0.2, q3: 0.3 };
        let groups = vec![
            BoxGroup { label: "M=1".into(), quartiles: q, min: 0.0, max: 0.9 },
            BoxGroup { label: "M=8".into(), quartiles: q, min: 0.05, max: 0.4 },
        ];
        let svg = box_plot(&frame(None), &groups);
        assert!(svg.contains("M=8"));
        assert_eq!(padded_range([2.0, 2.0].into_iter(), 0.1), (1.5, 2.5));
        assert_eq!(padded_range(std::iter::empty(), 0.1), (0.0, 1.0));
    }
}
