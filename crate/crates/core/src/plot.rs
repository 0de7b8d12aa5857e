//! Static SVG figures: onset timelines, risk strips, surface heatmaps with
//! risk contours, trend and score charts. Output is plain text with fixed
//! number formatting so identical inputs give identical files.

use std::fmt::Write;

use crate::eval::{poisson_pmf, BinScheme, FoldResult};
use crate::kde::Grid2;
use crate::onset::{OnsetForecast, RiskRegion};
use crate::severity::DailyRiskSeries;
use crate::trend::TrendReport;

const FONT: &str = "font-family=\"sans-serif\" font-size=\"11\"";

/// Perceptually ordered colour ramp (viridis anchors).
const RAMP: [(u8, u8, u8); 6] = [
    (68, 1, 84),
    (65, 68, 135),
    (42, 120, 142),
    (34, 168, 132),
    (122, 209, 81),
    (253, 231, 37),
];

pub fn ramp_color(x: f64) -> String {
    let x = if x.is_finite() { x.clamp(0.0, 1.0) } else { 0.0 };
    let pos = x * (RAMP.len() - 1) as f64;
    let i = (pos.floor() as usize).min(RAMP.len() - 2);
    let f = pos - i as f64;
    let lerp = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * f).round() as u8;
    let (a, b) = (RAMP[i], RAMP[i + 1]);
    format!("#{:02x}{:02x}{:02x}", lerp(a.0, b.0), lerp(a.1, b.1), lerp(a.2, b.2))
}

struct Svg {
    body: String,
    w: f64,
    h: f64,
}

impl Svg {
    fn new(w: f64, h: f64) -> Self {
        Self { body: String::new(), w, h }
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, extra: &str) {
        let _ = writeln!(
            self.body,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"{fill}\" {extra}/>"
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        let _ = writeln!(
            self.body,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"{stroke}\" stroke-width=\"{width}\"/>"
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        let _ = writeln!(self.body, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{r}\" fill=\"{fill}\"/>");
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        let _ = writeln!(
            self.body,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"{anchor}\" {FONT}>{}</text>",
            escape(s)
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.w,
            h = self.h
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Linear map from `[lo, hi]` to `[a, b]`.
fn scale(lo: f64, hi: f64, a: f64, b: f64) -> impl Fn(f64) -> f64 {
    let span = if hi > lo { hi - lo } else { 1.0 };
    move |v| a + (v - lo) / span * (b - a)
}

/// Risky-day timelines, one row per alpha, with the observed onset marked.
pub fn onset_timeline_svg(forecasts: &[OnsetForecast], observed_onset: Option<u32>, title: &str) -> String {
    let (left, top, row_h, width) = (60.0, 30.0, 18.0, 730.0);
    let n_days = forecasts
        .iter()
        .flat_map(|f| f.timeline.last().map(|d| d.day))
        .max()
        .unwrap_or(365)
        .max(365) as f64;
    let mut svg = Svg::new(left + width + 20.0, top + row_h * forecasts.len() as f64 + 40.0);
    svg.text(left, 18.0, "start", title);
    let x = scale(1.0, n_days + 1.0, left, left + width);
    for (r, f) in forecasts.iter().enumerate() {
        let y = top + r as f64 * row_h;
        svg.text(left - 6.0, y + row_h * 0.7, "end", &format!("α={:.2}", f.alpha));
        svg.rect(left, y + 2.0, width, row_h - 4.0, "#eeeeee", "");
        for d in f.timeline.iter().filter(|d| d.risky) {
            svg.rect(x(d.day as f64), y + 2.0, x(d.day as f64 + 1.0) - x(d.day as f64), row_h - 4.0, "#d7301f", "");
        }
        if let Some((a, b)) = f.interval {
            svg.rect(
                x(a as f64),
                y + 1.0,
                x(b as f64 + 1.0) - x(a as f64),
                row_h - 2.0,
                "none",
                "stroke=\"black\" stroke-width=\"1\"",
            );
        }
    }
    let bottom = top + row_h * forecasts.len() as f64;
    if let Some(d) = observed_onset {
        svg.line(x(d as f64 + 0.5), top - 4.0, x(d as f64 + 0.5), bottom + 4.0, "#2171b5", 2.0);
    }
    for d in (0..=360).step_by(30) {
        let xd = x(d.max(1) as f64);
        svg.line(xd, bottom + 2.0, xd, bottom + 6.0, "black", 1.0);
        svg.text(xd, bottom + 18.0, "middle", &d.max(1).to_string());
    }
    svg.finish()
}

/// Daily `λ` as a coloured strip; days before the onset gate are faded.
pub fn risk_strip_svg(risk: &DailyRiskSeries, title: &str) -> String {
    let (left, top, width, height) = (40.0, 30.0, 730.0, 40.0);
    let mut svg = Svg::new(left + width + 80.0, top + height + 40.0);
    svg.text(left, 18.0, "start", title);
    let n = risk.lambda.len().max(1) as f64;
    let max = risk.lambda.iter().copied().fold(1.0, f64::max);
    let x = scale(0.0, n, left, left + width);
    for (i, &l) in risk.lambda.iter().enumerate() {
        let day = i as u32 + 1;
        let opacity = if risk.is_post_onset(day) { 1.0 } else { 0.35 };
        svg.rect(
            x(i as f64),
            top,
            x(i as f64 + 1.0) - x(i as f64),
            height,
            &ramp_color(l / max),
            &format!("fill-opacity=\"{opacity}\""),
        );
    }
    svg.line(x(risk.onset_gate as f64 - 1.0), top - 4.0, x(risk.onset_gate as f64 - 1.0), top + height + 4.0, "black", 1.5);
    for d in (0..=360).step_by(60) {
        svg.text(x(d as f64), top + height + 16.0, "middle", &d.max(1).to_string());
    }
    // legend
    for k in 0..10 {
        svg.rect(left + width + 20.0, top + height - (k + 1) as f64 * 4.0, 12.0, 4.0, &ramp_color(k as f64 / 9.0), "");
    }
    svg.text(left + width + 36.0, top + 8.0, "start", &format!("{max:.2}"));
    svg.text(left + width + 36.0, top + height, "start", "0");
    svg.finish()
}

/// Heatmap of lattice values with optional risk-region outlines (drawn as
/// the mask boundary) and sample points.
pub fn surface_svg(grid: &Grid2, values: &[f64], regions: &[RiskRegion], points: &[(f64, f64)], title: &str) -> String {
    let (left, top, size) = (60.0, 30.0, 420.0);
    let mut svg = Svg::new(left + size + 30.0, top + size + 50.0);
    svg.text(left, 18.0, "start", title);
    let max = values.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let (cw, ch) = (size / grid.nm as f64, size / grid.nt as f64);
    for j in 0..grid.nt {
        for i in 0..grid.nm {
            let v = values[grid.index(i, j)];
            if v <= 0.0 {
                continue;
            }
            let y = top + size - (j + 1) as f64 * ch;
            svg.rect(left + i as f64 * cw, y, cw + 0.05, ch + 0.05, &ramp_color(v / max), "");
        }
    }
    for region in regions {
        let inside = |i: isize, j: isize| {
            i >= 0 && j >= 0 && (i as usize) < grid.nm && (j as usize) < grid.nt && region.mask[grid.index(i as usize, j as usize)]
        };
        for j in 0..grid.nt as isize {
            for i in 0..grid.nm as isize {
                if !inside(i, j) {
                    continue;
                }
                let x0 = left + i as f64 * cw;
                let y0 = top + size - (j + 1) as f64 * ch;
                if !inside(i - 1, j) {
                    svg.line(x0, y0, x0, y0 + ch, "white", 1.0);
                }
                if !inside(i + 1, j) {
                    svg.line(x0 + cw, y0, x0 + cw, y0 + ch, "white", 1.0);
                }
                if !inside(i, j + 1) {
                    svg.line(x0, y0, x0 + cw, y0, "white", 1.0);
                }
                if !inside(i, j - 1) {
                    svg.line(x0, y0 + ch, x0 + cw, y0 + ch, "white", 1.0);
                }
            }
        }
    }
    let xm = scale(grid.m_min, grid.m_max(), left, left + size);
    let yt = scale(grid.t_min, grid.t_max(), top + size, top);
    for &(m, t) in points {
        svg.circle(xm(m), yt(t), 2.5, "#e31a1c");
    }
    svg.text(left + size / 2.0, top + size + 36.0, "middle", "mosquito abundance M");
    svg.text(left, top + size + 16.0, "start", &format!("{:.3e}", grid.m_min));
    svg.text(left + size, top + size + 16.0, "end", &format!("{:.3e}", grid.m_max()));
    svg.text(left - 4.0, top + size, "end", &format!("{:.1}", grid.t_min));
    svg.text(left - 4.0, top + 10.0, "end", &format!("{:.1}", grid.t_max()));
    svg.text(left - 40.0, top + size / 2.0, "middle", "T");
    svg.finish()
}

/// Annual counts with the OLS and Sen lines.
pub fn trend_svg(report: &TrendReport, title: &str) -> String {
    let (left, top, w, h) = (50.0, 30.0, 600.0, 300.0);
    let mut svg = Svg::new(left + w + 20.0, top + h + 60.0);
    svg.text(left, 18.0, "start", title);
    let s = &report.series;
    let n = s.len();
    if n == 0 {
        return svg.finish();
    }
    let ymax = s.counts.iter().copied().fold(1.0, f64::max) * 1.1;
    let x = scale(0.0, (n - 1).max(1) as f64, left, left + w);
    let y = scale(0.0, ymax, top + h, top);
    svg.line(left, top + h, left + w, top + h, "black", 1.0);
    svg.line(left, top, left, top + h, "black", 1.0);
    for (i, &c) in s.counts.iter().enumerate() {
        svg.circle(x(i as f64), y(c), 3.0, "#08519c");
    }
    let last = (n - 1) as f64;
    let ols = |k: f64| report.ols.intercept + report.ols.slope * k;
    svg.line(x(0.0), y(ols(0.0)), x(last), y(ols(last)), "#d7301f", 1.5);
    // Sen line through the median point
    let mut sorted = s.counts.clone();
    sorted.sort_by(f64::total_cmp);
    let med = sorted[n / 2];
    let sen = |k: f64| med + report.mann_kendall.sen_slope * (k - last / 2.0);
    svg.line(x(0.0), y(sen(0.0)), x(last), y(sen(last)), "#31a354", 1.5);
    svg.text(left, top + h + 16.0, "start", &s.years[0].to_string());
    svg.text(left + w, top + h + 16.0, "end", &s.years[n - 1].to_string());
    svg.text(left - 4.0, top + 10.0, "end", &format!("{ymax:.0}"));
    svg.text(
        left,
        top + h + 40.0,
        "start",
        &format!(
            "OLS {:.2}/yr (p={:.2e})   Spearman ρ={:.2} (p={:.2e})   MK p={:.2e}, Sen {:.2}/yr",
            report.ols.slope, report.ols.p, report.spearman.rho, report.spearman.p, report.mann_kendall.p, report.mann_kendall.sen_slope
        ),
    );
    svg.finish()
}

/// Per-year NRMSE bars for the rate model and both baselines.
pub fn nrmse_bars_svg(folds: &[FoldResult], title: &str) -> String {
    let rows: Vec<(i32, [Option<f64>; 3])> = folds
        .iter()
        .map(|f| (f.year, [f.nrmse.eco_epi, f.nrmse.null_poisson, f.nrmse.negative_binomial]))
        .filter(|(_, v)| v.iter().any(Option::is_some))
        .collect();
    let (left, top, h) = (50.0, 40.0, 260.0);
    let group = 42.0;
    let w = group * rows.len().max(1) as f64;
    let mut svg = Svg::new(left + w + 140.0, top + h + 40.0);
    svg.text(left, 18.0, "start", title);
    let ymax = rows
        .iter()
        .flat_map(|(_, v)| v.iter().flatten().copied())
        .fold(1.0, f64::max)
        * 1.1;
    let y = scale(0.0, ymax, top + h, top);
    let colors = ["#d7301f", "#969696", "#2171b5"];
    for (g, (year, vals)) in rows.iter().enumerate() {
        let x0 = left + g as f64 * group + 4.0;
        for (k, v) in vals.iter().enumerate() {
            if let Some(v) = v {
                svg.rect(x0 + k as f64 * 11.0, y(*v), 10.0, top + h - y(*v), colors[k], "");
            }
        }
        svg.text(x0 + 16.0, top + h + 14.0, "middle", &(year % 100).to_string());
    }
    svg.line(left, top + h, left + w, top + h, "black", 1.0);
    svg.text(left - 4.0, top + 10.0, "end", &format!("{ymax:.1}"));
    for (k, name) in ["Eco-Epi", "null", "NB"].iter().enumerate() {
        svg.rect(left + w + 16.0, top + k as f64 * 16.0, 10.0, 10.0, colors[k], "");
        svg.text(left + w + 30.0, top + 9.0 + k as f64 * 16.0, "start", name);
    }
    svg.finish()
}

/// Poisson pmf bars with the observed count's bin highlighted.
pub fn pmf_panel_svg(lambda: f64, observed: u32, bins: &BinScheme, title: &str) -> String {
    let kmax = ((lambda + 4.0 * lambda.sqrt()).ceil() as u32).max(observed + 2).max(8);
    let (left, top, w, h) = (40.0, 30.0, 360.0, 160.0);
    let mut svg = Svg::new(left + w + 20.0, top + h + 40.0);
    svg.text(left, 18.0, "start", title);
    let (lo, hi) = bins.bin_of(observed);
    let pmax = (0..=kmax).map(|k| poisson_pmf(lambda, k)).fold(0.0, f64::max).max(1e-12);
    let bw = w / (kmax + 1) as f64;
    for k in 0..=kmax {
        let p = poisson_pmf(lambda, k);
        let in_bin = k >= lo && hi.is_none_or(|h| k <= h);
        let bh = p / pmax * h;
        svg.rect(left + k as f64 * bw + 1.0, top + h - bh, bw - 2.0, bh, if in_bin { "#d7301f" } else { "#9ecae1" }, "");
        if kmax <= 20 || k % 5 == 0 {
            svg.text(left + (k as f64 + 0.5) * bw, top + h + 14.0, "middle", &k.to_string());
        }
    }
    svg.text(left + w, top + 12.0, "end", &format!("λ={lambda:.2}, observed {observed}"));
    svg.finish()
}
