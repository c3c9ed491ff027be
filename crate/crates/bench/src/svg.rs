//! Standalone SVG charts: grouped bars on a log axis, and a log-log
//! scatter of compute complexity against improvement ratio with a fitted line.

use std::fmt::Write as _;

use crate::report::ReportRow;

const W: f64 = 860.0;
const H: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 70.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Series that are bookkeeping rather than plotted bars.
const NON_SERIES: [&str; 3] = ["-", "kernel", "counted"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn ordered<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for i in items {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

/// Decade range covering every positive value.
struct LogAxis {
    lo: f64,
    hi: f64,
}

impl LogAxis {
    fn new(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::MAX, f64::MIN);
        for v in values.filter(|v| *v > 0.0 && v.is_finite()) {
            lo = lo.min(v.log10());
            hi = hi.max(v.log10());
        }
        if lo > hi {
            return LogAxis { lo: 0.0, hi: 1.0 };
        }
        let (lo, mut hi) = (lo.floor(), hi.ceil());
        if hi <= lo {
            hi = lo + 1.0;
        }
        LogAxis { lo, hi }
    }

    /// Position in [0, 1].
    fn frac(&self, v: f64) -> f64 {
        ((v.max(f64::MIN_POSITIVE).log10() - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }

    fn decades(&self) -> impl Iterator<Item = i32> {
        let step = (((self.hi - self.lo) / 10.0).ceil() as i32).max(1);
        (self.lo as i32..=self.hi as i32).step_by(step as usize)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, esc(title));
}

fn legend(out: &mut String, entries: &[String]) {
    for (i, name) in entries.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * i as f64;
        let x = W - RIGHT + 15.0;
        let c = PALETTE[i % PALETTE.len()];
        let _ = writeln!(out, r#"<rect x="{x}" y="{}" width="12" height="12" fill="{c}"/>"#, y - 10.0);
        let _ = writeln!(out, r#"<text x="{}" y="{y}">{}</text>"#, x + 18.0, esc(name));
    }
}

/// Horizontal gridlines and labels for a log value axis.
fn y_axis(out: &mut String, axis: &LogAxis, label: &str) {
    let plot_h = H - TOP - BOTTOM;
    for d in axis.decades() {
        let y = TOP + plot_h * (1.0 - axis.frac(10f64.powi(d)));
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">1e{d}</text>"##,
            W - RIGHT,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + plot_h / 2.0,
        esc(label)
    );
}

/// One group of bars per workload, one bar per series, values on a log axis.
pub fn bar_chart(title: &str, metric: &str, rows: &[&ReportRow]) -> String {
    let rows: Vec<&ReportRow> =
        rows.iter().copied().filter(|r| r.metric == metric && !NON_SERIES.contains(&r.architecture.as_str())).collect();
    let groups = ordered(rows.iter().map(|r| r.workload.as_str()));
    let series = ordered(rows.iter().map(|r| r.architecture.as_str()));
    let axis = LogAxis::new(rows.iter().map(|r| r.value));
    let mut out = String::new();
    header(&mut out, title);
    y_axis(&mut out, &axis, metric);
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;
    let group_w = plot_w / groups.len().max(1) as f64;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;
    for (gi, g) in groups.iter().enumerate() {
        let gx = LEFT + group_w * gi as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            gx + group_w / 2.0,
            H - BOTTOM + 18.0,
            esc(g)
        );
        for (si, s) in series.iter().enumerate() {
            let Some(r) = rows.iter().find(|r| r.workload == *g && r.architecture == *s) else { continue };
            let h = plot_h * axis.frac(r.value);
            let x = gx + group_w * 0.1 + bar_w * si as f64;
            let _ = writeln!(
                out,
                r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{h:.1}" fill="{}" data-series="{}" data-value="{:e}"><title>{} {}: {:.3e}</title></rect>"#,
                TOP + plot_h - h,
                bar_w,
                PALETTE[si % PALETTE.len()],
                esc(s),
                r.value,
                esc(s),
                esc(g),
                r.value
            );
        }
    }
    legend(&mut out, &series.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

/// Least-squares line `log y = a + b log x`; returns `(a, b)`.
pub fn loglog_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.log10(), y.log10());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    let b = (n * sxy - sx * sy) / denom;
    Some(((sy - b * sx) / n, b))
}

/// Pairs the `cc` and `ratio` rows of each (architecture, workload).
pub fn cc_ratio_points<'a>(rows: &[&'a ReportRow]) -> Vec<(&'a str, &'a str, f64, f64)> {
    let mut out = Vec::new();
    for r in rows.iter().filter(|r| r.metric == "cc") {
        let ratio = rows.iter().find(|q| q.metric == "ratio" && q.architecture == r.architecture && q.workload == r.workload);
        if let Some(q) = ratio {
            out.push((r.architecture.as_str(), r.workload.as_str(), r.value, q.value));
        }
    }
    out
}

/// Log-log scatter of improvement ratio against compute complexity, one
/// point per kernel and architecture, with a fitted line per architecture.
pub fn scatter(title: &str, rows: &[&ReportRow]) -> String {
    let points = cc_ratio_points(rows);
    let series = ordered(points.iter().map(|p| p.0));
    let xa = LogAxis::new(points.iter().map(|p| p.2));
    let ya = LogAxis::new(points.iter().map(|p| p.3));
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;
    let px = |x: f64| LEFT + plot_w * xa.frac(x);
    let py = |y: f64| TOP + plot_h * (1.0 - ya.frac(y));
    let mut out = String::new();
    header(&mut out, title);
    y_axis(&mut out, &ya, "improvement ratio");
    for d in xa.decades() {
        let x = px(10f64.powi(d));
        let _ = writeln!(
            out,
            r##"<line x1="{x:.1}" y1="{TOP}" x2="{x:.1}" y2="{}" stroke="#ddd"/><text x="{x:.1}" y="{}" text-anchor="middle">1e{d}</text>"##,
            H - BOTTOM,
            H - BOTTOM + 18.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{}" text-anchor="middle">compute complexity (gates per bit)</text>"#,
        LEFT + plot_w / 2.0,
        H - 20.0
    );
    let mut names = Vec::new();
    for (si, s) in series.iter().enumerate() {
        let c = PALETTE[si % PALETTE.len()];
        let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.0 == *s).map(|p| (p.2, p.3)).collect();
        for p in points.iter().filter(|p| p.0 == *s) {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{c}" data-series="{}" data-cc="{:e}" data-ratio="{:e}"><title>{} {}: CC {:.3}, ratio {:.3e}</title></circle>"#,
                px(p.2),
                py(p.3),
                esc(s),
                p.2,
                p.3,
                esc(s),
                esc(p.1),
                p.2,
                p.3
            );
        }
        match loglog_fit(&pts) {
            Some((a, b)) => {
                let x0 = pts.iter().map(|p| p.0).fold(f64::MAX, f64::min);
                let x1 = pts.iter().map(|p| p.0).fold(f64::MIN, f64::max);
                let y = |x: f64| 10f64.powf(a + b * x.log10());
                let _ = writeln!(
                    out,
                    r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{c}" stroke-dasharray="5 4" data-slope="{b:.4}"/>"#,
                    px(x0),
                    py(y(x0)),
                    px(x1),
                    py(y(x1))
                );
                names.push(format!("{s} (slope {b:.3})"));
            }
            None => names.push(s.to_string()),
        }
    }
    legend(&mut out, &names);
    out.push_str("</svg>\n");
    out
}

/// Charts for every scenario in `rows`, as `(file name, svg)`.
pub fn charts(rows: &[ReportRow]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for scenario in ordered(rows.iter().map(|r| r.scenario.as_str())) {
        let rs: Vec<&ReportRow> = rows.iter().filter(|r| r.scenario == scenario).collect();
        if !cc_ratio_points(&rs).is_empty() {
            out.push((format!("{scenario}-cc-ratio.svg"), scatter(&format!("{scenario}: ratio vs CC"), &rs)));
            continue;
        }
        for metric in ["throughput", "energy_eff"] {
            if rs.iter().any(|r| r.metric == metric) {
                out.push((format!("{scenario}-{metric}.svg"), bar_chart(&format!("{scenario}: {metric}"), metric, &rs)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_inverse_law() {
        let pts: Vec<(f64, f64)> = [1.0, 10.0, 50.0, 200.0].iter().map(|&x| (x, 4000.0 / x)).collect();
        let (a, b) = loglog_fit(&pts).unwrap();
        assert!((b + 1.0).abs() < 1e-12);
        assert!((a - 4000f64.log10()).abs() < 1e-12);
        assert!(loglog_fit(&pts[..1]).is_none());
    }

    #[test]
    fn escapes_markup() {
        assert_eq!(esc("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}
