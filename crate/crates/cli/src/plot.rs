//! SVG trajectory plots: time across, one panel per variable, a dashed rule
//! at every mode change.

use std::collections::BTreeSet;
use std::fmt::Write;

use hytraj::rational::{show_q, to_f64, Q};
use hytraj::time::TimePoint;
use hytraj::trajectory::Trajectory;

const WIDTH: f64 = 860.0;
const PANEL: f64 = 190.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const GAP: f64 = 40.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// A run of points on one affine piece, time and value.
type Run = Vec<(Q, Q)>;

fn runs(s: &Trajectory, var: &str, horizon: &Q, grid: &Q) -> Vec<Run> {
    let mut out = Vec::new();
    for c in s.configs() {
        for (iv, p) in c.segments() {
            if iv.lo() >= horizon {
                continue;
            }
            let hi = match iv.hi() {
                TimePoint::Finite(h) if h < horizon => h.clone(),
                _ => horizon.clone(),
            };
            let mut ts = vec![iv.lo().clone()];
            let mut t = (iv.lo() / grid).floor() * grid + grid;
            while t < hi {
                ts.push(t.clone());
                t += grid;
            }
            ts.push(hi);
            let run: Run = ts.into_iter().filter_map(|t| p.value(var, &t).map(|v| (t, v))).collect();
            if !run.is_empty() {
                out.push(run);
            }
        }
    }
    out
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-9);
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(mag * 10.0);
    let mut out = Vec::new();
    let mut t = (lo / step).ceil() * step;
    while t <= hi + 1e-9 {
        out.push(t);
        t += step;
    }
    out
}

fn fmt_num(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    if r == r.trunc() {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

pub fn render(ts: &[Trajectory], horizon: &Q, grid: &Q, title: &str) -> String {
    let vars: BTreeSet<String> = ts
        .iter()
        .flat_map(|s| s.configs().iter().flat_map(|c| c.flow().initial.keys().cloned().collect::<Vec<_>>()))
        .collect();
    let h = to_f64(horizon).max(1e-9);
    let height = TOP + vars.len() as f64 * (PANEL + GAP) + 10.0;
    let plot_w = WIDTH - LEFT - RIGHT;
    let x_of = |t: f64| LEFT + plot_w * t / h;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{LEFT}" y="18" font-size="13">{}</text>"#, escape(title));
    let switches: BTreeSet<Q> = ts.iter().flat_map(|s| s.configs().iter().skip(1).map(|c| c.b().clone())).filter(|t| t < horizon).collect();
    for (k, var) in vars.iter().enumerate() {
        let top = TOP + k as f64 * (PANEL + GAP);
        let per: Vec<Vec<Run>> = ts.iter().map(|s| runs(s, var, horizon, grid)).collect();
        let values: Vec<f64> = per.iter().flatten().flatten().map(|(_, v)| to_f64(v)).collect();
        let (mut lo, mut hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        let pad = ((hi - lo) * 0.08).max(0.25);
        let (lo, hi) = (lo - pad, hi + pad);
        let y_of = |v: f64| top + PANEL * (1.0 - (v - lo) / (hi - lo));
        let _ = writeln!(svg, r#"<g class="panel" data-var="{}">"#, escape(var));
        let _ = writeln!(svg, r##"<rect x="{LEFT}" y="{top}" width="{plot_w}" height="{PANEL}" fill="none" stroke="#888"/>"##);
        let _ = writeln!(svg, r#"<text x="8" y="{}" font-size="13">{}</text>"#, top + PANEL / 2.0, escape(var));
        for v in ticks(lo, hi) {
            let y = y_of(v);
            let _ = writeln!(svg, r##"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#888"/>"##, LEFT - 4.0);
            let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, fmt_num(v));
        }
        for t in ticks(0.0, h) {
            let x = x_of(t);
            let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#888"/>"##, top + PANEL, top + PANEL + 4.0);
            let _ = writeln!(svg, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, top + PANEL + 16.0, fmt_num(t));
        }
        for t in &switches {
            let x = x_of(to_f64(t));
            let _ = writeln!(
                svg,
                r##"<line class="switch" data-t="{}" x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{}" stroke="#bbb" stroke-dasharray="4 3"/>"##,
                show_q(t),
                top + PANEL
            );
        }
        for (i, rs) in per.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            for run in rs {
                let pts: Vec<String> = run.iter().map(|(t, v)| format!("{:.2},{:.2}", x_of(to_f64(t)), y_of(to_f64(v)))).collect();
                let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.6" points="{}"/>"#, pts.join(" "));
            }
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
