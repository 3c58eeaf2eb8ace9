//! CSV tables and SVG line charts. Output is a pure function of the input,
//! so reruns are byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use agency_core::analysis::{CellFailure, ComparisonTable, GroupAgencyReport};

use crate::io::write_text;
use crate::Result;

pub const COMPARISON_HEADER: &str = "policy,resources,mean,stderr,n";
pub const GROUP_HEADER: &str = "group,variant,k,mean_before,mean_after,n,small_sample_flag";

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `map` converts cell means for display (e.g. back to risk scores).
/// Skipped cells leave `mean` and `stderr` empty.
pub fn comparison_csv(table: &ComparisonTable, map: impl Fn(f64) -> f64) -> String {
    let mut out = format!("{COMPARISON_HEADER}\n");
    for r in &table.rows {
        if r.skipped {
            writeln!(out, "{},{},,,{}", field(&r.policy), r.resources, r.n).unwrap();
        } else {
            writeln!(out, "{},{},{},{},{}", field(&r.policy), r.resources, map(r.mean), r.stderr, r.n).unwrap();
        }
    }
    out
}

pub fn failures_csv(failures: &[CellFailure]) -> String {
    let mut out = String::from("policy,resources,start,message\n");
    for f in failures {
        writeln!(out, "{},{},{},{}", field(&f.policy), f.resources, f.start, field(&f.message)).unwrap();
    }
    out
}

pub fn group_csv(report: &GroupAgencyReport) -> String {
    let mut out = format!("{GROUP_HEADER}\n");
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            field(&r.group),
            r.variant.name(),
            r.k,
            r.mean_before,
            r.mean_after,
            r.n,
            r.small_sample
        )
        .unwrap();
    }
    out
}

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One polyline per series with a legend on the right.
pub fn line_chart_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h, left, right, top, bottom) = (720.0, 420.0, 70.0, 200.0, 40.0, 50.0);
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 <= 0.0 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 <= 0.0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, left + pw / 2.0, escape(title)).unwrap();
    writeln!(out, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#).unwrap();
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, sx(xv), top + ph + 18.0, tick(xv)).unwrap();
        writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, left - 6.0, sy(yv) + 4.0, tick(yv)).unwrap();
    }
    writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 10.0, escape(x_label)).unwrap();
    writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    )
    .unwrap();
    for (k, s) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        writeln!(out, r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#, coords.join(" ")).unwrap();
        for c in &coords {
            let (cx, cy) = c.split_once(',').unwrap();
            writeln!(out, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{colour}"/>"#).unwrap();
        }
        let ly = top + 14.0 + 18.0 * k as f64;
        let lx = left + pw + 16.0;
        writeln!(out, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/>"#, lx + 20.0).unwrap();
        writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.name)).unwrap();
    }
    out.push_str("</svg>\n");
    out
}

fn tick(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Policy per series, resources on the x axis.
pub fn comparison_svg(title: &str, y_label: &str, table: &ComparisonTable, map: impl Fn(f64) -> f64) -> String {
    let mut series: Vec<Series> = Vec::new();
    for r in table.rows.iter().filter(|r| !r.skipped) {
        let p = (f64::from(r.resources), map(r.mean));
        match series.iter_mut().find(|s| s.name == r.policy) {
            Some(s) => s.points.push(p),
            None => series.push(Series { name: r.policy.clone(), points: vec![p] }),
        }
    }
    line_chart_svg(title, "resources", y_label, &series)
}

/// Mean score after advice per group and variant, against k.
pub fn group_svg(title: &str, report: &GroupAgencyReport) -> String {
    let mut series: Vec<Series> = Vec::new();
    for r in &report.rows {
        let name = format!("{} ({})", r.group, r.variant.name());
        let p = (f64::from(r.k), r.mean_after);
        match series.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push(p),
            None => series.push(Series { name, points: vec![p] }),
        }
    }
    line_chart_svg(title, "advice steps k", "mean risk score after advice", &series)
}

/// Writes `<base>.csv` and `<base>.svg` into `dir`.
pub fn emit_pair(dir: &Path, base: &str, csv: &str, svg: &str) -> Result<Vec<PathBuf>> {
    let c = dir.join(format!("{base}.csv"));
    let s = dir.join(format!("{base}.svg"));
    write_text(&c, csv)?;
    write_text(&s, svg)?;
    Ok(vec![c, s])
}
