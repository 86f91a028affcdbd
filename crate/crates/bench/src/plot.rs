//! SVG line charts of a set of records against the worker count, one
//! series per case family and mode: a solid line through the mean over
//! repeats and dashed lines through the minimum and maximum.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::{BenchError, BenchRecord};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Panel {
    WallTime,
    Efficiency,
    BytesReceived,
}

impl Panel {
    pub const ALL: [Panel; 3] = [Panel::WallTime, Panel::Efficiency, Panel::BytesReceived];

    pub fn file_name(self) -> &'static str {
        match self {
            Panel::WallTime => "wall_time.svg",
            Panel::Efficiency => "efficiency.svg",
            Panel::BytesReceived => "bytes_received.svg",
        }
    }

    fn title(self) -> &'static str {
        match self {
            Panel::WallTime => "Wall time",
            Panel::Efficiency => "Efficiency",
            Panel::BytesReceived => "Data received per worker",
        }
    }

    fn y_label(self) -> &'static str {
        match self {
            Panel::WallTime => "seconds",
            Panel::Efficiency => "fraction of peak",
            Panel::BytesReceived => "bytes (mean over workers)",
        }
    }

    fn value(self, r: &BenchRecord) -> f64 {
        match self {
            Panel::WallTime => r.wall_seconds,
            Panel::Efficiency => r.efficiency,
            Panel::BytesReceived => r.bytes_mean,
        }
    }
}

/// Min, mean and max over repeats at one worker count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub workers: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

pub fn series(records: &[BenchRecord], panel: Panel) -> BTreeMap<String, Vec<Point>> {
    let mut groups: BTreeMap<String, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in records {
        groups
            .entry(r.series())
            .or_default()
            .entry(r.n_workers)
            .or_default()
            .push(panel.value(r));
    }
    groups
        .into_iter()
        .map(|(name, by_p)| {
            let points = by_p
                .into_iter()
                .map(|(workers, v)| Point {
                    workers,
                    min: v.iter().copied().fold(f64::INFINITY, f64::min),
                    mean: v.iter().sum::<f64>() / v.len() as f64,
                    max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                })
                .collect();
            (name, points)
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 100.0).round() / 100.0)
    }
}

pub fn render(records: &[BenchRecord], panel: Panel) -> String {
    let all = series(records, panel);
    let xs: Vec<f64> = all.values().flatten().map(|p| (p.workers as f64).log2()).collect();
    let (x0, mut x1) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let ymax = all.values().flatten().map(|p| p.max).fold(0.0, f64::max);
    let ymax = if ymax > 0.0 { ymax * 1.1 } else { 1.0 };
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let sx = |w: usize| LEFT + ((w as f64).log2() - x0) / (x1 - x0) * pw;
    let sy = |v: f64| TOP + ph - v / ymax * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, "<title>{}</title>", panel.title());
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        panel.title()
    );
    let _ = writeln!(
        svg,
        r#"<g class="axes" stroke="black"><line x1="{LEFT}" y1="{0}" x2="{1}" y2="{0}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{0}"/></g>"#,
        TOP + ph,
        LEFT + pw
    );
    let mut workers: Vec<usize> = all.values().flatten().map(|p| p.workers).collect();
    workers.sort();
    workers.dedup();
    for w in workers {
        let x = sx(w);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{w}</text>"#,
            TOP + ph + 18.0
        );
    }
    for i in 0..=4 {
        let v = ymax * i as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">workers</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + ph / 2.0,
        panel.y_label()
    );

    for (k, (name, points)) in all.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let line = |f: fn(&Point) -> f64| {
            points
                .iter()
                .map(|p| format!("{:.2},{:.2}", sx(p.workers), sy(f(p))))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(
            svg,
            r#"<g class="series" data-name="{}" stroke="{color}" fill="none">"#,
            escape(name)
        );
        let _ = writeln!(
            svg,
            r#"<polyline class="mean" stroke-width="2" points="{}"/>"#,
            line(|p| p.mean)
        );
        let _ = writeln!(
            svg,
            r#"<polyline class="min" stroke-dasharray="6 4" points="{}"/>"#,
            line(|p| p.min)
        );
        let _ = writeln!(
            svg,
            r#"<polyline class="max" stroke-dasharray="6 4" points="{}"/>"#,
            line(|p| p.max)
        );
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke-width="2"/>"#,
            lx + 25.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="black" stroke="none">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            escape(name)
        );
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes the three panels into `dir` and returns their paths.
pub fn emit_plots(records: &[BenchRecord], dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    if records.is_empty() {
        return Err(BenchError::Config("no records to plot".into()));
    }
    Panel::ALL
        .iter()
        .map(|&panel| {
            let path = dir.join(panel.file_name());
            std::fs::write(&path, render(records, panel)).map_err(|e| BenchError::Io {
                path: path.clone(),
                source: e,
            })?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(family: &str, workers: usize, repeat: usize, wall: f64) -> BenchRecord {
        BenchRecord {
            case_id: format!("{family}-{workers}"),
            family: family.into(),
            mode: "simulate".into(),
            n: 1024 * workers,
            b: 16,
            n_workers: workers,
            repeat,
            wall_seconds: wall,
            flops: 1000,
            efficiency: 0.5,
            bytes_min: 0,
            bytes_mean: 10.0 * workers as f64,
            bytes_max: 20,
            tasks_min: 1,
            tasks_mean: 1.0,
            tasks_max: 1,
        }
    }

    #[test]
    fn equal_repeats_collapse_the_band() {
        let records: Vec<_> = (0..4).map(|r| record("banded", 2, r, 1.5)).collect();
        let s = series(&records, Panel::WallTime);
        assert_eq!(
            s["banded (simulate)"],
            vec![Point {
                workers: 2,
                min: 1.5,
                mean: 1.5,
                max: 1.5
            }]
        );
        let svg = render(&records, Panel::WallTime);
        let lines: Vec<&str> = svg.lines().filter(|l| l.starts_with("<polyline")).collect();
        let points = |l: &str| l.split("points=").nth(1).unwrap().to_string();
        assert_eq!(points(lines[0]), points(lines[1]));
        assert_eq!(points(lines[0]), points(lines[2]));
    }

    #[test]
    fn spread_is_over_repeats() {
        let records = vec![record("banded", 4, 0, 1.0), record("banded", 4, 1, 3.0)];
        let p = series(&records, Panel::WallTime)["banded (simulate)"][0];
        assert_eq!((p.min, p.mean, p.max), (1.0, 2.0, 3.0));
    }

    #[test]
    fn names_are_escaped() {
        let svg = render(&[record("a<b", 1, 0, 1.0)], Panel::Efficiency);
        assert!(svg.contains("a&lt;b"));
        assert!(!svg.contains("a<b"));
    }
}
