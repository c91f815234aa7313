//! Deterministic SVG line charts from metric rows.
//!
//! One chart per metric: per-episode mean across seeds as a line, one series
//! per agent label, with a translucent mean +/- standard deviation band.
//! Output contains no timestamps and uses fixed-precision coordinates, so
//! identical inputs give byte-identical SVGs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::metrics::ParsedRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 48.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];
/// Longest series drawn at full resolution; longer ones are strided.
const MAX_POINTS: usize = 2000;

/// Mean and band of one (agent) series over episodes.
struct Series {
    label: String,
    episodes: Vec<u32>,
    mean: Vec<f64>,
    std: Vec<f64>,
}

/// Render one SVG per metric into `out_dir`; returns the files written.
///
/// With `metric` set, only that metric is rendered; selecting nothing is an
/// error.
pub fn render_plots(rows: &[ParsedRow], out_dir: &Path, metric: Option<&str>) -> Result<Vec<PathBuf>> {
    let mut metrics: Vec<String> = rows.iter().map(|r| r.metric.clone()).collect();
    metrics.sort();
    metrics.dedup();
    if let Some(wanted) = metric {
        metrics.retain(|m| m == wanted);
    }
    if metrics.is_empty() {
        return Err(Error::invalid(match metric {
            Some(m) => format!("metric '{m}' not present in the results"),
            None => "no metrics to plot".to_string(),
        }));
    }

    let mut written = Vec::new();
    for name in metrics {
        let svg = render_metric(rows, &name)?;
        let path = out_dir.join(format!("plot_{name}.svg"));
        fs::write(&path, svg).map_err(|e| Error::io(path.display().to_string(), e))?;
        written.push(path);
    }
    Ok(written)
}

fn render_metric(rows: &[ParsedRow], metric: &str) -> Result<String> {
    // agent -> episode -> values across seeds
    let mut grouped: BTreeMap<&str, BTreeMap<u32, Vec<f64>>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.metric == metric) {
        grouped
            .entry(&row.agent)
            .or_default()
            .entry(row.episode)
            .or_default()
            .push(row.value);
    }

    let mut series = Vec::new();
    for (label, by_episode) in grouped {
        let stride = by_episode.len().div_ceil(MAX_POINTS).max(1);
        let mut s = Series {
            label: label.to_string(),
            episodes: Vec::new(),
            mean: Vec::new(),
            std: Vec::new(),
        };
        for (i, (&episode, values)) in by_episode.iter().enumerate() {
            if i % stride != 0 && i + 1 != by_episode.len() {
                continue;
            }
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            s.episodes.push(episode);
            s.mean.push(mean);
            s.std.push(var.sqrt());
        }
        series.push(s);
    }

    let x_max = series
        .iter()
        .flat_map(|s| s.episodes.last().copied())
        .max()
        .unwrap_or(0) as f64;
    let x_min = series
        .iter()
        .flat_map(|s| s.episodes.first().copied())
        .min()
        .unwrap_or(0) as f64;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in &series {
        for (m, sd) in s.mean.iter().zip(&s.std) {
            y_min = y_min.min(m - sd);
            y_max = y_max.max(m + sd);
        }
    }
    if !y_min.is_finite() || !y_max.is_finite() {
        return Err(Error::invalid(format!("metric '{metric}' has no points")));
    }
    if (y_max - y_min).abs() < 1e-12 {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let x_span = (x_max - x_min).max(1.0);
    let y_span = y_max - y_min;

    let to_x = |e: f64| MARGIN_LEFT + (e - x_min) / x_span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT);
    let to_y =
        |v: f64| HEIGHT - MARGIN_BOTTOM - (v - y_min) / y_span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" font-family="monospace" font-size="14" text-anchor="middle">{metric} (mean across seeds, band: +/- sd)</text>"#,
        WIDTH / 2.0
    );
    // Axes.
    let _ = writeln!(
        svg,
        r#"<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{l}" y1="{t}" x2="{l}" y2="{b}" stroke="black"/>"#,
        l = MARGIN_LEFT,
        r = WIDTH - MARGIN_RIGHT,
        t = MARGIN_TOP,
        b = HEIGHT - MARGIN_BOTTOM
    );
    let _ = writeln!(
        svg,
        r#"<text x="{l}" y="{y}" font-family="monospace" font-size="11">{x0}</text><text x="{r}" y="{y}" font-family="monospace" font-size="11" text-anchor="end">{x1}</text>"#,
        l = MARGIN_LEFT,
        r = WIDTH - MARGIN_RIGHT,
        y = HEIGHT - MARGIN_BOTTOM + 16.0,
        x0 = fmt_num(x_min),
        x1 = fmt_num(x_max)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{x}" y="{b}" font-family="monospace" font-size="11" text-anchor="end">{y0}</text><text x="{x}" y="{t}" font-family="monospace" font-size="11" text-anchor="end">{y1}</text>"#,
        x = MARGIN_LEFT - 6.0,
        b = HEIGHT - MARGIN_BOTTOM,
        t = MARGIN_TOP + 4.0,
        y0 = fmt_num(y_min),
        y1 = fmt_num(y_max)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{x}" y="{y}" font-family="monospace" font-size="11" text-anchor="middle">episode</text>"#,
        x = (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        y = HEIGHT - 12.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if s.episodes.is_empty() {
            continue;
        }
        // Band polygon: upper edge forward, lower edge back.
        let mut band = String::new();
        for ((e, m), sd) in s.episodes.iter().zip(&s.mean).zip(&s.std) {
            let _ = write!(band, "{},{} ", fmt_coord(to_x(*e as f64)), fmt_coord(to_y(m + sd)));
        }
        for ((e, m), sd) in s.episodes.iter().zip(&s.mean).zip(&s.std).rev() {
            let _ = write!(band, "{},{} ", fmt_coord(to_x(*e as f64)), fmt_coord(to_y(m - sd)));
        }
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
            band.trim_end()
        );

        let mut line = String::new();
        for (e, m) in s.episodes.iter().zip(&s.mean) {
            let _ = write!(line, "{},{} ", fmt_coord(to_x(*e as f64)), fmt_coord(to_y(*m)));
        }
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            line.trim_end()
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y}" font-family="monospace" font-size="12" fill="{color}">{label}</text>"#,
            x = WIDTH - MARGIN_RIGHT - 60.0,
            y = MARGIN_TOP + 16.0 * (i as f64 + 1.0),
            label = s.label
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn fmt_coord(v: f64) -> String {
    format!("{v:.2}")
}

fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e9 {
        format!("{}", v as i64)
    } else {
        format!("{v:.4}")
    }
}
