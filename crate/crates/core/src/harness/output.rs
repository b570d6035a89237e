use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{format_err, invalid, Error, Result};
use crate::fusion::FusionStats;
use crate::harness::config::ExperimentConfig;
use crate::harness::run::{ExperimentOutput, FrameRecord, TraceRow};

pub const CSV_HEADER: [&str; 9] = [
    "frame",
    "controller",
    "t_cmd",
    "t_eff",
    "frac_complete",
    "mean_rel_err",
    "promoted",
    "updated",
    "ignored",
];

pub const TRACE_HEADER: [&str; 6] = ["frame", "t_candidate", "U_e", "U_r", "U_total", "chosen"];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => format_err("CSV", format!("{other:?}")),
    }
}

fn float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

/// Writes one row per record in the given order.
pub fn write_csv<W: Write>(writer: W, records: &[FrameRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.frame.to_string(),
            r.controller.clone(),
            float(r.t_cmd),
            float(r.t_eff),
            float(r.frac_complete),
            float(r.mean_rel_err),
            r.stats.promoted.to_string(),
            r.stats.updated.to_string(),
            r.stats.ignored.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[FrameRecord], path: impl AsRef<Path>) -> Result<()> {
    if records.is_empty() {
        return Err(invalid("no records to write"));
    }
    let mut buf = Vec::new();
    write_csv(&mut buf, records)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// Parses a frame CSV back into records. Fields that the CSV does not carry
/// (`commanded`, bounded/conflict counts) are left at their defaults.
pub fn read_csv<R: Read>(reader: R) -> Result<Vec<FrameRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(format_err("CSV", "unexpected header"));
    }
    let mut records = Vec::new();
    for row in r.records() {
        let row = row.map_err(csv_err)?;
        let num = |i: usize| -> Result<f64> {
            row[i]
                .parse::<f64>()
                .map_err(|_| format_err("CSV", format!("bad number {:?} in column {}", &row[i], CSV_HEADER[i])))
        };
        let int = |i: usize| -> Result<u64> {
            row[i]
                .parse::<u64>()
                .map_err(|_| format_err("CSV", format!("bad integer {:?} in column {}", &row[i], CSV_HEADER[i])))
        };
        records.push(FrameRecord {
            frame: int(0)? as usize,
            controller: row[1].to_string(),
            t_cmd: num(2)?,
            t_eff: num(3)?,
            commanded: false,
            frac_complete: num(4)?,
            mean_rel_err: num(5)?,
            stats: FusionStats {
                promoted: int(6)?,
                updated: int(7)?,
                ignored: int(8)?,
                ..Default::default()
            },
        });
    }
    Ok(records)
}

pub fn write_trace_csv<W: Write>(writer: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.frame.to_string(),
            float(r.t_candidate),
            float(r.exploration),
            float(r.refinement),
            float(r.total),
            u8::from(r.chosen).to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Two-panel SVG: fraction of complete points and mean relative error per frame.
pub fn render_plot(records: &[FrameRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(invalid("no records to plot"));
    }
    // Controllers in first-appearance order.
    let mut order: Vec<&str> = Vec::new();
    let mut series: BTreeMap<&str, Vec<&FrameRecord>> = BTreeMap::new();
    for r in records {
        if !series.contains_key(r.controller.as_str()) {
            order.push(&r.controller);
        }
        series.entry(&r.controller).or_default().push(r);
    }
    let max_frame = records.iter().map(|r| r.frame).max().unwrap_or(0).max(1) as f64;
    let max_err = records
        .iter()
        .map(|r| r.mean_rel_err * 100.0)
        .filter(|e| e.is_finite())
        .fold(0.0f64, f64::max);
    let err_top = if max_err > 0.0 { nice_ceiling(max_err) } else { 1.0 };

    let (panel_w, panel_h, margin, gap) = (420.0, 260.0, 60.0, 70.0);
    let width = 2.0 * panel_w + gap + 2.0 * margin;
    let legend_h = 20.0 * order.len() as f64;
    let height = panel_h + 2.0 * margin + legend_h + 10.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#
    );
    let panels = [
        ("Complete points (%)", 100.0, 0usize),
        ("Mean relative error (%)", err_top, 1usize),
    ];
    for (title, y_top, which) in panels {
        let x0 = margin + which as f64 * (panel_w + gap);
        let y0 = margin;
        let _ = writeln!(
            svg,
            r##"<g class="panel"><rect x="{x0}" y="{y0}" width="{panel_w}" height="{panel_h}" fill="none" stroke="#444"/>
<text x="{tx}" y="{ty}" text-anchor="middle" font-weight="bold">{title}</text>
<text x="{tx}" y="{lx}" text-anchor="middle">Frame</text>"##,
            tx = x0 + panel_w / 2.0,
            ty = y0 - 12.0,
            lx = y0 + panel_h + 36.0,
            title = escape(title),
        );
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let y = y0 + panel_h * (1.0 - f);
            let x = x0 + panel_w * f;
            let _ = writeln!(
                svg,
                r##"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#ddd"/><text x="{lx}" y="{ly}" text-anchor="end">{yv}</text><text x="{x}" y="{bx}" text-anchor="middle">{xv}</text>"##,
                x1 = x0 + panel_w,
                lx = x0 - 6.0,
                ly = y + 4.0,
                yv = trim(y_top * f),
                bx = y0 + panel_h + 16.0,
                xv = trim(max_frame * f),
            );
        }
        for (i, name) in order.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let points: Vec<String> = series[name]
                .iter()
                .filter_map(|r| {
                    let value = if which == 0 {
                        r.frac_complete * 100.0
                    } else {
                        r.mean_rel_err * 100.0
                    };
                    value.is_finite().then(|| {
                        let x = x0 + panel_w * r.frame as f64 / max_frame;
                        let y = y0 + panel_h * (1.0 - (value / y_top).min(1.0));
                        format!("{x:.2},{y:.2}")
                    })
                })
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline data-controller="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                escape(name),
                points.join(" ")
            );
        }
        svg.push_str("</g>\n");
    }
    for (i, name) in order.iter().enumerate() {
        let y = margin + panel_h + 56.0 + 20.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            svg,
            r#"<line x1="{margin}" y1="{y}" x2="{x2}" y2="{y}" stroke="{color}" stroke-width="3"/><text x="{tx}" y="{ty}">{}</text>"#,
            escape(name),
            x2 = margin + 24.0,
            tx = margin + 30.0,
            ty = y + 4.0,
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn trim(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn nice_ceiling(v: f64) -> f64 {
    let mag = 10f64.powf(v.log10().floor());
    for m in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if m * mag >= v {
            return m * mag;
        }
    }
    10.0 * mag
}

/// Writes the plot; nothing is created when `records` is empty.
pub fn emit_plot(records: &[FrameRecord], path: impl AsRef<Path>) -> Result<()> {
    let svg = render_plot(records)?;
    std::fs::write(path, svg)?;
    Ok(())
}

/// Writes the CSV, optional plot, traces and map snapshots into `dir`.
/// Returns the written paths.
pub fn write_outputs(
    output: &ExperimentOutput,
    config: &ExperimentConfig,
    dir: impl AsRef<Path>,
    plot: bool,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let csv_path = dir.join(&config.output.csv);
    emit_csv(&output.records, &csv_path)?;
    written.push(csv_path);
    if plot {
        let path = dir.join(&config.output.plot);
        emit_plot(&output.records, &path)?;
        written.push(path);
    }
    for run in &output.runs {
        if config.output.traces && !run.trace.is_empty() {
            let path = dir.join(format!("trace_{}.csv", run.controller));
            let mut buf = Vec::new();
            write_trace_csv(&mut buf, &run.trace)?;
            std::fs::write(&path, buf)?;
            written.push(path);
        }
        if config.output.snapshots {
            let path = dir.join(format!("{}.hdrmap", run.controller));
            let clamped = run.map.save_snapshot(&path, &output.scale)?;
            if clamped > 0 {
                log::info!("{}: {clamped} cells clamped while packing", run.controller);
            }
            written.push(path);
        }
    }
    Ok(written)
}
