use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde::Serialize;

use super::io::{read_trace, write_records};
use crate::ch::TraceRecord;
use crate::{Error, Result};

/// One point of `series.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub trace: String,
    pub series: &'static str,
    pub outer_iter: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    file: &'static str,
    series: &'static str,
    log_y: bool,
    value: fn(&TraceRecord) -> f64,
}

const PANELS: [Panel; 3] = [
    Panel {
        file: "residual.svg",
        series: "residual_L_norm",
        log_y: true,
        value: |r| r.residual_l_norm,
    },
    Panel {
        file: "energy_gap.svg",
        series: "energy_gap",
        log_y: true,
        value: |r| r.energy_gap,
    },
    Panel {
        file: "inner_iters.svg",
        series: "inner_iters",
        log_y: false,
        value: |r| r.inner_iters as f64,
    },
];

/// Label for a trace: its directory name (sweeps write `delta0_<δ₀>/trace.csv`),
/// else the file stem.
fn label(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    match (stem.as_deref(), path.parent().and_then(Path::file_name)) {
        (Some("trace"), Some(dir)) => dir.to_string_lossy().into_owned(),
        (Some(s), _) => s.to_string(),
        _ => path.display().to_string(),
    }
}

/// Reads every trace, then writes `residual.svg`, `energy_gap.svg`,
/// `inner_iters.svg` and the plotted points as `series.csv` into `out_dir`.
/// Returns the written paths.
pub fn render(traces: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if traces.is_empty() {
        return Err(Error::Config("render needs at least one trace".into()));
    }
    let loaded: Vec<(String, Vec<TraceRecord>)> = traces
        .iter()
        .map(|p| Ok((label(p), read_trace(p)?)))
        .collect::<Result<_>>()?;
    std::fs::create_dir_all(out_dir)?;

    let mut points = Vec::new();
    for panel in PANELS {
        for (name, rows) in &loaded {
            for r in rows {
                let value = (panel.value)(r);
                // Non-positive values have no place on a log axis.
                if !panel.log_y || value > 0.0 {
                    points.push(SeriesPoint {
                        trace: name.clone(),
                        series: panel.series,
                        outer_iter: r.outer_iter,
                        value,
                    });
                }
            }
        }
    }

    let mut written = Vec::new();
    for panel in PANELS {
        let path = out_dir.join(panel.file);
        draw(&path, panel, &loaded, &points)
            .map_err(|e| Error::Config(format!("plotting {}: {e}", path.display())))?;
        written.push(path);
    }
    let series = out_dir.join("series.csv");
    write_records(
        std::io::BufWriter::new(std::fs::File::create(&series)?),
        &points,
    )?;
    written.push(series);
    Ok(written)
}

type DrawResult = std::result::Result<(), Box<dyn std::error::Error>>;

fn draw(
    path: &Path,
    panel: Panel,
    loaded: &[(String, Vec<TraceRecord>)],
    points: &[SeriesPoint],
) -> DrawResult {
    let mine: Vec<&SeriesPoint> = points.iter().filter(|p| p.series == panel.series).collect();
    let k_max = mine.iter().map(|p| p.outer_iter).max().unwrap_or(0).max(1) as f64;
    let (lo, hi) = mine
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.value), hi.max(p.value))
        });
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut builder = ChartBuilder::on(&root);
    builder
        .caption(panel.series, ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(70);
    let palette = |i: usize| Palette99::pick(i).to_rgba();

    if panel.log_y {
        let (lo, hi) = if lo.is_finite() {
            (lo / 2.0, hi * 2.0)
        } else {
            (1e-16, 1.0)
        };
        let mut chart = builder.build_cartesian_2d(0f64..k_max, (lo..hi).log_scale())?;
        chart
            .configure_mesh()
            .x_desc("outer iteration")
            .y_label_formatter(&|y| format!("{y:.0e}"))
            .draw()?;
        for (i, (name, _)) in loaded.iter().enumerate() {
            let xy = mine
                .iter()
                .filter(|p| &p.trace == name)
                .map(|p| (p.outer_iter as f64, p.value));
            chart
                .draw_series(LineSeries::new(xy, palette(i)))?
                .label(name.as_str())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], palette(i)));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE)
            .border_style(BLACK)
            .draw()?;
    } else {
        let hi = if hi.is_finite() {
            hi.max(1.0) * 1.1
        } else {
            1.0
        };
        let mut chart = builder.build_cartesian_2d(0f64..k_max, 0f64..hi)?;
        chart.configure_mesh().x_desc("outer iteration").draw()?;
        for (i, (name, _)) in loaded.iter().enumerate() {
            let xy = mine
                .iter()
                .filter(|p| &p.trace == name)
                .map(|p| (p.outer_iter as f64, p.value));
            chart
                .draw_series(LineSeries::new(xy, palette(i)))?
                .label(name.as_str())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], palette(i)));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE)
            .border_style(BLACK)
            .draw()?;
    }
    root.present()?;
    Ok(())
}
