//! CSV and JSON writers. Output is a pure function of the inputs.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::analysis::OutcomeLabel;
use crate::basis::LABELS;
use crate::cavity::FieldTrack;
use crate::compensation::residual;
use crate::ensemble::runner::{EnsembleSummary, RunManifest};
use crate::ensemble::studies::{ConcurrenceGrid, HistogramSet};
use crate::sme::TrajectoryRecord;
use crate::{Error, Result, SystemParams};

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(std::io::Error::other(format!("{}: {e}", path.display())))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        }
    }
    csv::Writer::from_path(path).map_err(|e| io_error(path, e))
}

fn write_rows(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| io_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| io_error(path, e))
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    #[serde(flatten)]
    summary: &'a EnsembleSummary,
    runtime_s: f64,
}

/// `summary.json` (with the run time) and `manifest.json`.
pub fn write_summary(dir: &Path, summary: &EnsembleSummary, manifest: &RunManifest) -> Result<()> {
    write_json(&dir.join("summary.json"), &SummaryFile { summary, runtime_s: manifest.wall_time_s })?;
    write_json(&dir.join("manifest.json"), manifest)
}

/// Mean `|rho_0110|(t)` for all and for single-excitation trajectories.
pub fn write_coherence_csv(path: &Path, summary: &EnsembleSummary) -> Result<()> {
    let rows = summary.snapshot_times_us.iter().enumerate().map(|(k, t)| {
        vec![
            t.to_string(),
            summary.coherence_all.get(k).map(f64::to_string).unwrap_or_default(),
            summary.coherence_single_excitation.get(k).map(f64::to_string).unwrap_or_default(),
        ]
    });
    write_rows(path, &header(&["t_us", "abs_rho_0110_all", "abs_rho_0110_single_excitation"]), rows)
}

/// One row per step: time, voltage, and the state on snapshot steps.
pub fn write_trajectory_csv(path: &Path, rec: &TrajectoryRecord) -> Result<()> {
    let mut cols = vec!["t_us".to_string(), "dw".to_string(), "voltage".to_string()];
    for r in LABELS {
        for c in LABELS {
            cols.push(format!("re_rho_{r}{c}"));
            cols.push(format!("im_rho_{r}{c}"));
        }
    }
    let mut snaps = rec.snapshots.iter().peekable();
    let rows = (0..rec.times.len()).map(|k| {
        let mut row = vec![rec.times[k].to_string()];
        match (rec.dw.get(k), rec.voltage.get(k)) {
            (Some(dw), Some(v)) => {
                row.push(dw.to_string());
                row.push(v.to_string());
            }
            _ => row.extend([String::new(), String::new()]),
        }
        if snaps.peek().is_some_and(|s| s.step == k) {
            let s = snaps.next().unwrap();
            for r in 0..4 {
                for c in 0..4 {
                    row.push(s.rho[(r, c)].re.to_string());
                    row.push(s.rho[(r, c)].im.to_string());
                }
            }
        } else {
            row.extend(std::iter::repeat_n(String::new(), 32));
        }
        row
    });
    write_rows(path, &cols, rows.collect::<Vec<_>>())
}

/// Long-format histogram: one row per width and bin.
pub fn write_histogram_csv(path: &Path, set: &HistogramSet) -> Result<()> {
    let mut cols = header(&["width_us", "voltage"]);
    cols.extend(OutcomeLabel::ALL.iter().map(|l| l.name().to_string()));
    let mut rows = Vec::new();
    for h in &set.histograms {
        for (k, counts) in h.counts.iter().enumerate() {
            let mut row = vec![h.width_us.to_string(), h.bins.center(k).to_string()];
            row.extend(counts.iter().map(u64::to_string));
            rows.push(row);
        }
    }
    write_rows(path, &cols, rows)
}

/// Outcome fractions per voltage bin.
pub fn write_conditional_csv(path: &Path, set: &HistogramSet) -> Result<()> {
    let mut cols = header(&["width_us", "voltage"]);
    cols.extend(OutcomeLabel::ALL.iter().map(|l| l.name().to_string()));
    let mut rows = Vec::new();
    for h in &set.histograms {
        for (k, frac) in h.conditional_slice().iter().enumerate() {
            let mut row = vec![h.width_us.to_string(), h.bins.center(k).to_string()];
            row.extend(frac.iter().map(f64::to_string));
            rows.push(row);
        }
    }
    write_rows(path, &cols, rows)
}

/// Grid with rows by line loss and columns by detection efficiency.
pub fn write_sweep_csv(path: &Path, grid: &ConcurrenceGrid) -> Result<()> {
    let mut cols = vec!["loss_db".to_string()];
    cols.extend(grid.eta_m.iter().map(|e| format!("eta_m={e}")));
    let rows = grid.loss_db.iter().zip(&grid.max_concurrence).map(|(db, row)| {
        let mut r = vec![db.to_string()];
        r.extend(row.iter().map(f64::to_string));
        r
    });
    write_rows(path, &cols, rows)
}

/// Every (loss, efficiency, width) cell of a sweep.
pub fn write_sweep_cells_csv(path: &Path, grid: &ConcurrenceGrid) -> Result<()> {
    let rows = grid.cells.iter().map(|c| {
        vec![c.loss_db.to_string(), c.eta_m.to_string(), c.width_us.to_string(), c.mean_concurrence.to_string()]
    });
    write_rows(path, &header(&["loss_db", "eta_m", "width_us", "mean_concurrence"]), rows)
}

/// Drives and indistinguishability residual along a field track.
pub fn write_compensation_csv(path: &Path, p: &SystemParams, track: &FieldTrack) -> Result<()> {
    let rows = (0..=track.n_steps).map(|n| {
        let s = track.at(n);
        let r = residual(p, &s.state);
        vec![
            s.t().to_string(),
            s.a_d.re.to_string(),
            s.a_d.im.to_string(),
            s.b_d.re.to_string(),
            s.b_d.im.to_string(),
            r.re.to_string(),
            r.im.to_string(),
        ]
    });
    write_rows(path, &header(&["t_us", "re_a_d", "im_a_d", "re_b_d", "im_b_d", "re_residual", "im_residual"]), rows)
}
