//! Multi-ensemble studies: voltage histograms over pulse widths and the
//! concurrence sweep over line loss and detection efficiency.

use log::info;
use serde::{Deserialize, Serialize};

use crate::analysis::{Bins, VoltageHistogram};
use crate::ensemble::config::SimulationConfig;
use crate::ensemble::runner::{resolve_workers, run_plan};
use crate::sme::TrajectoryPlan;
use crate::{Error, Result};

fn run_cell(cfg: &SimulationConfig, n: usize, workers: usize) -> Result<crate::ensemble::EnsembleRun> {
    let r = cfg.resolve()?;
    let mut options = r.options;
    options.keep_record = false;
    options.snapshot_stride = 0;
    let plan = TrajectoryPlan::new(&r.program, &r.params, options)?;
    let run = run_plan(&plan, n, workers, &cfg.hash()?);
    if let Some(e) = run.error {
        return Err(e);
    }
    Ok(run)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramSet {
    pub trajectories: usize,
    pub histograms: Vec<VoltageHistogram>,
}

/// Voltage histograms for each configured pulse width.
pub fn voltage_histograms(
    cfg: &SimulationConfig,
    trajectories: Option<usize>,
    workers: Option<usize>,
) -> Result<HistogramSet> {
    let h = cfg.histogram.as_ref().ok_or_else(|| Error::Config("missing [histogram] section".into()))?;
    let bins = Bins::new(h.lo, h.hi, h.bins)?;
    let n = trajectories.or(h.trajectories).unwrap_or(cfg.simulation.trajectories);
    let workers = resolve_workers(workers);
    let mut histograms = Vec::new();
    for &w in &h.widths_us {
        let run = run_cell(&cfg.with_width(w), n, workers)?;
        let samples: Vec<_> = run.results.iter().map(|r| (r.integrated_voltage, r.outcome)).collect();
        histograms.push(VoltageHistogram::build(w, bins.clone(), &samples)?);
        info!("histogram width {w} us done");
    }
    Ok(HistogramSet { trajectories: n, histograms })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub loss_db: f64,
    pub eta_m: f64,
    pub width_us: f64,
    pub mean_concurrence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceGrid {
    pub trajectories: usize,
    pub loss_db: Vec<f64>,
    pub eta_m: Vec<f64>,
    pub widths_us: Vec<f64>,
    /// `max_concurrence[i][j]` for `loss_db[i]`, `eta_m[j]`.
    pub max_concurrence: Vec<Vec<f64>>,
    pub best_width_us: Vec<Vec<f64>>,
    pub cells: Vec<SweepCell>,
}

/// Trajectory-averaged final concurrence, maximized over pulse width, on a
/// grid of line loss and detection efficiency. All cells share the noise
/// streams of the configured seed.
pub fn max_concurrence_sweep(
    cfg: &SimulationConfig,
    loss_db: &[f64],
    eta_m: &[f64],
    widths_us: &[f64],
    trajectories: usize,
    workers: Option<usize>,
) -> Result<ConcurrenceGrid> {
    if loss_db.is_empty() || eta_m.is_empty() || widths_us.is_empty() {
        return Err(Error::param("sweep", "grids must be nonempty"));
    }
    if trajectories == 0 {
        return Err(Error::param("sweep.trajectories", "must be at least 1"));
    }
    let workers = resolve_workers(workers);
    let mut grid = vec![vec![0.0; eta_m.len()]; loss_db.len()];
    let mut best = vec![vec![0.0; eta_m.len()]; loss_db.len()];
    let mut cells = Vec::new();
    for (i, &db) in loss_db.iter().enumerate() {
        for (j, &em) in eta_m.iter().enumerate() {
            let mut top = f64::NEG_INFINITY;
            for &w in widths_us {
                let cell_cfg = cfg.with_efficiencies(db, em).with_width(w);
                let run = run_cell(&cell_cfg, trajectories, workers)?;
                let c = run.results.iter().map(|r| r.concurrence).sum::<f64>() / run.results.len() as f64;
                cells.push(SweepCell { loss_db: db, eta_m: em, width_us: w, mean_concurrence: c });
                if c > top {
                    top = c;
                    best[i][j] = w;
                }
            }
            grid[i][j] = top;
            info!("sweep cell loss {db} dB, eta_m {em}: max concurrence {top:.4}");
        }
    }
    Ok(ConcurrenceGrid {
        trajectories,
        loss_db: loss_db.to_vec(),
        eta_m: eta_m.to_vec(),
        widths_us: widths_us.to_vec(),
        max_concurrence: grid,
        best_width_us: best,
        cells,
    })
}

/// Sweep with the grids of the config's `[sweep]` section.
pub fn configured_sweep(
    cfg: &SimulationConfig,
    trajectories: Option<usize>,
    workers: Option<usize>,
) -> Result<ConcurrenceGrid> {
    let s = cfg.sweep.as_ref().ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
    let n = trajectories.or(s.trajectories).unwrap_or(cfg.simulation.trajectories);
    max_concurrence_sweep(cfg, &s.loss_db, &s.eta_m, &s.widths_us, n, workers)
}
