//! Seeded, chunked trajectory ensembles.
//!
//! Trajectory `k` draws its noise from the stream keyed by `(seed, k)`, so the
//! results do not depend on how the index range is split across threads.
//! Workers own contiguous index ranges; results are merged in index order.

use std::collections::BTreeMap;
use std::time::Instant;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::analysis::{concurrence, single_excitation_population, single_excitation_visibility, OutcomeLabel};
use crate::basis::Mat4;
use crate::ensemble::config::SimulationConfig;
use crate::sme::{simulate_trajectory, TrajectoryPlan};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Worker count: explicit value, else `CCQSIM_WORKERS`, else the core count.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var("CCQSIM_WORKERS").ok().and_then(|v| v.parse().ok()))
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
        .max(1)
}

/// Split `[0, n)` into at most `workers` contiguous ranges of near-equal size.
pub fn worker_ranges(n: usize, workers: usize) -> Vec<(usize, usize)> {
    let w = workers.clamp(1, n.max(1));
    let base = n / w;
    let extra = n % w;
    let mut out = Vec::with_capacity(w);
    let mut start = 0;
    for k in 0..w {
        let len = base + usize::from(k < extra);
        out.push((start, start + len));
        start += len;
    }
    out
}

/// What an ensemble keeps of each trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryResult {
    pub index: u64,
    pub outcome: OutcomeLabel,
    pub integrated_voltage: f64,
    pub final_lab: Mat4,
    pub concurrence: f64,
    /// Final single-excitation population reached the classification
    /// threshold, whatever the relative phase.
    pub post_selected: bool,
    /// Snapshot states (output picture of the representation).
    pub snapshots: Vec<Mat4>,
    pub positivity_clips: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkerRange {
    pub worker: usize,
    pub start: usize,
    pub end: usize,
    pub completed: usize,
    pub positivity_clips: u64,
    pub truncation_failures: u64,
    pub numerical_failures: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub code_version: String,
    pub frame: String,
    pub master_seed: u64,
    pub trajectories: usize,
    pub workers: usize,
    pub wall_time_s: f64,
    pub ranges: Vec<WorkerRange>,
    pub positivity_clips: u64,
    pub truncation_failures: u64,
    pub numerical_failures: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunManifest {
    /// Whether the ranges tile `[0, trajectories)` in order.
    pub fn ranges_partition(&self) -> bool {
        let mut next = 0;
        for r in &self.ranges {
            if r.start != next || r.end < r.start {
                return false;
            }
            next = r.end;
        }
        next == self.trajectories
    }
}

/// Outcome of an ensemble run, complete or not.
pub struct EnsembleRun {
    pub results: Vec<TrajectoryResult>,
    pub manifest: RunManifest,
    pub error: Option<Error>,
    pub snapshot_times: Vec<f64>,
}

impl EnsembleRun {
    pub fn summary(&self) -> Result<EnsembleSummary> {
        EnsembleSummary::from_results(&self.manifest, &self.snapshot_times, &self.results)
    }

    pub fn into_result(self) -> Result<(EnsembleSummary, RunManifest)> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let s = self.summary()?;
        Ok((s, self.manifest))
    }
}

fn run_range(
    plan: &TrajectoryPlan,
    start: usize,
    end: usize,
    worker: usize,
) -> (Vec<TrajectoryResult>, WorkerRange, Option<Error>) {
    let mut out = Vec::with_capacity(end - start);
    let mut range = WorkerRange {
        worker,
        start,
        end,
        completed: 0,
        positivity_clips: 0,
        truncation_failures: 0,
        numerical_failures: 0,
    };
    for k in start..end {
        let rec = match simulate_trajectory(plan, k as u64) {
            Ok(r) => r,
            Err(e) => {
                match e {
                    Error::Truncation { .. } => range.truncation_failures += 1,
                    _ => range.numerical_failures += 1,
                }
                let err = Error::Worker { start: k, end, source: Box::new(e) };
                return (out, range, Some(err));
            }
        };
        let c = match concurrence(&rec.final_lab) {
            Ok(c) => c,
            Err(e) => {
                range.numerical_failures += 1;
                return (out, range, Some(Error::Worker { start: k, end, source: Box::new(e) }));
            }
        };
        range.positivity_clips += rec.diagnostics.positivity_clips;
        range.completed += 1;
        out.push(TrajectoryResult {
            index: rec.index,
            outcome: rec.outcome,
            integrated_voltage: rec.integrated_voltage,
            final_lab: rec.final_lab,
            concurrence: c,
            post_selected: single_excitation_population(&rec.final_lab) >= plan.options.threshold,
            snapshots: rec.snapshots.iter().map(|s| s.rho).collect(),
            positivity_clips: rec.diagnostics.positivity_clips,
        });
    }
    (out, range, None)
}

/// Run trajectories `0..n` of a plan on `workers` threads.
pub fn run_plan(plan: &TrajectoryPlan, n: usize, workers: usize, config_hash: &str) -> EnsembleRun {
    let t0 = Instant::now();
    let ranges = worker_ranges(n, workers);
    debug!("running {n} trajectories on {} workers", ranges.len());
    let parts: Vec<_> = if ranges.len() == 1 {
        vec![run_range(plan, 0, n, 0)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> =
                ranges.iter().enumerate().map(|(w, &(a, b))| s.spawn(move || run_range(plan, a, b, w))).collect();
            handles.into_iter().map(|h| h.join().expect("worker thread panicked")).collect()
        })
    };
    let mut results = Vec::with_capacity(n);
    let mut worker_ranges = Vec::new();
    let mut error = None;
    for (res, range, err) in parts {
        results.extend(res);
        worker_ranges.push(range);
        if error.is_none() {
            error = err;
        }
    }
    let sum = |f: fn(&WorkerRange) -> u64| worker_ranges.iter().map(f).sum::<u64>();
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        config_hash: config_hash.to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        frame: plan.options.representation.name().to_string(),
        master_seed: plan.options.master_seed,
        trajectories: n,
        workers: worker_ranges.len(),
        wall_time_s: t0.elapsed().as_secs_f64(),
        positivity_clips: sum(|r| r.positivity_clips),
        truncation_failures: sum(|r| r.truncation_failures),
        numerical_failures: sum(|r| r.numerical_failures),
        error: error.as_ref().map(|e| e.to_string()),
        ranges: worker_ranges,
    };
    let stride_times = snapshot_times(plan);
    EnsembleRun { results, manifest, error, snapshot_times: stride_times }
}

fn snapshot_times(plan: &TrajectoryPlan) -> Vec<f64> {
    let n = plan.options.n_steps;
    let s = plan.options.snapshot_stride;
    (0..=n).filter(|&k| k == 0 || k == n || (s > 0 && k % s == 0)).map(|k| plan.track.time(k)).collect()
}

/// Run the ensemble a config describes.
pub fn run_config(cfg: &SimulationConfig, trajectories: Option<usize>, workers: Option<usize>) -> Result<EnsembleRun> {
    let r = cfg.resolve()?;
    let mut options = r.options;
    options.keep_record = false;
    let plan = TrajectoryPlan::new(&r.program, &r.params, options)?;
    let n = trajectories.unwrap_or(cfg.simulation.trajectories);
    if n == 0 {
        return Err(Error::param("trajectories", "must be at least 1"));
    }
    let run = run_plan(&plan, n, resolve_workers(workers), &cfg.hash()?);
    info!("{} trajectories ({}) in {:.2} s", run.results.len(), run.manifest.frame, run.manifest.wall_time_s);
    Ok(run)
}

pub fn run_ensemble(cfg: &SimulationConfig, workers: Option<usize>) -> Result<(EnsembleSummary, RunManifest)> {
    run_config(cfg, None, workers)?.into_result()
}

/// Row-major `[re, im]` pairs of a 4x4 matrix.
pub fn matrix_entries(m: &Mat4) -> Vec<[f64; 2]> {
    (0..4).flat_map(|r| (0..4).map(move |c| (r, c))).map(|(r, c)| [m[(r, c)].re, m[(r, c)].im]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub schema_version: u32,
    pub frame: String,
    pub trajectories: usize,
    pub master_seed: u64,
    pub outcome_counts: BTreeMap<String, u64>,
    pub mean_voltage_by_outcome: BTreeMap<String, Option<f64>>,
    pub mean_concurrence: f64,
    /// Mean final lab-picture state, row-major `[re, im]`.
    pub mean_final_state: Vec<[f64; 2]>,
    pub snapshot_times_us: Vec<f64>,
    /// Mean `|rho_0110|` over all trajectories at each snapshot.
    pub coherence_all: Vec<f64>,
    /// Mean `|rho_0110|` over post-selected trajectories.
    pub coherence_single_excitation: Vec<f64>,
    /// Mean final visibility `2|rho_0110| / (rho_0101 + rho_1010)` over
    /// post-selected trajectories.
    pub visibility_single_excitation: Option<f64>,
    pub positivity_clips: u64,
}

impl EnsembleSummary {
    pub fn from_results(manifest: &RunManifest, times: &[f64], results: &[TrajectoryResult]) -> Result<Self> {
        if results.is_empty() {
            return Err(Error::param("ensemble", "no completed trajectories to summarize"));
        }
        let n = results.len() as f64;
        let mut counts = BTreeMap::new();
        let mut vsum: BTreeMap<String, (f64, u64)> = BTreeMap::new();
        for l in OutcomeLabel::ALL {
            counts.insert(l.name().to_string(), 0);
            vsum.insert(l.name().to_string(), (0.0, 0));
        }
        let mut mean = Mat4::zeros();
        let mut conc = 0.0;
        let mut vis = (0.0, 0u64);
        let n_snap = results[0].snapshots.len();
        let mut coh_all = vec![0.0; n_snap];
        let mut coh_sel = vec![0.0; n_snap];
        let mut n_sel = 0u64;
        for r in results {
            *counts.get_mut(r.outcome.name()).unwrap() += 1;
            let e = vsum.get_mut(r.outcome.name()).unwrap();
            e.0 += r.integrated_voltage;
            e.1 += 1;
            mean += r.final_lab;
            conc += r.concurrence;
            let selected = r.post_selected;
            if selected {
                vis.0 += single_excitation_visibility(&r.final_lab);
                vis.1 += 1;
                n_sel += 1;
            }
            for (k, rho) in r.snapshots.iter().enumerate().take(n_snap) {
                let c = rho[(1, 2)].norm();
                coh_all[k] += c;
                if selected {
                    coh_sel[k] += c;
                }
            }
        }
        mean /= crate::C64::new(n, 0.0);
        coh_all.iter_mut().for_each(|c| *c /= n);
        if n_sel > 0 {
            coh_sel.iter_mut().for_each(|c| *c /= n_sel as f64);
        } else {
            coh_sel.clear();
        }
        Ok(EnsembleSummary {
            schema_version: SCHEMA_VERSION,
            frame: manifest.frame.clone(),
            trajectories: results.len(),
            master_seed: manifest.master_seed,
            outcome_counts: counts,
            mean_voltage_by_outcome: vsum
                .into_iter()
                .map(|(k, (s, c))| (k, if c > 0 { Some(s / c as f64) } else { None }))
                .collect(),
            mean_concurrence: conc / n,
            mean_final_state: matrix_entries(&mean),
            snapshot_times_us: if n_snap == times.len() { times.to_vec() } else { Vec::new() },
            coherence_all: coh_all,
            coherence_single_excitation: coh_sel,
            visibility_single_excitation: if vis.1 > 0 { Some(vis.0 / vis.1 as f64) } else { None },
            positivity_clips: results.iter().map(|r| r.positivity_clips).sum(),
        })
    }
}
