//! Run configuration. Files use MHz (frequency over 2 pi) and microseconds.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::Mat4;
use crate::compensation::{detuning_compensation, CompensationMode, DriveProgram};
use crate::drive::{DriveSet, Envelope, Shape};
use crate::params::eta_from_db;
use crate::slh::HilbertLayout;
use crate::sme::{DressedDrive, Extras, Representation, TrajectoryOptions};
use crate::{Error, Result, SystemParams};

/// Largest accepted `dt * max(kappa)`.
pub const MAX_DT_KAPPA: f64 = 0.05;

fn default_one() -> f64 {
    1.0
}

fn default_phi() -> f64 {
    std::f64::consts::FRAC_PI_2
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub chi1_mhz: f64,
    pub chi2_mhz: f64,
    pub kappa1_mhz: f64,
    pub kappa2_mhz: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub gamma1_mhz: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub gamma2_mhz: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub delta1_mhz: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub delta2_mhz: f64,
    /// Line transmission; exclusive with `loss_db`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_db: Option<f64>,
    #[serde(default = "default_one")]
    pub eta_m: f64,
    #[serde(default = "default_phi")]
    pub phi_rad: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub gamma_d1_mhz: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub gamma_d2_mhz: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub gamma_r1_mhz: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub gamma_r2_mhz: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub omega1_mhz: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub omega2_mhz: f64,
}

impl ParamsConfig {
    pub fn eta_l(&self) -> Result<f64> {
        match (self.eta_l, self.loss_db) {
            (Some(_), Some(_)) => Err(Error::param("params.loss_db", "give either eta_l or loss_db, not both")),
            (Some(e), None) => Ok(e),
            (None, Some(db)) => {
                if !(db >= 0.0) {
                    return Err(Error::param("params.loss_db", "loss must be non-negative"));
                }
                Ok(eta_from_db(db))
            }
            (None, None) => Ok(1.0),
        }
    }

    /// Parameters in rad/us.
    pub fn to_params(&self) -> Result<SystemParams> {
        let p = SystemParams {
            chi1: TAU * self.chi1_mhz,
            chi2: TAU * self.chi2_mhz,
            kappa1: TAU * self.kappa1_mhz,
            kappa2: TAU * self.kappa2_mhz,
            gamma1: TAU * self.gamma1_mhz,
            gamma2: TAU * self.gamma2_mhz,
            delta1: TAU * self.delta1_mhz,
            delta2: TAU * self.delta2_mhz,
            eta_l: self.eta_l()?,
            eta_m: self.eta_m,
            phi: self.phi_rad,
            gamma_d1: TAU * self.gamma_d1_mhz,
            gamma_d2: TAU * self.gamma_d2_mhz,
            gamma_r1: TAU * self.gamma_r1_mhz,
            gamma_r2: TAU * self.gamma_r2_mhz,
            omega1: TAU * self.omega1_mhz,
            omega2: TAU * self.omega2_mhz,
        };
        p.validate().map_err(|e| match e {
            Error::InvalidParameter { field, reason } => {
                Error::InvalidParameter { field: format!("params.{field}"), reason }
            }
            other => other,
        })?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeConfig {
    #[serde(default = "default_shape")]
    pub shape: Shape,
    pub amplitude_mhz: f64,
    #[serde(default)]
    pub ramp_us: f64,
    /// Flat part; exclusive with `width_us`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hold_us: Option<f64>,
    /// Total duration; the ramp shrinks to half of it when needed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_us: Option<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub start_us: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub phase_rad: f64,
}

fn default_shape() -> Shape {
    Shape::FlatTopSin2
}

impl EnvelopeConfig {
    fn to_envelope(&self, name: &str) -> Result<Envelope> {
        let field = |f: &str| format!("drive.{name}.{f}");
        let amplitude = TAU * self.amplitude_mhz;
        let mut env = match (self.hold_us, self.width_us) {
            (Some(_), Some(_)) => return Err(Error::param(&field("width_us"), "give hold_us or width_us, not both")),
            (None, None) => return Err(Error::param(&field("hold_us"), "pulse needs hold_us or width_us")),
            (Some(hold), None) => match self.shape {
                Shape::Square => Envelope::square(amplitude, 0.0, hold),
                Shape::FlatTopSin2 => Envelope::flat_top(amplitude, self.ramp_us, hold),
            },
            (None, Some(w)) => {
                if !(w > 0.0) {
                    return Err(Error::param(&field("width_us"), "must be positive"));
                }
                match self.shape {
                    Shape::Square => Envelope::square(amplitude, 0.0, w),
                    Shape::FlatTopSin2 => Envelope::flat_top_width(amplitude, self.ramp_us, w),
                }
            }
        };
        env.start = self.start_us;
        env.phase = self.phase_rad;
        Ok(env)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_d: Option<EnvelopeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_d: Option<EnvelopeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<EnvelopeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_bar: Option<EnvelopeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_bar: Option<EnvelopeConfig>,
}

impl DriveConfig {
    fn slots_mut(&mut self) -> [&mut Option<EnvelopeConfig>; 5] {
        [&mut self.a_d, &mut self.b_d, &mut self.probe, &mut self.a_bar, &mut self.b_bar]
    }

    pub fn to_drive_set(&self) -> Result<DriveSet> {
        let conv = |e: &Option<EnvelopeConfig>, name: &str| e.as_ref().map(|e| e.to_envelope(name)).transpose();
        let set = DriveSet {
            a_d: conv(&self.a_d, "a_d")?,
            b_d: conv(&self.b_d, "b_d")?,
            probe: conv(&self.probe, "probe")?,
            a_bar: conv(&self.a_bar, "a_bar")?,
            b_bar: conv(&self.b_bar, "b_bar")?,
        };
        set.validate()?;
        Ok(set)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompensationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<CompensationMode>,
    /// Search window for the cavity-1 detuning, MHz.
    #[serde(default = "default_detuning_window")]
    pub detuning_window_mhz: [f64; 2],
}

fn default_detuning_window() -> [f64; 2] {
    [-20.0, 20.0]
}

impl Default for CompensationConfig {
    fn default() -> Self {
        CompensationConfig { mode: None, detuning_window_mhz: default_detuning_window() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// `(|0> + |1>)(|0> + |1>)/2`
    PlusPlus,
    ZeroZero,
    OneOne,
    BellPlus,
    BellMinus,
}

impl InitialState {
    pub fn matrix(&self) -> Mat4 {
        match self {
            InitialState::PlusPlus => crate::basis::plus_plus(),
            InitialState::ZeroZero => crate::basis::projector(0),
            InitialState::OneOne => crate::basis::projector(3),
            InitialState::BellPlus => crate::basis::bell_plus(),
            InitialState::BellMinus => crate::basis::bell_minus(),
        }
    }
}

fn default_frame() -> Representation {
    Representation::LabReduced
}

fn default_trajectories() -> usize {
    1
}

fn default_threshold() -> f64 {
    0.9
}

fn default_fock() -> [usize; 2] {
    [16, 16]
}

fn default_initial() -> InitialState {
    InitialState::PlusPlus
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default = "default_frame")]
    pub frame: Representation,
    /// Defaults to `1 / (100 max kappa)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_us: Option<f64>,
    /// Defaults to the end of the last pulse plus the ring-down time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_us: Option<f64>,
    /// Defaults to ten field decay times of the slower cavity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ringdown_us: Option<f64>,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub snapshot_stride: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_fock")]
    pub fock_levels: [usize; 2],
    #[serde(default = "default_initial")]
    pub initial: InitialState,
    #[serde(default)]
    pub relaxation: bool,
    #[serde(default)]
    pub dressed_drive: bool,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            frame: default_frame(),
            dt_us: None,
            duration_us: None,
            ringdown_us: None,
            trajectories: 1,
            seed: 0,
            snapshot_stride: 0,
            threshold: default_threshold(),
            fock_levels: default_fock(),
            initial: default_initial(),
            relaxation: false,
            dressed_drive: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub loss_db: Vec<f64>,
    pub eta_m: Vec<f64>,
    pub widths_us: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramConfig {
    pub widths_us: Vec<f64>,
    pub bins: usize,
    pub lo: f64,
    pub hi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<usize>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    /// Number of per-trajectory CSV files written by `simulate`.
    #[serde(default = "default_trajectory_files")]
    pub trajectory_files: usize,
}

fn default_trajectory_files() -> usize {
    1
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_out_dir(), trajectory_files: default_trajectory_files() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub params: ParamsConfig,
    #[serde(default)]
    pub drive: DriveConfig,
    #[serde(default)]
    pub compensation: CompensationConfig,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<HistogramConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Everything derived from a config that a run needs.
pub struct Resolved {
    pub params: SystemParams,
    pub program: DriveProgram,
    pub options: TrajectoryOptions,
}

impl SimulationConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: SimulationConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.compensation.mode.is_none() {
            info!("no compensation mode configured; using adiabatic");
            cfg.compensation.mode = Some(CompensationMode::Adiabatic);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml_string()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn mode(&self) -> CompensationMode {
        self.compensation.mode.unwrap_or(CompensationMode::Adiabatic)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.params.to_params()?;
        let drives = self.drive.to_drive_set()?;
        let sim = &self.simulation;
        if sim.trajectories == 0 {
            return Err(Error::param("simulation.trajectories", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&sim.threshold) {
            return Err(Error::param("simulation.threshold", "must lie in [0, 1]"));
        }
        if sim.fock_levels.iter().any(|&n| n < 3) {
            return Err(Error::param("simulation.fock_levels", "need at least 3 levels per cavity"));
        }
        let dt = self.dt()?;
        if dt * p.kappa_max() > MAX_DT_KAPPA * (1.0 + 1e-12) {
            return Err(Error::param(
                "simulation.dt_us",
                format!("dt * max(kappa) = {:.4} exceeds {MAX_DT_KAPPA}", dt * p.kappa_max()),
            ));
        }
        let duration = self.duration_with(&p, &drives)?;
        if !(duration > 0.0) {
            return Err(Error::param("simulation.duration_us", "must be positive"));
        }
        if let Some(s) = &self.sweep {
            if s.loss_db.is_empty() || s.eta_m.is_empty() || s.widths_us.is_empty() {
                return Err(Error::param("sweep", "grids must be nonempty"));
            }
            if s.widths_us.iter().any(|w| !(*w > 0.0)) {
                return Err(Error::param("sweep.widths_us", "widths must be positive"));
            }
            if s.eta_m.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
                return Err(Error::param("sweep.eta_m", "efficiencies must lie in (0, 1]"));
            }
            if s.loss_db.iter().any(|l| !(*l >= 0.0)) {
                return Err(Error::param("sweep.loss_db", "losses must be non-negative"));
            }
        }
        if let Some(h) = &self.histogram {
            crate::analysis::Bins::new(h.lo, h.hi, h.bins)?;
            if h.widths_us.is_empty() || h.widths_us.iter().any(|w| !(*w > 0.0)) {
                return Err(Error::param("histogram.widths_us", "need positive widths"));
            }
        }
        Ok(())
    }

    pub fn dt(&self) -> Result<f64> {
        let p = self.params.to_params()?;
        let dt = self.simulation.dt_us.unwrap_or(1.0 / (100.0 * p.kappa_max()));
        if !(dt > 0.0) {
            return Err(Error::param("simulation.dt_us", "must be positive"));
        }
        Ok(dt)
    }

    fn duration_with(&self, p: &SystemParams, drives: &DriveSet) -> Result<f64> {
        if let Some(d) = self.simulation.duration_us {
            return Ok(d);
        }
        let ringdown = match self.simulation.ringdown_us {
            Some(r) if r >= 0.0 => r,
            Some(_) => return Err(Error::param("simulation.ringdown_us", "must be non-negative")),
            None => 10.0 / p.damping_min(),
        };
        Ok(drives.end() + ringdown)
    }

    /// Copy with every pulse resized to total duration `width`.
    pub fn with_width(&self, width: f64) -> Self {
        let mut cfg = self.clone();
        for env in cfg.drive.slots_mut().into_iter().flatten() {
            env.hold_us = None;
            env.width_us = Some(width);
        }
        cfg
    }

    /// Copy with a different line loss and detection efficiency.
    pub fn with_efficiencies(&self, loss_db: f64, eta_m: f64) -> Self {
        let mut cfg = self.clone();
        cfg.params.eta_l = None;
        cfg.params.loss_db = Some(loss_db);
        cfg.params.eta_m = eta_m;
        cfg
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let mut params = self.params.to_params()?;
        let drives = self.drive.to_drive_set()?;
        let mode = self.mode();
        if mode == CompensationMode::Detuning {
            let [lo, hi] = self.compensation.detuning_window_mhz;
            let delta1 =
                detuning_compensation(&params, drives.a_d_peak(&params), drives.b_d_peak(&params), TAU * lo, TAU * hi)?;
            info!("detuning compensation: delta1 / 2pi = {:.6} MHz", delta1 / TAU);
            params.delta1 = delta1;
        }
        let program = DriveProgram::new(drives.clone(), mode, params.clone())?;
        let dt = self.dt()?;
        let duration = self.duration_with(&params, &drives)?;
        let n_steps = ((duration / dt).round() as usize).max(1);
        let sim = &self.simulation;
        let mut options = TrajectoryOptions::new(sim.frame, dt, n_steps);
        options.snapshot_stride = sim.snapshot_stride;
        options.master_seed = sim.seed;
        options.initial = sim.initial.matrix();
        options.fock = HilbertLayout::new(sim.fock_levels[0], sim.fock_levels[1]);
        options.threshold = sim.threshold;
        options.extras = Extras {
            dressed_drive: if sim.dressed_drive { Some(DressedDrive) } else { None },
            relaxation: sim.relaxation,
        };
        Ok(Resolved { params, program, options })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[params]
chi1_mhz = 1.2
chi2_mhz = 1.0
kappa1_mhz = 18.0
kappa2_mhz = 16.0
gamma1_mhz = 0.9
gamma2_mhz = 0.8

[drive.a_d]
amplitude_mhz = 10.0
ramp_us = 0.05
width_us = 1.0

[simulation]
trajectories = 10
"#;

    #[test]
    fn loads_and_defaults_to_adiabatic() {
        let cfg = SimulationConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.mode(), CompensationMode::Adiabatic);
        let p = cfg.params.to_params().unwrap();
        assert!((p.chi1 - TAU * 1.2).abs() < 1e-12);
        assert_eq!(p.eta_l, 1.0);
    }

    #[test]
    fn round_trip() {
        let cfg = SimulationConfig::from_toml_str(SAMPLE).unwrap();
        let again = SimulationConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash().unwrap(), again.hash().unwrap());
    }

    #[test]
    fn negative_kappa_names_field() {
        let bad = SAMPLE.replace("kappa2_mhz = 16.0", "kappa2_mhz = -1.0");
        match SimulationConfig::from_toml_str(&bad) {
            Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "params.kappa2"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn coarse_dt_rejected() {
        let bad = SAMPLE.replace("trajectories = 10", "trajectories = 10\ndt_us = 0.01");
        assert!(matches!(SimulationConfig::from_toml_str(&bad), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn unknown_key_is_config_error() {
        let bad = SAMPLE.replace("[simulation]", "[simulation]\nfoo = 1");
        assert!(matches!(SimulationConfig::from_toml_str(&bad), Err(Error::Config(_))));
    }
}
