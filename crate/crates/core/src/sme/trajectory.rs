//! Single conditional trajectories and their deterministic averages.

use serde::{Deserialize, Serialize};

use crate::analysis::{classify_state, OutcomeLabel};
use crate::basis::Mat4;
use crate::cavity::{ConditionalCavityState, DriveProvider, FieldTrack};
use crate::rng::WienerStream;
use crate::slh::HilbertLayout;
use crate::sme::full::{FullModel, FullState};
use crate::sme::reduced::{
    measurement_operator, polaron_to_lab, step_fast, step_qubit, step_unconditioned, StepCoefficients,
};
use crate::sme::{Diagnostics, Extras, Frame, QubitState};
use crate::{Error, Result, SystemParams, C64};

/// Which equations a trajectory integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    /// Reduced equation in the polaron picture; snapshots in that picture.
    Polaron,
    /// Polaron evolution, snapshots mapped to the lab picture.
    LabCompensated,
    /// Reduced equation in the lab picture.
    LabReduced,
    /// Qubits and truncated cavity modes.
    Full,
}

impl Representation {
    pub fn name(&self) -> &'static str {
        match self {
            Representation::Polaron => "polaron",
            Representation::LabCompensated => "lab-compensated",
            Representation::LabReduced => "lab-reduced",
            Representation::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "polaron" => Ok(Representation::Polaron),
            "lab-compensated" | "lab_compensated" => Ok(Representation::LabCompensated),
            "lab-reduced" | "lab_reduced" | "lab" => Ok(Representation::LabReduced),
            "full" => Ok(Representation::Full),
            _ => Err(Error::param("frame", format!("unknown frame '{s}'"))),
        }
    }

    fn evolution_frame(&self) -> Frame {
        match self {
            Representation::Polaron | Representation::LabCompensated => Frame::Polaron,
            Representation::LabReduced | Representation::Full => Frame::Lab,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryOptions {
    pub representation: Representation,
    pub dt: f64,
    pub n_steps: usize,
    /// Snapshot every `stride` steps (the final state is always kept).
    /// Zero keeps only the initial and final states.
    pub snapshot_stride: usize,
    pub master_seed: u64,
    pub initial: Mat4,
    pub extras: Extras,
    pub fock: HilbertLayout,
    pub threshold: f64,
    /// Steps whose voltage enters the integrated signal.
    pub window: (usize, usize),
    /// Keep per-step `dW` and voltage.
    pub keep_record: bool,
}

impl TrajectoryOptions {
    pub fn new(representation: Representation, dt: f64, n_steps: usize) -> Self {
        TrajectoryOptions {
            representation,
            dt,
            n_steps,
            snapshot_stride: 0,
            master_seed: 0,
            initial: crate::basis::plus_plus(),
            extras: Extras::default(),
            fock: HilbertLayout::new(16, 16),
            threshold: 0.9,
            window: (0, n_steps),
            keep_record: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub rho: Mat4,
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub index: u64,
    pub times: Vec<f64>,
    pub dw: Vec<f64>,
    pub voltage: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    /// `int V dt` over the window mapped so `|00>` sits at -1 and `|11>` at +1.
    pub integrated_voltage: f64,
    /// Final state in the lab picture.
    pub final_lab: Mat4,
    pub outcome: OutcomeLabel,
    pub diagnostics: Diagnostics,
}

impl TrajectoryRecord {
    pub fn final_state(&self) -> &Mat4 {
        &self.snapshots.last().expect("records keep their final state").rho
    }
}

/// Everything shared by the trajectories of one ensemble.
pub struct TrajectoryPlan {
    pub params: SystemParams,
    pub options: TrajectoryOptions,
    pub track: FieldTrack,
    coefficients: Vec<StepCoefficients>,
    full: Option<FullModel>,
    /// Integrated noise-free voltage for `|00>` and `|11>`.
    voltage_reference: (f64, f64),
}

impl TrajectoryPlan {
    pub fn new<D: DriveProvider + ?Sized>(
        drives: &D,
        params: &SystemParams,
        options: TrajectoryOptions,
    ) -> Result<Self> {
        params.validate()?;
        if !(options.dt > 0.0) || options.n_steps == 0 {
            return Err(Error::param("simulation.dt", "need dt > 0 and at least one step"));
        }
        if options.window.0 >= options.window.1 || options.window.1 > options.n_steps {
            return Err(Error::param("simulation.window", "window must be a nonempty range of steps"));
        }
        let rep = options.representation;
        if options.extras.relaxation && rep != Representation::LabReduced {
            return Err(Error::param("extras.relaxation", "relaxation needs the lab-reduced frame"));
        }
        if options.extras.dressed_drive.is_some() && rep != Representation::Polaron {
            return Err(Error::param("extras.dressed_drive", "the dressed drive needs the polaron frame"));
        }
        check_state(&options.initial)?;
        let track =
            FieldTrack::build(drives, params, ConditionalCavityState::vacuum(0.0), options.dt, options.n_steps)?;
        let frame = rep.evolution_frame();
        let coefficients = if rep == Representation::Full {
            Vec::new()
        } else {
            (0..options.n_steps).map(|n| StepCoefficients::new(frame, params, &track.step(n))).collect()
        };
        let full = if rep == Representation::Full { Some(FullModel::new(params, options.fock)?) } else { None };
        let voltage_reference = reference_voltages(params, &track, options.window);
        Ok(TrajectoryPlan { params: params.clone(), options, track, coefficients, full, voltage_reference })
    }

    fn normalized_voltage(&self, integral: f64) -> f64 {
        let (v0, v3) = self.voltage_reference;
        if (v3 - v0).abs() < 1e-300 {
            return 0.0;
        }
        2.0 * (integral - v0) / (v3 - v0) - 1.0
    }

    fn keep_snapshot(&self, step: usize) -> bool {
        let s = self.options.snapshot_stride;
        step == 0 || step == self.options.n_steps || (s > 0 && step % s == 0)
    }

    /// Lab-picture view of a state at step `n`.
    fn output_state(&self, rho: &Mat4, n: usize) -> Result<Mat4> {
        match self.options.representation {
            Representation::LabCompensated => {
                let st = &self.track.at(n).state;
                Ok(polaron_to_lab(&QubitState::new(*rho, Frame::Polaron, st.t), st)?.rho)
            }
            _ => Ok(*rho),
        }
    }
}

fn check_state(rho: &Mat4) -> Result<()> {
    if (rho.trace().re - 1.0).abs() > 1e-10 || crate::basis::max_abs(&(rho - rho.adjoint())) > 1e-12 {
        return Err(Error::param("initial_state", "initial state must be Hermitian with unit trace"));
    }
    if crate::sme::min_eigenvalue(rho) < -crate::sme::POSITIVITY_TOLERANCE {
        return Err(Error::param("initial_state", "initial state must be positive"));
    }
    Ok(())
}

/// Noise-free `int V dt` over the window for `|00>` and `|11>`.
fn reference_voltages(p: &SystemParams, track: &FieldTrack, window: (usize, usize)) -> (f64, f64) {
    let mut v = (0.0, 0.0);
    for n in window.0..window.1 {
        let c = measurement_operator(p, &track.at(n).state);
        v.0 += p.eta_m.sqrt() * c[0].re * track.dt;
        v.1 += p.eta_m.sqrt() * c[3].re * track.dt;
    }
    v
}

/// Integrate one trajectory. Deterministic in `(master_seed, index)`.
pub fn simulate_trajectory(plan: &TrajectoryPlan, index: u64) -> Result<TrajectoryRecord> {
    let opts = &plan.options;
    let n_steps = opts.n_steps;
    let mut noise = WienerStream::new(opts.master_seed, index);
    let mut diag = Diagnostics::default();
    let keep = opts.keep_record;
    let mut times = Vec::new();
    let mut dws = Vec::new();
    let mut voltage = Vec::new();
    if keep {
        times = (0..=n_steps).map(|n| plan.track.time(n)).collect();
        dws.reserve(n_steps);
        voltage.reserve(n_steps);
    }
    let mut snapshots = Vec::new();
    let mut integral = 0.0;
    let mut record = |n: usize, dw: f64, v_dt: f64| {
        if keep {
            dws.push(dw);
            voltage.push(v_dt / opts.dt);
        }
        if n >= opts.window.0 && n < opts.window.1 {
            integral += v_dt;
        }
    };

    let final_lab = match opts.representation {
        Representation::Full => {
            let model = plan.full.as_ref().expect("plan holds the full model");
            let mut st = FullState::product_vacuum(&opts.initial, opts.fock, plan.track.t0);
            snapshots.push(Snapshot { step: 0, t: st.t, rho: st.qubit_marginal() });
            for n in 0..n_steps {
                let dw = noise.increment(n as u64, opts.dt);
                let (_, v_dt) = model.step(&mut st, &plan.track.step(n), dw)?;
                record(n, dw, v_dt);
                if plan.keep_snapshot(n + 1) {
                    snapshots.push(Snapshot { step: n + 1, t: st.t, rho: st.qubit_marginal() });
                }
            }
            st.qubit_marginal()
        }
        rep => {
            let frame = rep.evolution_frame();
            let mut state = QubitState::new(opts.initial, frame, plan.track.t0);
            snapshots.push(Snapshot { step: 0, t: state.t, rho: plan.output_state(&state.rho, 0)? });
            for n in 0..n_steps {
                let dw = noise.increment(n as u64, opts.dt);
                let v_dt = if opts.extras.is_empty() {
                    let rec = step_fast(&mut state.rho, &plan.coefficients[n], plan.params.eta_m, dw)?;
                    state.t = plan.track.time(n + 1);
                    if rec.clipped {
                        diag.positivity_clips += 1;
                    }
                    rec.v_dt
                } else {
                    let (next, rec) =
                        step_qubit(&state, &plan.track.step(n), &plan.params, &opts.extras, dw, &mut diag)?;
                    state = next;
                    rec.v_dt
                };
                record(n, dw, v_dt);
                if plan.keep_snapshot(n + 1) {
                    snapshots.push(Snapshot { step: n + 1, t: state.t, rho: plan.output_state(&state.rho, n + 1)? });
                }
            }
            match rep {
                Representation::Polaron => plan.output_lab(&state.rho)?,
                _ => plan.output_state(&state.rho, n_steps)?,
            }
        }
    };
    let outcome = classify_state(&final_lab, opts.threshold);
    Ok(TrajectoryRecord {
        index,
        times,
        dw: dws,
        voltage,
        snapshots,
        integrated_voltage: plan.normalized_voltage(integral),
        final_lab,
        outcome,
        diagnostics: diag,
    })
}

impl TrajectoryPlan {
    fn output_lab(&self, rho: &Mat4) -> Result<Mat4> {
        let st = &self.track.last().state;
        Ok(polaron_to_lab(&QubitState::new(*rho, Frame::Polaron, st.t), st)?.rho)
    }
}

/// Deterministic (ensemble-averaged) evolution of the plan's representation,
/// sampled at the plan's snapshot steps.
pub fn unconditioned_evolution(plan: &TrajectoryPlan) -> Result<Vec<Snapshot>> {
    let opts = &plan.options;
    if !opts.extras.is_empty() {
        return Err(Error::param("extras", "the unconditioned evolution covers the readout model only"));
    }
    let mut out = Vec::new();
    match opts.representation {
        Representation::Full => {
            let model = plan.full.as_ref().expect("plan holds the full model");
            let mut st = FullState::product_vacuum(&opts.initial, opts.fock, plan.track.t0);
            out.push(Snapshot { step: 0, t: st.t, rho: st.qubit_marginal() });
            for n in 0..opts.n_steps {
                model.step_unconditioned(&mut st, &plan.track.step(n))?;
                if plan.keep_snapshot(n + 1) {
                    out.push(Snapshot { step: n + 1, t: st.t, rho: st.qubit_marginal() });
                }
            }
        }
        rep => {
            let mut state = QubitState::new(opts.initial, rep.evolution_frame(), plan.track.t0);
            out.push(Snapshot { step: 0, t: state.t, rho: plan.output_state(&state.rho, 0)? });
            for n in 0..opts.n_steps {
                state = step_unconditioned(&state, &plan.track.step(n), &plan.params);
                if plan.keep_snapshot(n + 1) {
                    out.push(Snapshot { step: n + 1, t: state.t, rho: plan.output_state(&state.rho, n + 1)? });
                }
            }
        }
    }
    Ok(out)
}

/// Steady-state voltage separation of `|00>` and `|11>` per unit time.
pub fn steady_state_separation(p: &SystemParams, a_d: C64, b_d: C64) -> Result<f64> {
    let st = crate::cavity::adiabatic_amplitudes(p, a_d, b_d)?;
    let c = measurement_operator(p, &st);
    Ok(p.eta_m.sqrt() * (c[3].re - c[0].re).abs())
}
