//! Parameter sets, plan builders and invariant checks shared by the property
//! and acceptance targets.

#![allow(dead_code)]

use std::f64::consts::TAU;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};

use ccqsim::analysis::concurrence;
use ccqsim::basis::{max_abs, Mat4};
use ccqsim::cavity::{adiabatic_amplitudes, FieldTrack};
use ccqsim::compensation::{adiabatic_compensation, CompensationMode, DriveProgram};
use ccqsim::drive::{DriveSet, Envelope};
use ccqsim::ensemble::run_plan;
use ccqsim::slh::{
    cavity_a_component, cavity_b_line_component, cavity_b_weak_component, concat, loss_component,
    random_density_matrix, series, HilbertLayout,
};
use ccqsim::sme::{
    min_eigenvalue, simulate_trajectory, step_fast, step_unconditioned, Frame, QubitState, Representation,
    StepCoefficients, TrajectoryOptions, TrajectoryPlan, POSITIVITY_TOLERANCE,
};
use ccqsim::{SystemParams, C64};

pub fn mhz(x: f64) -> f64 {
    TAU * x
}

/// Identical lossless cavities, no qubit-side decay.
pub fn ideal_setting() -> SystemParams {
    SystemParams::symmetric(mhz(1.5), mhz(0.5))
}

/// Lossy line, inefficient detection, input-port leakage.
pub fn histogram_setting() -> SystemParams {
    let mut p = SystemParams::symmetric(mhz(18.0), mhz(2.0));
    p.chi2 = mhz(1.0);
    p.kappa2 = mhz(22.0);
    p.gamma1 = p.kappa1 / 20.0;
    p.gamma2 = p.kappa2 / 20.0;
    p.eta_l = 0.9;
    p.eta_m = 0.4;
    p
}

/// Asymmetric, slow cavities where Fock truncation stays cheap.
pub fn oracle_setting() -> SystemParams {
    let mut p = SystemParams::symmetric(mhz(2.0), mhz(0.6));
    p.kappa2 = mhz(2.5);
    p.chi2 = mhz(0.4);
    p.gamma1 = p.kappa1 / 20.0;
    p.gamma2 = p.kappa2 / 20.0;
    p.eta_l = 0.9;
    p.eta_m = 0.8;
    p
}

/// Ten field decay times of the slower cavity.
pub fn ringdown(p: &SystemParams) -> f64 {
    10.0 / p.damping_min()
}

/// Plan over the pulse plus `tail`, with `dt = dt_kappa / kappa_max`.
pub fn plan_for(
    p: &SystemParams,
    pulse: Envelope,
    mode: CompensationMode,
    rep: Representation,
    dt_kappa: f64,
    tail: f64,
    stride: usize,
) -> TrajectoryPlan {
    let total = pulse.end() + tail;
    let steps = (total * p.kappa_max() / dt_kappa).ceil() as usize;
    let dt = total / steps as f64;
    let prog = DriveProgram::new(DriveSet::with_a_d(pulse), mode, p.clone()).expect("drive program");
    let mut o = TrajectoryOptions::new(rep, dt, steps);
    o.snapshot_stride = stride;
    o.master_seed = 2024;
    TrajectoryPlan::new(&prog, p, o).expect("trajectory plan")
}

pub fn hermiticity_defect(rho: &Mat4) -> f64 {
    max_abs(&(rho - rho.adjoint()))
}

/// Every stored state of one trajectory is Hermitian, normalized and positive.
pub fn check_step_invariants(plan: &TrajectoryPlan, index: u64) -> Result<(), String> {
    let rec = simulate_trajectory(plan, index).map_err(|e| e.to_string())?;
    for s in &rec.snapshots {
        let h = hermiticity_defect(&s.rho);
        let tr = (s.rho.trace() - C64::new(1.0, 0.0)).norm();
        let min = min_eigenvalue(&s.rho);
        if h > 1e-10 || tr > 1e-10 || min < -POSITIVITY_TOLERANCE {
            return Err(format!("t = {}: hermiticity {h:e}, trace error {tr:e}, min eigenvalue {min:e}", s.t));
        }
    }
    Ok(())
}

/// Density matrix from 32 reals (a complex Ginibre draw).
pub fn state_from(values: &[f64]) -> Mat4 {
    let g = Mat4::from_fn(|r, c| C64::new(values[8 * r + 2 * c], values[8 * r + 2 * c + 1]));
    let rho = g * g.adjoint();
    rho / rho.trace()
}

/// Seeded full-rank random state.
pub fn ginibre_state(seed: u64) -> Mat4 {
    let m = random_density_matrix(4, seed);
    Mat4::from_fn(|r, c| m[(r, c)])
}

/// `exp(i a) Rz(b) Ry(c) Rz(d)`.
pub fn unitary2(a: f64, b: f64, c: f64, d: f64) -> Matrix2<C64> {
    let e = |x: f64| C64::from_polar(1.0, x);
    let rz = |x: f64| Matrix2::new(e(-0.5 * x), C64::new(0.0, 0.0), C64::new(0.0, 0.0), e(0.5 * x));
    let (s, co) = (0.5 * c).sin_cos();
    let ry = Matrix2::new(C64::new(co, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(co, 0.0));
    rz(b) * ry * rz(d) * e(a)
}

/// `u1 (x) u2` in the `|ij>` basis.
pub fn local(u1: &Matrix2<C64>, u2: &Matrix2<C64>) -> Mat4 {
    Mat4::from_fn(|r, c| u1[(r / 2, c / 2)] * u2[(r % 2, c % 2)])
}

/// `|C(rho) - C(U rho U^dag)|` for a local `U`.
pub fn concurrence_shift(rho: &Mat4, u1: &Matrix2<C64>, u2: &Matrix2<C64>) -> f64 {
    let u = local(u1, u2);
    let rotated = u * rho * u.adjoint();
    (concurrence(rho).unwrap() - concurrence(&rotated).unwrap()).abs()
}

fn amplitude_track(p: &SystemParams, a_d: Envelope, b_d: Envelope, dt: f64, n: usize) -> FieldTrack {
    let drives = DriveSet { a_d: Some(a_d), b_d: Some(b_d), ..Default::default() };
    let prog = DriveProgram::new(drives, CompensationMode::None, p.clone()).unwrap();
    FieldTrack::build(&prog, p, ccqsim::cavity::ConditionalCavityState::vacuum(0.0), dt, n).unwrap()
}

fn test_pulses(amp: f64) -> (Envelope, Envelope) {
    let a = Envelope::flat_top(amp, 0.2, 0.4);
    let mut b = Envelope::flat_top(0.7 * amp, 0.15, 0.3);
    b.start = 0.1;
    b.phase = 2.0;
    (a, b)
}

/// Largest deviation of the amplitudes under drive scaling, relative to the
/// largest amplitude.
pub fn linearity_defect(p: &SystemParams, amp: f64, scale: f64) -> f64 {
    let (a, b) = test_pulses(amp);
    let dt = 0.02 / p.kappa_max();
    let n = (1.2 / dt) as usize;
    let base = amplitude_track(p, a.clone(), b.clone(), dt, n);
    let scaled = amplitude_track(p, a.scaled(scale), b.scaled(scale), dt, n);
    let mut worst: f64 = 0.0;
    let mut top: f64 = 1e-300;
    for k in 0..=n {
        let (x, y) = (base.at(k).state, scaled.at(k).state);
        for (u, v) in x.a.iter().chain(&x.b).zip(y.a.iter().chain(&y.b)) {
            worst = worst.max((u * scale - v).norm());
            top = top.max((u * scale).norm());
        }
    }
    worst / top
}

/// Largest change of the first-cavity amplitudes when everything about the
/// second cavity and its drive changes.
pub fn backaction(p: &SystemParams, amp: f64, kappa2: f64, chi2: f64, delta2: f64, b_scale: f64) -> f64 {
    let (a, b) = test_pulses(amp);
    let dt = 0.02 / p.kappa_max();
    let n = (1.2 / dt) as usize;
    let base = amplitude_track(p, a.clone(), b.clone(), dt, n);
    let mut q = p.clone();
    q.kappa2 = kappa2;
    q.chi2 = chi2;
    q.delta2 = delta2;
    let other = amplitude_track(&q, a, b.scaled(b_scale), dt, n);
    (0..=n)
        .flat_map(|k| {
            let (x, y) = (base.at(k).state, other.at(k).state);
            (0..2).map(move |r| (x.a[r] - y.a[r]).norm())
        })
        .fold(0.0, f64::max)
}

/// `(g3 < g2) < g1` against `g3 < (g2 < g1)` for three two-port parts.
pub fn series_associativity_defect(p: &SystemParams, layout: &HilbertLayout) -> f64 {
    let g1 = cavity_a_component(p, layout);
    let g2 = loss_component(p, layout.dim());
    let g3 = concat(&cavity_b_line_component(p, layout), &cavity_b_weak_component(p, layout)).unwrap();
    let left = series(&series(&g3, &g2).unwrap(), &g1).unwrap();
    let right = series(&g3, &series(&g2, &g1).unwrap()).unwrap();
    left.max_abs_diff(&right)
}

/// Nodes and weights of Gauss-Hermite quadrature for a standard normal.
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let jacobi = DMatrix::from_fn(n, n, |r, c| if r.abs_diff(c) == 1 { (r.max(c) as f64).sqrt() } else { 0.0 });
    let eig = SymmetricEigen::new(jacobi);
    (0..n).map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2))).collect()
}

/// One-step weak error of the stochastic scheme in the polaron frame under a
/// constant drive: the exact expectation of the step over the Wiener
/// increment against the unconditioned evolution over the same step.
pub fn local_weak_error(p: &SystemParams, a_d: f64, dt: f64, rho: &Mat4) -> f64 {
    let a = C64::new(a_d, 0.0);
    let b = adiabatic_compensation(p, a).unwrap();
    let mut a_env = Envelope::square(a_d, 0.0, 10.0);
    a_env.phase = 0.0;
    let mut b_env = Envelope::square(b.norm(), 0.0, 10.0);
    b_env.phase = b.arg();
    let drives = DriveSet { a_d: Some(a_env), b_d: Some(b_env), ..Default::default() };
    let prog = DriveProgram::new(drives, CompensationMode::None, p.clone()).unwrap();
    let mut init = adiabatic_amplitudes(p, a, b).unwrap();
    init.t = 1.0;
    let track = FieldTrack::build(&prog, p, init, dt, 1).unwrap();
    let step = track.step(0);
    let coeff = StepCoefficients::new(Frame::Polaron, p, &step);
    let exact = step_unconditioned(&QubitState::new(*rho, Frame::Polaron, 1.0), &step, p).rho;
    let mut mean = Mat4::zeros();
    for (x, w) in gauss_hermite(60) {
        let mut r = *rho;
        step_fast(&mut r, &coeff, p.eta_m, x * dt.sqrt()).unwrap();
        mean += r * C64::new(w, 0.0);
    }
    max_abs(&(mean - exact))
}

/// Per-trajectory results are identical for every worker count.
pub fn worker_count_invariant(plan: &TrajectoryPlan, n: usize, workers: &[usize]) -> Result<(), String> {
    let reference = run_plan(plan, n, 1, "");
    for &w in workers {
        let run = run_plan(plan, n, w, "");
        if run.results != reference.results {
            return Err(format!("{w} workers changed the results"));
        }
        if !run.manifest.ranges_partition() {
            return Err(format!("{w} workers: ranges do not tile the ensemble"));
        }
    }
    Ok(())
}
