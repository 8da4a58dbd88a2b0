//! Qubit-only conditional dynamics in the polaron and lab pictures.
//!
//! With the cavities eliminated every generator term is diagonal in the
//! basis `|ij>`, so `d rho_{q q'} / dt = R_{q q'}(t) rho_{q q'}`.
//!
//! Polaron picture (`g(x, y) = x y* - |x|^2/2 - |y|^2/2`, `q = ij`, `q' = kl`):
//!
//! ```text
//! R = -i (h_q - h_q') + c1 g(A_i, A_k) + gamma2 g(B_q, B_q') + g(z_q, z_q')
//!     - 2 gamma_d1 (1 - delta_ik) - 2 gamma_d2 (1 - delta_jl)
//! h_q = Im(A_d* A_i) + Im(B_d* B_q)
//! ```
//!
//! Lab picture, the time derivative of the polaron picture dressed by the
//! coherent-state overlaps `e^{Y}`:
//!
//! ```text
//! R = -2 i chi1 (1 - delta_ik) s_i A_k* A_i - 2 i chi2 (1 - delta_jl) s_j B_q'* B_q
//!     - 2 gamma_d1 (1 - delta_ik) - 2 gamma_d2 (1 - delta_jl)
//! ```

use crate::basis::{levels, sz, Mat4};
use crate::cavity::{conditional_output_fields, ConditionalCavityState, FieldSample, FieldStep};
use crate::sme::{add_relaxation, enforce_positivity, normalize, Diagnostics, DressedDrive, Frame, QubitState};
use crate::{Error, Result, SystemParams, C64};

const I: C64 = C64::new(0.0, 1.0);

fn g(x: C64, y: C64) -> C64 {
    x * y.conj() - 0.5 * (x.norm_sqr() + y.norm_sqr())
}

fn dephasing(p: &SystemParams, q: usize, qq: usize) -> f64 {
    let (i, j) = levels(q);
    let (k, l) = levels(qq);
    let mut r = 0.0;
    if i != k {
        r -= 2.0 * p.gamma_d1;
    }
    if j != l {
        r -= 2.0 * p.gamma_d2;
    }
    r
}

/// Unrotated output field `z_q = -sqrt(kappa1 eta_l) A_i + sqrt(kappa2) B_q`.
fn z_fields(p: &SystemParams, st: &ConditionalCavityState) -> [C64; 4] {
    let mut z = [C64::new(0.0, 0.0); 4];
    for (q, zq) in z.iter_mut().enumerate() {
        *zq = -st.a[levels(q).0] * p.s1() + st.b[q] * p.kappa2.sqrt();
    }
    z
}

/// Monitored operator `c = e^{i phi} z` as a diagonal.
pub fn measurement_operator(p: &SystemParams, st: &ConditionalCavityState) -> [C64; 4] {
    conditional_output_fields(st, p)
}

pub fn polaron_rates(p: &SystemParams, s: &FieldSample) -> Mat4 {
    let st = &s.state;
    let z = z_fields(p, st);
    let mut h = [0.0; 4];
    for (q, hq) in h.iter_mut().enumerate() {
        *hq = (s.a_d.conj() * st.a[levels(q).0]).im + (s.b_d.conj() * st.b[q]).im;
    }
    let c1 = p.c1();
    Mat4::from_fn(|q, qq| {
        let (i, _) = levels(q);
        let (k, _) = levels(qq);
        -I * (h[q] - h[qq])
            + c1 * g(st.a[i], st.a[k])
            + p.gamma2 * g(st.b[q], st.b[qq])
            + g(z[q], z[qq])
            + dephasing(p, q, qq)
    })
}

pub fn lab_rates(p: &SystemParams, s: &FieldSample) -> Mat4 {
    let st = &s.state;
    Mat4::from_fn(|q, qq| {
        let (i, j) = levels(q);
        let (k, l) = levels(qq);
        let mut r = C64::new(dephasing(p, q, qq), 0.0);
        if i != k {
            r += -2.0 * I * p.chi1 * sz(i) * st.a[k].conj() * st.a[i];
        }
        if j != l {
            r += -2.0 * I * p.chi2 * sz(j) * st.b[qq].conj() * st.b[q];
        }
        r
    })
}

fn full_rates(frame: Frame, p: &SystemParams, s: &FieldSample) -> Mat4 {
    match frame {
        Frame::Polaron => polaron_rates(p, s),
        Frame::Lab => lab_rates(p, s),
    }
}

/// Rates with the monitored jump term `eta_m z_q z_q'*` removed; the
/// measurement update restores it on average.
pub fn deterministic_rates(frame: Frame, p: &SystemParams, s: &FieldSample) -> Mat4 {
    let z = z_fields(p, &s.state);
    let r = full_rates(frame, p, s);
    Mat4::from_fn(|q, qq| r[(q, qq)] - p.eta_m * z[q] * z[qq].conj())
}

/// `exp(dt/6 (R0 + 4 Rm + R1))` element-wise.
fn simpson_propagator(r0: &Mat4, rm: &Mat4, r1: &Mat4, dt: f64) -> Mat4 {
    Mat4::from_fn(|q, qq| ((r0[(q, qq)] + 4.0 * rm[(q, qq)] + r1[(q, qq)]) * (dt / 6.0)).exp())
}

/// `exp(Y)` with `Y` the log of the coherent-state overlap factor.
pub fn overlap_factor(st: &ConditionalCavityState) -> Mat4 {
    Mat4::from_fn(|q, qq| {
        let (i, _) = levels(q);
        let (k, _) = levels(qq);
        (g(st.a[i], st.a[k]) + g(st.b[q], st.b[qq])).exp()
    })
}

/// Map a polaron-picture state to the lab picture at the same instant.
pub fn polaron_to_lab(state: &QubitState, st: &ConditionalCavityState) -> Result<QubitState> {
    if state.frame != Frame::Polaron {
        return Err(Error::param("frame", "polaron_to_lab expects a polaron-picture state"));
    }
    Ok(QubitState::new(state.rho.component_mul(&overlap_factor(st)), Frame::Lab, state.t))
}

/// Optional terms beyond the readout model.
#[derive(Clone, Debug, Default)]
pub struct Extras {
    /// Perturbative qubit drive, polaron picture only.
    pub dressed_drive: Option<DressedDrive>,
    /// Qubit relaxation, lab picture only.
    pub relaxation: bool,
}

impl Extras {
    pub fn is_empty(&self) -> bool {
        self.dressed_drive.is_none() && !self.relaxation
    }
}

/// Everything a trajectory needs for one step of the element-wise scheme;
/// identical for all trajectories sharing a drive program.
#[derive(Clone, Debug)]
pub struct StepCoefficients {
    pub dt: f64,
    pub t: f64,
    pub propagator: Mat4,
    pub c: [C64; 4],
}

impl StepCoefficients {
    pub fn new(frame: Frame, p: &SystemParams, step: &FieldStep) -> Self {
        let r0 = deterministic_rates(frame, p, &step.start);
        let rm = deterministic_rates(frame, p, &step.mid);
        let r1 = deterministic_rates(frame, p, &step.end);
        StepCoefficients {
            dt: step.dt,
            t: step.start.t(),
            propagator: simpson_propagator(&r0, &rm, &r1, step.dt),
            c: measurement_operator(p, &step.start.state),
        }
    }

    /// `<c + c^dag>` and `Re <c>` for a state.
    fn expectations(&self, rho: &Mat4) -> (f64, f64) {
        let mut re_c = 0.0;
        for q in 0..4 {
            re_c += (self.c[q] * rho[(q, q)]).re;
        }
        (2.0 * re_c, re_c)
    }

    /// Measurement update `F rho F^dag` with `F = 1 + sqrt(eta) c dY`.
    fn measure(&self, rho: &Mat4, eta_m: f64, dy: f64) -> Mat4 {
        let f: [C64; 4] = std::array::from_fn(|q| C64::new(1.0, 0.0) + self.c[q] * (eta_m.sqrt() * dy));
        Mat4::from_fn(|q, qq| rho[(q, qq)] * f[q] * f[qq].conj())
    }
}

/// Outcome of one conditional step.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepRecord {
    /// Record increment `dY = dW + sqrt(eta_m) <c + c^dag> dt`.
    pub dy: f64,
    /// `V dt` of the homodyne voltage.
    pub v_dt: f64,
    pub clipped: bool,
}

/// Linear (unnormalized) step driven by a given record increment.
pub fn step_linear(rho: &Mat4, coeff: &StepCoefficients, eta_m: f64, dy: f64) -> Mat4 {
    coeff.measure(rho, eta_m, dy).component_mul(&coeff.propagator)
}

/// Fast step from precomputed coefficients. `rho` must be normalized.
pub fn step_fast(rho: &mut Mat4, coeff: &StepCoefficients, eta_m: f64, dw: f64) -> Result<StepRecord> {
    let (mean, re_c) = coeff.expectations(rho);
    let dy = dw + eta_m.sqrt() * mean * coeff.dt;
    let v_dt = crate::sme::homodyne_increment(C64::new(re_c, 0.0), eta_m, dw, coeff.dt);
    *rho = step_linear(rho, coeff, eta_m, dy);
    let t1 = coeff.t + coeff.dt;
    normalize(rho, t1)?;
    let clipped = enforce_positivity(rho, t1)?;
    Ok(StepRecord { dy, v_dt, clipped })
}

fn commutator_term(h: &Mat4, rho: &Mat4) -> Mat4 {
    (h * rho - rho * h) * (-I)
}

/// One conditional step of a qubit-only picture.
///
/// Uses the element-wise scheme when no extras are active and a fourth-order
/// Runge-Kutta step of the deterministic part otherwise.
pub fn step_qubit(
    state: &QubitState,
    step: &FieldStep,
    p: &SystemParams,
    extras: &Extras,
    dw: f64,
    diag: &mut Diagnostics,
) -> Result<(QubitState, StepRecord)> {
    let frame = state.frame;
    if (state.t - step.start.t()).abs() > 1e-9 * step.dt.max(1.0) {
        return Err(Error::param("fields", "cavity fields and qubit state are at different times"));
    }
    if extras.relaxation && frame != Frame::Lab {
        return Err(Error::param("frame", "relaxation is applied in the lab picture only"));
    }
    if extras.dressed_drive.is_some() && frame != Frame::Polaron {
        return Err(Error::param("frame", "the dressed qubit drive lives in the polaron picture"));
    }
    let coeff = StepCoefficients::new(frame, p, step);
    let mut rho = state.rho;
    let record = if extras.is_empty() {
        step_fast(&mut rho, &coeff, p.eta_m, dw)?
    } else {
        let (mean, re_c) = coeff.expectations(&rho);
        let dy = dw + p.eta_m.sqrt() * mean * step.dt;
        let v_dt = crate::sme::homodyne_increment(C64::new(re_c, 0.0), p.eta_m, dw, step.dt);
        rho = coeff.measure(&rho, p.eta_m, dy);
        rho = rk4_general(&rho, step, p, frame, extras)?;
        if extras.relaxation {
            rho = add_relaxation(&QubitState::new(rho, frame, step.end.t()), p, step.dt)?.rho;
        }
        let t1 = step.end.t();
        normalize(&mut rho, t1)?;
        let clipped = enforce_positivity(&mut rho, t1)?;
        StepRecord { dy, v_dt, clipped }
    };
    if record.clipped {
        diag.positivity_clips += 1;
    }
    Ok((QubitState::new(rho, frame, step.end.t()), record))
}

fn rk4_general(rho: &Mat4, step: &FieldStep, p: &SystemParams, frame: Frame, extras: &Extras) -> Result<Mat4> {
    let gen = |s: &FieldSample| -> Result<(Mat4, Mat4)> {
        let r = deterministic_rates(frame, p, s);
        let h = match &extras.dressed_drive {
            Some(d) => d.hamiltonian(p, s.a_d, s.b_d)?.0,
            None => Mat4::zeros(),
        };
        Ok((r, h))
    };
    let (r0, h0) = gen(&step.start)?;
    let (rm, hm) = gen(&step.mid)?;
    let (r1, h1) = gen(&step.end)?;
    let f = |r: &Mat4, h: &Mat4, x: &Mat4| x.component_mul(r) + commutator_term(h, x);
    let dt = C64::new(step.dt, 0.0);
    let half = C64::new(0.5 * step.dt, 0.0);
    let k1 = f(&r0, &h0, rho);
    let k2 = f(&rm, &hm, &(rho + k1 * half));
    let k3 = f(&rm, &hm, &(rho + k2 * half));
    let k4 = f(&r1, &h1, &(rho + k3 * dt));
    Ok(rho + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * (dt / 6.0))
}

/// Unconditioned (ensemble-averaged) step of the same picture.
pub fn step_unconditioned(state: &QubitState, step: &FieldStep, p: &SystemParams) -> QubitState {
    let r0 = full_rates(state.frame, p, &step.start);
    let rm = full_rates(state.frame, p, &step.mid);
    let r1 = full_rates(state.frame, p, &step.end);
    let prop = simpson_propagator(&r0, &rm, &r1, step.dt);
    QubitState::new(state.rho.component_mul(&prop), state.frame, step.end.t())
}
