//! Qubit-conditioned coherent amplitudes of the two cavities.
//!
//! Cavity 1 holds `A^(r)` when qubit 1 is in `|r>`; cavity 2 holds `B^(rs)`
//! when the qubits are in `|rs>`. They obey
//!
//! ```text
//! dA^(r)/dt  = -(kt1 + i s_r chi1) A^(r) + A_d
//! dB^(rs)/dt = -(kt2 + i s_s chi2) B^(rs) + kappa12 A^(r) + B_d
//! ```
//!
//! with `s_0 = +1`, `s_1 = -1`. Steps use the exact propagator of the
//! homogeneous part and Gauss-Legendre quadrature for the drive convolution,
//! split at pulse breakpoints.

use serde::Serialize;

use crate::basis::{levels, sz};
use crate::{Error, Result, SystemParams, C64};

const I: C64 = C64::new(0.0, 1.0);

const GL_NODES: [f64; 5] =
    [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionalCavityState {
    pub t: f64,
    /// `A^(r)` indexed by `r`.
    pub a: [C64; 2],
    /// `B^(rs)` indexed by `2 r + s`.
    pub b: [C64; 4],
}

impl ConditionalCavityState {
    pub fn vacuum(t: f64) -> Self {
        ConditionalCavityState { t, a: [C64::new(0.0, 0.0); 2], b: [C64::new(0.0, 0.0); 4] }
    }

    pub fn max_amplitude(&self) -> f64 {
        self.a.iter().chain(&self.b).fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().chain(&self.b).all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Source of the effective cavity drives.
///
/// `b_d` may depend on the instantaneous first-cavity amplitudes, as feedback
/// style compensation does.
pub trait DriveProvider {
    fn a_d(&self, t: f64) -> C64;
    fn b_d(&self, t: f64, a: &[C64; 2]) -> C64;
    /// Times where the drives are not smooth.
    fn breakpoints(&self) -> Vec<f64>;
}

/// Decay-plus-shift rate of `A^(r)`.
pub fn lambda_a(p: &SystemParams, r: usize) -> C64 {
    p.kt1() + I * (sz(r) * p.chi1)
}

/// Decay-plus-shift rate of `B^(rs)` (depends only on `s`).
pub fn lambda_b(p: &SystemParams, s: usize) -> C64 {
    p.kt2() + I * (sz(s) * p.chi2)
}

/// Steady state for constant drives.
pub fn adiabatic_amplitudes(p: &SystemParams, a_d: C64, b_d: C64) -> Result<ConditionalCavityState> {
    let mut st = ConditionalCavityState::vacuum(0.0);
    for r in 0..2 {
        let la = lambda_a(p, r);
        if la.norm() == 0.0 {
            return Err(Error::Numerical("singular steady state of cavity 1".into()));
        }
        st.a[r] = a_d / la;
        for s in 0..2 {
            let lb = lambda_b(p, s);
            if lb.norm() == 0.0 {
                return Err(Error::Numerical("singular steady state of cavity 2".into()));
            }
            st.b[2 * r + s] = (st.a[r] * p.kappa12() + b_d) / lb;
        }
    }
    Ok(st)
}

/// `(e^z - 1) / z`.
fn phi1(z: C64) -> C64 {
    if z.norm() < 1e-4 {
        C64::new(1.0, 0.0) + z * (0.5 + z * (1.0 / 6.0 + z / 24.0))
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Advance over `[t, t + h]` where the drives are smooth.
fn smooth_step<D: DriveProvider + ?Sized>(
    st: &ConditionalCavityState,
    drives: &D,
    p: &SystemParams,
    h: f64,
) -> ConditionalCavityState {
    let t0 = st.t;
    let la = [lambda_a(p, 0), lambda_a(p, 1)];
    let lb = [lambda_b(p, 0), lambda_b(p, 1)];
    let k12 = p.kappa12();

    // Forced part of A^(r) at the outer nodes and at the end point.
    let forced = |r: usize, tau: f64| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let u = 0.5 * tau * (1.0 + x);
            acc += (-la[r] * (tau - u)).exp() * drives.a_d(t0 + u) * (0.5 * tau * w);
        }
        acc
    };

    let mut out = ConditionalCavityState::vacuum(t0 + h);
    for r in 0..2 {
        out.a[r] = (-la[r] * h).exp() * st.a[r] + forced(r, h);
    }

    let mut b_src = [[C64::new(0.0, 0.0); 5]; 4];
    for (k, x) in GL_NODES.iter().enumerate() {
        let sigma = 0.5 * h * (1.0 + x);
        let f = [forced(0, sigma), forced(1, sigma)];
        let a_now = [(-la[0] * sigma).exp() * st.a[0] + f[0], (-la[1] * sigma).exp() * st.a[1] + f[1]];
        let bd = drives.b_d(t0 + sigma, &a_now);
        for q in 0..4 {
            let (r, s) = levels(q);
            b_src[q][k] = (-lb[s] * (h - sigma)).exp() * (f[r] * k12 + bd);
        }
    }
    for q in 0..4 {
        let (r, s) = levels(q);
        let decay = (-lb[s] * h).exp();
        let homogeneous_feed = decay * phi1((lb[s] - la[r]) * h) * (st.a[r] * (k12 * h));
        let conv: C64 = b_src[q].iter().zip(GL_WEIGHTS).map(|(v, w)| v * (0.5 * h * w)).sum();
        out.b[q] = decay * st.b[q] + homogeneous_feed + conv;
    }
    out
}

/// Advance the conditional amplitudes by `dt`.
pub fn step_amplitudes<D: DriveProvider + ?Sized>(
    st: &ConditionalCavityState,
    drives: &D,
    p: &SystemParams,
    dt: f64,
) -> Result<ConditionalCavityState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    let t1 = st.t + dt;
    let mut cur = *st;
    let eps = 1e-12 * dt.max(st.t.abs());
    for bp in drives.breakpoints() {
        if bp > cur.t + eps && bp < t1 - eps {
            cur = smooth_step(&cur, drives, p, bp - cur.t);
        }
    }
    let mut out = smooth_step(&cur, drives, p, t1 - cur.t);
    out.t = t1;
    if !out.is_finite() {
        return Err(Error::Numerical(format!("cavity amplitudes diverged at t = {t1}")));
    }
    Ok(out)
}

/// Diagonals of `Pi_a` and `Pi_b` over the basis `|ij>`.
pub fn pi_operators(st: &ConditionalCavityState) -> ([C64; 4], [C64; 4]) {
    let mut pa = [C64::new(0.0, 0.0); 4];
    for (q, v) in pa.iter_mut().enumerate() {
        *v = st.a[levels(q).0];
    }
    (pa, st.b)
}

/// Drive values (and derivatives) needed to differentiate the amplitudes.
#[derive(Clone, Copy, Debug, Default)]
pub struct DriveJet {
    pub a_d: C64,
    pub a_d_dot: C64,
    pub b_d: C64,
    pub b_d_dot: C64,
}

/// First or second time derivative of `Pi_a` and `Pi_b`.
pub fn pi_derivatives(
    st: &ConditionalCavityState,
    p: &SystemParams,
    jet: &DriveJet,
    order: usize,
) -> Result<([C64; 4], [C64; 4])> {
    if order == 0 || order > 2 {
        return Err(Error::param("order", "only first and second derivatives are available"));
    }
    let mut da = [C64::new(0.0, 0.0); 4];
    let mut db = [C64::new(0.0, 0.0); 4];
    for q in 0..4 {
        let (r, s) = levels(q);
        let ad = -lambda_a(p, r) * st.a[r] + jet.a_d;
        let bd = -lambda_b(p, s) * st.b[q] + st.a[r] * p.kappa12() + jet.b_d;
        if order == 1 {
            da[q] = ad;
            db[q] = bd;
        } else {
            da[q] = -lambda_a(p, r) * ad + jet.a_d_dot;
            db[q] = -lambda_b(p, s) * bd + ad * p.kappa12() + jet.b_d_dot;
        }
    }
    Ok((da, db))
}

/// Output fields `e^{i phi} (-sqrt(kappa1 eta_l) A^(i) + sqrt(kappa2) B^(ij))`.
pub fn conditional_output_fields(st: &ConditionalCavityState, p: &SystemParams) -> [C64; 4] {
    let rot = C64::from_polar(1.0, p.phi);
    let mut z = [C64::new(0.0, 0.0); 4];
    for (q, zq) in z.iter_mut().enumerate() {
        *zq = rot * (st.a[levels(q).0] * (-p.s1()) + st.b[q] * p.kappa2.sqrt());
    }
    z
}

/// Cavity state and drives at one instant.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FieldSample {
    pub state: ConditionalCavityState,
    pub a_d: C64,
    pub b_d: C64,
}

impl FieldSample {
    pub fn t(&self) -> f64 {
        self.state.t
    }
}

/// Amplitudes on a uniform grid plus the midpoints, precomputed once and
/// shared by all trajectories.
#[derive(Clone, Debug)]
pub struct FieldTrack {
    pub t0: f64,
    pub dt: f64,
    pub n_steps: usize,
    samples: Vec<FieldSample>,
}

/// The three samples a stochastic step needs.
#[derive(Clone, Copy, Debug)]
pub struct FieldStep {
    pub dt: f64,
    pub start: FieldSample,
    pub mid: FieldSample,
    pub end: FieldSample,
}

impl FieldTrack {
    pub fn build<D: DriveProvider + ?Sized>(
        drives: &D,
        p: &SystemParams,
        initial: ConditionalCavityState,
        dt: f64,
        n_steps: usize,
    ) -> Result<Self> {
        let sample =
            |st: ConditionalCavityState| FieldSample { state: st, a_d: drives.a_d(st.t), b_d: drives.b_d(st.t, &st.a) };
        let mut samples = Vec::with_capacity(2 * n_steps + 1);
        let mut cur = initial;
        samples.push(sample(cur));
        for n in 0..n_steps {
            let t_n = initial.t + n as f64 * dt;
            cur.t = t_n;
            let mid = step_amplitudes(&cur, drives, p, 0.5 * dt)?;
            let mut end = step_amplitudes(&cur, drives, p, dt)?;
            end.t = initial.t + (n + 1) as f64 * dt;
            samples.push(sample(mid));
            samples.push(sample(end));
            cur = end;
        }
        Ok(FieldTrack { t0: initial.t, dt, n_steps, samples })
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn at(&self, n: usize) -> &FieldSample {
        &self.samples[2 * n]
    }

    pub fn step(&self, n: usize) -> FieldStep {
        FieldStep {
            dt: self.dt,
            start: self.samples[2 * n],
            mid: self.samples[2 * n + 1],
            end: self.samples[2 * n + 2],
        }
    }

    pub fn last(&self) -> &FieldSample {
        self.at(self.n_steps)
    }
}
