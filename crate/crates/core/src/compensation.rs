//! Drives of cavity 2 that hide odd-parity information from the output field.
//!
//! The output is blind to the odd-parity subspace when
//!
//! ```text
//! R = -sqrt(kappa1 eta_l) (A^(0) - A^(1)) + sqrt(kappa2) (B^(01) - B^(10)) = 0.
//! ```
//!
//! Four prescriptions are offered: the steady-state condition, its
//! bad-cavity limit, the symmetric lossless shortcut `B_d = -A_d`, and a
//! time-local drive that keeps `R` at zero through transients.

use serde::{Deserialize, Serialize};

use crate::cavity::{lambda_a, ConditionalCavityState, DriveProvider};
use crate::drive::DriveSet;
use crate::{Error, Result, SystemParams, C64};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompensationMode {
    /// `B_d` comes from the configured envelopes alone.
    None,
    Adiabatic,
    BadCavity,
    Ideal,
    Dynamic,
    /// Cancel the residual by retuning cavity 1 instead of driving cavity 2.
    Detuning,
}

impl CompensationMode {
    pub fn name(&self) -> &'static str {
        match self {
            CompensationMode::None => "none",
            CompensationMode::Adiabatic => "adiabatic",
            CompensationMode::BadCavity => "bad_cavity",
            CompensationMode::Ideal => "ideal",
            CompensationMode::Dynamic => "dynamic",
            CompensationMode::Detuning => "detuning",
        }
    }
}

fn need_chi2(p: &SystemParams) -> Result<()> {
    if p.chi2 == 0.0 {
        return Err(Error::param("chi2", "compensation needs a non-zero dispersive shift on qubit 2"));
    }
    Ok(())
}

/// Indistinguishability residual of the current amplitudes.
pub fn residual(p: &SystemParams, st: &ConditionalCavityState) -> C64 {
    -(st.a[0] - st.a[1]) * p.s1() + (st.b[1] - st.b[2]) * p.kappa2.sqrt()
}

/// Residual reached in steady state under constant drives.
pub fn adiabatic_residual(p: &SystemParams, a_d: C64, b_d: C64) -> Result<C64> {
    Ok(residual(p, &crate::cavity::adiabatic_amplitudes(p, a_d, b_d)?))
}

/// Steady-state compensating drive.
pub fn adiabatic_compensation(p: &SystemParams, a_d: C64) -> Result<C64> {
    need_chi2(p)?;
    let (k1, k2) = (p.kt1(), p.kt2());
    let d1 = k1 * k1 + p.chi1 * p.chi1;
    let d2 = k2 * k2 + p.chi2 * p.chi2;
    let bracket = (k2 * p.chi1 - k1 * p.chi2) - d2 * p.chi1 / p.kappa2;
    Ok(a_d * p.kappa12() * bracket / (d1 * p.chi2))
}

/// Large-`kappa` limit of [`adiabatic_compensation`] (`chi^2` dropped
/// against `kt^2`).
pub fn bad_cavity_compensation(p: &SystemParams, a_d: C64) -> Result<C64> {
    need_chi2(p)?;
    let (k1, k2) = (p.kt1(), p.kt2());
    let bracket = k2 * p.chi1 * (1.0 - k2 / p.kappa2) - k1 * p.chi2;
    Ok(a_d * p.kappa12() * bracket / (k1 * k1 * p.chi2))
}

/// Symmetric, lossless shortcut.
pub fn ideal_compensation(a_d: C64) -> C64 {
    -a_d
}

/// Trace against `|01><01| - |10><10|`.
fn odd_trace(x: &[C64; 4]) -> C64 {
    x[1] - x[2]
}

/// Steady-state value of `Pi_a` for drive `a_d`.
fn pi_a_adiabatic(p: &SystemParams, a_d: C64) -> [C64; 4] {
    let a = [a_d / lambda_a(p, 0), a_d / lambda_a(p, 1)];
    [a[0], a[0], a[1], a[1]]
}

fn pi_a(a: &[C64; 2]) -> [C64; 4] {
    [a[0], a[0], a[1], a[1]]
}

/// `Pi_a` evolves under `-(kt1 + i chi1 sz1) Pi_a + A_d`; each entry keeps its own rate.
fn rate_a(p: &SystemParams) -> [C64; 4] {
    let (l0, l1) = (lambda_a(p, 0), lambda_a(p, 1));
    [l0, l0, l1, l1]
}

fn dynamic_formula(
    p: &SystemParams,
    a_d_like: C64,
    d_pi: &[C64; 4],
    pi_dot: &[C64; 4],
    pi_ddot: &[C64; 4],
) -> Result<C64> {
    let k2 = p.kt2();
    let d2 = k2 * k2 + p.chi2 * p.chi2;
    let sz2 = [1.0, -1.0, 1.0, -1.0];
    let mut x = [C64::new(0.0, 0.0); 4];
    for q in 0..4 {
        x[q] = (k2 - I * (p.chi2 * sz2[q]) - d2 / p.kappa2) * d_pi[q] + (1.0 - 2.0 * k2 / p.kappa2) * pi_dot[q]
            - pi_ddot[q] / p.kappa2;
    }
    Ok(adiabatic_compensation(p, a_d_like)? + I * (p.kappa12() / (2.0 * p.chi2)) * odd_trace(&x))
}

/// Drive that keeps the residual at zero while the fields are out of steady
/// state. Needs `dA_d/dt`.
pub fn dynamic_compensation(p: &SystemParams, a_d: C64, a_d_dot: C64, a: &[C64; 2]) -> Result<C64> {
    need_chi2(p)?;
    let lam = rate_a(p);
    let pa = pi_a(a);
    let ad = pi_a_adiabatic(p, a_d);
    let mut d_pi = [C64::new(0.0, 0.0); 4];
    let mut dot = [C64::new(0.0, 0.0); 4];
    let mut ddot = [C64::new(0.0, 0.0); 4];
    for q in 0..4 {
        d_pi[q] = pa[q] - ad[q];
        dot[q] = -lam[q] * pa[q] + a_d;
        ddot[q] = -lam[q] * dot[q] + a_d_dot;
    }
    dynamic_formula(p, a_d, &d_pi, &dot, &ddot)
}

/// Time derivative of [`dynamic_compensation`] along the exact evolution.
pub fn dynamic_compensation_rate(p: &SystemParams, a_d: C64, a_d_dot: C64, a_d_ddot: C64, a: &[C64; 2]) -> Result<C64> {
    need_chi2(p)?;
    let lam = rate_a(p);
    let pa = pi_a(a);
    let ad_dot = pi_a_adiabatic(p, a_d_dot);
    let mut d_pi = [C64::new(0.0, 0.0); 4];
    let mut ddot = [C64::new(0.0, 0.0); 4];
    let mut dddot = [C64::new(0.0, 0.0); 4];
    for q in 0..4 {
        let dot = -lam[q] * pa[q] + a_d;
        d_pi[q] = dot - ad_dot[q];
        ddot[q] = -lam[q] * dot + a_d_dot;
        dddot[q] = -lam[q] * ddot[q] + a_d_ddot;
    }
    dynamic_formula(p, a_d_dot, &d_pi, &ddot, &dddot)
}

/// Detuning of cavity 1 that zeroes the measured quadrature of the
/// steady-state residual, for fixed drives. Searched in `[lo, hi]`.
pub fn detuning_compensation(p: &SystemParams, a_d: C64, b_d: C64, lo: f64, hi: f64) -> Result<f64> {
    let rot = C64::from_polar(1.0, p.phi);
    let f = |delta1: f64| -> Result<f64> {
        let q = SystemParams { delta1, ..p.clone() };
        Ok((rot * adiabatic_residual(&q, a_d, b_d)?).re)
    };
    let n = 2000;
    let mut best: Option<(f64, f64)> = None;
    let mut x0 = lo;
    let mut f0 = f(x0)?;
    for k in 1..=n {
        let x1 = lo + (hi - lo) * k as f64 / n as f64;
        let f1 = f(x1)?;
        if f0 == 0.0 || f0.signum() != f1.signum() {
            let closer = best.map_or(true, |(a, b)| x0.abs().min(x1.abs()) < a.abs().min(b.abs()));
            if closer {
                best = Some((x0, x1));
            }
        }
        x0 = x1;
        f0 = f1;
    }
    let (mut a, mut b) = best
        .ok_or_else(|| Error::Numerical("no detuning in the search window cancels the residual quadrature".into()))?;
    let mut fa = f(a)?;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 || (b - a).abs() < 1e-12 * (1.0 + m.abs()) {
            return Ok(m);
        }
        if fa.signum() == fm.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Configured envelopes combined with a compensation prescription.
#[derive(Clone, Debug)]
pub struct DriveProgram {
    pub drives: DriveSet,
    pub mode: CompensationMode,
    pub params: SystemParams,
    breakpoints: Vec<f64>,
}

impl DriveProgram {
    pub fn new(drives: DriveSet, mode: CompensationMode, params: SystemParams) -> Result<Self> {
        drives.validate()?;
        params.validate()?;
        match mode {
            CompensationMode::Adiabatic | CompensationMode::BadCavity | CompensationMode::Dynamic => {
                need_chi2(&params)?
            }
            _ => {}
        }
        if mode == CompensationMode::Dynamic && !drives.a_d_envelopes_differentiable() {
            return Err(Error::param(
                "compensation.mode",
                "dynamic compensation needs differentiable (flat_top_sin2 with ramp > 0) drives",
            ));
        }
        let breakpoints = drives.breakpoints();
        Ok(DriveProgram { drives, mode, params, breakpoints })
    }

    pub fn a_d_dot(&self, t: f64) -> C64 {
        self.drives.a_d(&self.params, t, 1)
    }

    /// `dB_d/dt`, given the first-cavity amplitudes.
    pub fn b_d_dot(&self, t: f64, a: &[C64; 2]) -> Result<C64> {
        let p = &self.params;
        let a_dot = self.drives.a_d(p, t, 1);
        match self.mode {
            CompensationMode::None | CompensationMode::Detuning => Ok(self.drives.b_d(p, t, 1)),
            CompensationMode::Adiabatic => adiabatic_compensation(p, a_dot),
            CompensationMode::BadCavity => bad_cavity_compensation(p, a_dot),
            CompensationMode::Ideal => Ok(ideal_compensation(a_dot)),
            CompensationMode::Dynamic => {
                let a_d = self.drives.a_d(p, t, 0);
                let a_ddot = self.drives.a_d(p, t, 2);
                dynamic_compensation_rate(p, a_d, a_dot, a_ddot, a)
            }
        }
    }
}

impl DriveProvider for DriveProgram {
    fn a_d(&self, t: f64) -> C64 {
        self.drives.a_d(&self.params, t, 0)
    }

    fn b_d(&self, t: f64, a: &[C64; 2]) -> C64 {
        let p = &self.params;
        let a_d = self.drives.a_d(p, t, 0);
        // Parameters were validated in `new`, so the prescriptions cannot fail.
        let r = match self.mode {
            CompensationMode::None | CompensationMode::Detuning => Ok(self.drives.b_d(p, t, 0)),
            CompensationMode::Adiabatic => adiabatic_compensation(p, a_d),
            CompensationMode::BadCavity => bad_cavity_compensation(p, a_d),
            CompensationMode::Ideal => Ok(ideal_compensation(a_d)),
            CompensationMode::Dynamic => dynamic_compensation(p, a_d, self.a_d_dot(t), a),
        };
        r.unwrap_or(C64::new(f64::NAN, f64::NAN))
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::adiabatic_amplitudes;

    fn mhz(x: f64) -> f64 {
        std::f64::consts::TAU * x
    }

    fn lossy() -> SystemParams {
        SystemParams {
            chi1: mhz(1.2),
            chi2: mhz(1.0),
            kappa1: mhz(18.0),
            kappa2: mhz(16.0),
            gamma1: mhz(0.9),
            gamma2: mhz(0.8),
            eta_l: 0.9,
            ..SystemParams::symmetric(1.0, 1.0)
        }
    }

    #[test]
    fn adiabatic_drive_zeroes_steady_residual() {
        let p = SystemParams { delta1: 0.7, delta2: -1.1, ..lossy() };
        let a_d = C64::new(mhz(3.0), 0.4);
        let b_d = adiabatic_compensation(&p, a_d).unwrap();
        let r = adiabatic_residual(&p, a_d, b_d).unwrap();
        let scale = adiabatic_amplitudes(&p, a_d, b_d).unwrap().max_amplitude();
        assert!(r.norm() < 1e-12 * scale * p.kappa1.sqrt(), "{r}");
    }

    #[test]
    fn ideal_drive_matches_adiabatic_in_symmetric_case() {
        let p = SystemParams::symmetric(mhz(1.5), mhz(0.5));
        let a_d = C64::new(1.3, -0.2);
        let b = adiabatic_compensation(&p, a_d).unwrap();
        assert!((b - ideal_compensation(a_d)).norm() < 1e-12);
    }

    #[test]
    fn bad_cavity_drive_approaches_adiabatic() {
        let chi = mhz(0.4);
        let p = SystemParams {
            chi1: chi,
            chi2: 0.8 * chi,
            kappa1: 50.0 * chi,
            kappa2: 45.0 * chi,
            eta_l: 0.9,
            ..SystemParams::symmetric(1.0, 1.0)
        };
        let a_d = C64::new(2.0, 0.0);
        let exact = adiabatic_compensation(&p, a_d).unwrap();
        let approx = bad_cavity_compensation(&p, a_d).unwrap();
        assert!((exact - approx).norm() < 0.01 * exact.norm());
    }

    #[test]
    fn chi2_zero_is_rejected() {
        let p = SystemParams { chi2: 0.0, ..lossy() };
        assert!(adiabatic_compensation(&p, C64::new(1.0, 0.0)).is_err());
        assert!(DriveProgram::new(DriveSet::default(), CompensationMode::Dynamic, p).is_err());
    }

    #[test]
    fn square_pulse_rejected_for_dynamic_mode() {
        let drives = DriveSet::with_a_d(crate::drive::Envelope::square(1.0, 0.0, 1.0));
        let err = DriveProgram::new(drives, CompensationMode::Dynamic, lossy());
        assert!(err.is_err());
    }

    #[test]
    fn dynamic_drive_reduces_to_adiabatic_in_steady_state() {
        let p = lossy();
        let a_d = C64::new(mhz(2.0), 0.0);
        let b_ad = adiabatic_compensation(&p, a_d).unwrap();
        let st = adiabatic_amplitudes(&p, a_d, b_ad).unwrap();
        let b_dyn = dynamic_compensation(&p, a_d, C64::new(0.0, 0.0), &st.a).unwrap();
        assert!((b_dyn - b_ad).norm() < 1e-10 * b_ad.norm());
    }

    #[test]
    fn detuning_root_cancels_quadrature() {
        let p = SystemParams { eta_l: 0.9, ..SystemParams::symmetric(mhz(2.0), mhz(0.5)) };
        let a_d = C64::new(mhz(1.0), 0.0);
        // A drive on cavity 2 that compensates exactly at some detuning.
        let tuned = SystemParams { delta1: 0.7 * p.kappa1, ..p.clone() };
        let b_d = adiabatic_compensation(&tuned, a_d).unwrap();
        let d1 = detuning_compensation(&p, a_d, b_d, -5.0 * p.kappa1, 5.0 * p.kappa1).unwrap();
        let q = SystemParams { delta1: d1, ..p.clone() };
        let r = C64::from_polar(1.0, p.phi) * adiabatic_residual(&q, a_d, b_d).unwrap();
        assert!(r.re.abs() < 1e-9 * a_d.norm(), "{r}");
    }

    #[test]
    fn detuning_without_cavity_two_drive_has_no_root() {
        let p = SystemParams { eta_l: 0.9, ..SystemParams::symmetric(mhz(2.0), mhz(0.5)) };
        let a_d = C64::new(mhz(1.0), 0.0);
        let r = detuning_compensation(&p, a_d, C64::new(0.0, 0.0), -5.0 * p.kappa1, 5.0 * p.kappa1);
        assert!(matches!(r, Err(Error::Numerical(_))));
    }
}
