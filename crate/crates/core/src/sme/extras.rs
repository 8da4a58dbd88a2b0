//! Qubit drive and relaxation terms.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::basis::{sigma_minus, sigma_x, sigma_z, Mat4};
use crate::sme::{Frame, QubitState};
use crate::{Error, Result, SystemParams, C64};

/// Perturbative polaron-picture qubit drive, valid when
/// `Omega |A_d| chi << kappa^3`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DressedDrive;

impl DressedDrive {
    pub fn hamiltonian(&self, p: &SystemParams, a_d: C64, b_d: C64) -> Result<(Mat4, f64)> {
        dressed_drive_hamiltonian(p, a_d, b_d)
    }
}

/// Ratio `Omega_i |A_d| chi_i / kappa_i^3`, the small parameter of the expansion.
fn guard_ratio(p: &SystemParams, a_d: C64) -> f64 {
    let r1 = p.omega1.abs() * a_d.norm() * p.chi1.abs() / p.kappa1.powi(3);
    let r2 = p.omega2.abs() * a_d.norm() * p.chi2.abs() / p.kappa2.powi(3);
    r1.max(r2)
}

/// Hermitized drive Hamiltonian and the norm of the discarded anti-Hermitian part.
pub fn dressed_drive_hamiltonian(p: &SystemParams, a_d: C64, b_d: C64) -> Result<(Mat4, f64)> {
    let ratio = guard_ratio(p, a_d);
    if ratio > 1.0 {
        return Err(Error::param("omega", format!("dressed drive outside its validity range (ratio {ratio:.3} > 1)")));
    }
    if ratio > 0.1 {
        warn!("dressed drive near the edge of its validity range (ratio {ratio:.3})");
    }
    let k1 = C64::new(0.5 * p.kappa1, p.delta1);
    let k2 = C64::new(0.5 * p.kappa2, p.delta2);
    let mu1 = 2.0 * p.chi1 / (k1 * k1 + p.chi1 * p.chi1);
    let mu2 = 2.0 * p.chi2 / (k2 * k2 + p.chi2 * p.chi2);
    let zeta1 = p.kappa12() * k1 / (k1 * k1 + p.chi1 * p.chi1);
    let zeta2 = p.kappa12() * k2 / (k2 * k2 + p.chi2 * p.chi2);
    let lambda = b_d * mu2 + a_d * mu2 * zeta1;
    let (o1, o2) = (p.omega1, p.omega2);

    let x1 = sigma_x(0);
    let x2 = sigma_x(1);
    let tilt1 = x1 * C64::new(2.0 * o1 * o1, 0.0) + sigma_z(0) * C64::new(o1 * p.chi1, 0.0);
    let tilt2 = x2 * C64::new(2.0 * o2 * o2, 0.0) + sigma_z(1) * C64::new(o2 * p.chi2, 0.0);
    let den1a = k1 * k1 - p.chi1 * p.chi1 - 4.0 * o1 * o1;
    let den1b = k2 * k2 - p.chi1 * p.chi1 - 4.0 * o1 * o1;
    let den2 = k2 * k2 - p.chi2 * p.chi2 - 4.0 * o2 * o2;
    let amu = a_d * a_d * mu1 * mu1;

    let mut h = x1 * C64::new(o1, 0.0) + x2 * C64::new(o2, 0.0);
    if o1 != 0.0 {
        h += tilt1 * (-amu / den1a + amu * zeta2 * zeta2 / den1b);
    }
    if o2 != 0.0 {
        h += tilt2 * (-2.0 * lambda * lambda / den2);
    }
    let anti = (h - h.adjoint()) * C64::new(0.5, 0.0);
    let remainder = crate::basis::max_abs(&anti);
    Ok((crate::basis::hermitian_part(&h), remainder))
}

/// Euler step of `sum_i gamma_r^i D[sigma_-^i] rho`.
pub fn add_relaxation(state: &QubitState, p: &SystemParams, dt: f64) -> Result<QubitState> {
    if state.frame != Frame::Lab {
        return Err(Error::param("frame", "relaxation is applied in the lab picture only"));
    }
    let rho = &state.rho;
    let mut out = *rho;
    for (q, rate) in [(0, p.gamma_r1), (1, p.gamma_r2)] {
        let s = sigma_minus(q);
        let sd = s.adjoint();
        let sds = sd * s;
        let d = s * rho * sd - (sds * rho + rho * sds) * C64::new(0.5, 0.0);
        out += d * C64::new(rate * dt, 0.0);
    }
    Ok(QubitState::new(out, Frame::Lab, state.t))
}
