//! Conditional dynamics of the qubits under continuous homodyne readout.
//!
//! Each step applies the measurement update for the record increment
//! `dY = dW + sqrt(eta_m) <c + c^dag> dt` as the operator `1 + sqrt(eta_m) c dY`
//! (left and right), then the remaining generator over `[t, t + dt]`: the
//! full generator with the monitored jump term `eta_m c rho c^dag` removed,
//! since the measurement update supplies it on average. The state is
//! renormalized at the end of the step. Dropping the normalization gives the
//! linear form of the same equation.
//!
//! `c = e^{i phi} z` with `z` the field leaving the second cavity. In the
//! reduced pictures every generator is diagonal in `|ij>`, so a step is an
//! element-wise product.

mod extras;
mod full;
mod reduced;
mod trajectory;

pub use extras::{add_relaxation, dressed_drive_hamiltonian, DressedDrive};
pub use full::{FullModel, FullState, TRUNCATION_TOLERANCE};
pub use reduced::{
    deterministic_rates, lab_rates, measurement_operator, overlap_factor, polaron_rates, polaron_to_lab, step_fast,
    step_linear, step_qubit, step_unconditioned, Extras, StepCoefficients, StepRecord,
};
pub use trajectory::{
    simulate_trajectory, steady_state_separation, unconditioned_evolution, Representation, Snapshot, TrajectoryOptions,
    TrajectoryPlan, TrajectoryRecord,
};

use nalgebra::{Cholesky, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::basis::Mat4;
use crate::{Error, Result, C64};

/// Negative eigenvalues above this are rounding and get clipped.
pub const POSITIVITY_TOLERANCE: f64 = 1e-8;
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Polaron,
    Lab,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QubitState {
    pub rho: Mat4,
    pub frame: Frame,
    pub t: f64,
}

impl QubitState {
    pub fn new(rho: Mat4, frame: Frame, t: f64) -> Self {
        QubitState { rho, frame, t }
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn element(&self, ij: usize, kl: usize) -> C64 {
        self.rho[(ij, kl)]
    }
}

/// Per-run counters of benign numerical repairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub positivity_clips: u64,
}

impl Diagnostics {
    pub fn merge(&mut self, other: &Diagnostics) {
        self.positivity_clips += other.positivity_clips;
    }
}

/// Homodyne voltage sample: `V dt = sqrt(eta_m) Re(e^{i phi} <z>) dt + dW`.
pub fn homodyne_increment(mean_rotated_field: C64, eta_m: f64, dw: f64, dt: f64) -> f64 {
    eta_m.sqrt() * mean_rotated_field.re * dt + dw
}

/// Check Hermiticity, then symmetrize and normalize.
pub fn normalize(rho: &mut Mat4, t: f64) -> Result<()> {
    let scale = crate::basis::max_abs(rho).max(1e-300);
    let skew = crate::basis::max_abs(&(*rho - rho.adjoint()));
    if skew > HERMITICITY_TOLERANCE * scale.max(1.0) {
        return Err(Error::Numerical(format!("state lost Hermiticity ({skew:e}) at t = {t} us; reduce dt")));
    }
    *rho = crate::basis::hermitian_part(rho);
    let tr = rho.trace().re;
    if !(tr > 0.0 && tr.is_finite()) {
        return Err(Error::Numerical(format!("trace collapsed to {tr} at t = {t} us; reduce dt")));
    }
    *rho /= C64::new(tr, 0.0);
    Ok(())
}

/// Accept, clip or reject a normalized state. Returns whether it was clipped.
pub fn enforce_positivity(rho: &mut Mat4, t: f64) -> Result<bool> {
    let shifted = *rho + Mat4::identity() * C64::new(1e-12, 0.0);
    if Cholesky::new(shifted).is_some() {
        return Ok(false);
    }
    let eig = SymmetricEigen::new(*rho);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -POSITIVITY_TOLERANCE {
        return Err(Error::Positivity { t, min_eig: min });
    }
    if min >= 0.0 {
        return Ok(false);
    }
    let clipped = eig.eigenvalues.map(|v| C64::new(v.max(0.0), 0.0));
    let v = &eig.eigenvectors;
    let mut out = v * Mat4::from_diagonal(&clipped) * v.adjoint();
    let tr = out.trace().re;
    out /= C64::new(tr, 0.0);
    *rho = crate::basis::hermitian_part(&out);
    Ok(true)
}

/// Smallest eigenvalue of a Hermitian 4x4 matrix.
pub fn min_eigenvalue(rho: &Mat4) -> f64 {
    SymmetricEigen::new(crate::basis::hermitian_part(rho)).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}
