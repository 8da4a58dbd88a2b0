//! Entanglement measures and trajectory statistics.

use nalgebra::{Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::basis::{hermitian_part, Mat4};
use crate::sme::POSITIVITY_TOLERANCE;
use crate::{Error, Result, C64};

/// Final-state classification of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeLabel {
    /// `|00>`
    Zero,
    /// `(|01> + |10>)/sqrt2`
    OneSym,
    /// `(|01> - |10>)/sqrt2`
    OneAntisym,
    /// `|11>`
    Two,
    Unresolved,
}

impl OutcomeLabel {
    pub const ALL: [OutcomeLabel; 5] = [
        OutcomeLabel::Zero,
        OutcomeLabel::OneSym,
        OutcomeLabel::OneAntisym,
        OutcomeLabel::Two,
        OutcomeLabel::Unresolved,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OutcomeLabel::Zero => "zero",
            OutcomeLabel::OneSym => "one_sym",
            OutcomeLabel::OneAntisym => "one_antisym",
            OutcomeLabel::Two => "two",
            OutcomeLabel::Unresolved => "unresolved",
        }
    }

    pub fn index(&self) -> usize {
        OutcomeLabel::ALL.iter().position(|l| l == self).unwrap()
    }

    pub fn is_single_excitation(&self) -> bool {
        matches!(self, OutcomeLabel::OneSym | OutcomeLabel::OneAntisym)
    }
}

/// Populations of `|00>, Psi+, Psi-, |11>`.
pub fn outcome_populations(rho: &Mat4) -> [f64; 4] {
    let sym = 0.5 * (rho[(1, 1)].re + rho[(2, 2)].re) + rho[(1, 2)].re;
    let anti = 0.5 * (rho[(1, 1)].re + rho[(2, 2)].re) - rho[(1, 2)].re;
    [rho[(0, 0)].re, sym, anti, rho[(3, 3)].re]
}

/// Argmax of the four outcome populations if it reaches `threshold`.
pub fn classify_state(rho: &Mat4, threshold: f64) -> OutcomeLabel {
    let pops = outcome_populations(rho);
    let (best, &pop) = pops.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    if pop < threshold {
        return OutcomeLabel::Unresolved;
    }
    OutcomeLabel::ALL[best]
}

fn sigma_yy() -> Mat4 {
    // sigma_y (x) sigma_y in the |ij> basis.
    let mut m = Mat4::zeros();
    m[(0, 3)] = C64::new(-1.0, 0.0);
    m[(3, 0)] = C64::new(-1.0, 0.0);
    m[(1, 2)] = C64::new(1.0, 0.0);
    m[(2, 1)] = C64::new(1.0, 0.0);
    m
}

/// Square root of a positive semidefinite Hermitian matrix.
fn psd_sqrt(rho: &Mat4) -> Mat4 {
    let eig = SymmetricEigen::new(hermitian_part(rho));
    let d = eig.eigenvalues.map(|v| C64::new(v.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * Mat4::from_diagonal(&d) * eig.eigenvectors.adjoint()
}

/// Wootters concurrence.
pub fn concurrence(rho: &Mat4) -> Result<f64> {
    let h = hermitian_part(rho);
    let tr = h.trace().re;
    if (tr - 1.0).abs() > 1e-8 {
        return Err(Error::param("rho", format!("concurrence needs a normalized state (trace {tr})")));
    }
    let min = crate::sme::min_eigenvalue(&h);
    if min < -POSITIVITY_TOLERANCE {
        return Err(Error::Positivity { t: f64::NAN, min_eig: min });
    }
    let yy = sigma_yy();
    let tilde = yy * h.conjugate() * yy;
    let s = psd_sqrt(&h);
    let r: Matrix4<C64> = hermitian_part(&(s * tilde * s));
    let mut lam: Vec<f64> = SymmetricEigen::new(r).eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect();
    lam.sort_by(|a, b| b.total_cmp(a));
    Ok((lam[0] - lam[1] - lam[2] - lam[3]).clamp(0.0, 1.0))
}

/// Coherence visibility `2 |rho_0110| / (rho_0101 + rho_1010)`.
/// `rho_0101 + rho_1010`.
pub fn single_excitation_population(rho: &Mat4) -> f64 {
    rho[(1, 1)].re + rho[(2, 2)].re
}

pub fn single_excitation_visibility(rho: &Mat4) -> f64 {
    let pop = rho[(1, 1)].re + rho[(2, 2)].re;
    if pop <= 0.0 {
        return 0.0;
    }
    2.0 * rho[(1, 2)].norm() / pop
}

/// Uniform bins over `[lo, hi)`; values outside land in the edge bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bins {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Bins {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(hi > lo) || count == 0 {
            return Err(Error::param("histogram.bins", "need hi > lo and at least one bin"));
        }
        Ok(Bins { lo, hi, count })
    }

    pub fn index(&self, x: f64) -> usize {
        let f = (x - self.lo) / (self.hi - self.lo) * self.count as f64;
        (f.floor().max(0.0) as usize).min(self.count - 1)
    }

    pub fn center(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * (self.hi - self.lo) / self.count as f64
    }
}

/// Outcome counts per voltage bin for one pulse width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoltageHistogram {
    pub width_us: f64,
    pub bins: Bins,
    /// `counts[bin][outcome index]`.
    pub counts: Vec<[u64; 5]>,
}

impl VoltageHistogram {
    pub fn build(width_us: f64, bins: Bins, samples: &[(f64, OutcomeLabel)]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::param("ensemble", "histogram of an empty ensemble"));
        }
        let mut counts = vec![[0u64; 5]; bins.count];
        for &(v, label) in samples {
            counts[bins.index(v)][label.index()] += 1;
        }
        Ok(VoltageHistogram { width_us, bins, counts })
    }

    /// Counts per outcome summed over voltage.
    pub fn marginal(&self) -> [u64; 5] {
        let mut m = [0u64; 5];
        for row in &self.counts {
            for (a, b) in m.iter_mut().zip(row) {
                *a += b;
            }
        }
        m
    }

    /// Outcome fractions within each voltage bin (zeros for empty bins).
    pub fn conditional_slice(&self) -> Vec<[f64; 5]> {
        self.counts
            .iter()
            .map(|row| {
                let n: u64 = row.iter().sum();
                let mut out = [0.0; 5];
                if n > 0 {
                    for (o, c) in out.iter_mut().zip(row) {
                        *o = *c as f64 / n as f64;
                    }
                }
                out
            })
            .collect()
    }
}

/// Mean of `|rho_{q q'}(t)|` over the selected snapshot series.
pub fn coherence_trace<'a>(series: impl IntoIterator<Item = &'a [Mat4]>, element: (usize, usize)) -> Result<Vec<f64>> {
    let mut acc: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for s in series {
        if n == 0 {
            acc = vec![0.0; s.len()];
        } else if s.len() != acc.len() {
            return Err(Error::Dimension("snapshot series have different lengths".into()));
        }
        for (a, rho) in acc.iter_mut().zip(s) {
            *a += rho[element].norm();
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::param("selection", "coherence trace of an empty selection"));
    }
    Ok(acc.into_iter().map(|a| a / n as f64).collect())
}
