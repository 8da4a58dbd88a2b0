use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Physical parameters in angular units (rad/us) and microseconds.
///
/// Index 1 refers to the first (upstream) cavity and qubit, index 2 to the
/// second one. Config files carry frequencies divided by 2 pi; the conversion
/// happens once, when a config is loaded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub chi1: f64,
    pub chi2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Transmission efficiency of the line between the cavities.
    pub eta_l: f64,
    /// Homodyne detection efficiency.
    pub eta_m: f64,
    /// Homodyne local oscillator phase.
    pub phi: f64,
    pub gamma_d1: f64,
    pub gamma_d2: f64,
    pub gamma_r1: f64,
    pub gamma_r2: f64,
    /// Direct qubit drive amplitudes.
    pub omega1: f64,
    pub omega2: f64,
}

impl SystemParams {
    /// Symmetric, lossless setting with equal cavities and qubits.
    pub fn symmetric(kappa: f64, chi: f64) -> Self {
        SystemParams {
            chi1: chi,
            chi2: chi,
            kappa1: kappa,
            kappa2: kappa,
            gamma1: 0.0,
            gamma2: 0.0,
            delta1: 0.0,
            delta2: 0.0,
            eta_l: 1.0,
            eta_m: 1.0,
            phi: std::f64::consts::FRAC_PI_2,
            gamma_d1: 0.0,
            gamma_d2: 0.0,
            gamma_r1: 0.0,
            gamma_r2: 0.0,
            omega1: 0.0,
            omega2: 0.0,
        }
    }

    /// Complex decay rate `kappa/2 + gamma/2 + i Delta` of the first cavity.
    pub fn kt1(&self) -> C64 {
        C64::new(0.5 * (self.kappa1 + self.gamma1), self.delta1)
    }

    pub fn kt2(&self) -> C64 {
        C64::new(0.5 * (self.kappa2 + self.gamma2), self.delta2)
    }

    /// Cascade coupling `sqrt(kappa1 kappa2 eta_l)`.
    pub fn kappa12(&self) -> f64 {
        (self.kappa1 * self.kappa2 * self.eta_l).sqrt()
    }

    /// Amplitude of the first cavity's field reaching the detector port.
    pub fn s1(&self) -> f64 {
        (self.kappa1 * self.eta_l).sqrt()
    }

    /// Rate of the unmonitored leakage of cavity 1 (line loss plus internal loss).
    pub fn c1(&self) -> f64 {
        self.kappa1 * (1.0 - self.eta_l) + self.gamma1
    }

    /// Largest cavity rate, used for step-size bounds.
    pub fn kappa_max(&self) -> f64 {
        (self.kappa1 + self.gamma1).max(self.kappa2 + self.gamma2)
    }

    /// Smallest cavity field damping rate.
    pub fn damping_min(&self) -> f64 {
        self.kt1().re.min(self.kt2().re)
    }

    pub fn with_eta_l(mut self, eta_l: f64) -> Self {
        self.eta_l = eta_l;
        self
    }

    pub fn with_eta_m(mut self, eta_m: f64) -> Self {
        self.eta_m = eta_m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("chi1", self.chi1),
            ("chi2", self.chi2),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("eta_l", self.eta_l),
            ("eta_m", self.eta_m),
            ("phi", self.phi),
            ("gamma_d1", self.gamma_d1),
            ("gamma_d2", self.gamma_d2),
            ("gamma_r1", self.gamma_r1),
            ("gamma_r2", self.gamma_r2),
            ("omega1", self.omega1),
            ("omega2", self.omega2),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        for (name, v) in [
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma_d1", self.gamma_d1),
            ("gamma_d2", self.gamma_d2),
            ("gamma_r1", self.gamma_r1),
            ("gamma_r2", self.gamma_r2),
        ] {
            if v < 0.0 {
                return Err(Error::param(name, format!("rate must be non-negative, got {v}")));
            }
        }
        if self.kappa1 <= 0.0 {
            return Err(Error::param("kappa1", "must be positive"));
        }
        if self.kappa2 <= 0.0 {
            return Err(Error::param("kappa2", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.eta_l) {
            return Err(Error::param("eta_l", format!("must lie in [0, 1], got {}", self.eta_l)));
        }
        if !(0.0..=1.0).contains(&self.eta_m) {
            return Err(Error::param("eta_m", format!("must lie in [0, 1], got {}", self.eta_m)));
        }
        Ok(())
    }
}

/// Line transmission for a loss given in dB.
pub fn eta_from_db(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}
