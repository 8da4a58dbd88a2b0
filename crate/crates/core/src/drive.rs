//! Pulse envelopes and the port drives of the network.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, SystemParams, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Square,
    FlatTopSin2,
}

/// A complex pulse `amplitude * exp(i phase) * f(t)`.
///
/// `flat_top_sin2` rises as `sin^2` over `ramp`, holds for `hold` and falls
/// symmetrically. `square` is on during `[start, start + hold)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub shape: Shape,
    pub amplitude: f64,
    pub ramp: f64,
    pub hold: f64,
    pub start: f64,
    pub phase: f64,
}

impl Envelope {
    pub fn square(amplitude: f64, start: f64, hold: f64) -> Self {
        Envelope { shape: Shape::Square, amplitude, ramp: 0.0, hold, start, phase: 0.0 }
    }

    pub fn flat_top(amplitude: f64, ramp: f64, hold: f64) -> Self {
        Envelope { shape: Shape::FlatTopSin2, amplitude, ramp, hold, start: 0.0, phase: 0.0 }
    }

    /// Flat-top pulse of total duration `width`, keeping `ramp` when it fits.
    pub fn flat_top_width(amplitude: f64, ramp: f64, width: f64) -> Self {
        let ramp = ramp.min(0.5 * width);
        Envelope::flat_top(amplitude, ramp, width - 2.0 * ramp)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Envelope { amplitude: self.amplitude * factor, ..self.clone() }
    }

    pub fn end(&self) -> f64 {
        match self.shape {
            Shape::Square => self.start + self.hold,
            Shape::FlatTopSin2 => self.start + 2.0 * self.ramp + self.hold,
        }
    }

    pub fn is_differentiable(&self) -> bool {
        self.shape == Shape::FlatTopSin2 && self.ramp > 0.0
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self.shape {
            Shape::Square => vec![self.start, self.end()],
            Shape::FlatTopSin2 => {
                vec![self.start, self.start + self.ramp, self.start + self.ramp + self.hold, self.end()]
            }
        }
    }

    fn carrier(&self) -> C64 {
        C64::from_polar(self.amplitude, self.phase)
    }

    /// Real profile and its first two time derivatives.
    fn profile(&self, t: f64) -> [f64; 3] {
        let u = t - self.start;
        match self.shape {
            Shape::Square => {
                if u >= 0.0 && u < self.hold {
                    [1.0, 0.0, 0.0]
                } else {
                    [0.0; 3]
                }
            }
            Shape::FlatTopSin2 => {
                let r = self.ramp;
                let total = 2.0 * r + self.hold;
                if u <= 0.0 || u >= total {
                    return [0.0; 3];
                }
                let rising = |v: f64| {
                    let w = PI / r;
                    [(0.5 * w * v).sin().powi(2), 0.5 * w * (w * v).sin(), 0.5 * w * w * (w * v).cos()]
                };
                if u < r {
                    rising(u)
                } else if u <= r + self.hold {
                    [1.0, 0.0, 0.0]
                } else {
                    let [f, d1, d2] = rising(total - u);
                    [f, -d1, d2]
                }
            }
        }
    }

    pub fn value(&self, t: f64) -> C64 {
        self.carrier() * self.profile(t)[0]
    }

    pub fn derivative(&self, t: f64) -> C64 {
        self.carrier() * self.profile(t)[1]
    }

    pub fn second_derivative(&self, t: f64) -> C64 {
        self.carrier() * self.profile(t)[2]
    }
}

/// Drives applied to the network.
///
/// `a_d` and `b_d` are the effective cavity drives directly; `probe`,
/// `a_bar` and `b_bar` are the raw port inputs that add to them through the
/// cavity couplings.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DriveSet {
    pub a_d: Option<Envelope>,
    pub b_d: Option<Envelope>,
    pub probe: Option<Envelope>,
    pub a_bar: Option<Envelope>,
    pub b_bar: Option<Envelope>,
}

fn eval(env: &Option<Envelope>, t: f64, order: usize) -> C64 {
    match env {
        None => C64::new(0.0, 0.0),
        Some(e) => match order {
            0 => e.value(t),
            1 => e.derivative(t),
            _ => e.second_derivative(t),
        },
    }
}

impl DriveSet {
    pub fn with_a_d(env: Envelope) -> Self {
        DriveSet { a_d: Some(env), ..Default::default() }
    }

    fn envelopes(&self) -> impl Iterator<Item = &Envelope> {
        [&self.a_d, &self.b_d, &self.probe, &self.a_bar, &self.b_bar].into_iter().flatten()
    }

    /// Effective drive of cavity 1 (or its `order`-th derivative).
    pub fn a_d(&self, p: &SystemParams, t: f64, order: usize) -> C64 {
        eval(&self.a_d, t, order)
            + eval(&self.a_bar, t, order) * p.gamma1.sqrt()
            + eval(&self.probe, t, order) * p.kappa1.sqrt()
    }

    /// Effective drive of cavity 2 from the configured envelopes alone.
    pub fn b_d(&self, p: &SystemParams, t: f64, order: usize) -> C64 {
        eval(&self.b_d, t, order) + eval(&self.b_bar, t, order) * p.gamma2.sqrt()
            - eval(&self.probe, t, order) * (p.kappa2 * p.eta_l).sqrt()
    }

    /// Port amplitudes `(probe, a_bar, b_bar)` at time `t`.
    pub fn ports(&self, t: f64) -> (C64, C64, C64) {
        (eval(&self.probe, t, 0), eval(&self.a_bar, t, 0), eval(&self.b_bar, t, 0))
    }

    pub fn a_d_envelopes_differentiable(&self) -> bool {
        [&self.a_d, &self.probe, &self.a_bar].into_iter().flatten().all(Envelope::is_differentiable)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut bps: Vec<f64> = self.envelopes().flat_map(Envelope::breakpoints).collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        bps
    }

    /// End of the last pulse.
    pub fn end(&self) -> f64 {
        self.envelopes().map(Envelope::end).fold(0.0, f64::max)
    }

    /// Hold-level amplitude of the effective cavity-1 drive.
    pub fn a_d_peak(&self, p: &SystemParams) -> C64 {
        let peak = |e: &Option<Envelope>| e.as_ref().map(Envelope::carrier).unwrap_or_default();
        peak(&self.a_d) + peak(&self.a_bar) * p.gamma1.sqrt() + peak(&self.probe) * p.kappa1.sqrt()
    }

    pub fn b_d_peak(&self, p: &SystemParams) -> C64 {
        let peak = |e: &Option<Envelope>| e.as_ref().map(Envelope::carrier).unwrap_or_default();
        peak(&self.b_d) + peak(&self.b_bar) * p.gamma2.sqrt() - peak(&self.probe) * (p.kappa2 * p.eta_l).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, env) in [
            ("a_d", &self.a_d),
            ("b_d", &self.b_d),
            ("probe", &self.probe),
            ("a_bar", &self.a_bar),
            ("b_bar", &self.b_bar),
        ] {
            if let Some(e) = env {
                let ok = [e.amplitude, e.ramp, e.hold, e.start, e.phase].iter().all(|v| v.is_finite());
                if !ok || e.ramp < 0.0 || e.hold < 0.0 || e.start < 0.0 {
                    return Err(Error::param(
                        &format!("drive.{name}"),
                        "envelope times must be finite and non-negative",
                    ));
                }
            }
        }
        Ok(())
    }
}
