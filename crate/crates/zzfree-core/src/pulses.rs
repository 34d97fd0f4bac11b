//! Time-dependent envelope library: truncated Gaussians, the adiabatic
//! polynomial ramp used for CZ gates, fifth-order smoothstep ramps, and
//! first-order DRAG quadrature construction.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Envelope shape. Amplitudes are linear frequencies in GHz, times in ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvelopeKind {
    /// Gaussian truncated at 2 sigma on each side and offset-subtracted so
    /// the envelope vanishes at the edges of its support.
    TruncatedGaussian { peak: f64, sigma: f64, duration: f64 },
    /// Polynomial sweep that starts and ends at `base` with the midpoint at
    /// zero; first and second derivatives vanish at both endpoints.
    AdiabaticPoly { base: f64, exponent: u32, duration: f64 },
    Constant { level: f64 },
    /// Smoothstep ramp 0 -> target over `ramp_time`, holding afterwards.
    RampUp { target: f64, ramp_time: f64, order: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseEnvelope {
    pub kind: EnvelopeKind,
    /// Carrier phase in radians.
    #[serde(default)]
    pub phase: f64,
    /// Carrier frequency in GHz (0 for baseband envelopes).
    #[serde(default)]
    pub carrier: f64,
}

impl PulseEnvelope {
    pub fn new(kind: EnvelopeKind) -> Self {
        PulseEnvelope { kind, phase: 0.0, carrier: 0.0 }
    }

    pub fn with_carrier(kind: EnvelopeKind, carrier: f64, phase: f64) -> Self {
        PulseEnvelope { kind, phase, carrier }
    }

    pub fn gaussian(peak: f64, sigma: f64) -> Self {
        Self::new(EnvelopeKind::TruncatedGaussian { peak, sigma, duration: 4.0 * sigma })
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            EnvelopeKind::TruncatedGaussian { sigma, duration, .. } => {
                if *sigma <= 0.0 || *duration <= 0.0 {
                    return Err(Error::InvalidSpec("gaussian sigma/duration must be positive".into()));
                }
            }
            EnvelopeKind::AdiabaticPoly { exponent, duration, .. } => {
                if *exponent == 0 || *exponent % 2 != 0 {
                    return Err(Error::InvalidSpec(format!(
                        "adiabatic exponent must be even and positive, got {exponent}"
                    )));
                }
                if *duration <= 0.0 {
                    return Err(Error::InvalidSpec("adiabatic duration must be positive".into()));
                }
            }
            EnvelopeKind::RampUp { ramp_time, order, .. } => {
                if *ramp_time <= 0.0 {
                    return Err(Error::InvalidSpec("ramp time must be positive".into()));
                }
                if *order != 3 && *order != 5 {
                    return Err(Error::InvalidSpec("smoothstep order must be 3 or 5".into()));
                }
            }
            EnvelopeKind::Constant { .. } => {}
        }
        Ok(())
    }

    /// Envelope support; `None` for envelopes defined at all t >= 0.
    pub fn duration(&self) -> Option<f64> {
        match &self.kind {
            EnvelopeKind::TruncatedGaussian { duration, .. } => Some(*duration),
            EnvelopeKind::AdiabaticPoly { duration, .. } => Some(*duration),
            EnvelopeKind::Constant { .. } | EnvelopeKind::RampUp { .. } => None,
        }
    }

    /// Envelope value at time `t` (ns). Outside the support the value is 0;
    /// negative `t` is a domain error.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::InvalidSpec(format!("envelope evaluated at negative t = {t}")));
        }
        Ok(match &self.kind {
            EnvelopeKind::TruncatedGaussian { peak, sigma, duration } => {
                if t > *duration {
                    0.0
                } else {
                    let tc = 0.5 * duration;
                    let edge = (-(0.5 * duration / sigma).powi(2) / 2.0).exp();
                    let g = (-((t - tc) / sigma).powi(2) / 2.0).exp();
                    peak * (g - edge) / (1.0 - edge)
                }
            }
            EnvelopeKind::AdiabaticPoly { base, exponent, duration } => {
                if t > *duration {
                    0.0
                } else {
                    let x = t / duration;
                    let bracket = 10.0 * x.powi(3) - 15.0 * x.powi(4) + 6.0 * x.powi(5) - 0.5;
                    2f64.powi(*exponent as i32) * base * bracket.powi(*exponent as i32)
                }
            }
            EnvelopeKind::Constant { level } => *level,
            EnvelopeKind::RampUp { target, ramp_time, order } => {
                if t >= *ramp_time {
                    *target
                } else {
                    target * smoothstep(t / ramp_time, *order)
                }
            }
        })
    }

    /// Analytic time derivative in GHz/ns.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::InvalidSpec(format!("envelope derivative at negative t = {t}")));
        }
        Ok(match &self.kind {
            EnvelopeKind::TruncatedGaussian { peak, sigma, duration } => {
                if t > *duration {
                    0.0
                } else {
                    let tc = 0.5 * duration;
                    let edge = (-(0.5 * duration / sigma).powi(2) / 2.0).exp();
                    let g = (-((t - tc) / sigma).powi(2) / 2.0).exp();
                    peak * g * (-(t - tc) / (sigma * sigma)) / (1.0 - edge)
                }
            }
            EnvelopeKind::AdiabaticPoly { base, exponent, duration } => {
                if t > *duration {
                    0.0
                } else {
                    let x = t / duration;
                    let bracket = 10.0 * x.powi(3) - 15.0 * x.powi(4) + 6.0 * x.powi(5) - 0.5;
                    let dbracket = (30.0 * x.powi(2) - 60.0 * x.powi(3) + 30.0 * x.powi(4)) / duration;
                    let n = *exponent as i32;
                    2f64.powi(n) * base * n as f64 * bracket.powi(n - 1) * dbracket
                }
            }
            EnvelopeKind::Constant { .. } => 0.0,
            EnvelopeKind::RampUp { target, ramp_time, order } => {
                if t >= *ramp_time {
                    0.0
                } else {
                    target * smoothstep_derivative(t / ramp_time, *order) / ramp_time
                }
            }
        })
    }
}

fn smoothstep(x: f64, order: u32) -> f64 {
    match order {
        3 => 3.0 * x * x - 2.0 * x * x * x,
        5 => 10.0 * x.powi(3) - 15.0 * x.powi(4) + 6.0 * x.powi(5),
        _ => unreachable!("validated smoothstep order"),
    }
}

fn smoothstep_derivative(x: f64, order: u32) -> f64 {
    match order {
        3 => 6.0 * x - 6.0 * x * x,
        5 => 30.0 * x.powi(2) - 60.0 * x.powi(3) + 30.0 * x.powi(4),
        _ => unreachable!("validated smoothstep order"),
    }
}

/// In-phase / quadrature envelope pair for first-order DRAG.
///
/// The quadrature at time t is -(d/dt base)/(2 pi eta) with `eta` the
/// anharmonicity of the qubit the correction protects, and its carrier
/// phase is shifted by pi/2.
#[derive(Debug, Clone)]
pub struct DragPair {
    pub in_phase: PulseEnvelope,
    pub quadrature_scale: f64,
}

impl DragPair {
    pub fn quadrature_value(&self, t: f64) -> Result<f64> {
        Ok(self.in_phase.derivative(t)? * self.quadrature_scale)
    }
}

pub fn drag_pair(base: &PulseEnvelope, anharmonicity: f64) -> Result<DragPair> {
    if anharmonicity == 0.0 {
        return Err(Error::InvalidSpec("DRAG requires a nonzero anharmonicity".into()));
    }
    base.validate()?;
    Ok(DragPair { in_phase: base.clone(), quadrature_scale: -1.0 / (TAU * anharmonicity) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn adiabatic(n: u32) -> PulseEnvelope {
        PulseEnvelope::new(EnvelopeKind::AdiabaticPoly { base: 0.27, exponent: n, duration: 160.0 })
    }

    #[test]
    fn adiabatic_endpoints_return_base() {
        for n in [2u32, 4, 8, 32] {
            let env = adiabatic(n);
            assert_relative_eq!(env.evaluate(0.0).unwrap(), 0.27, epsilon = 1e-12);
            assert_relative_eq!(env.evaluate(160.0).unwrap(), 0.27, epsilon = 1e-9);
        }
    }

    #[test]
    fn adiabatic_midpoint_is_zero() {
        // bracket at x = 1/2: 10/8 - 15/16 + 6/32 - 1/2 = 0
        let bracket = 10.0 / 8.0 - 15.0 / 16.0 + 6.0 / 32.0 - 0.5;
        assert_eq!(bracket, 0.0);
        let env = adiabatic(2);
        assert!(env.evaluate(80.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn adiabatic_symmetry() {
        let env = adiabatic(4);
        for &t in &[1.0, 17.3, 40.0, 79.0] {
            assert_relative_eq!(
                env.evaluate(t).unwrap(),
                env.evaluate(160.0 - t).unwrap(),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn adiabatic_endpoint_derivatives_vanish() {
        let env = adiabatic(2);
        assert!(env.derivative(0.0).unwrap().abs() < 1e-14);
        assert!(env.derivative(160.0).unwrap().abs() < 1e-14);
        // one-sided stencils evaluated exactly at the endpoints
        let h = 1e-2;
        let f = |t: f64| env.evaluate(t).unwrap();
        for (t0, dir) in [(0.0, 1.0), (160.0, -1.0)] {
            let (f0, f1, f2, f3) =
                (f(t0), f(t0 + dir * h), f(t0 + 2.0 * dir * h), f(t0 + 3.0 * dir * h));
            let d1 = dir * (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
            let d2 = (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) / (h * h);
            assert!(d1.abs() < 1e-8, "d1 = {d1}");
            assert!(d2.abs() < 1e-8, "d2 = {d2}");
        }
    }

    #[test]
    fn gaussian_peak_at_center() {
        let env = PulseEnvelope::gaussian(0.2, 10.0);
        assert_relative_eq!(env.evaluate(20.0).unwrap(), 0.2, epsilon = 1e-12);
        assert!(env.evaluate(0.0).unwrap().abs() < 1e-14);
        assert!(env.evaluate(40.0).unwrap().abs() < 1e-14);
        assert_eq!(env.evaluate(41.0).unwrap(), 0.0);
    }

    #[test]
    fn envelopes_bounded_by_peak() {
        let envs = [
            PulseEnvelope::gaussian(0.2, 10.0),
            adiabatic(2),
            PulseEnvelope::new(EnvelopeKind::RampUp { target: 0.27, ramp_time: 30.0, order: 5 }),
        ];
        let peaks = [0.2, 0.27, 0.27];
        for (env, peak) in envs.iter().zip(peaks) {
            let dur = env.duration().unwrap_or(60.0);
            for k in 0..=600 {
                let t = dur * k as f64 / 600.0;
                assert!(env.evaluate(t).unwrap().abs() <= peak + 1e-12);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let envs = [
            PulseEnvelope::gaussian(0.2, 10.0),
            adiabatic(4),
            PulseEnvelope::new(EnvelopeKind::RampUp { target: 0.3, ramp_time: 25.0, order: 5 }),
        ];
        let h = 1e-4;
        for env in &envs {
            let dur = env.duration().unwrap_or(25.0);
            for k in 1..40 {
                let t = dur * k as f64 / 40.0;
                let fd = (env.evaluate(t + h).unwrap() - env.evaluate(t - h).unwrap()) / (2.0 * h);
                let an = env.derivative(t).unwrap();
                let scale = an.abs().max(1e-3);
                assert!(
                    (fd - an).abs() / scale < 1e-6,
                    "t={t}: fd={fd}, analytic={an}"
                );
            }
        }
    }

    #[test]
    fn negative_time_is_domain_error() {
        assert!(PulseEnvelope::gaussian(0.1, 5.0).evaluate(-0.1).is_err());
        assert!(adiabatic(2).derivative(-1.0).is_err());
    }

    #[test]
    fn drag_constant_base_zero_quadrature() {
        let base = PulseEnvelope::new(EnvelopeKind::Constant { level: 0.1 });
        let pair = drag_pair(&base, -0.32).unwrap();
        assert_eq!(pair.quadrature_value(3.0).unwrap(), 0.0);
    }

    #[test]
    fn drag_gaussian_quadrature_odd_about_center() {
        let base = PulseEnvelope::gaussian(0.2, 10.0);
        let pair = drag_pair(&base, -0.32).unwrap();
        for &dt in &[1.0, 5.0, 9.0] {
            let a = pair.quadrature_value(20.0 - dt).unwrap();
            let b = pair.quadrature_value(20.0 + dt).unwrap();
            assert_relative_eq!(a, -b, epsilon = 1e-12);
        }
        // scale: -(d/dt)/(2 pi eta)
        let t = 13.0;
        assert_relative_eq!(
            pair.quadrature_value(t).unwrap(),
            -base.derivative(t).unwrap() / (TAU * -0.32),
            epsilon = 1e-12
        );
    }

    #[test]
    fn drag_zero_anharmonicity_rejected() {
        assert!(drag_pair(&PulseEnvelope::gaussian(0.1, 5.0), 0.0).is_err());
    }

    #[test]
    fn odd_adiabatic_exponent_rejected() {
        let env = PulseEnvelope::new(EnvelopeKind::AdiabaticPoly {
            base: 0.1,
            exponent: 3,
            duration: 100.0,
        });
        assert!(env.validate().is_err());
    }
}
