//! Closed-form quantum predictions for cascade photon pairs observed through
//! two-channel polarizers and finite-aperture detectors.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::angle::AngleDeg;
use crate::error::{invalid, Result};
use crate::pdf::OutcomePdf;

/// Detector efficiency, aperture half-angle and detector separation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApparatusParams {
    pub eta: f64,
    /// Aperture half-angle in radians.
    pub phi_ap: f64,
    /// Angle between the two detector directions in radians.
    pub theta: f64,
}

impl ApparatusParams {
    pub fn new(eta: f64, phi_ap: f64, theta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0 && eta <= 1.0) {
            return Err(invalid("eta", format!("{eta} not in (0, 1]")));
        }
        check_aperture(phi_ap)?;
        if !(theta.is_finite() && (0.0..=PI).contains(&theta)) {
            return Err(invalid("theta", format!("{theta} not in [0, π]")));
        }
        Ok(Self { eta, phi_ap, theta })
    }

    /// Builds the parameters from a solid angle in steradians.
    pub fn from_solid_angle(eta: f64, omega: f64, theta: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0 && omega <= 4.0 * PI) {
            return Err(invalid("omega", format!("{omega} not in (0, 4π]")));
        }
        let cos_phi = (1.0 - omega / (2.0 * PI)).clamp(-1.0, 1.0);
        Self::new(eta, cos_phi.acos(), theta)
    }

    pub fn solid_angle(&self) -> f64 {
        2.0 * PI * (1.0 - self.phi_ap.cos())
    }
}

impl Default for ApparatusParams {
    /// η = 1, Ω = π, θ = π.
    fn default() -> Self {
        Self::from_solid_angle(1.0, PI, PI).expect("valid defaults")
    }
}

fn check_aperture(phi_ap: f64) -> Result<()> {
    if !(phi_ap.is_finite() && phi_ap > 0.0 && phi_ap <= PI) {
        return Err(invalid("phi_ap", format!("{phi_ap} not in (0, π]")));
    }
    Ok(())
}

/// Solid angle `2π(1 − cos φ)` subtended by an aperture of half-angle `φ`.
pub fn solid_angle(phi_ap: f64) -> Result<f64> {
    check_aperture(phi_ap)?;
    Ok(2.0 * PI * (1.0 - phi_ap.cos()))
}

/// Angular correlation of the cascade pair for back-to-back detectors
/// (`θ = π`): `1 + cos²φ (1 + cos φ)² / 8`.
///
/// Accepts `φ = 0` so the small-aperture limit can be evaluated directly.
pub fn angular_correlation_g(phi_ap: f64) -> Result<f64> {
    if !(phi_ap.is_finite() && (0.0..=PI).contains(&phi_ap)) {
        return Err(invalid("phi_ap", format!("{phi_ap} not in [0, π]")));
    }
    let c = phi_ap.cos();
    Ok(1.0 + 0.125 * c * c * (1.0 + c) * (1.0 + c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumModel {
    pub params: ApparatusParams,
    joint_scale: f64,
    single: f64,
}

impl QuantumModel {
    /// Only back-to-back detectors (`θ = π`) are supported; the angular
    /// correlation is not available in closed form for other geometries.
    pub fn new(params: ApparatusParams) -> Result<Self> {
        if (params.theta - PI).abs() > 1e-12 {
            return Err(invalid(
                "theta",
                format!(
                    "angular correlation is only defined for θ = π, got {}",
                    params.theta
                ),
            ));
        }
        let omega_frac = params.solid_angle() / (8.0 * PI);
        let g = angular_correlation_g(params.phi_ap)?;
        let joint_scale = params.eta * params.eta * omega_frac * omega_frac * g;
        Ok(Self {
            params,
            joint_scale,
            single: params.eta * omega_frac,
        })
    }

    /// `C = η² (Ω/8π)² g`.
    pub fn joint_scale(&self) -> f64 {
        self.joint_scale
    }

    /// `η Ω / 8π`, the probability of a count in any single channel.
    pub fn single_probability(&self) -> f64 {
        self.single
    }

    pub fn joint_pdf(&self, a: AngleDeg, b: AngleDeg) -> OutcomePdf {
        let c = self.joint_scale;
        let cos2 = (2.0 * (a.radians() - b.radians())).cos();
        let same = c * (1.0 + cos2);
        let diff = c * (1.0 - cos2);
        OutcomePdf {
            pp: same,
            pm: diff,
            mp: diff,
            mm: same,
            s1_plus: self.single,
            s1_minus: self.single,
            s2_plus: self.single,
            s2_minus: self.single,
        }
    }

    /// Coincidence probability behind one-channel polarizers whose axes differ
    /// by `delta` degrees.
    pub fn detection_prob_one_channel(&self, delta: f64) -> f64 {
        self.joint_pdf(AngleDeg::ZERO, AngleDeg::deg(delta)).pp
    }

    /// Coincidence probability with one polarizer removed.
    pub fn detection_prob_one_removed(&self) -> f64 {
        2.0 * self.joint_scale
    }

    /// Coincidence probability with both polarizers removed.
    pub fn detection_prob_both_removed(&self) -> f64 {
        4.0 * self.joint_scale
    }
}

impl Default for QuantumModel {
    fn default() -> Self {
        Self::new(ApparatusParams::default()).expect("valid defaults")
    }
}
