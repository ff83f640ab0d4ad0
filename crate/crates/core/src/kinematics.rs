//! Relativistic electron helpers: velocity, momentum, dispersion-free
//! propagation distance and the transverse kick from one interaction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ħc in eV·nm.
pub const HBAR_C_EV_NM: f64 = 197.326_980_4;
/// Electron rest energy in keV.
pub const ELECTRON_REST_KEV: f64 = 510.998_950_00;

/// Kinetic and derived quantities of a beam electron. Energies in keV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectronParams {
    pub kinetic_energy: f64,
    pub rest_energy: f64,
    pub gamma: f64,
    pub velocity_fraction: f64,
    pub momentum_times_c: f64,
}

impl ElectronParams {
    pub fn total_energy(&self) -> f64 {
        self.kinetic_energy + self.rest_energy
    }
}

pub fn electron_from_voltage(kinetic_kev: f64) -> Result<ElectronParams> {
    electron_with_rest(kinetic_kev, ELECTRON_REST_KEV)
}

pub fn electron_with_rest(kinetic_kev: f64, rest_kev: f64) -> Result<ElectronParams> {
    if !(kinetic_kev > 0.0) || !kinetic_kev.is_finite() {
        return Err(Error::Domain(format!(
            "kinetic energy must be positive, got {kinetic_kev} keV"
        )));
    }
    if !(rest_kev > 0.0) {
        return Err(Error::Domain(format!(
            "rest energy must be positive, got {rest_kev} keV"
        )));
    }
    let gamma = 1.0 + kinetic_kev / rest_kev;
    // 1 − γ⁻² written to avoid cancellation at small KE
    let t = kinetic_kev / rest_kev;
    let beta2 = t * (t + 2.0) / (gamma * gamma);
    Ok(ElectronParams {
        kinetic_energy: kinetic_kev,
        rest_energy: rest_kev,
        gamma,
        velocity_fraction: beta2.sqrt(),
        momentum_times_c: (kinetic_kev * (kinetic_kev + 2.0 * rest_kev)).sqrt(),
    })
}

/// Inverse of [`electron_from_voltage`] in terms of v/c.
pub fn electron_from_velocity_fraction(v: f64) -> Result<ElectronParams> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::PhaseMatching(format!("velocity fraction {v} outside (0, 1)")));
    }
    let gamma = 1.0 / (1.0 - v * v).sqrt();
    electron_from_voltage((gamma - 1.0) * ELECTRON_REST_KEV)
}

/// How the quoted spectral bandwidth maps onto ΔE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthConvention {
    /// ΔE is the half-width (default).
    #[default]
    HalfWidth,
    /// ΔE is the full width; halved before use.
    FullWidth,
}

/// Distance (mm) over which the quadratic dispersion term stays negligible:
/// `z = ħc · 2(pc)³ / (E_rest² ΔE²)` with ΔE the half-bandwidth in eV.
pub fn dispersion_distance(e: &ElectronParams, half_bandwidth_ev: f64) -> f64 {
    if half_bandwidth_ev == 0.0 {
        return f64::INFINITY;
    }
    let pc = e.momentum_times_c * 1e3;
    let rest = e.rest_energy * 1e3;
    let z_nm = HBAR_C_EV_NM * 2.0 * pc.powi(3) / (rest * rest * half_bandwidth_ev * half_bandwidth_ev);
    z_nm.abs() * 1e-6
}

/// [`dispersion_distance`] for a bandwidth quoted under `convention`.
pub fn dispersion_distance_with(e: &ElectronParams, bandwidth_ev: f64, convention: BandwidthConvention) -> f64 {
    match convention {
        BandwidthConvention::HalfWidth => dispersion_distance(e, bandwidth_ev),
        BandwidthConvention::FullWidth => dispersion_distance(e, 0.5 * bandwidth_ev),
    }
}

/// Angular kick and end-point displacement after one interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deflection {
    /// rad
    pub theta_f: f64,
    /// nm
    pub displacement: f64,
}

/// `θ_f = α·2ħω/(v P)` and `x(L) = θ_f L / 2`. `length_um` in µm.
pub fn deflection(e: &ElectronParams, alpha_mag: f64, photon_energy_ev: f64, length_um: f64) -> Deflection {
    let v_p = e.velocity_fraction * e.momentum_times_c * 1e3;
    let theta_f = alpha_mag * 2.0 * photon_energy_ev / v_p;
    Deflection {
        theta_f,
        displacement: 0.5 * theta_f * length_um * 1e3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_energy() {
        assert!(electron_from_voltage(0.0).is_err());
        assert!(electron_from_voltage(-3.0).is_err());
        assert!(electron_from_voltage(f64::NAN).is_err());
    }

    #[test]
    fn momentum_matches_energy_relation() {
        for ke in [0.5, 30.0, 200.0, 1e4] {
            let e = electron_from_voltage(ke).unwrap();
            let total = e.total_energy();
            let pc = (total * total - e.rest_energy * e.rest_energy).sqrt();
            assert!((e.momentum_times_c - pc).abs() < 1e-12 * pc);
            assert!((e.velocity_fraction - pc / total).abs() < 1e-14);
        }
    }

    #[test]
    fn velocity_round_trip() {
        let e = electron_from_voltage(123.0).unwrap();
        let back = electron_from_velocity_fraction(e.velocity_fraction).unwrap();
        assert!((back.kinetic_energy - 123.0).abs() < 1e-9);
        assert!(electron_from_velocity_fraction(1.0).is_err());
    }

    #[test]
    fn zero_bandwidth_is_infinite() {
        let e = electron_from_voltage(200.0).unwrap();
        assert!(dispersion_distance(&e, 0.0).is_infinite());
        let h = dispersion_distance_with(&e, 11.65, BandwidthConvention::FullWidth);
        assert_eq!(h, dispersion_distance(&e, 5.825));
    }

    #[test]
    fn zero_coupling_no_kick() {
        let e = electron_from_voltage(200.0).unwrap();
        let d = deflection(&e, 0.0, 1.1, 100.0);
        assert_eq!((d.theta_f, d.displacement), (0.0, 0.0));
    }
}
