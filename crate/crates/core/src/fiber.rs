//! HE11 mode of a round step-index fiber: propagation constant, fields,
//! per-photon normalisation and the electron coupling derived from them.
//!
//! Lengths are in nm unless a name says otherwise; `L` is in µm. Magnetic
//! components are returned as `Z₀H` (V/m), which is the `(c/ω)(μ₀ωH)`
//! combination appearing in the energy density.
//!
//! Orientation: `E_z ∝ sin φ`, `H_z ∝ cos φ`. The transverse components
//! share a common quarter-period lag relative to `E_z`; [`field_at`] returns
//! their real amplitudes with that lag stripped.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{electron_from_velocity_fraction, electron_from_voltage, HBAR_C_EV_NM};
use crate::special::{bessel_j_prime, bessel_j_seq, bessel_k_log_derivative, bessel_k_scaled_seq};

/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Number of scan points for the root bracket.
pub const SCAN_POINTS: usize = 2000;

/// Coherence lengths above this (µm) are reported as capped.
pub const COHERENCE_CAP_UM: f64 = 1e4;

/// Azimuthal factor used in the energy integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngularFactor {
    /// `∫ sin²φ dφ = ∫ cos²φ dφ = π` carried explicitly.
    #[default]
    Explicit,
    /// A flat `2π`, as if the energy were azimuthally uniform.
    Uniform,
}

impl AngularFactor {
    pub fn value(self) -> f64 {
        match self {
            AngularFactor::Explicit => PI,
            AngularFactor::Uniform => 2.0 * PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    pub vacuum_wavelength: f64,
    pub core_index: f64,
    pub clad_index: f64,
    pub core_radius: f64,
    /// µm
    pub normalization_length: f64,
    #[serde(default)]
    pub angular: AngularFactor,
    /// Standing-wave cavity between two mirrors: mode volume larger by √2.
    #[serde(default)]
    pub standing_wave: bool,
}

impl FiberSpec {
    pub fn new(
        vacuum_wavelength: f64,
        core_index: f64,
        clad_index: f64,
        core_radius: f64,
        length_um: f64,
    ) -> Result<Self> {
        let spec = FiberSpec {
            vacuum_wavelength,
            core_index,
            clad_index,
            core_radius,
            normalization_length: length_um,
            angular: AngularFactor::Explicit,
            standing_wave: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Silicon nitride core (n = 2.0) in vacuum at 1064 nm, L = 100 µm.
    pub fn si3n4_1064(diameter: f64) -> Result<Self> {
        Self::new(1064.0, 2.0, 1.0, 0.5 * diameter, 100.0)
    }

    /// Silicon core (n = 3.5) in vacuum at 1064 nm, L = 100 µm.
    pub fn si_1064(diameter: f64) -> Result<Self> {
        Self::new(1064.0, 3.5, 1.0, 0.5 * diameter, 100.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.vacuum_wavelength,
            self.core_index,
            self.clad_index,
            self.core_radius,
            self.normalization_length,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Domain("fiber parameters must be finite".into()));
        }
        if !(self.core_index > self.clad_index && self.clad_index >= 1.0) {
            return Err(Error::Domain(format!(
                "need n_core > n_clad >= 1, got {} and {}",
                self.core_index, self.clad_index
            )));
        }
        if !(self.core_radius > 0.0 && self.normalization_length > 0.0 && self.vacuum_wavelength > 0.0) {
            return Err(Error::Domain("radius, length and wavelength must be positive".into()));
        }
        Ok(())
    }

    pub fn with_diameter(mut self, diameter: f64) -> Self {
        self.core_radius = 0.5 * diameter;
        self
    }

    pub fn with_length(mut self, length_um: f64) -> Self {
        self.normalization_length = length_um;
        self
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.core_radius
    }

    /// Vacuum wavenumber, rad/nm.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.vacuum_wavelength
    }

    pub fn k_in(&self) -> f64 {
        self.k0() * self.core_index
    }

    pub fn k_out(&self) -> f64 {
        self.k0() * self.clad_index
    }

    /// Normalised frequency `V = a k₀ √(n_core² − n_clad²)`.
    pub fn v_number(&self) -> f64 {
        self.core_radius * self.k0() * (self.core_index.powi(2) - self.clad_index.powi(2)).sqrt()
    }

    /// ħω in eV.
    pub fn photon_energy(&self) -> f64 {
        HBAR_C_EV_NM * self.k0()
    }
}

/// Solved HE11 mode. `f1`, `g1` are `Z₀`-scaled and real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberMode {
    /// rad/nm
    pub beta_prop: f64,
    pub u: f64,
    pub w: f64,
    pub a1: f64,
    pub b1: f64,
    pub f1: f64,
    pub g1: f64,
    pub phase_velocity_fraction: f64,
    /// `|LHS − RHS| / (|LHS| + |RHS|)` of the characteristic equation.
    pub residual: f64,
    pub normalized: bool,
}

/// Both sides of the characteristic equation at outer parameter `w`,
/// multiplied through by `w⁴` so that `w → 0` stays finite.
fn characteristic_sides(spec: &FiberSpec, w: f64) -> Result<(f64, f64)> {
    let v = spec.v_number();
    if !(w > 0.0 && w < v) {
        return Err(Error::Domain(format!("w = {w} outside (0, V)")));
    }
    let u = ((v - w) * (v + w)).sqrt();
    let beta = beta_from_w(spec, w);
    let j = bessel_j_seq(2, u);
    let w2 = w * w;
    let jr = w2 * 0.5 * (j[0] - j[2]) / (u * j[1]);
    let kr = w * bessel_k_log_derivative(1, w)?;
    let ratio = (spec.core_index / spec.clad_index).powi(2);
    let lhs = (jr + kr) * (ratio * jr + kr);
    let rhs = (beta / spec.k_out()).powi(2) * (w2 / (u * u) + 1.0).powi(2);
    Ok((lhs, rhs))
}

fn beta_from_w(spec: &FiberSpec, w: f64) -> f64 {
    (spec.k_out().powi(2) + (w / spec.core_radius).powi(2)).sqrt()
}

/// Normalised characteristic-equation residual at propagation constant `beta`.
pub fn characteristic_residual(spec: &FiberSpec, beta: f64) -> Result<f64> {
    let w = spec.core_radius * (beta * beta - spec.k_out().powi(2)).sqrt();
    let (lhs, rhs) = characteristic_sides(spec, w)?;
    Ok((lhs - rhs).abs() / (lhs.abs() + rhs.abs()))
}

fn signed_residual(spec: &FiberSpec, w: f64) -> Result<f64> {
    let (lhs, rhs) = characteristic_sides(spec, w)?;
    Ok((lhs - rhs) / (lhs.abs() + rhs.abs()))
}

/// Sample points for `w` on `(0, V)`, in decreasing order (increasing `u`):
/// uniform in `u`, plus geometric refinement towards `w → 0` where the root
/// of a weakly guiding fiber sits.
fn scan_points(v: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = (1..SCAN_POINTS)
        .map(|i| {
            let u = v * i as f64 / SCAN_POINTS as f64;
            ((v - u) * (v + u)).sqrt()
        })
        .collect();
    let mut w = pts[pts.len() - 1];
    while w > v * 1e-280 {
        w *= 0.5;
        pts.push(w);
    }
    pts.retain(|w| *w > 0.0 && *w < v);
    pts.sort_by(|a, b| b.partial_cmp(a).unwrap());
    pts.dedup();
    pts
}

/// Fundamental (smallest-`u`) root of the ℓ = 1 characteristic equation,
/// with `A₁ = 1`.
pub fn solve_he11(spec: &FiberSpec) -> Result<FiberMode> {
    spec.validate()?;
    let v = spec.v_number();
    let pts = scan_points(v);
    let mut prev: Option<(f64, f64)> = None;
    let mut rejected_poles = 0usize;
    for &w in &pts {
        let f = signed_residual(spec, w)?;
        if let Some((w0, f0)) = prev {
            if f0.signum() != f.signum() {
                let root = bisect(spec, w, f, w0, f0)?;
                let (lhs, rhs) = characteristic_sides(spec, root)?;
                let residual = (lhs - rhs).abs() / (lhs.abs() + rhs.abs());
                if residual < 1e-6 {
                    return mode_from_w(spec, root, residual);
                }
                rejected_poles += 1;
            }
        }
        prev = Some((w, f));
    }
    Err(Error::NoRoot(format!(
        "no HE11 root on (0, V={v:.6}) after {} samples ({rejected_poles} pole crossings skipped)",
        pts.len()
    )))
}

/// Bisection in `w`, geometric while the bracket spans more than a factor 2.
fn bisect(spec: &FiberSpec, mut lo: f64, mut f_lo: f64, mut hi: f64, f_hi: f64) -> Result<f64> {
    debug_assert!(f_lo.signum() != f_hi.signum());
    for _ in 0..2000 {
        let mid = if hi > 2.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        let f = signed_residual(spec, mid)?;
        if f == 0.0 {
            return Ok(mid);
        }
        if f.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
        }
    }
    // endpoint with the smaller residual
    let r_lo = signed_residual(spec, lo)?.abs();
    let r_hi = signed_residual(spec, hi)?.abs();
    Ok(if r_lo <= r_hi { lo } else { hi })
}

fn mode_from_w(spec: &FiberSpec, w: f64, residual: f64) -> Result<FiberMode> {
    let v = spec.v_number();
    let u = ((v - w) * (v + w)).sqrt();
    let beta = beta_from_w(spec, w);
    let j = bessel_j_seq(2, u);
    let w2 = w * w;
    let jr = w2 * 0.5 * (j[0] - j[2]) / (u * j[1]);
    let kr = w * bessel_k_log_derivative(1, w)?;
    let ks = bessel_k_scaled_seq(1, w)?;
    let a1 = 1.0;
    // B₁ = A₁ J₁(u) / K₁(w), with K₁(w) = e^{−w} · scaled
    let b1_over_a1 = j[1] / ks[1] * w.exp();
    let f1 = (beta / spec.k0()) * (w2 / (u * u) + 1.0) / (jr + kr) * a1;
    Ok(FiberMode {
        beta_prop: beta,
        u,
        w,
        a1,
        b1: b1_over_a1 * a1,
        f1,
        g1: b1_over_a1 * f1,
        phase_velocity_fraction: spec.k0() / beta,
        residual,
        normalized: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldComponent {
    Ez,
    Ephi,
    Er,
    Hz,
    Hr,
    Hphi,
}

/// Radial profiles at one radius: `(e, e', h, h', e/r, h/r)` with `e` the
/// `E_z` profile for unit `A₁` and `h` the `H_z` profile for unit `F₁`.
struct Radial {
    e: f64,
    de: f64,
    e_over_r: f64,
    q2: f64,
    n2: f64,
}

fn radial(mode: &FiberMode, spec: &FiberSpec, r: f64) -> Result<Radial> {
    let a = spec.core_radius;
    if r <= a {
        let x = mode.u * r / a;
        let j = bessel_j_seq(2, x);
        let e_over_r = if r == 0.0 { 0.5 * mode.u / a } else { j[1] / r };
        Ok(Radial {
            e: j[1],
            de: bessel_j_prime(1, x) * mode.u / a,
            e_over_r,
            q2: (mode.u / a).powi(2),
            n2: spec.core_index.powi(2),
        })
    } else {
        let x = mode.w * r / a;
        let ks = bessel_k_scaled_seq(1, x)?;
        let ksw = bessel_k_scaled_seq(1, mode.w)?;
        let j1u = bessel_j_seq(1, mode.u)[1];
        let decay = (mode.w - x).exp();
        let e = j1u * ks[1] / ksw[1] * decay;
        let dk = -(ks[0] + ks[1] / x) * decay;
        Ok(Radial {
            e,
            de: j1u / ksw[1] * dk * mode.w / a,
            e_over_r: e / r,
            q2: -(mode.w / a).powi(2),
            n2: spec.clad_index.powi(2),
        })
    }
}

/// Radial amplitudes `(E_z, E_φ, E_r, Z₀H_z, Z₀H_r, Z₀H_φ)` without the
/// angular factors.
fn amplitudes(mode: &FiberMode, spec: &FiberSpec, r: f64) -> Result<[f64; 6]> {
    let p = radial(mode, spec, r)?;
    let (a1, f1, b, k0) = (mode.a1, mode.f1, mode.beta_prop, spec.k0());
    let s = b / p.q2;
    let ez = a1 * p.e;
    let hz = f1 * p.e;
    let er = s * (a1 * p.de - (k0 / b) * f1 * p.e_over_r);
    let ephi = s * (a1 * p.e_over_r - (k0 / b) * f1 * p.de);
    let hr = s * (f1 * p.de - (p.n2 * k0 / b) * a1 * p.e_over_r);
    let hphi = s * (-f1 * p.e_over_r + (p.n2 * k0 / b) * a1 * p.de);
    Ok([ez, ephi, er, hz, hr, hphi])
}

/// One field component at `(r, φ)`, `z = 0`, at the instant of maximal `E_z`.
///
/// The `H_z` profile shares the `E_z` radial shape (`G₁/F₁ = B₁/A₁`).
pub fn field_at(mode: &FiberMode, spec: &FiberSpec, r: f64, phi: f64, component: FieldComponent) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("radius must be nonnegative, got {r}")));
    }
    let [ez, ephi, er, hz, hr, hphi] = amplitudes(mode, spec, r)?;
    let (s, c) = phi.sin_cos();
    Ok(match component {
        FieldComponent::Ez => ez * s,
        FieldComponent::Ephi => ephi * c,
        FieldComponent::Er => er * s,
        FieldComponent::Hz => hz * c,
        FieldComponent::Hr => hr * c,
        FieldComponent::Hphi => hphi * s,
    })
}

/// Energy-density integrand `n²(E_z² + E_φ²) + (Z₀H_r)²` at radius `r`.
pub fn energy_integrand(mode: &FiberMode, spec: &FiberSpec, r: f64) -> Result<f64> {
    let [ez, ephi, _, _, hr, _] = amplitudes(mode, spec, r)?;
    let n2 = if r <= spec.core_radius {
        spec.core_index.powi(2)
    } else {
        spec.clad_index.powi(2)
    };
    Ok(n2 * (ez * ez + ephi * ephi) + hr * hr)
}

/// Radius beyond which the outer `K₁` envelope is below `1e-8` of its value
/// at the surface (the squared integrand below `1e-16`).
pub fn truncation_radius(mode: &FiberMode, spec: &FiberSpec) -> Result<f64> {
    envelope_radius(mode, spec, 1e-8)
}

/// `r > a` where `K₁(wr/a)/K₁(w)` equals `level`.
fn envelope_radius(mode: &FiberMode, spec: &FiberSpec, level: f64) -> Result<f64> {
    let a = spec.core_radius;
    let ksw = bessel_k_scaled_seq(1, mode.w)?[1];
    let ratio = |r: f64| -> Result<f64> {
        let x = mode.w * r / a;
        Ok(bessel_k_scaled_seq(1, x)?[1] / ksw * (mode.w - x).exp())
    };
    let mut hi = 2.0 * a;
    while ratio(hi)? > level {
        hi = a + 2.0 * (hi - a);
        if hi > 1e12 * a {
            return Err(Error::Quadrature("field envelope does not decay".into()));
        }
    }
    let mut lo = a;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ratio(mid)? > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

const QUAD_RTOL: f64 = 1e-12;

/// Integral of `f(r) r dr` over `[lo, hi]` split into `pieces` panels.
fn radial_integral<F>(f: &F, lo: f64, hi: f64, pieces: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let h = (hi - lo) / pieces as f64;
    let mut scale = 0.0f64;
    for i in 0..=8 {
        let r = lo + (hi - lo) * i as f64 / 8.0;
        scale = scale.max((f(r)? * r).abs());
    }
    let scale = scale * (hi - lo);
    let mut total = 0.0;
    let failed = std::sync::Mutex::new(None);
    for p in 0..pieces {
        let (x0, x1) = (lo + p as f64 * h, lo + (p + 1) as f64 * h);
        let out = quadrature::integrate(
            |r| match f(r) {
                Ok(v) => v * r,
                Err(e) => {
                    *failed.lock().unwrap() = Some(e);
                    0.0
                }
            },
            x0,
            x1,
            QUAD_RTOL * scale.max(f64::MIN_POSITIVE),
        );
        if out.error_estimate > 1e-10 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Quadrature(format!(
                "panel [{x0:.4}, {x1:.4}] nm: error estimate {:.3e} after {} evaluations",
                out.error_estimate, out.num_function_evaluations
            )));
        }
        total += out.integral;
    }
    if let Some(e) = failed.into_inner().unwrap() {
        return Err(e);
    }
    Ok(total)
}

/// `∫₀^∞ [n²(E_z² + E_φ²) + (Z₀H_r)²] r dr` in nm² · (V/m)², split at `r = a`.
pub fn radial_energy_integral(mode: &FiberMode, spec: &FiberSpec) -> Result<f64> {
    let a = spec.core_radius;
    let f = |r: f64| energy_integrand(mode, spec, r);
    let inner = radial_integral(&f, 0.0, a, 4)?;
    let r_max = truncation_radius(mode, spec)?;
    let e_fold = a / mode.w;
    let pieces = (((r_max - a) / e_fold).ceil() as usize).clamp(4, 400);
    let outer = radial_integral(&f, a, r_max, pieces)?;
    Ok(inner + outer)
}

/// Field energy (J) stored over the normalisation length.
pub fn mode_energy(mode: &FiberMode, spec: &FiberSpec) -> Result<f64> {
    let radial = radial_energy_integral(mode, spec)?;
    let length_m = spec.normalization_length * 1e-6;
    let volume = if spec.standing_wave { 2f64.sqrt() } else { 1.0 };
    Ok(volume * length_m * EPSILON_0 * spec.angular.value() * radial * 1e-18)
}

/// Rescale all coefficients so that the stored energy is one photon.
pub fn normalize_per_photon(mode: &FiberMode, spec: &FiberSpec) -> Result<FiberMode> {
    let unit = FiberMode {
        a1: 1.0,
        b1: mode.b1 / mode.a1,
        f1: mode.f1 / mode.a1,
        g1: mode.g1 / mode.a1,
        ..*mode
    };
    let energy = mode_energy(&unit, spec)?;
    let photon = spec.photon_energy() * ELEMENTARY_CHARGE;
    let a1 = (photon / energy).sqrt();
    Ok(FiberMode {
        a1,
        b1: unit.b1 * a1,
        f1: unit.f1 * a1,
        g1: unit.g1 * a1,
        normalized: true,
        ..unit
    })
}

/// `π/|k₀/(v/c) − β|` in µm, capped at [`COHERENCE_CAP_UM`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceLength {
    pub value_um: f64,
    pub capped: bool,
}

pub fn coherence_length(mode: &FiberMode, spec: &FiberSpec, kinetic_kev: f64) -> Result<CoherenceLength> {
    let e = electron_from_voltage(kinetic_kev)?;
    let mismatch = (spec.k0() / e.velocity_fraction - mode.beta_prop).abs();
    let lc = PI / mismatch * 1e-3;
    Ok(if !(lc < COHERENCE_CAP_UM) {
        CoherenceLength {
            value_um: COHERENCE_CAP_UM,
            capped: true,
        }
    } else {
        CoherenceLength {
            value_um: lc,
            capped: false,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingResult {
    pub alpha_max: f64,
    /// V/m at `r = a⁺`
    pub surface_field_per_photon: f64,
    /// nm outside the core
    pub decay_length: f64,
    /// keV; `None` when the phase velocity is not below `c`
    pub phase_matched_voltage: Option<f64>,
    pub coherence_length_200kev: CoherenceLength,
    pub coherence_length_300kev: CoherenceLength,
}

/// Maximal coupling `q E_z(a⁺) L / (2ħω)` for a normalised mode.
pub fn coupling_alpha_max(mode: &FiberMode, spec: &FiberSpec) -> Result<CouplingResult> {
    if !mode.normalized {
        return Err(Error::Domain("coupling needs a per-photon normalised mode".into()));
    }
    let surface = mode.a1 * bessel_j_seq(1, mode.u)[1];
    let length_m = spec.normalization_length * 1e-6;
    let alpha_max = surface * length_m / (2.0 * spec.photon_energy());
    let decay_length = envelope_radius(mode, spec, (-1f64).exp())? - spec.core_radius;
    let phase_matched_voltage = phase_matched_voltage(mode).ok();
    Ok(CouplingResult {
        alpha_max: alpha_max.abs(),
        surface_field_per_photon: surface.abs(),
        decay_length,
        phase_matched_voltage,
        coherence_length_200kev: coherence_length(mode, spec, 200.0)?,
        coherence_length_300kev: coherence_length(mode, spec, 300.0)?,
    })
}

/// Kinetic energy (keV) of an electron moving at the mode's phase velocity.
pub fn phase_matched_voltage(mode: &FiberMode) -> Result<f64> {
    let v = mode.phase_velocity_fraction;
    if !(v < 1.0) {
        return Err(Error::PhaseMatching(format!("phase velocity {v} c is not below c")));
    }
    Ok(electron_from_velocity_fraction(v)?.kinetic_energy)
}

/// Solve, normalise and evaluate the coupling in one step.
pub fn analyze(spec: &FiberSpec) -> Result<(FiberMode, CouplingResult)> {
    let mode = normalize_per_photon(&solve_he11(spec)?, spec)?;
    let coupling = coupling_alpha_max(&mode, spec)?;
    Ok((mode, coupling))
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub diameter: f64,
    pub result: Result<(FiberMode, CouplingResult)>,
}

/// One independent row per diameter; failures are kept per row.
pub fn sweep_diameter(template: &FiberSpec, diameters: &[f64]) -> Result<Vec<SweepRow>> {
    if diameters.is_empty() {
        return Err(Error::InvalidGrid("diameter list is empty".into()));
    }
    Ok(diameters
        .par_iter()
        .map(|&d| SweepRow {
            diameter: d,
            result: template
                .with_diameter(d)
                .validate()
                .and_then(|_| analyze(&template.with_diameter(d))),
        })
        .collect())
}

/// Diameter in `[lo, hi]` whose phase velocity equals the speed of an
/// electron of the given kinetic energy.
pub fn phase_matched_diameter(template: &FiberSpec, kinetic_kev: f64, lo: f64, hi: f64) -> Result<f64> {
    let target = electron_from_voltage(kinetic_kev)?.velocity_fraction;
    let f = |d: f64| -> Result<f64> { Ok(solve_he11(&template.with_diameter(d))?.phase_velocity_fraction - target) };
    let (mut lo, mut hi) = (lo, hi);
    let (mut f_lo, f_hi) = (f(lo)?, f(hi)?);
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::PhaseMatching(format!(
            "no phase-matched diameter in [{lo}, {hi}] nm for {kinetic_kev} keV"
        )));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_specs() {
        assert!(FiberSpec::new(1064.0, 1.0, 1.0, 100.0, 100.0).is_err());
        assert!(FiberSpec::new(1064.0, 2.0, 0.5, 100.0, 100.0).is_err());
        assert!(FiberSpec::new(1064.0, 2.0, 1.0, -1.0, 100.0).is_err());
        assert!(FiberSpec::new(1064.0, 2.0, 1.0, 100.0, 0.0).is_err());
    }

    #[test]
    fn root_is_guided() {
        let spec = FiberSpec::si3n4_1064(463.0).unwrap();
        let mode = solve_he11(&spec).unwrap();
        assert!(mode.beta_prop > spec.k_out() && mode.beta_prop < spec.k_in());
        assert!(mode.residual < 1e-12, "{}", mode.residual);
        let v = spec.v_number();
        assert!((mode.u * mode.u + mode.w * mode.w - v * v).abs() < 1e-12 * v * v);
    }

    #[test]
    fn ez_vanishes_on_axis() {
        let spec = FiberSpec::si3n4_1064(463.0).unwrap();
        let mode = solve_he11(&spec).unwrap();
        assert_eq!(field_at(&mode, &spec, 0.0, PI / 2.0, FieldComponent::Ez).unwrap(), 0.0);
        assert!(field_at(&mode, &spec, -1.0, 0.0, FieldComponent::Ez).is_err());
    }

    #[test]
    fn coupling_requires_normalisation() {
        let spec = FiberSpec::si3n4_1064(463.0).unwrap();
        let mode = solve_he11(&spec).unwrap();
        assert!(coupling_alpha_max(&mode, &spec).is_err());
    }

    #[test]
    fn empty_sweep_rejected() {
        let spec = FiberSpec::si3n4_1064(463.0).unwrap();
        assert!(sweep_diameter(&spec, &[]).is_err());
    }
}
