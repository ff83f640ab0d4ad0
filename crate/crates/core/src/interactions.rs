//! Closed-form amplitudes for electron–cavity interactions: field-less
//! energy loss (Poisson), PINEM from a coherent state, its classical Bessel
//! limit, and the two-electron exchange through a shared cavity mode.
//!
//! Every formula is assembled as `ln|c|` plus a phase and exponentiated at
//! the end. The gain channel carries `(−α*)^k` and the loss channel
//! `α^{|k|}`, which is what the displacement-operator expansion produces for
//! any complex `α`; under `α = −α*` the two coincide with `α^{|k|}`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::{bessel_j_signed, kernel_sum_log, ln_factorial};
use crate::state::{is_pure_imaginary, suggest_range, Axis, AxisKind, AxisRange, JointAmplitudeGrid, Metadata};

/// `|c| = exp(ln_abs)`, `c = |c| e^{i phase}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogAmplitude {
    pub ln_abs: f64,
    pub phase: f64,
}

impl LogAmplitude {
    pub const ZERO: LogAmplitude = LogAmplitude {
        ln_abs: f64::NEG_INFINITY,
        phase: 0.0,
    };

    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    /// Nonzero in exact arithmetic but below the f64 range.
    pub fn underflows(&self) -> bool {
        !self.is_zero() && self.ln_abs < -745.0
    }

    pub fn value(&self) -> Complex64 {
        if self.is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(self.ln_abs.exp(), self.phase)
        }
    }
}

fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `ln|z|^p` with `0^0 = 1`; `None` for `0^p`, `p > 0`.
fn ln_pow(z: Complex64, p: u64) -> Option<f64> {
    if p == 0 {
        Some(0.0)
    } else if z.norm() == 0.0 {
        None
    } else {
        Some(p as f64 * z.norm().ln())
    }
}

fn arg_pow(z: Complex64, p: u64) -> f64 {
    if p == 0 {
        0.0
    } else {
        p as f64 * z.arg()
    }
}

/// Phase convention carried in grid metadata.
pub fn convention_label(alpha: Complex64) -> &'static str {
    if is_pure_imaginary(alpha) {
        "pure_imaginary"
    } else {
        "general_complex"
    }
}

// ---------------------------------------------------------------------------
// EELS
// ---------------------------------------------------------------------------

/// Amplitude on `|E_{−k}, k⟩` after one passage through an empty cavity:
/// `e^{−|α|²/2} α^k / √k!`.
pub fn eels_amplitude(alpha: Complex64, k: i64) -> Result<Complex64> {
    if k < 0 {
        return Err(Error::Domain(format!(
            "eels_amplitude: loss index must be >= 0, got {k}"
        )));
    }
    Ok(eels_log(alpha, k as u64).value())
}

fn eels_log(alpha: Complex64, k: u64) -> LogAmplitude {
    match ln_pow(alpha, k) {
        None => LogAmplitude::ZERO,
        Some(lp) => LogAmplitude {
            ln_abs: -0.5 * alpha.norm_sqr() + lp - 0.5 * ln_factorial(k),
            phase: arg_pow(alpha, k),
        },
    }
}

/// Closed ranges `(photon n, electron k)` for an EELS grid.
pub fn eels_ranges(alpha: Complex64) -> (AxisRange, AxisRange) {
    let top = suggest_range(alpha.norm_sqr());
    (AxisRange::new(0, top), AxisRange::new(-top, 0))
}

/// Grid over `(n, k)`; nonzero only on the diagonal `n = −k`.
pub fn eels_grid(alpha: Complex64, k_max: i64) -> Result<JointAmplitudeGrid> {
    let mut meta = Metadata::new();
    meta.insert("family".into(), "eels".into());
    meta.insert("alpha_re".into(), alpha.re.to_string());
    meta.insert("alpha_im".into(), alpha.im.to_string());
    meta.insert("alpha_convention".into(), convention_label(alpha).into());
    JointAmplitudeGrid::from_fn(
        Axis::new(AxisKind::PhotonNumber, 0, k_max),
        Axis::new(AxisKind::ElectronGain, -k_max, 0),
        meta,
        |n, k| {
            if n == -k {
                eels_amplitude(alpha, n)
            } else {
                Ok(c0())
            }
        },
    )
}

// ---------------------------------------------------------------------------
// PINEM
// ---------------------------------------------------------------------------

/// Coherent-state amplitude `e^{−|β|²/2} β^n / √n!` in log form.
fn coherent_log(beta: Complex64, n: u64) -> LogAmplitude {
    match ln_pow(beta, n) {
        None => LogAmplitude::ZERO,
        Some(lp) => LogAmplitude {
            ln_abs: -0.5 * beta.norm_sqr() + lp - 0.5 * ln_factorial(n),
            phase: arg_pow(beta, n),
        },
    }
}

/// `c_{n,k} = ⟨E_k, n| D(b̂α) |E_0, β⟩` in log form.
pub fn pinem_coefficient_log(alpha: Complex64, beta: Complex64, n: u64, k: i64) -> Result<LogAmplitude> {
    let before = n as i64 + k; // photons consumed from the coherent state
    if before < 0 {
        return Ok(LogAmplitude::ZERO);
    }
    let before = before as u64;
    if alpha.norm() == 0.0 {
        return Ok(if k == 0 {
            coherent_log(beta, n)
        } else {
            LogAmplitude::ZERO
        });
    }
    if beta.norm() == 0.0 {
        return Ok(if before == 0 {
            eels_log(alpha, n)
        } else {
            LogAmplitude::ZERO
        });
    }
    let Some(ln_beta) = ln_pow(beta, before) else {
        return Ok(LogAmplitude::ZERO);
    };
    let x = alpha.norm_sqr();
    let order = k.unsigned_abs();
    let (top, alpha_phase) = if k >= 0 {
        (before, arg_pow(-alpha.conj(), order))
    } else {
        (n, arg_pow(alpha, order))
    };
    let series = kernel_sum_log(top, order, x)?;
    if series.value.is_zero() {
        return Ok(LogAmplitude::ZERO);
    }
    let ln_abs = 0.5 * (x - beta.norm_sqr()) + order as f64 * alpha.norm().ln() + ln_beta
        - ln_factorial(before)
        - 0.5 * ln_factorial(n)
        + series.value.ln_abs;
    let mut phase = alpha_phase + arg_pow(beta, before);
    if series.value.sign < 0.0 {
        phase += PI;
    }
    Ok(LogAmplitude { ln_abs, phase })
}

/// Exact PINEM coefficient at any coupling strength.
pub fn pinem_coefficient(alpha: Complex64, beta: Complex64, n: u64, k: i64) -> Result<Complex64> {
    let c = pinem_coefficient_log(alpha, beta, n, k)?;
    if c.ln_abs > f64::MAX.ln() {
        return Err(Error::Overflow {
            log_magnitude: c.ln_abs,
        });
    }
    Ok(c.value())
}

/// Default `(n, k)` ranges covering the PINEM support.
pub fn pinem_ranges(alpha: Complex64, beta: Complex64) -> (AxisRange, AxisRange) {
    let a = alpha.norm();
    let b = beta.norm();
    let spread = 2.0 * a * (b + a) + a * a;
    let k_span = (spread + 10.0 * spread.sqrt() + 12.0).ceil() as i64;
    let n_top = suggest_range(b * b) + k_span;
    (AxisRange::new(0, n_top), AxisRange::new(-k_span, k_span))
}

/// PINEM grid with axis1 = photon number `n`, axis2 = electron index `k`.
pub fn pinem_grid(
    alpha: Complex64,
    beta: Complex64,
    n_range: AxisRange,
    k_range: AxisRange,
) -> Result<JointAmplitudeGrid> {
    if n_range.min < 0 {
        return Err(Error::Domain("photon range must start at n >= 0".into()));
    }
    let mut meta = Metadata::new();
    meta.insert("family".into(), "pinem".into());
    meta.insert("alpha_re".into(), alpha.re.to_string());
    meta.insert("alpha_im".into(), alpha.im.to_string());
    meta.insert("beta_re".into(), beta.re.to_string());
    meta.insert("beta_im".into(), beta.im.to_string());
    meta.insert("alpha_convention".into(), convention_label(alpha).into());
    JointAmplitudeGrid::from_fn(
        Axis {
            kind: AxisKind::PhotonNumber,
            range: n_range,
        },
        Axis {
            kind: AxisKind::ElectronGain,
            range: k_range,
        },
        meta,
        |n, k| pinem_coefficient(alpha, beta, n as u64, k),
    )
}

// ---------------------------------------------------------------------------
// Classical limit
// ---------------------------------------------------------------------------

/// Classical PINEM coupling `g` with the locking phase `arg(βg)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinemClassicalParams {
    pub g: Complex64,
    pub locking_phase: f64,
}

impl PinemClassicalParams {
    /// `g = α|β|`; the locking phase is `arg β + arg(−α*)`, which equals
    /// `arg(βg)` when `α = −α*`.
    pub fn from_alpha_beta(alpha: Complex64, beta: Complex64) -> Self {
        let beta_phase = if beta.norm() == 0.0 { 0.0 } else { beta.arg() };
        PinemClassicalParams {
            g: g_from_alpha_beta(alpha, beta),
            locking_phase: beta_phase + (-alpha.conj()).arg(),
        }
    }

    /// `c_k = e^{ik φ} J_k(2|g|)`.
    pub fn amplitude(&self, k: i64) -> Complex64 {
        let j = bessel_j_signed(k, 2.0 * self.g.norm());
        Complex64::from_polar(1.0, k as f64 * self.locking_phase) * j
    }
}

/// Classical amplitude for a real, positive coherent amplitude, where the
/// locking phase reduces to `arg(−g*)`.
pub fn pinem_classical_amplitude(g: Complex64, k: i64) -> Complex64 {
    PinemClassicalParams {
        g,
        locking_phase: (-g.conj()).arg(),
    }
    .amplitude(k)
}

/// `g = α|β|`.
pub fn g_from_alpha_beta(alpha: Complex64, beta: Complex64) -> Complex64 {
    alpha * beta.norm()
}

/// `α = g/|β|`.
pub fn alpha_from_g(g: Complex64, beta: Complex64) -> Result<Complex64> {
    if beta.norm() == 0.0 {
        return Err(Error::Domain("alpha_from_g: |beta| must be > 0".into()));
    }
    Ok(g / beta.norm())
}

// ---------------------------------------------------------------------------
// Two electrons
// ---------------------------------------------------------------------------

/// Amplitude that the first electron lost `s` quanta and the second gained
/// `k` (log form). Zero for `k > s`.
pub fn two_electron_coefficient_log(alpha1: Complex64, alpha2: Complex64, s: u64, k: i64) -> Result<LogAmplitude> {
    if k > s as i64 {
        return Ok(LogAmplitude::ZERO);
    }
    if alpha1.norm() == 0.0 {
        // empty cavity: only the second electron's loss survives
        return Ok(if s == 0 && k <= 0 {
            eels_log(alpha2, k.unsigned_abs())
        } else {
            LogAmplitude::ZERO
        });
    }
    let ln_a1 = s as f64 * alpha1.norm().ln();
    let order = k.unsigned_abs();
    let Some(ln_a2) = ln_pow(alpha2, order) else {
        return Ok(LogAmplitude::ZERO);
    };
    let x = alpha2.norm_sqr();
    let (top, a2_phase) = if k >= 0 {
        (s, arg_pow(-alpha2.conj(), order))
    } else {
        (s + order, arg_pow(alpha2, order))
    };
    let photons = (s as i64 - k) as u64;
    let series = kernel_sum_log(top, order, x)?;
    if series.value.is_zero() {
        return Ok(LogAmplitude::ZERO);
    }
    let ln_abs = -0.5 * alpha1.norm_sqr() + 0.5 * x + ln_a1 + ln_a2 - ln_factorial(s) - 0.5 * ln_factorial(photons)
        + series.value.ln_abs;
    let mut phase = arg_pow(alpha1, s) + a2_phase;
    if series.value.sign < 0.0 {
        phase += PI;
    }
    Ok(LogAmplitude { ln_abs, phase })
}

pub fn two_electron_coefficient(alpha1: Complex64, alpha2: Complex64, s: u64, k: i64) -> Result<Complex64> {
    let c = two_electron_coefficient_log(alpha1, alpha2, s, k)?;
    if c.ln_abs > f64::MAX.ln() {
        return Err(Error::Overflow {
            log_magnitude: c.ln_abs,
        });
    }
    Ok(c.value())
}

/// Default `(s, k)` ranges covering the two-electron support.
pub fn two_electron_ranges(alpha1: Complex64, alpha2: Complex64) -> (AxisRange, AxisRange) {
    let s_top = suggest_range(alpha1.norm_sqr());
    let a = alpha2.norm();
    let spread = 2.0 * a * (alpha1.norm() + a) + a * a;
    let loss = (spread + 10.0 * spread.sqrt() + 12.0).ceil() as i64;
    (AxisRange::new(0, s_top), AxisRange::new(-loss, s_top))
}

/// Grid with axis1 = first-electron loss `s`, axis2 = second-electron `k`.
pub fn two_electron_grid(
    alpha1: Complex64,
    alpha2: Complex64,
    s_range: AxisRange,
    k_range: AxisRange,
) -> Result<JointAmplitudeGrid> {
    if s_range.min < 0 {
        return Err(Error::Domain("loss range must start at s >= 0".into()));
    }
    let mut meta = Metadata::new();
    meta.insert("family".into(), "two_electron".into());
    meta.insert("alpha1_re".into(), alpha1.re.to_string());
    meta.insert("alpha1_im".into(), alpha1.im.to_string());
    meta.insert("alpha2_re".into(), alpha2.re.to_string());
    meta.insert("alpha2_im".into(), alpha2.im.to_string());
    meta.insert("alpha_convention".into(), convention_label(alpha2).into());
    JointAmplitudeGrid::from_fn(
        Axis {
            kind: AxisKind::Electron1Loss,
            range: s_range,
        },
        Axis {
            kind: AxisKind::ElectronGain,
            range: k_range,
        },
        meta,
        |s, k| two_electron_coefficient(alpha1, alpha2, s as u64, k),
    )
}

/// Separable approximation valid for `|α₁| ≫ 1 ≫ |α₂|`: Poisson amplitude
/// in `s` times a Bessel amplitude with `g = α₂√s`.
pub fn two_electron_strong_field_limit(alpha1: Complex64, alpha2: Complex64, s: u64, k: i64) -> Result<Complex64> {
    let poisson = eels_amplitude(alpha1, s as i64)?;
    let order = k.unsigned_abs();
    let g = alpha2.norm() * (s as f64).sqrt();
    let bessel = crate::special::bessel_j(order as u32, 2.0 * g);
    let phase = if k >= 0 {
        arg_pow(-alpha2.conj(), order)
    } else {
        arg_pow(alpha2, order)
    };
    Ok(poisson * (0.5 * alpha2.norm_sqr()).exp() * Complex64::from_polar(bessel, phase))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn im(v: f64) -> Complex64 {
        Complex64::new(0.0, v)
    }

    fn re(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn eels_trivial() {
        assert_eq!(eels_amplitude(re(0.0), 0).unwrap(), re(1.0));
        assert_eq!(eels_amplitude(re(0.0), 3).unwrap(), re(0.0));
        assert!(eels_amplitude(im(-1.0), -1).is_err());
        assert!((eels_amplitude(im(-1.0), 1).unwrap().norm() - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn eels_mean_loss_is_alpha_squared() {
        let alpha = im(-1.3);
        let (_, k_range) = eels_ranges(alpha);
        let grid = eels_grid(alpha, -k_range.min).unwrap();
        let m = grid.marginalize(crate::state::GridAxis::Second);
        assert!((m.mean() + alpha.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn pinem_without_coupling_is_coherent() {
        let beta = Complex64::new(1.5, 0.7);
        for n in 0..10u64 {
            let expect = coherent_log(beta, n).value();
            assert!((pinem_coefficient(re(0.0), beta, n, 0).unwrap() - expect).norm() < 1e-15);
            assert_eq!(pinem_coefficient(re(0.0), beta, n, 1).unwrap(), re(0.0));
        }
    }

    #[test]
    fn pinem_from_vacuum_is_eels() {
        let alpha = im(-0.9);
        for n in 0..12u64 {
            for k in -14..4 {
                let c = pinem_coefficient(alpha, re(0.0), n, k).unwrap();
                if k == -(n as i64) {
                    let e = eels_amplitude(alpha, n as i64).unwrap();
                    assert!((c - e).norm() < 1e-14, "n={n}");
                } else {
                    assert_eq!(c, re(0.0));
                }
            }
        }
    }

    #[test]
    fn pinem_below_vacuum_is_exact_zero() {
        assert_eq!(pinem_coefficient(im(-0.3), re(2.0), 2, -3).unwrap(), re(0.0));
    }

    #[test]
    fn pinem_large_photon_numbers_stay_finite() {
        let c = pinem_coefficient(im(-0.02), re(50.0), 2500, 1).unwrap();
        assert!(c.norm() > 0.0 && c.norm() < 1.0);
    }

    #[test]
    fn classical_trivial() {
        assert_eq!(pinem_classical_amplitude(re(0.0), 0), re(1.0));
        assert_eq!(pinem_classical_amplitude(re(0.0), 2).norm(), 0.0);
        let total: f64 = (-60..=60)
            .map(|k| pinem_classical_amplitude(im(-2.0), k).norm_sqr())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn g_alpha_round_trip() {
        assert_eq!(g_from_alpha_beta(re(0.0), re(3.0)), re(0.0));
        let alpha = im(-0.2);
        let beta = re(10.0);
        assert!((g_from_alpha_beta(alpha, beta).norm() - 2.0).abs() < 1e-15);
        let back = alpha_from_g(g_from_alpha_beta(alpha, beta), beta).unwrap();
        assert!((back - alpha).norm() < 1e-15);
        assert!(alpha_from_g(re(1.0), re(0.0)).is_err());
    }

    #[test]
    fn two_electron_gain_above_loss_is_zero() {
        assert_eq!(two_electron_coefficient(im(-1.0), im(-1.0), 2, 3).unwrap(), re(0.0));
    }

    #[test]
    fn two_electron_without_second_coupling() {
        let a1 = im(-1.2);
        for s in 0..8u64 {
            let c = two_electron_coefficient(a1, re(0.0), s, 0).unwrap();
            assert!((c - eels_amplitude(a1, s as i64).unwrap()).norm() < 1e-15);
            assert_eq!(two_electron_coefficient(a1, re(0.0), s, -1).unwrap(), re(0.0));
        }
    }

    #[test]
    fn strong_field_limit_trivial() {
        let a1 = im(-4.0);
        for s in [0u64, 5, 16] {
            let c = two_electron_strong_field_limit(a1, re(0.0), s, 0).unwrap();
            assert!((c - eels_amplitude(a1, s as i64).unwrap()).norm() < 1e-15);
            assert_eq!(two_electron_strong_field_limit(a1, re(0.0), s, 2).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn log_amplitude_flags_underflow() {
        let c = pinem_coefficient_log(im(-0.5), re(3.0), 4000, 0).unwrap();
        assert!(c.underflows());
        assert_eq!(c.value(), re(0.0));
    }
}
