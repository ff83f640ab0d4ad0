//! Special functions and the alternating factorial kernel shared by every
//! closed-form amplitude.
//!
//! Everything here works on real arguments. Factorial ratios are carried as
//! `ln|x|` plus a sign so that callers can assemble amplitudes with photon
//! numbers in the thousands without overflow.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// A real number stored as `sign * exp(ln_abs)`.
///
/// `sign` is one of `-1.0`, `0.0`, `1.0`; zero is `(0.0, -inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub ln_abs: f64,
    pub sign: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        ln_abs: f64::NEG_INFINITY,
        sign: 0.0,
    };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            SignedLog {
                ln_abs: x.abs().ln(),
                sign: x.signum(),
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0.0
    }

    /// Multiply by `exp(ln_factor)`.
    pub fn scale(self, ln_factor: f64) -> Self {
        if self.is_zero() {
            self
        } else {
            SignedLog {
                ln_abs: self.ln_abs + ln_factor,
                sign: self.sign,
            }
        }
    }

    /// Plain value; overflows to `±inf` and underflows to zero like `exp`.
    pub fn value(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }
}

/// Output of a series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesResult {
    pub value: f64,
    pub terms_used: usize,
    /// Upper bound on the magnitude of the neglected tail (zero for
    /// terminating sums).
    pub tail_bound: f64,
}

/// Log-domain counterpart of [`SeriesResult`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesLogResult {
    pub value: SignedLog,
    pub terms_used: usize,
    pub tail_bound: f64,
}

// ---------------------------------------------------------------------------
// Gamma function
// ---------------------------------------------------------------------------

fn ln_factorial_table() -> &'static [f64; 171] {
    static TABLE: OnceLock<[f64; 171]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; 171];
        let mut fact = 1.0f64;
        for (i, slot) in t.iter_mut().enumerate().skip(1) {
            fact *= i as f64;
            *slot = fact.ln();
        }
        t
    })
}

/// `ln(n!)`, exact table lookup up to 170.
pub fn ln_factorial(n: u64) -> f64 {
    if n <= 170 {
        ln_factorial_table()[n as usize]
    } else {
        stirling_ln_gamma(n as f64 + 1.0)
    }
}

fn stirling_ln_gamma(x: f64) -> f64 {
    // Bernoulli numbers B_{2k} / (2k (2k-1)), k = 1..8
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut corr = 0.0;
    let mut p = inv;
    for c in C {
        corr += c * p;
        p *= inv2;
    }
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + corr
}

/// Natural logarithm of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    if x.fract() == 0.0 && x <= 171.0 {
        return Ok(ln_factorial(x as u64 - 1));
    }
    if x >= 10.0 {
        return Ok(stirling_ln_gamma(x));
    }
    // shift into the asymptotic region: Γ(x) = Γ(x+m) / (x (x+1) ... (x+m-1))
    let m = (10.0 - x).ceil() as usize;
    let mut prod = 1.0;
    for i in 0..m {
        prod *= x + i as f64;
    }
    Ok(stirling_ln_gamma(x + m as f64) - prod.ln())
}

// ---------------------------------------------------------------------------
// Bessel functions
// ---------------------------------------------------------------------------

/// `J_0(x) ..= J_{n_max}(x)` by Miller's backward recurrence, normalised
/// with `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_seq(n_max: u32, x: f64) -> Vec<f64> {
    let len = n_max as usize + 1;
    if x == 0.0 {
        let mut out = vec![0.0; len];
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let big = (n_max as f64).max(ax);
    let mut start = (big + 25.0 + (50.0 * big).sqrt()).ceil() as usize;
    start += start % 2;

    let mut out = vec![0.0; len];
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-280; // J_k
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        let idx = k - 1;
        if idx < len {
            out[idx] = cur;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    norm += cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
    if x < 0.0 {
        for (n, v) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// Bessel function of the first kind, integer order.
pub fn bessel_j(order: u32, x: f64) -> f64 {
    bessel_j_seq(order, x)[order as usize]
}

/// `J_n` for any integer order, using `J_{-n} = (-1)^n J_n`.
pub fn bessel_j_signed(order: i64, x: f64) -> f64 {
    let v = bessel_j(order.unsigned_abs() as u32, x);
    if order < 0 && order % 2 != 0 {
        -v
    } else {
        v
    }
}

pub fn bessel_j_prime(order: u32, x: f64) -> f64 {
    let seq = bessel_j_seq(order + 1, x);
    if order == 0 {
        -seq[1]
    } else {
        0.5 * (seq[order as usize - 1] - seq[order as usize + 1])
    }
}

/// `K_0` and `K_1` from the ascending series (small `x`).
fn k01_series(x: f64) -> (f64, f64) {
    let y = 0.25 * x * x;
    let lnh = (0.5 * x).ln();
    // I0, I1 and the digamma-weighted sums
    let mut term0 = 1.0; // y^k / (k!)^2
    let mut term1 = 1.0; // y^k / (k! (k+1)!)
    let mut i0 = 0.0;
    let mut i1 = 0.0;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut harmonic = 0.0; // H_k
    for k in 0..200 {
        let kf = k as f64;
        if k > 0 {
            term0 *= y / (kf * kf);
            term1 *= y / (kf * (kf + 1.0));
            harmonic += 1.0 / kf;
        }
        i0 += term0;
        i1 += term1;
        s0 += term0 * harmonic;
        // ψ(k+1) + ψ(k+2) = 2 H_k + 1/(k+1) - 2γ
        s1 += term1 * (2.0 * harmonic + 1.0 / (kf + 1.0) - 2.0 * EULER_GAMMA);
        if term0 < 1e-18 * i0 && term1 < 1e-18 * i1 {
            break;
        }
    }
    let i1 = 0.5 * x * i1;
    let k0 = -(lnh + EULER_GAMMA) * i0 + s0;
    let k1 = 1.0 / x + lnh * i1 - 0.25 * x * s1;
    (k0, k1)
}

/// `e^x K_0(x)` and `e^x K_1(x)` from Steed's continued fraction (`x ≥ 2`).
fn k01_scaled_cf(x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    let h = a1 * h;
    let k0 = (PI / (2.0 * x)).sqrt() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

/// `e^x K_n(x)` for `n = 0..=n_max`.
pub fn bessel_k_scaled_seq(n_max: u32, x: f64) -> Result<Vec<f64>> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("bessel_k requires x > 0, got {x}")));
    }
    let (k0, k1) = if x <= 2.0 {
        let (k0, k1) = k01_series(x);
        (k0 * x.exp(), k1 * x.exp())
    } else {
        k01_scaled_cf(x)
    };
    let mut out = Vec::with_capacity(n_max as usize + 1);
    out.push(k0);
    if n_max >= 1 {
        out.push(k1);
    }
    for n in 1..n_max as usize {
        let next = out[n - 1] + 2.0 * n as f64 / x * out[n];
        out.push(next);
    }
    Ok(out)
}

pub fn bessel_k_scaled(order: u32, x: f64) -> Result<f64> {
    Ok(bessel_k_scaled_seq(order, x)?[order as usize])
}

/// `K_n(x)` together with an underflow flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselK {
    pub value: f64,
    /// `e^x K_n(x)`, always representable in the domain.
    pub scaled: f64,
    /// Set when `K_n(x)` itself is below the normal f64 range.
    pub underflow: bool,
}

pub fn bessel_k_checked(order: u32, x: f64) -> Result<BesselK> {
    let scaled = bessel_k_scaled(order, x)?;
    let value = scaled * (-x).exp();
    let underflow = value == 0.0 || (value != 0.0 && !value.is_normal());
    Ok(BesselK {
        value: if underflow { 0.0 } else { value },
        scaled,
        underflow,
    })
}

/// Modified Bessel function of the second kind, integer order.
pub fn bessel_k(order: u32, x: f64) -> Result<f64> {
    Ok(bessel_k_checked(order, x)?.value)
}

/// `K_n'(x) = -(K_{n-1} + K_{n+1}) / 2`, with `K_0' = -K_1`.
pub fn bessel_k_prime(order: u32, x: f64) -> Result<f64> {
    let seq = bessel_k_scaled_seq(order + 1, x)?;
    let e = (-x).exp();
    Ok(if order == 0 {
        -seq[1] * e
    } else {
        -0.5 * (seq[order as usize - 1] + seq[order as usize + 1]) * e
    })
}

/// `K_n'(x) / K_n(x)`, free of under/overflow.
pub fn bessel_k_log_derivative(order: u32, x: f64) -> Result<f64> {
    let seq = bessel_k_scaled_seq(order + 1, x)?;
    let n = order as usize;
    let km1 = if n == 0 { seq[1] } else { seq[n - 1] };
    Ok(if n == 0 {
        -seq[1] / seq[0]
    } else {
        -0.5 * (km1 + seq[n + 1]) / seq[n]
    })
}

// ---------------------------------------------------------------------------
// Laguerre polynomials and the alternating kernel
// ---------------------------------------------------------------------------

/// Generalised Laguerre polynomial `L_m^{(k)}(x)` by the three-term
/// recurrence in the degree, rescaled to stay in range.
pub fn laguerre_log(m: u64, k: u64, x: f64) -> SignedLog {
    const RESCALE: f64 = 1e200;
    let kf = k as f64;
    let mut prev = 1.0; // L_0
    if m == 0 {
        return SignedLog::from_f64(prev);
    }
    let mut cur = 1.0 + kf - x; // L_1
    let mut ln_scale = 0.0;
    for j in 1..m {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + kf - x) * cur - (jf + kf) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            ln_scale += RESCALE.ln();
        }
    }
    SignedLog::from_f64(cur).scale(ln_scale)
}

/// Log-domain kernel `S(N, k, x) = Σ_ℓ (−x)^ℓ (N+ℓ)! / ((k+ℓ)! ℓ!)`.
///
/// `S = (N!/k!) ₁F₁(N+1; k+1; −x) = (N!/k!) e^{−x} ₁F₁(k−N; k+1; x)`.
/// For `N ≥ k` the transformed series terminates,
/// `S = e^{−x} (N−k)! L_{N−k}^{(k)}(x)`; for `N < k` all of its terms are
/// positive and it is summed as is.
pub fn kernel_sum_log(n: u64, k: u64, x: f64) -> Result<SeriesLogResult> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("kernel_sum requires x >= 0, got {x}")));
    }
    if n >= k {
        let m = n - k;
        let lag = laguerre_log(m, k, x);
        Ok(SeriesLogResult {
            value: lag.scale(ln_factorial(m) - x),
            terms_used: m as usize + 1,
            tail_bound: 0.0,
        })
    } else {
        kummer_positive_log(n, k, x)
    }
}

/// `(N!/k!) e^{−x} Σ_ℓ (k−N)_ℓ / (k+1)_ℓ · x^ℓ/ℓ!` for `N < k`.
fn kummer_positive_log(n: u64, k: u64, x: f64) -> Result<SeriesLogResult> {
    const MAX_TERMS: usize = 1_000_000;
    const RESCALE: f64 = 1e250;
    let a = (k - n) as f64;
    let b = (k + 1) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut ln_scale = 0.0;
    let mut l = 0usize;
    let mut ratio;
    loop {
        let lf = l as f64;
        ratio = x * (a + lf) / ((b + lf) * (lf + 1.0));
        term *= ratio;
        sum += term;
        l += 1;
        if sum > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            ln_scale += RESCALE.ln();
        }
        if ratio < 0.5 && term <= 1e-17 * sum {
            break;
        }
        if l >= MAX_TERMS {
            return Err(Error::NonConvergence { terms: MAX_TERMS });
        }
    }
    // remaining terms shrink at least geometrically with the last ratio
    let tail = term * ratio / (1.0 - ratio);
    let ln_pref = ln_factorial(n) - ln_factorial(k) - x + ln_scale;
    Ok(SeriesLogResult {
        value: SignedLog::from_f64(sum).scale(ln_pref),
        terms_used: l + 1,
        tail_bound: tail / sum,
    })
}

/// Plain-valued [`kernel_sum_log`]; signals overflow instead of returning inf.
pub fn kernel_sum(n: u64, k: u64, x: f64) -> Result<SeriesResult> {
    let r = kernel_sum_log(n, k, x)?;
    if r.value.ln_abs > f64::MAX.ln() {
        return Err(Error::Overflow {
            log_magnitude: r.value.ln_abs,
        });
    }
    Ok(SeriesResult {
        value: r.value.value(),
        terms_used: r.terms_used,
        tail_bound: r.tail_bound,
    })
}

/// Direct summation of the alternating kernel in double-double arithmetic.
///
/// Terms are built by exact integer ratios from `t_0 = 1` and the common
/// factor `N!/k!` is applied in the log domain at the end. Summation stops
/// once three consecutive terms past the peak fall below `1e-17` of the
/// running sum. Cancellation limits this to moderate `x` (roughly `x < 40`).
pub fn kernel_sum_direct_log(n: u64, k: u64, x: f64) -> Result<SeriesLogResult> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("kernel_sum requires x >= 0, got {x}")));
    }
    const MAX_TERMS: usize = 200_000;
    let prefactor = ln_factorial(n) - ln_factorial(k);
    if x == 0.0 {
        return Ok(SeriesLogResult {
            value: SignedLog::from_f64(1.0).scale(prefactor),
            terms_used: 1,
            tail_bound: 0.0,
        });
    }
    let mut term = Dd::from(1.0);
    let mut sum = Dd::from(1.0);
    let mut small_run = 0;
    let mut l = 0u64;
    let mut last_ratio;
    loop {
        let num = (n + l + 1) as f64;
        let den = ((k + l + 1) as f64) * ((l + 1) as f64);
        last_ratio = x * num / den;
        term = term.mul_f64(-x).mul_f64(num).div_f64(den);
        sum = sum.add(term);
        l += 1;
        if term.hi == 0.0 || (term.hi.abs() < 1e-17 * sum.hi.abs() && last_ratio < 1.0) {
            small_run += 1;
            if small_run >= 3 {
                break;
            }
        } else {
            small_run = 0;
        }
        if l as usize >= MAX_TERMS {
            return Err(Error::NonConvergence { terms: MAX_TERMS });
        }
    }
    let next = term.hi.abs() * last_ratio;
    let tail_bound = if last_ratio < 1.0 {
        next / (1.0 - last_ratio)
    } else {
        f64::INFINITY
    };
    let total = sum.hi + sum.lo;
    Ok(SeriesLogResult {
        value: SignedLog::from_f64(total).scale(prefactor),
        terms_used: l as usize + 1,
        tail_bound: tail_bound * prefactor.exp(),
    })
}

pub fn kernel_sum_direct(n: u64, k: u64, x: f64) -> Result<SeriesResult> {
    let r = kernel_sum_direct_log(n, k, x)?;
    if r.value.ln_abs > f64::MAX.ln() {
        return Err(Error::Overflow {
            log_magnitude: r.value.ln_abs,
        });
    }
    Ok(SeriesResult {
        value: r.value.value(),
        terms_used: r.terms_used,
        tail_bound: r.tail_bound,
    })
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    fn mul_f64(self, b: f64) -> Dd {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Dd { hi, lo }
    }

    fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        // remainder self - q1 * b, exactly
        let p = q1 * b;
        let pe = q1.mul_add(b, -p);
        let (s, e) = two_sum(self.hi, -p);
        let r = s + (e - pe + self.lo);
        let q2 = r / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }
    }
}
