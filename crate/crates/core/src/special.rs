//! Special functions: complex log-gamma from the Stirling series after an
//! upward shift, with reflection for `Re z < 1/2`, and the Hurwitz zeta
//! function at integer order used for determinant tail sums.
//!
//! The branch of the returned logarithm is not the principal branch of
//! `ln Γ`; only `exp(ln_gamma(z))` and differences modulo `2πi` are
//! meaningful. That is all the Q-function prefactors need.

use std::f64::consts::PI;

use crate::C64;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln Γ(z)` for complex `z` away from the poles at non-positive integers.
pub fn ln_gamma(z: C64) -> C64 {
    if z.re < 0.5 {
        // Γ(z) Γ(1 - z) = π / sin(πz)
        C64::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma_stirling(C64::new(1.0, 0.0) - z)
    } else {
        ln_gamma_stirling(z)
    }
}

/// `Γ(z)`; overflows for large arguments, prefer [`ln_gamma`] in products.
pub fn gamma(z: C64) -> C64 {
    ln_gamma(z).exp()
}

/// `1 / Γ(z)`, entire; exactly zero at the non-positive integers.
pub fn recip_gamma(z: C64) -> C64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0 {
        return C64::new(0.0, 0.0);
    }
    (-ln_gamma(z)).exp()
}

/// `B_2k / (2k (2k − 1))` for `k = 1..=8`.
const STIRLING_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// Stirling series for `Re z ≥ 1/2`, shifted so that `|z + m| ≥ 16`; the
/// neglected term is then below `1e-20`.
fn ln_gamma_stirling(z: C64) -> C64 {
    let mut w = z;
    let mut prod = C64::new(1.0, 0.0);
    while w.norm() < 16.0 {
        prod *= w;
        w += 1.0;
    }
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = C64::new(0.0, 0.0);
    let mut p = inv;
    for &c in &STIRLING_COEFFS {
        series += p * c;
        p *= inv2;
    }
    (w - 0.5) * w.ln() - w + LN_SQRT_2PI + series - prod.ln()
}

/// `ln sin(πz)` without overflow for large `|Im z|`.
fn ln_sin_pi(z: C64) -> C64 {
    let i = C64::new(0.0, 1.0);
    if z.im > 8.0 {
        // sin(πz) = e^{-iπz} (1 - e^{2iπz}) / (-2i)
        -i * PI * z + (C64::new(1.0, 0.0) - (2.0 * i * PI * z).exp()).ln() - (-2.0 * i).ln()
    } else if z.im < -8.0 {
        // sin(πz) = e^{iπz} (1 - e^{-2iπz}) / (2i)
        i * PI * z + (C64::new(1.0, 0.0) - (-2.0 * i * PI * z).exp()).ln() - (2.0 * i).ln()
    } else {
        // reduce by the nearest integer so sin(πz) keeps full relative
        // accuracy next to the zeros
        let k = z.re.round();
        let sign = if (k as i64) % 2 == 0 { 1.0 } else { -1.0 };
        (((z - k) * PI).sin() * sign).ln()
    }
}

/// Bernoulli numbers `B_2, B_4, …, B_16`.
const BERNOULLI_EVEN: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Hurwitz zeta `ζ(s, q) = Σ_{k≥0} (q + k)^{-s}` for integer `s ≥ 2`, `q > 0`.
///
/// Direct summation until `q + k ≥ 20`, then Euler–Maclaurin with eight
/// Bernoulli corrections.
pub fn hurwitz_zeta(s: u32, q: f64) -> f64 {
    debug_assert!(s >= 2 && q > 0.0);
    let sf = s as f64;
    let mut acc = 0.0;
    let mut x = q;
    let cutoff = 20f64.max(sf);
    while x < cutoff {
        acc += x.powf(-sf);
        x += 1.0;
    }
    let base = x.powf(-sf);
    acc += x * base / (sf - 1.0) + 0.5 * base;
    // Σ_j B_2j/(2j)! · s(s+1)…(s+2j-2) · x^{-s-2j+1}
    let mut rising = sf; // s (s+1) … (s + 2j - 2)
    let mut fact = 2.0; // (2j)!
    let mut pow = base / x; // x^{-s-2j+1}
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = b / fact * rising * pow;
        acc += term;
        if term.abs() < 1e-18 * acc.abs() {
            break;
        }
        let j2 = 2.0 * (j as f64 + 1.0);
        rising *= (sf + j2 - 1.0) * (sf + j2);
        fact *= (j2 + 1.0) * (j2 + 2.0);
        pow /= x * x;
    }
    acc
}
