//! Gamma-function helpers: signed log-gamma, reciprocal gamma, and a
//! complex log-gamma for the Mellin-Barnes contour integrals.

use std::f64::consts::PI;

use num_complex::Complex64;

/// `ln(2 pi) / 2`.
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_406;

/// True when `x` is a pole of the gamma function (0, -1, -2, ...).
#[inline]
pub fn is_gamma_pole(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// `ln|Γ(x)|` and the sign of `Γ(x)`. At a pole the log is `+inf` and the
/// sign is reported as `+1`.
#[inline]
pub fn ln_gamma_signed(x: f64) -> (f64, f64) {
    if is_gamma_pole(x) {
        return (f64::INFINITY, 1.0);
    }
    let (lg, sign) = libm::lgamma_r(x);
    (lg, if sign < 0 { -1.0 } else { 1.0 })
}

pub fn ln_gamma(x: f64) -> f64 {
    ln_gamma_signed(x).0
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `1 / Γ(x)`, entire in `x`: exactly zero at the poles of Γ.
pub fn reciprocal_gamma(x: f64) -> f64 {
    if is_gamma_pole(x) {
        return 0.0;
    }
    if x < 170.0 {
        1.0 / libm::tgamma(x)
    } else {
        let (lg, sign) = ln_gamma_signed(x);
        sign * (-lg).exp()
    }
}

// B_{2k} / (2k (2k - 1)) for k = 1..8.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

const STIRLING_MIN_ABS: f64 = 15.0;

/// `ln Γ(z)` for complex `z` off the poles, modulo `2πi`.
///
/// Only `exp` of the result is meaningful to callers, so no effort is made
/// to stay on the principal branch of the log-gamma function.
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Reflection: Γ(z) Γ(1 - z) = π / sin(πz).
        return Complex64::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma_complex(1.0 - z);
    }
    let mut w = z;
    let mut shift = Complex64::new(1.0, 0.0);
    while w.norm() < STIRLING_MIN_ABS {
        shift *= w;
        w += 1.0;
    }
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    for c in STIRLING {
        series += pow * c;
        pow *= inv2;
    }
    let stirling = (w - 0.5) * w.ln() - w + HALF_LN_2PI + series;
    if shift == Complex64::new(1.0, 0.0) {
        stirling
    } else {
        stirling - shift.ln()
    }
}

/// `ln sin(πz)` computed without overflow for large `|Im z|`.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let w = z * PI;
    if w.im.abs() < 20.0 {
        return w.sin().ln();
    }
    // For Im w > 0: sin w = (i/2) e^{-iw} (1 - e^{2iw}).
    let flip = w.im < 0.0;
    let w = if flip { w.conj() } else { w };
    let i = Complex64::i();
    let small = (2.0 * i * w).exp();
    let val = -i * w + Complex64::new(0.5f64.ln(), PI / 2.0) + (1.0 - small).ln();
    if flip {
        val.conj()
    } else {
        val
    }
}

/// `Γ(z)` as a complex number (may overflow for large real parts).
pub fn gamma_complex(z: Complex64) -> Complex64 {
    ln_gamma_complex(z).exp()
}
