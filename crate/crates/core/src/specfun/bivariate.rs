//! The bivariate Meijer-G integral
//!
//! ```text
//! I(x, y) = 1/(2πi)^2 ∫∫ Γ(a0 - t - u) Γ(u) Γ(1 - u) x^{-u}
//!           Π Γ(κ2_i + t) / Π Γ(κ1_l + t) y^{-t} du dt,
//! ```
//!
//! i.e. `G^{1,0:1,1:3r+1,0}_{1,0:1,1:r,3r+1}[a0 | 0; 0 | κ1; κ2 | x, y]`,
//! evaluated as a double vertical-line integral with a trapezoid rule on a
//! common grid.

use num_complex::Complex64;

use super::gamma::ln_gamma_complex;
use crate::error::{invalid, Error, Result};
use crate::sum::CompensatedSum;

const INITIAL_HALF_LENGTH: f64 = 40.0;
const MAX_HALF_LENGTH: f64 = 640.0;
const TAIL_REL_TOL: f64 = 1e-8;
const STEP_REL_TOL: f64 = 1e-8;
const MAX_HALVINGS: usize = 6;
const MAX_GRID: usize = 20_000;

/// Parameters and arguments of one bivariate G instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateGSpec {
    outer_top: f64,
    kappa1: Vec<f64>,
    kappa2: Vec<f64>,
    x: f64,
    y: f64,
    abscissas: Option<(f64, f64)>,
}

/// Result of [`bivariate_g`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateValue {
    pub value: f64,
    /// Estimated absolute error.
    pub error_estimate: f64,
    /// Contour abscissas `(Re t, Re u)` actually used.
    pub abscissas: (f64, f64),
    /// Final trapezoid step and half-length of the truncated contours.
    pub step: f64,
    pub half_length: f64,
    pub evaluations: usize,
}

impl BivariateGSpec {
    /// `outer_top` is the single top parameter of the outer block (`k - j + 1`
    /// in the capacity formula); the inner block has `r = kappa1.len()` top
    /// and `3r + 1` bottom parameters.
    pub fn new(outer_top: f64, kappa1: Vec<f64>, kappa2: Vec<f64>, x: f64, y: f64) -> Result<Self> {
        if kappa1.is_empty() || kappa2.len() != 3 * kappa1.len() + 1 {
            return invalid(format!(
                "inner block must have r top and 3r+1 bottom parameters, got {} and {}",
                kappa1.len(),
                kappa2.len()
            ));
        }
        if !(x > 0.0 && x.is_finite() && y > 0.0 && y.is_finite()) {
            return invalid(format!(
                "bivariate G arguments must be positive, got ({x}, {y})"
            ));
        }
        if !outer_top.is_finite() || kappa1.iter().chain(&kappa2).any(|v| !v.is_finite()) {
            return invalid("bivariate G parameters must be finite");
        }
        let spec = Self {
            outer_top,
            kappa1,
            kappa2,
            x,
            y,
            abscissas: None,
        };
        let (t_lo, a0) = spec.strip();
        if !(a0 - t_lo > 0.0) {
            return invalid(format!(
                "no admissible contour: outer parameter {a0} does not exceed the inner pole edge {t_lo}"
            ));
        }
        Ok(spec)
    }

    /// Places the contours at `Re t = c_t`, `Re u = c_u` instead of the
    /// automatic choice. Rejected unless `c_t > -min κ2`, `0 < c_u < 1`
    /// and `c_t + c_u < outer_top`.
    pub fn with_abscissas(mut self, c_t: f64, c_u: f64) -> Result<Self> {
        let (t_lo, a0) = self.strip();
        if !(c_t > t_lo && c_u > 0.0 && c_u < 1.0 && c_t + c_u < a0) {
            return invalid(format!(
                "abscissas ({c_t}, {c_u}) outside the admissible region t > {t_lo}, 0 < u < 1, t + u < {a0}"
            ));
        }
        self.abscissas = Some((c_t, c_u));
        Ok(self)
    }

    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }

    /// Left edge of the inner pole strip and the outer parameter.
    pub fn strip(&self) -> (f64, f64) {
        let t_lo = self
            .kappa2
            .iter()
            .map(|k| -k)
            .fold(f64::NEG_INFINITY, f64::max);
        (t_lo, self.outer_top)
    }

    /// Distance from `(c_t, c_u)` to the nearest pole line.
    fn clearance(&self, c_t: f64, c_u: f64) -> f64 {
        let (t_lo, a0) = self.strip();
        (c_t - t_lo).min(c_u).min(1.0 - c_u).min(a0 - c_t - c_u)
    }

    fn ln_inner(&self, t: Complex64) -> Complex64 {
        let mut v = -t * self.y.ln();
        for k in &self.kappa2 {
            v += ln_gamma_complex(t + k);
        }
        for k in &self.kappa1 {
            v -= ln_gamma_complex(t + k);
        }
        v
    }

    fn ln_middle(&self, u: Complex64) -> Complex64 {
        ln_gamma_complex(u) + ln_gamma_complex(1.0 - u) - u * self.x.ln()
    }

    /// Automatic abscissas: the point of a coarse grid over the admissible
    /// triangle (kept clear of the pole lines) where the integrand at zero
    /// imaginary part is smallest.
    fn auto_abscissas(&self) -> (f64, f64) {
        let (t_lo, a0) = self.strip();
        let width = a0 - t_lo;
        let margin = (0.25 * width).min(0.25);
        let mut best = (
            t_lo + margin,
            margin.max((0.5f64).min(width - 2.0 * margin)),
        );
        if self.clearance(best.0, best.1) < margin * (1.0 - 1e-9) {
            best = (t_lo + width / 3.0, width / 3.0);
        }
        let mut best_val = f64::INFINITY;
        const STEPS: usize = 24;
        let t_hi = a0 - 2.0 * margin;
        for it in 0..=STEPS {
            let c_t = t_lo + margin + (t_hi - t_lo - margin).max(0.0) * it as f64 / STEPS as f64;
            for iu in 0..=STEPS {
                let c_u = margin + (1.0 - 2.0 * margin) * iu as f64 / STEPS as f64;
                if self.clearance(c_t, c_u) < margin * (1.0 - 1e-9) {
                    continue;
                }
                let v = self.ln_inner(Complex64::new(c_t, 0.0)).re
                    + self.ln_middle(Complex64::new(c_u, 0.0)).re
                    + ln_gamma_complex(Complex64::new(a0 - c_t - c_u, 0.0)).re;
                if v < best_val {
                    best_val = v;
                    best = (c_t, c_u);
                }
            }
        }
        best
    }
}

/// Integrand factors sampled on `τ = i h`, `i = -n..=n`, scaled by their
/// value at the real axis.
struct Grid {
    p: Vec<Complex64>,
    q: Vec<Complex64>,
    r: Vec<Complex64>,
    ln_scale: f64,
}

fn sample_grid(spec: &BivariateGSpec, c_t: f64, c_u: f64, h: f64, n: usize) -> Result<Grid> {
    let a_rest = spec.outer_top - c_t - c_u;
    let p0 = spec.ln_inner(Complex64::new(c_t, 0.0)).re;
    let q0 = spec.ln_middle(Complex64::new(c_u, 0.0)).re;
    let r0 = ln_gamma_complex(Complex64::new(a_rest, 0.0)).re;
    let len = 2 * n + 1;
    let mut p = Vec::with_capacity(len);
    let mut q = Vec::with_capacity(len);
    for i in 0..len {
        let tau = (i as f64 - n as f64) * h;
        p.push((spec.ln_inner(Complex64::new(c_t, tau)) - p0).exp());
        q.push((spec.ln_middle(Complex64::new(c_u, tau)) - q0).exp());
    }
    // R is needed on τ + υ, i.e. indices -2n..=2n.
    let mut r = Vec::with_capacity(2 * len - 1);
    for i in 0..(2 * len - 1) {
        let sigma = (i as f64 - 2.0 * n as f64) * h;
        r.push((ln_gamma_complex(Complex64::new(a_rest, -sigma)) - r0).exp());
    }
    if p.iter()
        .chain(&q)
        .chain(&r)
        .any(|v| !(v.re.is_finite() && v.im.is_finite()))
    {
        return Err(Error::Convergence {
            what: "bivariate G integrand (overflow)",
            partial: f64::NAN,
            terms: 0,
        });
    }
    Ok(Grid {
        p,
        q,
        r,
        ln_scale: p0 + q0 + r0,
    })
}

struct GridSum {
    value: f64,
    l1: f64,
    outer_band: f64,
}

/// `h^2/(4π^2) Σ_i Σ_j Re(P_i Q_j R_{i+j})` in units of `exp(ln_scale)`.
fn grid_sum(g: &Grid, h: f64, band: usize) -> GridSum {
    let len = g.p.len();
    let n = (len - 1) / 2;
    let mut total = CompensatedSum::new();
    let mut l1 = 0.0;
    let mut outer = 0.0;
    for (i, pi) in g.p.iter().enumerate() {
        let mut row = Complex64::new(0.0, 0.0);
        let mut row_abs = 0.0;
        let mut row_outer = 0.0;
        let ii = i.abs_diff(n);
        for (j, qj) in g.q.iter().enumerate() {
            let term = qj * g.r[i + j];
            row += term;
            let a = term.norm();
            row_abs += a;
            if ii + band > n || j.abs_diff(n) + band > n {
                row_outer += a;
            }
        }
        total.add((pi * row).re);
        let pn = pi.norm();
        l1 += pn * row_abs;
        outer += pn * row_outer;
    }
    let w = h * h / (4.0 * std::f64::consts::PI * std::f64::consts::PI);
    GridSum {
        value: total.value() * w,
        l1: l1 * w,
        outer_band: outer * w,
    }
}

/// Evaluates the bivariate G integral.
pub fn bivariate_g(spec: &BivariateGSpec) -> Result<BivariateValue> {
    let (c_t, c_u) = spec.abscissas.unwrap_or_else(|| spec.auto_abscissas());
    let clearance = spec.clearance(c_t, c_u);
    let mut h = (0.4 * clearance).min(0.2);
    let mut half_length = INITIAL_HALF_LENGTH;
    let mut evaluations = 0;

    let mut eval = |h: f64, half_length: f64| -> Result<(f64, GridSum)> {
        let n = (half_length / h).ceil() as usize;
        if n > MAX_GRID {
            return Err(Error::Convergence {
                what: "bivariate G (grid too fine)",
                partial: f64::NAN,
                terms: n,
            });
        }
        let grid = sample_grid(spec, c_t, c_u, h, n)?;
        evaluations += 4 * n + 4 * n + 1;
        let band = ((1.0 / h).ceil() as usize).max(1);
        Ok((grid.ln_scale, grid_sum(&grid, h, band)))
    };

    // Grow the contours until the outermost unit band is negligible.
    let (mut ln_scale, mut current) = eval(h, half_length)?;
    while current.outer_band > TAIL_REL_TOL * current.value.abs() {
        if half_length >= MAX_HALF_LENGTH {
            return Err(Error::Convergence {
                what: "bivariate G (contour tail)",
                partial: current.value * ln_scale.exp(),
                terms: evaluations,
            });
        }
        half_length *= 2.0;
        (ln_scale, current) = eval(h, half_length)?;
    }

    // Halve the step until successive trapezoid sums agree.
    let mut change = f64::INFINITY;
    for _ in 0..MAX_HALVINGS {
        let (ls, refined) = eval(0.5 * h, half_length)?;
        h *= 0.5;
        change = (refined.value - current.value).abs();
        ln_scale = ls;
        current = refined;
        if change <= STEP_REL_TOL * current.value.abs() {
            break;
        }
    }
    if !(change <= STEP_REL_TOL * current.value.abs()) {
        return Err(Error::Convergence {
            what: "bivariate G (step refinement)",
            partial: current.value * ln_scale.exp(),
            terms: evaluations,
        });
    }
    let scale = ln_scale.exp();
    let err = change + current.outer_band + 16.0 * f64::EPSILON * current.l1;
    Ok(BivariateValue {
        value: current.value * scale,
        error_estimate: err * scale,
        abscissas: (c_t, c_u),
        step: h,
        half_length,
        evaluations,
    })
}
