//! The two hops of the link: a Nakagami-m RF hop and a Gamma-Gamma FSO hop
//! with pointing errors, their derived constants, and single-hop SNR laws.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::specfun::gamma::ln_gamma;
use crate::specfun::{meijer_g, MeijerGSpec};

/// Largest supported Nakagami parameter; the closed forms cost m(m+1)/2
/// G-function evaluations.
pub const MAX_NAKAGAMI_M: u32 = 50;
/// Largest supported ξ²; beyond it the Meijer-G poles crowd together.
pub const MAX_XI_SQUARED: f64 = 1e3;

/// Nakagami-m hop from source to relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfHop {
    m: u32,
    omega: f64,
}

impl RfHop {
    /// `m` is the integer fading parameter, `omega` the average fading
    /// power (linear).
    pub fn new(m: u32, omega: f64) -> Result<Self> {
        if !(1..=MAX_NAKAGAMI_M).contains(&m) {
            return invalid(format!(
                "Nakagami m must be an integer in 1..={MAX_NAKAGAMI_M}, got {m}"
            ));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return invalid(format!("Ω must be positive and finite, got {omega}"));
        }
        Ok(Self { m, omega })
    }

    pub fn m(&self) -> u32 {
        self.m
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    /// `m / Ω`, the rate of the exponential factor in the SNR law.
    pub fn rate(&self) -> f64 {
        self.m as f64 / self.omega
    }
}

/// FSO detection technique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detection {
    /// Coherent heterodyne detection, `r = 1`.
    Heterodyne,
    /// Intensity modulation with direct detection, `r = 2`.
    ImDd,
}

impl Detection {
    pub fn r(self) -> u32 {
        match self {
            Detection::Heterodyne => 1,
            Detection::ImDd => 2,
        }
    }

    pub fn from_r(r: u32) -> Result<Self> {
        match r {
            1 => Ok(Detection::Heterodyne),
            2 => Ok(Detection::ImDd),
            _ => invalid(format!(
                "detection type r must be 1 (heterodyne) or 2 (IM/DD), got {r}"
            )),
        }
    }
}

/// Gamma-Gamma turbulence strengths used throughout the examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TurbulencePreset {
    Weak,
    Moderate,
    Strong,
}

impl TurbulencePreset {
    pub const ALL: [TurbulencePreset; 3] = [Self::Weak, Self::Moderate, Self::Strong];

    /// `(α, β)`.
    pub fn alpha_beta(self) -> (f64, f64) {
        match self {
            Self::Weak => (2.902, 2.51),
            Self::Moderate => (2.296, 1.822),
            Self::Strong => (2.064, 1.342),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Weak => "weak",
            Self::Moderate => "moderate",
            Self::Strong => "strong",
        }
    }
}

impl fmt::Display for TurbulencePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for TurbulencePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "weak" => Ok(Self::Weak),
            "moderate" => Ok(Self::Moderate),
            "strong" => Ok(Self::Strong),
            _ => invalid(format!(
                "unknown turbulence preset {s:?} (expected weak, moderate or strong)"
            )),
        }
    }
}

/// Gamma-Gamma FSO hop with pointing errors, from relay to destination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsoHop {
    alpha: f64,
    beta: f64,
    xi: f64,
    detection: Detection,
    gamma2_bar: f64,
}

impl FsoHop {
    /// `xi` is the pointing-error ratio ξ, `gamma2_bar` the average SNR
    /// (linear).
    pub fn new(
        alpha: f64,
        beta: f64,
        xi: f64,
        detection: Detection,
        gamma2_bar: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return invalid(format!("α and β must be positive, got α={alpha}, β={beta}"));
        }
        if !(xi > 0.0 && xi.is_finite()) {
            return invalid(format!("ξ must be positive, got {xi}"));
        }
        if xi * xi > MAX_XI_SQUARED {
            return invalid(format!(
                "ξ² = {} exceeds {MAX_XI_SQUARED}; a negligible-pointing-error mode is not supported yet",
                xi * xi
            ));
        }
        if !(gamma2_bar > 0.0 && gamma2_bar.is_finite()) {
            return invalid(format!(
                "average FSO SNR must be positive, got {gamma2_bar}"
            ));
        }
        Ok(Self {
            alpha,
            beta,
            xi,
            detection,
            gamma2_bar,
        })
    }

    pub fn from_preset(
        preset: TurbulencePreset,
        xi: f64,
        detection: Detection,
        gamma2_bar: f64,
    ) -> Result<Self> {
        let (alpha, beta) = preset.alpha_beta();
        Self::new(alpha, beta, xi, detection, gamma2_bar)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn xi(&self) -> f64 {
        self.xi
    }
    pub fn detection(&self) -> Detection {
        self.detection
    }
    pub fn r(&self) -> u32 {
        self.detection.r()
    }
    pub fn gamma2_bar(&self) -> f64 {
        self.gamma2_bar
    }

    pub fn with_gamma2_bar(self, gamma2_bar: f64) -> Result<Self> {
        Self::new(self.alpha, self.beta, self.xi, self.detection, gamma2_bar)
    }
}

/// Constants of the FSO hop that appear in every closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedFsoParams {
    /// `ξ² / (ξ² + 1)`.
    pub h: f64,
    /// Average electrical SNR μ_r.
    pub mu_r: f64,
    pub a: f64,
    pub b: f64,
}

pub fn derive_fso(hop: &FsoHop) -> DerivedFsoParams {
    let xi2 = hop.xi * hop.xi;
    let (al, be) = (hop.alpha, hop.beta);
    let h = xi2 / (xi2 + 1.0);
    let r = hop.r() as f64;
    let mu_r = match hop.detection {
        Detection::Heterodyne => hop.gamma2_bar,
        Detection::ImDd => {
            hop.gamma2_bar * al * be * xi2 * (xi2 + 2.0)
                / ((al + 1.0) * (be + 1.0) * (xi2 + 1.0).powi(2))
        }
    };
    let ln_a = (al + be - 2.0) * r.ln() + xi2.ln()
        - (r - 1.0) * (2.0 * std::f64::consts::PI).ln()
        - ln_gamma(al)
        - ln_gamma(be);
    let b = (h * al * be).powf(r) / r.powf(2.0 * r);
    DerivedFsoParams {
        h,
        mu_r,
        a: ln_a.exp(),
        b,
    }
}

/// Top (`κ1`, length r) and bottom (`κ2`, length 3r+1) parameter lists of
/// the end-to-end G-functions for binomial index `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaVectors {
    pub kappa1: Vec<f64>,
    pub kappa2: Vec<f64>,
}

pub fn build_kappas(hop: &FsoHop, j: u32) -> KappaVectors {
    let xi2 = hop.xi * hop.xi;
    let r = hop.r();
    let rf = r as f64;
    let kappa1 = (1..=r).map(|i| (xi2 + i as f64) / rf).collect();
    let mut kappa2 = Vec::with_capacity(3 * r as usize + 1);
    for base in [xi2, hop.alpha, hop.beta] {
        kappa2.extend((0..r).map(|i| (base + i as f64) / rf));
    }
    kappa2.push(j as f64);
    KappaVectors { kappa1, kappa2 }
}

/// Density of the RF-hop SNR: Gamma with shape m and scale Ω/m.
pub fn nakagami_snr_pdf(hop: &RfHop, g1: f64) -> f64 {
    if g1 < 0.0 {
        return 0.0;
    }
    let m = hop.m as f64;
    let rate = hop.rate();
    if g1 == 0.0 {
        return if hop.m == 1 { rate } else { 0.0 };
    }
    (m * rate.ln() + (m - 1.0) * g1.ln() - rate * g1 - ln_gamma(m)).exp()
}

/// Distribution function of the RF-hop SNR,
/// `1 - e^{-mγ/Ω} Σ_{k<m} (mγ/Ω)^k / k!`.
pub fn nakagami_snr_cdf(hop: &RfHop, g1: f64) -> f64 {
    if g1 <= 0.0 {
        return 0.0;
    }
    let x = hop.rate() * g1;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..hop.m {
        term *= x / k as f64;
        sum += term;
    }
    let tail = (-x).exp() * sum;
    if tail < 0.5 {
        1.0 - tail
    } else {
        // Small x: complementary series.
        let mut t = (-x).exp();
        for k in 1..=hop.m {
            t *= x / k as f64;
        }
        let mut acc = 0.0;
        let mut k = hop.m;
        loop {
            acc += t;
            k += 1;
            t *= x / k as f64;
            if t < 1e-17 * acc {
                break;
            }
        }
        acc
    }
}

/// Density of the FSO-hop SNR.
pub fn fso_snr_pdf(hop: &FsoHop, g2: f64) -> Result<f64> {
    if g2 == 0.0 {
        return Ok(0.0);
    }
    if g2.is_nan() || g2 < 0.0 {
        return invalid(format!("FSO SNR must be positive, got {g2}"));
    }
    let d = derive_fso(hop);
    let xi2 = hop.xi * hop.xi;
    let r = hop.r() as f64;
    let spec = MeijerGSpec::new(3, 0, vec![xi2 + 1.0], vec![xi2, hop.alpha, hop.beta])?;
    let arg = d.h * hop.alpha * hop.beta * (g2 / d.mu_r).powf(1.0 / r);
    if arg == 0.0 || !arg.is_finite() {
        return Ok(0.0);
    }
    let g = meijer_g(&spec, arg)?;
    if g.sign == 0.0 {
        return Ok(0.0);
    }
    let ln = xi2.ln() - r.ln() - g2.ln() - ln_gamma(hop.alpha) - ln_gamma(hop.beta) + g.ln_abs;
    Ok(g.sign * ln.exp())
}

/// Distribution function of the FSO-hop SNR.
///
/// Uses `P[W <= w] = ξ²/(Γ(α)Γ(β)) G^{3,1}_{2,4}[αβw | 1, ξ²+1; ξ², α, β, 0]`
/// for the normalised irradiance `W = h (γ/μ_r)^{1/r}` below its mean and
/// one minus the complementary form
/// `ξ²/(Γ(α)Γ(β)) G^{4,0}_{2,4}[αβw | ξ²+1, 1; 0, ξ², α, β]` above it.
pub fn fso_snr_cdf(hop: &FsoHop, g2: f64) -> Result<f64> {
    if g2.is_nan() {
        return invalid("FSO SNR is NaN");
    }
    if g2 <= 0.0 {
        return Ok(0.0);
    }
    if g2 == f64::INFINITY {
        return Ok(1.0);
    }
    let d = derive_fso(hop);
    let xi2 = hop.xi * hop.xi;
    let w = d.h * (g2 / d.mu_r).powf(1.0 / hop.r() as f64);
    if w == 0.0 {
        return Ok(0.0);
    }
    let ln_pref = xi2.ln() - ln_gamma(hop.alpha) - ln_gamma(hop.beta);
    let z = hop.alpha * hop.beta * w;
    let (value, complement) = if w <= d.h {
        let spec = MeijerGSpec::new(
            3,
            1,
            vec![1.0, xi2 + 1.0],
            vec![xi2, hop.alpha, hop.beta, 0.0],
        )?;
        (meijer_g(&spec, z)?, false)
    } else {
        let spec = MeijerGSpec::new(
            4,
            0,
            vec![xi2 + 1.0, 1.0],
            vec![0.0, xi2, hop.alpha, hop.beta],
        )?;
        (meijer_g(&spec, z)?, true)
    };
    let part = if value.sign == 0.0 {
        0.0
    } else {
        value.sign * (ln_pref + value.ln_abs).exp()
    };
    let cdf = if complement { 1.0 - part } else { part };
    Ok(cdf.clamp(0.0, 1.0))
}
