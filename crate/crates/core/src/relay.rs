//! End-to-end statistics and performance metrics of the fixed-gain
//! dual-hop link, exact and high-SNR asymptotic.
//!
//! Every closed form is a double sum over `k = 0..m-1`, `j = 0..=k` of
//! Meijer-G terms with weights `1 / (j! (k-j)!)`; the shorthand `ε = m/Ω`
//! and `w = B ε C / μ_r` is used throughout.

use crate::channels::{build_kappas, derive_fso, FsoHop, KappaVectors, RfHop};
use crate::error::{invalid, Result};
use crate::quad::{integrate_half_line, QuadOptions};
use crate::specfun::gamma::ln_gamma;
use crate::specfun::{
    bivariate_g, leading_residues, meijer_g, BivariateGSpec, GValue, MeijerGSpec,
};
use crate::sum::CompensatedSum;

/// The full link: RF hop, FSO hop and fixed relay gain `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayConfig {
    pub rf: RfHop,
    pub fso: FsoHop,
    c_gain: f64,
}

impl RelayConfig {
    pub fn new(rf: RfHop, fso: FsoHop, c_gain: f64) -> Result<Self> {
        if !(c_gain > 0.0 && c_gain.is_finite()) {
            return invalid(format!("relay gain C must be positive, got {c_gain}"));
        }
        Ok(Self { rf, fso, c_gain })
    }

    pub fn c_gain(&self) -> f64 {
        self.c_gain
    }
}

/// Binary modulation with conditional error probability
/// `Γ(p, qγ) / (2Γ(p))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryModulation {
    p: f64,
    q: f64,
}

impl BinaryModulation {
    /// Differential BPSK, `p = q = 1`.
    pub const DBPSK: BinaryModulation = BinaryModulation { p: 1.0, q: 1.0 };

    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite() && q > 0.0 && q.is_finite()) {
            return invalid(format!(
                "modulation parameters must be positive, got p={p}, q={q}"
            ));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn q(&self) -> f64 {
        self.q
    }
}

/// How a [`MetricResult`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvalPath {
    Exact,
    AsymptoticAllTerms,
    AsymptoticDominant,
    Quadrature,
    Egbmgf,
}

impl EvalPath {
    pub fn label(self) -> &'static str {
        match self {
            EvalPath::Exact => "exact",
            EvalPath::AsymptoticAllTerms => "asymptotic_all_terms",
            EvalPath::AsymptoticDominant => "asymptotic_dominant",
            EvalPath::Quadrature => "quadrature",
            EvalPath::Egbmgf => "egbmgf",
        }
    }
}

/// A metric value with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricResult {
    pub value: f64,
    /// Series terms or integrand evaluations spent.
    pub terms_used: usize,
    /// Estimated absolute error. For asymptotic results this is the gap to
    /// the exact value when that could be computed.
    pub error_estimate: f64,
    pub path: EvalPath,
}

/// Terms kept in a high-SNR expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AsymptoticTerms {
    /// Every leading residue, one per entry of κ2.
    #[default]
    All,
    /// Per `(k, j)`, the non-vanishing term with the smallest exponent
    /// `κ2_i`, which dominates as μ_r grows.
    SmallestExponent,
    /// Per `(k, j)`, the term belonging to the last κ2 entry (the binomial
    /// index j).
    IndexJ,
}

impl AsymptoticTerms {
    fn path(self) -> EvalPath {
        match self {
            AsymptoticTerms::All => EvalPath::AsymptoticAllTerms,
            _ => EvalPath::AsymptoticDominant,
        }
    }
}

/// Which closed form to use for the ergodic capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CapacityPath {
    /// Bivariate Meijer-G closed form.
    Egbmgf,
    /// Direct quadrature of the complementary CDF against `1/(1+γ)`.
    Quadrature,
}

struct Link {
    rate: f64,
    ln_a: f64,
    /// `B C / μ_r`.
    y: f64,
    kappas: Vec<KappaVectors>,
    m: u32,
}

impl Link {
    fn new(cfg: &RelayConfig) -> Self {
        let d = derive_fso(&cfg.fso);
        let m = cfg.rf.m();
        Self {
            rate: cfg.rf.rate(),
            ln_a: d.a.ln(),
            y: d.b * cfg.c_gain / d.mu_r,
            kappas: (0..m).map(|j| build_kappas(&cfg.fso, j)).collect(),
            m,
        }
    }

    /// `(k, j, ln(1/(j!(k-j)!)))` for the double sum.
    fn pairs(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        (0..self.m).flat_map(|k| {
            (0..=k).map(move |j| {
                (
                    k,
                    j,
                    -ln_gamma(j as f64 + 1.0) - ln_gamma((k - j) as f64 + 1.0),
                )
            })
        })
    }

    /// `G^{3r+1,0}_{r,3r+1}[· | κ1; κ2(j)]`.
    fn cdf_spec(&self, j: u32) -> Result<MeijerGSpec> {
        let kv = &self.kappas[j as usize];
        MeijerGSpec::new(kv.kappa2.len(), 0, kv.kappa1.clone(), kv.kappa2.clone())
    }

    /// `G^{3r+1,1}_{r+1,3r+1}[· | a0, κ1; κ2(j)]`.
    fn raised_spec(&self, j: u32, a0: f64) -> Result<MeijerGSpec> {
        let kv = &self.kappas[j as usize];
        let mut a = Vec::with_capacity(kv.kappa1.len() + 1);
        a.push(a0);
        a.extend_from_slice(&kv.kappa1);
        MeijerGSpec::new(kv.kappa2.len(), 1, a, kv.kappa2.clone())
    }
}

/// Accumulates `Σ ± exp(ln_pref) G` with the matching error bound.
#[derive(Default)]
struct Acc {
    sum: CompensatedSum,
    err: f64,
    terms: usize,
}

impl Acc {
    fn add_g(&mut self, sign: f64, ln_pref: f64, g: &GValue) {
        if g.sign != 0.0 {
            let v = sign * g.sign * (ln_pref + g.ln_abs).exp();
            self.sum.add(v);
            self.err += v.abs() * g.rel_error;
        }
        self.terms += g.terms;
    }

    fn add(&mut self, v: f64) {
        self.sum.add(v);
    }
}

fn check_nonneg(what: &str, x: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return invalid(format!(
            "{what} must be a non-negative finite number, got {x}"
        ));
    }
    Ok(())
}

/// `Σ c_kj (εγ)^{k-j} e^{-εγ} G(wγ)`, i.e. `F^c(γ) / A`, scaled by `A`.
fn ccdf_acc(link: &Link, gamma: f64) -> Result<Acc> {
    let mut acc = Acc::default();
    let eg = link.rate * gamma;
    let z = link.y * link.rate * gamma;
    for (k, j, ln_c) in link.pairs() {
        let g = meijer_g(&link.cdf_spec(j)?, z)?;
        let ln_pref = link.ln_a + ln_c - eg + (k - j) as f64 * eg.ln();
        acc.add_g(1.0, ln_pref, &g);
    }
    Ok(acc)
}

/// End-to-end CDF `P[γ <= gamma]`.
pub fn e2e_cdf(cfg: &RelayConfig, gamma: f64) -> Result<MetricResult> {
    check_nonneg("SNR threshold", gamma)?;
    if gamma == 0.0 {
        return Ok(MetricResult {
            value: 0.0,
            terms_used: 0,
            error_estimate: 0.0,
            path: EvalPath::Exact,
        });
    }
    let acc = ccdf_acc(&Link::new(cfg), gamma)?;
    let ccdf = acc.sum.value();
    Ok(MetricResult {
        value: (1.0 - ccdf).clamp(0.0, 1.0),
        terms_used: acc.terms,
        error_estimate: acc.err + f64::EPSILON,
        path: EvalPath::Exact,
    })
}

/// End-to-end complementary CDF `P[γ > gamma]`, summed directly so small
/// tail values keep their relative precision.
pub fn e2e_ccdf(cfg: &RelayConfig, gamma: f64) -> Result<MetricResult> {
    check_nonneg("SNR threshold", gamma)?;
    if gamma == 0.0 {
        return Ok(MetricResult {
            value: 1.0,
            terms_used: 0,
            error_estimate: 0.0,
            path: EvalPath::Exact,
        });
    }
    let acc = ccdf_acc(&Link::new(cfg), gamma)?;
    Ok(MetricResult {
        value: acc.sum.value().clamp(0.0, 1.0),
        terms_used: acc.terms,
        error_estimate: acc.err,
        path: EvalPath::Exact,
    })
}

/// End-to-end PDF.
///
/// Differentiating the CDF term by term uses
/// `z G'(z) = G^{3r+1,1}_{r+1,3r+2}[z | 0, κ1; κ2, 1]`.
pub fn e2e_pdf(cfg: &RelayConfig, gamma: f64) -> Result<MetricResult> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return invalid(format!("PDF argument must be positive, got {gamma}"));
    }
    let link = Link::new(cfg);
    let eg = link.rate * gamma;
    let z = link.y * link.rate * gamma;
    let mut acc = Acc::default();
    for (k, j, ln_c) in link.pairs() {
        let kv = &link.kappas[j as usize];
        let mut a = vec![0.0];
        a.extend_from_slice(&kv.kappa1);
        let mut b = kv.kappa2.clone();
        b.push(1.0);
        let g_deriv = meijer_g(&MeijerGSpec::new(kv.kappa2.len(), 1, a, b)?, z)?;
        let g = meijer_g(&link.cdf_spec(j)?, z)?;
        let ln_pref = link.ln_a + ln_c - eg + (k - j) as f64 * eg.ln();
        let kj = (k - j) as f64;
        let factor = link.rate - kj / gamma;
        if factor != 0.0 {
            acc.add_g(factor.signum(), ln_pref + factor.abs().ln(), &g);
        }
        acc.add_g(-1.0, ln_pref - gamma.ln(), &g_deriv);
    }
    Ok(MetricResult {
        value: acc.sum.value(),
        terms_used: acc.terms,
        error_estimate: acc.err,
        path: EvalPath::Exact,
    })
}

/// Moment generating function `E[e^{-sγ}]`.
pub fn e2e_mgf(cfg: &RelayConfig, s: f64) -> Result<MetricResult> {
    check_nonneg("MGF argument", s)?;
    if s == 0.0 {
        return Ok(MetricResult {
            value: 1.0,
            terms_used: 0,
            error_estimate: 0.0,
            path: EvalPath::Exact,
        });
    }
    let link = Link::new(cfg);
    let eps = link.rate;
    let sigma = s + eps;
    let z = link.y * eps / sigma;
    let mut acc = Acc::default();
    acc.add(1.0);
    for (k, j, ln_c) in link.pairs() {
        let kj = (k - j) as f64;
        let g = meijer_g(&link.raised_spec(j, -kj)?, z)?;
        let ln_pref = s.ln() + link.ln_a + ln_c + kj * eps.ln() - (kj + 1.0) * sigma.ln();
        acc.add_g(-1.0, ln_pref, &g);
    }
    Ok(MetricResult {
        value: acc.sum.value(),
        terms_used: acc.terms,
        error_estimate: acc.err + f64::EPSILON,
        path: EvalPath::Exact,
    })
}

/// Moment `E[γ^n]`, `n >= 1`.
pub fn e2e_moment(cfg: &RelayConfig, n: u32) -> Result<MetricResult> {
    if n == 0 {
        return invalid("moment order must be at least 1 (E[γ^0] = 1 by definition)");
    }
    let link = Link::new(cfg);
    let nf = n as f64;
    let mut acc = Acc::default();
    for (k, j, ln_c) in link.pairs() {
        let a0 = 1.0 - nf - (k - j) as f64;
        let g = meijer_g(&link.raised_spec(j, a0)?, link.y)?;
        let ln_pref = nf.ln() + link.ln_a - nf * link.rate.ln() + ln_c;
        acc.add_g(1.0, ln_pref, &g);
    }
    Ok(MetricResult {
        value: acc.sum.value(),
        terms_used: acc.terms,
        error_estimate: acc.err,
        path: EvalPath::Exact,
    })
}

/// Outage probability at threshold `gamma_th`; the end-to-end CDF.
pub fn outage_probability(cfg: &RelayConfig, gamma_th: f64) -> Result<MetricResult> {
    e2e_cdf(cfg, gamma_th)
}

/// n-th order amount of fading `E[γ^n] / E[γ]^n - 1`.
pub fn amount_of_fading(cfg: &RelayConfig, n: u32) -> Result<MetricResult> {
    if n == 0 {
        return invalid("amount-of-fading order must be at least 1");
    }
    let first = e2e_moment(cfg, 1)?;
    let nth = if n == 1 { first } else { e2e_moment(cfg, n)? };
    let ratio = nth.value / first.value.powi(n as i32);
    let rel =
        nth.error_estimate / nth.value.abs() + n as f64 * first.error_estimate / first.value.abs();
    Ok(MetricResult {
        value: ratio - 1.0,
        terms_used: first.terms_used + if n == 1 { 0 } else { nth.terms_used },
        error_estimate: if n == 1 { 0.0 } else { rel * ratio.abs() },
        path: EvalPath::Exact,
    })
}

/// Average bit error probability of a binary modulation.
pub fn average_ber(cfg: &RelayConfig, modulation: BinaryModulation) -> Result<MetricResult> {
    let link = Link::new(cfg);
    let (p, q) = (modulation.p, modulation.q);
    let eps = link.rate;
    let sigma = q + eps;
    let z = link.y * eps / sigma;
    let ln_front = p * q.ln() - std::f64::consts::LN_2 - ln_gamma(p) + link.ln_a;
    let mut acc = Acc::default();
    acc.add(0.5);
    for (k, j, ln_c) in link.pairs() {
        let kj = (k - j) as f64;
        let g = meijer_g(&link.raised_spec(j, 1.0 - p - kj)?, z)?;
        let ln_pref = ln_front + ln_c + kj * eps.ln() - (kj + p) * sigma.ln();
        acc.add_g(-1.0, ln_pref, &g);
    }
    Ok(MetricResult {
        value: acc.sum.value(),
        terms_used: acc.terms,
        error_estimate: acc.err + f64::EPSILON,
        path: EvalPath::Exact,
    })
}

/// Sum of the leading residues selected by `terms`.
fn select_residues(spec: &MeijerGSpec, z: f64, terms: AsymptoticTerms) -> Result<f64> {
    let residues = leading_residues(spec, z)?;
    let b = spec.b();
    Ok(match terms {
        AsymptoticTerms::All => residues.iter().copied().collect::<CompensatedSum>().value(),
        AsymptoticTerms::IndexJ => residues[residues.len() - 1],
        AsymptoticTerms::SmallestExponent => residues
            .iter()
            .zip(b)
            .filter(|(r, _)| **r != 0.0)
            .min_by(|x, y| x.1.total_cmp(y.1))
            .map_or(0.0, |(r, _)| *r),
    })
}

fn asymptotic_result(
    value: f64,
    exact: Result<MetricResult>,
    terms: AsymptoticTerms,
) -> MetricResult {
    MetricResult {
        value,
        terms_used: 0,
        error_estimate: exact.map_or(f64::NAN, |e| (e.value - value).abs()),
        path: terms.path(),
    }
}

/// High-SNR expansion of the CDF: each G-function replaced by the leading
/// terms of its small-argument expansion.
pub fn e2e_cdf_asymptotic(
    cfg: &RelayConfig,
    gamma: f64,
    terms: AsymptoticTerms,
) -> Result<MetricResult> {
    check_nonneg("SNR threshold", gamma)?;
    if gamma == 0.0 {
        return Ok(MetricResult {
            value: 0.0,
            terms_used: 0,
            error_estimate: 0.0,
            path: terms.path(),
        });
    }
    let link = Link::new(cfg);
    let eg = link.rate * gamma;
    let z = link.y * eg;
    let mut sum = CompensatedSum::new();
    sum.add(1.0);
    for (k, j, ln_c) in link.pairs() {
        let g = select_residues(&link.cdf_spec(j)?, z, terms)?;
        sum.add(-(link.ln_a + ln_c - eg + (k - j) as f64 * eg.ln()).exp() * g);
    }
    Ok(asymptotic_result(sum.value(), e2e_cdf(cfg, gamma), terms))
}

/// High-SNR expansion of the MGF.
pub fn e2e_mgf_asymptotic(
    cfg: &RelayConfig,
    s: f64,
    terms: AsymptoticTerms,
) -> Result<MetricResult> {
    check_nonneg("MGF argument", s)?;
    if s == 0.0 {
        return Ok(MetricResult {
            value: 1.0,
            terms_used: 0,
            error_estimate: 0.0,
            path: terms.path(),
        });
    }
    let link = Link::new(cfg);
    let eps = link.rate;
    let sigma = s + eps;
    let z = link.y * eps / sigma;
    let mut sum = CompensatedSum::new();
    sum.add(1.0);
    for (k, j, ln_c) in link.pairs() {
        let kj = (k - j) as f64;
        let g = select_residues(&link.raised_spec(j, -kj)?, z, terms)?;
        let ln_pref = s.ln() + link.ln_a + ln_c + kj * eps.ln() - (kj + 1.0) * sigma.ln();
        sum.add(-ln_pref.exp() * g);
    }
    Ok(asymptotic_result(sum.value(), e2e_mgf(cfg, s), terms))
}

/// High-SNR expansion of the average BER; the constant term is `1/2`.
pub fn average_ber_asymptotic(
    cfg: &RelayConfig,
    modulation: BinaryModulation,
    terms: AsymptoticTerms,
) -> Result<MetricResult> {
    let link = Link::new(cfg);
    let (p, q) = (modulation.p, modulation.q);
    let eps = link.rate;
    let sigma = q + eps;
    let z = link.y * eps / sigma;
    let ln_front = p * q.ln() - std::f64::consts::LN_2 - ln_gamma(p) + link.ln_a;
    let mut sum = CompensatedSum::new();
    sum.add(0.5);
    for (k, j, ln_c) in link.pairs() {
        let kj = (k - j) as f64;
        let g = select_residues(&link.raised_spec(j, 1.0 - p - kj)?, z, terms)?;
        let ln_pref = ln_front + ln_c + kj * eps.ln() - (kj + p) * sigma.ln();
        sum.add(-ln_pref.exp() * g);
    }
    Ok(asymptotic_result(
        sum.value(),
        average_ber(cfg, modulation),
        terms,
    ))
}

/// Ergodic capacity in bits/s/Hz.
pub fn ergodic_capacity(cfg: &RelayConfig, path: CapacityPath) -> Result<MetricResult> {
    match path {
        CapacityPath::Quadrature => capacity_quadrature(cfg),
        CapacityPath::Egbmgf => capacity_egbmgf(cfg),
    }
}

fn capacity_quadrature(cfg: &RelayConfig) -> Result<MetricResult> {
    let link = Link::new(cfg);
    let mut terms = 0;
    let mut run = |tol: f64| {
        integrate_half_line(
            |g| {
                if g == 0.0 {
                    return Ok(1.0);
                }
                let acc = ccdf_acc(&link, g)?;
                terms += acc.terms;
                Ok(acc.sum.value() / (1.0 + g))
            },
            1.0 / link.rate,
            QuadOptions::rel(tol),
        )
    };
    // Error: the larger of the fine-run estimate and the gap to a coarser run.
    let coarse = run(1e-10)?;
    let fine = run(1e-12)?;
    let err = fine.error_estimate.max((fine.value - coarse.value).abs());
    Ok(MetricResult {
        value: fine.value / std::f64::consts::LN_2,
        terms_used: terms,
        error_estimate: err / std::f64::consts::LN_2,
        path: EvalPath::Quadrature,
    })
}

fn capacity_egbmgf(cfg: &RelayConfig) -> Result<MetricResult> {
    let link = Link::new(cfg);
    let x = 1.0 / link.rate;
    let mut acc = Acc::default();
    for (k, j, ln_c) in link.pairs() {
        let kv = &link.kappas[j as usize];
        let spec = BivariateGSpec::new(
            (k - j + 1) as f64,
            kv.kappa1.clone(),
            kv.kappa2.clone(),
            x,
            link.y,
        )?;
        let v = bivariate_g(&spec)?;
        let w = (link.ln_a + ln_c).exp() * x / std::f64::consts::LN_2;
        acc.add(w * v.value);
        acc.err += w * v.error_estimate;
        acc.terms += v.evaluations;
    }
    Ok(MetricResult {
        value: acc.sum.value(),
        terms_used: acc.terms,
        error_estimate: acc.err,
        path: EvalPath::Egbmgf,
    })
}
