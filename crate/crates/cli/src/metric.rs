//! Metric names accepted in scenarios and on the command line, and their
//! analytic, asymptotic and Monte-Carlo evaluation.

use std::fmt;
use std::str::FromStr;

use relaylink::mcsim::Metric;
use relaylink::relay::{
    self, AsymptoticTerms, BinaryModulation, CapacityPath, MetricResult, RelayConfig,
};

use crate::error::CliError;

/// Half-width of the relative bin used to estimate a density by simulation.
pub const PDF_BIN: f64 = 0.02;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// One requested output column.
///
/// Textual forms: `op`, `ber`, `capacity`, `mgf:<s>`, `moment:<n>`,
/// `af:<n>`, `cdf:<γ dB>`, `pdf:<γ dB>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricSpec {
    Op,
    Ber,
    Capacity,
    Mgf(f64),
    Moment(u32),
    Af(u32),
    Cdf(f64),
    Pdf(f64),
}

impl FromStr for MetricSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s, None),
        };
        let bad = || {
            CliError::config(format!("bad metric `{s}`; expected op, ber, capacity, mgf:<s>, moment:<n>, af:<n>, cdf:<dB> or pdf:<dB>"))
        };
        let real = |a: Option<&str>| -> Result<f64, CliError> {
            let v: f64 = a.ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad())
            }
        };
        let order = |a: Option<&str>| -> Result<u32, CliError> {
            let n: u32 = a.ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if (1..=64).contains(&n) {
                Ok(n)
            } else {
                Err(CliError::config(format!(
                    "metric `{s}`: order must be in 1..=64"
                )))
            }
        };
        let spec = match head {
            "op" if arg.is_none() => MetricSpec::Op,
            "ber" if arg.is_none() => MetricSpec::Ber,
            "capacity" if arg.is_none() => MetricSpec::Capacity,
            "mgf" => {
                let v = real(arg)?;
                if v < 0.0 {
                    return Err(CliError::config(format!("metric `{s}`: s must be >= 0")));
                }
                MetricSpec::Mgf(v)
            }
            "moment" => MetricSpec::Moment(order(arg)?),
            "af" => MetricSpec::Af(order(arg)?),
            "cdf" => MetricSpec::Cdf(real(arg)?),
            "pdf" => MetricSpec::Pdf(real(arg)?),
            _ => return Err(bad()),
        };
        Ok(spec)
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::Op => f.write_str("op"),
            MetricSpec::Ber => f.write_str("ber"),
            MetricSpec::Capacity => f.write_str("capacity"),
            MetricSpec::Mgf(s) => write!(f, "mgf:{s}"),
            MetricSpec::Moment(n) => write!(f, "moment:{n}"),
            MetricSpec::Af(n) => write!(f, "af:{n}"),
            MetricSpec::Cdf(g) => write!(f, "cdf:{g}"),
            MetricSpec::Pdf(g) => write!(f, "pdf:{g}"),
        }
    }
}

/// Settings shared by every metric in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings {
    pub gamma_th_db: f64,
    pub modulation: BinaryModulation,
    pub asymptotic: Option<AsymptoticTerms>,
    pub capacity_path: CapacityPath,
    /// Multiplier applied to analytic CDF values (sensitivity hook; 1 in
    /// normal use).
    pub cdf_scale: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            gamma_th_db: 0.0,
            modulation: BinaryModulation::DBPSK,
            asymptotic: None,
            capacity_path: CapacityPath::Egbmgf,
            cdf_scale: 1.0,
        }
    }
}

fn scaled(mut r: MetricResult, k: f64) -> MetricResult {
    if k != 1.0 {
        r.value *= k;
        r.error_estimate *= k.abs();
    }
    r
}

impl MetricSpec {
    /// Exact closed-form value.
    pub fn analytic(
        &self,
        cfg: &RelayConfig,
        st: &EvalSettings,
    ) -> relaylink::Result<MetricResult> {
        match *self {
            MetricSpec::Op => relay::outage_probability(cfg, db_to_linear(st.gamma_th_db))
                .map(|r| scaled(r, st.cdf_scale)),
            MetricSpec::Cdf(g) => {
                relay::e2e_cdf(cfg, db_to_linear(g)).map(|r| scaled(r, st.cdf_scale))
            }
            MetricSpec::Pdf(g) => relay::e2e_pdf(cfg, db_to_linear(g)),
            MetricSpec::Ber => relay::average_ber(cfg, st.modulation),
            MetricSpec::Capacity => relay::ergodic_capacity(cfg, st.capacity_path),
            MetricSpec::Mgf(s) => relay::e2e_mgf(cfg, s),
            MetricSpec::Moment(n) => relay::e2e_moment(cfg, n),
            MetricSpec::Af(n) => relay::amount_of_fading(cfg, n),
        }
    }

    /// High-SNR expansion, when requested and available for this metric.
    pub fn asymptotic(
        &self,
        cfg: &RelayConfig,
        st: &EvalSettings,
    ) -> Option<relaylink::Result<MetricResult>> {
        let terms = st.asymptotic?;
        let r = match *self {
            MetricSpec::Op => relay::e2e_cdf_asymptotic(cfg, db_to_linear(st.gamma_th_db), terms),
            MetricSpec::Cdf(g) => relay::e2e_cdf_asymptotic(cfg, db_to_linear(g), terms),
            MetricSpec::Ber => relay::average_ber_asymptotic(cfg, st.modulation, terms),
            MetricSpec::Mgf(s) => relay::e2e_mgf_asymptotic(cfg, s, terms),
            _ => return None,
        };
        Some(r)
    }

    /// Simulation statistic and the factor turning its mean into the
    /// metric. Densities are estimated as the probability of a narrow
    /// relative bin around the point, divided by the bin width.
    pub fn mc_probe(&self, st: &EvalSettings) -> (Metric, f64) {
        match *self {
            MetricSpec::Op => (Metric::Outage(db_to_linear(st.gamma_th_db)), 1.0),
            MetricSpec::Cdf(g) => (Metric::Outage(db_to_linear(g)), 1.0),
            MetricSpec::Pdf(g) => {
                let (lo, hi) = pdf_bin(db_to_linear(g));
                (Metric::Interval(lo, hi), 1.0 / (hi - lo))
            }
            MetricSpec::Ber => (Metric::Ber(st.modulation), 1.0),
            MetricSpec::Capacity => (Metric::Capacity, 1.0),
            MetricSpec::Mgf(s) => (Metric::Mgf(s), 1.0),
            MetricSpec::Moment(n) => (Metric::Moment(n), 1.0),
            MetricSpec::Af(n) => (Metric::AmountOfFading(n), 1.0),
        }
    }
}

/// Bin `(γ(1-δ), γ(1+δ)]` used for density estimates.
pub fn pdf_bin(gamma: f64) -> (f64, f64) {
    (gamma * (1.0 - PDF_BIN), gamma * (1.0 + PDF_BIN))
}

pub fn parse_asymptotic(s: &str) -> Result<AsymptoticTerms, CliError> {
    match s {
        "all" => Ok(AsymptoticTerms::All),
        "smallest_exponent" | "smallest-exponent" | "dominant" => {
            Ok(AsymptoticTerms::SmallestExponent)
        }
        "index_j" | "index-j" => Ok(AsymptoticTerms::IndexJ),
        _ => Err(CliError::config(format!(
            "bad asymptotic variant `{s}`; expected all, smallest_exponent or index_j"
        ))),
    }
}

pub fn parse_capacity_path(s: &str) -> Result<CapacityPath, CliError> {
    match s {
        "egbmgf" => Ok(CapacityPath::Egbmgf),
        "quadrature" => Ok(CapacityPath::Quadrature),
        _ => Err(CliError::config(format!(
            "bad capacity path `{s}`; expected egbmgf or quadrature"
        ))),
    }
}
