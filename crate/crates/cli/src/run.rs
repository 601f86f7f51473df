//! Sweep and validation drivers.

use std::io::Write;

use relaylink::channels::{fso_snr_cdf, nakagami_snr_cdf};
use relaylink::mcsim::{draw_gamma1, draw_gamma2, estimate_metrics, ks_test, Estimate, SimPlan};
use relaylink::quad::{integrate, QuadOptions};
use relaylink::relay::{self, RelayConfig};

use crate::error::{CliError, Outcome};
use crate::format::{fmt_f64, fmt_opt};
use crate::metric::{db_to_linear, pdf_bin, EvalSettings, MetricSpec};
use crate::scenario::{McSettings, Point, Scenario};

pub const CSV_HEADER: &str = "axis_db,metric,analytic,asymptotic,mc_mean,mc_se,err_est";
pub const REPORT_HEADER: &str = "kind,check,analytic,mc_mean,mc_se,score,limit,pass";

/// Largest accepted |z| for a metric check.
pub const Z_LIMIT: f64 = 3.0;
/// Significance level of the KS checks.
pub const KS_LEVEL: f64 = 0.01;
const KS_GRID: usize = 2000;

/// One sweep output row.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub axis_db: f64,
    pub metric: String,
    pub analytic: f64,
    pub asymptotic: Option<f64>,
    pub mc_mean: Option<f64>,
    pub mc_se: Option<f64>,
    pub err_est: f64,
}

impl CurveRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            fmt_f64(self.axis_db),
            self.metric,
            fmt_f64(self.analytic),
            fmt_opt(self.asymptotic),
            fmt_opt(self.mc_mean),
            fmt_opt(self.mc_se),
            fmt_f64(self.err_est)
        )
    }
}

fn plan(cfg: &RelayConfig, mc: &McSettings) -> Result<SimPlan, CliError> {
    let p = match mc.batch {
        Some(b) => SimPlan::with_batch(*cfg, mc.n_samples, mc.seed, b),
        None => SimPlan::new(*cfg, mc.n_samples, mc.seed),
    };
    p.map_err(|e| CliError::config(e.to_string()))
}

/// Simulates every metric of the scenario at one configuration in a
/// single pass, returning `(mean, se)` already scaled to metric units.
fn simulate(
    cfg: &RelayConfig,
    metrics: &[MetricSpec],
    st: &EvalSettings,
    mc: &McSettings,
) -> Result<Vec<(f64, f64)>, CliError> {
    let probes: Vec<_> = metrics.iter().map(|m| m.mc_probe(st)).collect();
    let stats: Vec<_> = probes.iter().map(|p| p.0).collect();
    let est: Vec<Estimate> = estimate_metrics(&plan(cfg, mc)?, &stats);
    Ok(est
        .iter()
        .zip(&probes)
        .map(|(e, p)| (e.mean * p.1, e.std_error * p.1))
        .collect())
}

/// Evaluates the scenario's sweep and writes CSV rows (axis ascending,
/// then curve, then metric). Numeric failures become `NaN` rows.
pub fn run_sweep<W: Write + ?Sized>(sc: &Scenario, out: &mut W) -> Result<Outcome, CliError> {
    if sc.sweep.is_none() {
        return Err(CliError::config(format!(
            "scenario `{}` has no [sweep] section",
            sc.name
        )));
    }
    let mut outcome = Outcome::default();
    writeln!(out, "{CSV_HEADER}")?;
    for p in sc.points() {
        let cfg = sc.relay_config(&p)?;
        let mc = match &sc.mc {
            Some(mc) => Some(simulate(&cfg, &sc.metrics, &sc.settings, mc)?),
            None => None,
        };
        for (i, m) in sc.metrics.iter().enumerate() {
            let (analytic, err_est) = match m.analytic(&cfg, &sc.settings) {
                Ok(r) => (r.value, r.error_estimate),
                Err(_) => {
                    outcome.numeric_failures += 1;
                    (f64::NAN, f64::NAN)
                }
            };
            let asymptotic = m.asymptotic(&cfg, &sc.settings).map(|r| match r {
                Ok(r) => r.value,
                Err(_) => {
                    outcome.numeric_failures += 1;
                    f64::NAN
                }
            });
            let row = CurveRow {
                axis_db: p.axis_db.expect("swept scenario"),
                metric: sc.metric_label(m, &p.curve),
                analytic,
                asymptotic,
                mc_mean: mc.as_ref().map(|v| v[i].0),
                mc_se: mc.as_ref().map(|v| v[i].1),
                err_est,
            };
            writeln!(out, "{}", row.to_csv())?;
        }
    }
    out.flush()?;
    Ok(outcome)
}

/// One validation record.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub kind: &'static str,
    pub name: String,
    pub analytic: Option<f64>,
    pub mc_mean: Option<f64>,
    pub mc_se: Option<f64>,
    /// |z| for metric checks, the KS distance for distribution checks.
    pub score: f64,
    pub limit: f64,
}

impl Check {
    pub fn pass(&self) -> bool {
        self.score <= self.limit
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.kind,
            self.name,
            fmt_opt(self.analytic),
            fmt_opt(self.mc_mean),
            fmt_opt(self.mc_se),
            fmt_f64(self.score),
            fmt_f64(self.limit),
            if self.pass() { "pass" } else { "fail" }
        )
    }
}

/// Analytic value compared against simulation. Densities are averaged
/// over the same bin the simulation uses, so the comparison carries no
/// discretization bias.
fn validation_target(
    m: &MetricSpec,
    cfg: &RelayConfig,
    st: &EvalSettings,
) -> relaylink::Result<f64> {
    match *m {
        MetricSpec::Pdf(g) => {
            let (lo, hi) = pdf_bin(db_to_linear(g));
            let q = integrate(
                |x| relay::e2e_pdf(cfg, x).map(|r| r.value),
                lo,
                hi,
                QuadOptions::rel(1e-10),
            )?;
            Ok(q.value / (hi - lo))
        }
        _ => m.analytic(cfg, st).map(|r| r.value),
    }
}

fn point_prefix(sc: &Scenario, p: &Point) -> String {
    match (sc.sweep, p.axis_db) {
        (Some(s), Some(v)) => format!("{}={}/", s.axis.label(), fmt_f64(v)),
        _ => String::new(),
    }
}

/// Runs every metric against simulation at every scenario point, plus KS
/// checks of both single-hop samplers, and writes the report.
pub fn run_validate<W: Write + ?Sized>(sc: &Scenario, out: &mut W) -> Result<Outcome, CliError> {
    let mc = sc
        .mc
        .ok_or_else(|| CliError::config(format!("scenario `{}` has no [mc] section", sc.name)))?;
    let st = &sc.settings;
    let mut outcome = Outcome::default();
    let mut seen_rf: Vec<f64> = Vec::new();
    writeln!(out, "{REPORT_HEADER}")?;
    for p in sc.points() {
        let cfg = sc.relay_config(&p)?;
        let prefix = point_prefix(sc, &p);
        let sims = simulate(&cfg, &sc.metrics, st, &mc)?;
        let mut checks = Vec::new();
        for (m, &(mean, se)) in sc.metrics.iter().zip(&sims) {
            let name = format!("{prefix}{}", sc.metric_label(m, &p.curve));
            let (analytic, score) = match validation_target(m, &cfg, st) {
                Ok(a) => (
                    a,
                    Estimate {
                        mean,
                        std_error: se,
                        n: mc.n_samples,
                    }
                    .z_score(a)
                    .abs(),
                ),
                Err(_) => {
                    outcome.numeric_failures += 1;
                    (f64::NAN, f64::NAN)
                }
            };
            checks.push(Check {
                kind: "metric",
                name,
                analytic: Some(analytic),
                mc_mean: Some(mean),
                mc_se: Some(se),
                score: if score.is_nan() { f64::INFINITY } else { score },
                limit: Z_LIMIT,
            });
        }

        let fso = &cfg.fso;
        let mut g2 = draw_gamma2(fso, mc.ks_samples, mc.seed);
        let ks2 = ks_test(
            &mut g2,
            |x| fso_snr_cdf(fso, x).map(|v| v * st.cdf_scale),
            KS_LEVEL,
            KS_GRID,
        );
        checks.push(ks_check(
            format!("{prefix}gamma2:{}", p.curve),
            ks2,
            &mut outcome,
        ));

        let omega = sc.omega_db_at(&p);
        if !seen_rf.contains(&omega) {
            seen_rf.push(omega);
            let rf = &cfg.rf;
            let mut g1 = draw_gamma1(rf, mc.ks_samples, mc.seed);
            let ks1 = ks_test(
                &mut g1,
                |x| Ok(nakagami_snr_cdf(rf, x) * st.cdf_scale),
                KS_LEVEL,
                KS_GRID,
            );
            checks.push(ks_check(
                format!("gamma1:m{}/omega{}", sc.m, fmt_f64(omega)),
                ks1,
                &mut outcome,
            ));
        }

        for c in &checks {
            if !c.pass() {
                outcome.failed_checks += 1;
            }
            writeln!(out, "{}", c.to_csv())?;
        }
    }
    out.flush()?;
    Ok(outcome)
}

fn ks_check(
    name: String,
    r: relaylink::Result<relaylink::mcsim::KsResult>,
    outcome: &mut Outcome,
) -> Check {
    match r {
        Ok(r) => Check {
            kind: "ks",
            name,
            analytic: None,
            mc_mean: None,
            mc_se: None,
            score: r.statistic,
            limit: r.critical,
        },
        Err(_) => {
            outcome.numeric_failures += 1;
            Check {
                kind: "ks",
                name,
                analytic: None,
                mc_mean: None,
                mc_se: None,
                score: f64::INFINITY,
                limit: f64::NAN,
            }
        }
    }
}
