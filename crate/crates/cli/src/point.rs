//! Single-point evaluation from fully specified parameters.

use relaylink::channels::{Detection, FsoHop, RfHop, TurbulencePreset};
use relaylink::mcsim::{estimate_metrics, SimPlan};
use relaylink::relay::RelayConfig;

use crate::error::CliError;
use crate::format::fmt_f64;
use crate::metric::{db_to_linear, EvalSettings, MetricSpec};

/// Turbulence input: a preset or explicit shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Turbulence {
    Preset(TurbulencePreset),
    Shapes { alpha: f64, beta: f64 },
}

/// Everything needed for one evaluation, SNRs in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRequest {
    pub metric: MetricSpec,
    pub m: u32,
    pub omega_db: f64,
    pub turbulence: Turbulence,
    pub xi: f64,
    pub r: u32,
    pub gamma2_db: f64,
    pub c_gain: f64,
    pub settings: EvalSettings,
    pub mc_samples: Option<u64>,
    pub seed: u64,
}

impl PointRequest {
    pub fn relay_config(&self) -> Result<RelayConfig, CliError> {
        let bad = |e: relaylink::Error| CliError::config(e.to_string());
        let rf = RfHop::new(self.m, db_to_linear(self.omega_db)).map_err(bad)?;
        let det = Detection::from_r(self.r).map_err(bad)?;
        let g2 = db_to_linear(self.gamma2_db);
        let fso = match self.turbulence {
            Turbulence::Preset(p) => FsoHop::from_preset(p, self.xi, det, g2),
            Turbulence::Shapes { alpha, beta } => FsoHop::new(alpha, beta, self.xi, det, g2),
        }
        .map_err(bad)?;
        RelayConfig::new(rf, fso, self.c_gain).map_err(bad)
    }
}

/// Evaluates the request and renders one `key=value` line:
/// `metric`, `value`, `err_est`, `path`, then `asymptotic` and
/// `mc_mean`/`mc_se` when requested.
pub fn run_point(req: &PointRequest) -> Result<String, CliError> {
    let cfg = req.relay_config()?;
    let r = req.metric.analytic(&cfg, &req.settings)?;
    let mut line = format!(
        "metric={} value={} err_est={} path={}",
        req.metric,
        fmt_f64(r.value),
        fmt_f64(r.error_estimate),
        r.path.label()
    );
    if let Some(a) = req.metric.asymptotic(&cfg, &req.settings) {
        line.push_str(&format!(" asymptotic={}", fmt_f64(a?.value)));
    }
    if let Some(n) = req.mc_samples {
        let plan = SimPlan::new(cfg, n, req.seed).map_err(|e| CliError::config(e.to_string()))?;
        let (stat, k) = req.metric.mc_probe(&req.settings);
        let e = estimate_metrics(&plan, &[stat])[0];
        line.push_str(&format!(
            " mc_mean={} mc_se={}",
            fmt_f64(e.mean * k),
            fmt_f64(e.std_error * k)
        ));
    }
    Ok(line)
}
