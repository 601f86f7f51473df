//! Scenario files: TOML with `[rf]`, `[fso]`, `[relay]`, `[sweep]`,
//! `[metrics]` and `[mc]` sections. SNR-like quantities are in dB.

use std::fmt;

use relaylink::channels::{Detection, FsoHop, RfHop, TurbulencePreset};
use relaylink::relay::{BinaryModulation, RelayConfig};
use serde::Deserialize;

use crate::error::CliError;
use crate::format::fmt_f64;
use crate::metric::{
    db_to_linear, parse_asymptotic, parse_capacity_path, EvalSettings, MetricSpec,
};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_KS_SAMPLES: u64 = 1_000_000;
const MAX_SWEEP_POINTS: usize = 10_000;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    doc: Option<String>,
    rf: RawRf,
    fso: RawFso,
    #[serde(default)]
    relay: RawRelay,
    sweep: Option<RawSweep>,
    metrics: RawMetrics,
    mc: Option<RawMc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRf {
    m: u32,
    omega_db: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFso {
    preset: Option<OneOrMany<String>>,
    alpha: Option<f64>,
    beta: Option<f64>,
    xi: OneOrMany<f64>,
    r: OneOrMany<u32>,
    gamma2_db: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRelay {
    #[serde(default = "one")]
    c: f64,
}

impl Default for RawRelay {
    fn default() -> Self {
        RawRelay { c: 1.0 }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: SweepAxis,
    start_db: f64,
    stop_db: f64,
    step_db: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetrics {
    list: Vec<String>,
    #[serde(default)]
    gamma_th_db: f64,
    #[serde(default = "one")]
    p: f64,
    #[serde(default = "one")]
    q: f64,
    asymptotic: Option<String>,
    capacity_path: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMc {
    n_samples: u64,
    seed: Option<u64>,
    batch: Option<u64>,
    ks_samples: Option<u64>,
}

/// Which dB quantity a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Average RF-hop SNR Ω.
    OmegaDb,
    /// Average FSO-hop electrical SNR γ̄₂.
    Gamma2Db,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::OmegaDb => "omega_db",
            SweepAxis::Gamma2Db => "gamma2_db",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

impl Sweep {
    /// Number of grid points.
    pub fn len(&self) -> usize {
        ((self.stop_db - self.start_db) / self.step_db + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid points from start to stop inclusive, rounded to 1e-9 dB.
    pub fn points(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| ((self.start_db + i as f64 * self.step_db) * 1e9).round() / 1e9)
            .collect()
    }
}

/// Turbulence strength: a named preset or explicit shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FsoShape {
    Preset(TurbulencePreset),
    Explicit { alpha: f64, beta: f64 },
}

/// One FSO-hop parameterization; a scenario has one curve per combination
/// of turbulence, detection and ξ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curve {
    pub shape: FsoShape,
    pub xi: f64,
    pub r: u32,
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.shape {
            FsoShape::Preset(p) => write!(f, "{}", p.label())?,
            FsoShape::Explicit { alpha, beta } => {
                write!(f, "a{}b{}", fmt_f64(alpha), fmt_f64(beta))?
            }
        }
        write!(f, "/r{}/xi{}", self.r, fmt_f64(self.xi))
    }
}

impl Curve {
    pub fn fso_hop(&self, gamma2_db: f64) -> relaylink::Result<FsoHop> {
        let det = Detection::from_r(self.r)?;
        let g2 = db_to_linear(gamma2_db);
        match self.shape {
            FsoShape::Preset(p) => FsoHop::from_preset(p, self.xi, det, g2),
            FsoShape::Explicit { alpha, beta } => FsoHop::new(alpha, beta, self.xi, det, g2),
        }
    }
}

/// Simulation settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub n_samples: u64,
    pub seed: u64,
    pub batch: Option<u64>,
    pub ks_samples: u64,
}

impl McSettings {
    pub fn new(n_samples: u64) -> Self {
        McSettings {
            n_samples,
            seed: DEFAULT_SEED,
            batch: None,
            ks_samples: DEFAULT_KS_SAMPLES,
        }
    }
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub doc: String,
    pub m: u32,
    pub omega_db: Option<f64>,
    pub gamma2_db: Option<f64>,
    pub curves: Vec<Curve>,
    pub c_gain: f64,
    pub sweep: Option<Sweep>,
    pub metrics: Vec<MetricSpec>,
    pub settings: EvalSettings,
    pub mc: Option<McSettings>,
}

/// One evaluation point: the swept value (if any) and the curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub axis_db: Option<f64>,
    pub curve: Curve,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawScenario) -> Result<Self, CliError> {
        let sweep = match raw.sweep {
            Some(s) => {
                if !(s.start_db.is_finite() && s.stop_db.is_finite() && s.step_db.is_finite()) {
                    return Err(CliError::config(
                        "sweep: start_db, stop_db and step_db must be finite",
                    ));
                }
                if s.step_db <= 0.0 {
                    return Err(CliError::config("sweep.step_db must be > 0"));
                }
                if s.start_db > s.stop_db {
                    return Err(CliError::config(
                        "sweep.start_db must not exceed sweep.stop_db",
                    ));
                }
                let sw = Sweep {
                    axis: s.axis,
                    start_db: s.start_db,
                    stop_db: s.stop_db,
                    step_db: s.step_db,
                };
                if sw.len() > MAX_SWEEP_POINTS {
                    return Err(CliError::config(format!(
                        "sweep has more than {MAX_SWEEP_POINTS} points"
                    )));
                }
                Some(sw)
            }
            None => None,
        };
        let swept = sweep.map(|s| s.axis);
        let omega_db = fixed_or_swept(
            raw.rf.omega_db,
            swept == Some(SweepAxis::OmegaDb),
            "rf.omega_db",
        )?;
        let gamma2_db = fixed_or_swept(
            raw.fso.gamma2_db,
            swept == Some(SweepAxis::Gamma2Db),
            "fso.gamma2_db",
        )?;

        RfHop::new(raw.rf.m, 1.0).map_err(|e| CliError::config(format!("rf.m: {e}")))?;

        let shapes = match (raw.fso.preset, raw.fso.alpha, raw.fso.beta) {
            (Some(p), None, None) => {
                let names = p.into_vec();
                if names.is_empty() {
                    return Err(CliError::config("fso.preset must not be empty"));
                }
                names
                    .iter()
                    .map(|n| n.parse::<TurbulencePreset>().map(FsoShape::Preset))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::config(format!("fso.preset: {e}")))?
            }
            (None, Some(alpha), Some(beta)) => vec![FsoShape::Explicit { alpha, beta }],
            (None, _, _) => {
                return Err(CliError::config(
                    "fso: give either `preset` or both `alpha` and `beta`",
                ))
            }
            (Some(_), _, _) => {
                return Err(CliError::config(
                    "fso: `preset` conflicts with `alpha`/`beta`",
                ))
            }
        };
        let xis = raw.fso.xi.into_vec();
        let rs = raw.fso.r.into_vec();
        if xis.is_empty() || rs.is_empty() {
            return Err(CliError::config("fso.xi and fso.r must not be empty"));
        }
        if let Some(r) = rs.iter().find(|r| !matches!(r, 1 | 2)) {
            return Err(CliError::config(format!(
                "fso.r = {r}; expected 1 (heterodyne) or 2 (IM/DD)"
            )));
        }
        let mut curves = Vec::new();
        for &shape in &shapes {
            for &r in &rs {
                for &xi in &xis {
                    let c = Curve { shape, xi, r };
                    c.fso_hop(0.0)
                        .map_err(|e| CliError::config(format!("fso ({c}): {e}")))?;
                    curves.push(c);
                }
            }
        }

        let c_gain = raw.relay.c;
        if !(c_gain > 0.0 && c_gain.is_finite()) {
            return Err(CliError::config("relay.c must be positive and finite"));
        }

        if raw.metrics.list.is_empty() {
            return Err(CliError::config("metrics.list must not be empty"));
        }
        let metrics = raw
            .metrics
            .list
            .iter()
            .map(|s| s.parse::<MetricSpec>())
            .collect::<Result<Vec<_>, _>>()?;
        if !raw.metrics.gamma_th_db.is_finite() {
            return Err(CliError::config("metrics.gamma_th_db must be finite"));
        }
        let modulation = BinaryModulation::new(raw.metrics.p, raw.metrics.q)
            .map_err(|e| CliError::config(format!("metrics.p/q: {e}")))?;
        let settings = EvalSettings {
            gamma_th_db: raw.metrics.gamma_th_db,
            modulation,
            asymptotic: raw
                .metrics
                .asymptotic
                .as_deref()
                .map(parse_asymptotic)
                .transpose()?,
            capacity_path: match raw.metrics.capacity_path.as_deref() {
                Some(s) => parse_capacity_path(s)?,
                None => EvalSettings::default().capacity_path,
            },
            cdf_scale: 1.0,
        };

        let mc = match raw.mc {
            Some(m) => {
                let s = McSettings {
                    n_samples: m.n_samples,
                    seed: m.seed.unwrap_or(DEFAULT_SEED),
                    batch: m.batch,
                    ks_samples: m.ks_samples.unwrap_or(DEFAULT_KS_SAMPLES),
                };
                s.check()?;
                Some(s)
            }
            None => None,
        };

        let scenario = Scenario {
            name: raw.name.unwrap_or_else(|| "custom".to_string()),
            doc: raw.doc.unwrap_or_default(),
            m: raw.rf.m,
            omega_db,
            gamma2_db,
            curves,
            c_gain,
            sweep,
            metrics,
            settings,
            mc,
        };
        for p in scenario.points() {
            scenario
                .relay_config(&p)
                .map_err(|e| CliError::config(format!("{e}")))?;
        }
        Ok(scenario)
    }

    /// Evaluation points in output order: axis ascending, then curves.
    pub fn points(&self) -> Vec<Point> {
        let axis: Vec<Option<f64>> = match &self.sweep {
            Some(s) => s.points().into_iter().map(Some).collect(),
            None => vec![None],
        };
        axis.into_iter()
            .flat_map(|a| {
                self.curves
                    .iter()
                    .map(move |&curve| Point { axis_db: a, curve })
            })
            .collect()
    }

    fn axis_value(&self, p: &Point, axis: SweepAxis, fixed: Option<f64>) -> f64 {
        match (self.sweep, p.axis_db) {
            (Some(s), Some(v)) if s.axis == axis => v,
            _ => fixed.expect("validated scenario has every non-swept value"),
        }
    }

    pub fn omega_db_at(&self, p: &Point) -> f64 {
        self.axis_value(p, SweepAxis::OmegaDb, self.omega_db)
    }

    pub fn gamma2_db_at(&self, p: &Point) -> f64 {
        self.axis_value(p, SweepAxis::Gamma2Db, self.gamma2_db)
    }

    pub fn rf_hop(&self, p: &Point) -> relaylink::Result<RfHop> {
        RfHop::new(self.m, db_to_linear(self.omega_db_at(p)))
    }

    pub fn relay_config(&self, p: &Point) -> relaylink::Result<RelayConfig> {
        let rf = self.rf_hop(p)?;
        let fso = p.curve.fso_hop(self.gamma2_db_at(p))?;
        RelayConfig::new(rf, fso, self.c_gain)
    }

    /// Column label for a metric: the bare name for single-curve
    /// scenarios, `name:curve` otherwise.
    pub fn metric_label(&self, metric: &MetricSpec, curve: &Curve) -> String {
        if self.curves.len() == 1 {
            metric.to_string()
        } else {
            format!("{metric}:{curve}")
        }
    }
}

impl McSettings {
    pub fn check(&self) -> Result<(), CliError> {
        if self.n_samples < 1000 {
            return Err(CliError::config("mc.n_samples must be at least 1000"));
        }
        if self.ks_samples < 1000 {
            return Err(CliError::config("mc.ks_samples must be at least 1000"));
        }
        if self.batch == Some(0) {
            return Err(CliError::config("mc.batch must be positive"));
        }
        Ok(())
    }
}

fn fixed_or_swept(v: Option<f64>, swept: bool, field: &str) -> Result<Option<f64>, CliError> {
    match (v, swept) {
        (Some(_), true) => Err(CliError::config(format!(
            "{field} is swept; remove the fixed value"
        ))),
        (None, false) => Err(CliError::config(format!(
            "{field} is required unless it is the sweep axis"
        ))),
        (Some(x), false) if !x.is_finite() => {
            Err(CliError::config(format!("{field} must be finite")))
        }
        (v, _) => Ok(v),
    }
}

/// Built-in scenarios as `(name, toml)`.
pub const BUILTINS: &[(&str, &str)] = &[
    ("fig1", include_str!("scenarios/fig1.toml")),
    ("fig2", include_str!("scenarios/fig2.toml")),
    ("fig3", include_str!("scenarios/fig3.toml")),
    ("fig4", include_str!("scenarios/fig4.toml")),
    ("fig5", include_str!("scenarios/fig5.toml")),
    ("fig6", include_str!("scenarios/fig6.toml")),
    ("fig7", include_str!("scenarios/fig7.toml")),
    ("validate", include_str!("scenarios/validate.toml")),
];

pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn builtin(name: &str) -> Result<Scenario, CliError> {
    let text = builtin_source(name).ok_or_else(|| {
        let names: Vec<&str> = BUILTINS.iter().map(|(n, _)| *n).collect();
        CliError::config(format!(
            "unknown scenario `{name}`; built-ins: {}",
            names.join(", ")
        ))
    })?;
    Scenario::from_toml(text)
}
