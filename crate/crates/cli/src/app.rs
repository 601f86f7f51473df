//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use relaylink::channels::TurbulencePreset;
use relaylink::relay::BinaryModulation;

use crate::error::{CliError, Outcome};
use crate::metric::{parse_asymptotic, parse_capacity_path, EvalSettings, MetricSpec};
use crate::point::{run_point, PointRequest, Turbulence};
use crate::run::{run_sweep, run_validate};
use crate::scenario::{builtin, builtin_source, McSettings, Scenario, BUILTINS, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(
    name = "relaylink",
    version,
    about = "Dual-hop RF/FSO fixed-gain relay performance metrics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one metric at one operating point.
    Point(PointArgs),
    /// Sweep a scenario and write CSV curves.
    Sweep(SweepArgs),
    /// Compare analytic metrics with simulation and write a report.
    Validate(ValidateArgs),
    /// List built-in scenarios, or print one as TOML.
    Scenarios {
        /// Scenario to print.
        name: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct ScenarioSource {
    /// Scenario file (TOML).
    pub config: Option<PathBuf>,
    /// Built-in scenario name instead of a file.
    #[arg(long, conflicts_with = "config")]
    pub scenario: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: ScenarioSource,
    /// Add (or resize) the Monte-Carlo columns.
    #[arg(long)]
    pub mc_samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write CSV here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub source: ScenarioSource,
    #[arg(long)]
    pub mc_samples: Option<u64>,
    #[arg(long)]
    pub ks_samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, hide = true, default_value_t = 1.0)]
    pub cdf_scale: f64,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    /// op, ber, capacity, mgf, moment, af, cdf, pdf (or `name:arg`).
    #[arg(long)]
    pub metric: String,
    /// Nakagami shape of the RF hop.
    #[arg(long)]
    pub m: u32,
    #[arg(long, allow_negative_numbers = true)]
    pub omega_db: f64,
    #[arg(long, conflicts_with_all = ["alpha", "beta"], required_unless_present_all = ["alpha", "beta"])]
    pub preset: Option<TurbulencePreset>,
    #[arg(long, requires = "beta")]
    pub alpha: Option<f64>,
    #[arg(long, requires = "alpha")]
    pub beta: Option<f64>,
    /// Pointing-error ratio ξ.
    #[arg(long)]
    pub xi: f64,
    /// Detection: 1 heterodyne, 2 IM/DD.
    #[arg(long, value_name = "1|2", value_parser = clap::builder::PossibleValuesParser::new(["1", "2"]))]
    pub r: String,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma2_db: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Outage threshold for `op`.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub gamma_th_db: f64,
    /// SNR point for `cdf` and `pdf`.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma_db: Option<f64>,
    /// MGF argument.
    #[arg(long)]
    pub s: Option<f64>,
    /// Order for `moment` and `af`.
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Capacity path: egbmgf or quadrature.
    #[arg(long, default_value = "egbmgf")]
    pub path: String,
    /// Also report a high-SNR expansion: all, smallest_exponent, index_j.
    #[arg(long)]
    pub asymptotic: Option<String>,
    /// Also report a Monte-Carlo estimate from this many samples.
    #[arg(long)]
    pub mc: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

impl PointArgs {
    fn metric_spec(&self) -> Result<MetricSpec, CliError> {
        if self.metric.contains(':') {
            return self.metric.parse();
        }
        let need =
            |what: &str| CliError::config(format!("--metric {} needs --{what}", self.metric));
        let text = match self.metric.as_str() {
            "mgf" => format!("mgf:{}", self.s.ok_or_else(|| need("s"))?),
            "moment" | "af" => format!("{}:{}", self.metric, self.n.ok_or_else(|| need("n"))?),
            "cdf" | "pdf" => format!(
                "{}:{}",
                self.metric,
                self.gamma_db.ok_or_else(|| need("gamma-db"))?
            ),
            other => other.to_string(),
        };
        text.parse()
    }

    pub fn request(&self) -> Result<PointRequest, CliError> {
        let turbulence = match (self.preset, self.alpha, self.beta) {
            (Some(p), _, _) => Turbulence::Preset(p),
            (None, Some(alpha), Some(beta)) => Turbulence::Shapes { alpha, beta },
            _ => return Err(CliError::config("give --preset or both --alpha and --beta")),
        };
        let modulation =
            BinaryModulation::new(self.p, self.q).map_err(|e| CliError::config(e.to_string()))?;
        Ok(PointRequest {
            metric: self.metric_spec()?,
            m: self.m,
            omega_db: self.omega_db,
            turbulence,
            xi: self.xi,
            r: self.r.parse().expect("restricted to 1 or 2"),
            gamma2_db: self.gamma2_db,
            c_gain: self.c,
            settings: EvalSettings {
                gamma_th_db: self.gamma_th_db,
                modulation,
                asymptotic: self
                    .asymptotic
                    .as_deref()
                    .map(parse_asymptotic)
                    .transpose()?,
                capacity_path: parse_capacity_path(&self.path)?,
                cdf_scale: 1.0,
            },
            mc_samples: self.mc,
            seed: self.seed,
        })
    }
}

fn load(source: &ScenarioSource, default: Option<&str>) -> Result<Scenario, CliError> {
    match (&source.config, &source.scenario) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
            Scenario::from_toml(&text)
                .map_err(|e| match e {
                    CliError::Config(msg) => CliError::config(format!("{}: {msg}", path.display())),
                    other => other,
                })
        }
        (None, Some(name)) => builtin(name),
        (None, None) => match default {
            Some(name) => builtin(name),
            None => Err(CliError::config("give a scenario file or --scenario NAME")),
        },
    }
}

fn apply_mc(
    sc: &mut Scenario,
    samples: Option<u64>,
    ks: Option<u64>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    if samples.is_none() && ks.is_none() && seed.is_none() {
        return Ok(());
    }
    let mut mc = match (sc.mc, samples) {
        (Some(mc), _) => mc,
        (None, Some(n)) => McSettings::new(n),
        (None, None) => {
            return Err(CliError::config(
                "--seed/--ks-samples need an [mc] section or --mc-samples",
            ))
        }
    };
    if let Some(n) = samples {
        mc.n_samples = n;
    }
    if let Some(n) = ks {
        mc.ks_samples = n;
    }
    if let Some(s) = seed {
        mc.seed = s;
    }
    mc.check()?;
    sc.mc = Some(mc);
    Ok(())
}

fn with_output<F>(path: &Option<PathBuf>, stdout: &mut dyn Write, f: F) -> Result<Outcome, CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<Outcome, CliError>,
{
    match path {
        Some(p) => {
            let mut buf = Vec::new();
            let outcome = f(&mut buf)?;
            fs::write(p, buf)?;
            Ok(outcome)
        }
        None => f(stdout),
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Point(args) => {
            let line = run_point(&args.request()?)?;
            writeln!(stdout, "{line}")?;
            Ok(0)
        }
        Command::Sweep(args) => {
            let mut sc = load(&args.source, None)?;
            apply_mc(&mut sc, args.mc_samples, None, args.seed)?;
            let outcome = with_output(&args.output, stdout, |w| run_sweep(&sc, w))?;
            Ok(outcome.exit_code())
        }
        Command::Validate(args) => {
            let mut sc = load(&args.source, Some("validate"))?;
            apply_mc(&mut sc, args.mc_samples, args.ks_samples, args.seed)?;
            sc.settings.cdf_scale = args.cdf_scale;
            let outcome = with_output(&args.output, stdout, |w| run_validate(&sc, w))?;
            Ok(outcome.exit_code())
        }
        Command::Scenarios { name: None } => {
            for (name, _) in BUILTINS {
                writeln!(stdout, "{name}\t{}", builtin(name)?.doc)?;
            }
            Ok(0)
        }
        Command::Scenarios { name: Some(name) } => {
            builtin(&name)?;
            write!(stdout, "{}", builtin_source(&name).expect("checked above"))?;
            Ok(0)
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Diagnostics go to `stderr`.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
