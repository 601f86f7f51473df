//! Command-line front-end for `relaylink`: scenario files, parameter
//! sweeps to CSV, single-point evaluation and Monte-Carlo validation
//! reports.

pub mod app;
pub mod error;
pub mod format;
pub mod metric;
pub mod point;
pub mod run;
pub mod scenario;

pub use error::{CliError, Outcome};
pub use metric::{EvalSettings, MetricSpec};
pub use run::{run_sweep, run_validate, CurveRow, CSV_HEADER, REPORT_HEADER};
pub use scenario::{builtin, builtin_source, Scenario, BUILTINS};
