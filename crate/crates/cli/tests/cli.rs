use std::path::PathBuf;
use std::process::{Command, Output};

use relaylink::channels::{Detection, FsoHop, RfHop, TurbulencePreset};
use relaylink::relay::{e2e_cdf, RelayConfig};
use relaylink_cli::{CSV_HEADER, REPORT_HEADER};

fn relaylink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaylink"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn field(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {line}"))
        .parse()
        .unwrap()
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("relaylink-{}-{name}", std::process::id()));
    std::fs::write(&p, body).unwrap();
    p
}

const POINT: &[&str] = &[
    "point",
    "--m",
    "2",
    "--omega-db",
    "10",
    "--preset",
    "strong",
    "--xi",
    "1.1",
    "--gamma2-db",
    "10",
];

fn point(extra: &[&str]) -> Output {
    let mut a = POINT.to_vec();
    a.extend_from_slice(extra);
    relaylink(&a)
}

#[test]
fn point_outage_matches_library_cdf_at_threshold() {
    let o = point(&["--metric", "op", "--r", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cfg = RelayConfig::new(
        RfHop::new(2, 10.0).unwrap(),
        FsoHop::from_preset(TurbulencePreset::Strong, 1.1, Detection::ImDd, 10.0).unwrap(),
        1.0,
    )
    .unwrap();
    let expect = e2e_cdf(&cfg, 1.0).unwrap().value;
    let got = field(&stdout(&o), "value");
    assert!((got / expect - 1.0).abs() < 1e-12, "{got} vs {expect}");
}

#[test]
fn capacity_paths_agree() {
    let a = field(
        &stdout(&point(&["--metric", "capacity", "--r", "1"])),
        "value",
    );
    let b = field(
        &stdout(&point(&[
            "--metric",
            "capacity",
            "--r",
            "1",
            "--path",
            "quadrature",
        ])),
        "value",
    );
    assert!((a / b - 1.0).abs() < 1e-4, "{a} vs {b}");
}

#[test]
fn point_with_simulation_and_asymptote() {
    let o = point(&["--metric", "op", "--r", "1", "--mc", "100000"]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    let (v, mean, se) = (
        field(&line, "value"),
        field(&line, "mc_mean"),
        field(&line, "mc_se"),
    );
    assert!((v - mean).abs() < 4.0 * se, "{line}");

    let o = relaylink(&[
        "point",
        "--metric",
        "op",
        "--m",
        "1",
        "--omega-db",
        "20",
        "--preset",
        "strong",
        "--xi",
        "1.1",
        "--r",
        "1",
        "--gamma2-db",
        "50",
        "--asymptotic",
        "all",
    ]);
    let line = stdout(&o);
    assert!(
        (field(&line, "asymptotic") / field(&line, "value") - 1.0).abs() < 1e-2,
        "{line}"
    );
}

#[test]
fn missing_detection_is_a_usage_error() {
    let o = point(&["--metric", "op"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("1|2"), "{}", stderr(&o));
    let o = point(&["--metric", "op", "--r", "3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_metric_arguments_exit_one() {
    assert_eq!(
        point(&["--metric", "mgf", "--r", "1"]).status.code(),
        Some(1)
    );
    assert_eq!(
        point(&["--metric", "moment:0", "--r", "1"]).status.code(),
        Some(1)
    );
    assert_eq!(
        point(&["--metric", "wobble", "--r", "1"]).status.code(),
        Some(1)
    );
}

#[test]
fn scenarios_list_and_print() {
    let o = relaylink(&["scenarios"]);
    assert_eq!(o.status.code(), Some(0));
    let names: Vec<String> = stdout(&o)
        .lines()
        .map(|l| l.split('\t').next().unwrap().to_string())
        .collect();
    for n in [
        "fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "validate",
    ] {
        assert!(names.iter().any(|x| x == n), "{n} missing");
    }
    let o = relaylink(&["scenarios", "fig3"]);
    assert!(stdout(&o).contains("[sweep]"));
    assert_eq!(relaylink(&["scenarios", "fig99"]).status.code(), Some(1));
}

#[test]
fn printed_scenario_round_trips_through_a_file() {
    let src = stdout(&relaylink(&["scenarios", "fig4"]));
    let path = scratch("fig4.toml", &src);
    let a = relaylink(&["sweep", path.to_str().unwrap()]);
    let b = relaylink(&["sweep", "--scenario", "fig4"]);
    std::fs::remove_file(&path).ok();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_output_is_deterministic_csv() {
    let a = relaylink(&["sweep", "--scenario", "fig1", "--mc-samples", "20000"]);
    let b = relaylink(&["sweep", "--scenario", "fig1", "--mc-samples", "20000"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    // 21 points × 6 curves.
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 126);
    assert!(rows
        .iter()
        .all(|r| r.split(',').count() == 7 && !r.contains("NaN")));
}

#[test]
fn config_errors_exit_one() {
    let bad = [
        ("unknown", "name = \"x\"\nm = 2\nbogus = 1\n"),
        (
            "both-fixed",
            "name = \"x\"\nm = 2\nomega_db = 10\ngamma2_db = 10\nmetrics = [\"op\"]\n[fso]\npreset = \"strong\"\nxi = 1.1\nr = 1\n[sweep]\naxis = \"omega_db\"\nstart_db = 0\nstop_db = 10\nstep_db = 1\n",
        ),
        ("syntax", "name = \n"),
    ];
    for (name, body) in bad {
        let p = scratch(name, body);
        let o = relaylink(&["sweep", p.to_str().unwrap()]);
        std::fs::remove_file(&p).ok();
        assert_eq!(o.status.code(), Some(1), "{name}: {}", stderr(&o));
        assert!(stderr(&o).starts_with("error:"), "{name}");
    }
    assert_eq!(
        relaylink(&["sweep", "/nonexistent/x.toml"]).status.code(),
        Some(1)
    );
    // Monte-Carlo budgets below the minimum are rejected.
    assert_eq!(
        relaylink(&["validate", "--mc-samples", "10"]).status.code(),
        Some(1)
    );
}

#[test]
fn perturbed_reference_fails_validation() {
    let o = relaylink(&[
        "validate",
        "--mc-samples",
        "1000000",
        "--ks-samples",
        "200000",
        "--cdf-scale",
        "1.05",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text
        .lines()
        .skip(1)
        .any(|l| l.starts_with("ks,") && l.ends_with(",fail")));
    assert!(text
        .lines()
        .any(|l| l.starts_with("metric,op:") && l.ends_with(",fail")));
}

#[test]
fn default_validation_matrix_passes() {
    let path = std::env::temp_dir().join(format!("relaylink-{}-report.csv", std::process::id()));
    let o = relaylink(&["validate", "-o", path.to_str().unwrap()]);
    let report = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(o.status.code(), Some(0), "{report}");
    assert!(o.stdout.is_empty());
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some(REPORT_HEADER));
    let rows: Vec<&str> = lines.collect();
    // 6 curves × 9 metrics + 6 γ2 KS + 1 γ1 KS.
    assert_eq!(rows.len(), 61);
    assert!(rows.iter().all(|r| r.ends_with(",pass")));
}
