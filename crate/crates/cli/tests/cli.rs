use std::path::PathBuf;
use std::process::Command as Proc;

use ftorus_cli::{
    emit_report, parse_config, parse_manifest, render_csv, render_json, select_runs, summary_lines, CliError, Command,
    Format, RunManifest, CSV_HEADER,
};
use ftorus_lab::{ExperimentId, ReportRow};

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_ftorus"))
}

#[test]
fn minimal_manifest_is_valid() {
    let m = parse_manifest("seed = 4\n[[run]]\nexperiment = \"psd-audit\"\nns = [4, 5]\n").unwrap();
    assert_eq!(m.seed, 4);
    assert_eq!(m.format, Format::Csv);
    assert_eq!(m.runs.len(), 1);
    assert_eq!(m.runs[0].id, ExperimentId::PsdAudit);
    assert_eq!(m.runs[0].ns, vec![4, 5]);
    assert_eq!(m.runs[0].seed, 4);
}

#[test]
fn manifest_errors() {
    assert!(matches!(parse_manifest("[[run]]\nexperiment = \"rate\"\n"), Err(CliError::SeedRequired)));
    assert_eq!(parse_manifest("out = \"x\"\n").unwrap_err().to_string(), "seed required");

    let e = parse_manifest("seed = 1\n[[run]]\nexperiment = \"warp-drive\"\n").unwrap_err();
    assert!(e.to_string().contains("warp-drive"), "{e}");
    assert!(e.to_string().contains("run[0].experiment"), "{e}");

    let e = parse_manifest("seed = 1\n[[run]]\nexperiment = \"rate\"\nsamplez = 3\n").unwrap_err();
    assert!(e.to_string().contains("samplez"), "{e}");

    let e = parse_manifest("seed = 1\ncolour = \"red\"\n").unwrap_err();
    assert!(e.to_string().contains("colour"), "{e}");

    let e = parse_manifest("seed = 1\n\n[[run]\n").unwrap_err();
    assert!(matches!(e, CliError::Parse(_)));
    assert!(e.to_string().contains("line 3"), "{e}");

    let e = parse_manifest("seed = 1\n[[run]]\nexperiment = \"rate\"\nns = [64, 32]\n").unwrap_err();
    assert!(matches!(e, CliError::Schema { .. }), "{e}");
}

#[test]
fn parse_config_reads_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.toml");
    std::fs::write(&path, "seed = 9\nformat = \"json\"\nout = \"o\"\n").unwrap();
    let m = parse_config(&path).unwrap();
    assert_eq!((m.seed, m.format, m.out), (9, Format::Json, PathBuf::from("o")));
    assert!(matches!(parse_config(&dir.path().join("missing.toml")), Err(CliError::Io { .. })));
}

#[test]
fn commands_fall_back_to_defaults() {
    let m = parse_manifest("seed = 2\n[[run]]\nexperiment = \"rate\"\nns = [16, 32]\n").unwrap();
    let conv = select_runs(&m, Command::Converge);
    assert_eq!(conv.len(), 1);
    assert_eq!(conv[0].ns, vec![16, 32]);
    let audit = select_runs(&m, Command::Audit);
    assert_eq!(audit.iter().map(|c| c.id).collect::<Vec<_>>(), vec![ExperimentId::PsdAudit, ExperimentId::ModelSanity]);
    assert_eq!(select_runs(&m, Command::All).len(), 1);
    let union: usize = [Command::Audit, Command::Lip, Command::Converge, Command::Net, Command::Reach]
        .iter()
        .map(|c| c.experiments().len())
        .sum();
    assert_eq!(union, ExperimentId::ALL.len());
}

fn row(value: f64, bound: f64) -> ReportRow {
    ReportRow::check(ExperimentId::Rate, 16, "neg_defect", value, bound)
}

#[test]
fn report_formats() {
    let rows = vec![row(0.1, 1.0), row(f64::NAN, 1.0)];
    let csv = render_csv(&rows);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines[1], "rate,16,neg_defect,1.0000000000000001e-1,1.0000000000000000e0,true");
    assert!(lines[2].ends_with(",false"));

    let json: serde_json::Value = serde_json::from_str(&render_json(&rows)).unwrap();
    assert_eq!(json[0]["value"].as_f64(), Some(0.1));
    assert_eq!(json[0]["pass"], serde_json::Value::Bool(true));
    assert_eq!(json[1]["value"], serde_json::Value::String("NaN".into()));
    assert_eq!(summary_lines(&rows), vec!["rate: FAIL (1/2 rows pass)".to_string()]);
}

#[test]
fn emit_writes_and_rejects_empty() {
    let dir = tempfile::tempdir().unwrap();
    let m = RunManifest { runs: vec![], out: dir.path().join("nested"), seed: 1, format: Format::Csv };
    let path = emit_report(&[row(0.0, 1.0)], &m).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(matches!(emit_report(&[], &m), Err(CliError::EmptyReport)));
}

#[test]
fn binary_exit_codes_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.toml");
    std::fs::write(
        &manifest,
        "seed = 5\n[[run]]\nexperiment = \"psd-audit\"\nns = [4, 5, 6]\n[[run]]\nexperiment = \"model-sanity\"\nns = [4, 8]\n",
    )
    .unwrap();
    let run = |out: &str, extra: &[&str]| {
        let o = bin()
            .arg("audit")
            .arg("--config")
            .arg(&manifest)
            .arg("--out")
            .arg(dir.path().join(out))
            .args(extra)
            .output()
            .unwrap();
        (o.status.code(), String::from_utf8(o.stdout).unwrap())
    };
    let (code, stdout) = run("a", &[]);
    assert_eq!(code, Some(0), "{stdout}");
    assert!(stdout.contains("psd-audit: PASS"));
    let (code, _) = run("b", &[]);
    assert_eq!(code, Some(0));
    let a = std::fs::read(dir.path().join("a/report.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/report.csv")).unwrap();
    assert_eq!(a, b);

    let (code, _) = run("c", &["--format", "json"]);
    assert_eq!(code, Some(0));
    assert!(dir.path().join("c/report.json").exists());

    // An unattainable tolerance makes rows fail and the exit code nonzero.
    std::fs::write(&manifest, "seed = 5\n[[run]]\nexperiment = \"model-sanity\"\nns = [4]\ntol = 0.0\n").unwrap();
    let (code, stdout) = run("d", &[]);
    assert_eq!(code, Some(1), "{stdout}");
    assert!(stdout.contains("model-sanity: FAIL"));

    let o = bin().arg("net").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed required"));
}
