use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use csiwave::pipeline::MetricsReport;
use tempfile::TempDir;

const TINY: &str = "\
[synth]
classes = [1, 14]
samples_per_class = 5

[train]
epochs = 2
batch_size = 4

[baseline]
enabled = false
";

fn csiwave(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csiwave"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn csiwave")
}

fn ok(out: &Output) -> &Output {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.toml"), TINY).unwrap();
    ok(&csiwave(dir.path(), &["synth", "-c", "tiny.toml", "-o", "ds"]));
    dir
}

#[test]
fn eval_writes_consistent_reports() {
    let dir = workspace();
    let d = dir.path();
    ok(&csiwave(d, &["train", "-c", "tiny.toml", "-d", "ds", "-o", "model.bin", "--all"]));
    ok(&csiwave(d, &["eval", "-c", "tiny.toml", "-d", "ds", "-m", "model.bin", "-o", "ev", "--split", "all"]));

    let report = MetricsReport::from_json(&fs::read_to_string(d.join("ev/metrics.json")).unwrap()).unwrap();
    assert_eq!(report.class_count(), 2);
    for row in &report.confusion {
        assert_eq!(row.iter().sum::<u64>(), 5);
    }
    assert_eq!(report.total(), 10);
    let trace: u64 = (0..2).map(|i| report.confusion[i][i]).sum();
    assert_eq!(report.accuracy, trace as f64 / 10.0);

    let csv = fs::read_to_string(d.join("ev/confusion.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(fs::read_to_string(d.join("ev/confusion.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn train_is_byte_reproducible() {
    let dir = workspace();
    let d = dir.path();
    ok(&csiwave(d, &["train", "-c", "tiny.toml", "-d", "ds", "-o", "a.bin"]));
    ok(&csiwave(d, &["train", "-c", "tiny.toml", "-d", "ds", "-o", "b.bin"]));
    let a = fs::read(d.join("a.bin")).unwrap();
    assert_eq!(&a[..4], b"WCNN");
    assert_eq!(a, fs::read(d.join("b.bin")).unwrap());
    let curve = fs::read_to_string(d.join("a.loss.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("epoch,mean_loss"));
    assert_eq!(curve.lines().count(), 3);
}

#[test]
fn compare_pcs_emits_one_row_per_index_set() {
    let dir = workspace();
    let out = csiwave(
        dir.path(),
        &["compare-pcs", "-c", "tiny.toml", "-d", "ds", "--indices", "1,2", "--indices", "2,3"],
    );
    let stdout = String::from_utf8(ok(&out).stdout.clone()).unwrap();
    let rows: Vec<&str> = stdout.lines().skip(1).collect();
    assert_eq!(rows.len(), 2, "{stdout}");
    assert!(rows[0].starts_with("1,2"));
    assert!(rows[1].starts_with("2,3"));
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    let dir = workspace();
    let d = dir.path();
    assert_eq!(csiwave(d, &["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(csiwave(d, &["compare-pcs", "--indices", "a,b"]).status.code(), Some(1));
    assert_eq!(csiwave(d, &["nonsense"]).status.code(), Some(1));
    assert_eq!(csiwave(d, &["--help"]).status.code(), Some(0));

    assert_eq!(csiwave(d, &["eval", "-m", "missing.bin", "-d", "ds"]).status.code(), Some(2));
    fs::write(d.join("junk.bin"), b"WCNNjunk").unwrap();
    let out = csiwave(d, &["eval", "-m", "junk.bin", "-d", "ds"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("junk.bin"));
    fs::write(d.join("typo.toml"), "[sg]\nhalf_widht = 3\n").unwrap();
    assert_eq!(csiwave(d, &["synth", "-c", "typo.toml", "-o", "x"]).status.code(), Some(2));

    let diverge = TINY.replace("batch_size = 4", "batch_size = 4\nlearning_rate = 1e200\noptimizer = { kind = \"sgd\" }");
    fs::write(d.join("diverge.toml"), diverge).unwrap();
    let out = csiwave(d, &["train", "-c", "diverge.toml", "-d", "ds", "-o", "nan.bin", "--all"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn ingest_and_predict_round_trip() {
    let dir = workspace();
    let d = dir.path();
    ok(&csiwave(
        d,
        &["ingest", "-o", "copy", "--format", "csv", "--subject", "vol3", "ds/c01_000.csiw", "ds/c14_000.csiw"],
    ));
    let manifest = fs::read_to_string(d.join("copy/manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 3);
    assert!(manifest.contains("c01_000.csv,1,vol3"));

    ok(&csiwave(d, &["train", "-c", "tiny.toml", "-d", "ds", "-o", "m.bin", "--all"]));
    let out = csiwave(d, &["predict", "-c", "tiny.toml", "-m", "m.bin", "copy/c01_000.csv"]);
    let stdout = String::from_utf8(ok(&out).stdout.clone()).unwrap();
    let row = stdout.lines().nth(1).unwrap();
    let class: u8 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!(class == 1 || class == 14, "{row}");
}

#[test]
fn preprocess_reports_every_segment() {
    let dir = workspace();
    let out = csiwave(dir.path(), &["preprocess", "-c", "tiny.toml", "-d", "ds"]);
    let stdout = String::from_utf8(ok(&out).stdout.clone()).unwrap();
    assert_eq!(stdout.lines().count(), 11);
    for row in stdout.lines().skip(1) {
        let t: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
        assert!(t > 0.3 && t < 0.5, "{row}");
    }
}
