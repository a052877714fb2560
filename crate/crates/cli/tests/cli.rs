use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn dphase(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dphase"));
    cmd.args(args).env_remove("DPHASE_WORKERS");
    if let Some(w) = workers {
        cmd.env("DPHASE_WORKERS", w);
    }
    cmd.output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const SMALL: &str = r#"
scenario = "small"

[data]
dim = 2
horizon = 0.02
alpha = 0.6
p = { family = "affine", offset = 2.2, slope = [0.1, 0.0] }
q = { family = "affine", offset = 2.4, slope = [0.0, 0.1] }
a = { family = "constant", value = 0.3 }
b = { family = "constant", value = 0.3 }

[solver]
m_per_dim = 4
tau = 5e-4
eps = 1e-2

[initial]
family = "sinusoidal"
amplitude = 1.0
wavenumbers = [1.0, 1.0]
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(format!("{name}.toml"));
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn heat_run_writes_artifacts_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("heat");
    let cfg = scenarios().join("heat_mms.toml");
    let o = dphase(&["run", path_str(&cfg), "--out", path_str(&out)], None);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for f in [
        "manifest.json",
        "timeseries.csv",
        "higher_integrability.csv",
        "second_order.csv",
        "steps.csv",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    assert!(out.join("snapshot_t0.05.csv").is_file());
    let m = manifest(&out);
    assert_eq!(m["verdict"], "passed");
    assert!(m["final_l2_error"].as_f64().unwrap() <= 5e-3);

    let r = dphase(&["report", path_str(&out)], None);
    assert_eq!(r.status.code(), Some(0));
    let text = String::from_utf8(r.stdout).unwrap();
    assert!(text.contains("eq:energy"));
    assert!(out.join("plots").is_dir());
}

#[test]
fn gap_violation_is_rejected_with_line() {
    let cfg = scenarios().join("gap_violation.toml");
    for verb in ["run", "validate"] {
        let o = dphase(&[verb, path_str(&cfg)], None);
        assert_eq!(o.status.code(), Some(1));
        let err = String::from_utf8(o.stderr).unwrap();
        assert!(err.contains("eq:gap-z"), "{err}");
        assert!(err.contains("gap_violation.toml:4:"), "{err}");
    }
}

#[test]
fn unknown_key_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("eps = 1e-2", "eps = 1e-2\nepsilon = 3");
    let cfg = write_config(tmp.path(), "typo", &text);
    let o = dphase(&["validate", path_str(&cfg)], None);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("typo.toml:17:"), "{err}");
    assert!(err.contains("epsilon"), "{err}");
}

#[test]
fn validate_accepts_bundled_scenarios() {
    for name in ["heat_mms", "unordered_sweep", "linf_property"] {
        let cfg = scenarios().join(format!("{name}.toml"));
        let o = dphase(&["validate", path_str(&cfg)], None);
        assert_eq!(o.status.code(), Some(0), "{name}");
        assert!(String::from_utf8(o.stdout).unwrap().contains("valid"));
    }
}

#[test]
fn report_on_empty_dir_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dphase(&["report", path_str(tmp.path())], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_without_block_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small", SMALL);
    let o = dphase(
        &[
            "sweep",
            path_str(&cfg),
            "--out",
            path_str(&tmp.path().join("o")),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn outputs_identical_across_repeats_and_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small", SMALL);
    let runs: Vec<PathBuf> = [("a", "1"), ("b", "1"), ("c", "4")]
        .iter()
        .map(|(name, w)| {
            let out = tmp.path().join(name);
            let o = dphase(&["run", path_str(&cfg), "--out", path_str(&out)], Some(w));
            assert_eq!(
                o.status.code(),
                Some(0),
                "{}",
                String::from_utf8_lossy(&o.stderr)
            );
            out
        })
        .collect();
    assert_eq!(manifest(&runs[0])["workers"], 1);
    assert_eq!(manifest(&runs[2])["workers"], 4);
    for f in [
        "timeseries.csv",
        "higher_integrability.csv",
        "second_order.csv",
        "steps.csv",
    ] {
        let first = fs::read(runs[0].join(f)).unwrap();
        for other in &runs[1..] {
            assert_eq!(first, fs::read(other.join(f)).unwrap(), "{f} differs");
        }
    }
}

#[test]
fn single_member_sweep_matches_single_run() {
    let tmp = tempfile::tempdir().unwrap();
    let single = write_config(tmp.path(), "single", SMALL);
    let swept = write_config(
        tmp.path(),
        "swept",
        &format!("{SMALL}\n[sweep]\neps = [1e-2]\n"),
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(
        dphase(&["run", path_str(&single), "--out", path_str(&a)], None)
            .status
            .code(),
        Some(0)
    );
    let o = dphase(&["sweep", path_str(&swept), "--out", path_str(&b)], None);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(
        fs::read(a.join("timeseries.csv")).unwrap(),
        fs::read(b.join("members/eps_0/timeseries.csv")).unwrap()
    );
}

#[test]
fn sweep_report_prints_cauchy_table() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[sweep]\neps = [1e-1, 5e-2, 2.5e-2]\n");
    let cfg = write_config(tmp.path(), "cont", &text);
    let out = tmp.path().join("o");
    let o = dphase(&["sweep", path_str(&cfg), "--out", path_str(&out)], None);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(manifest(&out)["kind"], "sweep");
    let r = dphase(&["report", path_str(&out)], None);
    let text = String::from_utf8(r.stdout).unwrap();
    assert!(text.contains("eps_cauchy"), "{text}");
    assert!(text.contains("d_k"), "{text}");
    assert!(out.join("plots/eps_cauchy.dat").is_file());
}

#[test]
fn newton_failure_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace(
        "eps = 1e-2",
        "eps = 1e-2\nnewton_max_iter = 1\nnewton_tol = 1e-15\ntau_retry_cap = 0",
    );
    let cfg = write_config(tmp.path(), "stiff", &text);
    let out = tmp.path().join("o");
    let o = dphase(&["run", path_str(&cfg), "--out", path_str(&out)], None);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let m = manifest(&out);
    assert_eq!(m["verdict"], "solver_failure");
    assert!(m["failure"].as_str().unwrap().contains("Newton"));
}
