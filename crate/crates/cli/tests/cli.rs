use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(config: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_difflim"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn difflim")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

const BASE: &str = r#"
[grid]
length = 1.0
cells = 16

[coefficients.sigma]
kind = "constant"
value = 1.0

[coefficients.gamma]
kind = "constant"
value = 1.0

[source]
kind = "constant"
value = 1.0
"#;

fn find_number(v: &Value, key: &str) -> Vec<f64> {
    let mut out = Vec::new();
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                if k == key {
                    if let Some(f) = x.as_f64() {
                        out.push(f);
                    }
                }
                out.extend(find_number(x, key));
            }
        }
        Value::Array(a) => a.iter().for_each(|x| out.extend(find_number(x, key))),
        _ => {}
    }
    out
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines
        .next()
        .unwrap()
        .split(',')
        .position(|h| h == name)
        .unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn certify_isotropic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let o = run(&cfg, dir.path(), &["certify"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ck = find_number(&read_json(&dir.path().join("certify.json")), "c_K");
    assert!(!ck.is_empty());
    assert!(ck.iter().all(|c| (c - 1.0).abs() < 1e-10), "{ck:?}");
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn certify_linear() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&configs().join("linear.toml"), dir.path(), &["certify"]);
    assert!(o.status.success());
    let ck = find_number(&read_json(&dir.path().join("certify.json")), "c_K");
    assert!(ck.iter().all(|c| (c - 2.0).abs() < 1e-8), "{ck:?}");
}

#[test]
fn certify_forward_peaked_fails() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{BASE}\n[scattering]\nkernel = \"linear\"\ng_factor = 1.0\n");
    let cfg = write_config(dir.path(), &text);
    let o = run(&cfg, dir.path(), &["certify"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn tensor_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE);
    assert!(run(&cfg, dir.path(), &["tensor"]).status.success());
    let csv = std::fs::read_to_string(dir.path().join("tensor.csv")).unwrap();
    for a in column(&csv, "a11").iter().chain(&column(&csv, "a33")) {
        assert!((a - 1.0 / 3.0).abs() < 1e-10);
    }
    assert!(column(&csv, "a12").iter().all(|a| a.abs() < 1e-10));

    let dir = tempfile::tempdir().unwrap();
    assert!(
        run(&configs().join("piecewise.toml"), dir.path(), &["tensor"])
            .status
            .success()
    );
    let csv = std::fs::read_to_string(dir.path().join("tensor.csv")).unwrap();
    let x = column(&csv, "x");
    let a = column(&csv, "a11");
    for (x, a) in x.iter().zip(&a) {
        let want = if *x < 0.5 { 1.0 / 3.0 } else { 1.0 / 12.0 };
        assert!((a - want).abs() < 1e-10, "x {x} a11 {a}");
    }

    let dir = tempfile::tempdir().unwrap();
    assert!(run(&configs().join("linear.toml"), dir.path(), &["tensor"])
        .status
        .success());
    let csv = std::fs::read_to_string(dir.path().join("tensor.csv")).unwrap();
    assert!(column(&csv, "a11")
        .iter()
        .all(|a| (a - 2.0 / 3.0).abs() < 1e-8));
}

#[test]
fn diffusion_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &configs().join("cosh.toml"),
        dir.path(),
        &["solve", "--mode", "diffusion"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let err = find_number(
        &read_json(&dir.path().join("diffusion_summary.json")),
        "max_nodal_error",
    );
    assert_eq!(err.len(), 1);
    assert!(err[0] < 1e-4, "{err:?}");
    assert!(dir.path().join("diffusion.csv").exists());
}

#[test]
fn transport_manufactured() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &configs().join("mms_transport.toml"),
        dir.path(),
        &["solve", "--eps", "1"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "transport_angular.csv",
        "transport_average.csv",
        "iteration_log.json",
        "norms.json",
        "mms_errors.json",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let errors = read_json(&dir.path().join("mms_errors.json"));
    let l2 = find_number(&errors, "l2");
    assert!(!l2.is_empty() && l2.iter().all(|e| *e < 1e-3), "{errors}");
}

#[test]
fn missing_config() {
    let o = Command::new(env!("CARGO_BIN_EXE_difflim"))
        .arg("certify")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let dir = tempfile::tempdir().unwrap();
    let o = run(&dir.path().join("nope.toml"), dir.path(), &["certify"]);
    assert_eq!(o.status.code(), Some(2));
}

const SMALL_STUDY: &str = r#"
[grid]
length = 1.0
cells = 16

[coefficients.sigma]
kind = "smooth"
mean = 1.0
amplitude = 0.5
frequency = 1.0

[coefficients.gamma]
kind = "constant"
value = 1.0

[source]
kind = "constant"
value = 1.0

[scattering]
ordinates = 8

[study]
eps = [0.5, 0.25, 0.125, 0.0625]
min_cells = 32
"#;

#[test]
fn small_study_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_STUDY);
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &["study"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let slopes = read_json(&out.join("slopes.json"));
    assert!(!find_number(&slopes, "slope").is_empty());

    let manifest = read_json(&out.join("manifest.json"));
    let listed: Vec<String> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["name"].as_str().unwrap().to_string())
        .collect();
    for entry in std::fs::read_dir(&out).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name != "manifest.json" {
            assert!(listed.contains(&name), "{name} missing from manifest");
        }
    }
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn piecewise_study_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL_STUDY.replace(
        "kind = \"smooth\"\nmean = 1.0\namplitude = 0.5\nfrequency = 1.0",
        "kind = \"piecewise\"\nbreakpoints = [0.5]\nvalues = [1.0, 4.0]",
    );
    let cfg = write_config(dir.path(), &text);
    let o = run(&cfg, dir.path(), &["study"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let slopes = std::fs::read_to_string(dir.path().join("slopes.json")).unwrap();
    assert!(slopes.contains("low-regularity"), "{slopes}");
}

#[test]
fn non_geometric_eps_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL_STUDY.replace("[0.5, 0.25, 0.125, 0.0625]", "[0.5, 0.4, 0.3, 0.2]");
    let cfg = write_config(dir.path(), &text);
    assert_eq!(run(&cfg, dir.path(), &["study"]).status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_STUDY);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&cfg, &a, &["solve", "--eps", "0.25"]).status.success());
    assert!(run(&cfg, &b, &["solve", "--eps", "0.25"]).status.success());
    for f in ["transport_angular.csv", "transport_average.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}
