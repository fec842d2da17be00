use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hkernel::generators::PRESETS;
use hkernel::io::read_kernel;

fn hkernel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hkernel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn hkernel_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hkernel"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, name: &str, spec: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut args = vec!["gen", spec, "-o", path_str(&out)];
    args.extend_from_slice(extra);
    let o = hkernel(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn summary_value(text: &str, key: &str) -> f64 {
    text.split_whitespace()
        .find_map(|w| w.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key}= in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn semigroup_spectrum_fit_recovers_rate() {
    let dir = tempfile::tempdir().unwrap();
    let k = gen(dir.path(), "k.json", "semigroup:t=0.5", &[]);
    let csv = dir.path().join("s.csv");
    let o = hkernel(&["spectrum", path_str(&k), "--fit", "exp:d=1:s=0.5", "-o", path_str(&csv)]);
    assert_eq!(o.status.code(), Some(0));
    let c = summary_value(&String::from_utf8(o.stdout).unwrap(), "c");
    assert!((c - 1.0).abs() <= 0.05, "c = {c}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,sigma"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "1");
    assert!((first[1].parse::<f64>().unwrap() - (-0.5f64).exp()).abs() < 1e-14);
}

#[test]
fn spectrum_without_output_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let k = gen(dir.path(), "k.json", "semigroup:t=0.5", &["--degree", "3"]);
    let o = hkernel(&["spectrum", path_str(&k), "--schatten", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().count(), 5);
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("schatten: "));
}

#[test]
fn factor_then_compose_reproduces_input() {
    let dir = tempfile::tempdir().unwrap();
    for (spec, mode, param, names) in [
        ("semigroup:t=0.5", "roumieu", ["--s", "0.5"], &["k2", "k1"][..]),
        ("random:exp:s=1:r=2:seed=42", "roumieu", ["--s", "1"], &["k2", "k1"][..]),
        (
            "random:exp0:s=1:r=1:seed=7",
            "beurling",
            ["--s", "1"],
            &["k2", "k1"][..],
        ),
        (
            "random:flat:sigma=1:r=2:seed=42",
            "flat-r",
            ["--sigma", "1"],
            &["k2", "k0", "k1"][..],
        ),
        (
            "random:flat0:sigma=1:r=1:seed=7",
            "flat-b",
            ["--sigma", "1"],
            &["k2", "k0", "k1"][..],
        ),
        ("semigroup:t=0.25", "diag-sqrt", ["--sigma", "1"], &["k2", "k1"][..]),
    ] {
        let k = gen(dir.path(), "k.json", spec, &[]);
        let prefix = dir.path().join("f");
        let o = hkernel(&[
            "factor",
            path_str(&k),
            "--mode",
            mode,
            param[0],
            param[1],
            "--out-prefix",
            path_str(&prefix),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{spec}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let file = |n: &str| dir.path().join(format!("f.{n}.json"));
        let out = dir.path().join("c.json");
        let o = hkernel(&[
            "compose",
            path_str(&file(names[0])),
            path_str(&file(names[1])),
            "-o",
            path_str(&out),
        ]);
        assert_eq!(o.status.code(), Some(0));
        if names.len() == 3 {
            let o = hkernel(&[
                "compose",
                path_str(&out),
                path_str(&file(names[2])),
                "-o",
                path_str(&out),
            ]);
            assert_eq!(o.status.code(), Some(0));
        }
        let a = read_kernel(&k).unwrap();
        let b = read_kernel(&out).unwrap();
        let scale = a.max_abs();
        for (x, y) in a.entries().iter().zip(b.entries()) {
            assert!((x - y).abs() <= 1e-10 * scale, "{spec}: {x} vs {y}");
        }
    }
}

#[test]
fn analyze_zero_kernel_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let k = gen(dir.path(), "k.json", "semigroup:t=0.5", &["--degree", "4"]);
    let mut file: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&k).unwrap()).unwrap();
    let n = file["entries"].as_array().unwrap().len();
    file["entries"] = serde_json::json!(vec![0.0; n]);
    std::fs::write(&k, file.to_string()).unwrap();
    let o = hkernel(&["analyze", path_str(&k)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("effectively zero kernel"));
}

#[test]
fn analyze_reports_semigroup_class() {
    let dir = tempfile::tempdir().unwrap();
    let k = gen(dir.path(), "k.json", "semigroup:t=0.5", &[]);
    let o = hkernel(&["analyze", path_str(&k)]);
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("class: roumieu(s=0.5)"), "{out}");
    assert!(out.contains("member: true"));
}

#[test]
fn malformed_files_exit_2_naming_the_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let k = gen(dir.path(), "k.json", "semigroup:t=0.5", &["--degree", "2"]);
    let text = std::fs::read_to_string(&k).unwrap();
    let cases = [
        (text.replace("graded-lex", "lex"), "ordering"),
        (text.replace("\"version\":1", "\"version\":2"), "version"),
        (text.replace("\"N1\":2", "\"N1\":3"), "entries"),
        ("{".to_string(), "format error"),
    ];
    for (body, needle) in cases {
        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, body).unwrap();
        let o = hkernel(&["spectrum", path_str(&bad)]);
        assert_eq!(o.status.code(), Some(2));
        let err = String::from_utf8(o.stderr).unwrap();
        assert!(err.contains(needle), "{needle}: {err}");
    }
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let k = gen(dir.path(), "k.json", "semigroup:t=0.5", &["--degree", "3"]);
    let prefix = dir.path().join("f");
    for args in [
        vec!["gen", "semigroup:t=-1", "-o", path_str(&k)],
        vec!["gen", "nonsense", "-o", path_str(&k)],
        vec![
            "factor",
            path_str(&k),
            "--mode",
            "roumieu",
            "--out-prefix",
            path_str(&prefix),
        ],
        vec!["spectrum", path_str(&k), "--fit", "gauss:s=1"],
        vec!["verify", path_str(&k), "--suite", "everything"],
    ] {
        assert_eq!(hkernel(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn verify_all_passes_on_every_preset() {
    let dir = tempfile::tempdir().unwrap();
    for spec in PRESETS {
        let k = gen(dir.path(), "k.json", spec, &[]);
        let o = hkernel(&["verify", path_str(&k), "--suite", "all"]);
        let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(o.status.code(), Some(0), "{spec}: {}", report["failures"]);
        assert_eq!(report["failed"], 0);
        assert!(report["passed"].as_u64().unwrap() >= 10);
    }
}

#[test]
fn verify_reports_failures_with_exit_1() {
    // A valid file whose products overflow f64.
    let dir = tempfile::tempdir().unwrap();
    let k = gen(dir.path(), "k.json", "semigroup:t=0.5", &["--degree", "3"]);
    let mut file: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&k).unwrap()).unwrap();
    let n = file["entries"].as_array().unwrap().len();
    file["entries"] = serde_json::json!(vec![1e308; n]);
    std::fs::write(&k, file.to_string()).unwrap();
    let o = hkernel(&["verify", path_str(&k), "--suite", "spectral"]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let failures = report["failures"].as_array().unwrap();
    assert!(!failures.is_empty());
    assert!(failures.iter().all(|f| f.as_str().unwrap().starts_with("spectral/")));
    assert_eq!(report["failed"].as_u64().unwrap() as usize, failures.len());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let run = || -> Vec<Vec<u8>> {
        let dir = tempfile::tempdir().unwrap();
        let k = gen(
            dir.path(),
            "k.json",
            "random:exp:s=1:r=2:seed=42",
            &["--dim", "2", "--degree", "4"],
        );
        let factor = hkernel_in(
            dir.path(),
            &["factor", "k.json", "--mode", "roumieu", "--s", "1", "--out-prefix", "f"],
        );
        let k1 = std::fs::read(dir.path().join("f.k1.json"));
        let spectrum = hkernel(&["spectrum", path_str(&k), "--fit", "exp:s=1"]);
        let analyze = hkernel(&["analyze", path_str(&k)]);
        let verify = hkernel(&["verify", path_str(&k)]);
        vec![
            std::fs::read(&k).unwrap(),
            k1.unwrap(),
            factor.stdout,
            spectrum.stdout,
            analyze.stdout,
            verify.stdout,
        ]
    };
    assert_eq!(run(), run());
}

#[test]
fn gen_records_seed_and_rng() {
    let dir = tempfile::tempdir().unwrap();
    let k = gen(dir.path(), "k.json", "random:flat:sigma=1:r=2:seed=42", &[]);
    let file: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&k).unwrap()).unwrap();
    assert_eq!(file["metadata"]["seed"], 42);
    assert_eq!(file["metadata"]["rng"], hkernel::generators::RNG_NAME);
    assert_eq!(file["metadata"]["generator"], "random:flat:sigma=1:r=2:seed=42");
    assert_eq!(file["ordering"], "graded-lex");
}
