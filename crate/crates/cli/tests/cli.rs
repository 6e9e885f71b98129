use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sketchbound"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(name)
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .args(["run", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, edit: impl FnOnce(&mut serde_json::Value)) -> PathBuf {
    let text = fs::read_to_string(data("data/trivial.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    edit(&mut v);
    let path = dir.join("config.json");
    fs::write(&path, v.to_string()).unwrap();
    path
}

/// Same header and layout, numeric fields within 1e-12.
fn assert_csv_matches(got: &str, want: &str) {
    let (g, w): (Vec<&str>, Vec<&str>) = (got.lines().collect(), want.lines().collect());
    assert_eq!(g.len(), w.len(), "row count");
    assert_eq!(g[0], w[0], "header");
    for (lg, lw) in g.iter().zip(&w).skip(1) {
        let (fg, fw): (Vec<&str>, Vec<&str>) = (lg.split(',').collect(), lw.split(',').collect());
        assert_eq!(fg.len(), fw.len());
        for (a, b) in fg.iter().zip(&fw) {
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0), "{a} vs {b}"),
                _ => assert_eq!(a, b),
            }
        }
    }
}

#[test]
fn trivial_config_matches_golden_files_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&data("data/trivial.json"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for check in ["thm1", "thm2", "corollary", "forward"] {
        let got = fs::read_to_string(tmp.path().join(format!("{check}.csv"))).unwrap();
        let want = fs::read_to_string(data(&format!("golden/trivial_{check}.csv"))).unwrap();
        assert_csv_matches(&got, &want);
        assert!(tmp.path().join(format!("plotdata_{check}.csv")).exists());
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["verdict"], "pass");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn verify_accepts_fresh_run_and_rejects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&data("data/trivial.json"), tmp.path(), &[]).status.code(), Some(0));
    let manifest = tmp.path().join("manifest.json");
    let ok = bin().arg("verify").arg(&manifest).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));

    let csv = tmp.path().join("thm2.csv");
    let body = fs::read_to_string(&csv).unwrap().replace(",pass", ",fail");
    fs::write(&csv, body).unwrap();
    let bad = bin().arg("verify").arg(&manifest).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("thm2.csv"));
}

#[test]
fn same_seed_same_bytes_new_seed_new_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), |v| {
        v["family"] = serde_json::json!({ "kind": "direct_perturbation", "scale": 0.5, "profile": "sawtooth" });
        v["checks"] = serde_json::json!(["thm1", "thm2"]);
    });
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for (dir, seed) in [(&a, "3"), (&b, "3"), (&c, "4")] {
        assert_eq!(run(&cfg, dir, &["--seed", seed, "--threads", "2"]).status.code(), Some(0));
    }
    let read = |d: &Path| fs::read(d.join("thm1.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = write_config(tmp.path(), |v| {
        v.as_object_mut().unwrap().remove("data");
    });
    assert_eq!(run(&missing, tmp.path(), &[]).status.code(), Some(2));

    let bad_gamma = write_config(tmp.path(), |v| v["noise"]["gamma"] = serde_json::json!([[0.0]]));
    let out = run(&bad_gamma, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("noise.gamma"));

    let junk = tmp.path().join("junk.json");
    fs::write(&junk, "{ not json").unwrap();
    assert_eq!(run(&junk, tmp.path(), &[]).status.code(), Some(2));
}

#[test]
fn unreachable_n_star_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), |v| {
        v["family"] = serde_json::json!({ "kind": "direct_perturbation", "scale": 50.0 });
        v["checks"] = serde_json::json!(["corollary"]);
    });
    assert_eq!(run(&cfg, &tmp.path().join("o"), &[]).status.code(), Some(3));
}

#[test]
fn degenerate_realizations_fail_and_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    // exp(−Φ_N) underflows for most ω once the shift is ~1e4.
    let cfg = write_config(tmp.path(), |v| {
        v["family"] = serde_json::json!({ "kind": "direct_perturbation", "scale": 1.0e4, "noise": "gaussian" });
        v["checks"] = serde_json::json!(["thm1"]);
    });
    let out = run(&cfg, &tmp.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(1));
    let manifest = fs::read_to_string(tmp.path().join("o/manifest.json")).unwrap();
    assert!(manifest.contains("degenerate"));
}

#[test]
fn unwritable_output_exits_four() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = run(&data("data/trivial.json"), &blocker.join("sub"), &[]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn sweep_prints_one_check() {
    let out = bin()
        .args(["sweep", "--config"])
        .arg(data("data/trivial.json"))
        .args(["--check", "thm2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let want = fs::read_to_string(data("golden/trivial_thm2.csv")).unwrap();
    assert_csv_matches(&stdout, &want);

    let bad = bin()
        .args(["sweep", "--config"])
        .arg(data("data/trivial.json"))
        .args(["--check", "thm9"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
