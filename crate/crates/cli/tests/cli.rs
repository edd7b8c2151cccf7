use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_westervelt"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(config: &Path, out: &Path, args: &[&str]) -> Output {
    bin().arg("--config").arg(config).arg("--out").arg(out).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

const SMALL: &str = r#"{"domain": {"nx": 17, "ny": 17}, "excitation": {"omega": 10.0}}"#;

/// Every file under `dir` except the run manifest, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else if p.file_name().unwrap() != "run_manifest.json" {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

#[test]
fn forward_writes_artifacts_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.json", SMALL);
    let out = tmp.path().join("a");
    let o = run(&cfg, &out, &["forward"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["run_manifest.json", "diagnostics.json", "mode_residuals.csv", "stack/manifest.json", "stack/u_1.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let m = read_json(&out.join("run_manifest.json"));
    assert_eq!(m["command"], "forward");
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);

    let again = tmp.path().join("b");
    assert_eq!(run(&cfg, &again, &["forward"]).status.code(), Some(0));
    assert_eq!(snapshot(&out), snapshot(&again));
    assert_eq!(read_json(&again.join("run_manifest.json"))["config_sha256"], m["config_sha256"]);
}

#[test]
fn invalid_media_and_configs_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "beta0.json",
        r#"{"domain": {"nx": 9, "ny": 9}, "medium": {"alpha": {"kind": "constant", "value": 1.0},
            "beta": {"kind": "constant", "value": 0.0}, "gamma": {"kind": "constant", "value": 1.0},
            "lambda": 1.0, "eta": 1.0}}"#,
    );
    let out = tmp.path().join("o");
    let o = run(&cfg, &out, &["forward"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("β ≥ β₀ > 0"));
    assert_eq!(read_json(&out.join("run_manifest.json"))["exit_code"], 1);

    let typo = write_config(tmp.path(), "typo.json", r#"{"domian": {}}"#);
    assert_eq!(run(&typo, &out, &["forward"]).status.code(), Some(1));
    let missing = tmp.path().join("nope.json");
    assert_eq!(run(&missing, &out, &["forward"]).status.code(), Some(1));
}

#[test]
fn alpha_inversion_requires_mu_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.json", SMALL);
    let out = tmp.path().join("o");
    assert_eq!(run(&cfg, &out, &["make-data"]).status.code(), Some(0));
    let data = out.join("dataset.json");
    let o = run(&cfg, &out, &["invert-alpha", "--dataset", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(!out.join("alpha").exists());
    assert_eq!(run(&cfg, &out, &["invert-alpha", "--dataset", data.to_str().unwrap(), "--known-mu"]).status.code(), Some(0));
}

#[test]
fn zero_alpha_pipeline_recovers_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "zero.json",
        r#"{"domain": {"nx": 33, "ny": 33}, "excitation": {"omega": 10.0, "fourier_order": 4},
            "medium": {"alpha": {"kind": "constant", "value": 0.0}, "beta": {"kind": "constant", "value": 0.05},
            "gamma": {"kind": "constant", "value": 1.0}, "lambda": 1.0, "eta": 1.0},
            "inverse": {"px": 2, "py": 2, "source_count": 4, "probe_order": 4, "probe_count": 4}}"#,
    );
    let out = tmp.path().join("o");
    assert_eq!(run(&cfg, &out, &["make-data"]).status.code(), Some(0));
    let data = out.join("dataset.json");
    let o = run(&cfg, &out, &["invert-mu", "--dataset", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mu = out.join("mu");
    let o = run(&cfg, &out, &["invert-alpha", "--dataset", data.to_str().unwrap(), "--mu-result", mu.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&out.join("alpha_summary.json"));
    assert_eq!(s["mu_stage"], "recovered");
    assert!(s["below_zero_threshold"].as_bool().unwrap());
    assert!(s["max_abs"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn noisy_data_is_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "noisy.json",
        r#"{"domain": {"nx": 17, "ny": 17}, "excitation": {"omega": 10.0}, "inverse": {"noise_level": 0.01}}"#,
    );
    let read = |seed: &str, dir: &str| {
        let out = tmp.path().join(dir);
        assert_eq!(run(&cfg, &out, &["--seed", seed, "make-data"]).status.code(), Some(0));
        fs::read(out.join("dataset.json")).unwrap()
    };
    let a = read("3", "a");
    assert_eq!(a, read("3", "b"));
    assert_ne!(a, read("4", "c"));
}

#[test]
fn gaussian_bump_pipeline_meets_anchor() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("gaussian_bump.json");
    let out = tmp.path().join("o");
    assert_eq!(run(&cfg, &out, &["make-data"]).status.code(), Some(0));
    let data = out.join("dataset.json");
    assert_eq!(run(&cfg, &out, &["invert-mu", "--dataset", data.to_str().unwrap()]).status.code(), Some(0));
    let mu = out.join("mu");
    let o = run(&cfg, &out, &["invert-alpha", "--dataset", data.to_str().unwrap(), "--mu-result", mu.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let err = read_json(&out.join("alpha_summary.json"))["relative_error"].as_f64().unwrap();
    assert!(err <= 0.2, "{err}");
    assert!(out.join("alpha/alpha.csv").exists() && out.join("alpha/result.json").exists());
}

#[test]
fn bounds_strict_catches_misscaled_quantity() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = write_config(
        tmp.path(),
        "ok.json",
        r#"{"bounds": {"lemma1_resolution": 33, "lemma2_resolution": 33, "stability_resolution": 33, "k_values": [2, 3]}}"#,
    );
    let out = tmp.path().join("ok");
    assert_eq!(bin().arg("--config").arg(&ok).arg("--out").arg(&out).args(["--strict", "bounds"]).status().unwrap().code(), Some(0));
    assert!(read_json(&out.join("bounds_summary.json"))["passed"].as_bool().unwrap());
    for f in ["lemma1/C0.csv", "lemma2/D3.csv", "stability/summary.json", "decay/decay.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }

    let bad = write_config(tmp.path(), "bad.json", r#"{"bounds": {"sweeps": ["lemma1"], "lemma1_resolution": 33, "misscale": "C0"}}"#);
    let o = run(&bad, &tmp.path().join("bad"), &["--strict", "bounds"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(run(&bad, &tmp.path().join("lax"), &["bounds"]).status.code(), Some(0));
}

#[test]
fn hseq_prints_thirty_terms() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin().arg("--out").arg(tmp.path()).arg("hseq").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 30);
    assert!(text.lines().last().unwrap().starts_with("h_30 = 1002242216651368"));
    let csv = fs::read_to_string(tmp.path().join("hseq.csv")).unwrap();
    assert_eq!(csv.lines().count(), 31);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn oracle_compare_linear_and_forced_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let linear = write_config(
        tmp.path(),
        "lin.json",
        r#"{"domain": {"nx": 17, "ny": 17}, "medium": {"alpha": {"kind": "constant", "value": 0.0},
            "beta": {"kind": "constant", "value": 0.2}, "gamma": {"kind": "constant", "value": 1.0},
            "lambda": 3.0, "eta": 250.0}}"#,
    );
    let out = tmp.path().join("lin");
    assert_eq!(run(&linear, &out, &["oracle-compare"]).status.code(), Some(0));
    let r = read_json(&out.join("oracle_compare.json"));
    assert!(r["u1_difference"].as_f64().unwrap() <= 1e-3, "{r}");

    let forced = write_config(
        tmp.path(),
        "picard.json",
        r#"{"domain": {"nx": 17, "ny": 17}, "medium": {"alpha": {"kind": "constant", "value": 40.0},
            "beta": {"kind": "constant", "value": 0.2}, "gamma": {"kind": "constant", "value": 1.0},
            "lambda": 3.0, "eta": 250.0}, "oracle": {"picard_max_iters": 1}}"#,
    );
    let o = run(&forced, &tmp.path().join("p"), &["oracle-compare"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Picard"));
}

#[test]
fn liouville_and_distinguish_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.json", SMALL);
    let out = tmp.path().join("o");
    assert_eq!(run(&cfg, &out, &["liouville-check"]).status.code(), Some(0));
    let l = read_json(&out.join("liouville.json"));
    assert!(l["liouville"]["passed"].as_bool().unwrap() && l["ratios_in_band"].as_bool().unwrap());
    assert_eq!(run(&cfg, &out, &["distinguish"]).status.code(), Some(0));
    let d = read_json(&out.join("distinguish.json"));
    assert_eq!(d["trace1_difference"].as_f64().unwrap(), 0.0);
    assert!(d["trace2_difference"].as_f64().unwrap() >= 1e-4);
}

#[test]
fn shipped_configs_parse() {
    for name in ["default.json", "gaussian_bump.json", "smooth_inclusion.json"] {
        let cfg = westervelt_cli::ScenarioConfig::load(&configs().join(name)).unwrap();
        cfg.validate().unwrap();
    }
}
