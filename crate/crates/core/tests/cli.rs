use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sqsim::pipeline::{read_manifest, MANIFEST_NAME};

const COMMANDS: [&str; 7] = ["squeezing-curves", "covariance", "ppt", "supermodes", "cluster", "rank", "gainfit"];

// coarser grid and shorter scans keep the binary runs quick
const FAST: &str = r#"
seed = 11

[grid]
resolution_nm = 2.0

[trace.scan]
samples = 2000

[trace.noise]
shot_samples_per_point = 2000

[gainfit.synthetic]
noise = 0.01
"#;

fn sqsim(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sqsim"));
    cmd.args(args).env_remove("SQSIM_OUT_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("exp.toml");
    fs::write(&p, body).unwrap();
    p
}

fn run_ok(cmd: &str, config: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = sqsim(&args, &[]);
    assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
}

fn files_except_manifest(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != MANIFEST_NAME {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn every_command_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), FAST);
    for cmd in COMMANDS {
        let (a, b) = (tmp.path().join(format!("{cmd}-a")), tmp.path().join(format!("{cmd}-b")));
        run_ok(cmd, &cfg, &a, &[]);
        run_ok(cmd, &cfg, &b, &[]);
        let (fa, fb) = (files_except_manifest(&a), files_except_manifest(&b));
        assert!(!fa.is_empty(), "{cmd} wrote nothing");
        assert!(fa == fb, "{cmd} outputs differ");

        let (ma, mb) = (read_manifest(&a).unwrap(), read_manifest(&b).unwrap());
        assert_eq!(ma.files, mb.files);
        assert_eq!(ma.config_sha256, mb.config_sha256);
        assert_eq!(ma.command, cmd);
        assert_eq!(ma.seed, 11);
        assert_eq!(ma.files.len(), fa.len());
    }
}

#[test]
fn verify_detects_tampering_and_config_drift() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), FAST);
    let out = tmp.path().join("g");
    let (c, o) = (cfg.to_str().unwrap(), out.to_str().unwrap());
    run_ok("gainfit", &cfg, &out, &[]);
    assert!(sqsim(&["gainfit", "--config", c, "--out", o, "--verify"], &[]).status.success());

    let drift = sqsim(&["gainfit", "--config", c, "--out", o, "--verify", "--set", "gainfit.synthetic.eta_psa=0.5"], &[]);
    assert_eq!(drift.status.code(), Some(1));

    fs::write(out.join("gain_plus.csv"), "power_W,gain\n").unwrap();
    let tampered = sqsim(&["gainfit", "--config", c, "--out", o, "--verify"], &[]);
    assert_eq!(tampered.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&tampered.stderr).contains("gain_plus.csv"));
}

#[test]
fn flags_override_config_and_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), FAST);
    let c = cfg.to_str().unwrap();

    let env_dir = tmp.path().join("from-env");
    let o = sqsim(&["rank", "--config", c, "--seed", "5"], &[("SQSIM_OUT_DIR", &env_dir)]);
    assert!(o.status.success());
    assert_eq!(read_manifest(&env_dir).unwrap().seed, 5);

    let flag_dir = tmp.path().join("from-flag");
    let o = sqsim(
        &["rank", "--config", c, "--out", flag_dir.to_str().unwrap(), "--set", "seed=9"],
        &[("SQSIM_OUT_DIR", &env_dir)],
    );
    assert!(o.status.success());
    assert_eq!(read_manifest(&flag_dir).unwrap().seed, 9);
}

#[test]
fn set_overrides_reach_the_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), FAST);
    let out = tmp.path().join("c");
    run_ok("cluster", &cfg, &out, &["--set", "cluster.topologies=[\"star\"]"]);
    let names: Vec<String> = read_manifest(&out).unwrap().files.into_iter().map(|f| f.path).collect();
    assert_eq!(names, ["cluster_star.csv", "cluster_star_lo.csv", "cluster.json"]);
}

#[test]
fn ingested_covariance_is_scanned() {
    let tmp = tempfile::tempdir().unwrap();
    // two-mode squeezed vacuum, r = 0.5, shot-noise units
    let (c, s) = ((1.0f64).cosh(), (1.0f64).sinh());
    let csv = format!("n_modes=2, convention=shot_noise\n{c},{s},0,0\n{s},{c},0,0\n0,0,{c},{m}\n0,0,{m},{c}\n", m = -s);
    fs::write(tmp.path().join("epr.csv"), csv).unwrap();
    let cfg = write_config(tmp.path(), &format!("{FAST}\n[ppt]\ncm_path = \"epr.csv\"\n"));
    let out = tmp.path().join("p");
    run_ok("ppt", &cfg, &out, &[]);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("ppt_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["n_bipartitions"], 1);
    assert_eq!(summary["n_violated"], 1);
    let expect = ((-1.0f64).exp() - 1.0) / 2.0;
    assert!((summary["min_value"].as_f64().unwrap() - expect).abs() < 1e-9);
}

#[test]
fn exit_codes_follow_the_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), FAST);
    let c = cfg.to_str().unwrap();
    let out = tmp.path().join("x");
    let o = out.to_str().unwrap();

    let code = |args: &[&str]| sqsim(args, &[]).status.code();
    assert_eq!(code(&["rank", "--config", "/nonexistent/exp.toml"]), Some(2));
    assert_eq!(code(&["rank", "--config", c, "--out", o, "--set", "grid.bogus=1"]), Some(2));
    assert_eq!(code(&["cluster", "--config", c, "--out", o, "--set", "cluster.topologies=[\"hex\"]"]), Some(2));
    assert_eq!(code(&["bogus-command", "--config", c]), Some(2));
    assert_eq!(code(&["rank", "--config", c, "--out", o, "--seed", "18446744073709551615"]), Some(2));
    assert_eq!(
        code(&["covariance", "--config", c, "--out", o, "--set", "phasematch.c2_search=[1e-9,2e-9]"]),
        Some(3)
    );
    let file = tmp.path().join("plain-file");
    fs::write(&file, "").unwrap();
    let under_file = file.join("sub");
    assert_eq!(code(&["gainfit", "--config", c, "--out", under_file.to_str().unwrap()]), Some(4));
}
