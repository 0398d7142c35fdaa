use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use tmdisk::GridFunction;

struct Run {
    code: i32,
    stderr: String,
    dir: PathBuf,
}

impl Run {
    fn report(&self) -> Value {
        serde_json::from_str(&fs::read_to_string(self.dir.join("report.json")).unwrap()).unwrap()
    }

    fn file(&self, name: &str) -> String {
        fs::read_to_string(self.dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }
}

fn tmdisk(out: &Path, args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tmdisk"));
    cmd.arg("--out").arg(out).args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let Output { status, stderr, .. } = cmd.output().unwrap();
    Run {
        code: status.code().unwrap(),
        stderr: String::from_utf8_lossy(&stderr).into_owned(),
        dir: out.to_path_buf(),
    }
}

fn run(args: &[&str]) -> (TempDir, Run) {
    let dir = TempDir::new().unwrap();
    let r = tmdisk(&dir.path().join("out"), args, &[]);
    (dir, r)
}

fn values(report: &Value) -> Vec<f64> {
    report["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["value"].as_f64().unwrap())
        .collect()
}

#[test]
fn critical_probe_is_bounded_and_half_exponent_stays_below() {
    let (_d, full) = run(&["probe", "--p-over-4pi", "1.0", "--k-max", "1024"]);
    assert_eq!(full.code, 0, "{}", full.stderr);
    let full = full.report();
    assert_eq!(full["verdict"], "bounded");
    assert_eq!(full["entries"].as_array().unwrap().len(), 10);

    let (_d, half) = run(&["probe", "--p-over-4pi", "0.5"]);
    assert_eq!(half.code, 0);
    let csv = half.file("probe.csv");
    assert!(csv.starts_with("k,value,saturated,tail_warning\n"));
    let half = half.report();
    assert_eq!(half["verdict"], "bounded");
    for (a, b) in values(&half).iter().zip(values(&full)) {
        assert!(*a < b);
    }
}

#[test]
fn supercritical_probe_grows_once_k_is_large_enough() {
    let (_d, r) = run(&["probe", "--p-over-4pi", "1.05", "--k-max", "1099511627776"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = r.report();
    assert_eq!(rep["verdict"], "growing");
    assert!(rep["growth"].as_f64().unwrap() >= 10.0);
}

#[test]
fn probe_rejects_unresolvable_requests() {
    let (_d, r) = run(&["probe", "--grid", "512x1", "--k-max", "1024"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("plateau radius"), "{}", r.stderr);
    let (_d, r) = run(&["probe", "--k-max", "2"]);
    assert_eq!(r.code, 2);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    for args in [
        &["cover", "--samples", "20000"][..],
        &["verify", "brezis-lieb", "--grid", "128x64"][..],
    ] {
        let a = tmdisk(&dir.path().join("a"), args, &[]);
        let b = tmdisk(&dir.path().join("b"), args, &[("TMDISK_THREADS", "1")]);
        assert_eq!(a.code, b.code);
        assert_eq!(a.file("report.json"), b.file("report.json"));
        let meta: Value = serde_json::from_str(&b.file("metadata.json")).unwrap();
        assert_eq!(meta["threads"], 1);
        assert!(meta["elapsed_seconds"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn cover_defaults_pass() {
    let (_d, r) = run(&["cover", "--eps", "0.5", "--cover-factor", "3", "--rho-max", "4"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = r.report();
    assert_eq!(rep["coverage_gaps"], 0);
    assert_eq!(rep["disjoint"], true);
    assert!(rep["multiplicity_empirical"].as_u64().unwrap() <= rep["multiplicity_bound"].as_u64().unwrap());
    let csv = r.file("centers.csv");
    assert!(csv.starts_with("re,im,rho,theta\n"));
    assert_eq!(csv.lines().count() as u64 - 1, rep["center_count"].as_u64().unwrap());
}

#[test]
fn cover_below_eps_is_a_single_centre() {
    let (_d, r) = run(&["cover", "--rho-max", "0.3"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.report()["center_count"], 1);
}

#[test]
fn coarse_lattice_reports_gaps() {
    let (_d, r) = run(&["cover", "--lattice-step", "3"]);
    assert_eq!(r.code, 1);
    let rep = r.report();
    assert!(rep["coverage_gaps"].as_u64().unwrap() > 0);
    assert_eq!(rep["passed"], false);
    assert!(!rep["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn maximize_converges_and_writes_trace() {
    let (_d, r) = run(&["maximize", "--t", "1", "--nonlinearity", "quartic"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = r.report();
    assert_eq!(rep["status"], "converged");
    assert_eq!(rep["passed"], true);
    let trace: Value = serde_json::from_str(&r.file("trace.json")).unwrap();
    let obj: Vec<f64> = trace["objective_history"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(obj.len() > 1 && obj[obj.len() - 1] > obj[0]);
    assert!(r
        .file("trace.csv")
        .starts_with("index,objective,residual,constraint_drift,step\n"));
    let u = tmdisk::io::read_field(BufReader::new(File::open(r.dir.join("maximizer.field")).unwrap())).unwrap();
    assert!((u.dirichlet_energy() - 1.0).abs() < 1e-8);
}

#[test]
fn maximize_at_tiny_level_records_tiny_objective() {
    let (_d, r) = run(&["maximize", "--t", "1e-4", "--max-iters", "50"]);
    assert!(r.code == 0 || r.code == 3, "{}", r.stderr);
    let obj = r.report()["final_objective"].as_f64().unwrap();
    assert!(obj > 0.0 && obj < 1e-6);
}

#[test]
fn maximize_exit_codes() {
    let (_d, r) = run(&["maximize", "--nonlinearity", "cubic"]);
    assert_eq!(r.code, 2);
    let (_d, r) = run(&["maximize", "--t", "1.5"]);
    assert_eq!(r.code, 2);
    let (_d, r) = run(&["maximize", "--max-iters", "2"]);
    assert_eq!(r.code, 3);
    assert_eq!(r.report()["status"], "max_iters");
    assert!(r.dir.join("trace.json").exists());
    assert!(r.dir.join("trace.csv").exists());
}

#[test]
fn maximize_restarts_from_a_field_file() {
    let (d, first) = run(&["maximize", "--grid", "128x64", "--max-iters", "3"]);
    assert_eq!(first.code, 3);
    let seed = first.dir.join("maximizer.field");
    let out = d.path().join("second");
    let r = tmdisk(
        &out,
        &["maximize", "--seed-field", seed.to_str().unwrap(), "--max-iters", "3"],
        &[],
    );
    assert_eq!(r.code, 3);
    assert_eq!(r.report()["grid"]["n_rho"], 128);
    let r = tmdisk(&out, &["maximize", "--seed-field", "/nonexistent/seed.field"], &[]);
    assert_eq!(r.code, 2);
}

#[test]
fn verify_hardy_records_minimum_ratio() {
    let (_d, r) = run(&["verify", "hardy"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = r.report();
    let notes = rep["checks"]["notes"].as_array().unwrap();
    assert!(notes.iter().any(|n| n.as_str().unwrap().starts_with("minimum ratio")));
    assert!(r.file("checks.csv").starts_with("label,value,limit,relation,passed\n"));
}

#[test]
fn verify_invariance_includes_the_zero_field() {
    let (_d, r) = run(&["verify", "invariance"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = r.report();
    let zero: Vec<&Value> = rep["checks"]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["label"].as_str().unwrap().contains("[zero]"))
        .collect();
    assert_eq!(zero.len(), 2);
    for e in zero {
        assert_eq!(e["value"], 0.0);
        assert_eq!(e["passed"], true);
    }
}

#[test]
fn verify_suites_pass_at_defaults() {
    for kind in ["dilation", "brezis-lieb", "local-bound"] {
        let (_d, r) = run(&["verify", kind]);
        assert_eq!(r.code, 0, "{kind}: {}", r.stderr);
        assert_eq!(r.report()["kind"], kind);
    }
}

#[test]
fn local_bound_rejects_norm_above_one() {
    let (_d, r) = run(&["verify", "local-bound", "--norm", "1.2"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("hypothesis violated"), "{}", r.stderr);
}

#[test]
fn failing_checks_exit_one() {
    let (_d, r) = run(&["verify", "invariance", "--grid", "128x64"]);
    assert_eq!(r.code, 1);
    assert_eq!(r.report()["passed"], false);
}

#[test]
fn profile_scenarios() {
    let (_d, r) = run(&["profiles", "none"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.report()["recovered_energies"].as_array().unwrap().len(), 0);

    let (_d, r) = run(&["profiles", "single"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = r.report();
    let e = rep["recovered_energies"][0].as_f64().unwrap();
    assert!((e - 0.6).abs() / 0.6 < 0.02);

    let (_d, r) = run(&["profiles", "pair"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = r.report();
    assert_eq!(rep["grid"]["n_theta"], 1024);
    let e: Vec<f64> = rep["recovered_energies"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(e.len(), 2);
    let s: Vec<f64> = rep["separations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(s.windows(2).all(|w| w[1] > w[0]));
    assert!(r
        .file("profiles.csv")
        .starts_with("profile,planted_energy,recovered_energy\n"));

    let (_d, r) = run(&["profiles", "triple"]);
    assert_eq!(r.code, 2);
    let (_d, r) = run(&["profiles"]);
    assert_eq!(r.code, 2);
}

#[test]
fn config_files_are_strict_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "[cover]\neps = 0.5\nrho_max = 3.0\nsamples = 5000\n[run]\nseed = 11\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let r = tmdisk(&out, &["--config", cfg.to_str().unwrap(), "cover", "--eps", "0.4"], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let p = &r.report()["parameters"];
    assert_eq!(p["eps"], 0.4);
    assert_eq!(p["rho_max"], 3.0);
    assert_eq!(p["samples"], 5000);
    assert_eq!(p["seed"], 11);

    fs::write(&cfg, "[cover]\nepsilon = 0.5\n").unwrap();
    let r = tmdisk(&out, &["--config", cfg.to_str().unwrap(), "cover"], &[]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("epsilon"), "{}", r.stderr);

    let r = tmdisk(
        &out,
        &["--config", dir.path().join("missing.toml").to_str().unwrap(), "cover"],
        &[],
    );
    assert_eq!(r.code, 2);
}

#[test]
fn bad_arguments_exit_two() {
    let (_d, r) = run(&["cover", "--grid", "512by256"]);
    assert_eq!(r.code, 2);
    let (_d, r) = run(&["verify", "nonsense"]);
    assert_eq!(r.code, 2);
    let (_d, r) = run(&["cover", "--eps", "-1"]);
    assert_eq!(r.code, 2);
    let dir = TempDir::new().unwrap();
    let r = tmdisk(
        &dir.path().join("o"),
        &["cover", "--samples", "100"],
        &[("TMDISK_THREADS", "many")],
    );
    assert_eq!(r.code, 2);
}
