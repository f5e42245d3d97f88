use std::fs;
use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_negmc");

const CHAIN: &str = r#"
observables = ["z0", "x0 x1"]

[model]
gamma = 1.2
hamiltonian = { kind = "tfim", h = 1.0, j = 0.5 }
noise = { kind = "tfim" }
lattice = { kind = "chain", extent = [4], boundary = "periodic" }

[init]
kind = "bell_pairs"
pairs = [[0, 1], [2, 3]]
phases = [0.7853981633974483, 0.7853981633974483]
background = "+z+z+z+z"

[[correlators]]
left = ["y0"]
right = ["y1", "x1"]

[run]
t_max = 0.4
points = 5
trajectories = 4000
seed = 3
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

fn negmc(args: &[&str], cfg: &Path, out: &Path) -> std::process::Output {
    Command::new(BIN)
        .args(args)
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .env_remove("NMC_THREADS")
        .output()
        .unwrap()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

#[test]
fn every_subcommand_writes_its_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CHAIN);
    let out = dir.path().join("out");
    let cases: [(&[&str], &[&str]); 7] = [
        (&["build-matrix"], &["matrices.csv", "matrix_0_gauged.txt", "matrix_0_combined.signs.txt"]),
        (&["optimize-gauge"], &["gauge.csv", "lambda_0.csv", "gauged_0.txt"]),
        (&["design-noise"], &["design.csv"]),
        (&["critical-gamma"], &["critical.csv"]),
        (&["simulate"], &["observables.csv", "particles.csv", "correlators.csv"]),
        (&["oracle"], &["oracle_observables.csv", "oracle_correlators.csv", "probabilities.csv"]),
        (&["predict"], &["predict.csv"]),
    ];
    for (args, files) in cases {
        let o = negmc(args, &cfg, &out);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        for f in files {
            assert!(out.join(f).exists(), "{args:?} did not write {f}");
        }
    }
    let crit = negmc(&["critical-gamma"], &cfg, &out);
    assert!(String::from_utf8_lossy(&crit.stdout).contains("gamma_c = 1.000000"));

    // 5 grid points × (2 listed + 5 correlator observables).
    assert_eq!(rows(&out.join("observables.csv")).len(), 5 * 7);
    assert_eq!(rows(&out.join("probabilities.csv")).len(), 5 * 1296);

    let sampled = rows(&out.join("correlators.csv"));
    let exact = rows(&out.join("oracle_correlators.csv"));
    for (s, e) in sampled.iter().zip(&exact) {
        let (v, se): (f64, f64) = (s[2].parse().unwrap(), s[3].parse().unwrap());
        let x: f64 = e[2].parse().unwrap();
        assert!((v - x).abs() < 5.0 * se + 1e-12, "t = {}: {v} ± {se} vs {x}", &s[0]);
    }
}

#[test]
fn overrides_and_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CHAIN);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = negmc(&["simulate", "--trajectories", "600", "--t-max", "0.2"], &cfg, &a);
    assert!(o.status.success());
    let o = Command::new(BIN)
        .args(["simulate", "--trajectories", "600", "--t-max", "0.2", "--out"])
        .arg(&b)
        .arg(&cfg)
        .env("NMC_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
    let ra = fs::read_to_string(a.join("observables.csv")).unwrap();
    assert_eq!(ra, fs::read_to_string(b.join("observables.csv")).unwrap());
    let last = rows(&a.join("particles.csv")).pop().unwrap();
    assert_eq!(last[0].parse::<f64>().unwrap(), 0.2);
    assert_eq!(&last[4], "600");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let bad = write_config(dir.path(), &CHAIN.replace("\"x0 x1\"", "\"x7\""));
    assert_eq!(negmc(&["simulate"], &bad, &out).status.code(), Some(1));
    let missing = dir.path().join("missing.toml");
    assert_eq!(negmc(&["simulate"], &missing, &out).status.code(), Some(1));

    // Quantum phase with a tiny particle cap.
    let capped = CHAIN.replace("gamma = 1.2", "gamma = 0.0").replace("seed = 3", "seed = 3\nomega_max = 4");
    let cfg = write_config(dir.path(), &capped);
    let o = negmc(&["simulate", "--t-max", "3"], &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(out.join("observables.csv").exists());

    let none = CHAIN.replace(r#"noise = { kind = "tfim" }"#, r#"noise = { kind = "none" }"#);
    let cfg = write_config(dir.path(), &none);
    assert_eq!(negmc(&["critical-gamma"], &cfg, &out).status.code(), Some(1));

    // z dephasing alone never removes the xx-coupling signs.
    let dephasing = CHAIN.replace(
        r#"noise = { kind = "tfim" }"#,
        r#"noise = { kind = "uniform", local = [0.0, 0.0, 1.0, 0.0, 0.0] }"#,
    );
    let cfg = write_config(dir.path(), &dephasing);
    assert_eq!(negmc(&["critical-gamma"], &cfg, &out).status.code(), Some(2));
}
