use std::fs;
use std::path::Path;
use std::process::Command;

use husimi_cli::config::{parse_config, Experiment, Overrides, QuantumMethod};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_husimi-dyn");

const SMALL: &str = r#"
times = [0.0, 1.0, 2.0]
t_eval = 3.0
[model]
variant = "ModelI"
v = 0.3
[grid]
q = [-8.0, 8.0]
p = [-4.0, 4.0]
nq = 24
np = 16
[sweep]
lo = 0.2
hi = 1.2
n = 3
[numeric]
lattice_size = 201
[portrait]
t_final = 5.0
"#;

fn run(dir: &Path, cmd: &str, config: &str, extra: &[&str]) -> (i32, Value) {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let status = Command::new(BIN)
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .env_remove("HUSIMI_DYN_OUT")
        .status()
        .unwrap();
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    (status.code().unwrap(), manifest)
}

#[test]
fn defaults_follow_the_variant() {
    let c = parse_config("[model]\nvariant = \"ModelII\"\n", Experiment::QuantumHusimi).unwrap();
    assert_eq!(c.times, vec![0.0, 2.0, 5.0, 10.0]);
    assert_eq!(c.model.j(), 1.0);
    assert_eq!(c.numeric.method, QuantumMethod::Fock);
    let c = parse_config("[model]\nvariant = \"ModelI\"\n", Experiment::VSweep).unwrap();
    assert_eq!(c.model.j_left(), 1.0);
    assert_eq!(c.model.j_right(), 0.5);
    assert_eq!(c.numeric.method, QuantumMethod::Fiber);
    assert_eq!(c.sweep.unwrap().values().len(), 15);
    assert_eq!(c.t_eval, 30.0);
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        "[model]\nvariant = \"ModelI\"\nv = -1.0\n",
        "[model]\nvariant = \"ModelQ\"\n",
        "[model]\nvariant = \"ModelII\"\nj_left = 1.0\n",
        "times = [2.0, 1.0]\n[model]\nvariant = \"ModelI\"\n",
        "colour = 3\n[model]\nvariant = \"ModelI\"\n",
        "experiment = \"portrait\"\n[model]\nvariant = \"ModelI\"\n",
        "[model]\nvariant = \"ModelI\"\n[numeric]\nlattice_size = 600\n",
    ];
    for text in bad {
        let e = parse_config(text, Experiment::LatticeTransport).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{text}: {e}");
    }
}

#[test]
fn overrides_replace_config_fields() {
    let mut c = parse_config(SMALL, Experiment::QuantumHusimi).unwrap();
    c.apply(&Overrides { fock_dim: Some(120), lattice_size: Some(101), dt: Some(0.02), ..Default::default() }).unwrap();
    assert_eq!(c.numeric.fock_dim, 120);
    assert!(!c.numeric.adaptive_fock);
    assert_eq!(c.numeric.lattice_size, 101);
    assert_eq!(c.numeric.dt, Some(0.02));
    assert!(c.apply(&Overrides { lattice_size: Some(100), ..Default::default() }).is_err());
}

#[test]
fn every_subcommand_runs_and_is_reproducible() {
    for cmd in ["lattice", "qhusimi", "chusimi", "portrait", "critical", "vsweep", "compare", "purity"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let (code_a, ma) = run(a.path(), cmd, SMALL, &["--workers", "1"]);
        let (code_b, _) = run(b.path(), cmd, SMALL, &["--workers", "2"]);
        assert_eq!(code_a, 0, "{cmd}: {ma}");
        assert_eq!(code_b, 0);
        assert_eq!(ma["status"], "ok");
        let outputs = ma["outputs"].as_array().unwrap();
        assert!(!outputs.is_empty(), "{cmd} wrote nothing");
        for name in outputs {
            let name = name.as_str().unwrap();
            let x = fs::read(a.path().join("out").join(name)).unwrap();
            let y = fs::read(b.path().join("out").join(name)).unwrap();
            assert!(x == y, "{cmd}: {name} differs between runs");
        }
    }
}

#[test]
fn field_files_have_the_documented_layout() {
    let d = tempfile::tempdir().unwrap();
    let (code, _) = run(d.path(), "qhusimi", SMALL, &[]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(d.path().join("out").join("qhusimi_t1.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("q,p,value"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!(rows.len() >= 24 * 16);
    assert!(rows.iter().all(|r| r.len() == 3 && r[2] >= 0.0));
}

#[test]
fn exit_codes_and_manifest_on_failure() {
    let d = tempfile::tempdir().unwrap();
    let (code, m) = run(d.path(), "lattice", "[model]\nvariant = \"ModelI\"\nv = -0.5\n", &[]);
    assert_eq!(code, 2);
    assert_eq!(m["status"], "failed");
    assert!(m["error"].as_str().unwrap().contains("model.v"));

    // a too-large step trips the integrator guard
    let (code, m) = run(d.path(), "lattice", SMALL, &["--dt", "0.5"]);
    assert_eq!(code, 3, "{m}");
    assert_eq!(m["exit_code"], 3);

    // output directory blocked by a regular file
    let blocker = d.path().join("blocked");
    fs::write(&blocker, "").unwrap();
    let cfg = d.path().join("run.toml");
    fs::write(&cfg, SMALL).unwrap();
    let status = Command::new(BIN)
        .args(["lattice", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(blocker.join("sub"))
        .env_remove("HUSIMI_DYN_OUT")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));

    let (code, _) = run(d.path(), "lattice", "not toml [", &[]);
    assert_eq!(code, 2);
}

#[test]
fn environment_overrides_out_flag() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.toml");
    fs::write(&cfg, SMALL).unwrap();
    let env_dir = d.path().join("from_env");
    let status = Command::new(BIN)
        .args(["critical", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(d.path().join("from_flag"))
        .env("HUSIMI_DYN_OUT", &env_dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(env_dir.join("manifest.json").exists());
    assert!(env_dir.join("critical.csv").exists());
    assert!(!d.path().join("from_flag").exists());
}
