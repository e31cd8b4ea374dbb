use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn svp(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_svp"));
    cmd.args(args).env_remove("SVP_THREADS");
    if let Some(t) = threads {
        cmd.env("SVP_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_RUN: &str = r#"
[run]
experiment = "simulate"

[grid]
d = 1
nx = 32
nv = 32
lx = 8.0
lv = 10.0

[[initial.bumps]]
amplitude = 0.05
x0 = [0.0]
v0 = [0.0]
sigma_x = 1.0
sigma_v = 1.0

[plan]
dt = 0.1
t_end = 1.0
scheme = "filtered_strang"

[checkpoint]
times = [0.5]

[diagnostics]
fits = [{ column = "grad_phi_sup", t1 = 0.2, t2 = 1.0 }]

[[checks]]
name = "mass drift"
kind = "drift"
column = "l2"
upper = 1e-6
"#;

#[test]
fn green_table_row_at_unit_radius() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "g.toml",
        "[run]\nexperiment = \"green-table\"\n[green]\nd = 1\nr_min = 0.1\nr_max = 5.0\ncount = 50\n",
    );
    let out = dir.path().join("out");
    let o = svp(&["green-table", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("green.csv")).unwrap();
    let row = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .find(|r| (r[0] - 1.0).abs() < 1e-12)
        .expect("r = 1 row");
    assert!((row[1] - 0.18394).abs() < 5e-6, "{}", row[1]);
}

#[test]
fn vacuum_run_has_zero_field() {
    let dir = TempDir::new().unwrap();
    let text = SMALL_RUN.replace("amplitude = 0.05", "amplitude = 0.0").replace("[[checks]]\nname = \"mass drift\"\nkind = \"drift\"\ncolumn = \"l2\"\nupper = 1e-6\n", "");
    let cfg = write_config(dir.path(), "v.toml", &text);
    let out = dir.path().join("out");
    let o = svp(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let cols: Vec<usize> = header.iter().enumerate().filter(|(_, h)| h.contains("phi")).map(|(i, _)| i).collect();
    assert_eq!(cols.len(), 4);
    for line in csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        for &c in &cols {
            assert_eq!(cells[c].parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn unknown_key_exits_2_and_names_it() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &SMALL_RUN.replace("dt = 0.1", "dt = 0.1\ntime_step_typo = 3"));
    let o = svp(&["simulate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("time_step_typo"));
}

#[test]
fn memory_ceiling_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "m.toml", &SMALL_RUN.replace("experiment = \"simulate\"", "experiment = \"simulate\"\nmemory_ceiling = 1000"));
    let o = svp(&["simulate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "memory_ceiling");
}

#[test]
fn guard_layer_contact_aborts_with_3() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "p.toml", &SMALL_RUN.replace("lv = 10.0", "lv = 4.0"));
    let out = dir.path().join("o");
    let o = svp(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "pad_guard");
    assert_eq!(json(&out.join("summary.json"))["error"]["kind"], "pad_guard");
}

#[test]
fn outputs_are_deterministic_and_resumable() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL_RUN);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = svp(&["simulate", "--config", &cfg, "--out", a.to_str().unwrap(), "--threads", "1"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = svp(&["simulate", "--config", &cfg, "--out", b.to_str().unwrap()], Some("3"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv_a = fs::read_to_string(a.join("diagnostics.csv")).unwrap();
    assert_eq!(csv_a, fs::read_to_string(b.join("diagnostics.csv")).unwrap());

    let manifest = json(&a.join("manifest.json"));
    let summary = json(&a.join("summary.json"));
    assert_eq!(manifest["config_hash"], summary["config_hash"]);
    assert!(manifest["extra"]["memory_formula"].as_str().unwrap().contains("nx^d"));
    assert_eq!(manifest["config"]["diagnostics"]["record_every"], 1);
    assert_eq!(summary["checks"][0]["pass"], true);
    assert!(a.join("grad_phi_sup.svg").exists());

    let ckpt = a.join("checkpoint_t0.500000.svpk");
    let c = dir.path().join("c");
    let o = svp(
        &["simulate", "--config", &cfg, "--out", c.to_str().unwrap(), "--resume", ckpt.to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let resumed = fs::read_to_string(c.join("diagnostics.csv")).unwrap();
    let tail: Vec<&str> = csv_a.lines().skip(6).collect();
    let resumed_rows: Vec<&str> = resumed.lines().skip(1).collect();
    assert_eq!(tail, resumed_rows);
    assert_eq!(fs::read(a.join("final.svpk")).unwrap(), fs::read(c.join("final.svpk")).unwrap());
}

#[test]
fn oracle_and_scatter_experiments() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "o.toml",
        r#"
[run]
experiment = "linear-oracle"

[oracle]
d = 2
lemmas = [{ lemma = "rho_sup_d2", t1 = 10.0, t2 = 100.0, samples = 10 }]

[[initial.bumps]]
amplitude = 1.0
x0 = [0.0, 0.0]
v0 = [0.0, 0.0]
sigma_x = 1.0
sigma_v = 1.0
"#,
    );
    let out = dir.path().join("o");
    let o = svp(&["linear-oracle", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&out.join("summary.json"));
    assert_eq!(s["all_checks_pass"], true);
    let e = s["lemmas"][0]["fit"]["exponent"].as_f64().unwrap();
    assert!((e + 2.0).abs() < 0.05, "{e}");

    // scattering analysis of checkpoints saved at dyadic times
    let run_cfg = write_config(
        dir.path(),
        "r.toml",
        &SMALL_RUN.replace("t_end = 1.0", "t_end = 1.6").replace("times = [0.5]", "times = [0.2, 0.4, 0.8, 1.6]"),
    );
    let r = dir.path().join("r");
    assert!(svp(&["simulate", "--config", &run_cfg, "--out", r.to_str().unwrap()], None).status.success());
    let scat = write_config(
        dir.path(),
        "s.toml",
        "[run]\nexperiment = \"scatter-analyze\"\n[scatter]\nsnapshots = [\"r/checkpoint_t0.200000.svpk\", \"r/checkpoint_t0.400000.svpk\", \"r/checkpoint_t0.800000.svpk\", \"r/checkpoint_t1.600000.svpk\"]\n",
    );
    let so = dir.path().join("s");
    let o = svp(&["scatter-analyze", "--config", &scat, "--out", so.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(so.join("scattering.csv")).unwrap().lines().count(), 4);

    // subcommand / experiment mismatch
    let o = svp(&["simulate", "--config", &scat], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            svp::harness::config::RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 4);
}
