use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_orbtrace"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(path: &Path) -> Output {
    bin().arg("run").arg(path).output().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

const GOLDEN_MEAN: &str = r#"
experiment = "sft-trace"
seed = 7

[group]
family = "integer-lattice"
parameter = 1

[sft]
catalog = "golden-mean"

[tolerance]
level = 4

[trace]
outer_radius = 16
samples = 500
"#;

const CAT_MAP: &str = r#"
experiment = "toral-stability"
seed = 1

[group]
family = "integer-lattice"
parameter = 1

[toral]
matrices = [[[2, 1], [1, 1]]]
amplitude = 0.0
word_budget = 12
grid = 8
"#;

#[test]
fn shipped_configs_validate() {
    let mut count = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = bin().arg("validate").arg(&path).output().unwrap();
            assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
            count += 1;
        }
    }
    assert!(count >= 6);
}

#[test]
fn schema_lists_every_section() {
    let out = bin().arg("schema").output().unwrap();
    assert!(out.status.success());
    let schema: Value = serde_json::from_slice(&out.stdout).unwrap();
    let props = schema["properties"].as_object().unwrap();
    for key in ["experiment", "seed", "group", "sft", "tolerance", "trace", "toral", "chain", "cantor", "compare"] {
        assert!(props.contains_key(key), "{key}");
    }
}

#[test]
fn golden_mean_trace_passes_every_sample() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&write_config(dir.path(), "gm.toml", GOLDEN_MEAN));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["passed"], true);
    assert_eq!(r["result"]["summary"]["samples"], 500);
    assert_eq!(r["result"]["summary"]["passed"], 500);
    assert_eq!(r["config"]["trace"]["outer_radius"], 16);
    assert!(r.get("wall_clock_seconds").is_none());
    assert!(!r["disclaimers"].as_array().unwrap().is_empty());
}

#[test]
fn reports_are_byte_identical() {
    for text in [GOLDEN_MEAN, CAT_MAP] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert!(run(&write_config(a.path(), "c.toml", text)).status.success());
        assert!(run(&write_config(b.path(), "c.toml", text)).status.success());
        let ra = std::fs::read(a.path().join("report.json")).unwrap();
        let rb = std::fs::read(b.path().join("report.json")).unwrap();
        assert_eq!(ra, rb);
    }
}

#[test]
fn zero_amplitude_gives_zero_displacement_and_grid_csv() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{CAT_MAP}\n[output]\ngrid_csv = \"grid.csv\"\nwall_clock = true\n");
    let out = run(&write_config(dir.path(), "cat.toml", &text));
    assert!(out.status.success());
    let r = report(dir.path());
    assert_eq!(r["result"]["sup_displacement"], 0.0);
    assert_eq!(r["result"]["identity"], true);
    assert!(r["wall_clock_seconds"].is_f64());
    let csv = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x1,x2,f1,f2,displacement"));
    assert_eq!(csv.lines().count(), 1 + 64);
}

#[test]
fn generating_set_compare_on_z2() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
experiment = "generating-set-compare"

[group]
family = "integer-lattice"
parameter = 2

[toral]
matrices = [[[2, 1], [1, 1]], [[1, -1], [-1, 2]]]

[compare]
generators_b = ["(1,0)", "(1,1)"]
samples = 20
"#;
    let out = run(&write_config(dir.path(), "cmp.toml", text));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(r["result"]["m"], 2);
    assert_eq!(r["result"]["holds"], true);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = GOLDEN_MEAN.replace("samples = 500", "samples = 500\nsampels = 3");
    let missing = GOLDEN_MEAN.replace("[tolerance]\nlevel = 4\n", "");
    let unused = format!("{GOLDEN_MEAN}\n[compare]\ngenerators_b = [\"1\"]\n");
    let bad_sft = GOLDEN_MEAN.replace("golden-mean", "silver-mean");
    let bad_level = GOLDEN_MEAN.replace("level = 4", "level = 1");
    for (i, text) in [unknown, missing, unused, bad_sft, bad_level].iter().enumerate() {
        let path = write_config(dir.path(), &format!("bad{i}.toml"), text);
        let out = bin().arg("validate").arg(&path).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "case {i}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(run(&path).status.code(), Some(2), "case {i}");
    }
    assert_eq!(bin().arg("run").arg(dir.path().join("absent.toml")).output().unwrap().status.code(), Some(2));
}

#[test]
fn capacity_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
experiment = "cantor-trace"

[group]
family = "integer-lattice"
parameter = 3

[chain]
kind = "lattice"
base = 2
depth = 30

[cantor]
level = 3
radius = 2
"#;
    let out = run(&write_config(dir.path(), "cap.toml", text));
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn shift_action_without_modulus_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
experiment = "cantor-trace"

[group]
family = "integer-lattice"
parameter = 1

[chain]
kind = "explicit"
action = "shift"

[cantor]
level = 2
radius = 3
config_radius = 6
"#;
    let out = run(&write_config(dir.path(), "shift.toml", text));
    assert_eq!(out.status.code(), Some(1));
    let r = report(dir.path());
    assert_eq!(r["passed"], false);
    assert!(r["result"]["modulus"]["k"].is_null());
}

#[test]
fn odometer_trace_and_table_chain() {
    let dir = tempfile::tempdir().unwrap();
    // the depth-3 binary odometer as a coset table
    let mut csv = String::from("level,coset,parent,image\n");
    for n in 0..=3u32 {
        let q = 1u64 << n;
        for c in 0..q {
            let parent = if n == 0 { 0 } else { c % (q / 2) };
            csv.push_str(&format!("{n},{c},{parent},{}\n", (c + 1) % q));
        }
    }
    std::fs::write(dir.path().join("chain.csv"), csv).unwrap();
    let text = r#"
experiment = "cantor-trace"

[group]
family = "integer-lattice"
parameter = 1

[chain]
kind = "table"
table = "chain.csv"

[cantor]
level = 2
radius = 8
samples = 20
cylinder_level = 2
"#;
    let out = run(&write_config(dir.path(), "table.toml", text));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(r["result"]["passed"], 20);
    assert_eq!(r["result"]["k"], 2);
    assert_eq!(r["result"]["cylinders"]["holds"], true);
}

#[test]
fn synthesis_and_expansiveness_runs() {
    let dir = tempfile::tempdir().unwrap();
    let syn = r#"
experiment = "sft-synthesize"

[group]
family = "integer-lattice"
parameter = 1

[sft]
catalog = "golden-mean"

[synthesize]
level = 2
slack = 4
compare_radius = 6
"#;
    assert!(run(&write_config(dir.path(), "syn.toml", syn)).status.success());
    let r = report(dir.path());
    assert_eq!(r["result"]["forbidden_count"], 128 - 34);
    assert_eq!(r["result"]["languages_equal"], true);

    let exp = r#"
experiment = "expansiveness-window"

[group]
family = "integer-lattice"
parameter = 1

[sft]
catalog = "full"

[expansiveness]
eta = "1/2"
epsilons = ["2^-2", "2^-3"]
max_k = 5
"#;
    assert!(run(&write_config(dir.path(), "exp.toml", exp)).status.success());
    let r = report(dir.path());
    let ks: Vec<u64> = r["result"]["windows"].as_array().unwrap().iter().map(|w| w["k"].as_u64().unwrap()).collect();
    assert_eq!(ks, [2, 3]);
}
