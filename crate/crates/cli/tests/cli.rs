use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn cladoflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cladoflow"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("CLADOFLOW_THREADS")
        .output()
        .expect("binary runs")
}

fn summary(dir: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn csv_rows(dir: &Path, name: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(dir.join(format!("{name}.csv"))).unwrap();
    r.records()
        .map(|x| x.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn generator_gap_rows_pass() {
    let d = TempDir::new().unwrap();
    let out = cladoflow(
        d.path(),
        &[
            "generator-gap",
            "--seed",
            "1",
            "--name",
            "gap",
            "--param",
            "m=4",
            "--param",
            "N=[8,16,32,64]",
            "--param",
            "trees_per_N=20",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let rows = csv_rows(d.path(), "gap");
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r[6] == "true"));
}

#[test]
fn identities_clean() {
    let d = TempDir::new().unwrap();
    let out = cladoflow(
        d.path(),
        &[
            "identities",
            "--name",
            "ids",
            "--param",
            "N_max=64",
            "--param",
            "cases=1000",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    for r in csv_rows(d.path(), "ids") {
        assert_eq!(r[1], "1000");
        assert_eq!(r[2], "0", "{}", r[0]);
    }
}

#[test]
fn usage_errors_exit_one() {
    let d = TempDir::new().unwrap();
    assert_eq!(
        cladoflow(d.path(), &["no-such-thing"]).status.code(),
        Some(1)
    );
    let small = cladoflow(d.path(), &["simulate", "--param", "N=2"]);
    assert_eq!(small.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&small.stderr).contains("N >= 3"));
    assert_eq!(
        cladoflow(d.path(), &["simulate", "--param", "x=1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        cladoflow(d.path(), &["simulate", "--bogus"]).status.code(),
        Some(1)
    );
    assert_eq!(cladoflow(d.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(std::fs::read_dir(d.path()).unwrap().count(), 0);
}

#[test]
fn failed_assertion_exits_two() {
    let d = TempDir::new().unwrap();
    let out = cladoflow(
        d.path(),
        &[
            "crt-moments",
            "--name",
            "m",
            "--param",
            "N=50",
            "--param",
            "replicates=200",
            "--param",
            "distance_trees=0",
            "--param",
            "pair_tolerance=0",
        ],
    );
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let s = summary(d.path(), "m");
    assert_eq!(s["pass"], Value::Bool(false));
    let failed: Vec<_> = s["assertions"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|a| a["pass"] == Value::Bool(false))
        .map(|a| a["name"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(failed, ["pair_moment"]);
}

#[test]
fn thread_count_does_not_change_output() {
    // m = 6: below that every shape polynomial is constant over trees
    let d = TempDir::new().unwrap();
    let args = |threads: &'static str, name: &'static str| {
        vec![
            "duality",
            "--seed",
            "7",
            "--threads",
            threads,
            "--name",
            name,
            "--param",
            "m=6",
            "--param",
            "N=[12,20]",
            "--param",
            "replicates=300",
            "--param",
            "horizon=0.2",
        ]
    };
    assert_eq!(cladoflow(d.path(), &args("1", "a")).status.code(), Some(0));
    assert_eq!(cladoflow(d.path(), &args("3", "b")).status.code(), Some(0));
    let a = std::fs::read(d.path().join("a.csv")).unwrap();
    let b = std::fs::read(d.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let other = cladoflow(
        d.path(),
        &[
            "duality",
            "--seed",
            "8",
            "--name",
            "c",
            "--param",
            "m=6",
            "--param",
            "N=[12,20]",
            "--param",
            "replicates=300",
            "--param",
            "horizon=0.2",
        ],
    );
    assert!(other.status.success());
    assert_ne!(a, std::fs::read(d.path().join("c.csv")).unwrap());
}

#[test]
fn config_file_and_flags() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "mixing", "seed": 3, "threads": 1, "N": 10, "grid": [0, 0.5], "replicates": 20}"#,
    )
    .unwrap();
    let out = cladoflow(
        d.path(),
        &[
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "4",
            "--param",
            "N=12",
            "--name",
            "mix",
        ],
    );
    assert!(matches!(out.status.code(), Some(0 | 2)), "{out:?}");
    let s = summary(d.path(), "mix");
    assert_eq!(s["seed"], 4);
    assert_eq!(s["params"]["N"], 12);
    assert_eq!(s["params"]["replicates"], 20);
    assert_eq!(s["params"]["start"], "comb");
    assert_eq!(s["config"]["threads"], 1);
    let keys: Vec<_> = s["conflicts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["key"].as_str().unwrap())
        .collect();
    assert_eq!(keys, ["seed", "N"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("overrides"));
    for key in [
        "version",
        "wall_clock_seconds",
        "started_at",
        "metrics",
        "rng",
    ] {
        assert!(s.get(key).is_some(), "{key}");
    }
    // rows at t = 0 are the comb itself: zero spread
    let rows = csv_rows(d.path(), "mix");
    assert_eq!(rows.len(), 6);
    assert!(rows[..3].iter().all(|r| r[0] == "0" && r[3] == "0"));
}

#[test]
fn env_threads_fallback() {
    let d = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cladoflow"))
        .args([
            "qn-table", "--name", "q", "--param", "m=4", "--param", "N=8", "--out",
        ])
        .arg(d.path())
        .env("CLADOFLOW_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let s = summary(d.path(), "q");
    assert_eq!(s["config"]["threads"], 2);
    assert_eq!(s["metrics"]["sum"], "1/3");
}

#[test]
fn default_names_carry_a_timestamp() {
    let d = TempDir::new().unwrap();
    let out = cladoflow(d.path(), &["qn-table", "--param", "N=5"]);
    assert!(out.status.success());
    let names: Vec<String> = std::fs::read_dir(d.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.len(), 2);
    assert!(
        names.iter().all(|n| n.starts_with("qn-table-20")),
        "{names:?}"
    );
}

#[test]
fn distance_matrix_on_star() {
    let d = TempDir::new().unwrap();
    let tree = d.path().join("star.nwk");
    std::fs::write(&tree, "(1,2,3);").unwrap();
    let out = cladoflow(
        d.path(),
        &[
            "distance-matrix",
            "--name",
            "dm",
            "--param",
            &format!("tree={}", tree.display()),
            "--param",
            "m=2",
            "--param",
            "samples=300",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let rows = csv_rows(d.path(), "dm");
    assert_eq!(rows.len(), 300);
    for r in &rows {
        let same = r[3] == r[4];
        assert_eq!(r[5], if same { "0" } else { "26" });
        assert_eq!(r[6], "54");
    }
}

#[test]
fn simulate_writes_trajectory() {
    let d = TempDir::new().unwrap();
    let out = cladoflow(
        d.path(),
        &[
            "simulate",
            "--name",
            "s",
            "--param",
            "N=8",
            "--param",
            "clock=all",
            "--param",
            "horizon=0.2",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(d.path().join("s.trajectory.jsonl").exists());
    let s = summary(d.path(), "s");
    assert_eq!(s["metrics"]["expected_events"], 0.2 * 8.0 * 13.0);
    assert_eq!(
        csv_rows(d.path(), "s").len() as u64,
        s["metrics"]["events"].as_u64().unwrap()
    );
}
