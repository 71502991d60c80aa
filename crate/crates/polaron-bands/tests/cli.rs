//! End-to-end runs of the `polaron-bands` binary on a coarse configuration.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"{
  "numerics": {"n_r": 400, "n_k": 48, "k_max_proxy": 10, "ell_max": 4, "ell_cap": 16, "ell_step": 4,
               "tolerances": {"tail_rel": 1e-2}},
  "physics": {"K_list": [2.5, 5, 10], "scaling_ell_max": 4, "figure_points": 9},
  "trial": {"alphas": [10, 40]}
}"#;

struct Env {
    dir: tempfile::TempDir,
}

impl Env {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("config.json"), config).unwrap();
        Env { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn cache(&self) -> PathBuf {
        self.path("cache")
    }

    fn run(&self, sub: &str, out: &str, extra: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_polaron-bands"))
            .arg(sub)
            .arg("--config")
            .arg(self.path("config.json"))
            .arg("--out-dir")
            .arg(self.path(out))
            .args(extra)
            .env("POLARON_CACHE_DIR", self.cache())
            .output()
            .unwrap()
    }

    fn cache_file(&self, stage: &str) -> PathBuf {
        std::fs::read_dir(self.cache())
            .unwrap()
            .map(|e| e.unwrap().path())
            .find(|p| {
                p.file_name()
                    .unwrap()
                    .to_string_lossy()
                    .starts_with(&format!("{stage}-"))
            })
            .unwrap_or_else(|| panic!("no {stage} cache entry"))
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Header-stripped CSV rows as string fields keyed by column name.
fn csv(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let cols: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| {
            cols.iter()
                .cloned()
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect()
}

fn num(row: &std::collections::HashMap<String, String>, col: &str) -> f64 {
    row[col].parse().unwrap()
}

#[test]
fn sweep_writes_every_table_with_provenance() {
    let env = Env::new(SMALL);
    let o = env.run("sweep", "out", &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let art = json(&env.path("out/run_artifacts.json"));
    let hash = art["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    for f in [
        "spectrum.csv",
        "ladder.csv",
        "bands.csv",
        "figure1_data.csv",
    ] {
        let text = std::fs::read_to_string(env.path("out").join(f)).unwrap();
        let first = text.lines().next().unwrap();
        assert!(
            first.contains(&format!("config_hash={hash}")),
            "{f}: {first}"
        );
        assert!(text.contains("trace coefficient 1/2"), "{f}");
    }
    for f in ["pekar_summary.json", "hessian_summary.json"] {
        let v = json(&env.path("out").join(f));
        assert_eq!(v["config_hash"], hash.as_str());
        assert!(v["provenance"]["trace_convention"]
            .as_str()
            .unwrap()
            .contains("1/2"));
    }
    let h = json(&env.path("out/hessian_summary.json"));
    let zpe = h["zpe"].as_f64().unwrap();
    assert_eq!(h["zpe_coefficient_one"].as_f64().unwrap(), 2.0 * zpe);
}

#[test]
fn config_hash_ignores_execution_settings() {
    let env = Env::new(SMALL);
    assert_eq!(code(&env.run("solve-pekar", "a", &["--threads", "1"])), 0);
    assert_eq!(code(&env.run("solve-pekar", "b", &["--threads", "3"])), 0);
    let a = json(&env.path("a/pekar_summary.json"));
    let b = json(&env.path("b/pekar_summary.json"));
    assert_eq!(a["config_hash"], b["config_hash"]);

    let other = Env::new(&SMALL.replace("\"n_k\": 48", "\"n_k\": 40"));
    assert_eq!(code(&other.run("solve-pekar", "a", &[])), 0);
    assert_ne!(
        json(&other.path("a/pekar_summary.json"))["config_hash"],
        a["config_hash"]
    );
}

#[test]
fn sweep_is_byte_identical_across_thread_counts() {
    let env = Env::new(SMALL);
    assert_eq!(code(&env.run("sweep", "t1", &["--threads", "1"])), 0);
    // Separate cache so the second run recomputes every stage.
    std::fs::remove_dir_all(env.cache()).unwrap();
    assert_eq!(code(&env.run("sweep", "t4", &["--threads", "4"])), 0);
    for f in [
        "spectrum.csv",
        "ladder.csv",
        "bands.csv",
        "figure1_data.csv",
    ] {
        let a = std::fs::read(env.path("t1").join(f)).unwrap();
        let b = std::fs::read(env.path("t4").join(f)).unwrap();
        assert!(a == b, "{f} differs between thread counts");
    }
}

#[test]
fn config_errors_exit_2() {
    let env = Env::new(r#"{"physics": {"alpha_lst": [5]}}"#);
    let o = env.run("bands", "out", &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("alpha_lst"), "{}", stderr(&o));

    let env = Env::new(r#"{"physics": {"alpha_list": [10, 5]}}"#);
    assert_eq!(code(&env.run("bands", "out", &[])), 2);

    let env = Env::new(SMALL);
    assert_eq!(code(&env.run("bands", "out", &["--threads", "0"])), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_polaron-bands"))
        .args(["bands", "--config"])
        .arg(env.path("missing.json"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_polaron-bands"))
        .arg("bogus")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn bands_without_prior_stages_populates_cache() {
    let env = Env::new(SMALL);
    let o = env.run("bands", "out", &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    env.cache_file("pekar");
    env.cache_file("hessian");
    let o = env.run("hessian", "out2", &[]);
    assert_eq!(code(&o), 0);
    let art = json(&env.path("out2/run_artifacts.json"));
    assert_eq!(art["cache_hits"]["hessian"], true);
}

#[test]
fn cached_pekar_stage_is_cheap() {
    // A fine radial grid so the solve dominates the fixed cost of a load.
    let env = Env::new(r#"{"numerics": {"n_r": 4000}}"#);
    assert_eq!(code(&env.run("solve-pekar", "a", &[])), 0);
    assert_eq!(code(&env.run("solve-pekar", "b", &[])), 0);
    let a = json(&env.path("a/run_artifacts.json"));
    let b = json(&env.path("b/run_artifacts.json"));
    assert_eq!(a["cache_hits"]["pekar"], false);
    assert_eq!(b["cache_hits"]["pekar"], true);
    let (ta, tb) = (
        a["stage_seconds"]["pekar"].as_f64().unwrap(),
        b["stage_seconds"]["pekar"].as_f64().unwrap(),
    );
    assert!(tb < 0.01 * ta, "load {tb} s vs compute {ta} s");
    assert_eq!(
        std::fs::read(env.path("a/pekar.csv")).unwrap(),
        std::fs::read(env.path("b/pekar.csv")).unwrap()
    );
}

#[test]
fn damaged_cache_is_a_numerical_error() {
    let env = Env::new(SMALL);
    assert_eq!(code(&env.run("solve-pekar", "out", &[])), 0);
    let file = env.cache_file("pekar");
    let original = std::fs::read_to_string(&file).unwrap();

    let mut v: Value = serde_json::from_str(&original).unwrap();
    let e = v["payload"]["e_pek"].as_f64().unwrap();
    v["payload"]["e_pek"] = Value::from(e * (1.0 + 1e-9));
    std::fs::write(&file, serde_json::to_string(&v).unwrap()).unwrap();
    let o = env.run("verify", "out", &[]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("hash mismatch"), "{}", stderr(&o));

    std::fs::write(&file, &original[..original.len() / 2]).unwrap();
    let o = env.run("solve-pekar", "out", &[]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("truncated"), "{}", stderr(&o));
}

#[test]
fn stale_cache_version_recomputes_with_notice() {
    let env = Env::new(SMALL);
    assert_eq!(code(&env.run("solve-pekar", "out", &[])), 0);
    let file = env.cache_file("pekar");
    let mut v: Value = json(&file);
    v["schema_version"] = Value::from(0);
    std::fs::write(&file, serde_json::to_string(&v).unwrap()).unwrap();
    let o = env.run("solve-pekar", "out", &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("notice"), "{}", stderr(&o));
    assert_eq!(
        json(&env.path("out/run_artifacts.json"))["cache_hits"]["pekar"],
        false
    );
    assert_eq!(json(&file)["schema_version"], 1);
}

#[test]
fn ladder_starts_at_ground_state() {
    let env = Env::new(SMALL);
    assert_eq!(code(&env.run("ladder", "out", &[])), 0);
    let text = std::fs::read_to_string(env.path("out/ladder.csv")).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "n,Lambda,multiset");
    assert_eq!(body[1], "0,0.000000000000e+00,");
    let rows = csv(&env.path("out/ladder.csv"));
    assert!(rows
        .windows(2)
        .all(|w| num(&w[0], "Lambda") <= num(&w[1], "Lambda")));
}

#[test]
fn bound_flags_match_edges_and_counts() {
    let env = Env::new(SMALL);
    assert_eq!(code(&env.run("bands", "out", &[])), 0);
    let rows = csv(&env.path("out/bands.csv"));
    assert!(!rows.is_empty());
    let mut groups: std::collections::BTreeMap<(String, String), Vec<_>> = Default::default();
    for r in &rows {
        let bound = num(r, "band_upper") < num(r, "edge_lower");
        assert_eq!(r["is_bound"], bound.to_string());
        groups
            .entry((r["alpha"].clone(), r["P"].clone()))
            .or_default()
            .push(r);
    }
    for rs in groups.values() {
        let n_bound = rs.iter().filter(|r| r["is_bound"] == "true").count();
        // Bound bands form a prefix of the ascending ladder.
        assert!(rs[..n_bound].iter().all(|r| r["is_bound"] == "true"));
        let count: usize = rs[0]["count_ladder"].parse().unwrap();
        assert_eq!(n_bound, count.min(rs.len()));
    }
}

#[test]
fn figure_curves_are_exact_parabolas() {
    let env = Env::new(SMALL);
    assert_eq!(code(&env.run("bands", "out", &[])), 0);
    let rows = csv(&env.path("out/figure1_data.csv"));
    assert_eq!(rows.len(), 5 * 4 * 9);
    let mut worst = 0.0f64;
    for curve in rows.chunks(9) {
        let alpha = num(&curve[0], "alpha");
        let b0 = num(&curve[0], "band_upper");
        assert_eq!(num(&curve[0], "P"), 0.0);
        for r in curve {
            // P^2/(2 alpha^4 m) = (P/P_c)^2 / alpha^2 since P_c^2 = 2 m alpha^2.
            let f = num(r, "P_over_Pc");
            let want = b0 + f * f / (alpha * alpha);
            worst = worst.max((num(r, "band_upper") - want).abs() / want.abs());
            assert!((num(r, "P") - f * num(r, "P_c")).abs() <= 1e-12 * num(r, "P_c"));
        }
    }
    // Both sides carry 13 significant digits.
    assert!(worst < 2e-12, "{worst:e}");
}
