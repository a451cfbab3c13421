use std::path::Path;
use std::process::{Command, Output};

use abc_cli::persist::PopulationTable;
use serde_json::Value;

fn abc(args: &[&str], dir: &Path, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_abc"));
    cmd.args(args).current_dir(dir).env_remove("ABC_WORKERS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_PMC: &str = r#"
algorithm = "pmc"
model = "mixture-toy"
n_particles = 300
seed = 4
schedule = [2.0, 0.5, 0.2]
workers = 2
budget = 5000000
out_dir = "out"
"#;

#[test]
fn run_happy_path_writes_populations_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL_PMC);
    let out = abc(&["run", "--config", &cfg], dir.path(), &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("generation 3"));

    let out_dir = dir.path().join("out");
    let report = read_json(&out_dir.join("report.json"));
    assert_eq!(report["status"], "completed");
    assert_eq!(report["config"]["seed"], 4);
    assert!(report["oracle"]["ks_statistic"].as_f64().unwrap() < 0.2);
    let gens = report["generations"].as_array().unwrap();
    assert_eq!(gens.len(), 3);
    assert!(gens[0]["kernel"].is_null());
    assert_eq!(gens[1]["kernel"]["mode"], "diagonal");

    let mut total = 0;
    for (i, g) in gens.iter().enumerate() {
        let t = i + 1;
        assert_eq!(g["t"], t);
        assert_eq!(g["population_file"], format!("gen_{t:03}.csv"));
        total += g["sims_used"].as_u64().unwrap();

        // an independent reader recomputes the reported moments from the file
        let table = PopulationTable::read(&out_dir.join(format!("gen_{t:03}.csv"))).unwrap();
        assert_eq!(table.t, t);
        assert_eq!(table.len(), 300);
        let mean: f64 = table
            .thetas
            .iter()
            .zip(&table.weights)
            .map(|(x, w)| w * x[0])
            .sum();
        let reported = g["weighted_mean"][0].as_f64().unwrap();
        assert!((mean - reported).abs() < 1e-12, "{mean} vs {reported}");
        assert!(table
            .distances
            .iter()
            .all(|&d| d <= g["epsilon"].as_f64().unwrap()));
    }
    assert_eq!(report["total_sims_used"].as_u64().unwrap(), total);
    assert_eq!(report["unfinished_sims"], 0);
}

#[test]
fn population_files_round_trip_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL_PMC);
    assert_eq!(
        abc(&["run", "--config", &cfg], dir.path(), &[])
            .status
            .code(),
        Some(0)
    );
    for t in 1..=3 {
        let path = dir.path().join(format!("out/gen_{t:03}.csv"));
        let original = std::fs::read(&path).unwrap();
        let table = PopulationTable::read(&path).unwrap();
        let copy = dir.path().join("copy.csv");
        table.write(&copy).unwrap();
        assert_eq!(std::fs::read(&copy).unwrap(), original);
    }
}

#[test]
fn non_decreasing_schedule_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        &SMALL_PMC.replace("[2.0, 0.5, 0.2]", "[1.0, 2.0]"),
    );
    for sub in ["run", "validate"] {
        let out = abc(&[sub, "--config", &cfg], dir.path(), &[]);
        assert_eq!(out.status.code(), Some(2));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(
            err.contains("entry 1 (2)") && err.contains("entry 0 (1)"),
            "{err}"
        );
    }
    assert!(!dir.path().join("out").exists());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = abc(&["run", "--config", "nope.toml"], dir.path(), &[]);
    assert_eq!(missing.status.code(), Some(2));
    let cfg = write_config(
        dir.path(),
        "typo.toml",
        &format!("{SMALL_PMC}\nn_particle = 3\n"),
    );
    assert_eq!(
        abc(&["validate", "--config", &cfg], dir.path(), &[])
            .status
            .code(),
        Some(2)
    );
    let cfg = write_config(dir.path(), "ok.toml", SMALL_PMC);
    let bad_env = abc(
        &["run", "--config", &cfg],
        dir.path(),
        &[("ABC_WORKERS", "lots")],
    );
    assert_eq!(bad_env.status.code(), Some(2));
}

#[test]
fn zero_final_tolerance_exits_3_with_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL_PMC
        .replace("[2.0, 0.5, 0.2]", "[2.0, 0.0]")
        .replace("budget = 5000000", "budget = 20000");
    let cfg = write_config(dir.path(), "zero.toml", &body);
    let out = abc(&["run", "--config", &cfg], dir.path(), &[]);
    assert_eq!(out.status.code(), Some(3));
    let report = read_json(&dir.path().join("out/report.json"));
    assert_eq!(report["status"], "budget_exhausted");
    assert!(report["message"].as_str().unwrap().contains("budget"));
    assert_eq!(report["generations"].as_array().unwrap().len(), 1);
    assert!(dir.path().join("out/gen_001.csv").exists());
    assert!(!dir.path().join("out/gen_002.csv").exists());
    let total = report["total_sims_used"].as_u64().unwrap();
    let gen1 = report["generations"][0]["sims_used"].as_u64().unwrap();
    assert_eq!(total, 20_000);
    assert_eq!(report["unfinished_sims"].as_u64().unwrap(), total - gen1);
}

#[test]
fn workers_env_override_keeps_outputs_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL_PMC);
    let mut files = Vec::new();
    for w in ["1", "8"] {
        let out_dir = format!("out_{w}");
        let out = abc(
            &["run", "--config", &cfg, "--out-dir", &out_dir, "--quiet"],
            dir.path(),
            &[("ABC_WORKERS", w)],
        );
        assert_eq!(out.status.code(), Some(0));
        let report = read_json(&dir.path().join(&out_dir).join("report.json"));
        assert_eq!(report["workers"].as_u64().unwrap().to_string(), w);
        files.push(std::fs::read(dir.path().join(&out_dir).join("gen_003.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

const COMPARE: &str = r#"
model = "mixture-toy"
seed = 9
replicates = REPS
workers = 2
out_dir = "cmp"

[[algorithms]]
algorithm = "pmc"
n_particles = 200
schedule = [2.0, 0.5]

[[algorithms]]
algorithm = "pmc"
n_particles = 200
schedule = [2.0, 0.5]

[[algorithms]]
algorithm = "mcmc"
epsilon = 0.5
[algorithms.mcmc]
n_iter = 2000
proposal_sd = [1.0]
"#;

#[test]
fn compare_duplicate_algorithm_gives_identical_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cmp.toml", &COMPARE.replace("REPS", "1"));
    let out = abc(&["compare", "--config", &cfg], dir.path(), &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("pmc#2"));
    let report = read_json(&dir.path().join("cmp/compare.json"));
    let algs = report["algorithms"].as_array().unwrap();
    assert_eq!(algs[0]["label"], "pmc");
    assert_eq!(algs[1]["label"], "pmc#2");
    assert_eq!(algs[0]["replicates"], algs[1]["replicates"]);
    assert_eq!(algs[0]["summary"], algs[1]["summary"]);
}

#[test]
fn compare_totals_are_sums_over_replicates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cmp.toml", &COMPARE.replace("REPS", "3"));
    let out = abc(&["compare", "--config", &cfg, "--quiet"], dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&dir.path().join("cmp/compare.json"));
    let mut grand = 0;
    for alg in report["algorithms"].as_array().unwrap() {
        let reps = alg["replicates"].as_array().unwrap();
        assert_eq!(reps.len(), 3);
        let seeds: Vec<u64> = reps.iter().map(|r| r["seed"].as_u64().unwrap()).collect();
        assert_eq!(seeds, [9, 10, 11]);
        let sum: u64 = reps.iter().map(|r| r["sims_used"].as_u64().unwrap()).sum();
        assert_eq!(alg["total_sims_used"].as_u64().unwrap(), sum);
        assert_eq!(alg["summary"]["mean_abs_err"]["n"], 3);
        grand += sum;
    }
    assert_eq!(report["total_sims_used"].as_u64().unwrap(), grand);
    assert!(report["winners"]["ks_statistic"].is_string());
}

#[test]
fn compare_rejects_mismatched_final_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let body = COMPARE
        .replace("REPS", "1")
        .replace("epsilon = 0.5", "epsilon = 0.4");
    let cfg = write_config(dir.path(), "cmp.toml", &body);
    let out = abc(&["compare", "--config", &cfg], dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("final tolerance"));
}

#[test]
fn bundled_configs_validate() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&configs).unwrap() {
        let path = entry.unwrap().path();
        let out = abc(
            &["validate", "--config", path.to_str().unwrap()],
            &configs,
            &[],
        );
        assert_eq!(out.status.code(), Some(0), "{}", path.display());
        n += 1;
    }
    assert!(n >= 7);
}
