use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_intnet"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn core_fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const FIT_CONFIG: &str = r#"
inner = "lsp"
iterations = 30
burn_in = 10
lag = 1
gamma_step = 0.3

[dispersion]
kind = "gamma"
shape = 5.0
rate = 1.67

[aux]
method = "mcmc"
burn_in = 10
lag = 2
"#;

#[test]
fn distance_of_identical_files_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    fs::write(&a, "[[0,1,2],[3]]").unwrap();
    for metric in ["edit", "matching"] {
        let out = run(bin()
            .arg("distance")
            .arg("--a")
            .arg(&a)
            .arg("--b")
            .arg(&a)
            .args(["--metric", metric]));
        assert_eq!(stdout(&out).trim(), "0");
    }
}

#[test]
fn distance_matches_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    fs::write(&a, "[[1,2,3,4,5,6,7]]").unwrap();
    fs::write(&b, "[[1,2,3,8,5,0]]").unwrap();
    let lsp = run(bin().arg("distance").arg("--a").arg(&a).arg("--b").arg(&b));
    assert_eq!(stdout(&lsp).trim(), "7");
    let lcs = run(bin()
        .arg("distance")
        .arg("--a")
        .arg(&a)
        .arg("--b")
        .arg(&b)
        .args(["--inner", "lcs"]));
    assert_eq!(stdout(&lcs).trim(), "5");
}

#[test]
fn missing_required_flag_exits_with_usage_error() {
    let out = bin()
        .args(["fit", "sis", "--data", "x.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

#[test]
fn ingest_reproduces_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ds.json");
    run(bin()
        .arg("ingest")
        .arg("--checkins")
        .arg(core_fixture("checkins.tsv"))
        .arg("--categories")
        .arg(core_fixture("categories.tsv"))
        .args(["--min-paths-per-user", "2"])
        .arg("--out")
        .arg(&out));
    assert_eq!(
        fs::read(&out).unwrap(),
        fs::read(core_fixture("checkins.expected.json")).unwrap()
    );
}

#[test]
fn fit_writes_chain_and_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fit.toml");
    fs::write(&cfg, FIT_CONFIG).unwrap();
    let out = dir.path().join("fit");
    run(bin()
        .args(["--seed", "11", "fit", "sis", "--data"])
        .arg(fixture("small.json"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out));
    let chain: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("chain.json")).unwrap()).unwrap();
    assert_eq!(chain["format_version"], 1);
    let samples = chain["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 30);
    for s in samples {
        assert!(s["gamma"].as_f64().unwrap() > 0.0);
        let paths = s["mode"].as_array().unwrap();
        assert!(!paths.is_empty() && paths.len() <= 2);
    }
    let est: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("estimate.json")).unwrap()).unwrap();
    assert!(est["gamma"].as_f64().unwrap() > 0.0);
    let diag = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with(
        "update,proposed,accepted,out_of_support,acceptance_rate,mean_distance\ngamma,"
    ));
    assert_eq!(
        fs::read_to_string(out.join("trace.csv"))
            .unwrap()
            .lines()
            .count(),
        31
    );

    // same seed, same chain
    let again = dir.path().join("again");
    run(bin()
        .args(["--seed", "11", "fit", "sis", "--data"])
        .arg(fixture("small.json"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&again));
    assert_eq!(
        fs::read(out.join("chain.json")).unwrap(),
        fs::read(again.join("chain.json")).unwrap()
    );
}

#[test]
fn fit_rejects_wrong_observation_kind() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fit.toml");
    fs::write(&cfg, FIT_CONFIG).unwrap();
    let out = bin()
        .args(["fit", "sim", "--data"])
        .arg(fixture("small.json"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ordered"));
}

#[test]
fn baselines_write_edge_lists() {
    let rm = run(bin()
        .args(["baseline", "rm", "--data"])
        .arg(fixture("small.json")));
    assert_eq!(stdout(&rm), "i,j,count\n0,1,1\n1,2,1\n");
    let mv = run(bin()
        .args(["baseline", "mv", "--data"])
        .arg(fixture("small.json")));
    assert_eq!(stdout(&mv), "i,j,count\n0,1,1\n1,2,1\n");
}

#[test]
fn sampled_dataset_is_readable_and_in_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let mode = dir.path().join("mode.json");
    fs::write(&mode, "[[0,1],[2]]").unwrap();
    let out = dir.path().join("s.json");
    run(bin()
        .args(["sample", "sim", "--mode"])
        .arg(&mode)
        .args([
            "--gamma", "1.5", "--metric", "matching", "--v", "3", "--k", "3", "--l", "2",
        ])
        .args(["--iters", "15", "--burnin", "5", "--lag", "2", "--out"])
        .arg(&out));
    let diag = fs::read_to_string(dir.path().join("s.diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 3);
    let ds: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(ds["ordered"], false);
    let obs = ds["observations"].as_array().unwrap();
    assert_eq!(obs.len(), 15);
    for o in obs {
        let paths = o.as_array().unwrap();
        assert!((1..=2).contains(&paths.len()));
        for p in paths {
            let p = p.as_array().unwrap();
            assert!((1..=3).contains(&p.len()));
            assert!(p.iter().all(|x| x.as_u64().unwrap() < 3));
        }
    }
    // the output feeds straight back into other commands
    let m = run(bin().arg("distmatrix").arg("--data").arg(&out));
    let text = stdout(&m);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 15);
    assert!(rows
        .iter()
        .enumerate()
        .all(|(i, r)| r.split(',').nth(i) == Some("0")));
}

#[test]
fn summarize_reports_medians() {
    let dir = tempfile::tempdir().unwrap();
    let res = dir.path().join("results.csv");
    fs::write(
        &res,
        "gamma_true,n,rep,d_bar,gamma_bar\n2.0,10,0,4.0,1.0\n2.0,10,1,2.0,3.0\n2.0,10,2,3.0,2.0\n2.0,40,0,1.0,2.5\n",
    )
    .unwrap();
    let out = run(bin().arg("summarize").arg("--results").arg(&res));
    assert_eq!(
        stdout(&out),
        "gamma_true,n,count,median_d_bar,median_gamma_bar\n2.0,10,3,3.0,2.0\n2.0,40,1,1.0,2.5\n"
    );
}

#[test]
fn sample_rejects_mismatched_metric() {
    let dir = tempfile::tempdir().unwrap();
    let mode = dir.path().join("mode.json");
    fs::write(&mode, "[[0,1]]").unwrap();
    let out = bin()
        .args(["sample", "sis", "--mode"])
        .arg(&mode)
        .args([
            "--gamma", "1", "--metric", "matching", "--v", "2", "--k", "2", "--l", "1",
        ])
        .args(["--iters", "3", "--out"])
        .arg(dir.path().join("x.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn hollywood_sample_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let draw = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        run(bin()
            .args([
                "--seed",
                seed,
                "sample",
                "hollywood",
                "--alpha",
                "-0.3",
                "--v",
                "5",
            ])
            .args([
                "--lambda", "3", "--lmax", "4", "--paths", "3", "--reps", "8", "--out",
            ])
            .arg(&out));
        fs::read_to_string(out).unwrap()
    };
    let a = draw("a.json", "4");
    assert_eq!(a, draw("b.json", "4"));
    assert_ne!(a, draw("c.json", "5"));
    let ds: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(ds["observations"].as_array().unwrap().len(), 8);
    assert_eq!(ds["L"], 3);
}
