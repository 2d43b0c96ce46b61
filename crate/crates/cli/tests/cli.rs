use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn confound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confound"))
        .args(args)
        .env_remove("CONFOUND_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = confound(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn adjust_productivity() {
    let out = confound(&["adjust", "builtin:productivity.dag"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("{O, S}"));
    assert!(text.contains("# input: builtin:productivity.dag sha256:"));

    let v = json(&["adjust", "builtin:productivity.dag"]);
    assert_eq!(v["report"]["sets"], serde_json::json!([["O", "S"]]));
    assert_eq!(v["manifest"]["command"], "adjust");
    assert_eq!(v["manifest"]["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn adjust_exit_codes() {
    let out = confound(&["adjust", "builtin:confounder-triangle.dag"]);
    assert_eq!(out.status.code(), Some(2));
    let out = confound(&["adjust", "builtin:confounder-triangle.dag", "--with-latents"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("{Z}"));

    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.dag", "A -> B\nB -> \n");
    let out = confound(&["adjust", &bad, "-t", "A", "-o", "B"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let cyclic = write(dir.path(), "cyc.dag", "A -> B\nB -> A\n");
    assert_eq!(confound(&["adjust", &cyclic, "-t", "A", "-o", "B"]).status.code(), Some(1));
    assert_eq!(confound(&["adjust", "missing.dag"]).status.code(), Some(1));
    assert_eq!(confound(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(confound(&["--help"]).status.code(), Some(0));
}

#[test]
fn augment_small_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let single = write(dir.path(), "one.dag", "A -> B\n");
    let v = json(&["augment", &single, "-t", "A", "-o", "B"]);
    let entries = v["report"]["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0]["confounder"], "Z_A_B");
    assert_eq!(entries[0]["unadjustable"], true);

    let iso = write(dir.path(), "iso.dag", "A -> B\nnode C\n");
    let v = json(&["augment", &iso, "-t", "A", "-o", "B"]);
    assert_eq!(v["report"]["entries"].as_array().unwrap().len(), 1);

    let v = json(&["augment", "builtin:productivity.dag"]);
    let entries = v["report"]["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 18);
    let flagged: Vec<_> = entries.iter().filter(|e| e["unadjustable"] == true).collect();
    assert_eq!(flagged.len(), 1);
    assert_eq!((flagged[0]["from"].as_str(), flagged[0]["to"].as_str()), (Some("T"), Some("E")));
}

#[test]
fn tip_scenarios() {
    let v = json(&["tip", "--observed", "-0.052", "--effect", "0.835", "--solve", "smd"]);
    let value = v["report"]["tipping"]["value"].as_f64().unwrap();
    assert!((value + 0.062).abs() < 5e-4);
    assert_eq!(v["report"]["tipping"]["kind"], "smd_needed");

    let v = json(&["tip", "--observed", "-0.052", "--smd", "-1.545", "--solve", "effect"]);
    assert!((v["report"]["tipping"]["value"].as_f64().unwrap() - 0.034).abs() < 5e-4);

    let v = json(&["tip", "--observed", "-0.052", "--effect", "-0.15", "--smd", "0.17", "--solve", "n"]);
    assert!((v["report"]["tipping"]["value"].as_f64().unwrap() - 2.04).abs() < 0.02);
    assert_eq!(v["report"]["whole_confounders"], 3);

    let out = confound(&["tip", "--observed", "0.5", "--smd", "0.2", "--effect", "0.5", "--solve", "adjusted", "--n-confounders", "2"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("0.3"));
}

#[test]
fn tip_rejects_bad_flags() {
    for args in [
        &["tip", "--observed", "1", "--solve", "n"][..],
        &["tip", "--observed", "1", "--smd", "0.2", "--solve", "smd"][..],
        &["tip", "--observed", "1", "--effect", "0", "--solve", "smd"][..],
        &["tip", "--observed", "1", "--effect", "1", "--smd", "-1", "--solve", "n"][..],
    ] {
        let out = confound(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}

#[test]
fn tip_grid_rows_lie_on_the_curve() {
    let out = confound(&["tip-grid", "--observed", "0.1,-0.2", "--smd-range", "0.1:0.5:0.1", "--effect-range", "0.2:1:0.2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("observed,smd,effect"));
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] * v[2] - v[0]).abs() < 1e-12, "{line}");
        rows += 1;
    }
    assert!(rows > 0);
}

#[test]
fn evalue_point_and_curve() {
    let out = confound(&["evalue", "--estimate", "0.3", "--sigma", "1", "--delta", "0.3"]);
    assert!(stdout(&out).contains("1.39"));

    let v = json(&["evalue", "--estimate", "0.3", "--sigma", "1", "--delta", "0.3", "--se", "0.1"]);
    let point = v["report"]["result"]["point"].as_f64().unwrap();
    let ci = v["report"]["result"]["ci_bound"].as_f64().unwrap();
    assert!(1.0 < ci && ci < point);

    let v = json(&["evalue", "--estimate", "0.1", "--sigma", "1", "--delta", "0.5", "--se", "0.1"]);
    assert_eq!(v["report"]["result"]["ci_bound"].as_f64(), Some(1.0));

    let out = confound(&["evalue", "--estimate", "0.3", "--sigma", "1", "--delta-range", "0.01:0.5:0.01"]);
    let text = stdout(&out);
    let rows: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(rows.len(), 50);
    assert!(rows.windows(2).all(|w| w[1] > w[0]));

    assert_eq!(confound(&["evalue", "--estimate", "0.3", "--sigma", "0", "--delta", "0.3"]).status.code(), Some(1));
}

#[test]
fn generate_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p3.csv");
    let path = path.to_str().unwrap();
    let out = confound(&["generate", "p3", "-n", "20000", "--seed", "9", "--out", path]);
    assert!(out.status.success());

    let v = json(&["fit", path, "--outcome", "Y", "--predictors", "X,Z"]);
    let coef = &v["report"]["coefficients"];
    assert!((coef["X"].as_f64().unwrap() - 0.40).abs() < 0.03);
    assert!((coef["Z"].as_f64().unwrap() - 0.70).abs() < 0.03);
    assert!((v["report"]["sigma"].as_f64().unwrap() - 1.0).abs() < 0.03);

    let v = json(&["evalue", "--fit", path, "--outcome", "Y", "--treatment", "X", "--covariates", "Z", "--delta", "0.3"]);
    assert!(v["report"]["result"]["point"].as_f64().unwrap() > 1.0);

    let again = dir.path().join("again.csv");
    confound(&["generate", "p3", "-n", "20000", "--seed", "9", "--out", again.to_str().unwrap()]);
    assert_eq!(std::fs::read(path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn fit_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let line = write(dir.path(), "line.csv", "x,y\n1,3\n2,5\n3,7\n4,9\n");
    let v = json(&["fit", &line, "--outcome", "y", "--predictors", "x"]);
    assert!((v["report"]["coefficients"]["x"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((v["report"]["intercept"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v["report"]["sigma"].as_f64().unwrap().abs() < 1e-12);

    let tiny = write(dir.path(), "tiny.csv", "x,y\n1,3\n2,5\n");
    assert_eq!(confound(&["fit", &tiny, "--outcome", "y", "--predictors", "x"]).status.code(), Some(1));
    assert_eq!(confound(&["fit", &line, "--outcome", "y", "--predictors", "w"]).status.code(), Some(1));
}

#[test]
fn smd_of_identical_groups_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "g.csv", "g,v\na,1\na,2\na,4\nb,1\nb,2\nb,4\n");
    let v = json(&["smd", &csv, "--value", "v", "--group", "g", "--treat", "a", "--reference", "b"]);
    assert_eq!(v["report"]["smd"].as_f64(), Some(0.0));
    assert_eq!(
        confound(&["smd", &csv, "--value", "v", "--group", "g", "--treat", "a", "--reference", "c"]).status.code(),
        Some(1)
    );
}

const ONE_CELL: &str = "\
bernoulli.B = 0.5
bernoulli.K = 0.5
bernoulli.O = 0.5
latent = Z
gaussian.Z = 0
gaussian.S = 0.3*B + 0.1*K
gaussian.T = 0.5*O - 0.1*S + gamma_t*Z
gaussian.E = 0.3*B + 0.1*K + 0.5*O - 0.1*S + t_e*T + gamma_e*Z
param.gamma_e = 0
param.gamma_t = 0
grid.t_e = 0.3
n = 50
repetitions = 200
seed = 11
outcome = E
predictors = T, B, K, O, S
treatment = T
";

#[test]
fn simulate_one_cell() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write(dir.path(), "one.conf", ONE_CELL);
    let out_a = dir.path().join("a.csv");
    let out = confound(&["simulate", &conf, "--out", out_a.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_a).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t_e,n,mean,l50,u50,l95,u95,failures"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let mean: f64 = row[2].parse().unwrap();
    assert!((0.26..=0.34).contains(&mean), "{mean}");
    assert!(lines.next().is_none());

    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["command"], "simulate");

    let out = confound(&["simulate", &conf]);
    assert_eq!(stdout(&out), csv);

    let reseeded = confound(&["simulate", &conf, "--seed", "12"]);
    assert_ne!(stdout(&reseeded), csv);
}
