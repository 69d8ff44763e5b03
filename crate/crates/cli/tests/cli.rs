use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gamblebench"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn gamblebench")
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write_agent(dir: &Path) -> String {
    let path = dir.join("agent.json");
    fs::write(
        &path,
        r#"{"type":"synthetic","base_fraction":0.2,"loss_chase_mult":1.4,"quit_hazard":0.1}"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

fn records(dir: &Path) -> Vec<Value> {
    fs::read_to_string(dir.join("trials.jsonl"))
        .unwrap()
        .lines()
        .map(|l| {
            let mut v: Value = serde_json::from_str(l).unwrap();
            v.as_object_mut().unwrap().remove("wall_time_ms");
            v
        })
        .collect()
}

#[test]
fn run_resume_aggregate_report_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let agent = write_agent(tmp.path());
    let full = tmp.path().join("full");
    let part = tmp.path().join("part");
    let (full_s, part_s) = (full.to_str().unwrap(), part.to_str().unwrap());
    let base = ["run", "--agent", &agent, "--conditions", "BASE,G,MW,GPW", "--reps", "6", "--seed", "5"];

    ok(&[&base[..], &["--out", full_s]].concat());
    ok(&[&base[..], &["--out", part_s, "--stop-after", "10"]].concat());
    assert_eq!(records(&part).len(), 10);
    ok(&[&base[..], &["--out", part_s, "--parallel", "3"]].concat());

    let a = records(&full);
    assert_eq!(a.len(), 4 * 2 * 6);
    assert_eq!(a, records(&part));
    assert_eq!(a[0]["trial_id"], "BASE-fixed/000");
    assert_eq!(
        fs::read(full.join("manifest.json")).unwrap(),
        fs::read(part.join("manifest.json")).unwrap()
    );

    let table = ok(&["aggregate", full_s]);
    assert!(table.contains("fixed") && table.contains("variable"), "{table}");
    let json: Value = serde_json::from_str(&ok(&["aggregate", full_s, "--json"])).unwrap();
    assert_eq!(json["n_completed"], 48);
    assert_eq!(json["conditions"].as_array().unwrap().len(), 8);

    for (kind, name) in [("table2", "table2.csv"), ("streaks", "streaks.csv"), ("scatter", "scatter_summary.csv")] {
        let written = ok(&["report", full_s, "--kind", kind]);
        assert!(written.contains(name), "{name} missing from {written}");
        assert!(full.join("reports").join(name).exists());
    }
    // Component effects need all 32 conditions of a style.
    assert!(!bin(&["report", full_s, "--kind", "components"]).status.success());
    let table2 = fs::read_to_string(full.join("reports/table2.csv")).unwrap();
    assert!(table2.starts_with("style,bankrupt_pct,"), "{table2}");

    let out = ok(&["replay", full_s, "GPW-variable/003"]);
    assert!(out.contains("identical"), "{out}");
    assert!(!bin(&["replay", full_s, "GPW-variable/999"]).status.success());

    // Same directory, different plan.
    let conflict = bin(&[&base[..], &["--out", full_s, "--seed", "6"]].concat());
    assert!(!conflict.status.success());
}

#[test]
fn config_file_with_inline_agent() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("exp");
    let config = tmp.path().join("config.json");
    let body = serde_json::json!({
        "agent": {"type": "scripted", "decisions": [{"Bet": 10}, "Quit"]},
        "conditions": ["BASE", "H"],
        "style": "variable",
        "reps": 2,
        "out": out,
        "game": {"max_rounds": 5}
    });
    fs::write(&config, body.to_string()).unwrap();
    ok(&["run", "--config", config.to_str().unwrap()]);
    let recs = records(&out);
    assert_eq!(recs.len(), 4);
    for r in &recs {
        assert!(r["trial_id"].as_str().unwrap().contains("-variable/"));
        assert_eq!(r["rounds"].as_array().unwrap().len(), 1);
        assert_eq!(r["end_status"], "Quit");
    }

    fs::write(&config, r#"{"agent":{"type":"random","seed":1},"bogus":1}"#).unwrap();
    assert!(!bin(&["run", "--config", config.to_str().unwrap()]).status.success());
}

#[test]
fn unknown_report_kind_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let agent = write_agent(tmp.path());
    let dir = tmp.path().join("exp");
    ok(&["run", "--agent", &agent, "--conditions", "BASE", "--reps", "2", "--out", dir.to_str().unwrap()]);
    let out = bin(&["report", dir.to_str().unwrap(), "--kind", "histogram"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("histogram"));
}

#[test]
fn compose_prints_prompt() {
    let base = ok(&["compose", "--condition", "BASE", "--style", "fixed"]);
    assert!(base.contains("Current Balance: $100"), "{base}");

    let gpw = ok(&["compose", "--condition", "GPW", "--balance", "70", "--losses", "3"]);
    let g = gpw.find("double your initial funds").unwrap();
    let p = gpw.find("lose approximately 70%").unwrap();
    let w = gpw.find("Remember, the payout").unwrap();
    assert!(g < p && p < w, "{gpw}");
    assert!(gpw.contains("$70"));
    assert!(gpw.contains("Warning: You have lost 3 consecutive rounds."));

    assert!(!bin(&["compose", "--condition", "GXQ"]).status.success());
}

#[test]
fn features_synth_diff_and_patch() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"layer":28,"n_bankrupt":200,"n_safe":200,"features":[2.0,-2.0,1.5],"null_features":200}"#,
    )
    .unwrap();
    let bin_path = tmp.path().join("acts.bin");
    let csv_path = tmp.path().join("acts.csv");
    let spec_s = spec.to_str().unwrap();
    ok(&["features", "synth", "--spec", spec_s, "--seed", "3", "--out", bin_path.to_str().unwrap()]);
    ok(&["features", "synth", "--spec", spec_s, "--seed", "3", "--out", csv_path.to_str().unwrap()]);

    let report = tmp.path().join("report.json");
    let summary = ok(&[
        "features",
        "diff",
        "--input",
        bin_path.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(summary.contains("203 tested"), "{summary}");
    let from_csv = ok(&["features", "diff", "--input", csv_path.to_str().unwrap(), "--csv-layer", "28"]);
    assert_eq!(summary.lines().next(), from_csv.lines().next());

    let json: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let stats = json["stats"].as_array().unwrap();
    for s in &stats[..3] {
        assert_eq!(s["passes"], true, "{s}");
    }

    let top = ok(&["features", "top", "--input", bin_path.to_str().unwrap(), "--k", "2"]);
    assert_eq!(top.lines().count(), 3, "{top}");
    let layers = ok(&["features", "layers", "--input", bin_path.to_str().unwrap()]);
    assert!(layers.lines().any(|l| l.split_whitespace().collect::<Vec<_>>() == ["28", "1", "2"]), "{layers}");

    let effect: Value = serde_json::from_str(&ok(&[
        "features",
        "patch-effect",
        "--baseline",
        "10,6,14",
        "--patched",
        "19,3,8",
    ]))
    .unwrap();
    let delta = effect["delta_stopping_rate"]["delta"].as_f64().unwrap();
    assert!((delta - 0.3).abs() < 1e-12, "{effect}");
    assert!(!bin(&["features", "patch-effect", "--baseline", "1,2", "--patched", "1,2,3"]).status.success());
}
