use std::process::Command as Proc;

use logbertini::logalg::ChartAlgebra;
use logbertini_cli::{report_summary, run, Command, ExperimentConfig};
use serde_json::{json, Value};

fn bin(args: &[&str]) -> (i32, String, String) {
    let out = Proc::new(env!("CARGO_BIN_EXE_logbertini")).args(args).output().expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn doc(stdout: &str) -> Value {
    serde_json::from_str(stdout).expect("json report")
}

fn no_floats(v: &Value) -> bool {
    match v {
        Value::Number(n) => n.is_i64() || n.is_u64(),
        Value::Array(a) => a.iter().all(no_floats),
        Value::Object(o) => o.values().all(no_floats),
        _ => true,
    }
}

#[test]
fn cx_reproduce_p2_confirms() {
    let (code, out, _) = bin(&["cx-reproduce", "--inline", r#"{"p": 2}"#]);
    assert_eq!(code, 0);
    let d = doc(&out);
    assert_eq!(d["schema"], "logbertini/1");
    assert_eq!(d["status"], "pass");
    assert_eq!(d["report"]["verdict"], "nowhere log smooth: confirmed, 1 point × all hyperplanes");
    assert!(no_floats(&d));
}

#[test]
fn blowup_n2_lists_identities() {
    let (code, out, _) = bin(&["dvr-blowup-verify", "--inline", r#"{"n": 2}"#]);
    assert_eq!(code, 0);
    let d = doc(&out);
    let charts = d["report"]["charts"].as_array().unwrap();
    assert_eq!(charts.len(), 3);
    let lhs: Vec<&str> =
        charts.iter().flat_map(|c| c["identities"].as_array().unwrap()).map(|i| i["lhs"].as_str().unwrap()).collect();
    assert!(lhs.contains(&"t1*s1 - pi") && lhs.contains(&"t2*s2 - pi"));
    assert_eq!(d["report"]["identity_count"].as_u64().unwrap() as usize, lhs.len());
}

#[test]
fn empty_trial_count_is_config_error() {
    let (code, out, err) = bin(&["dvr-bertini-instance", "--inline", r#"{"family": "semistable"}"#, "--trials", "0"]);
    assert_eq!(code, 3);
    assert!(out.is_empty() && err.contains("trials"));
    let (code, _, _) = bin(&["dvr-bertini-instance", "--inline", r#"{"family": "semistable", "trials": 0}"#]);
    assert_eq!(code, 3);
}

#[test]
fn malformed_configs_exit_3() {
    assert_eq!(bin(&["dvr-gamma-basis", "--inline", "{not json"]).0, 3);
    assert_eq!(bin(&["dvr-gamma-basis", "--inline", r#"{"n": 2}"#]).0, 3);
    assert_eq!(bin(&["dvr-gamma-basis", "--inline", r#"{"n": 2, "d": 2, "extra": 1}"#]).0, 3);
    assert_eq!(bin(&["dvr-blowup-verify", "--inline", r#"{"n": 9}"#]).0, 3);
    assert_eq!(bin(&["monoid-analyze", "--config", "/nonexistent/x.json"]).0, 3);
    assert_eq!(bin(&["cx-reproduce", "--inline", r#"{"p": 4}"#]).0, 3);
}

#[test]
fn budget_exceeded_is_inconclusive_with_partial_report() {
    let a = ChartAlgebra::node(5, 1).unwrap().to_doc();
    let cfg = json!({ "algebra": a, "mode": "exhaustive", "max_extension": 1, "point_budget": 1 });
    let (code, out, _) = bin(&["bertini-run", "--inline", &cfg.to_string()]);
    assert_eq!(code, 2);
    let d = doc(&out);
    assert_eq!(d["status"], "inconclusive");
    assert_eq!(d["report"]["partial"], true);
}

#[test]
fn output_is_byte_identical_across_runs_and_workers() {
    let args = |w: &'static str| {
        vec!["dvr-bertini-instance", "--inline", r#"{"family": "diagonal"}"#, "--seed", "5", "--trials", "12", "--workers", w]
    };
    let (c1, a, _) = bin(&args("1"));
    let (c2, b, _) = bin(&args("4"));
    let (_, c, _) = bin(&args("4"));
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    assert_eq!(b, c);

    let node = ChartAlgebra::node(3, 1).unwrap().to_doc();
    let cfg = json!({ "algebra": node, "mode": "sample", "trials": 20, "max_extension": 2 }).to_string();
    let (_, a, _) = bin(&["bertini-run", "--inline", &cfg, "--seed", "9", "--workers", "1"]);
    let (_, b, _) = bin(&["bertini-run", "--inline", &cfg, "--seed", "9", "--workers", "3"]);
    assert_eq!(a, b);
    assert!(no_floats(&doc(&a)));
}

#[test]
fn out_flag_writes_report() {
    let dir = std::env::temp_dir().join(format!("logbertini-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("gamma.json");
    let (code, out, _) =
        bin(&["dvr-gamma-basis", "--inline", r#"{"n": 2, "d": 2}"#, "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let d: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(d["report"]["verification"]["cardinality"], 6);
    let (code, table, _) = bin(&["summary", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(table.contains("flagged rows: 0"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn chart_construct_and_kato_on_counterexample() {
    let generic = json!({
        "pbar": { "ambient_rank": 1, "generators": [[1]] },
        "exponents": [3],
        "unit": { "field": { "p": 3, "m": 1, "transcendental": true }, "value": { "num": [0, 1] } },
        "expect": "failure",
    });
    let (code, out, _) = bin(&["chart-construct", "--inline", &generic.to_string()]);
    assert_eq!(code, 0);
    let d = doc(&out);
    assert_eq!(d["report"]["status"], "failure");
    assert_eq!(d["report"]["reason"], "not_pth_power");

    let mut expect_success = generic.clone();
    expect_success["expect"] = json!("success");
    assert_eq!(bin(&["chart-construct", "--inline", &expect_success.to_string()]).0, 1);

    let finite = json!({
        "pbar": { "ambient_rank": 1, "generators": [[1]] },
        "exponents": [2],
        "unit": { "field": { "p": 5, "m": 1 }, "value": 4 },
    });
    let (code, out, _) = bin(&["chart-construct", "--inline", &finite.to_string()]);
    assert_eq!(code, 0);
    assert_eq!(doc(&out)["report"]["root"], "2");

    let cx = ChartAlgebra::cx(3, 1).unwrap().to_doc();
    let k = json!({ "chart": cx.chart, "residue_char": 3, "expect_smooth": true, "expect_etale": false });
    let (code, out, _) = bin(&["kato-check", "--inline", &k.to_string()]);
    assert_eq!(code, 0);
    let d = doc(&out);
    assert_eq!(d["report"]["kato"]["cokernel"]["free_rank"], 1);
    let tame = d["report"]["tameness"].as_array().unwrap();
    let unit_face = tame.iter().find(|f| f["face"] == json!([1, 2])).unwrap();
    assert_eq!(unit_face["torsion_primes"], json!(["3"]));
    assert_eq!(unit_face["tame"], false);
}

#[test]
fn monoid_analyze_reports_hilbert_basis() {
    let (code, out, _) =
        bin(&["monoid-analyze", "--inline", r#"{"monoid": {"ambient_rank": 1, "generators": [[2],[3]]}}"#]);
    assert_eq!(code, 0);
    let d = doc(&out);
    assert_eq!(d["report"]["is_saturated"], false);
    assert_eq!(d["report"]["is_sharp"], true);
    assert_eq!(d["report"]["hilbert_basis"], json!([[1]]));
    assert_eq!(d["report"]["faces"].as_array().unwrap().len(), 2);
}

#[test]
fn node_summary_counts_match_json() {
    let node = ChartAlgebra::node(5, 1).unwrap().to_doc();
    let cfg = ExperimentConfig {
        max_extension: Some(2),
        ..ExperimentConfig::new(Command::BertiniRun, json!({ "algebra": node, "mode": "exhaustive" }))
    };
    let o = run(&cfg);
    assert_eq!(o.exit_code, 0);
    let d = o.document.unwrap();
    let s = &d["report"]["summary"];
    assert_eq!(s["hyperplanes_checked"], 125);
    let table = report_summary(&d).unwrap();
    for (label, key) in [
        ("hyperplanes checked", "hyperplanes_checked"),
        ("log smooth everywhere", "log_smooth_everywhere"),
        ("fails somewhere", "fails_somewhere"),
    ] {
        let line = table.lines().find(|l| l.get(2..).is_some_and(|t| t.starts_with(label))).unwrap();
        assert_eq!(line.split_whitespace().last().unwrap(), s[key].to_string());
    }
}

#[test]
fn summary_flags_inconclusive_rows() {
    let d = json!({
        "schema": "logbertini/1",
        "version": "logbertini 0.1.0",
        "command": "dvr-bertini-instance",
        "seed": 1,
        "status": "inconclusive",
        "report": {},
        "summary": [
            { "item": "inconclusive", "value": "1/2", "flag": true },
            { "item": "run 1", "value": "inconclusive: x0^2", "flag": true },
            { "item": "failures", "value": "0", "flag": false },
        ],
    });
    let t = report_summary(&d).unwrap();
    assert!(t.lines().any(|l| l.starts_with("! run 1")));
    assert!(t.contains("flagged rows: 2"));
    assert!(report_summary(&json!({ "schema": "other" })).is_err());
    let mut broken = d.clone();
    broken["summary"] = json!("nope");
    assert!(report_summary(&broken).is_err());
}

#[test]
fn every_command_has_a_name() {
    for c in Command::ALL {
        assert_eq!(Command::from_name(c.name()), Some(c));
    }
    let (code, out, _) = bin(&["satz2-verify"]);
    assert_eq!(code, 0);
    assert_eq!(doc(&out)["report"]["extensions"].as_array().unwrap().len(), 3);
}

#[test]
fn sample_configs_pass() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/");
    for (cmd, file) in [
        ("bertini-run", "node-f5.json"),
        ("chart-construct", "chart-generic-point.json"),
        ("dvr-bertini-instance", "semistable.json"),
        ("monoid-analyze", "monoid.json"),
    ] {
        let path = format!("{dir}{file}");
        let (code, _, err) = bin(&[cmd, "--config", &path]);
        assert_eq!(code, 0, "{cmd} {file}: {err}");
    }
}
