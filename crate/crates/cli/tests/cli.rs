use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reebcz"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn diagnostic(o: &Output) -> serde_json::Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    let line = text.lines().last().expect("one diagnostic line");
    serde_json::from_str(line).expect("diagnostic is JSON")
}

#[test]
fn golden_recurrence_first_event() {
    let o = run(&[
        "recurrence",
        "--system",
        &data("golden.json"),
        "--eta",
        "1/5",
        "--events",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0]["k"], serde_json::json!([13]));
    assert_eq!(lines[0]["d"], serde_json::json!([16]));
    let ks: Vec<u64> = lines[..3]
        .iter()
        .map(|l| l["k"][0].as_u64().unwrap())
        .collect();
    assert_eq!(ks, vec![13, 21, 34]);
    assert_eq!(lines[3]["summary"]["found"], 3);
    assert_eq!(lines[3]["summary"]["passed"], true);
}

#[test]
fn recurrence_csv() {
    let o = run(&[
        "--format",
        "csv",
        "recurrence",
        "--system",
        &data("golden.json"),
        "--eta",
        "1/5",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("C,d,k,verified"));
    assert_eq!(lines.next(), Some("8424723/524288,16,13,true"));
}

#[test]
fn index_table() {
    let o = run(&["indices", "--path", &data("path.json"), "--kmax", "3"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "k,mean_index,mu_minus,mu_plus,degenerate\n1,1,1,2,true\n2,2,1,4,true\n3,3,3,4,true\n"
    );
    let o = run(&[
        "indices",
        "--system",
        &data("e1_sqrt2.json"),
        "--orbit",
        "y2",
        "--kmax",
        "2",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().nth(1), Some("1,2+2*sqrt2,5,5,false"));
}

#[test]
fn ellipsoid_staircase_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let bc = dir.path().join("bars.json");
    let svg = dir.path().join("bars.svg");
    let o = run(&[
        "ellipsoid",
        "--deltas",
        "1,sqrt2",
        "--count",
        "5",
        "--barcode",
        bc.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let st: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let degrees: Vec<i64> = st["orbits"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["degree"].as_i64().unwrap())
        .collect();
    assert_eq!(degrees, vec![3, 5, 7, 9, 11]);
    let bars: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&bc).unwrap()).unwrap();
    assert_eq!(bars["bars"].as_array().unwrap().len(), 5);
    let picture = std::fs::read_to_string(&svg).unwrap();
    assert!(picture.starts_with("<svg") && picture.trim_end().ends_with("</svg>"));
    assert_eq!(picture.matches("<rect").count(), 6);

    let o = run(&[
        "--format",
        "csv",
        "ellipsoid",
        "--deltas",
        "1,sqrt2",
        "--count",
        "5",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("sqrt2,2,6"), "{text}");
}

#[test]
fn barcode_and_audit_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let bars = dir.path().join("bars.json");
    let o = run(&[
        "--out",
        bars.to_str().unwrap(),
        "barcode",
        "--complex",
        &data("complex.json"),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&bars).unwrap()).unwrap();
    // over the rationals the boundary 2g cancels g
    assert_eq!(bc["bars"].as_array().unwrap().len(), 2);
    let o = run(&[
        "barcode",
        "--complex",
        &data("complex.json"),
        "--field",
        "2",
    ]);
    let bc2: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(bc2["bars"].as_array().unwrap().len(), 3);

    let stair = dir.path().join("stair.json");
    let o = run(&[
        "ellipsoid",
        "--deltas",
        "1,sqrt2",
        "--count",
        "30",
        "--barcode",
        stair.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let o = run(&[
        "audit",
        "--barcode",
        stair.to_str().unwrap(),
        "--n",
        "2",
        "--chi",
        "1",
        "--primes",
        "2,3,5",
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let rep: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rep["passed"], true);
    let o = run(&[
        "audit",
        "--barcode",
        stair.to_str().unwrap(),
        "--n",
        "2",
        "--chi",
        "-1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!stdout(&o).is_empty());
}

#[test]
fn multiplicity_audit_from_recurrence_output() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("events.jsonl");
    let o = run(&[
        "--out",
        events.to_str().unwrap(),
        "recurrence",
        "--system",
        &data("e1_sqrt2.json"),
        "--eta",
        "3/20",
        "--epsilon",
        "3/40",
        "--sigma",
        "3/40",
        "--kmax",
        "100",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&[
        "audit-mult",
        "--system",
        &data("e1_sqrt2.json"),
        "--event",
        events.to_str().unwrap(),
        "--kmax",
        "100",
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let rep: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rep["distinct_primes"], 2);
    assert_eq!(rep["levels"][0]["interval"], serde_json::json!([23, 25]));
}

#[test]
fn comparison() {
    let o = run(&["compare", "--system", &data("e1_sqrt2.json"), "--rescale"]);
    assert!(o.status.success());
    let o = run(&["compare", "--system", &data("e1_sqrt2.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(diagnostic(&o)["error"], "hypothesis-violation");
    let o = run(&["compare", "--system", &data("resonant.json")]);
    assert_eq!(o.status.code(), Some(1));
    let d = diagnostic(&o);
    assert_eq!(d["error"], "non-resonance-failed");
    assert!(d["message"].as_str().unwrap().contains("+2 = -2 mod 1"));
}

#[test]
fn exit_codes() {
    let o = run(&[
        "recurrence",
        "--system",
        &data("empty.json"),
        "--eta",
        "1/5",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(diagnostic(&o)["status"], 3);
    let o = run(&[
        "recurrence",
        "--system",
        "/nonexistent/system.json",
        "--eta",
        "1/5",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(diagnostic(&o)["status"], 2);
    let o = run(&[
        "recurrence",
        "--system",
        &data("golden.json"),
        "--eta",
        "1/2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["--format", "svg", "indices", "--path", &data("path.json")]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "indices",
        "--path",
        r#"{"loop":0,"blocks":[{"type":"rotation","lambda":"1~1/100"}]}"#,
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(diagnostic(&o)["error"], "precision");
    assert!(run(&["--help"]).status.success());
    assert!(run(&["--version"]).status.success());
}

#[test]
fn output_is_deterministic_across_threads_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("sys.json");
    let o = run(&[
        "--seed",
        "3",
        "--out",
        sys.to_str().unwrap(),
        "gen-system",
        "--kind",
        "ellipsoid",
        "--n",
        "3",
    ]);
    assert!(o.status.success());
    let sys = sys.to_str().unwrap();
    let args = |threads: &'static str| {
        vec![
            "--threads",
            threads,
            "recurrence",
            "--system",
            sys,
            "--eta",
            "2/5",
            "--div",
            "2",
            "--events",
            "3",
        ]
    };
    let one = run(&args("1"));
    assert!(
        one.status.success(),
        "{}",
        String::from_utf8_lossy(&one.stderr)
    );
    let four = run(&args("4"));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, run(&args("4")).stdout);
    assert_eq!(stdout(&one).lines().count(), 4);

    let a = run(&[
        "--seed",
        "9",
        "gen-system",
        "--kind",
        "dc",
        "--n",
        "2",
        "--orbits",
        "3",
    ]);
    let b = run(&[
        "--seed",
        "9",
        "gen-system",
        "--kind",
        "dc",
        "--n",
        "2",
        "--orbits",
        "3",
    ]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c1 = run(&[
        "--threads",
        "1",
        "barcode",
        "--complex",
        &data("complex.json"),
    ]);
    let c4 = run(&[
        "--threads",
        "4",
        "barcode",
        "--complex",
        &data("complex.json"),
    ]);
    assert_eq!(c1.stdout, c4.stdout);
}
