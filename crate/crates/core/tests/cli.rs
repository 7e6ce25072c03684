use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chiralwg")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Header row and data rows, with comment lines dropped.
fn rows(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    (header, lines.map(|l| l.split(',').map(str::to_owned).collect()).collect())
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn braided_layout_is_reported_decoherence_free() {
    let fx = fixture("braided_dfi.json");
    let o = run(&["dfi", "--config", fx.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (h, r) = rows(&stdout(&o));
    let flag = r.iter().find(|row| row[column(&h, "quantity")] == "is_dfi").unwrap();
    assert_eq!(flag[column(&h, "re")].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn verify_tables_passes_with_a_config_row() {
    let fx = fixture("nested.json");
    let o = run(&["verify-tables", "--config", fx.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (h, r) = rows(&stdout(&o));
    let pass = column(&h, "pass");
    assert!(r.len() > 30);
    assert!(r.iter().all(|row| row[pass] == "1"));
    assert!(r.iter().any(|row| row[column(&h, "row")] == "config (nested)"));
}

#[test]
fn header_carries_command_and_hash() {
    let fx = fixture("small.json");
    let o = run(&["coeffs", "--config", fx.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert!(lines.next().unwrap().starts_with("# chiralwg "));
    let hash = lines.next().unwrap().strip_prefix("# config_sha256 ").unwrap().to_owned();
    assert_eq!(hash.len(), 64);

    // Overrides change the canonical document and so the hash.
    let o = run(&["coeffs", "--config", fx.to_str().unwrap(), "--param", "phases[0]=pi/2"]);
    assert!(!stdout(&o).contains(&hash));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture("driven_small.json");
    let mut outputs = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("run{i}.csv"));
        let o = run(&["evolve", "--config", fx.to_str().unwrap(), "--out", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn sweep_output_ignores_thread_count() {
    let fx = fixture("small.json");
    let args = ["sweep", "--config", fx.to_str().unwrap(), "--sweep", "phases[0]=0:pi:9"];
    let one = Command::new(env!("CARGO_BIN_EXE_chiralwg")).args(args).env("CHIRALWG_THREADS", "1").output().unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_chiralwg")).args(args).env("CHIRALWG_THREADS", "4").output().unwrap();
    assert_eq!(one.status.code(), Some(0), "{}", stderr(&one));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(rows(&stdout(&one)).1.len(), 9);
}

#[test]
fn reals_round_trip_through_csv() {
    let fx = fixture("braided.json");
    let o = run(&["coeffs", "--config", fx.to_str().unwrap()]);
    let (h, r) = rows(&stdout(&o));
    let (re, im) = (column(&h, "re"), column(&h, "im"));
    for row in &r {
        for s in [&row[re], &row[im]] {
            let x: f64 = s.parse().unwrap();
            assert_eq!(&format!("{x:.16e}"), s);
        }
    }
}

#[test]
fn non_positive_final_time_is_an_input_error() {
    let fx = fixture("small.json");
    let o = run(&["evolve", "--config", fx.to_str().unwrap(), "--param", "solver.t_final=0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("t_final"));
}

#[test]
fn schema_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("small.json")).unwrap();
    let cases = [
        ("phases", text.replacen("\"phases\": [\n    0.0\n  ]", "\"phases\": []", 1)),
        ("gamma_right", text.replacen("\"gamma_right\": 0.5", "\"gamma_right\": -0.5", 1)),
        ("unknown", text.replacen("\"phases\"", "\"unknown\": 1, \"phases\"", 1)),
    ];
    for (key, body) in cases {
        assert_ne!(body, text, "case {key} did not edit the fixture");
        let path = dir.path().join("bad.json");
        std::fs::write(&path, body).unwrap();
        let o = run(&["coeffs", "--config", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{key}");
        assert!(stderr(&o).contains(key), "{key}: {}", stderr(&o));
    }
}

#[test]
fn malformed_json_reports_its_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\n  \"atoms\": [\n").unwrap();
    let o = run(&["coeffs", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn missing_config_and_misused_flags_fail() {
    assert_eq!(run(&["coeffs"]).status.code(), Some(2));
    assert_eq!(run(&["coeffs", "--config", "/nonexistent/config.json"]).status.code(), Some(2));
    let fx = fixture("small.json");
    let o = run(&["coeffs", "--config", fx.to_str().unwrap(), "--sweep", "phases[0]=0:1:3"]);
    assert_eq!(o.status.code(), Some(2));
}
