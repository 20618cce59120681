use std::path::PathBuf;
use std::process::{Command, Output};

fn framework(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../frameworks").join(name)
}

fn snapframe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snapframe")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

#[test]
fn catalog_json_lists_both_triangle_realizations() {
    let input = framework("triangle.json");
    let out = snapframe(&["catalog", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let stable = doc["stable"].as_array().unwrap();
    assert_eq!(stable.len(), 2);
    for s in stable {
        assert_eq!(s["classification"], "stable-undeformed");
        assert!((s["coordinates"][2][0].as_f64().unwrap() - 6.65).abs() < 1e-6);
    }
    assert_eq!(doc["unstable"].as_array().unwrap().len(), 3);
}

#[test]
fn snappability_writes_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let dest = dir.path().join("report.json");
    let input = framework("pinned_triangle.json");
    let out = snapframe(&[
        "snappability",
        "--input",
        input.to_str().unwrap(),
        "--output",
        dest.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&dest).unwrap()).unwrap();
    let fi = doc["snappability"]["framework_index"].as_f64().unwrap();
    assert!((fi - 1.0 / 462.0).abs() < 1e-9, "{fi}");
}

#[test]
fn text_format_is_human_readable() {
    let input = framework("pinned_triangle.json");
    let out = snapframe(&["snappability", "--input", input.to_str().unwrap(), "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("stable realizations: 2"));
    assert!(text.contains("framework index: 0.002164502165"));
}

#[test]
fn snap_path_csv_has_one_row_per_step() {
    let input = framework("triangle.json");
    let out = snapframe(&["snap-path", "--input", input.to_str().unwrap(), "--steps", "40"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,U,density,K1_x,K1_y,K2_x,K2_y,K3_x,K3_y"));
    assert_eq!(lines.count(), 41);
}

#[test]
fn snap_path_to_named_saddle() {
    let input = framework("pinned_triangle.json");
    let out = snapframe(&["snap-path", "--input", input.to_str().unwrap(), "--from", "S2", "--to", "U2"]);
    assert_eq!(out.status.code(), Some(0));
    let last = stdout(&out).lines().last().unwrap().to_string();
    assert!(last.starts_with("1,"), "{last}");
}

#[test]
fn render_named_realizations() {
    let input = framework("manipulator.json");
    let out = snapframe(&["render", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let svg = stdout(&out);
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches(r#"<g class="realization""#).count(), 4);
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dimension": 2, "knots": [], "edges": [], "extra": 1}"#).unwrap();
    let out = snapframe(&["catalog", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let missing = dir.path().join("missing.json");
    let out = snapframe(&["catalog", "--input", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_realization_name_is_an_input_error() {
    let input = framework("pinned_triangle.json");
    let out = snapframe(&["snap-path", "--input", input.to_str().unwrap(), "--from", "S9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn no_undeformed_realization_exits_with_four() {
    // bars 1, 1, 5 cannot close into a triangle
    let dir = tempfile::tempdir().unwrap();
    let fw = dir.path().join("flat.json");
    std::fs::write(
        &fw,
        r#"{"dimension": 2,
            "knots": [{"id": "a", "pin": [0, 0]}, {"id": "b", "pin": [5, 0]}, {"id": "c"}],
            "edges": [{"from": "a", "to": "b", "length": 5},
                      {"from": "a", "to": "c", "length": 1},
                      {"from": "b", "to": "c", "length": 1}]}"#,
    )
    .unwrap();
    let out = snapframe(&["snappability", "--input", fw.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}
