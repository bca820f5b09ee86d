use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sunflower")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn bounds_prints_thm1_total() {
    let out = run(&["bounds", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let row = text.lines().find(|l| l.starts_with("thm1_bound")).unwrap();
    assert_eq!(row.split('\t').nth(3), Some("48"));
    assert!(text.contains("cbrt(27/4)"));
}

#[test]
fn bounds_csv_round_trips_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = run(&["bounds", "--n", "6", "--D", "4", "--csv", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["name", "n", "D", "exact", "float", "log2"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let thm2 = rows.iter().find(|r| &r[0] == "thm2_counts").unwrap();
    // 3 * sum_{k <= 4} C(6,k) 3^k = 3 * (1 + 18 + 135 + 540 + 1215)
    assert_eq!(&thm2[3], "5727");
}

#[test]
fn certify_mod_d_example() {
    let dir = tempfile::tempdir().unwrap();
    let fam = write(dir.path(), "f.txt", "D=3\n0\n1\n");
    let json = dir.path().join("c.json");
    let out = run(&["certify", &fam, "--json", json.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let slices: u64 = v["slice_count"].as_str().unwrap().parse().unwrap();
    assert!((2..=3).contains(&slices));
    assert_eq!(v["family_size"], 2);
    assert_eq!(v["diagonal_ok"], true);
}

#[test]
fn certify_rejects_sunflower() {
    let dir = tempfile::tempdir().unwrap();
    let fam = write(dir.path(), "f.txt", "D=3\n0\n1\n2\n");
    assert_eq!(run(&["certify", &fam]).status.code(), Some(1));
}

#[test]
fn detect_reports_witness() {
    let dir = tempfile::tempdir().unwrap();
    let fam = write(dir.path(), "f.txt", "# three sets\n00\n10\n\n01\n");
    let out = run(&["detect", &fam]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("witness: {} {1} {2}"));

    let free = write(dir.path(), "g.txt", "10\n01\n11\n");
    let out = run(&["detect", &free]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("sunflower-free: true"));
}

#[test]
fn malformed_family_exits_two_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let fam = write(dir.path(), "f.txt", "01\n011\n");
    let out = run(&["detect", &fam]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn verify_tensor_modes() {
    let out = run(&["verify-tensor", "--setting", "binary", "--n", "3", "--exhaustive"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("points_checked: 512"));
    let out = run(&["verify-tensor", "--setting", "mod-d", "--n", "2", "--D", "4", "--samples", "500", "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("points_checked: 500"));
    let out = run(&["verify-tensor", "--setting", "binary", "--n", "40"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn search_json_and_worker_independence() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let out = run(&["search", "--setting", "binary", "--n", "2", "--json", a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["--workers", "3", "search", "--setting", "binary", "--n", "2", "--json", b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let va: serde_json::Value = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    let vb: serde_json::Value = serde_json::from_str(&fs::read_to_string(&b).unwrap()).unwrap();
    assert_eq!(va["max"], 3);
    assert_eq!(va["optimal"], true);
    assert_eq!(va["max"], vb["max"]);
    assert_eq!(va["witness"], vb["witness"]);

    let out = run(&["search", "--setting", "capset", "--n", "2"]);
    assert!(stdout(&out).contains("\"max\": 4"));
    assert_eq!(run(&["search", "--setting", "capset", "--n", "2", "--D", "5"]).status.code(), Some(2));
    assert_eq!(run(&["search", "--setting", "binary", "--n", "9"]).status.code(), Some(2));
}

#[test]
fn greedy_search_is_seeded() {
    let a = run(&["search", "--setting", "binary", "--n", "5", "--greedy", "--seed", "7"]);
    let b = run(&["search", "--setting", "binary", "--n", "5", "--greedy", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn encode_reproduces_display() {
    let dir = tempfile::tempdir().unwrap();
    let fam = write(dir.path(), "f.txt", "1011\n0100\n");
    let out = run(&["encode", &fam]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("  1,3\n"));
    assert!(text.contains("  2,0\n"));
    let odd = write(dir.path(), "g.txt", "101\n");
    assert_eq!(run(&["encode", &odd]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["bounds", "--D", "2"]).status.code(), Some(2));
}
