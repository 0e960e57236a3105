use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn revshare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revshare")).args(args).env_remove("REVSHARE_ALPHA").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_instance(dir: &Path, name: &str, weights: &str, alpha: f64) -> String {
    let n = weights.matches('[').count() - 1;
    let m = weights.split(']').next().unwrap().matches(',').count() + 1;
    let users: Vec<String> = (0..n).map(|i| format!("\"u{i}\"")).collect();
    let artists: Vec<String> = (0..m).map(|j| format!("\"a{j}\"")).collect();
    let doc = format!(
        r#"{{"version":1,"alpha":{alpha},"user_ids":[{}],"artist_ids":[{}],"weights":{weights}}}"#,
        users.join(","),
        artists.join(",")
    );
    let path = dir.join(name);
    fs::write(&path, doc).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn globalprop_fraud_fixture_exits_with_witness() {
    let o = revshare(&["check", "--axiom", "fraud", "--rule", "globalprop", "--fixtures"]);
    assert_eq!(o.status.code(), Some(2));
    let s = stdout(&o);
    assert!(s.contains("axiom=fraud") && s.contains("gain=3"), "{s}");
}

#[test]
fn userprop_random_fraud_passes() {
    let o = revshare(&["check", "--axiom", "fraud", "--rule", "userprop", "--random-trials", "200", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("result=pass"));
}

#[test]
fn usereq_divides_equally_between_streamed_artists() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_instance(dir.path(), "i.json", "[[80,19,1]]", 1.0);
    let o = revshare(&["divide", "--rule", "user-eq", "--instance", &p]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let pays: Vec<f64> = s.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(s.lines().next(), Some("artist_id,payment"));
    assert_eq!(pays.len(), 3);
    for p in pays {
        assert!((p - 1.0 / 3.0).abs() < 1e-9);
    }
}

#[test]
fn alpha_env_overrides_document() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_instance(dir.path(), "i.json", "[[1,1],[2,0]]", 1.0);
    let o = Command::new(env!("CARGO_BIN_EXE_revshare"))
        .args(["divide", "--rule", "globalprop", "--instance", &p])
        .env("REVSHARE_ALPHA", "0.5")
        .output()
        .unwrap();
    let total: f64 = stdout(&o).lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(revshare(&["divide", "--rule", "nope", "--instance", "x.json"]).status.code(), Some(1));
    assert_eq!(revshare(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(revshare(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"version":1,"alpha":1.0,"weights":[[1,-1]]}"#).unwrap();
    let o = revshare(&["divide", "--rule", "userprop", "--instance", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn degenerate_envy_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    // min-aggregation pays nothing when the two users share no artist
    let p = write_instance(dir.path(), "i.json", "[[1,0],[0,1]]", 1.0);
    let o = revshare(&["pps", "--rule", "min", "--instance", &p, "--k", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn psp_reports_best_set() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_instance(dir.path(), "i.json", "[[1,0],[0,1],[0,1],[0,1]]", 1.0);
    let o = revshare(&["psp", "--instance", &p, "--k", "1", "--mode", "exact"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("artists={0}") && s.contains("mode=exact"), "{s}");
}

#[test]
fn gen_sweep_and_ingest_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let o = revshare(&["gen", "--users", "40", "--artists", "12", "--seed", "2", "--out", &d("g.json")]);
    assert_eq!(o.status.code(), Some(0));
    let doc = fs::read_to_string(d("g.json")).unwrap();
    assert!(doc.contains("\"metadata\""));

    fs::write(d("cfg.txt"), "users = 60\nartists = 15\n# comment\nseeds = 3\n").unwrap();
    let o = revshare(&[
        "sweep", "--config", &d("cfg.txt"), "--alphas", "0.5,1", "--k", "3", "--rules", "userprop,scaleduserprop", "--out",
        &d("rows.csv"), "--summary", &d("sum.csv"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(d("rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 3 * 2 * 2);
    assert_eq!(fs::read_to_string(d("sum.csv")).unwrap().lines().count(), 1 + 2 * 2);
    assert!(fs::read_to_string(d("rows.csv.meta.json")).unwrap().contains("mean of per-artist ratios"));

    fs::write(d("t.tsv"), "user\tartist\tcount\nx\tb\t2\ny\ta\t1\nx\ta\t1\n").unwrap();
    let o = revshare(&["ingest", "--triples", &d("t.tsv"), "--alpha", "0.8", "--out", &d("ing.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = revshare(&["divide", "--rule", "globalprop", "--instance", &d("ing.json")]);
    assert_eq!(stdout(&o), "artist_id,payment\nb,0.8\na,0.8\n");
}

#[test]
fn reduce_ssbve_writes_instance() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.json");
    fs::write(&g, r#"{"left_count":1,"right_count":1,"edges":[[0,0]]}"#).unwrap();
    let out = dir.path().join("r.json");
    let o = revshare(&[
        "reduce-ssbve", "--graph", g.to_str().unwrap(), "--ell", "1", "--delta", "0", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("k=1"));
    assert!(fs::read_to_string(out).unwrap().contains("\"threshold\""));
}
