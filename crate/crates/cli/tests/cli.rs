use std::io::{BufRead, BufReader};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn privrec() -> Command {
    Command::new(env!("CARGO_BIN_EXE_privrec"))
}

fn run(args: &[&str]) -> Output {
    privrec().args(args).output().expect("spawn privrec")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn gen(dir: &Path, name: &str, rules: usize, seed: u64) -> String {
    let p = dir.join(name);
    let path = p.to_str().unwrap().to_string();
    ok(&["gen", "--rules", &rules.to_string(), "--universe", "300", "--seed", &seed.to_string(), "--out", &path]);
    path
}

fn json(s: &str) -> serde_json::Value {
    serde_json::from_str(s.trim()).unwrap_or_else(|e| panic!("{e}: {s}"))
}

#[test]
fn gen_is_deterministic_and_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a.txt", 200, 7);
    let b = gen(dir.path(), "b.txt", 200, 7);
    let c = gen(dir.path(), "c.txt", 200, 8);
    let read = |p: &str| std::fs::read_to_string(p).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert!(read(&a).lines().all(|l| l.contains(" ==> ") && l.contains("#CONF:")));
    let report = ok(&["load-check", &a]);
    assert!(report.starts_with("rules=200 "), "{report}");
}

#[test]
fn gen_writes_transactions() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("r.txt");
    let ts = dir.path().join("t.txt");
    ok(&[
        "gen", "--rules", "50", "--universe", "100", "--out", rules.to_str().unwrap(),
        "--transactions", "20", "--transaction-len", "4", "--transactions-out", ts.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(ts).unwrap();
    assert_eq!(text.lines().count(), 20);
    assert!(text.lines().all(|l| l.split(' ').count() == 4));
}

#[test]
fn malformed_rule_line_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.txt");
    std::fs::write(&p, "1 2 ==> 3 #SUP: 4 #CONF: 0.5\n1 2 3 #SUP: 1\n").unwrap();
    let out = run(&["load-check", p.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn plain_queries() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.txt");
    std::fs::write(&path, "1 ==> 3 4 #SUP: 5 #CONF: 0.5\n2 ==> 4 5 #SUP: 3 #CONF: 0.3\n1 2 ==> 6 #SUP: 4 #CONF: 0.4\n").unwrap();
    let p = path.to_str().unwrap();
    let v = json(&ok(&["query", "--rules", p, "--items", "1,2", "--mode", "exact-plain", "--criterion", "all", "--k", "10"]));
    assert_eq!(v["default"], false);
    assert_eq!(v["rules"].as_array().unwrap().len(), 3);
    let v = json(&ok(&["query", "--rules", p, "--items", "9", "--mode", "exact-plain"]));
    assert_eq!(v["default"], true);
    let v = json(&ok(&["query", "--rules", p, "--items", "1,2", "--mode", "approx-plain", "--criterion", "top1"]));
    assert!(v["items"].is_array());
    let out = run(&["query", "--rules", p, "--items", "1", "--mode", "exact-private", "--criterion", "top1"]);
    assert!(!out.status.success());
}

#[test]
fn private_query_agrees_with_plain() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.txt");
    std::fs::write(&path, "1 ==> 3 4 #SUP: 5 #CONF: 0.5\n2 ==> 4 5 #SUP: 3 #CONF: 0.3\n1 2 ==> 6 #SUP: 4 #CONF: 0.4\n").unwrap();
    let p = path.to_str().unwrap();
    let common = ["query", "--rules", p, "--items", "1,2,7", "--criterion", "all", "--k", "4", "--t", "2"];
    let plain = json(&ok(&[&common[..], &["--mode", "exact-plain"]].concat()));
    let private = json(&ok(&[&common[..], &["--mode", "exact-private", "--rsa-bits", "512", "--ot-dims", "2"]].concat()));
    assert_eq!(plain["items"], private["items"]);
    // Item 7 lies outside the universe, so only subsets of {1, 2} are fetched.
    assert_eq!(private["fetches"], 3);
}

#[test]
fn bench_csv_header_and_rows() {
    let csv = ok(&["bench", "--mode", "exact-plain,approx-plain", "--d", "200", "--universe", "300", "--reps", "2"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("mode,D,T,t,k,N,median_ms,mean_ms,stage_breakdown_json"));
    assert_eq!(lines.count(), 2);
    let acc = ok(&["bench", "--accuracy", "--d", "200", "--universe", "300", "--queries", "20", "--sig-bits", "10,16"]);
    assert!(acc.starts_with("sig_bits,D,queries,query_len,accuracy,no_candidate\n10,200,20,3,"), "{acc}");
}

#[test]
fn serve_reads_port_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let rules = gen(dir.path(), "r.txt", 60, 3);
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = privrec()
        .args(["serve", "--rules", &rules, "--rsa-bits", "512"])
        .env("PRIVREC_PORT", port.to_string())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stderr = BufReader::new(child.stderr.take().unwrap());
    let mut line = String::new();
    while !line.contains("listening") {
        line.clear();
        assert!(stderr.read_line(&mut line).unwrap() > 0, "server exited early");
    }
    assert!(line.trim_end().ends_with(&format!(":{port}")), "{line}");
    let addr = format!("127.0.0.1:{port}");
    let remote = run(&["query", "--server", &addr, "--items", "1,2,3", "--mode", "exact-private", "--rsa-bits", "512", "--ot-dims", "2"]);
    let local = ok(&["query", "--rules", &rules, "--items", "1,2,3", "--mode", "exact-plain"]);
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(remote.status.success(), "{}", String::from_utf8_lossy(&remote.stderr));
    assert_eq!(json(&String::from_utf8(remote.stdout).unwrap())["items"], json(&local)["items"]);
}
