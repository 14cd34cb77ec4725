use std::fs;
use std::process::{Command, Output};

use elltrace::arith::class_data;
use elltrace_cli::cache::{decode, encode, CACHE_FILE};
use elltrace_cli::ClassCache;

fn elltrace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elltrace")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn kl_examples_and_exit_codes() {
    let o = elltrace(&["kl", "--l", "3", "--f", "1", "--xi", "0", "--n", "1", "--oracle", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["value"].as_f64().unwrap().round(), -4.0);
    assert_eq!(v["passed"], true);
    let o = elltrace(&["kl", "--l", "1", "--f", "1", "--xi", "0", "--n", "7", "--json"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["value"].as_f64().unwrap(), 4.0);
    assert_eq!(elltrace(&["kl", "--l", "x"]).status.code(), Some(2));
    assert_eq!(elltrace(&["kl", "--bogus"]).status.code(), Some(2));
    assert_eq!(elltrace(&["verify", "nothing"]).status.code(), Some(2));
    // out-of-domain values are usage errors too
    assert_eq!(elltrace(&["kl", "--l", "0", "--f", "1", "--xi", "0", "--n", "1"]).status.code(), Some(2));
    assert_eq!(elltrace(&["main"]).status.code(), Some(2));
    assert_eq!(elltrace(&["xi0", "--p", "4"]).status.code(), Some(2));
}

#[test]
fn numeric_failure_exit_code() {
    // Re z = 1 is on the pole line of the Euler factors
    let o = elltrace(&["euler", "--p", "3", "--n", "1", "--z", "0"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn single_value_commands() {
    for args in [
        vec!["dseries", "--n", "-3", "--z", "3"],
        vec!["euler", "--p", "2", "--n", "5", "--z", "2+1i"],
        vec!["lvalue", "--delta", "-23"],
        vec!["lvalue", "--delta", "45", "--z", "2", "--method", "truncated-series"],
        vec!["afe", "--delta", "-16", "--z", "0.7+1i"],
        vec!["lambda", "--delta", "12", "--z", "0.3-1i"],
        vec!["kernels", "--x", "2", "--y", "9", "--z", "0.5+3i"],
    ] {
        let o = elltrace(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).starts_with("PASS"));
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "[instance]\np = 2\n[budget]\nalpha = 0.6\n").unwrap();
    let c = cfg.to_str().unwrap();
    let o = elltrace(&["xi0", "--config", c, "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["budget"]["alpha"], 0.6);
    assert!(v["quantity"].as_str().unwrap().contains("p=2"));
    let o = elltrace(&["xi0", "--config", c, "--alpha", "0.4", "--json"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["budget"]["alpha"], 0.4);
    fs::write(&cfg, "[budget]\nwhat = 1\n").unwrap();
    assert_eq!(elltrace(&["xi0", "--config", c]).status.code(), Some(2));
}

#[test]
fn poisson_csv_export() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("lattice.csv");
    let o = elltrace(&["poisson", "--p", "2", "--csv", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sign,f,l,xi,term,pair_error,eta"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 7));
    assert!(rows.iter().any(|r| r[0] == "plus" && r[1] == "1" && r[2] == "1" && r[3] == "0"));
    assert!(rows.iter().any(|r| r[0] == "minus" && r[3].is_empty()));
}

#[test]
fn cache_put_get_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cache = ClassCache::open(dir.path()).unwrap();
    let w = class_data(-4).unwrap();
    cache.put(w).unwrap();
    assert_eq!(cache.get(-4), Some(w));
    let r = class_data(229).unwrap();
    cache.put(r).unwrap();
    drop(cache);
    let again = ClassCache::open(dir.path()).unwrap();
    assert_eq!(again.get(-4), Some(w));
    let back = again.get(229).unwrap();
    assert_eq!(back.regulator.unwrap().to_bits(), r.regulator.unwrap().to_bits());
    let text = fs::read_to_string(dir.path().join(CACHE_FILE)).unwrap();
    assert!(text.lines().any(|l| l == encode(&w)));
}

#[test]
fn cold_cache_miss_computes_and_stores() {
    let dir = tempfile::tempdir().unwrap();
    let cache = ClassCache::open(dir.path()).unwrap();
    assert!(cache.is_empty());
    let v = cache.get_or_compute(-23).unwrap();
    assert_eq!(v.class_number, 3);
    assert_eq!((cache.stats().misses, cache.stats().hits), (1, 0));
    cache.get_or_compute(-23).unwrap();
    assert_eq!(cache.stats().hits, 1);
    let reopened = ClassCache::open(dir.path()).unwrap();
    assert_eq!(reopened.get(-23), Some(v));
}

#[test]
fn tampered_record_is_recomputed_and_overwritten() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(CACHE_FILE);
    {
        let cache = ClassCache::open(dir.path()).unwrap();
        cache.get_or_compute(-23).unwrap();
        cache.get_or_compute(5).unwrap();
    }
    // claim h(-23) = 4 and flip a checksum digit
    let text = fs::read_to_string(&path).unwrap();
    let bad = text.replace("-23 3 ", "-23 4 ");
    assert_ne!(bad, text);
    fs::write(&path, &bad).unwrap();
    let cache = ClassCache::open(dir.path()).unwrap();
    assert_eq!(cache.stats().corrupt, 1);
    assert_eq!(cache.get(-23), None);
    assert_eq!(cache.get_or_compute(-23).unwrap().class_number, 3);
    assert_eq!(cache.stats().misses, 1);
    let text = fs::read_to_string(&path).unwrap();
    let records: Vec<_> = text.lines().filter(|l| !l.starts_with('#')).map(|l| decode(l).expect("every stored line valid")).collect();
    assert_eq!(records.iter().filter(|r| r.discriminant == -23).count(), 1);
    assert!(!text.contains("-23 4 "));
}

#[test]
fn cache_dir_flag_populates_cache() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = elltrace(&["lvalue", "--delta", "-84", "--cache-dir", d]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join(CACHE_FILE)).unwrap();
    assert!(text.lines().any(|l| l.starts_with("-84 4 w=2 ")));
}

#[test]
fn verify_reports_are_json_lines() {
    let o = elltrace(&["verify", "functional-eq", "--json", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 20);
    for v in &lines {
        for key in ["quantity", "value", "oracle", "abs_diff", "rel_diff", "error_budget", "tolerance", "wall_time_s", "passed"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
    // half the samples use a non-fundamental discriminant
    assert!(lines.iter().filter(|v| v["details"][0]["value"].as_f64().unwrap() > 1.0).count() >= 5);
}

#[test]
fn fail_fast_stops_at_first_failure() {
    // a tiny frequency cap leaves the Poisson side far off, so the first
    // check fails
    let args = ["verify", "poisson", "--p", "2", "--xi-max", "0.01", "--fail-fast"];
    let o = elltrace(&args);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
}
