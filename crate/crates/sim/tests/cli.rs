use std::path::Path;
use std::process::{Command, Output};

fn intersection(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intersection")).args(args).env("RUST_LOG", "error").output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Value of `column` in the one-line CSV printed by `price`.
fn field(out: &Output, column: &str) -> String {
    let text = stdout(out);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let values: Vec<&str> = lines.next().unwrap().split(',').collect();
    values[header.iter().position(|h| *h == column).unwrap()].to_string()
}

const REFERENCE_OCCUPANTS: [&str; 4] = ["--occupant", "1=9", "--occupant", "2=6"];

#[test]
fn price_queue_state_one_zero() {
    let mut args =
        vec!["price", "--lanes", "3", "--arrival-prob", "1/3", "--mechanism", "queue", "--declared-rate", "7"];
    args.extend(REFERENCE_OCCUPANTS);
    let out = intersection(&args);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(field(&out, "wait_s"), "1.2500");
    assert_eq!(field(&out, "wait_min_bid_s"), "4.1250");
    assert_eq!(field(&out, "mb_cents"), "0.32");
    assert_eq!(field(&out, "payment_cents"), "0.47");
}

#[test]
fn price_lane_state_higher_lower() {
    let mut args = vec![
        "price",
        "--lanes",
        "3",
        "--arrival-prob",
        "1/3",
        "--arrival-prob",
        "1/2",
        "--arrival-prob",
        "1/6",
        "--mechanism",
        "lane",
        "--declared-rate",
        "7",
    ];
    args.extend(REFERENCE_OCCUPANTS);
    let out = intersection(&args);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(field(&out, "wait_s"), "1.4286");
}

#[test]
fn minimal_declaration_pays_nothing() {
    for mechanism in ["queue", "lane", "static"] {
        let mut args = vec!["price", "--lanes", "3", "--mechanism", mechanism, "--declared-rate", "5"];
        args.extend(REFERENCE_OCCUPANTS);
        let out = intersection(&args);
        assert!(out.status.success(), "{out:?}");
        assert_eq!(field(&out, "payment_cents"), "0.00");
    }
}

#[test]
fn usage_and_domain_errors_exit_two() {
    assert_eq!(intersection(&["price", "--bogus"]).status.code(), Some(2));
    assert_eq!(intersection(&["price", "--declared-rate", "12"]).status.code(), Some(2));
    assert_eq!(intersection(&["price", "--declared-rate", "7", "--occupant", "0=6"]).status.code(), Some(2));
    assert_eq!(intersection(&["simulate", "--config", "/nonexistent/config.json"]).status.code(), Some(2));
    let out = intersection(&["simulate", "--mechanism", "auction", "--users", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown mechanism"));
    assert_eq!(intersection(&["states", "--lanes", "1"]).status.code(), Some(2));
}

#[test]
fn singular_chain_exits_three() {
    let out =
        intersection(&["price", "--lanes", "3", "--arrival-prob", "1", "--declared-rate", "5", "--occupant", "1=6"]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn states_counts() {
    let out = intersection(&["states", "--lanes", "5"]);
    assert_eq!(stdout(&out), "lanes,queue_states,lane_states\n5,15,81\n");
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn simulate_writes_identical_files_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"lanes": 4, "arrival_probs": [0.25], "value_low_per_hour": 5, "value_high_per_hour": 10,
            "mechanism": "queue", "users": 2000, "seed": 17}"#,
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let res = intersection(&["simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "{res:?}");
    }
    for name in ["users.csv", "bins.csv"] {
        assert_eq!(read(&a.join(name)), read(&b.join(name)));
    }
    let users = read(&a.join("users.csv"));
    assert!(users.starts_with("user,lane,true_value_cents,declared_cents,arrival_step,service_step,"));
    assert_eq!(users.lines().count(), 2001);
    let bins = read(&a.join("bins.csv"));
    // One row per bin for all lanes and for each lane.
    assert_eq!(bins.lines().count(), 1 + 30 * 5);
}

#[test]
fn sweep_writes_grids() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for protocol in ["paired", "binned"] {
        let res = intersection(&[
            "sweep",
            "--mechanism",
            "static",
            "--lanes",
            "3",
            "--users",
            "3000",
            "--true-bins",
            "4",
            "--declared-bins",
            "4",
            "--protocol",
            protocol,
            "--out",
            out,
        ]);
        assert!(res.status.success(), "{res:?}");
        let grid = read(&dir.path().join("heatmap.csv"));
        assert!(grid.starts_with("true_bin_low,declared_bin_low,relative_cost_pct,count\n"));
        assert_eq!(grid.lines().count(), 17);
        for j in 0..3 {
            assert!(dir.path().join(format!("heatmap_lane{j}.csv")).exists());
        }
    }
}

#[test]
fn bench_writes_runtime_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runtime.csv");
    let res = intersection(&[
        "bench",
        "--min-lanes",
        "3",
        "--max-lanes",
        "4",
        "--snapshots",
        "3",
        "--mechanism",
        "static",
        "--mechanism",
        "queue",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{res:?}");
    let text = read(&path);
    assert!(text.starts_with("lanes,mechanism,mean_s,ci95_s\n"));
    assert_eq!(text.lines().count(), 5);
}
