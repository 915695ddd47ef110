use std::path::Path;
use std::process::{Command, Output};

fn orbitlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbitlab"))
        .args(args)
        .current_dir(dir)
        .env("ORBITLAB_THREADS", "1")
        .output()
        .expect("binary runs")
}

#[test]
fn enumerate_counts_small_ball() {
    let dir = tempfile::tempdir().unwrap();
    let out = orbitlab(dir.path(), &["enumerate", "t=3", "norm=max"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["count"], 116);
}

#[test]
fn exit_codes_partition_failures() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = orbitlab(dir.path(), &["enumerate", "t=3", "colour=red"]);
    assert_eq!(bad_key.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_key.stderr).contains("colour"));

    let capacity = orbitlab(dir.path(), &["enumerate", "t=100000", "capacity=1000"]);
    assert_eq!(capacity.status.code(), Some(3));

    // Too few samples per class for any modulus.
    std::fs::write(dir.path().join("v.csv"), "t,volume\n2,2\n4,4\n8,8\n").unwrap();
    let fit = orbitlab(dir.path(), &["asymptotics", "input=v.csv", "p=2"]);
    assert_eq!(fit.status.code(), Some(4));

    let threads = Command::new(env!("CARGO_BIN_EXE_orbitlab"))
        .args(["enumerate", "t=3"])
        .env("ORBITLAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        "application = ledrappier\nv = 1, sqrt(2)\nt = 50, 100\ntest.a = sector:1:2:0:0.5\ntest.b = sector:1:3:1:2\n",
    )
    .unwrap();
    for run in ["1", "2"] {
        let out = orbitlab(
            dir.path(),
            &["orbit", "--config", "run.cfg", "--json", &format!("r{run}.json"), "--csv", &format!("r{run}.csv")],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for ext in ["json", "csv"] {
        let a = std::fs::read(dir.path().join(format!("r1.{ext}"))).unwrap();
        let b = std::fs::read(dir.path().join(format!("r2.{ext}"))).unwrap();
        assert_eq!(a, b, "{ext}");
    }
    let csv = std::fs::read_to_string(dir.path().join("r1.csv")).unwrap();
    assert!(csv.starts_with("t,test_id,count,empirical,target,error\n"));
}

#[test]
fn flag_overrides_config_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("e.cfg"), "t = 2\n").unwrap();
    let out = orbitlab(dir.path(), &["enumerate", "--config", "e.cfg", "t=3", "norm=max"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["t"], "3");
}

#[test]
fn volume_csv_feeds_asymptotics_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let vol = orbitlab(dir.path(), &["volume", "group=sym2_unipotent", "p=3", "n_max=24", "--csv", "vol.csv"]);
    assert!(vol.status.success());
    let table = std::fs::read_to_string(dir.path().join("vol.csv")).unwrap();
    assert!(table.lines().nth(2).unwrap().starts_with("2,9,9*sqrt(3)^0,3*sqrt(3)^0,1/3*sqrt(3)^0"));

    let fit = orbitlab(dir.path(), &["asymptotics", "input=vol.csv", "p=3"]);
    assert!(fit.status.success(), "{}", String::from_utf8_lossy(&fit.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fit.stdout).unwrap();
    assert_eq!(v["modulus"], 2);

    let merged = orbitlab(dir.path(), &["report", "inputs=vol.csv,vol.csv", "--csv", "all.csv"]);
    assert!(merged.status.success());
    let all = std::fs::read_to_string(dir.path().join("all.csv")).unwrap();
    assert_eq!(all.lines().count(), 1 + 2 * 24);
    assert!(all.starts_with("source,n,t,volume"));
}

#[test]
fn unwritable_output_fails_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let out = orbitlab(dir.path(), &["enumerate", "t=3", "--json", "missing/dir/out.json"]);
    assert_eq!(out.status.code(), Some(2));
}
