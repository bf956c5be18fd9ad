use std::process::Command;

fn geotrace() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_geotrace"));
    cmd.env_remove("GEOTRACE_CACHE");
    cmd
}

#[test]
fn exit_codes() {
    let ok = geotrace().args(["count", "--x", "1e4"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("x,psi\n"));

    let p2 = geotrace()
        .args(["count", "--x", "1e6", "--p", "2", "--a", "0"])
        .output()
        .unwrap();
    assert_eq!(p2.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&p2.stderr).contains("p = 2 not covered"));

    let bad_flag = geotrace().args(["census", "--bogus"]).output().unwrap();
    assert_eq!(bad_flag.status.code(), Some(2));
}

#[test]
fn classdata_uses_env_cache_and_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("records.csv");
    let first = geotrace()
        .env("GEOTRACE_CACHE", &cache)
        .args(["classdata", "--x", "1e5"])
        .output()
        .unwrap();
    assert_eq!(
        first.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let text = std::fs::read_to_string(&cache).unwrap();
    let lines = text.lines().count();
    assert!(lines > 300);
    assert!(text.starts_with("5,1,"));

    let second = geotrace()
        .env("GEOTRACE_CACHE", &cache)
        .args(["classdata", "--x", "1e5"])
        .output()
        .unwrap();
    let msg = String::from_utf8_lossy(&second.stdout);
    assert!(msg.contains("0 computed, 0 written"), "{msg}");
    assert_eq!(
        std::fs::read_to_string(&cache).unwrap().lines().count(),
        lines
    );

    // Counting with a warm cache matches a cold run byte for byte.
    let warm = geotrace()
        .env("GEOTRACE_CACHE", &cache)
        .args(["count", "--x", "1e5", "--p", "7"])
        .output()
        .unwrap();
    let cold = geotrace()
        .args(["count", "--x", "1e5", "--p", "7"])
        .output()
        .unwrap();
    assert_eq!(warm.stdout, cold.stdout);
}

#[test]
fn corrupt_cache_is_a_computation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("records.csv");
    std::fs::write(&cache, "5,1,notanumber\n").unwrap();
    let out = geotrace()
        .args(["count", "--x", "1e3", "--cache", cache.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gnuplot_and_strict() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let plot = dir.path().join("t.dat");
    let out = geotrace()
        .args([
            "verify-theorem",
            "--p",
            "3",
            "--x-list",
            "1e2,1e3,1e4,1e5",
            "--strict",
        ])
        .args([
            "--output",
            csv.to_str().unwrap(),
            "--gnuplot",
            plot.to_str().unwrap(),
        ])
        .args(["--max-rel-dev", "0.5"])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("fitted_exponent="));
    let data = std::fs::read_to_string(&plot).unwrap();
    assert!(data.starts_with("# p=3 a=0\n"));
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4 * 3);
}
