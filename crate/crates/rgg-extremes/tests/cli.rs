//! End-to-end checks of the `rgg-extremes` binary: determinism of the
//! record files, the schedule-dump format, config-file layering, and
//! error reporting.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rgg-extremes"))
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

#[test]
fn records_are_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let status = bin()
            .args(["weibull", "--n", "2000", "--d", "2", "--k", "1", "--replicates", "16"])
            .args(["--seed", "7", "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(read(&a.join("records.csv")), read(&b.join("records.csv")));
    assert_eq!(read(&a.join("summary.json")), read(&b.join("summary.json")));
    assert_eq!(read(&a.join("plot_weibull.csv")), read(&b.join("plot_weibull.csv")));

    // a different seed must change the records
    let c = dir.path().join("c");
    let status = bin()
        .args(["weibull", "--n", "2000", "--d", "2", "--k", "1", "--replicates", "16"])
        .args(["--seed", "8", "--out"])
        .arg(&c)
        .status()
        .unwrap();
    assert!(status.success());
    assert_ne!(read(&a.join("records.csv")), read(&c.join("records.csv")));

    let text = String::from_utf8(read(&a.join("records.csv"))).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "seed,n,d,norm,k,r,S_k,max_degree,W_k,W_{k-1},n_extreme,statistic"
    );
    assert_eq!(lines.count(), 16);
}

#[test]
fn schedule_dump_emits_audit_columns() {
    let output = bin()
        .args(["schedule-dump", "--n", "10000,100000,1000000", "--d", "2", "--beta", "1"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,k_n,r_n,ntheta_r_d,residual");
    assert_eq!(lines.len(), 4);
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 5);
        cols[0].parse::<u64>().unwrap();
        cols[1].parse::<u64>().unwrap();
        for c in &cols[2..] {
            let v: f64 = c.parse().unwrap();
            assert!(v.is_finite());
        }
        let residual: f64 = cols[4].parse().unwrap();
        assert!(residual < 1e-12);
    }
    // k_n rule spot values: ⌈log n/log log n⌉ at 10⁴, 10⁵, 10⁶
    let kns: Vec<u64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(kns, vec![5, 5, 6]);
}

#[test]
fn config_file_layers_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(
        &config,
        "# comment line\nn = 1500\nreplicates = 4\nd = 1\nk = 2\nseed = 11\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let output = bin()
        .arg("phi-fixed")
        .args(["--config"])
        .arg(&config)
        .args(["--replicates", "6", "--out"]) // flag overrides file
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let summary: serde_json::Value =
        serde_json::from_slice(&read(&out.join("summary.json"))).unwrap();
    assert_eq!(summary["n"], 1500);
    assert_eq!(summary["replicates"], 6);
    assert_eq!(summary["master_seed"], 11);
    assert_eq!(summary["d"], 1);
    assert_eq!(summary["k"], 2);
    assert!(out.join("plot_pmf.csv").exists());
}

#[test]
fn invalid_input_fails_with_diagnostic() {
    let out = bin().args(["weibull", "--n", "nonsense"]).output().unwrap();
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());

    let out = bin().args(["weibull", "--norm", "l7", "--n", "100"]).output().unwrap();
    assert!(!out.status.success());
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("l7"), "diagnostic should name the bad norm: {msg}");
}

#[test]
fn mu_subcommand_writes_atlas_cache() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mu");
    let output = bin()
        .args(["mu", "--k", "2", "--d", "1", "--seed", "3", "--out"])
        .arg(&out)
        .args(["--config", "/dev/null"])
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let cache = out.join("atlas_cache.jsonl");
    assert!(cache.exists());
    let atlas = rgg_extremes::graph_atlas::Atlas::load(
        std::io::BufReader::new(std::fs::File::open(&cache).unwrap()),
    )
    .unwrap();
    assert_eq!(atlas.k, 2);
    assert_eq!(atlas.d, 1);
    assert!((atlas.mu_dk() - 1.0).abs() < 0.05, "μ_{{1,2}} ≈ 1, got {}", atlas.mu_dk());
}
