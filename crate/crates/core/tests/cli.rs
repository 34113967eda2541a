//! End-to-end tests of the `nr-spread` binary and the CSV files it writes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nr_spread(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nr-spread"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .map(str::to_owned)
        .collect()
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    lines(path)
        .into_iter()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn simulate_writes_trajectory_and_aggregate_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = nr_spread(
        &[
            "simulate",
            "--tau",
            "2.5",
            "--n0",
            "4",
            "--s0",
            "1,2",
            "--max-nodes",
            "50",
            "--runs",
            "3",
            "--seed",
            "9",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    for s0 in [1, 2] {
        let traj = dir.path().join(format!("trajectories_2.5_4_{s0}.csv"));
        assert_eq!(lines(&traj)[0], "run_id,k,N_k,S_k,ratio");
        let rows = data_rows(&traj);
        assert_eq!(rows.len(), 3 * 47);
        for r in &rows {
            let k: usize = r[1].parse().unwrap();
            let n: usize = r[2].parse().unwrap();
            let s: usize = r[3].parse().unwrap();
            let ratio: f64 = r[4].parse().unwrap();
            assert_eq!(n, 4 + k);
            assert!(s >= s0 && s <= n);
            assert!((ratio - s as f64 / n as f64).abs() < 1e-6);
        }

        let agg = dir.path().join(format!("aggregate_2.5_4_{s0}.csv"));
        assert_eq!(lines(&agg)[0], "N_k,mean_ratio,count,std_error");
        let rows = data_rows(&agg);
        assert_eq!(rows.len(), 47);
        assert_eq!(rows[0][0], "4");
        assert_eq!(rows[0][1].parse::<f64>().unwrap(), s0 as f64 / 4.0);
        assert!(rows.iter().all(|r| r[2] == "3"));
    }
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# small study\ntau = 1.5\nn0 = 3\ns0 = 2\nmax-nodes = 20\nruns = 2\nseed = 5\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = nr_spread(
        &["simulate", "--config", cfg.to_str().unwrap(), "--runs", "4"],
        &out_dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let agg = data_rows(&out_dir.join("aggregate_1.5_3_2.csv"));
    assert_eq!(agg.len(), 18);
    assert!(agg.iter().all(|r| r[2] == "4"));
}

#[test]
fn clock_bounded_runs_stop_at_different_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = nr_spread(
        &[
            "simulate",
            "--n0",
            "2",
            "--t-star",
            "8",
            "--max-nodes",
            "none",
            "--runs",
            "10",
            "--prop-mode",
            "edge",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = data_rows(&dir.path().join("aggregate_2.5_2_1.csv"));
    let counts: Vec<usize> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(counts[0], 10);
    assert!(counts.windows(2).all(|w| w[1] <= w[0]));
    assert!(*counts.last().unwrap() < 10);
}

#[test]
fn snapshots_follow_the_graph_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = nr_spread(
        &[
            "simulate",
            "--n0",
            "1",
            "--max-nodes",
            "100",
            "--runs",
            "1",
            "--snapshots",
            "3,20,100",
            "--delete-old-edges",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for size in [3usize, 20, 100] {
        let edges = dir
            .path()
            .join(format!("snapshot_edges_2.5_1_1_{size}.csv"));
        let nodes = dir
            .path()
            .join(format!("snapshot_nodes_2.5_1_1_{size}.csv"));
        assert_eq!(lines(&edges)[0], "i,j,count");
        assert_eq!(lines(&nodes)[0], "i,capacity,has_message");
        let node_rows = data_rows(&nodes);
        assert_eq!(node_rows.len(), size);
        for (idx, r) in node_rows.iter().enumerate() {
            assert_eq!(r[0].parse::<usize>().unwrap(), idx);
            assert!(r[1].parse::<f64>().unwrap() >= 1.0);
            assert!(matches!(r[2].as_str(), "0" | "1"));
        }
        assert_eq!(node_rows[0][2], "1");
        for r in data_rows(&edges) {
            let i: usize = r[0].parse().unwrap();
            let j: usize = r[1].parse().unwrap();
            let count: u64 = r[2].parse().unwrap();
            assert!(i <= j && j < size && count > 0);
        }
    }
}

#[test]
fn analytic_distributions_carry_their_deficit() {
    let dir = tempfile::tempdir().unwrap();
    let out = nr_spread(
        &["analytic", "--n0", "2", "--s0", "1", "--t-star", "3"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    for name in ["spread_horizon", "spread_horizon_pinned", "node_count"] {
        let path = dir.path().join(format!("dist_{name}_2.5_2_1.csv"));
        let all = lines(&path);
        assert!(all[0].starts_with(&format!("# quantity={name}")));
        assert_eq!(all[1], "i,prob");
        let deficit: f64 = all
            .last()
            .unwrap()
            .strip_prefix("# truncation_deficit=")
            .unwrap()
            .parse()
            .unwrap();
        assert!(deficit > 0.0 && deficit < 1e-10);
        let mass: f64 = data_rows(&path)
            .iter()
            .map(|r| r[1].parse::<f64>().unwrap())
            .sum();
        assert!(
            (mass + deficit - 1.0).abs() < 1e-12,
            "{name}: {mass} + {deficit}"
        );
    }

    let cdf = data_rows(&dir.path().join("dist_ratio_cdf_2.5_2_1.csv"));
    assert_eq!(cdf.len(), 101);
    let values: Vec<f64> = cdf.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0]));
    assert!(dir.path().join("dist_non_propagation_2.5_2_1.csv").exists());
}

#[test]
fn compare_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = nr_spread(
        &["compare", "--t-star", "2", "--replicas", "5000"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = fs::read_to_string(dir.path().join("report_compare.txt")).unwrap();
    assert!(report.contains("[compare 2.5_1_1]"));
    assert!(report.contains("node_count_tv="));
}

#[test]
fn invalid_settings_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["simulate", "--tau", "0.9"][..],
        &["simulate", "--runs", "0"],
        &["simulate", "--max-nodes", "none"],
        &["simulate", "--prop-mode", "telepathy"],
        &["simulate", "--seed", "minus-one"],
    ] {
        let out = nr_spread(args, dir.path());
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn invalid_grid_cells_are_skipped_and_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = nr_spread(
        &[
            "simulate",
            "--n0",
            "3",
            "--s0",
            "1,5",
            "--max-nodes",
            "10",
            "--runs",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(dir.path().join("aggregate_2.5_3_1.csv").exists());
    assert!(!dir.path().join("aggregate_2.5_3_5.csv").exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("2.5_3_5"));
}

#[test]
fn capacity_overflow_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = nr_spread(
        &[
            "simulate",
            "--tau",
            "1.0005",
            "--max-nodes",
            "200",
            "--runs",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
