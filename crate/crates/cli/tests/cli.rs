//! End-to-end runs of the binary: outputs, diagnostics, exit codes and
//! reproducibility across thread counts.

use std::path::Path;
use std::process::{Command, Output};

use grid_entropy::formats::{read_csv, read_dump, read_json, real_from};
use grid_entropy::ExperimentConfig;
use grid_entropy_core::{prokhorov_brute, Measure};

fn run(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_grid-entropy"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("GRID_ENTROPY_THREADS", t.to_string());
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn count_prints_six() {
    let o = run(&["count", "--D", "2", "--endpoint", "2,2"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "6\n");
}

#[test]
fn invalid_values_name_the_field() {
    let o = run(&["count", "--q", "1/2,x"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`q`"), "{}", stderr(&o));

    let o = run(&["entropy-eps", "--eps", "1,2"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`eps`"));
}

#[test]
fn config_file_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# ladder\nD=2\nbeta=fast\n").unwrap();
    let o = run(&["gibbs", "--config", path_str(&cfg)], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn budget_refusal_has_its_own_exit_code() {
    let o = run(
        &["entropy-eps", "--q", "1/2,1/2", "--n", "10,12", "--seeds", "1", "--budget", "100"],
        None,
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("budget"));
}

#[test]
fn metric_matches_subset_oracle_on_files() {
    let dir = tempfile::tempdir().unwrap();
    let mu_path = dir.path().join("mu.json");
    let nu_path = dir.path().join("nu.json");
    std::fs::write(&mu_path, "[[0.1, 0.5], [0.35, 0.7], [0.9, 0.3]]").unwrap();
    std::fs::write(&nu_path, "[[0.2, 0.6], [0.55, 0.4], [0.8, 0.5]]").unwrap();
    let mu_arg = format!("file:{}", path_str(&mu_path));
    let nu_arg = format!("file:{}", path_str(&nu_path));
    let o = run(&["metric", "--mu", &mu_arg, "--nu", &nu_arg], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rho: f64 = text.lines().next().unwrap().parse().unwrap();
    let mu = Measure::from_atoms([(0.1, 0.5), (0.35, 0.7), (0.9, 0.3)]).unwrap();
    let nu = Measure::from_atoms([(0.2, 0.6), (0.55, 0.4), (0.8, 0.5)]).unwrap();
    assert!((rho - prokhorov_brute(&mu, &nu).unwrap()).abs() <= 1e-12);
    assert!(text.contains("brute"));
}

#[test]
fn gibbs_at_zero_tau_is_log_two() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("g.json");
    let o = run(
        &[
            "gibbs", "--D", "2", "--q", "1/2,1/2", "--beta", "1", "--tau", "zero", "--n", "64..2048", "--json",
            path_str(&json),
        ],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_json(&json).unwrap();
    let value = real_from(&v["result"]["value"]).unwrap();
    assert!((value - std::f64::consts::LN_2).abs() < 0.05, "{value}");
    assert_eq!(v["config"]["command"], "gibbs");
}

#[test]
fn csv_is_identical_across_thread_counts() {
    for cmd in ["entropy-eps", "orderstats", "gibbs"] {
        let mut outputs = Vec::new();
        for threads in [1, 3] {
            // same file name in fresh directories: the path is echoed in the header
            let dir = tempfile::tempdir().unwrap();
            let csv = dir.path().join("run.csv");
            let n = if cmd == "gibbs" { "16..64" } else { "4,6,8" };
            let o = run(
                &[cmd, "--q", "1/2,1/2", "--nu", "lebesgue:16", "--n", n, "--seeds", "1..3", "--csv", path_str(&csv)],
                Some(threads),
            );
            assert!(o.status.success(), "{cmd}: {}", stderr(&o));
            let text = std::fs::read_to_string(&csv).unwrap();
            outputs.push(text.replace(path_str(&csv), "run.csv"));
        }
        assert!(outputs[0] == outputs[1], "{cmd} output depends on the thread count");
    }
}

#[test]
fn outputs_round_trip_through_their_parsers() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("eps.csv");
    let json = dir.path().join("eps.json");
    let svg = dir.path().join("eps.svg");
    let o = run(
        &[
            "entropy-eps", "--q", "1/2,1/2", "--nu", "triangular:16", "--n", "4,6", "--seeds", "1,2", "--csv",
            path_str(&csv), "--json", path_str(&json),
        ],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&csv).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 3);
    let cfg = ExperimentConfig::from_pairs(&header).unwrap();
    assert_eq!(cfg.raw("nu"), Some("triangular:16"));
    assert_eq!(cfg.pairs(), header);

    let rewritten = dir.path().join("again.csv");
    grid_entropy::formats::write_csv(&rewritten, &header, &rows).unwrap();
    assert_eq!(std::fs::read(&csv).unwrap(), std::fs::read(&rewritten).unwrap());

    let v = read_json(&json).unwrap();
    assert!(real_from(&v["result"]["value"]).is_some());

    let o = run(&["plot", "--csv", path_str(&csv), "--svg", path_str(&svg)], None);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
}

#[test]
fn sampler_output_and_table_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("z.bin");
    let json = dir.path().join("s.json");
    let o = run(
        &[
            "sample", "--endpoint", "3,3", "--tau", "identity:16", "--samples", "2000", "--seed", "4", "--dump",
            path_str(&dump), "--json", path_str(&json),
        ],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_json(&json).unwrap();
    let freq = v["result"]["frequencies"].as_object().unwrap();
    assert!(freq.len() <= 20);
    assert_eq!(freq.values().map(|c| c.as_u64().unwrap()).sum::<u64>(), 2000);

    let (header, values) = read_dump(&dump).unwrap();
    assert_eq!(header.dim, 2);
    assert_eq!(header.extent, vec![3, 3]);
    assert_eq!(values.len(), 16);
    assert_eq!(header.beta, Some(1.0));
    let log_z = v["result"]["log_partition"].as_f64().unwrap();
    assert_eq!(values[15], log_z);
}

#[test]
fn bernoulli_and_klbudget_report_within_budget() {
    let o = run(&["bernoulli", "--n", "50,100", "--seeds", "1,2"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("within_budget true"));

    let o = run(
        &["klbudget", "--q", "1/2,1/2", "--nu", "lebesgue:64", "--method", "eps_sum", "--entropy-n", "4,6,8", "--seeds", "1,2"],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("violated false"), "{}", stdout(&o));
}
