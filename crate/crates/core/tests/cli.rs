use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn phmm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phmm"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn decode_earthquakes() {
    let dir = tempfile::tempdir().unwrap();
    let model = data("earthquake_model.toml");
    let obs = data("earthquakes.csv");
    let o = phmm(&[
        "decode",
        "--model",
        s(&model),
        "--obs",
        s(&obs),
        "--out",
        s(dir.path()),
        "--change-points",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("loglik="));
    assert!(out.contains("change_points="));

    let csv = std::fs::read_to_string(dir.path().join("decode.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,observation,posterior_state,viterbi_state,hybrid_state,marginal_prob_of_hybrid_state"
    );
    let differ: Vec<usize> = lines
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[2] != f[3]).then(|| 1899 + f[0].parse::<usize>().unwrap())
        })
        .collect();
    assert_eq!(differ, vec![1918, 1973]);
}

#[test]
fn empty_observations_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("empty.csv");
    std::fs::write(&obs, "").unwrap();
    let o = phmm(&[
        "decode",
        "--model",
        s(&data("earthquake_model.toml")),
        "--obs",
        s(&obs),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("category=parse"), "{err}");
    assert!(err.contains("empty.csv"), "{err}");
}

#[test]
fn missing_file_is_an_io_error() {
    let o = phmm(&[
        "decode",
        "--model",
        "/nonexistent/model.toml",
        "--obs",
        s(&data("earthquakes.csv")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("category=io"));
}

#[test]
fn usage_errors_exit_with_two() {
    let o = phmm(&["decode", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error category=usage"));
    let o = phmm(&["fmci", "--model", "m", "--obs", "x", "--statistic", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn alpha_out_of_range_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = phmm(&[
        "decode",
        "--model",
        s(&data("earthquake_model.toml")),
        "--obs",
        s(&data("earthquakes.csv")),
        "--out",
        s(dir.path()),
        "--alpha",
        "1.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("category=argument"));
}

#[test]
fn fmci_rejects_three_states() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("three.toml");
    std::fs::write(
        &model,
        "pi = [0.5, 0.25, 0.25]\ngamma = [[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]]\nlambda = [2.0, 6.0, 12.0]\n",
    )
    .unwrap();
    let obs = dir.path().join("x.csv");
    std::fs::write(&obs, "1\n5\n12\n3\n").unwrap();
    let o = phmm(&[
        "fmci",
        "--model",
        s(&model),
        "--obs",
        s(&obs),
        "--statistic",
        "jumps",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("category=two-state"), "{}", stderr(&o));
}

#[test]
fn fmci_small_truncation_reports_overflow() {
    let dir = tempfile::tempdir().unwrap();
    let o = phmm(&[
        "fmci",
        "--model",
        s(&data("earthquake_model.toml")),
        "--obs",
        s(&data("earthquakes.csv")),
        "--statistic",
        "jumps",
        "--statistic",
        "exact-run:2",
        "--ell",
        "2",
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let jumps = std::fs::read_to_string(dir.path().join("jumps.csv")).unwrap();
    let last = jumps.lines().last().unwrap();
    assert!(last.starts_with("overflow_ge_3,"), "{last}");
    let overflow: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!(overflow > 1e-9);
    assert!(stderr(&o).contains("increase --ell"));
    let stay = std::fs::read_to_string(dir.path().join("stay_probabilities.csv")).unwrap();
    assert_eq!(stay.lines().count(), 107);
}

#[test]
fn fmci_auto_truncation_and_run_counts() {
    let dir = tempfile::tempdir().unwrap();
    let o = phmm(&[
        "fmci",
        "--model",
        s(&data("earthquake_model.toml")),
        "--obs",
        s(&data("earthquakes.csv")),
        "--statistic",
        "longest-run",
        "--k-max",
        "4",
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let counts = std::fs::read_to_string(dir.path().join("expected_run_counts.csv")).unwrap();
    assert_eq!(counts.lines().count(), 5);
    let total: f64 = std::fs::read_to_string(dir.path().join("longest-run.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn sample_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let base = |m: &str, out: &Path| {
        phmm(&[
            "sample",
            "--model",
            s(&data("earthquake_model.toml")),
            "--obs",
            s(&data("earthquakes.csv")),
            "--samples",
            m,
            "--seed",
            "9",
            "--out",
            s(out),
        ])
    };
    let o = base("0", dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("category=argument"));

    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(base("1", a.path()).status.success());
    assert!(base("1", b.path()).status.success());
    let read = |d: &Path| std::fs::read_to_string(d.join("samples.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    assert_eq!(read(a.path()).lines().count(), 2);
    let freq = std::fs::read_to_string(a.path().join("frequencies.csv")).unwrap();
    assert_eq!(freq.lines().count(), 1 + 2 * 107);
}

#[test]
fn artemis_warns_on_short_sequences_and_is_reproducible() {
    let model = data("simulated_two_state_model.toml");
    let run = |out: &Path| {
        phmm(&[
            "artemis",
            "--model",
            s(&model),
            "--n",
            "100",
            "--replicates",
            "3",
            "--alpha-grid",
            "8",
            "--seed",
            "5",
            "--out",
            s(out),
        ])
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let o = run(a.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("coarse"));
    assert!(run(b.path()).status.success());
    let read = |d: &Path, f: &str| std::fs::read_to_string(d.join(f)).unwrap();
    assert_eq!(read(a.path(), "summary.csv"), read(b.path(), "summary.csv"));
    assert_eq!(read(a.path(), "curve_1.csv"), read(b.path(), "curve_1.csv"));
    assert_eq!(read(a.path(), "curve_1.csv").lines().count(), 10);
}

#[test]
fn simulate_then_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let model = data("simulated_two_state_model.toml");
    let o = phmm(&[
        "simulate",
        "--model",
        s(&model),
        "--n",
        "500",
        "--seed",
        "3",
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let obs = dir.path().join("observations.csv");
    let states = dir.path().join("states.csv");
    assert_eq!(std::fs::read_to_string(&obs).unwrap().lines().count(), 501);
    let o = phmm(&[
        "artemis",
        "--model",
        s(&model),
        "--obs",
        s(&obs),
        "--states",
        s(&states),
        "--alpha-grid",
        "4",
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read_to_string(dir.path().join("curve.csv"))
            .unwrap()
            .lines()
            .count(),
        6
    );
}

#[test]
fn blockwise_writes_a_row_per_method_and_block() {
    let dir = tempfile::tempdir().unwrap();
    let o = phmm(&[
        "blockwise",
        "--model",
        s(&data("simulated_two_state_model.toml")),
        "--alpha",
        "0.4",
        "--block-sizes",
        "1,5",
        "--n",
        "300",
        "--replicates",
        "2",
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("blockwise.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
}

#[test]
fn lamb_model_needs_renormalization() {
    let dir = tempfile::tempdir().unwrap();
    let model = data("fetal_lamb_model.toml");
    let o = phmm(&[
        "simulate",
        "--model",
        s(&model),
        "--n",
        "10",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("category=validation"));
    let o = phmm(&[
        "simulate",
        "--model",
        s(&model),
        "--n",
        "10",
        "--renormalize",
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("renormaliz"));
}
