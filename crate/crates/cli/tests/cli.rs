use std::process::Command;

use proptest::prelude::*;
use qct_cli::config::{
    DqdConfig, LpSelftestConfig, OneQubitConfig, TriangleConfig, TwoQubitConfig, Variant, Waveplates,
};
use qct_cli::{emit_csv, parse_config, run, to_json, OutputFormat, RunConfig, Scenario};

fn qct() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qct"))
}

fn config(text: &str) -> RunConfig {
    parse_config(text).unwrap()
}

fn csv_of(text: &str) -> String {
    emit_csv(&run(&config(text)).unwrap())
}

#[test]
fn ideal_one_qubit_table() {
    let csv = csv_of(r#"{"scenario":"one-qubit","network":4,"rsp":1,"checkpoint":1,"visibilities":[1,1],"seed":7}"#);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "k,i,p_diag,p_checkpoint");
    assert_eq!(lines.len(), 1 + 4 + 1);
    assert_eq!(*lines.last().unwrap(), "Q,2.000000000000");
}

#[test]
fn rsp3_and_control_vanish() {
    let csv = csv_of(r#"{"scenario":"one-qubit","network":4,"rsp":3,"checkpoint":1}"#);
    assert!(csv.ends_with("Q,0.000000000000\n"), "{csv}");
    let csv = csv_of(r#"{"scenario":"two-qubit","network":4,"variant":"control","checkpoint":1}"#);
    assert!(csv.ends_with("Q,0.000000000000\n"), "{csv}");
}

fn group_sums_are_one(csv: &str) {
    let mut sums: std::collections::BTreeMap<String, (f64, f64)> = Default::default();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            continue;
        }
        let e = sums.entry(f[0].to_owned()).or_default();
        e.0 += f[2].parse::<f64>().unwrap();
        e.1 += f[3].parse::<f64>().unwrap();
    }
    assert!(!sums.is_empty());
    for (k, (d, c)) in sums {
        assert!((d - 1.0).abs() < 1e-9 && (c - 1.0).abs() < 1e-9, "group {k}: {d} {c}");
    }
}

#[test]
fn probability_groups_sum_to_one() {
    for text in [
        r#"{"scenario":"one-qubit","network":6,"rsp":2,"checkpoint":2,"visibilities":[0.9,0.8,0.95]}"#,
        r#"{"scenario":"one-qubit","network":4,"rsp_waveplates":{"qwp":12.5,"hwp":33},"checkpoint":1,"branches":[["+","-"]]}"#,
        r#"{"scenario":"two-qubit","network":4,"variant":"capable","checkpoint":2,"visibilities":[0.9,0.7]}"#,
        r#"{"scenario":"two-qubit","network":6,"variant":"control","checkpoint":1}"#,
    ] {
        group_sums_are_one(&csv_of(text));
    }
}

#[test]
fn sweep_tau_zero_rows_vanish() {
    let csv = csv_of(r#"{"scenario":"dqd","gamma_l":4,"gamma_r":0.1,"delta":1,"t_max":2,"points":5,"dt":0.01}"#);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t0,tau,q"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 25);
    // t0-major, then tau.
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0] || (w[0][0] == w[1][0] && w[0][1] < w[1][1])));
    for r in rows.iter().filter(|r| r[1] == 0.0) {
        assert_eq!(r[2], 0.0);
    }
    assert!(rows.iter().any(|r| r[2] > 0.0));
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let text = r#"{"scenario":"triangle","restarts":30,"seed":11}"#;
    let render = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| emit_csv(&run(&config(text)).unwrap()))
    };
    let one = render(1);
    assert_eq!(one, render(4));
    assert_eq!(one, render(4));
}

#[test]
fn binary_exit_codes() {
    let ok = qct().args(["onequbit", "--network", "4", "--rsp", "1", "--checkpoint", "1"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8(ok.stdout).unwrap().ends_with("Q,2.000000000000\n"));

    let bad = qct().args(["onequbit", "--network", "4", "--rsp", "9", "--checkpoint", "1"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8(bad.stderr).unwrap().contains("rsp"));

    let unseeded = qct().args(["triangle"]).output().unwrap();
    assert_eq!(unseeded.status.code(), Some(1));
}

#[test]
fn config_file_overrides_flags_and_writes_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("out.csv");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"scenario":"one-qubit","network":4,"rsp":1,"checkpoint":1,"out":{:?}}}"#,
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let status = qct()
        .args(["onequbit", "--rsp", "3", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(status.success());
    let written = std::fs::read_to_string(&out).unwrap();
    assert!(written.ends_with("Q,2.000000000000\n"), "{written}");

    let mismatch = qct().args(["dqd", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(mismatch.status.code(), Some(1));

    std::fs::write(&cfg, "{\n \"scenario\": \"dqd\",\n  ,\n}").unwrap();
    let broken = qct().args(["dqd", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(broken.status.code(), Some(1));
    assert!(String::from_utf8(broken.stderr).unwrap().contains("line 3"));
}

#[test]
fn json_output_carries_provenance() {
    let out = qct()
        .args(["lp-selftest", "--seed", "5", "--instances", "3", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["provenance"]["seed"], 5);
    assert_eq!(v["provenance"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["outcome"]["passed"], true);
}

fn visibilities(pairs: usize) -> impl Strategy<Value = Option<Vec<f64>>> {
    proptest::option::of(proptest::collection::vec(0.0..=1.0f64, pairs))
}

fn setting() -> impl Strategy<Value = (Option<usize>, Option<Waveplates>)> {
    prop_oneof![
        (1usize..=3).prop_map(|i| (Some(i), None)),
        (0.0..180.0f64, 0.0..180.0f64).prop_map(|(qwp, hwp)| (None, Some(Waveplates { qwp, hwp }))),
    ]
}

fn scenario() -> impl Strategy<Value = Scenario> {
    let network = prop_oneof![Just(4u8), Just(6u8)];
    let one = (network.clone(), setting(), setting(), 0usize..5).prop_flat_map(|(n, rsp, cp, trials)| {
        let pairs = if n == 4 { 2 } else { 3 };
        let branch = prop_oneof![Just("+".to_string()), Just("-".to_string())];
        (
            visibilities(pairs),
            proptest::option::of(proptest::collection::vec([branch.clone(), branch], pairs - 1)),
        )
            .prop_map(move |(vis, branches)| {
                Scenario::OneQubit(OneQubitConfig {
                    network: n,
                    rsp: rsp.0,
                    rsp_waveplates: rsp.1,
                    checkpoint: cp.0,
                    checkpoint_waveplates: cp.1,
                    visibilities: vis,
                    branches,
                    oracle_trials: trials,
                })
            })
    });
    let two = (network, setting(), prop_oneof![Just(Variant::Capable), Just(Variant::Control)], 0usize..5)
        .prop_flat_map(|(n, cp, variant, trials)| {
            visibilities(if n == 4 { 2 } else { 3 }).prop_map(move |vis| {
                Scenario::TwoQubit(TwoQubitConfig {
                    network: n,
                    variant,
                    checkpoint: cp.0,
                    checkpoint_waveplates: cp.1,
                    visibilities: vis,
                    oracle_trials: trials,
                })
            })
        });
    let tri = (1usize..500).prop_map(|restarts| Scenario::Triangle(TriangleConfig { restarts }));
    let dqd = (0.0..10.0f64, 0.0..10.0f64, -5.0..5.0f64, 0.5..20.0f64, 2usize..200).prop_map(
        |(gamma_l, gamma_r, delta, t_max, points)| {
            Scenario::Dqd(DqdConfig {
                gamma_l,
                gamma_r,
                delta,
                t_max,
                points,
                dt: t_max / (points - 1) as f64 / 20.0,
            })
        },
    );
    let lp = (1usize..1000, 2usize..=12)
        .prop_map(|(instances, max_vars)| Scenario::LpSelftest(LpSelftestConfig { instances, max_vars }));
    prop_oneof![one, two, tri, dqd, lp]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn config_round_trip(
        scenario in scenario(),
        seed in any::<u64>(),
        out in proptest::option::of("[a-z]{1,8}\\.csv"),
        format in proptest::option::of(prop_oneof![Just(OutputFormat::Csv), Just(OutputFormat::Json)]),
    ) {
        let config = RunConfig { scenario, seed: Some(seed), out, format };
        let parsed = parse_config(&to_json(&config)).unwrap();
        prop_assert_eq!(parsed, config);
    }
}
