// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::process::{Command, Output};

use softreal::netlist::Netlist;

fn softreal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_softreal"))
        .args(args)
        .env_remove("SOFTREAL_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let o = softreal(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn build_writes_netlist_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("loa.json");
    let o = softreal(&[
        "build",
        "--block",
        "loa",
        "--wl",
        "8",
        "--lpl",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let n = Netlist::from_json(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(
        n.evaluate(&[200, 100]).unwrap(),
        vec![softreal::blocks::loa_value(200, 100, 8, 3).unwrap()]
    );
}

#[test]
fn exhaustive_bam_report_is_stable() {
    let args = [
        "error",
        "--block",
        "bam",
        "--wl",
        "6",
        "--hbl",
        "2",
        "--vbl",
        "6",
        "--mode",
        "exhaustive",
    ];
    let first = stdout(&args);
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "block,params,mae,mse,aev,max_abs,count,normalizer,exhaustive,seed"
    );
    assert!(lines[1].starts_with("bam,wl=6;hbl=2;vbl=6,"), "{}", lines[1]);
    assert_eq!(stdout(&args), first);
}

#[test]
fn bad_parameters_exit_one() {
    let o = softreal(&["build", "--block", "loa", "--wl", "4", "--lpl", "9"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("LPL ≤ WL"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["build", "--block", "loa", "--wl", "4", "--bogus"][..],
        &["frobnicate"],
        &["build", "--block", "loa", "--wl", "4"],
        &["build", "--block", "rca", "--wl", "4", "--hbl", "1"],
        &["--jobs", "0", "improve", "--reference", "2", "--candidate", "1"],
    ] {
        let o = softreal(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(o.stdout.is_empty());
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn eval_round_trips_a_built_netlist() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rrca.json");
    stdout(&[
        "build",
        "--block",
        "rrca",
        "--wl",
        "6",
        "--aul",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    let out = stdout(&[
        "eval",
        "--netlist",
        path.to_str().unwrap(),
        "--input",
        "a=40",
        "--input",
        "b=33",
    ]);
    assert_eq!(out, "a,b,sum\n40,33,73\n");
    let faulty = stdout(&[
        "eval",
        "--netlist",
        path.to_str().unwrap(),
        "--input",
        "a=40",
        "--input",
        "b=33",
        "--p-err",
        "0.2",
        "--seed",
        "3",
    ]);
    assert!(faulty.starts_with("a,b,sum,p_err,trial,seed\n40,33,"));
    assert!(faulty.ends_with(",0.2,0,3\n"));
}

#[test]
fn sweep_writes_pareto_markdown() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("sweep.json");
    fs::write(
        &spec,
        r#"{"family":"loa","ranges":{"wl":[4,4],"lpl":[0,4]},"metrics":["mae","area"]}"#,
    )
    .unwrap();
    let csv = stdout(&["sweep", "--spec", spec.to_str().unwrap()]);
    assert_eq!(csv.lines().count(), 6);
    let md = stdout(&[
        "sweep",
        "--spec",
        spec.to_str().unwrap(),
        "--format",
        "markdown",
        "--pareto",
        "mae:min,area:max",
    ]);
    assert_eq!(md.lines().count(), 3, "{md}");
    assert!(md.contains("| loa | 4 | 0 |"), "{md}");
}

#[test]
fn improve_prints_rounded_percentages() {
    let out = stdout(&["improve", "--reference", "10.16", "--candidate", "6.59"]);
    assert_eq!(out.lines().nth(1).unwrap().rsplit(',').next(), Some("54"));
}

#[test]
fn randomized_commands_report_their_seed() {
    let out = stdout(&[
        "--seed",
        "42",
        "error",
        "--block",
        "loa",
        "--wl",
        "16",
        "--lpl",
        "4",
        "--samples",
        "1000",
    ]);
    assert!(out.trim_end().ends_with(",false,42"), "{out}");
    let out = stdout(&[
        "--seed", "9", "faultsim", "--block", "rca", "--wl", "4", "--p-err", "0.01", "--trials", "500",
    ]);
    assert!(out.trim_end().ends_with(",9"), "{out}");
}

/// Every subcommand, rerun and under different worker counts.
#[test]
fn outputs_are_byte_identical_across_runs_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("sweep.json");
    fs::write(
        &spec,
        r#"{"family":"rrca","ranges":{"wl":[6,6],"aul":[0,6]},"metrics":["mse","area"],"fault":{"p_err":0.01,"trials":3000,"base_seed":2}}"#,
    )
    .unwrap();
    let mlp = dir.path().join("mlp.json");
    fs::write(
        &mlp,
        r#"{"topology":[8,4,2],"wl":9,"frac":8,"arith":{"kind":"bic","lpl":2,"hbl":2,"vbl":6},"train":{"max_epochs":10},"data":{"per_class":16}}"#,
    )
    .unwrap();
    let net = dir.path().join("ram.json");
    stdout(&[
        "build",
        "--block",
        "ram",
        "--wl",
        "4",
        "--hul",
        "1",
        "--vul",
        "3",
        "--out",
        net.to_str().unwrap(),
    ]);
    let commands: Vec<Vec<&str>> = vec![
        vec![
            "build", "--block", "bam", "--wl", "5", "--hbl", "1", "--vbl", "3", "--tmr",
        ],
        vec![
            "eval",
            "--netlist",
            net.to_str().unwrap(),
            "--input",
            "a=13",
            "--input",
            "b=11",
            "--p-err",
            "0.1",
        ],
        vec![
            "error",
            "--block",
            "loa",
            "--wl",
            "12",
            "--lpl",
            "5",
            "--mode",
            "monte-carlo",
            "--samples",
            "20000",
        ],
        vec![
            "faultsim", "--block", "rrca", "--wl", "8", "--aul", "3", "--p-err", "0.02", "--trials", "20000",
        ],
        vec![
            "sweep",
            "--spec",
            spec.to_str().unwrap(),
            "--pareto",
            "mse:min,area:min",
        ],
        vec!["app-mlp", "--config", mlp.to_str().unwrap()],
        vec![
            "app-defuzz",
            "--wl",
            "6",
            "--arith",
            "rtmr",
            "--aul",
            "3",
            "--hul",
            "2",
            "--vul",
            "5",
            "--p-err",
            "0.01",
            "--samples",
            "2000",
        ],
        vec!["improve", "--reference", "6552,201", "--candidate", "2568,132"],
    ];
    for cmd in commands {
        let mut runs = Vec::new();
        for jobs in ["1", "1", "3"] {
            let mut args = vec!["--seed", "7", "--jobs", jobs];
            args.extend(&cmd);
            runs.push(stdout(&args));
        }
        assert!(!runs[0].is_empty());
        assert_eq!(runs[0], runs[1], "{cmd:?} rerun");
        assert_eq!(runs[0], runs[2], "{cmd:?} jobs=3");
    }
}
