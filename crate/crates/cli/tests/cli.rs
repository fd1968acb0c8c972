use std::fs;
use std::process::Command as Process;

use canteen_cli::{execute, parse_with_seed_env, Command};
use canteen_core::game::arrival_pairs;
use canteen_core::session::{log_records, to_jsonl, Occupant, Session, SessionId};
use canteen_core::sim::{Policy, SessionConfig};
use canteen_core::{ArrivalTime, TimeRange};
use clap::error::ErrorKind;

fn run(args: &[&str]) -> (i32, String, String) {
    run_env(args, None)
}

fn run_env(args: &[&str], seed_env: Option<&str>) -> (i32, String, String) {
    let cli = parse_with_seed_env(args.iter().copied(), seed_env).unwrap();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = execute(&cli.command, &mut out, &mut err).unwrap();
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn parse_err(args: &[&str]) -> ErrorKind {
    parse_with_seed_env(args.iter().copied(), None)
        .unwrap_err()
        .kind()
}

#[test]
fn analyze_range_flags_give_twelve_pairs() {
    let cli = parse_with_seed_env(["analyze", "--tmin", "8:10", "--tmax", "9:10"], None).unwrap();
    let Command::Analyze { tmin, tmax, output } = cli.command else {
        panic!("wrong subcommand")
    };
    let range = TimeRange::new(tmin, tmax).unwrap();
    assert_eq!(arrival_pairs(&range).len(), 12);
    assert_eq!(output.out, None);
    assert!(!output.pretty);
}

#[test]
fn epistemic_defaults() {
    let cli = parse_with_seed_env(["epistemic"], None).unwrap();
    let Command::Epistemic { tmin, tmax, output } = cli.command else {
        panic!("wrong subcommand")
    };
    assert_eq!(
        (tmin, tmax),
        (ArrivalTime::hm(8, 10), ArrivalTime::hm(9, 10))
    );
    assert!(output.out.is_none() && !output.pretty);
}

#[test]
fn simulate_defaults() {
    let cli = parse_with_seed_env(["simulate"], None).unwrap();
    let Command::Simulate {
        tmin,
        rounds,
        endowment,
        seed,
        policy1,
        policy2,
        sessions,
        ..
    } = cli.command
    else {
        panic!("wrong subcommand")
    };
    assert_eq!(tmin, ArrivalTime::hm(8, 0));
    assert_eq!((rounds, endowment, seed, sessions), (10, 10.0, 0, 1000));
    assert_eq!(policy1, Policy::canteen_before_nine());
    assert_eq!(policy2, policy1);
}

#[test]
fn usage_errors() {
    assert_eq!(
        parse_err(&["simulate", "--policy1", "mixed:8:50"]),
        ErrorKind::ValueValidation
    );
    assert_eq!(
        parse_err(&["simulate", "--policy2", "logistic:1"]),
        ErrorKind::ValueValidation
    );
    assert_eq!(
        parse_err(&["analyze", "--tmin", "8:15"]),
        ErrorKind::ValueValidation
    );
    assert_eq!(
        parse_err(&["analyze", "--tmin", "noon"]),
        ErrorKind::ValueValidation
    );
    assert_eq!(
        parse_err(&["analyze", "--rounds", "3"]),
        ErrorKind::UnknownArgument
    );
    assert_eq!(parse_err(&["fly"]), ErrorKind::InvalidSubcommand);
    assert_eq!(parse_err(&["replay"]), ErrorKind::MissingRequiredArgument);
}

#[test]
fn seed_env_overrides_the_flag() {
    let from_env = parse_with_seed_env(["simulate", "--seed", "1"], Some("42")).unwrap();
    let from_flag = parse_with_seed_env(["simulate", "--seed", "42"], None).unwrap();
    assert_eq!(from_env, from_flag);
    let err = parse_with_seed_env(["simulate"], Some("forty-two")).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::ValueValidation);
    // other subcommands ignore it
    assert!(parse_with_seed_env(["epistemic"], Some("forty-two")).is_ok());
}

#[test]
fn analyze_reports_the_all_office_front() {
    let (code, out, _) = run(&["analyze"]);
    assert_eq!(code, 0);
    assert!(out.contains("\nall,all_office,ooooooo/ooooooo,"), "{out}");
    assert!(out.contains("all,front_is_all_office,true\n"));
    assert!(out.contains("all,office_or_855,true\n"));

    // over 12 ordered pairs: 8 canteen meetings at ln .99, the two 9:00/9:10
    // orders at the office for 2 ln .99, and the two 8:50/9:00 misses at 2 ln .01
    let expected =
        (8.0 * 0.99f64.ln() + 2.0 * 2.0 * 0.99f64.ln() + 2.0 * 2.0 * 0.01f64.ln()) / 12.0;
    assert!((expected + 1.545).abs() < 5e-4);
    let line = out.lines().find(|l| l.starts_with("cutoff:8:55,")).unwrap();
    let value: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
    assert!((value - expected).abs() < 1e-6, "{value} vs {expected}");
}

#[test]
fn epistemic_prints_the_label_table() {
    let (code, out, _) = run(&["epistemic"]);
    assert_eq!(code, 0);
    for line in [
        "arrival_time,label",
        "8:20,shared:3",
        "8:30,shared:2",
        "8:40,shared:1",
        "8:50,private",
        "9:00,none",
    ] {
        assert!(out.lines().any(|l| l == line), "missing {line:?} in\n{out}");
    }
    assert!(out.contains("delivered,depth\n0,0\n1,0\n2,1\n"));
    assert!(out.ends_with("10,9\n"));
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let args = [
        "simulate",
        "--sessions",
        "300",
        "--seed",
        "5",
        "--policy2",
        "mixed:8:50:0.5",
    ];
    let (code, first, _) = run(&args);
    assert_eq!(code, 0);
    assert_eq!(run(&args).1, first);
    assert!(first.starts_with("N,R,r_bar,ruin_pct,payoff_pct,s_bar\n600,10,"));
    assert!(first.contains("pair,canteen,office,miscoordination,miscoordination_rate\n"));
    let (_, via_env, _) = run_env(
        &[
            "simulate",
            "--sessions",
            "300",
            "--policy2",
            "mixed:8:50:0.5",
        ],
        Some("5"),
    );
    assert_eq!(via_env, first);
    assert_ne!(
        run(&[
            "simulate",
            "--sessions",
            "300",
            "--seed",
            "6",
            "--policy2",
            "mixed:8:50:0.5"
        ])
        .1,
        first
    );
}

#[test]
fn out_dir_receives_one_file_per_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tables");
    let (code, out, _) = run(&["epistemic", "--out", path.to_str().unwrap()]);
    assert_eq!((code, out.as_str()), (0, ""));
    let labels = fs::read_to_string(path.join("epistemic_labels.csv")).unwrap();
    assert!(labels.lines().any(|l| l == "8:40,shared:1"));
    assert!(path.join("message_chain.csv").exists());

    let (_, pretty, _) = run(&["epistemic", "--out", path.to_str().unwrap(), "--pretty"]);
    assert!(pretty.starts_with("epistemic_labels\narrival_time  label\n"));
}

fn finished_log() -> String {
    let cfg = SessionConfig {
        max_rounds: 3,
        seed: 17,
        ..SessionConfig::default()
    };
    let mut s = Session::new(SessionId(1), cfg).unwrap();
    s.join(1, Occupant::Bot(Policy::all_office()), 0).unwrap();
    s.join(2, Occupant::Bot(Policy::all_office()), 0).unwrap();
    s.advance(u64::MAX / 2);
    to_jsonl(&log_records(&s))
}

#[test]
fn replay_of_an_exported_log_passes() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s1.jsonl");
    let log = finished_log();
    assert_eq!(log.lines().count(), 6);
    fs::write(&file, &log).unwrap();
    let (code, out, err) = run(&["replay", file.to_str().unwrap()]);
    assert_eq!((code, out.as_str()), (0, ""));
    assert_eq!(err, "6 records in 1 sessions, 0 mismatches\n");
}

#[test]
fn replay_reports_each_recomputation_diff() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.jsonl");
    let log = finished_log().replacen("\"choice\":\"office\"", "\"choice\":\"canteen\"", 1);
    fs::write(&file, log).unwrap();
    let (code, out, _) = run(&["replay", file.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(!out.is_empty());
    assert!(out.lines().all(|l| l.starts_with("s1 round ")), "{out}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_canteen");
    let ok = Process::new(bin)
        .arg("epistemic")
        .env_remove("CANTEEN_SEED")
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("8:40,shared:1"));

    let usage = Process::new(bin)
        .args(["simulate", "--policy1", "mixed:8:50"])
        .output()
        .unwrap();
    assert_eq!(usage.status.code(), Some(2));

    let missing = Process::new(bin)
        .args(["replay", "/nonexistent/log.jsonl"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error: "));

    let too_big = Process::new(bin)
        .args(["analyze", "--tmin", "8:00", "--tmax", "11:00"])
        .output()
        .unwrap();
    assert_eq!(too_big.status.code(), Some(1));
}
