use std::path::Path;
use std::process::{Command, Output};

fn photolith(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_photolith")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = photolith(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn generate_solve_evaluate_gantt_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst = path(dir.path(), "inst.json");
    ok(&["generate", "--n", "6", "--ready", "mixed", "--equipment", "2", "--seed", "4", "-o", &inst]);
    for alg in ["sp", "ga", "exact"] {
        let sched = path(dir.path(), &format!("{alg}.csv"));
        let out = photolith(&["solve", &inst, "--alg", alg, "--objective", "twt", "--seed", "7", "-o", &sched]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let report = String::from_utf8_lossy(&out.stderr);
        let twt: i64 = report.split("twt=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
        let eval = ok(&["evaluate", &sched, &inst]);
        assert!(eval.starts_with("feasible"));
        assert!(eval.contains(&format!("twt={twt}\n")));
        let svg = path(dir.path(), &format!("{alg}.svg"));
        ok(&["gantt", &sched, &inst, "-o", &svg]);
        assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    }
}

#[test]
fn seeded_commands_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let inst = path(dir.path(), "inst.json");
    let a = ok(&["generate", "--n", "8", "--seed", "11"]);
    let b = ok(&["generate", "--n", "8", "--seed", "11"]);
    assert_eq!(a, b);
    std::fs::write(&inst, a).unwrap();
    let s1 = ok(&["solve", &inst, "--alg", "ga", "--seed", "3", "--iterations", "40", "--stall-window", "10"]);
    let s2 = ok(&["solve", &inst, "--alg", "ga", "--seed", "3", "--iterations", "40", "--stall-window", "10"]);
    assert_eq!(s1, s2);
}

#[test]
fn infeasible_schedule_exits_one_with_violations() {
    let dir = tempfile::tempdir().unwrap();
    let inst = path(dir.path(), "inst.json");
    let sched = path(dir.path(), "s.csv");
    ok(&["generate", "--n", "3", "--seed", "1", "-o", &inst]);
    ok(&["solve", &inst, "--alg", "sp", "-o", &sched]);
    // Move every visit of the first job to time zero.
    let text = std::fs::read_to_string(&sched).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let first_job = lines[1].split(',').next().unwrap().to_string();
    for line in lines.iter_mut().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[0] == first_job {
            let len: i64 = f[4].parse::<i64>().unwrap() - f[3].parse::<i64>().unwrap();
            *line = format!("{},{},{},0,{len}", f[0], f[1], f[2]);
        }
    }
    std::fs::write(&sched, lines.join("\n") + "\n").unwrap();
    for verb in ["evaluate", "gantt"] {
        let out = photolith(&[verb, &sched, &inst]);
        assert_eq!(out.status.code(), Some(1));
        assert!(String::from_utf8_lossy(&out.stderr).contains("StageChain"));
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(photolith(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(photolith(&["solve", "x.json", "--alg", "magic"]).status.code(), Some(2));
    assert_eq!(photolith(&["generate", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(photolith(&["experiment", "--out", "x"]).status.code(), Some(2));
}

#[test]
fn bad_input_files_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = path(dir.path(), "nope.json");
    assert_eq!(photolith(&["solve", &missing]).status.code(), Some(1));
    let junk = path(dir.path(), "junk.json");
    std::fs::write(&junk, "{").unwrap();
    assert_eq!(photolith(&["export-lp", &junk]).status.code(), Some(1));
    assert_eq!(photolith(&["generate", "--n", "0", "--seed", "1"]).status.code(), Some(1));
}

#[test]
fn export_counts_match_model_size_table() {
    let dir = tempfile::tempdir().unwrap();
    for (n, counts) in [(5, [1185, 36, 215, 251]), (15, [11205, 106, 795, 901])] {
        let inst = path(dir.path(), &format!("n{n}.json"));
        ok(&["generate", "--n", &n.to_string(), "--equipment", "1", "--seed", "2", "-o", &inst]);
        let out = ok(&["export-lp", &inst, "--objective", "twt", "--counts"]);
        let got: Vec<i64> = out.lines().map(|l| l.split('=').nth(1).unwrap().parse().unwrap()).collect();
        assert_eq!(got, counts);
    }
    let inst = path(dir.path(), "n5.json");
    let lp = ok(&["export-lp", &inst, "--objective", "wct"]);
    assert!(lp.contains("Minimize\n obj:") && lp.contains("\nSubject To\n") && lp.trim_end().ends_with("End"));
}

#[test]
fn experiment_writes_records_timings_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let grid = path(dir.path(), "grid.json");
    std::fs::write(
        &grid,
        r#"{"master_seed": 0, "job_counts": [3], "tardiness": [0.3], "range": [2.5], "replications": 2,
            "sp_iterations": 40, "ga": {"pop_size": 10, "max_generations": 15, "stall_window": 5, "stall_tolerance": 1e-6, "seed": 0}}"#,
    )
    .unwrap();
    let out = path(dir.path(), "out");
    let tables = ok(&["experiment", "--grid", &grid, "--out", &out, "--seed", "5", "--objective", "cmax,twt"]);
    assert!(tables.contains("Performance ratio") && tables.contains("(3,1,*,*,*)"));
    let records = std::fs::read_to_string(Path::new(&out).join("records.csv")).unwrap();
    // Header plus 2 ready levels x 2 equipment levels x 2 reps x 2 objectives.
    assert_eq!(records.lines().count(), 1 + 16);
    assert!(!records.contains("wct"));
    assert!(Path::new(&out).join("timings.csv").exists());
}
