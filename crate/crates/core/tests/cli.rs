use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sps_core::engine::TraceRecord;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn sps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sps")).args(args).env_remove("SPS_CONFIG").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_exit_codes() {
    let ok = sps(&["check", path(&fixture("door.sps"))]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).ends_with(": ok\n"));
    for bad in ["preference_cycle.sps", "bad_domain.sps", "unbound.sps"] {
        let o = sps(&["check", path(&fixture("invalid").join(bad))]);
        assert_eq!(o.status.code(), Some(1), "{bad}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));
    }
    assert_eq!(sps(&["check", "/no/such/file.sps"]).status.code(), Some(2));
    assert_eq!(sps(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn diagnostics_carry_positions() {
    let o = sps(&["check", path(&fixture("invalid").join("unbound.sps"))]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("unbound.sps:5:16:"), "{err}");
}

#[test]
fn door_closes() {
    let o = sps(&["run", path(&fixture("door.sps"))]);
    let out = stdout(&o);
    assert!(out.contains("Status(door_1) = c\n"), "{out}");
    assert!(out.contains("Status(door_2) = c\n"));
    assert!(out.contains("derivation: close_open[x=door_1]\n"));
    assert!(out.contains("halt: quiescent\n"));
}

#[test]
fn steps_flag_limits_the_run() {
    let out = stdout(&sps(&["run", path(&fixture("clock.sps")), "--steps", "3"]));
    assert!(out.starts_with("t = 3\n"), "{out}");
    assert!(out.contains("derivation: tick; tick; tick\n"));
    assert!(out.contains("halt: step-limit\n"));
}

#[test]
fn strategies_apply_only_when_transformed() {
    let file = fixture("door_strategies.sps");
    let lowered = stdout(&sps(&["run", path(&file)]));
    assert!(lowered.contains("derivation: alarm; both; open_1; both\n"), "{lowered}");
    assert!(lowered.contains("Count = 4\n"));
    let basic = stdout(&sps(&["run", path(&file), "--strategy", "basic"]));
    assert!(basic.contains("derivation: close_1;"), "{basic}");
}

#[test]
fn seeded_random_runs_repeat() {
    let file = fixture("door_strategies.sps");
    let args = ["run", path(&file), "--policy", "random", "--seed", "7", "--strategy", "basic", "--steps", "12"];
    let a = sps(&args);
    let b = sps(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn trace_file_replays_to_the_final_state() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("door.jsonl");
    let o = sps(&["run", path(&fixture("door_strategies.sps")), "--trace", path(&trace)]);
    assert_eq!(o.status.code(), Some(0));
    let records: Vec<TraceRecord> = std::fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 4);
    assert_eq!(records[0].selected.as_deref(), Some("alarm"));

    let p = sps_core::dsl::load(&std::fs::read_to_string(fixture("door_strategies.sps")).unwrap()).unwrap();
    let initial = p.build(sps_core::program::StrategyMode::Transformed).unwrap().initial_state().unwrap();
    let replayed = sps_core::engine::replay(&initial, &records);
    let printed: String = replayed.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    assert!(stdout(&o).starts_with(&printed), "{printed}");
}

#[test]
fn compile_every_kind() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, input) in [
        ("ts", "ts_doors.toml"),
        ("tm", "tm_increment.toml"),
        ("axioms", "axioms_mp.toml"),
        ("ca", "ca_rule110.toml"),
        ("pcfg", "pcfg.toml"),
    ] {
        let out = dir.path().join(format!("{kind}.sps"));
        let o = sps(&["compile", kind, path(&fixture(input)), "-o", path(&out)]);
        assert_eq!(o.status.code(), Some(0), "{kind}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(sps(&["check", path(&out)]).status.code(), Some(0), "{kind}");
    }
    let tm = dir.path().join("tm.sps");
    let out = stdout(&sps(&["run", path(&tm)]));
    assert!(out.contains("Q = s_done") || out.contains("Q = done"), "{out}");
}

#[test]
fn compile_rejects_bad_descriptions() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "nonterminals = [\"S\"]\nterminals = [\"a\"]\nstart = \"S\"\nmax_len = 3\n\
        [[productions]]\nlhs = \"S\"\nrhs = [\"a\"]\np = 0.5\n")
        .unwrap();
    let o = sps(&["compile", "pcfg", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sum to"));
}

#[test]
fn derivation_probability() {
    let file = fixture("pcfg.sps");
    let o = sps(&["prob", path(&file), "--derivation-of", "r1,r1,r2"]);
    let out = stdout(&o);
    assert!(out.contains("Pr(cd) = 0.096\n"), "{out}");
    let empty = stdout(&sps(&["prob", path(&file), "--derivation-of", ""]));
    assert!(empty.contains("Pr(cd) = 1\n"), "{empty}");
    let stuck = sps(&["prob", path(&file), "--derivation-of", "r2,r1"]);
    assert_eq!(stuck.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&stuck.stderr).contains("r1"));
    assert_eq!(sps(&["prob", path(&fixture("door.sps"))]).status.code(), Some(1));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sps.toml");
    std::fs::write(&cfg, "[defaults]\nsteps = 5\n").unwrap();
    let clock = fixture("clock.sps");
    let o = Command::new(env!("CARGO_BIN_EXE_sps")).args(["run", path(&clock)]).env("SPS_CONFIG", &cfg).output().unwrap();
    assert!(stdout(&o).starts_with("t = 5\n"));
    let flag = sps(&["--config", path(&cfg), "run", path(&clock), "--steps", "2"]);
    assert!(stdout(&flag).starts_with("t = 2\n"));
    std::fs::write(&cfg, "[defaults]\nsteps = \"many\"\n").unwrap();
    assert_eq!(sps(&["--config", path(&cfg), "run", path(&clock)]).status.code(), Some(2));
}
