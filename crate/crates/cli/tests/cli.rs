use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const RAM: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/ram.v");
const PARAMS: [&str; 8] = ["--param", "ADDR_W=4", "--param", "DATA_W=8", "--param", "ADDR=0x4", "--param", "DATA=0xAB"];

fn rtlic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtlic")).args(args).env_remove("RTLIC_SOLVER").output().unwrap()
}

fn with_ram<'a>(cmd: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd, "--design", RAM];
    v.extend(PARAMS);
    v.extend(extra);
    v
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// The single run directory under `out`.
fn run_dir(out: &Path) -> PathBuf {
    let mut dirs: Vec<_> = fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1);
    dirs.pop().unwrap()
}

fn gen(out: &Path, extra: &[&str]) -> (Output, PathBuf) {
    let o = out.to_str().unwrap();
    let mut args = with_ram("gen", &["--target", "line:37", "--out", o]);
    args.extend(extra);
    let res = rtlic(&args);
    (res, run_dir(out))
}

#[test]
fn gen_solves_the_golden_target() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, dir) = gen(tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("target B15 activated and replay passed"));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["sequence"], "S = <B3, B8>");
    let attempt = &report["attempts"][0];
    let markers: Vec<&str> =
        attempt["queue"].as_array().unwrap().iter().map(|e| e["marker"].as_str().unwrap()).collect();
    assert_eq!(markers, ["Target1", "Target2"]);
    for t in attempt["result"]["targets"].as_array().unwrap() {
        assert_eq!(t["solved"], true);
    }
    assert_eq!(attempt["result"]["final_target"]["solved"], true);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["run_id"], dir.file_name().unwrap().to_str().unwrap());
    for f in manifest["files"].as_array().unwrap() {
        assert!(dir.join(f["name"].as_str().unwrap()).is_file());
    }
}

#[test]
fn baseline_does_not_reach_the_target() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, dir) = gen(tmp.path(), &["--mode", "baseline"]);
    assert_eq!(o.status.code(), Some(1));
    let report = fs::read_to_string(dir.join("report.json")).unwrap();
    assert!(report.contains("target B15 not activated within limit 10"));
}

#[test]
fn reports_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (_, da) = gen(a.path(), &[]);
    let o = a.path().to_str().unwrap();
    // Same configuration, including the output directory, in a second run.
    let again = rtlic(&with_ram("gen", &["--target", "line:37", "--out", o]));
    assert_eq!(again.status.code(), Some(0));
    let (_, db) = gen(b.path(), &[]);
    assert_eq!(fs::read(da.join("tests.json")).unwrap(), fs::read(db.join("tests.json")).unwrap());
    let first = fs::read(da.join("report.json")).unwrap();
    assert_eq!(first, fs::read(run_dir(a.path()).join("report.json")).unwrap());
}

#[test]
fn unparseable_design_fails_in_the_frontend() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.v");
    fs::write(&bad, "module m(input clk;\nendmodule\n").unwrap();
    let o =
        rtlic(&["gen", "--design", bad.to_str().unwrap(), "--target", "line:1", "--out", tmp.path().to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("[frontend]"), "{}", stderr(&o));
    assert!(stderr(&o).contains("bad.v:1:"));
}

#[test]
fn unknown_target_line_is_a_target_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rtlic(&with_ram("gen", &["--target", "line:2", "--out", tmp.path().to_str().unwrap()]));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[target]"), "{}", stderr(&o));
}

#[test]
fn replay_follows_the_exit_code_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, dir) = gen(tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let tests = dir.join("tests.json");
    let ok = rtlic(&with_ram("replay", &["--target", "line:37", "--tests", tests.to_str().unwrap()]));
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));

    let zero = tmp.path().join("zero.json");
    fs::write(&zero, r#"[{"cycle": 1, "inputs": {}}, {"cycle": 2, "inputs": {}}]"#).unwrap();
    let no = rtlic(&with_ram("replay", &["--target", "line:37", "--tests", zero.to_str().unwrap(), "--unroll", "10"]));
    assert_eq!(no.status.code(), Some(1));

    let text = fs::read_to_string(&tests).unwrap();
    let cut = tmp.path().join("cut.json");
    fs::write(&cut, &text[..text.len() / 2]).unwrap();
    let bad = rtlic(&with_ram("replay", &["--target", "line:37", "--tests", cut.to_str().unwrap()]));
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("[replay]"));
}

#[test]
fn dump_sequence_and_dot() {
    let seq = rtlic(&with_ram("dump", &["--what", "seq", "--target", "line:37"]));
    assert_eq!(seq.status.code(), Some(0));
    assert!(stdout(&seq).starts_with("S = <B3, B8>\n"));

    let dot = rtlic(&with_ram("dump", &["--what", "cfg-dot"]));
    let text = stdout(&dot);
    assert_eq!(text.matches("subgraph cluster_").count(), 3);
    assert!(text.contains("style=dashed"));

    let missing = rtlic(&with_ram("dump", &["--what", "seq"]));
    assert_ne!(missing.status.code(), Some(0));
    assert!(stderr(&missing).contains("--target"));

    let bad = rtlic(&with_ram("dump", &["--what", "everything"]));
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn seq_cfg_and_instrument_commands() {
    let seq = rtlic(&with_ram("seq", &["--target", "line:37"]));
    let text = stdout(&seq);
    assert!(text.starts_with("S = <B3, B8>\n"));
    let json: Value = serde_json::from_str(&text["S = <B3, B8>\n".len()..]).unwrap();
    assert_eq!(json["sequence"], serde_json::json!(["B3", "B8"]));

    let dot = rtlic(&with_ram("cfg", &["--dot"]));
    assert!(stdout(&dot).starts_with("digraph"));

    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("inst.v");
    let o = rtlic(&with_ram("instrument", &["--target", "line:37", "--emit", file.to_str().unwrap()]));
    assert_eq!(o.status.code(), Some(0));
    let inst = fs::read_to_string(&file).unwrap();
    assert!(inst.contains("$display(\"Target1\")"));
    assert!(inst.contains("$display(\"Target2\")"));
    // The emitted design is accepted by the frontend again.
    let again = rtlic(&["cfg", "--design", file.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0), "{}", stderr(&again));
}

#[test]
fn smt_and_sim_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("p.smt2");
    let o = rtlic(&with_ram("smt", &["--target", "line:37", "--pivot", "1", "--out", file.to_str().unwrap()]));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let script = fs::read_to_string(&file).unwrap();
    assert!(script.contains("(check-sat)"));
    assert!(script.contains("(set-logic QF_BV)"));
    let none = rtlic(&with_ram("smt", &["--target", "line:37", "--pivot", "99"]));
    assert_ne!(none.status.code(), Some(0));

    let tests = tmp.path().join("t.json");
    fs::write(
        &tests,
        r#"[{"cycle": 1, "inputs": {"w_en": "0x1", "addr": "0x4", "w_data": "0xab"}},
            {"cycle": 2, "inputs": {"r_en": "0x1", "addr": "0x4"}},
            {"cycle": 3, "inputs": {}}]"#,
    )
    .unwrap();
    let sim = rtlic(&with_ram("sim", &["--tests", tests.to_str().unwrap()]));
    assert_eq!(sim.status.code(), Some(0), "{}", stderr(&sim));
    let log = stdout(&sim);
    assert!(log.starts_with("C 1\n"));
    assert!(log.contains("B B15"));
}

#[test]
fn bad_solver_flag_is_a_usage_error() {
    let o = rtlic(&with_ram("gen", &["--target", "line:37", "--solver", "yices"]));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown solver"));
}
