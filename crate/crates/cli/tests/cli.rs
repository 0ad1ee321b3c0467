use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn mms() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mms"));
    c.env_remove("MMS_SMT_CMD");
    c
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("launch mms")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let o = run(mms().arg("gen").args(args).arg("--output").arg(&path));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    path
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn plan_then_verify_then_tamper() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "l2.json", &["--family", "lshaped", "--size", "4"]);
    let plan = dir.path().join("plan.json");
    let svg = dir.path().join("plan.svg");
    let o = run(mms()
        .args(["plan", "--backend", "smt", "--smt-cmd", "z3 -in", "--instance"])
        .arg(&inst)
        .arg("--output")
        .arg(&plan)
        .arg("--svg")
        .arg(&svg));
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let doc = read(&plan);
    assert_eq!(doc["outcome"], "planned");
    assert_eq!(doc["witness_length"], 2);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    let o = run(mms().arg("verify").arg("--instance").arg(&inst).arg("--plan").arg(&plan));
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    let mut bad = doc.clone();
    bad["plan"]["schedule"][0][1] = Value::String("5".into());
    let bad_path = dir.path().join("bad.json");
    std::fs::write(&bad_path, bad.to_string()).unwrap();
    let o = run(mms().arg("verify").arg("--instance").arg(&inst).arg("--plan").arg(&bad_path));
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("violation"));
}

#[test]
fn higher_dimensions_need_a_bound() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "l3.json", &["--family", "lshaped", "--dim", "3"]);
    let o = run(mms().arg("plan").arg("--instance").arg(&inst));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--max-bound"));
    let o = run(mms().arg("plan").arg("--instance").arg(&inst).args(["--max-bound", "2"]));
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn solver_command_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "l2.json", &["--family", "lshaped"]);
    let o = run(mms()
        .env("MMS_SMT_CMD", "z3 -in")
        .arg("plan")
        .arg("--instance")
        .arg(&inst)
        .args(["--max-bound", "1"]));
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = run(mms()
        .env("MMS_SMT_CMD", "/nonexistent/solver")
        .arg("plan")
        .arg("--instance")
        .arg(&inst)
        .args(["--max-bound", "1"]));
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("exhausted"));
}

#[test]
fn sampling_backend_plans() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "l2.json", &["--family", "lshaped"]);
    let o = run(mms()
        .arg("plan")
        .arg("--instance")
        .arg(&inst)
        .args(["--backend", "sampling", "--max-bound", "2", "--seed", "3"]));
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn cover_bound_agrees_with_channel_decision() {
    let dir = tempfile::tempdir().unwrap();
    for (i, args) in [
        vec!["--family", "lshaped"],
        vec!["--family", "unreachable-l"],
        vec!["--family", "snake", "--obstacles", "2"],
        vec!["--family", "modified-l"],
    ]
    .iter()
    .enumerate()
    {
        let inst = gen(dir.path(), &format!("i{i}.json"), args);
        let cov = dir.path().join(format!("c{i}.json"));
        let o = run(mms().arg("cover").arg("--decide").arg("--instance").arg(&inst).arg("--output").arg(&cov));
        assert_eq!(code(&o), 0);
        let c = read(&cov);
        let b = c["bound"].as_u64().unwrap().to_string();
        let o = run(mms()
            .args(["plan", "--smt-cmd", "z3 -in", "--max-bound", &b, "--instance"])
            .arg(&inst));
        assert_eq!(code(&o), 0, "{args:?}: {}", stdout(&o));
        let planned = stdout(&o).contains("planned");
        assert_eq!(planned, c["reachable"].as_bool().unwrap(), "{args:?}");
    }
}

#[test]
fn cover_lists_cells() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "l2.json", &["--family", "lshaped"]);
    let o = run(mms().arg("cover").arg("--cells").arg("--instance").arg(&inst));
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let json_start = text.find('{').unwrap();
    let doc: Value = serde_json::from_str(&text[json_start..]).unwrap();
    assert_eq!(doc["polygons"].as_array().unwrap().len() as u64, doc["cells"].as_u64().unwrap());
}

#[test]
fn ccm_compile_and_run() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("a3.ccm");
    std::fs::write(&m, "inc c1 goto 1\ndec c1 goto 2\nifz c2 pos 3 zero 0\nhalt\n").unwrap();
    let o = run(mms().args(["ccm", "compile"]).arg(&m));
    assert_eq!(code(&o), 0);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["modes"].as_object().unwrap().len(), 12);
    assert_eq!(doc["modes"]["I"]["s0"], "-1");

    let out = dir.path().join("run.json");
    let o = run(mms().args(["ccm", "run", "--steps", "13"]).arg(&m).arg("--output").arg(&out));
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("lemma report"));
    let r = read(&out);
    assert_eq!(r["modes"].as_array().unwrap().len(), 13);
    assert_eq!(r["halted"], false);

    let h = dir.path().join("halt.ccm");
    std::fs::write(&h, "inc c1 goto 1\ndec c1 goto 2\nifz c1 pos 0 zero 3\nhalt\n").unwrap();
    let o = run(mms().args(["ccm", "run"]).arg(&h));
    assert!(stdout(&o).contains("target reached: true"), "{}", stdout(&o));

    let bad = dir.path().join("bad.ccm");
    std::fs::write(&bad, "halt\n").unwrap();
    assert_eq!(code(&run(mms().args(["ccm", "compile"]).arg(&bad))), 2);
}

#[test]
fn render_and_bench() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "l2.json", &["--family", "lshaped"]);
    let o = run(mms().arg("render").arg("--instance").arg(&inst));
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("fill=\"gray\""));

    let csv = dir.path().join("b.csv");
    let o = run(mms()
        .args(["bench", "--family", "lshaped", "--smt-cmd", "z3 -in", "--budget", "20000", "--output"])
        .arg(&csv));
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("family,dim,size,method,outcome,witness_length,nodes,time_s"));
    let planner = lines.next().unwrap();
    assert!(planner.starts_with("lshaped,2,100,planner,planned,2,"), "{planner}");
    assert!(lines.next().unwrap().starts_with("lshaped,2,100,rrt,"));
}

#[test]
fn input_errors_exit_two() {
    let o = run(mms().arg("plan").arg("--instance").arg("/nonexistent.json"));
    assert_eq!(code(&o), 2);
    let o = run(mms().args(["gen", "--family", "spiral"]));
    assert_eq!(code(&o), 2);
    let o = run(mms().arg("frobnicate"));
    assert_eq!(code(&o), 2);
}
